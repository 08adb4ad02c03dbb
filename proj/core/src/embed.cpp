#include "fp/embed.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "fp/errors.hpp"

namespace fp {

namespace {

std::string fmt12(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

SampleEmbedding embed_samples(const std::vector<Histogram>& hists,
                              const std::vector<std::string>& sample_ids,
                              const std::vector<std::string>& labels, const Codebook& cb,
                              std::array<Eigen::Index, 2> dims) {
  if (hists.size() != sample_ids.size() || hists.size() != labels.size())
    throw UsageError("embed_samples: histograms, ids and labels differ in length");
  const Eigen::Index d = cb.centroids.cols();
  for (const Eigen::Index dim : dims)
    if (dim < 0 || dim >= d)
      throw UsageError("embed_samples: dim " + std::to_string(dim) +
                       " out of range for codebook dimension " + std::to_string(d));

  SampleEmbedding emb;
  emb.dims = dims;
  emb.sample_ids = sample_ids;
  emb.labels = labels;
  emb.word_coords.resize(cb.k, 2);
  emb.word_coords.col(0) = cb.centroids.col(dims[0]);
  emb.word_coords.col(1) = cb.centroids.col(dims[1]);

  const Eigen::Index n = static_cast<Eigen::Index>(hists.size());
  emb.coords.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Histogram& h = hists[static_cast<std::size_t>(i)];
    if (h.values.size() != cb.k) throw DataError("embed_samples: histogram K mismatch");
    emb.coords(i, 0) = h.values.dot(emb.word_coords.col(0));
    emb.coords(i, 1) = h.values.dot(emb.word_coords.col(1));
  }
  return emb;
}

std::string export_embedding_csv(const SampleEmbedding& emb) {
  std::string out = "kind,id,label,x,y\n";
  for (Eigen::Index w = 0; w < emb.word_coords.rows(); ++w)
    out += "word,w" + std::to_string(w) + ",," + fmt12(emb.word_coords(w, 0)) + "," +
           fmt12(emb.word_coords(w, 1)) + "\n";
  for (Eigen::Index i = 0; i < emb.coords.rows(); ++i)
    out += "sample," + emb.sample_ids[static_cast<std::size_t>(i)] + "," +
           emb.labels[static_cast<std::size_t>(i)] + "," + fmt12(emb.coords(i, 0)) + "," +
           fmt12(emb.coords(i, 1)) + "\n";
  return out;
}

std::string export_embedding_svg(const SampleEmbedding& emb) {
  const double width = 800.0, height = 600.0, pad = 50.0;

  double xmin = emb.word_coords.col(0).minCoeff();
  double xmax = emb.word_coords.col(0).maxCoeff();
  double ymin = emb.word_coords.col(1).minCoeff();
  double ymax = emb.word_coords.col(1).maxCoeff();
  if (emb.coords.rows() > 0) {
    xmin = std::min(xmin, emb.coords.col(0).minCoeff());
    xmax = std::max(xmax, emb.coords.col(0).maxCoeff());
    ymin = std::min(ymin, emb.coords.col(1).minCoeff());
    ymax = std::max(ymax, emb.coords.col(1).maxCoeff());
  }
  const double xspan = xmax > xmin ? xmax - xmin : 1.0;
  const double yspan = ymax > ymin ? ymax - ymin : 1.0;
  auto px = [&](double x) { return pad + (x - xmin) / xspan * (width - 2 * pad); };
  auto py = [&](double y) { return height - pad - (y - ymin) / yspan * (height - 2 * pad); };

  // Stable label -> style mapping by sorted label order.
  std::map<std::string, std::size_t> style_of;
  for (const auto& label : emb.labels) style_of.emplace(label, 0);
  std::size_t next = 0;
  for (auto& [label, idx] : style_of) idx = next++;
  static const char* kColors[] = {"#1f77b4", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"};
  const std::size_t n_styles = sizeof(kColors) / sizeof(kColors[0]);

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" "
         "viewBox=\"0 0 800 600\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n";

  for (Eigen::Index w = 0; w < emb.word_coords.rows(); ++w)
    svg += "<circle class=\"word\" cx=\"" + fmt3(px(emb.word_coords(w, 0))) + "\" cy=\"" +
           fmt3(py(emb.word_coords(w, 1))) + "\" r=\"2.5\" fill=\"#ff7f0e\" fill-opacity=\"0.7\"/>\n";

  for (Eigen::Index i = 0; i < emb.coords.rows(); ++i) {
    const std::string& label = emb.labels[static_cast<std::size_t>(i)];
    const std::size_t style = style_of[label] % n_styles;
    const double cx = px(emb.coords(i, 0));
    const double cy = py(emb.coords(i, 1));
    const std::string title = "<title>" + xml_escape(emb.sample_ids[static_cast<std::size_t>(i)]) +
                              "</title>";
    if (style_of[label] % 2 == 0) {
      svg += "<circle class=\"sample\" cx=\"" + fmt3(cx) + "\" cy=\"" + fmt3(cy) +
             "\" r=\"5\" fill=\"" + kColors[style] + "\">" + title + "</circle>\n";
    } else {
      svg += "<polygon class=\"sample\" points=\"" + fmt3(cx) + "," + fmt3(cy - 6.0) + " " +
             fmt3(cx - 5.2) + "," + fmt3(cy + 3.0) + " " + fmt3(cx + 5.2) + "," + fmt3(cy + 3.0) +
             "\" fill=\"" + kColors[style] + "\">" + title + "</polygon>\n";
    }
  }

  double legend_y = 20.0;
  svg += "<text x=\"660\" y=\"" + fmt3(legend_y) + "\" font-family=\"sans-serif\" "
         "font-size=\"12\" fill=\"#ff7f0e\">● code words</text>\n";
  for (const auto& [label, idx] : style_of) {
    legend_y += 18.0;
    svg += "<text x=\"660\" y=\"" + fmt3(legend_y) + "\" font-family=\"sans-serif\" "
           "font-size=\"12\" fill=\"" + std::string(kColors[idx % n_styles]) + "\">" +
           (idx % 2 == 0 ? "● " : "▲ ") + xml_escape(label.empty() ? "(unlabeled)" : label) +
           "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace fp
