// fp: geometry-aware metric pipeline for chemical fingerprints.
// Subcommands: synth, validate, map, codebook, hist, dist, mmd, converge,
// classify, test, embed, run. Exit codes: 0 success, 1 usage, 2 data error,
// 3 numerical failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fp/codebook.hpp"
#include "fp/embed.hpp"
#include "fp/errors.hpp"
#include "fp/geometry.hpp"
#include "fp/inference.hpp"
#include "fp/ingest.hpp"
#include "fp/io.hpp"
#include "fp/metrics.hpp"
#include "fp/pipeline.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::vector<double> parse_double_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw fp::UsageError(std::string(what) + ": malformed number '" + item + "'");
    }
  }
  if (out.empty()) throw fp::UsageError(std::string(what) + ": empty list");
  return out;
}

std::array<Eigen::Index, 2> parse_dims(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw fp::UsageError("--dims expects 'i,j'");
  try {
    return {static_cast<Eigen::Index>(std::stol(text.substr(0, comma))),
            static_cast<Eigen::Index>(std::stol(text.substr(comma + 1)))};
  } catch (const std::exception&) {
    throw fp::UsageError("--dims expects 'i,j'");
  }
}

// Orders labels.csv contents to match the distance matrix sample order.
std::vector<std::string> align_labels(const fp::DistanceMatrix& dist, const fs::path& labels_path) {
  std::map<std::string, std::string> label_of;
  for (const auto& [id, label] : fp::read_labels(labels_path)) label_of[id] = label;
  std::vector<std::string> labels;
  for (const auto& id : dist.sample_ids) {
    const auto it = label_of.find(id);
    if (it == label_of.end())
      throw fp::DataError(labels_path.string() + ": no label for sample '" + id + "'");
    labels.push_back(it->second);
  }
  return labels;
}

struct BinaryLabels {
  std::vector<int> y;
  std::string negative, positive;
};

BinaryLabels binarize(const std::vector<std::string>& labels) {
  std::map<std::string, int> distinct;
  for (const auto& label : labels) distinct.emplace(label, 0);
  if (distinct.size() != 2)
    throw fp::DataError("expected exactly 2 distinct labels, found " +
                        std::to_string(distinct.size()));
  BinaryLabels out;
  out.negative = distinct.begin()->first;
  out.positive = std::next(distinct.begin())->first;
  for (const auto& label : labels) out.y.push_back(label == out.positive ? 1 : -1);
  return out;
}

Eigen::MatrixXd read_ground_matrix(const fs::path& path, Eigen::Index k) {
  std::ifstream in(path);
  if (!in) throw fp::DataError("cannot open " + path.string());
  Eigen::MatrixXd ground(k, k);
  std::string line;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!std::getline(in, line))
      throw fp::DataError(path.string() + ": expected " + std::to_string(k) + " rows");
    std::stringstream ss(line);
    std::string item;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (!std::getline(ss, item, ','))
        throw fp::DataError(path.string() + ": row " + std::to_string(i + 1) + " has fewer than " +
                            std::to_string(k) + " columns");
      try {
        ground(i, j) = std::stod(item);
      } catch (const std::exception&) {
        throw fp::DataError(path.string() + ": malformed number '" + item + "'");
      }
    }
  }
  return ground;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geometry-aware metrics for chemical fingerprints"};
  app.require_subcommand(1);

  // --- synth ---------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  std::string synth_config;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  synth->add_option("--config", synth_config, "synth config file")->required();
  synth->add_option("--seed", synth_seed, "RNG seed")->required();
  synth->add_option("--out", synth_out, "output dataset directory")->required();
  synth->callback([&] {
    std::ifstream in(synth_config);
    if (!in) throw fp::DataError("cannot open " + synth_config);
    const fp::SynthConfig cfg = fp::parse_synth_config(in);
    const fp::Dataset ds = fp::generate_synthetic_dataset(cfg, synth_seed);
    fp::save_dataset(ds, synth_out);
    std::cout << "wrote " << ds.compounds.size() << " compounds, " << ds.fingerprints.size()
              << " fingerprints to " << synth_out << "\n";
  });

  // --- validate ------------------------------------------------------------
  auto* validate = app.add_subcommand("validate", "validate a dataset");
  std::string validate_path;
  bool validate_renorm = false;
  validate->add_option("path", validate_path, "dataset directory or .json file")->required();
  validate->add_flag("--renormalize", validate_renorm, "rescale weight sums to 1");
  validate->callback([&] {
    fp::ParseOptions opts;
    opts.renormalize = validate_renorm;
    opts.strict = false;
    const fp::Dataset ds = fp::load_dataset(validate_path, opts);
    const fp::ValidationReport report = fp::validate_dataset(ds);
    for (const auto& issue : report.warnings)
      std::cout << "warning: " << issue.location << ": " << issue.message << "\n";
    for (const auto& issue : report.errors)
      std::cout << "error: " << issue.location << ": " << issue.message << "\n";
    if (!report.ok())
      throw fp::DataError(std::to_string(report.errors.size()) + " validation error(s)");
    std::cout << "ok: " << ds.compounds.size() << " compounds, " << ds.fingerprints.size()
              << " fingerprints, p = " << ds.p << "\n";
  });

  // --- map -----------------------------------------------------------------
  auto* map_cmd = app.add_subcommand("map", "build the diffusion map");
  std::string map_data, map_out;
  fp::MapSettings map_settings;
  bool map_renorm = false, map_noscale = false;
  map_cmd->add_option("path", map_data, "dataset directory or .json file")->required();
  map_cmd->add_option("--alpha", map_settings.alpha, "density renormalization exponent in [0,1]");
  map_cmd->add_option("--eps", map_settings.eps, "kernel bandwidth (number or 'auto')");
  map_cmd->add_option("--dim", map_settings.dim, "embedding dimension (integer or 'auto')");
  map_cmd->add_option("--time", map_settings.time, "diffusion time t");
  map_cmd->add_flag("--no-eigenvalue-scaling", map_noscale, "use raw eigenvectors");
  map_cmd->add_flag("--renormalize", map_renorm, "rescale weight sums to 1");
  map_cmd->add_option("--out", map_out, "output map.bin")->required();
  map_cmd->callback([&] {
    map_settings.eigenvalue_scaling = !map_noscale;
    const fp::Dataset ds = fp::load_dataset(map_data, fp::ParseOptions{map_renorm});
    const fp::DiffusionMap map = fp::build_map(ds, map_settings);
    fp::write_map(map, map_out);
    std::cout << "map: m = " << map.coords.rows() << ", d = " << map.d << ", t = " << map.t
              << ", lambda_1 = " << map.eigenvalues[1] << "\n";
  });

  // --- codebook --------------------------------------------------------------
  auto* codebook_cmd = app.add_subcommand("codebook", "fit the diffusion K-means codebook");
  std::string cb_map, cb_out, cb_members, cb_data;
  Eigen::Index cb_k = 100;
  std::uint64_t cb_seed = 0;
  int cb_max_iter = 100;
  codebook_cmd->add_option("map", cb_map, "map.bin from `fp map`")->required();
  codebook_cmd->add_option("--k", cb_k, "number of code words");
  codebook_cmd->add_option("--seed", cb_seed, "RNG seed");
  codebook_cmd->add_option("--max-iter", cb_max_iter, "Lloyd iteration cap");
  codebook_cmd->add_option("--out", cb_out, "output cb.bin")->required();
  codebook_cmd->add_option("--dump-members", cb_members, "write bin,compound membership CSV");
  codebook_cmd->add_option("--data", cb_data, "dataset path for compound ids in --dump-members");
  codebook_cmd->callback([&] {
    const fp::DiffusionMap map = fp::read_map(cb_map);
    const fp::Codebook cb = fp::diffusion_kmeans(map, cb_k, cb_seed, cb_max_iter);
    fp::write_codebook(cb, cb_out);
    if (!cb_members.empty()) {
      std::vector<std::string> ids;
      if (!cb_data.empty()) {
        const fp::Dataset ds = fp::load_dataset(cb_data);
        for (const auto& c : ds.compounds) ids.push_back(c.id);
        if (ids.size() != cb.assignment.size())
          throw fp::DataError("--data compound count does not match the map");
      }
      std::string out = "bin,compound\n";
      for (std::size_t i = 0; i < cb.assignment.size(); ++i)
        out += std::to_string(cb.assignment[i]) + "," +
               (ids.empty() ? std::to_string(i) : ids[i]) + "\n";
      fp::write_text_file(out, cb_members);
    }
    std::cout << "codebook: K = " << cb.k << ", inertia = " << cb.inertia << "\n";
  });

  // --- hist ------------------------------------------------------------------
  auto* hist_cmd = app.add_subcommand("hist", "express fingerprints as code-word histograms");
  std::string hist_data, hist_map, hist_cb, hist_out;
  bool hist_renorm = false;
  hist_cmd->add_option("path", hist_data, "dataset directory or .json file")->required();
  hist_cmd->add_option("map", hist_map, "map.bin")->required();
  hist_cmd->add_option("codebook", hist_cb, "cb.bin")->required();
  hist_cmd->add_flag("--renormalize", hist_renorm, "rescale weight sums to 1");
  hist_cmd->add_option("--out", hist_out, "output hist.csv")->required();
  hist_cmd->callback([&] {
    const fp::Dataset ds = fp::load_dataset(hist_data, fp::ParseOptions{hist_renorm});
    const fp::DiffusionMap map = fp::read_map(hist_map);
    const fp::Codebook cb = fp::read_codebook(hist_cb);
    fp::HistogramTable table;
    for (const auto& fprint : ds.fingerprints) {
      table.sample_ids.push_back(fprint.sample_id);
      table.labels.push_back(fprint.label);
      table.hists.push_back(fp::histogram(fprint, map, cb));
    }
    fp::write_histograms(table, hist_out);
    std::cout << "wrote " << table.hists.size() << " histograms to " << hist_out << "\n";
  });

  // --- dist ------------------------------------------------------------------
  auto* dist_cmd = app.add_subcommand("dist", "pairwise sample distances");
  std::string dist_hist, dist_cb, dist_metric = "gdd", dist_ground, dist_out;
  dist_cmd->add_option("hist", dist_hist, "hist.csv")->required();
  dist_cmd->add_option("codebook", dist_cb, "cb.bin")->required();
  dist_cmd->add_option("--metric", dist_metric, "gdd|emd")
      ->check(CLI::IsMember({"gdd", "emd"}));
  dist_cmd->add_option("--ground", dist_ground, "user ground matrix CSV (emd only)");
  dist_cmd->add_option("--out", dist_out, "output dist.csv")->required();
  dist_cmd->callback([&] {
    const fp::HistogramTable table = fp::read_histograms(dist_hist);
    const fp::Codebook cb = fp::read_codebook(dist_cb);
    fp::DistanceMatrix dm;
    if (dist_metric == "gdd") {
      dm = fp::gdd_pairwise(table.hists, table.sample_ids, cb);
    } else {
      const Eigen::MatrixXd ground = dist_ground.empty()
                                         ? fp::centroid_ground(cb)
                                         : read_ground_matrix(dist_ground, cb.k);
      const Eigen::Index n = static_cast<Eigen::Index>(table.hists.size());
      dm.sample_ids = table.sample_ids;
      dm.values.setZero(n, n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
          dm.values(i, j) = fp::emd(table.hists[i], table.hists[j], ground);
          dm.values(j, i) = dm.values(i, j);
        }
    }
    fp::write_distance_matrix(dm, dist_out);
    std::cout << "wrote " << dm.values.rows() << "x" << dm.values.cols() << " " << dist_metric
              << " matrix to " << dist_out << "\n";
  });

  // --- mmd -------------------------------------------------------------------
  auto* mmd_cmd = app.add_subcommand("mmd", "pairwise MMD reference distances");
  std::string mmd_data, mmd_map, mmd_out;
  bool mmd_renorm = false;
  mmd_cmd->add_option("path", mmd_data, "dataset directory or .json file")->required();
  mmd_cmd->add_option("map", mmd_map, "map.bin")->required();
  mmd_cmd->add_flag("--renormalize", mmd_renorm, "rescale weight sums to 1");
  mmd_cmd->add_option("--out", mmd_out, "output mmd.csv")->required();
  mmd_cmd->callback([&] {
    const fp::Dataset ds = fp::load_dataset(mmd_data, fp::ParseOptions{mmd_renorm});
    const fp::DiffusionMap map = fp::read_map(mmd_map);
    const fp::DistanceMatrix dm = fp::mmd_pairwise(ds, map);
    fp::write_distance_matrix(dm, mmd_out);
    std::cout << "wrote " << dm.values.rows() << "x" << dm.values.cols() << " mmd matrix to "
              << mmd_out << "\n";
  });

  // --- converge ----------------------------------------------------------------
  auto* converge_cmd = app.add_subcommand("converge", "GDD->MMD convergence curve over K");
  std::string conv_data, conv_map, conv_k, conv_out;
  std::uint64_t conv_seed = 0;
  bool conv_renorm = false;
  converge_cmd->add_option("path", conv_data, "dataset directory or .json file")->required();
  converge_cmd->add_option("map", conv_map, "map.bin")->required();
  converge_cmd->add_option("--k", conv_k, "comma list of K values; 'all' = m")->required();
  converge_cmd->add_option("--seed", conv_seed, "RNG seed");
  converge_cmd->add_flag("--renormalize", conv_renorm, "rescale weight sums to 1");
  converge_cmd->add_option("--out", conv_out, "output curve.csv")->required();
  converge_cmd->callback([&] {
    const fp::Dataset ds = fp::load_dataset(conv_data, fp::ParseOptions{conv_renorm});
    const fp::DiffusionMap map = fp::read_map(conv_map);
    std::vector<Eigen::Index> k_values;
    std::stringstream ss(conv_k);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item == "all") {
        k_values.push_back(map.coords.rows());
      } else {
        try {
          k_values.push_back(static_cast<Eigen::Index>(std::stol(item)));
        } catch (const std::exception&) {
          throw fp::UsageError("--k: malformed value '" + item + "'");
        }
      }
    }
    const auto curve = fp::convergence_curve(ds, map, k_values, conv_seed);
    fp::write_curve(curve, conv_out);
    for (const auto& point : curve)
      std::cout << "K = " << point.k << ": max |gdd - mmd| = " << point.max_abs_gap << "\n";
  });

  // --- classify ----------------------------------------------------------------
  auto* classify_cmd = app.add_subcommand("classify", "kernel logistic regression CV accuracy");
  std::string cls_dist, cls_labels, cls_sigma, cls_lambda, cls_out;
  int cls_folds = 5;
  std::uint64_t cls_seed = 0;
  classify_cmd->add_option("dist", cls_dist, "dist.csv")->required();
  classify_cmd->add_option("labels", cls_labels, "labels.csv")->required();
  classify_cmd->add_option("--folds", cls_folds, "stratified folds");
  classify_cmd->add_option("--seed", cls_seed, "RNG seed");
  classify_cmd->add_option("--sigma-grid", cls_sigma, "comma list of kernel bandwidths");
  classify_cmd->add_option("--lambda-grid", cls_lambda, "comma list of ridge penalties");
  classify_cmd->add_option("--out", cls_out, "also write the result JSON here");
  classify_cmd->callback([&] {
    const fp::DistanceMatrix dist = fp::read_distance_matrix(cls_dist);
    const BinaryLabels groups = binarize(align_labels(dist, cls_labels));
    const std::vector<double> sigma_grid =
        cls_sigma.empty() ? fp::default_sigma_grid(dist) : parse_double_list(cls_sigma, "--sigma-grid");
    const std::vector<double> lambda_grid = cls_lambda.empty()
                                                ? std::vector<double>{1e-3, 1e-2, 1e-1}
                                                : parse_double_list(cls_lambda, "--lambda-grid");
    const fp::CvResult cv =
        fp::cross_validate(dist, groups.y, cls_folds, sigma_grid, lambda_grid, cls_seed);
    ordered_json j;
    j["accuracy"] = cv.accuracy;
    j["sigma"] = cv.sigma;
    j["lambda"] = cv.lambda;
    j["folds"] = cls_folds;
    j["seed"] = cls_seed;
    j["label_negative"] = groups.negative;
    j["label_positive"] = groups.positive;
    std::cout << j.dump(2) << "\n";
    if (!cls_out.empty()) fp::write_text_file(j.dump(2) + "\n", cls_out);
  });

  // --- test ----------------------------------------------------------------
  auto* test_cmd = app.add_subcommand("test", "two-sample significance tests");
  std::string tst_dist, tst_hist, tst_labels, tst_out;
  int tst_nperm = 999;
  double tst_q = 0.05;
  std::uint64_t tst_seed = 0;
  test_cmd->add_option("dist", tst_dist, "dist.csv")->required();
  test_cmd->add_option("hist", tst_hist, "hist.csv")->required();
  test_cmd->add_option("labels", tst_labels, "labels.csv")->required();
  test_cmd->add_option("--nperm", tst_nperm, "number of label permutations");
  test_cmd->add_option("--q", tst_q, "Benjamini-Hochberg FDR level");
  test_cmd->add_option("--seed", tst_seed, "RNG seed");
  test_cmd->add_option("--out", tst_out, "output report.json");
  test_cmd->callback([&] {
    const fp::DistanceMatrix dist = fp::read_distance_matrix(tst_dist);
    const BinaryLabels groups = binarize(align_labels(dist, tst_labels));
    const fp::HistogramTable table = fp::read_histograms(tst_hist);
    std::map<std::string, std::size_t> row_of;
    for (std::size_t i = 0; i < table.sample_ids.size(); ++i) row_of[table.sample_ids[i]] = i;
    std::vector<fp::Histogram> hists_a, hists_b;
    for (std::size_t i = 0; i < dist.sample_ids.size(); ++i) {
      const auto it = row_of.find(dist.sample_ids[i]);
      if (it == row_of.end())
        throw fp::DataError(tst_hist + ": no histogram for sample '" + dist.sample_ids[i] + "'");
      (groups.y[i] > 0 ? hists_b : hists_a).push_back(table.hists[it->second]);
    }

    const fp::TestReport report =
        fp::run_test_suite(dist, groups.y, hists_a, hists_b, tst_nperm, tst_q, tst_seed);

    const ordered_json config = {{"dist", tst_dist},   {"hist", tst_hist}, {"labels", tst_labels},
                                 {"nperm", tst_nperm}, {"q", tst_q},       {"seed", tst_seed}};
    std::cout << "global p = " << report.global_p << ", " << report.bins.significant_bins.size()
              << " significant bin(s) at q = " << tst_q << "\n";
    if (!tst_out.empty())
      fp::write_text_file(
          fp::test_report_json(report, groups.negative, groups.positive, config.dump()), tst_out);
  });

  // --- embed ---------------------------------------------------------------
  auto* embed_cmd = app.add_subcommand("embed", "convex-hull sample embedding");
  std::string emb_hist, emb_cb, emb_dims = "0,1", emb_out, emb_svg;
  embed_cmd->add_option("hist", emb_hist, "hist.csv")->required();
  embed_cmd->add_option("codebook", emb_cb, "cb.bin")->required();
  embed_cmd->add_option("--dims", emb_dims, "plotted coordinate pair 'i,j'");
  embed_cmd->add_option("--out", emb_out, "output embed.csv")->required();
  embed_cmd->add_option("--svg", emb_svg, "also render embed.svg");
  embed_cmd->callback([&] {
    const fp::HistogramTable table = fp::read_histograms(emb_hist);
    const fp::Codebook cb = fp::read_codebook(emb_cb);
    const fp::SampleEmbedding emb =
        fp::embed_samples(table.hists, table.sample_ids, table.labels, cb, parse_dims(emb_dims));
    fp::write_text_file(fp::export_embedding_csv(emb), emb_out);
    if (!emb_svg.empty()) fp::write_text_file(fp::export_embedding_svg(emb), emb_svg);
    std::cout << "embedded " << emb.coords.rows() << " samples over " << emb.word_coords.rows()
              << " words\n";
  });

  // --- run -------------------------------------------------------------------
  auto* run_cmd = app.add_subcommand("run", "full pipeline from a config file");
  std::string run_config, run_data, run_out, run_eps, run_dim, run_metric, run_dims;
  double run_alpha = 1.0, run_q = 0.05;
  int run_time = 1, run_nperm = 999, run_folds = 5;
  Eigen::Index run_k = 100;
  std::uint64_t run_seed = 0;
  bool run_renorm = false, run_noscale = false;
  run_cmd->add_option("--config", run_config, "pipeline config file")->required();
  auto* o_data = run_cmd->add_option("--data", run_data, "override: dataset path");
  auto* o_out = run_cmd->add_option("--out", run_out, "override: output directory");
  auto* o_eps = run_cmd->add_option("--eps", run_eps, "override: bandwidth");
  auto* o_alpha = run_cmd->add_option("--alpha", run_alpha, "override: alpha");
  auto* o_dim = run_cmd->add_option("--dim", run_dim, "override: embedding dimension");
  auto* o_time = run_cmd->add_option("--time", run_time, "override: diffusion time");
  auto* o_k = run_cmd->add_option("--k", run_k, "override: codebook size");
  auto* o_seed = run_cmd->add_option("--seed", run_seed, "override: seed");
  auto* o_metric = run_cmd->add_option("--metric", run_metric, "override: gdd|emd");
  auto* o_nperm = run_cmd->add_option("--nperm", run_nperm, "override: permutations");
  auto* o_q = run_cmd->add_option("--q", run_q, "override: FDR level");
  auto* o_folds = run_cmd->add_option("--folds", run_folds, "override: CV folds");
  auto* o_dims = run_cmd->add_option("--dims", run_dims, "override: plotted dims 'i,j'");
  auto* o_renorm = run_cmd->add_flag("--renormalize", run_renorm, "override: renormalize");
  auto* o_noscale =
      run_cmd->add_flag("--no-eigenvalue-scaling", run_noscale, "override: raw eigenvectors");
  run_cmd->callback([&] {
    std::ifstream in(run_config);
    if (!in) throw fp::DataError("cannot open " + run_config);
    fp::PipelineConfig cfg = fp::parse_pipeline_config(in);
    if (o_data->count()) cfg.data = run_data;
    if (o_out->count()) cfg.out = run_out;
    if (o_eps->count()) cfg.map.eps = run_eps;
    if (o_alpha->count()) cfg.map.alpha = run_alpha;
    if (o_dim->count()) cfg.map.dim = run_dim;
    if (o_time->count()) cfg.map.time = run_time;
    if (o_k->count()) cfg.k = run_k;
    if (o_seed->count()) cfg.seed = run_seed;
    if (o_metric->count()) cfg.metric = run_metric;
    if (o_nperm->count()) cfg.n_perm = run_nperm;
    if (o_q->count()) cfg.q = run_q;
    if (o_folds->count()) cfg.folds = run_folds;
    if (o_dims->count()) cfg.dims = parse_dims(run_dims);
    if (o_renorm->count()) cfg.renormalize = true;
    if (o_noscale->count()) cfg.map.eigenvalue_scaling = false;
    fp::run_pipeline(cfg);
    std::cout << "pipeline complete: " << (cfg.out / "manifest.json").string() << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const fp::Error& e) {
    std::cerr << "fp: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "fp: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
