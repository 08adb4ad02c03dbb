#include "fp/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "fp/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary artifact layout assumes a little-endian host");

namespace fp {

namespace {

constexpr std::uint32_t kMapVersion = 1;
constexpr std::uint32_t kCodebookVersion = 1;

class BinWriter {
 public:
  explicit BinWriter(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw DataError("cannot write " + path.string());
  }
  void magic(const char m[4]) { out_.write(m, 4); }
  template <class T>
  void value(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  template <class T>
  void array(const T* data, std::size_t count) {
    out_.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
  }
  void close(const std::filesystem::path& path) {
    out_.flush();
    if (!out_) throw DataError("failed writing " + path.string());
  }

 private:
  std::ofstream out_;
};

class BinReader {
 public:
  explicit BinReader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw DataError("cannot open " + path.string());
  }
  void expect_magic(const char m[4], const char* kind) {
    char got[4] = {};
    in_.read(got, 4);
    if (!in_ || std::memcmp(got, m, 4) != 0)
      throw DataError(path_.string() + ": not a " + kind + " file (bad magic)");
  }
  void expect_version(std::uint32_t expected, const char* kind) {
    const std::uint32_t v = value<std::uint32_t>();
    if (v != expected)
      throw DataError(path_.string() + ": " + kind + " version " + std::to_string(v) +
                      " unsupported (expected " + std::to_string(expected) + ")");
  }
  template <class T>
  T value() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) throw DataError(path_.string() + ": truncated file");
    return v;
  }
  template <class T>
  void array(T* data, std::size_t count) {
    in_.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
    if (!in_) throw DataError(path_.string() + ": truncated file");
  }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
};

}  // namespace

void write_map(const DiffusionMap& map, const std::filesystem::path& path) {
  BinWriter w(path);
  w.magic("FPDM");
  w.value<std::uint32_t>(kMapVersion);
  w.value<std::uint64_t>(static_cast<std::uint64_t>(map.coords.rows()));
  w.value<std::uint64_t>(static_cast<std::uint64_t>(map.d));
  w.value<std::uint64_t>(static_cast<std::uint64_t>(map.t));
  w.array(map.eigenvalues.data(), static_cast<std::size_t>(map.eigenvalues.size()));
  for (Eigen::Index i = 0; i < map.coords.rows(); ++i)
    for (Eigen::Index j = 0; j < map.coords.cols(); ++j) w.value<double>(map.coords(i, j));
  w.close(path);
}

DiffusionMap read_map(const std::filesystem::path& path) {
  BinReader r(path);
  r.expect_magic("FPDM", "diffusion map");
  r.expect_version(kMapVersion, "diffusion map");
  const auto m = r.value<std::uint64_t>();
  const auto d = r.value<std::uint64_t>();
  const auto t = r.value<std::uint64_t>();
  if (d + 1 > m || m == 0) throw DataError(path.string() + ": inconsistent dimensions");
  DiffusionMap map;
  map.d = static_cast<Eigen::Index>(d);
  map.t = static_cast<int>(t);
  map.eigenvalues.resize(static_cast<Eigen::Index>(d) + 1);
  r.array(map.eigenvalues.data(), d + 1);
  map.coords.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < map.coords.rows(); ++i)
    for (Eigen::Index j = 0; j < map.coords.cols(); ++j) map.coords(i, j) = r.value<double>();
  return map;
}

void write_codebook(const Codebook& cb, const std::filesystem::path& path) {
  BinWriter w(path);
  w.magic("FPCB");
  w.value<std::uint32_t>(kCodebookVersion);
  w.value<std::uint64_t>(static_cast<std::uint64_t>(cb.k));
  w.value<std::uint64_t>(static_cast<std::uint64_t>(cb.centroids.cols()));
  w.value<std::uint64_t>(static_cast<std::uint64_t>(cb.assignment.size()));
  w.value<double>(cb.inertia);
  for (Eigen::Index i = 0; i < cb.centroids.rows(); ++i)
    for (Eigen::Index j = 0; j < cb.centroids.cols(); ++j) w.value<double>(cb.centroids(i, j));
  w.array(cb.assignment.data(), cb.assignment.size());
  w.close(path);
}

Codebook read_codebook(const std::filesystem::path& path) {
  BinReader r(path);
  r.expect_magic("FPCB", "codebook");
  r.expect_version(kCodebookVersion, "codebook");
  const auto k = r.value<std::uint64_t>();
  const auto d = r.value<std::uint64_t>();
  const auto m = r.value<std::uint64_t>();
  if (k == 0 || k > m) throw DataError(path.string() + ": inconsistent dimensions");
  Codebook cb;
  cb.k = static_cast<Eigen::Index>(k);
  cb.inertia = r.value<double>();
  cb.centroids.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < cb.centroids.rows(); ++i)
    for (Eigen::Index j = 0; j < cb.centroids.cols(); ++j) cb.centroids(i, j) = r.value<double>();
  cb.assignment.resize(m);
  r.array(cb.assignment.data(), m);
  for (const std::uint32_t a : cb.assignment)
    if (a >= k) throw DataError(path.string() + ": assignment index out of range");
  return cb;
}

void write_histograms(const HistogramTable& table, const std::filesystem::path& path) {
  if (table.hists.empty()) throw DataError("write_histograms: empty table");
  std::ostringstream out;
  const Eigen::Index k = table.hists.front().values.size();
  out << "sample_id,label";
  for (Eigen::Index b = 0; b < k; ++b) out << ",h_" << b;
  out << "\n";
  for (std::size_t i = 0; i < table.hists.size(); ++i) {
    out << csv::quote(table.sample_ids[i]) << ',' << csv::quote(table.labels[i]);
    for (Eigen::Index b = 0; b < k; ++b) out << ',' << csv::format_double(table.hists[i].values[b]);
    out << "\n";
  }
  write_text_file(out.str(), path);
}

HistogramTable read_histograms(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::size_t line = 0;
  csv::Row row;
  if (!csv::read_row(in, row, line) || row.fields.size() < 3 || row.fields[0] != "sample_id" ||
      row.fields[1] != "label" || row.fields[2] != "h_0")
    throw DataError(path.string() + ": expected header sample_id,label,h_0,...");
  const std::size_t k = row.fields.size() - 2;
  HistogramTable table;
  while (csv::read_row(in, row, line)) {
    if (row.fields.size() == 1 && row.fields[0].empty()) continue;
    if (row.fields.size() != k + 2)
      throw DataError(path.string() + " line " + std::to_string(row.line) + ": expected " +
                      std::to_string(k + 2) + " fields");
    table.sample_ids.push_back(row.fields[0]);
    table.labels.push_back(row.fields[1]);
    Histogram h;
    h.values.resize(static_cast<Eigen::Index>(k));
    for (std::size_t b = 0; b < k; ++b)
      h.values[static_cast<Eigen::Index>(b)] = csv::parse_double(row.fields[b + 2], row.line, "histogram value");
    table.hists.push_back(std::move(h));
  }
  if (table.hists.empty()) throw DataError(path.string() + ": no histogram rows");
  return table;
}

void write_distance_matrix(const DistanceMatrix& dm, const std::filesystem::path& path) {
  std::ostringstream out;
  for (std::size_t i = 0; i < dm.sample_ids.size(); ++i)
    out << (i ? "," : "") << csv::quote(dm.sample_ids[i]);
  out << "\n";
  for (Eigen::Index i = 0; i < dm.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < dm.values.cols(); ++j)
      out << (j ? "," : "") << csv::format_double(dm.values(i, j));
    out << "\n";
  }
  write_text_file(out.str(), path);
}

DistanceMatrix read_distance_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::size_t line = 0;
  csv::Row row;
  if (!csv::read_row(in, row, line) || row.fields.empty())
    throw DataError(path.string() + ": expected a header row of sample ids");
  DistanceMatrix dm;
  dm.sample_ids = row.fields;
  const Eigen::Index n = static_cast<Eigen::Index>(dm.sample_ids.size());
  dm.values.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!csv::read_row(in, row, line))
      throw DataError(path.string() + ": expected " + std::to_string(n) + " matrix rows");
    if (static_cast<Eigen::Index>(row.fields.size()) != n)
      throw DataError(path.string() + " line " + std::to_string(row.line) + ": expected " +
                      std::to_string(n) + " fields");
    for (Eigen::Index j = 0; j < n; ++j)
      dm.values(i, j) = csv::parse_double(row.fields[static_cast<std::size_t>(j)], row.line,
                                          "distance");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(dm.values(i, i)) > 1e-12)
      throw DataError(path.string() + ": nonzero diagonal entry at row " + std::to_string(i));
    for (Eigen::Index j = 0; j < n; ++j) {
      if (dm.values(i, j) < 0.0)
        throw DataError(path.string() + ": negative distance at (" + std::to_string(i) + "," +
                        std::to_string(j) + ")");
      if (std::abs(dm.values(i, j) - dm.values(j, i)) > 1e-12)
        throw DataError(path.string() + ": matrix is not symmetric");
    }
  }
  return dm;
}

std::vector<std::pair<std::string, std::string>> read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::size_t line = 0;
  csv::Row row;
  if (!csv::read_row(in, row, line) ||
      row.fields != std::vector<std::string>{"sample_id", "label"})
    throw DataError(path.string() + ": expected header sample_id,label");
  std::vector<std::pair<std::string, std::string>> labels;
  while (csv::read_row(in, row, line)) {
    if (row.fields.size() == 1 && row.fields[0].empty()) continue;
    if (row.fields.size() != 2)
      throw DataError(path.string() + " line " + std::to_string(row.line) + ": expected 2 fields");
    labels.emplace_back(row.fields[0], row.fields[1]);
  }
  return labels;
}

void write_curve(const std::vector<ConvergencePoint>& curve, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "k,max_abs_gap\n";
  for (const auto& point : curve)
    out << point.k << ',' << csv::format_double(point.max_abs_gap) << "\n";
  write_text_file(out.str(), path);
}

std::string test_report_json(const TestReport& report, const std::string& group_a,
                             const std::string& group_b, const std::string& config_json) {
  using ordered_json = nlohmann::ordered_json;
  ordered_json j;
  j["global_p"] = report.global_p;
  j["statistic"] = report.statistic;
  j["n_permutations"] = report.n_permutations;
  j["q"] = report.q;
  j["group_a"] = group_a;
  j["group_b"] = group_b;
  j["per_bin"] = ordered_json::array();
  for (const auto& bin : report.bins.per_bin)
    j["per_bin"].push_back(
        {{"bin", bin.bin}, {"p_value", bin.p_value}, {"direction", bin.direction}});
  j["significant_bins"] = report.bins.significant_bins;
  try {
    j["config"] = ordered_json::parse(config_json);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(std::string("test_report_json: config block is not valid JSON: ") + e.what());
  }
  return j.dump(2) + "\n";
}

void write_text_file(const std::string& content, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw DataError("failed writing " + path.string());
}

std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a64_hex(ss.str());
}

}  // namespace fp
