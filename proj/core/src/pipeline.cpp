#include "fp/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "fp/codebook.hpp"
#include "fp/embed.hpp"
#include "fp/errors.hpp"
#include "fp/inference.hpp"
#include "fp/ingest.hpp"
#include "fp/io.hpp"
#include "fp/metrics.hpp"

namespace fp {

namespace {

using ordered_json = nlohmann::ordered_json;

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const UsageError& e) {
    throw UsageError(std::string("stage ") + name + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(std::string("stage ") + name + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("stage ") + name + ": " + e.what());
  } catch (const std::exception& e) {
    throw DataError(std::string("stage ") + name + ": " + e.what());
  }
}

double parse_flag_double(const std::string& value, const char* what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw UsageError(std::string(what) + ": expected a number, got '" + value + "'");
  return v;
}

long parse_flag_int(const std::string& value, const char* what) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw UsageError(std::string(what) + ": expected an integer, got '" + value + "'");
  return v;
}

bool parse_flag_bool(const std::string& value, const char* what) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw UsageError(std::string(what) + ": expected true/false, got '" + value + "'");
}

ordered_json config_json(const PipelineConfig& config) {
  ordered_json j;
  j["data"] = config.data.string();
  j["out"] = config.out.string();
  j["renormalize"] = config.renormalize;
  j["eps"] = config.map.eps;
  j["alpha"] = config.map.alpha;
  j["dim"] = config.map.dim;
  j["time"] = config.map.time;
  j["eigenvalue_scaling"] = config.map.eigenvalue_scaling;
  j["k"] = config.k;
  j["seed"] = config.seed;
  j["metric"] = config.metric;
  j["nperm"] = config.n_perm;
  j["q"] = config.q;
  j["folds"] = config.folds;
  j["dims"] = {config.dims[0], config.dims[1]};
  return j;
}

// Maps the dataset's two labels onto -1/+1 in lexicographic order.
struct BinaryLabels {
  std::vector<int> y;
  std::string negative, positive;
};

BinaryLabels binarize(const std::vector<std::string>& labels) {
  std::set<std::string> distinct(labels.begin(), labels.end());
  if (distinct.size() != 2)
    throw DataError("expected exactly 2 distinct labels, found " + std::to_string(distinct.size()));
  BinaryLabels out;
  out.negative = *distinct.begin();
  out.positive = *std::next(distinct.begin());
  for (const auto& label : labels) out.y.push_back(label == out.positive ? 1 : -1);
  return out;
}

}  // namespace

DiffusionMap build_map(const Dataset& ds, const MapSettings& settings) {
  double eps = 0.0;
  if (settings.eps == "auto")
    eps = select_bandwidth(ds.compounds);
  else
    eps = parse_flag_double(settings.eps, "--eps");
  if (!(eps > 0.0)) throw UsageError("--eps must be positive");

  const AffinityMatrix aff = build_affinity(ds.compounds, eps);
  if (!is_connected(aff.w))
    throw DataError("affinity graph is disconnected; increase the bandwidth eps");
  const MarkovMatrix markov = renormalize(aff, settings.alpha);

  if (settings.dim == "auto")
    return diffusion_map_auto(markov, settings.time, settings.eigenvalue_scaling);
  const long d = parse_flag_int(settings.dim, "--dim");
  return diffusion_map(markov, static_cast<Eigen::Index>(d), settings.time,
                       settings.eigenvalue_scaling);
}

PipelineConfig parse_pipeline_config(std::istream& in) {
  PipelineConfig cfg;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw.substr(0, raw.find('#'));
    if (s.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(line) + ": expected key = value");
    auto trim = [](std::string t) {
      const auto b = t.find_first_not_of(" \t\r");
      const auto e = t.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : t.substr(b, e - b + 1);
    };
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key == "data")
      cfg.data = value;
    else if (key == "out")
      cfg.out = value;
    else if (key == "renormalize")
      cfg.renormalize = parse_flag_bool(value, "renormalize");
    else if (key == "eps")
      cfg.map.eps = value;
    else if (key == "alpha")
      cfg.map.alpha = parse_flag_double(value, "alpha");
    else if (key == "dim")
      cfg.map.dim = value;
    else if (key == "time")
      cfg.map.time = static_cast<int>(parse_flag_int(value, "time"));
    else if (key == "eigenvalue_scaling")
      cfg.map.eigenvalue_scaling = parse_flag_bool(value, "eigenvalue_scaling");
    else if (key == "k")
      cfg.k = static_cast<Eigen::Index>(parse_flag_int(value, "k"));
    else if (key == "seed")
      cfg.seed = static_cast<std::uint64_t>(parse_flag_int(value, "seed"));
    else if (key == "metric")
      cfg.metric = value;
    else if (key == "nperm")
      cfg.n_perm = static_cast<int>(parse_flag_int(value, "nperm"));
    else if (key == "q")
      cfg.q = parse_flag_double(value, "q");
    else if (key == "folds")
      cfg.folds = static_cast<int>(parse_flag_int(value, "folds"));
    else if (key == "dims") {
      const auto comma = value.find(',');
      if (comma == std::string::npos)
        throw UsageError("config line " + std::to_string(line) + ": dims expects 'i,j'");
      cfg.dims[0] = static_cast<Eigen::Index>(parse_flag_int(value.substr(0, comma), "dims"));
      cfg.dims[1] = static_cast<Eigen::Index>(parse_flag_int(value.substr(comma + 1), "dims"));
    } else {
      throw UsageError("config line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

void run_pipeline(const PipelineConfig& config) {
  namespace fs = std::filesystem;
  if (config.metric != "gdd" && config.metric != "emd")
    throw UsageError("metric must be 'gdd' or 'emd'");
  if (config.data.empty()) throw UsageError("config: 'data' is required");
  if (config.out.empty()) throw UsageError("config: 'out' is required");
  fs::create_directories(config.out);

  const Dataset ds = stage("validate", [&] {
    Dataset loaded = load_dataset(config.data, ParseOptions{config.renormalize});
    const ValidationReport report = validate_dataset(loaded);
    if (!report.ok())
      throw DataError(report.errors.front().location + ": " + report.errors.front().message);
    return loaded;
  });

  const DiffusionMap map = stage("map", [&] { return build_map(ds, config.map); });
  stage("map", [&] { write_map(map, config.out / "map.bin"); return 0; });

  const Codebook cb =
      stage("codebook", [&] { return diffusion_kmeans(map, config.k, config.seed); });
  stage("codebook", [&] { write_codebook(cb, config.out / "cb.bin"); return 0; });

  const HistogramTable table = stage("hist", [&] {
    HistogramTable t;
    for (const auto& fp : ds.fingerprints) {
      t.sample_ids.push_back(fp.sample_id);
      t.labels.push_back(fp.label);
      t.hists.push_back(histogram(fp, map, cb));
    }
    write_histograms(t, config.out / "hist.csv");
    return t;
  });

  const DistanceMatrix dist = stage("dist", [&] {
    DistanceMatrix dm;
    if (config.metric == "gdd") {
      dm = gdd_pairwise(table.hists, table.sample_ids, cb);
    } else {
      const Eigen::MatrixXd ground = centroid_ground(cb);
      const Eigen::Index n = static_cast<Eigen::Index>(table.hists.size());
      dm.sample_ids = table.sample_ids;
      dm.values.setZero(n, n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
          dm.values(i, j) = emd(table.hists[i], table.hists[j], ground);
          dm.values(j, i) = dm.values(i, j);
        }
    }
    write_distance_matrix(dm, config.out / "dist.csv");
    return dm;
  });

  const BinaryLabels groups = stage("classify", [&] { return binarize(table.labels); });

  stage("classify", [&] {
    const std::vector<double> sigma_grid = default_sigma_grid(dist);
    const std::vector<double> lambda_grid = {1e-3, 1e-2, 1e-1};
    const CvResult cv =
        cross_validate(dist, groups.y, config.folds, sigma_grid, lambda_grid, config.seed);
    ordered_json j;
    j["accuracy"] = cv.accuracy;
    j["sigma"] = cv.sigma;
    j["lambda"] = cv.lambda;
    j["folds"] = config.folds;
    j["seed"] = config.seed;
    j["n_samples"] = table.sample_ids.size();
    j["label_negative"] = groups.negative;
    j["label_positive"] = groups.positive;
    write_text_file(j.dump(2) + "\n", config.out / "classify.json");
    return 0;
  });

  stage("test", [&] {
    std::vector<Histogram> hists_a, hists_b;
    for (std::size_t i = 0; i < table.hists.size(); ++i)
      (groups.y[i] > 0 ? hists_b : hists_a).push_back(table.hists[i]);
    const TestReport report =
        run_test_suite(dist, groups.y, hists_a, hists_b, config.n_perm, config.q, config.seed);
    write_text_file(
        test_report_json(report, groups.negative, groups.positive, config_json(config).dump()),
        config.out / "report.json");
    return 0;
  });

  stage("embed", [&] {
    const SampleEmbedding emb =
        embed_samples(table.hists, table.sample_ids, table.labels, cb, config.dims);
    write_text_file(export_embedding_csv(emb), config.out / "embed.csv");
    write_text_file(export_embedding_svg(emb), config.out / "embed.svg");
    return 0;
  });

  stage("manifest", [&] {
    ordered_json j;
    j["tool"] = "fp";
    j["version"] = kToolVersion;
    j["config"] = config_json(config);
    j["outputs"] = ordered_json::array();
    for (const char* name : {"map.bin", "cb.bin", "hist.csv", "dist.csv", "classify.json",
                             "report.json", "embed.csv", "embed.svg"}) {
      const fs::path path = config.out / name;
      ordered_json entry;
      entry["path"] = name;
      entry["bytes"] = fs::file_size(path);
      entry["fnv1a64"] = file_checksum(path);
      j["outputs"].push_back(std::move(entry));
    }
    write_text_file(j.dump(2) + "\n", config.out / "manifest.json");
    return 0;
  });
}

}  // namespace fp
