#include "fp/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "fp/errors.hpp"
#include "fp/rng.hpp"

namespace fp {

namespace {

using nlohmann::json;

std::string weight_sum_message(double sum) {
  return "weights sum to " + csv::format_double(sum) + ", expected 1±" +
         csv::format_double(kWeightSumTolerance);
}

// Applies the weight-sum policy and final invariant check shared by all parse
// routes. Throws a located DataError when the dataset is invalid; in lenient
// mode violations are left for validate_dataset to report.
void finish_parse(Dataset& ds, const ParseOptions& opts) {
  for (auto& fp : ds.fingerprints) {
    const double sum = fp.weight_sum();
    if (std::abs(sum - 1.0) > kWeightSumTolerance) {
      bool rescalable = sum > 0.0;
      for (const auto& e : fp.entries)
        if (e.weight < 0.0 || !std::isfinite(e.weight)) rescalable = false;
      if (opts.renormalize && rescalable)
        fp = normalize_weights(fp);
      else if (opts.strict)
        throw DataError("fingerprint '" + fp.sample_id + "': " + weight_sum_message(sum));
    }
  }
  if (!opts.strict) return;
  const ValidationReport report = validate_dataset(ds);
  if (!report.ok()) {
    const Issue& first = report.errors.front();
    std::string msg = first.location + ": " + first.message;
    if (report.errors.size() > 1)
      msg += " (+" + std::to_string(report.errors.size() - 1) + " more)";
    throw DataError(msg);
  }
}

}  // namespace

Dataset parse_csv_pair(std::istream& compounds_csv, std::istream& fingerprints_csv,
                       const ParseOptions& opts) {
  Dataset ds;
  std::size_t line = 0;
  csv::Row row;

  if (!csv::read_row(compounds_csv, row, line))
    throw DataError("compounds.csv: empty file, expected header");
  if (row.fields.size() < 4 || row.fields[0] != "id" || row.fields[1] != "rt_boiling" ||
      row.fields[2] != "rt_polarity" || row.fields[3] != "s_0")
    throw DataError("compounds.csv line 1: expected header id,rt_boiling,rt_polarity,s_0,...");
  ds.p = static_cast<Eigen::Index>(row.fields.size()) - 3;

  std::map<std::string, std::size_t> index_of;
  while (csv::read_row(compounds_csv, row, line)) {
    if (row.fields.size() == 1 && row.fields[0].empty()) continue;  // trailing blank line
    if (row.fields.size() != static_cast<std::size_t>(ds.p) + 3)
      throw DataError("compounds.csv line " + std::to_string(row.line) + ": expected " +
                      std::to_string(ds.p + 3) + " fields, got " + std::to_string(row.fields.size()));
    Compound c;
    c.id = row.fields[0];
    c.rt_boiling = csv::parse_double(row.fields[1], row.line, "rt_boiling");
    c.rt_polarity = csv::parse_double(row.fields[2], row.line, "rt_polarity");
    c.spectrum.resize(ds.p);
    for (Eigen::Index j = 0; j < ds.p; ++j)
      c.spectrum[j] = csv::parse_double(row.fields[3 + j], row.line, "spectrum value");
    if (index_of.count(c.id))
      throw DataError("compounds.csv line " + std::to_string(row.line) + ": duplicate compound id '" +
                      c.id + "'");
    index_of[c.id] = ds.compounds.size();
    ds.compounds.push_back(std::move(c));
  }

  line = 0;
  if (!csv::read_row(fingerprints_csv, row, line))
    throw DataError("fingerprints.csv: empty file, expected header");
  if (row.fields != std::vector<std::string>{"sample_id", "label", "compound_id", "weight"})
    throw DataError("fingerprints.csv line 1: expected header sample_id,label,compound_id,weight");

  std::map<std::string, std::size_t> sample_of;
  while (csv::read_row(fingerprints_csv, row, line)) {
    if (row.fields.size() == 1 && row.fields[0].empty()) continue;
    if (row.fields.size() != 4)
      throw DataError("fingerprints.csv line " + std::to_string(row.line) +
                      ": expected 4 fields, got " + std::to_string(row.fields.size()));
    const std::string& sample_id = row.fields[0];
    const std::string& label = row.fields[1];
    const std::string& compound_id = row.fields[2];
    const double weight = csv::parse_double(row.fields[3], row.line, "weight");

    auto found = index_of.find(compound_id);
    if (found == index_of.end())
      throw DataError("fingerprints.csv line " + std::to_string(row.line) + ": sample '" + sample_id +
                      "' references unknown compound id '" + compound_id + "'");

    auto [it, inserted] = sample_of.try_emplace(sample_id, ds.fingerprints.size());
    if (inserted) ds.fingerprints.push_back(Fingerprint{sample_id, label, {}});
    Fingerprint& fp = ds.fingerprints[it->second];
    if (fp.label != label)
      throw DataError("fingerprints.csv line " + std::to_string(row.line) + ": sample '" + sample_id +
                      "' has conflicting labels '" + fp.label + "' and '" + label + "'");
    fp.entries.push_back(FingerprintEntry{found->second, weight});
  }

  finish_parse(ds, opts);
  return ds;
}

Dataset parse_json(std::istream& in, const ParseOptions& opts) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("json parse error: ") + e.what());
  }
  try {
    Dataset ds;
    ds.p = doc.at("p").get<Eigen::Index>();
    if (ds.p < 1) throw DataError("json: p must be positive");
    for (const auto& jc : doc.at("compounds")) {
      Compound c;
      c.id = jc.at("id").get<std::string>();
      c.rt_boiling = jc.at("rt_boiling").get<double>();
      c.rt_polarity = jc.at("rt_polarity").get<double>();
      const auto& spec = jc.at("spectrum");
      c.spectrum.resize(static_cast<Eigen::Index>(spec.size()));
      Eigen::Index j = 0;
      for (const auto& v : spec) c.spectrum[j++] = v.get<double>();
      ds.compounds.push_back(std::move(c));
    }
    for (const auto& jf : doc.at("fingerprints")) {
      Fingerprint fp;
      fp.sample_id = jf.at("sample_id").get<std::string>();
      if (jf.contains("label") && !jf.at("label").is_null())
        fp.label = jf.at("label").get<std::string>();
      for (const auto& je : jf.at("entries")) {
        FingerprintEntry e;
        e.compound = je.at("compound").get<std::size_t>();
        e.weight = je.at("weight").get<double>();
        fp.entries.push_back(e);
      }
      ds.fingerprints.push_back(std::move(fp));
    }
    finish_parse(ds, opts);
    return ds;
  } catch (const json::exception& e) {
    throw DataError(std::string("json: ") + e.what());
  }
}

Dataset load_dataset(const std::filesystem::path& path, const ParseOptions& opts) {
  namespace fs = std::filesystem;
  if (fs::is_directory(path)) {
    const fs::path cpath = path / "compounds.csv";
    const fs::path fpath = path / "fingerprints.csv";
    std::ifstream cfile(cpath);
    if (!cfile) throw DataError("cannot open " + cpath.string());
    std::ifstream ffile(fpath);
    if (!ffile) throw DataError("cannot open " + fpath.string());
    return parse_csv_pair(cfile, ffile, opts);
  }
  if (path.extension() == ".json") {
    std::ifstream file(path);
    if (!file) throw DataError("cannot open " + path.string());
    return parse_json(file, opts);
  }
  throw DataError("expected a dataset directory or .json file: " + path.string());
}

void write_csv_pair(const Dataset& ds, std::ostream& compounds_csv, std::ostream& fingerprints_csv) {
  compounds_csv << "id,rt_boiling,rt_polarity";
  for (Eigen::Index j = 0; j < ds.p; ++j) compounds_csv << ",s_" << j;
  compounds_csv << "\n";
  for (const auto& c : ds.compounds) {
    compounds_csv << csv::quote(c.id) << ',' << csv::format_double(c.rt_boiling) << ','
                  << csv::format_double(c.rt_polarity);
    for (Eigen::Index j = 0; j < c.spectrum.size(); ++j)
      compounds_csv << ',' << csv::format_double(c.spectrum[j]);
    compounds_csv << "\n";
  }

  fingerprints_csv << "sample_id,label,compound_id,weight\n";
  for (const auto& fp : ds.fingerprints)
    for (const auto& e : fp.entries)
      fingerprints_csv << csv::quote(fp.sample_id) << ',' << csv::quote(fp.label) << ','
                       << csv::quote(ds.compounds[e.compound].id) << ','
                       << csv::format_double(e.weight) << "\n";
}

void write_json(const Dataset& ds, std::ostream& out) {
  json doc;
  doc["p"] = ds.p;
  doc["compounds"] = json::array();
  for (const auto& c : ds.compounds) {
    json jc;
    jc["id"] = c.id;
    jc["rt_boiling"] = c.rt_boiling;
    jc["rt_polarity"] = c.rt_polarity;
    jc["spectrum"] = std::vector<double>(c.spectrum.data(), c.spectrum.data() + c.spectrum.size());
    doc["compounds"].push_back(std::move(jc));
  }
  doc["fingerprints"] = json::array();
  for (const auto& fp : ds.fingerprints) {
    json jf;
    jf["sample_id"] = fp.sample_id;
    jf["label"] = fp.label;
    jf["entries"] = json::array();
    for (const auto& e : fp.entries) jf["entries"].push_back({{"compound", e.compound}, {"weight", e.weight}});
    doc["fingerprints"].push_back(std::move(jf));
  }
  out << doc.dump(2) << "\n";
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream cfile(dir / "compounds.csv");
  std::ofstream ffile(dir / "fingerprints.csv");
  if (!cfile || !ffile) throw DataError("cannot write dataset files under " + dir.string());
  write_csv_pair(ds, cfile, ffile);
  std::ofstream lfile(dir / "labels.csv");
  if (!lfile) throw DataError("cannot write " + (dir / "labels.csv").string());
  lfile << "sample_id,label\n";
  for (const auto& fp : ds.fingerprints)
    lfile << csv::quote(fp.sample_id) << ',' << csv::quote(fp.label) << "\n";
}

Fingerprint normalize_weights(const Fingerprint& fp) {
  double sum = 0.0;
  for (const auto& e : fp.entries) {
    if (e.weight < 0.0 || !std::isfinite(e.weight))
      throw DataError("fingerprint '" + fp.sample_id + "': negative or non-finite weight");
    sum += e.weight;
  }
  if (sum <= 0.0) throw DataError("fingerprint '" + fp.sample_id + "': all weights are zero");
  Fingerprint out = fp;
  if (sum == 1.0) return out;
  for (auto& e : out.entries) e.weight /= sum;
  return out;
}

ValidationReport validate_dataset(const Dataset& ds) {
  ValidationReport report;
  auto error = [&](std::string loc, std::string msg) {
    report.errors.push_back(Issue{std::move(loc), std::move(msg)});
  };

  std::set<std::string> seen_ids;
  for (std::size_t i = 0; i < ds.compounds.size(); ++i) {
    const Compound& c = ds.compounds[i];
    const std::string loc = "compound '" + c.id + "'";
    if (!seen_ids.insert(c.id).second)
      report.warnings.push_back(Issue{loc, "duplicate compound id"});
    if (c.spectrum.size() != ds.p)
      error(loc, "spectrum dimension " + std::to_string(c.spectrum.size()) + ", expected p=" +
                     std::to_string(ds.p));
    bool any_positive = false;
    for (Eigen::Index j = 0; j < c.spectrum.size(); ++j) {
      const double v = c.spectrum[j];
      if (!std::isfinite(v) || v < 0.0) {
        error(loc, "spectrum entry s_" + std::to_string(j) + " = " + csv::format_double(v) +
                       " is negative or non-finite");
        break;
      }
      if (v > 0.0) any_positive = true;
    }
    if (!any_positive && c.spectrum.size() == ds.p)
      error(loc, "spectrum has no strictly positive entry");
    if (!(c.rt_boiling >= 0.0) || !std::isfinite(c.rt_boiling))
      error(loc, "rt_boiling must be a nonnegative real");
    if (!(c.rt_polarity >= 0.0) || !std::isfinite(c.rt_polarity))
      error(loc, "rt_polarity must be a nonnegative real");
  }

  std::set<std::string> seen_samples;
  for (const Fingerprint& fp : ds.fingerprints) {
    const std::string loc = "fingerprint '" + fp.sample_id + "'";
    if (!seen_samples.insert(fp.sample_id).second)
      report.warnings.push_back(Issue{loc, "duplicate sample id"});
    if (fp.entries.empty()) {
      error(loc, "fingerprint has no entries (m >= 1 required)");
      continue;
    }
    std::set<std::size_t> seen_compounds;
    double sum = 0.0;
    bool weights_ok = true;
    for (const auto& e : fp.entries) {
      if (e.compound >= ds.compounds.size())
        error(loc, "references compound index " + std::to_string(e.compound) + " of a " +
                       std::to_string(ds.compounds.size()) + "-compound dataset");
      if (!seen_compounds.insert(e.compound).second)
        error(loc, "duplicate compound index " + std::to_string(e.compound));
      if (!std::isfinite(e.weight) || e.weight < 0.0) {
        error(loc, "weight " + csv::format_double(e.weight) + " is negative or non-finite");
        weights_ok = false;
      }
      sum += e.weight;
    }
    if (weights_ok && std::abs(sum - 1.0) > kWeightSumTolerance)
      error(loc, weight_sum_message(sum));
  }
  return report;
}

SynthConfig parse_synth_config(std::istream& in) {
  SynthConfig cfg;
  std::string raw;
  std::size_t line = 0;
  auto parse_mixing = [](const std::string& value, std::size_t line_no) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ','))
      out.push_back(csv::parse_double(item, line_no, "mixing proportion"));
    return out;
  };
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw.substr(0, raw.find('#'));
    const auto eq = s.find('=');
    if (s.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (eq == std::string::npos)
      throw UsageError("synth config line " + std::to_string(line) + ": expected key = value");
    auto trim = [](std::string t) {
      const auto b = t.find_first_not_of(" \t\r");
      const auto e = t.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : t.substr(b, e - b + 1);
    };
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key == "clusters")
      cfg.clusters = static_cast<int>(csv::parse_index(value, line, "clusters"));
    else if (key == "compounds")
      cfg.compounds = static_cast<int>(csv::parse_index(value, line, "compounds"));
    else if (key == "dim")
      cfg.dim = static_cast<int>(csv::parse_index(value, line, "dim"));
    else if (key == "noise")
      cfg.noise = csv::parse_double(value, line, "noise");
    else if (key == "structure")
      cfg.structure = value;
    else if (key == "samples_per_group")
      cfg.samples_per_group = static_cast<int>(csv::parse_index(value, line, "samples_per_group"));
    else if (key == "mixing_a")
      cfg.mixing_a = parse_mixing(value, line);
    else if (key == "mixing_b")
      cfg.mixing_b = parse_mixing(value, line);
    else if (key == "dirichlet_concentration")
      cfg.dirichlet_concentration = csv::parse_double(value, line, "dirichlet_concentration");
    else if (key == "label_a")
      cfg.label_a = value;
    else if (key == "label_b")
      cfg.label_b = value;
    else
      throw UsageError("synth config line " + std::to_string(line) + ": unknown key '" + key + "'");
  }
  return cfg;
}

namespace {

// Unit direction supported on one coordinate block. Distinct clusters get
// disjoint spectral supports, so cross-cluster cosine distances sit near 1
// while within-cluster distances scale with the noise level.
Eigen::VectorXd block_direction(Rng& rng, int dim, int block, int blocks) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
  const int lo = block * dim / blocks;
  const int hi = (block + 1) * dim / blocks;
  for (int j = lo; j < hi; ++j) v[j] = std::abs(rng.normal()) + 0.05;
  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

Eigen::VectorXd normalized_mixing(const std::vector<double>& mixing, int clusters) {
  Eigen::VectorXd mix(clusters);
  if (mixing.empty()) {
    mix.setConstant(1.0 / clusters);
    return mix;
  }
  if (static_cast<int>(mixing.size()) != clusters)
    throw UsageError("mixing proportions must have one entry per cluster");
  double sum = 0.0;
  for (int c = 0; c < clusters; ++c) {
    if (mixing[c] < 0.0) throw UsageError("mixing proportions must be nonnegative");
    mix[c] = mixing[c];
    sum += mixing[c];
  }
  if (!(sum > 0.0)) throw UsageError("mixing proportions must not all be zero");
  return mix / sum;
}

}  // namespace

Dataset generate_synthetic_dataset(const SynthConfig& config, std::uint64_t seed) {
  if (config.clusters < 1) throw UsageError("synth: clusters must be positive");
  if (config.compounds < config.clusters)
    throw UsageError("synth: need at least one compound per cluster");
  if (config.dim < config.clusters)
    throw UsageError("synth: dim must be at least the cluster count");
  if (config.noise < 0.0) throw UsageError("synth: noise must be nonnegative");
  if (config.samples_per_group < 1) throw UsageError("synth: samples_per_group must be positive");
  if (!(config.dirichlet_concentration > 0.0))
    throw UsageError("synth: dirichlet_concentration must be positive");
  if (config.structure != "gaussian" && config.structure != "arc")
    throw UsageError("synth: structure must be 'gaussian' or 'arc'");

  const int k = config.clusters;
  const Eigen::VectorXd mix_a = normalized_mixing(config.mixing_a, k);
  const Eigen::VectorXd mix_b = normalized_mixing(config.mixing_b, k);

  Rng root(seed);
  Rng centers_rng = root.substream(0);
  Rng points_rng = root.substream(1);
  Rng rt_rng = root.substream(2);

  std::vector<int> cluster_size(k, config.compounds / k);
  for (int c = 0; c < config.compounds % k; ++c) ++cluster_size[c];

  std::vector<Eigen::VectorXd> centers, arc_dir1, arc_dir2;
  for (int c = 0; c < k; ++c) {
    centers.push_back(block_direction(centers_rng, config.dim, c, k));
    arc_dir1.push_back(block_direction(centers_rng, config.dim, c, k));
    arc_dir2.push_back(block_direction(centers_rng, config.dim, c, k));
  }

  Dataset ds;
  ds.p = config.dim;
  std::vector<std::vector<std::size_t>> members(k);
  for (int c = 0; c < k; ++c) {
    for (int i = 0; i < cluster_size[c]; ++i) {
      Eigen::VectorXd base;
      if (config.structure == "gaussian") {
        base = centers[c];
      } else {
        const double s = points_rng.uniform();
        base = (1.0 - s) * centers[c] + s * arc_dir1[c] +
               0.4 * std::sin(3.14159265358979323846 * s) * arc_dir2[c];
        base /= std::max(base.norm(), 1e-12);
      }
      Eigen::VectorXd x = base;
      for (int j = 0; j < config.dim; ++j) x[j] += config.noise * points_rng.normal();
      x = x.cwiseMax(0.0);  // shift/clip: spectra are nonnegative
      if (!(x.maxCoeff() > 0.0)) x = base.cwiseMax(0.0);

      Compound compound;
      char buf[16];
      std::snprintf(buf, sizeof(buf), "c%05zu", ds.compounds.size());
      compound.id = buf;
      compound.rt_boiling = rt_rng.uniform(60.0, 3600.0);
      compound.rt_polarity = rt_rng.uniform(0.5, 10.0);
      compound.spectrum = x;
      members[c].push_back(ds.compounds.size());
      ds.compounds.push_back(std::move(compound));
    }
  }

  struct Group {
    std::string label;
    const Eigen::VectorXd* mix;
    std::uint64_t stream;
  };
  const Group groups[2] = {{config.label_a, &mix_a, 3}, {config.label_b, &mix_b, 4}};
  for (const Group& g : groups) {
    Rng group_rng = root.substream(g.stream);
    for (int s = 0; s < config.samples_per_group; ++s) {
      Rng sample_rng = group_rng.substream(static_cast<std::uint64_t>(s));
      // Cluster-level mass around the group's mixing, then a flat Dirichlet
      // split of each cluster's mass over its member compounds.
      const Eigen::VectorXd alpha =
          config.dirichlet_concentration * (*g.mix) + Eigen::VectorXd::Constant(k, 1e-3);
      const Eigen::VectorXd theta = sample_rng.dirichlet(alpha);
      Fingerprint fp;
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%s_%03d", g.label.c_str(), s);
      fp.sample_id = buf;
      fp.label = g.label;
      for (int c = 0; c < k; ++c) {
        const Eigen::VectorXd sub =
            sample_rng.dirichlet(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(members[c].size())));
        for (std::size_t i = 0; i < members[c].size(); ++i)
          fp.entries.push_back(FingerprintEntry{members[c][i], theta[c] * sub[static_cast<Eigen::Index>(i)]});
      }
      ds.fingerprints.push_back(normalize_weights(fp));
    }
  }
  return ds;
}

}  // namespace fp
