#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fp/types.hpp"

namespace fp {

// Tolerance on |sum(weights) - 1| accepted at parse time. Instrument exports
// are rarely exact; --renormalize opts into rescaling instead of rejecting.
inline constexpr double kWeightSumTolerance = 1e-9;

struct ParseOptions {
  bool renormalize = false;
  // strict = true rejects invariant violations at parse time; false defers
  // them to validate_dataset (used by `fp validate` to report everything).
  bool strict = true;
};

enum class DatasetFormat { CsvPair, SingleJson };

// csv-pair format: compounds.csv + fingerprints.csv (see README for headers).
Dataset parse_csv_pair(std::istream& compounds_csv, std::istream& fingerprints_csv,
                       const ParseOptions& opts = {});

// single-json format: one document { "p", "compounds", "fingerprints" }.
Dataset parse_json(std::istream& in, const ParseOptions& opts = {});

// Dispatch on path: directory -> csv-pair, *.json -> single-json.
Dataset load_dataset(const std::filesystem::path& path, const ParseOptions& opts = {});

void write_csv_pair(const Dataset& ds, std::ostream& compounds_csv, std::ostream& fingerprints_csv);
void write_json(const Dataset& ds, std::ostream& out);

// Writes compounds.csv, fingerprints.csv and labels.csv into `dir`.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

// Rescales weights to sum to 1. Errors on all-zero weights.
Fingerprint normalize_weights(const Fingerprint& fp);

// Reports every violated invariant; never throws on bad data.
ValidationReport validate_dataset(const Dataset& ds);

// Synthetic desk-scale stand-in for instrument data: compounds near `clusters`
// low-dimensional structures in R^p, fingerprints drawn from per-group mixing
// proportions with Dirichlet noise.
struct SynthConfig {
  int clusters = 3;
  int compounds = 150;       // total, split as evenly as possible across clusters
  int dim = 20;              // ambient dimension p
  double noise = 0.05;       // per-coordinate Gaussian noise scale
  std::string structure = "gaussian";  // "gaussian" blobs or 1-D noisy "arc"s
  int samples_per_group = 10;
  std::vector<double> mixing_a = {};  // per-cluster mass, normalized internally
  std::vector<double> mixing_b = {};
  double dirichlet_concentration = 50.0;
  std::string label_a = "air";
  std::string label_b = "ground";
};

// Flat key = value text file, '#' comments.
SynthConfig parse_synth_config(std::istream& in);

Dataset generate_synthetic_dataset(const SynthConfig& config, std::uint64_t seed);

}  // namespace fp
