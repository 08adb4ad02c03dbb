#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "fp/geometry.hpp"
#include "fp/types.hpp"

namespace fp {

inline constexpr const char* kToolVersion = "0.1.0";

struct MapSettings {
  std::string eps = "auto";  // "auto" (median heuristic) or a positive value
  double alpha = 1.0;
  std::string dim = "auto";  // "auto" (spectral gap) or a positive integer
  int time = 1;
  bool eigenvalue_scaling = true;
};

// Bandwidth selection, affinity, connectivity check, renormalization and the
// spectral embedding in one step. Shared by `fp map` and `fp run`.
DiffusionMap build_map(const Dataset& ds, const MapSettings& settings);

struct PipelineConfig {
  std::filesystem::path data;  // dataset directory (csv-pair) or .json file
  std::filesystem::path out;   // output directory
  bool renormalize = false;
  MapSettings map;
  Eigen::Index k = 100;
  std::uint64_t seed = 0;
  std::string metric = "gdd";  // gdd | emd
  int n_perm = 999;
  double q = 0.05;
  int folds = 5;
  std::array<Eigen::Index, 2> dims = {0, 1};
};

// Flat key = value text, '#' comments; flags override file values at the CLI.
PipelineConfig parse_pipeline_config(std::istream& in);

// validate -> map -> codebook -> hist -> dist -> classify/test -> embed.
// Writes map.bin, cb.bin, hist.csv, dist.csv, classify.json, report.json,
// embed.csv, embed.svg and manifest.json under config.out. Any stage failure
// throws with a stage-named message.
void run_pipeline(const PipelineConfig& config);

}  // namespace fp
