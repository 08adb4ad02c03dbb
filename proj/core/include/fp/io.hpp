#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fp/codebook.hpp"
#include "fp/geometry.hpp"
#include "fp/inference.hpp"
#include "fp/metrics.hpp"

namespace fp {

// map.bin: magic "FPDM", u32 version, u64 m, u64 d, u64 t, f64 eigenvalues
// (d+1 of them), f64 row-major coords. Little-endian throughout. A version or
// magic mismatch is a refusal, not a warning.
void write_map(const DiffusionMap& map, const std::filesystem::path& path);
DiffusionMap read_map(const std::filesystem::path& path);

// cb.bin: magic "FPCB", u32 version, u64 K, u64 d, u64 m, f64 inertia,
// f64 row-major centroids, u32 assignment.
void write_codebook(const Codebook& cb, const std::filesystem::path& path);
Codebook read_codebook(const std::filesystem::path& path);

// hist.csv: sample_id,label,h_0,...,h_{K-1}
struct HistogramTable {
  std::vector<std::string> sample_ids;
  std::vector<std::string> labels;
  std::vector<Histogram> hists;
};
void write_histograms(const HistogramTable& table, const std::filesystem::path& path);
HistogramTable read_histograms(const std::filesystem::path& path);

// dist.csv: header row of sample_ids, then square matrix rows.
void write_distance_matrix(const DistanceMatrix& dm, const std::filesystem::path& path);
DistanceMatrix read_distance_matrix(const std::filesystem::path& path);

// labels.csv: sample_id,label
std::vector<std::pair<std::string, std::string>> read_labels(const std::filesystem::path& path);

// curve.csv: k,max_abs_gap
void write_curve(const std::vector<ConvergencePoint>& curve, const std::filesystem::path& path);

// report.json payload: every TestReport field, the two group labels, and the
// caller's config block (a serialized JSON object, spliced in verbatim).
std::string test_report_json(const TestReport& report, const std::string& group_a,
                             const std::string& group_b, const std::string& config_json);

void write_text_file(const std::string& content, const std::filesystem::path& path);

// FNV-1a 64-bit, hex encoded; used for manifest output checksums.
std::string fnv1a64_hex(const std::string& bytes);
std::string file_checksum(const std::filesystem::path& path);

}  // namespace fp
