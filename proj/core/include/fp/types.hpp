#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fp {

// One chemical compound: a mass spectrum plus the two GCxGC retention
// coordinates. Retention times are metadata; distances use the spectrum only.
struct Compound {
  std::string id;
  double rt_boiling = 0.0;   // seconds, first GC column (boiling point)
  double rt_polarity = 0.0;  // seconds, second GC column (polarity)
  Eigen::VectorXd spectrum;  // length p, nonnegative intensities
};

struct FingerprintEntry {
  std::size_t compound = 0;  // index into Dataset::compounds
  double weight = 0.0;
};

// One smoke sample: a weighted set of compound references, weights on the
// simplex.
struct Fingerprint {
  std::string sample_id;
  std::string label;  // optional categorical tag, empty = unlabeled
  std::vector<FingerprintEntry> entries;

  [[nodiscard]] double weight_sum() const {
    double s = 0.0;
    for (const auto& e : entries) s += e.weight;
    return s;
  }
};

struct Dataset {
  std::vector<Compound> compounds;
  std::vector<Fingerprint> fingerprints;
  Eigen::Index p = 0;  // spectrum dimension, identical for all compounds
};

struct Issue {
  std::string location;
  std::string message;
};

struct ValidationReport {
  std::vector<Issue> errors;
  std::vector<Issue> warnings;

  [[nodiscard]] bool ok() const { return errors.empty(); }
};

}  // namespace fp
