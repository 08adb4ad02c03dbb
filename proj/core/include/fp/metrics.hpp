#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fp/codebook.hpp"
#include "fp/geometry.hpp"
#include "fp/types.hpp"

namespace fp {

struct DistanceMatrix {
  Eigen::MatrixXd values;  // symmetric, nonnegative, zero diagonal
  std::vector<std::string> sample_ids;
};

// Generalized diffusion distance |sum_i (f_i - g_i) c_i|. O(K d) arithmetic.
double gdd(const Histogram& f, const Histogram& g, const Codebook& cb);

DistanceMatrix gdd_pairwise(const std::vector<Histogram>& hists,
                            const std::vector<std::string>& sample_ids, const Codebook& cb);

// Exact optimal-transport cost between two histograms under a metric ground
// matrix (zero diagonal, symmetric, nonnegative).
double emd(const Histogram& f, const Histogram& g, const Eigen::MatrixXd& ground);

// Default EMD ground distance: pairwise Euclidean distances between codebook
// centroids, so EMD and GDD consume identical geometry.
Eigen::MatrixXd centroid_ground(const Codebook& cb);

// Maximum Mean Discrepancy with the linear kernel on diffusion coordinates:
// the norm between the weighted mean embeddings of the two fingerprints. This
// is the kernel under which GDD at K = m reduces to MMD exactly.
double mmd(const Fingerprint& sa, const Fingerprint& sb, const DiffusionMap& map);

DistanceMatrix mmd_pairwise(const Dataset& ds, const DiffusionMap& map);

struct ConvergencePoint {
  Eigen::Index k = 0;
  double max_abs_gap = 0.0;  // worst pair |gdd_K - mmd|
};

// For each K, fits a codebook with the given seed and reports the worst-pair
// absolute gap between gdd and mmd. At K = m the gap vanishes (no binning).
std::vector<ConvergencePoint> convergence_curve(const Dataset& ds, const DiffusionMap& map,
                                                const std::vector<Eigen::Index>& k_values,
                                                std::uint64_t seed);

}  // namespace fp
