#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "fp/geometry.hpp"
#include "fp/types.hpp"

namespace fp {

// K centroids in diffusion coordinates plus the compound -> bin assignment.
struct Codebook {
  Eigen::MatrixXd centroids;              // K x d
  std::vector<std::uint32_t> assignment;  // length m, values in [0, K)
  Eigen::Index k = 0;
  double inertia = 0.0;  // within-cluster sum of squares at convergence
};

// A fingerprint re-expressed as a K-vector on the simplex over code words.
struct Histogram {
  Eigen::VectorXd values;
};

// Lloyd's algorithm in diffusion coordinates with k-means++ seeding. Empty
// clusters are repaired by re-seeding at the point farthest from its centroid.
// Deterministic for fixed (map, k, seed, max_iter).
Codebook diffusion_kmeans(const DiffusionMap& map, Eigen::Index k, std::uint64_t seed,
                          int max_iter = 100);

// Nearest centroid in Euclidean norm; ties broken by lowest index.
Eigen::Index assign(const Eigen::VectorXd& point, const Codebook& cb);

// values[b] = sum of fingerprint weights of compounds assigned to bin b.
Histogram histogram(const Fingerprint& fp, const DiffusionMap& map, const Codebook& cb);

}  // namespace fp
