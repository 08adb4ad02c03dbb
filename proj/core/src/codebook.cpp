#include "fp/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fp/errors.hpp"
#include "fp/parallel.hpp"
#include "fp/rng.hpp"

namespace fp {

namespace {

Eigen::Index nearest(const Eigen::MatrixXd& centroids, const Eigen::VectorXd& point) {
  Eigen::Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = (centroids.row(c).transpose() - point).squaredNorm();
    if (d < best_d) {  // strict < keeps the lowest index on ties
      best_d = d;
      best = c;
    }
  }
  return best;
}

// k-means++: first center uniform, then D^2 sampling. When every remaining
// point coincides with a chosen center (D^2 all zero), fall back to the first
// unchosen index so k = m always succeeds.
std::vector<Eigen::Index> kmeanspp_seeds(const Eigen::MatrixXd& x, Eigen::Index k, Rng& rng) {
  const Eigen::Index m = x.rows();
  std::vector<Eigen::Index> seeds;
  std::vector<char> chosen(static_cast<std::size_t>(m), 0);
  Eigen::VectorXd d2 = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::infinity());

  Eigen::Index first = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(m)));
  seeds.push_back(first);
  chosen[first] = 1;
  for (Eigen::Index i = 0; i < m; ++i) d2[i] = (x.row(i) - x.row(first)).squaredNorm();

  while (static_cast<Eigen::Index>(seeds.size()) < k) {
    const double total = d2.sum();
    Eigen::Index pick = -1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        acc += d2[i];
        if (acc >= target && !chosen[i]) {
          pick = i;
          break;
        }
      }
    }
    if (pick < 0) {
      for (Eigen::Index i = 0; i < m && pick < 0; ++i)
        if (!chosen[i]) pick = i;
    }
    seeds.push_back(pick);
    chosen[pick] = 1;
    for (Eigen::Index i = 0; i < m; ++i)
      d2[i] = std::min(d2[i], (x.row(i) - x.row(pick)).squaredNorm());
  }
  return seeds;
}

}  // namespace

Codebook diffusion_kmeans(const DiffusionMap& map, Eigen::Index k, std::uint64_t seed, int max_iter) {
  const Eigen::MatrixXd& x = map.coords;
  const Eigen::Index m = x.rows();
  const Eigen::Index d = x.cols();
  if (k < 1) throw UsageError("diffusion_kmeans: k must be at least 1");
  if (k > m) throw UsageError("diffusion_kmeans: k = " + std::to_string(k) + " exceeds m = " +
                              std::to_string(m));
  if (max_iter < 1) throw UsageError("diffusion_kmeans: max_iter must be positive");

  Rng rng(seed);
  Codebook cb;
  cb.k = k;
  cb.centroids.resize(k, d);
  const std::vector<Eigen::Index> seeds = kmeanspp_seeds(x, k, rng);
  for (Eigen::Index c = 0; c < k; ++c) cb.centroids.row(c) = x.row(seeds[c]);

  std::vector<std::uint32_t> assignment(static_cast<std::size_t>(m), 0);
  std::vector<std::uint32_t> previous;
  double prev_inertia = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < max_iter; ++iter) {
    parallel_for(static_cast<std::size_t>(m), [&](std::size_t i) {
      assignment[i] = static_cast<std::uint32_t>(
          nearest(cb.centroids, x.row(static_cast<Eigen::Index>(i)).transpose()));
    });

    std::vector<Eigen::Index> count(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < assignment.size(); ++i) ++count[assignment[i]];
    for (Eigen::Index empty = 0; empty < k; ++empty) {
      if (count[empty] != 0) continue;
      // Re-seed at the point farthest from its centroid, stealing only from
      // bins that keep at least one member.
      Eigen::Index far_point = -1;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (count[assignment[i]] < 2) continue;
        const double dist = (x.row(i) - cb.centroids.row(assignment[i])).squaredNorm();
        if (dist > far_d) {
          far_d = dist;
          far_point = i;
        }
      }
      if (far_point < 0) throw NumericalError("diffusion_kmeans: cannot repair empty cluster");
      --count[assignment[far_point]];
      assignment[far_point] = static_cast<std::uint32_t>(empty);
      count[empty] = 1;
      cb.centroids.row(empty) = x.row(far_point);
    }

    if (assignment == previous) break;
    previous = assignment;

    cb.centroids.setZero();
    for (Eigen::Index i = 0; i < m; ++i) cb.centroids.row(assignment[i]) += x.row(i);
    for (Eigen::Index c = 0; c < k; ++c) cb.centroids.row(c) /= double(count[c]);

    double inertia = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
      inertia += (x.row(i) - cb.centroids.row(assignment[i])).squaredNorm();
    if (inertia > prev_inertia + 1e-9 * std::max(1.0, prev_inertia))
      throw NumericalError("diffusion_kmeans: inertia increased across a Lloyd iteration");
    prev_inertia = inertia;
  }

  cb.assignment = assignment;
  cb.inertia = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    cb.inertia += (x.row(i) - cb.centroids.row(assignment[i])).squaredNorm();
  return cb;
}

Eigen::Index assign(const Eigen::VectorXd& point, const Codebook& cb) {
  if (point.size() != cb.centroids.cols())
    throw UsageError("assign: point dimension " + std::to_string(point.size()) +
                     " does not match codebook dimension " + std::to_string(cb.centroids.cols()));
  return nearest(cb.centroids, point);
}

Histogram histogram(const Fingerprint& fp, const DiffusionMap& map, const Codebook& cb) {
  const Eigen::Index m = map.coords.rows();
  if (static_cast<Eigen::Index>(cb.assignment.size()) != m)
    throw DataError("histogram: codebook was built from a different map (m mismatch)");
  Histogram h;
  h.values = Eigen::VectorXd::Zero(cb.k);
  for (const auto& e : fp.entries) {
    if (e.compound >= static_cast<std::size_t>(m))
      throw DataError("histogram: fingerprint '" + fp.sample_id + "' references compound index " +
                      std::to_string(e.compound) + " of a " + std::to_string(m) + "-compound map");
    h.values[cb.assignment[e.compound]] += e.weight;
  }
  return h;
}

}  // namespace fp
