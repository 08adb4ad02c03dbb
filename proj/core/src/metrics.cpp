#include "fp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fp/errors.hpp"
#include "fp/parallel.hpp"
#include "fp/transport.hpp"

namespace fp {

namespace {

void check_histogram(const Histogram& h, Eigen::Index k, const char* what) {
  if (h.values.size() != k)
    throw DataError(std::string(what) + ": histogram has K = " + std::to_string(h.values.size()) +
                    ", expected " + std::to_string(k));
}

Eigen::VectorXd mean_embedding(const Fingerprint& fp, const DiffusionMap& map) {
  const Eigen::Index m = map.coords.rows();
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(map.coords.cols());
  for (const auto& e : fp.entries) {
    if (e.compound >= static_cast<std::size_t>(m))
      throw DataError("mmd: fingerprint '" + fp.sample_id + "' references compound index " +
                      std::to_string(e.compound) + " of a " + std::to_string(m) + "-compound map");
    mu += e.weight * map.coords.row(static_cast<Eigen::Index>(e.compound)).transpose();
  }
  return mu;
}

}  // namespace

double gdd(const Histogram& f, const Histogram& g, const Codebook& cb) {
  check_histogram(f, cb.k, "gdd");
  check_histogram(g, cb.k, "gdd");
  return ((f.values - g.values).transpose() * cb.centroids).norm();
}

DistanceMatrix gdd_pairwise(const std::vector<Histogram>& hists,
                            const std::vector<std::string>& sample_ids, const Codebook& cb) {
  if (hists.empty()) throw DataError("gdd_pairwise: empty histogram list");
  if (sample_ids.size() != hists.size())
    throw UsageError("gdd_pairwise: sample_ids and histograms differ in length");
  const Eigen::Index n = static_cast<Eigen::Index>(hists.size());
  for (const auto& h : hists) check_histogram(h, cb.k, "gdd_pairwise");

  DistanceMatrix dm;
  dm.sample_ids = sample_ids;
  dm.values.setZero(n, n);
  // Upper triangle by row through the scalar gdd, so every entry is bitwise
  // identical to an element-wise call and independent of the worker count.
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t iu) {
    const Eigen::Index i = static_cast<Eigen::Index>(iu);
    for (Eigen::Index j = i + 1; j < n; ++j)
      dm.values(i, j) = gdd(hists[iu], hists[static_cast<std::size_t>(j)], cb);
  });
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) dm.values(j, i) = dm.values(i, j);
  return dm;
}

double emd(const Histogram& f, const Histogram& g, const Eigen::MatrixXd& ground) {
  const Eigen::Index k = f.values.size();
  check_histogram(g, k, "emd");
  if (ground.rows() != k || ground.cols() != k)
    throw DataError("emd: ground matrix shape does not match K");
  for (Eigen::Index i = 0; i < k; ++i) {
    if (std::abs(ground(i, i)) > 1e-12) throw DataError("emd: ground matrix diagonal must be zero");
    for (Eigen::Index j = 0; j < k; ++j) {
      if (!(ground(i, j) >= 0.0) || !std::isfinite(ground(i, j)))
        throw DataError("emd: ground matrix entries must be nonnegative and finite");
      if (std::abs(ground(i, j) - ground(j, i)) > 1e-12)
        throw DataError("emd: ground matrix must be symmetric");
    }
  }
  for (const Histogram* h : {&f, &g}) {
    if (h->values.minCoeff() < -1e-12) throw DataError("emd: histogram entries must be nonnegative");
    if (std::abs(h->values.sum() - 1.0) > 1e-9)
      throw DataError("emd: histogram must sum to 1");
  }
  return transport_cost(f.values.cwiseMax(0.0), g.values.cwiseMax(0.0), ground);
}

Eigen::MatrixXd centroid_ground(const Codebook& cb) {
  const Eigen::Index k = cb.centroids.rows();
  Eigen::MatrixXd ground(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    ground(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < k; ++j) {
      ground(i, j) = (cb.centroids.row(i) - cb.centroids.row(j)).norm();
      ground(j, i) = ground(i, j);
    }
  }
  return ground;
}

double mmd(const Fingerprint& sa, const Fingerprint& sb, const DiffusionMap& map) {
  return (mean_embedding(sa, map) - mean_embedding(sb, map)).norm();
}

DistanceMatrix mmd_pairwise(const Dataset& ds, const DiffusionMap& map) {
  if (ds.fingerprints.empty()) throw DataError("mmd_pairwise: dataset has no fingerprints");
  const Eigen::Index n = static_cast<Eigen::Index>(ds.fingerprints.size());
  std::vector<Eigen::VectorXd> mu(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n),
               [&](std::size_t i) { mu[i] = mean_embedding(ds.fingerprints[i], map); });
  DistanceMatrix dm;
  dm.values.setZero(n, n);
  for (const auto& fp : ds.fingerprints) dm.sample_ids.push_back(fp.sample_id);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t iu) {
    const Eigen::Index i = static_cast<Eigen::Index>(iu);
    for (Eigen::Index j = i + 1; j < n; ++j) dm.values(i, j) = (mu[iu] - mu[j]).norm();
  });
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) dm.values(j, i) = dm.values(i, j);
  return dm;
}

std::vector<ConvergencePoint> convergence_curve(const Dataset& ds, const DiffusionMap& map,
                                                const std::vector<Eigen::Index>& k_values,
                                                std::uint64_t seed) {
  const Eigen::Index m = map.coords.rows();
  if (ds.fingerprints.size() < 2)
    throw DataError("convergence_curve: need at least 2 fingerprints");
  if (k_values.empty()) throw UsageError("convergence_curve: no K values given");
  for (std::size_t i = 0; i < k_values.size(); ++i) {
    if (k_values[i] < 1 || k_values[i] > m)
      throw UsageError("convergence_curve: K = " + std::to_string(k_values[i]) +
                       " out of range [1, " + std::to_string(m) + "]");
    if (i > 0 && k_values[i] < k_values[i - 1])
      throw UsageError("convergence_curve: K values must be sorted ascending");
  }

  const DistanceMatrix reference = mmd_pairwise(ds, map);
  const Eigen::Index n = reference.values.rows();

  std::vector<ConvergencePoint> curve;
  for (const Eigen::Index k : k_values) {
    const Codebook cb = diffusion_kmeans(map, k, seed);
    std::vector<Histogram> hists;
    hists.reserve(ds.fingerprints.size());
    for (const auto& fp : ds.fingerprints) hists.push_back(histogram(fp, map, cb));
    const DistanceMatrix binned = gdd_pairwise(hists, reference.sample_ids, cb);
    double gap = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        gap = std::max(gap, std::abs(binned.values(i, j) - reference.values(i, j)));
    curve.push_back(ConvergencePoint{k, gap});
  }
  return curve;
}

}  // namespace fp
