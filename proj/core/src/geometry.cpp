#include "fp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fp/errors.hpp"
#include "fp/parallel.hpp"

namespace fp {

double cosine_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size()) throw UsageError("cosine_distance: dimension mismatch");
  const double nx = x.norm();
  const double ny = y.norm();
  if (nx == 0.0 || ny == 0.0) throw DataError("cosine_distance: zero vector");
  const double c = x.dot(y) / (nx * ny);
  return std::clamp(1.0 - c, 0.0, 2.0);
}

namespace {

// Row-normalized spectra; pairwise cosine distance is then 1 - row dot.
Eigen::MatrixXd unit_spectra(const std::vector<Compound>& compounds) {
  const Eigen::Index m = static_cast<Eigen::Index>(compounds.size());
  const Eigen::Index p = compounds.empty() ? 0 : compounds.front().spectrum.size();
  Eigen::MatrixXd x(m, p);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (compounds[i].spectrum.size() != p)
      throw DataError("compound '" + compounds[i].id + "': inconsistent spectrum dimension");
    const double norm = compounds[i].spectrum.norm();
    if (norm == 0.0) throw DataError("compound '" + compounds[i].id + "': zero spectrum");
    x.row(i) = compounds[i].spectrum.transpose() / norm;
  }
  return x;
}

}  // namespace

AffinityMatrix build_affinity(const std::vector<Compound>& compounds, double bandwidth_eps) {
  if (compounds.size() < 2) throw DataError("build_affinity: need at least 2 compounds");
  if (!(bandwidth_eps > 0.0)) throw UsageError("build_affinity: bandwidth must be positive");
  const Eigen::Index m = static_cast<Eigen::Index>(compounds.size());
  const Eigen::MatrixXd x = unit_spectra(compounds);

  AffinityMatrix aff;
  aff.bandwidth_eps = bandwidth_eps;
  aff.w.resize(m, m);
  // Upper triangle per row, mirrored; each entry depends only on (i,j), so the
  // result does not depend on the worker count.
  parallel_for(static_cast<std::size_t>(m), [&](std::size_t iu) {
    const Eigen::Index i = static_cast<Eigen::Index>(iu);
    aff.w(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double d = std::clamp(1.0 - x.row(i).dot(x.row(j)), 0.0, 2.0);
      aff.w(i, j) = std::exp(-d * d / bandwidth_eps);
    }
  });
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j) aff.w(j, i) = aff.w(i, j);
  return aff;
}

double select_bandwidth(const std::vector<Compound>& compounds) {
  if (compounds.size() < 2) throw DataError("select_bandwidth: need at least 2 compounds");
  const Eigen::Index m = static_cast<Eigen::Index>(compounds.size());
  const Eigen::MatrixXd x = unit_spectra(compounds);
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(m) * (m - 1) / 2);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j)
      dist.push_back(std::clamp(1.0 - x.row(i).dot(x.row(j)), 0.0, 2.0));
  std::sort(dist.begin(), dist.end());
  const std::size_t n = dist.size();
  const double median = (n % 2 == 1) ? dist[n / 2] : 0.5 * (dist[n / 2 - 1] + dist[n / 2]);
  if (!(median > 0.0))
    throw DataError("select_bandwidth: median pairwise cosine distance is zero (duplicate compounds)");
  return median * median;
}

MarkovMatrix renormalize(const AffinityMatrix& aff, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) throw UsageError("renormalize: alpha must be in [0,1]");
  const Eigen::Index m = aff.w.rows();
  if (m != aff.w.cols() || m < 2) throw DataError("renormalize: affinity must be square, m >= 2");

  for (Eigen::Index i = 0; i < m; ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < m; ++j)
      if (j != i) off += aff.w(i, j);
    if (!(off > 0.0))
      throw DataError("renormalize: node " + std::to_string(i) +
                      " is isolated (zero affinity row); increase the bandwidth eps");
  }

  const Eigen::VectorXd q = aff.w.rowwise().sum();
  Eigen::MatrixXd wt = aff.w;
  if (alpha != 0.0) {
    const Eigen::VectorXd qa = q.array().pow(alpha).matrix();
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) wt(i, j) /= qa[i] * qa[j];
  }
  const Eigen::VectorXd degree = wt.rowwise().sum();
  MarkovMatrix markov;
  markov.p_matrix = degree.cwiseInverse().asDiagonal() * wt;
  markov.stationary = degree / degree.sum();
  return markov;
}

bool is_connected(const Eigen::MatrixXd& w) {
  const Eigen::Index m = w.rows();
  if (m == 0) return true;
  std::vector<char> seen(static_cast<std::size_t>(m), 0);
  std::vector<Eigen::Index> stack = {0};
  seen[0] = 1;
  Eigen::Index visited = 1;
  while (!stack.empty()) {
    const Eigen::Index i = stack.back();
    stack.pop_back();
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j == i || seen[j] || !(w(i, j) > 0.0)) continue;
      seen[j] = 1;
      ++visited;
      stack.push_back(j);
    }
  }
  return visited == m;
}

namespace {

struct Spectrum {
  Eigen::VectorXd values;   // nontrivial eigenvalues, descending, clamped to [-1,1]
  Eigen::MatrixXd vectors;  // psi_j columns, stationary-weighted unit norm, sign-fixed
};

// Eigen-decomposes the symmetric conjugate of P with the trivial stationary
// direction shifted to eigenvalue -3. The shift keeps the exclusion of the
// constant eigenvector well defined even when eigenvalue 1 is degenerate
// (disconnected affinity graphs).
Spectrum nontrivial_spectrum(const MarkovMatrix& markov) {
  const Eigen::Index m = markov.p_matrix.rows();
  if (markov.p_matrix.cols() != m || m < 2)
    throw DataError("diffusion_map: markov matrix must be square, m >= 2");
  if (markov.stationary.size() != m || markov.stationary.minCoeff() <= 0.0)
    throw DataError("diffusion_map: stationary distribution must be positive");

  const Eigen::VectorXd sqrt_pi = markov.stationary.cwiseSqrt();
  Eigen::MatrixXd a(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      a(i, j) = sqrt_pi[i] * markov.p_matrix(i, j) / sqrt_pi[j];
  a = 0.5 * (a + a.transpose()).eval();

  // phi_0 = sqrt(pi) has unit norm since pi sums to 1.
  Eigen::MatrixXd shifted = a - 4.0 * (sqrt_pi * sqrt_pi.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(shifted);
  if (solver.info() != Eigen::Success)
    throw NumericalError("diffusion_map: eigensolver failed to converge");
  if (std::abs(solver.eigenvalues()(0) + 3.0) > 1e-6)
    throw NumericalError("diffusion_map: unexpected spectrum; input is not a valid Markov matrix");

  Spectrum s;
  s.values.resize(m - 1);
  s.vectors.resize(m, m - 1);
  for (Eigen::Index j = 0; j < m - 1; ++j) {
    const Eigen::Index src = m - 1 - j;  // ascending -> descending, skip the shifted trivial pair
    s.values[j] = std::clamp(solver.eigenvalues()(src), -1.0, 1.0);
    Eigen::VectorXd psi = solver.eigenvectors().col(src).cwiseQuotient(sqrt_pi);
    Eigen::Index arg = 0;
    psi.cwiseAbs().maxCoeff(&arg);
    if (psi[arg] < 0.0) psi = -psi;
    s.vectors.col(j) = psi;
  }
  return s;
}

DiffusionMap assemble(const Spectrum& s, Eigen::Index d, int t, bool eigenvalue_scaling) {
  DiffusionMap map;
  map.d = d;
  map.t = t;
  map.eigenvalues.resize(d + 1);
  map.eigenvalues[0] = 1.0;
  map.coords.resize(s.vectors.rows(), d);
  for (Eigen::Index j = 0; j < d; ++j) {
    map.eigenvalues[j + 1] = s.values[j];
    const double scale = eigenvalue_scaling ? std::pow(s.values[j], double(t)) : 1.0;
    map.coords.col(j) = scale * s.vectors.col(j);
  }
  return map;
}

}  // namespace

DiffusionMap diffusion_map(const MarkovMatrix& markov, Eigen::Index d, int t,
                           bool eigenvalue_scaling) {
  const Eigen::Index m = markov.p_matrix.rows();
  if (d < 1 || d >= m) throw UsageError("diffusion_map: require 1 <= d <= m-1");
  if (t < 1) throw UsageError("diffusion_map: diffusion time t must be positive");
  return assemble(nontrivial_spectrum(markov), d, t, eigenvalue_scaling);
}

Eigen::Index select_dimension(const Eigen::VectorXd& nontrivial_eigenvalues) {
  const Eigen::Index n = nontrivial_eigenvalues.size();
  if (n < 1) throw UsageError("select_dimension: need at least one eigenvalue");
  if (n == 1) return 1;
  // Largest consecutive gap among l_1..l_10; d is the index left of the gap.
  const Eigen::Index limit = std::min<Eigen::Index>(10, n - 1);
  Eigen::Index best = 1;
  double best_gap = -1.0;
  for (Eigen::Index j = 1; j <= limit; ++j) {
    const double gap = nontrivial_eigenvalues[j - 1] - nontrivial_eigenvalues[j];
    if (gap > best_gap) {
      best_gap = gap;
      best = j;
    }
  }
  return best;
}

DiffusionMap diffusion_map_auto(const MarkovMatrix& markov, int t, bool eigenvalue_scaling) {
  if (t < 1) throw UsageError("diffusion_map: diffusion time t must be positive");
  const Spectrum s = nontrivial_spectrum(markov);
  return assemble(s, select_dimension(s.values), t, eigenvalue_scaling);
}

double diffusion_distance(Eigen::Index i, Eigen::Index j, const DiffusionMap& map) {
  const Eigen::Index m = map.coords.rows();
  if (i < 0 || i >= m || j < 0 || j >= m)
    throw UsageError("diffusion_distance: compound index out of range");
  return (map.coords.row(i) - map.coords.row(j)).norm();
}

}  // namespace fp
