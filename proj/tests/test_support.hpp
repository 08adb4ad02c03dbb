#pragma once

// Test-only oracles, independent of the library implementation paths they
// check: a dense two-phase simplex LP solver (EMD oracle), exact integer
// combinatorics (per-bin test oracle), brute-force BH threshold search, and a
// minimal XML well-formedness scanner.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fp/ingest.hpp"
#include "fp/rng.hpp"
#include "fp/types.hpp"

namespace oracle {

// min c.x  s.t.  A x = b, x >= 0, via the revised simplex with Bland's rule
// (guaranteed termination). Sized for tiny test problems only.
inline double lp_minimize(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                          const Eigen::VectorXd& c) {
  const Eigen::Index rows = a.rows();
  const Eigen::Index cols = a.cols();
  Eigen::MatrixXd ext(rows, cols + rows);
  ext.leftCols(cols) = a;
  ext.rightCols(rows) = Eigen::MatrixXd::Identity(rows, rows);
  for (Eigen::Index i = 0; i < rows; ++i)
    if (b[i] < 0.0) throw std::runtime_error("lp oracle: negative rhs");

  std::vector<Eigen::Index> basis(rows);
  for (Eigen::Index i = 0; i < rows; ++i) basis[i] = cols + i;

  auto run_phase = [&](const Eigen::VectorXd& cost, bool allow_artificial_entering) {
    for (int iter = 0; iter < 100000; ++iter) {
      Eigen::MatrixXd bmat(rows, rows);
      for (Eigen::Index i = 0; i < rows; ++i) bmat.col(i) = ext.col(basis[i]);
      const Eigen::FullPivLU<Eigen::MatrixXd> lu(bmat);
      const Eigen::VectorXd xb = lu.solve(b);
      Eigen::VectorXd cb(rows);
      for (Eigen::Index i = 0; i < rows; ++i) cb[i] = cost[basis[i]];
      const Eigen::VectorXd y = lu.transpose().solve(cb);

      Eigen::Index entering = -1;
      const Eigen::Index limit = allow_artificial_entering ? cols + rows : cols;
      for (Eigen::Index j = 0; j < limit; ++j) {
        if (std::find(basis.begin(), basis.end(), j) != basis.end()) continue;
        if (cost[j] - y.dot(ext.col(j)) < -1e-9) {
          entering = j;  // Bland: lowest eligible index
          break;
        }
      }
      if (entering < 0) {
        double obj = 0.0;
        for (Eigen::Index i = 0; i < rows; ++i) obj += cost[basis[i]] * xb[i];
        return obj;
      }

      const Eigen::VectorXd dir = lu.solve(ext.col(entering));
      Eigen::Index leaving = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < rows; ++i) {
        if (dir[i] > 1e-12) {
          const double ratio = std::max(xb[i], 0.0) / dir[i];
          if (ratio < best_ratio - 1e-15 ||
              (ratio < best_ratio + 1e-15 && (leaving < 0 || basis[i] < basis[leaving]))) {
            best_ratio = ratio;
            leaving = i;
          }
        }
      }
      if (leaving < 0) throw std::runtime_error("lp oracle: unbounded");
      basis[leaving] = entering;
    }
    throw std::runtime_error("lp oracle: iteration limit");
  };

  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(cols + rows);
  phase1.tail(rows).setOnes();
  if (run_phase(phase1, true) > 1e-7) throw std::runtime_error("lp oracle: infeasible");

  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(cols + rows);
  phase2.head(cols) = c;
  return run_phase(phase2, false);
}

// Exact transport cost through the generic LP oracle.
inline double lp_transport(const Eigen::VectorXd& supply, const Eigen::VectorXd& demand,
                           const Eigen::MatrixXd& cost) {
  const Eigen::Index n = supply.size();
  const Eigen::Index m = demand.size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + m, n * m);
  Eigen::VectorXd b(n + m);
  Eigen::VectorXd c(n * m);
  for (Eigen::Index i = 0; i < n; ++i) {
    b[i] = supply[i];
    for (Eigen::Index j = 0; j < m; ++j) {
      a(i, i * m + j) = 1.0;
      a(n + j, i * m + j) = 1.0;
      c[i * m + j] = cost(i, j);
    }
  }
  for (Eigen::Index j = 0; j < m; ++j) b[n + j] = demand[j];
  return lp_minimize(a, b, c);
}

// Exact binomial coefficient; valid in double for the sizes tests use.
inline double choose_exact(long n, long k) {
  if (k < 0 || k > n) return 0.0;
  double result = 1.0;
  for (long i = 0; i < k; ++i) result = result * double(n - i) / double(i + 1);
  return result;
}

// Two-sided exact conditional p-value for the 2x2 exceedance table, by full
// enumeration with exact coefficients.
inline double exact_two_sided_p(long n_a, long n_b, long t, long x) {
  const long n = n_a + n_b;
  const double denom = choose_exact(n, t);
  auto pmf = [&](long k) { return choose_exact(n_a, k) * choose_exact(n_b, t - k) / denom; };
  const double observed = pmf(x);
  double p = 0.0;
  for (long k = std::max<long>(0, t - n_b); k <= std::min(n_a, t); ++k)
    if (pmf(k) <= observed * (1.0 + 1e-12)) p += pmf(k);
  return std::min(p, 1.0);
}

// BH by brute-force threshold search: the largest rejection set of the form
// {p <= c} with c = q r / K and r = |set|.
inline std::vector<std::size_t> bh_bruteforce(const std::vector<double>& p, double q) {
  const std::size_t k = p.size();
  std::size_t best = 0;
  for (std::size_t r = 1; r <= k; ++r) {
    const double threshold = q * double(r) / double(k);
    std::size_t count = 0;
    for (const double v : p)
      if (v <= threshold) ++count;
    if (count >= r) best = std::max(best, r);
  }
  // rejection set = indices of the `best` smallest p-values
  std::vector<std::size_t> order(k);
  for (std::size_t i = 0; i < k; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  std::vector<std::size_t> out(order.begin(), order.begin() + best);
  std::sort(out.begin(), out.end());
  return out;
}

// Minimal XML well-formedness scanner: balanced matching tags, quoted
// attribute values, no stray '<' in text.
inline bool xml_well_formed(const std::string& doc) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  const std::size_t n = doc.size();
  while (i < n) {
    if (doc[i] != '<') {
      ++i;
      continue;
    }
    if (doc.compare(i, 2, "<?") == 0) {
      const auto end = doc.find("?>", i);
      if (end == std::string::npos) return false;
      i = end + 2;
      continue;
    }
    if (doc.compare(i, 4, "<!--") == 0) {
      const auto end = doc.find("-->", i);
      if (end == std::string::npos) return false;
      i = end + 3;
      continue;
    }
    const auto end = doc.find('>', i);
    if (end == std::string::npos) return false;
    std::string tag = doc.substr(i + 1, end - i - 1);
    // quoted attributes: quotes must pair up
    if (std::count(tag.begin(), tag.end(), '"') % 2 != 0) return false;
    bool closing = !tag.empty() && tag[0] == '/';
    bool self_closing = !tag.empty() && tag.back() == '/';
    if (closing) {
      const std::string name = tag.substr(1);
      if (stack.empty() || stack.back() != name) return false;
      stack.pop_back();
    } else if (!self_closing) {
      const auto space = tag.find_first_of(" \t\n");
      stack.push_back(space == std::string::npos ? tag : tag.substr(0, space));
    }
    i = end + 1;
  }
  return stack.empty();
}

inline std::size_t count_occurrences(const std::string& text, const std::string& needle) {
  std::size_t count = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1))
    ++count;
  return count;
}

// Random histogram on the simplex.
inline Eigen::VectorXd random_simplex(fp::Rng& rng, Eigen::Index k) {
  Eigen::VectorXd v(k);
  for (Eigen::Index i = 0; i < k; ++i) v[i] = rng.uniform() + 1e-12;
  return v / v.sum();
}

// Tiny hand-rolled dataset: spectra given explicitly, uniform fingerprint.
inline fp::Dataset tiny_dataset(const std::vector<Eigen::VectorXd>& spectra) {
  fp::Dataset ds;
  ds.p = spectra.empty() ? 0 : spectra.front().size();
  for (std::size_t i = 0; i < spectra.size(); ++i)
    ds.compounds.push_back(fp::Compound{"c" + std::to_string(i), 100.0, 1.0, spectra[i]});
  fp::Fingerprint fprint;
  fprint.sample_id = "s0";
  for (std::size_t i = 0; i < spectra.size(); ++i)
    fprint.entries.push_back(fp::FingerprintEntry{i, 1.0 / double(spectra.size())});
  ds.fingerprints.push_back(fprint);
  return ds;
}

}  // namespace oracle
