#include "fp/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fp/errors.hpp"
#include "fp/parallel.hpp"
#include "fp/rng.hpp"

namespace fp {

namespace {

void check_binary_labels(const std::vector<int>& labels, std::size_t n, const char* what) {
  if (labels.size() != n)
    throw UsageError(std::string(what) + ": label count does not match sample count");
  bool pos = false, neg = false;
  for (int y : labels) {
    if (y == 1)
      pos = true;
    else if (y == -1)
      neg = true;
    else
      throw UsageError(std::string(what) + ": labels must be +1 or -1");
  }
  if (!pos || !neg) throw DataError(std::string(what) + ": both classes must be present");
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// log(1 + e^z) without overflow
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double klr_objective(const Eigen::MatrixXd& gram, const std::vector<int>& labels,
                     const Eigen::VectorXd& alpha, double bias, double lambda) {
  const Eigen::VectorXd f = gram * alpha + Eigen::VectorXd::Constant(gram.rows(), bias);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) loss += softplus(-labels[i] * f[i]);
  return loss + 0.5 * lambda * alpha.dot(gram * alpha);
}

double group_statistic(const Eigen::MatrixXd& d, const std::vector<int>& labels) {
  double cross = 0.0, within = 0.0;
  long n_cross = 0, n_within = 0;
  const Eigen::Index n = d.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (labels[i] == labels[j]) {
        within += d(i, j);
        ++n_within;
      } else {
        cross += d(i, j);
        ++n_cross;
      }
    }
  if (n_cross == 0) return 0.0;
  const double mean_within = n_within > 0 ? within / double(n_within) : 0.0;
  return cross / double(n_cross) - mean_within;
}

// C(n, k) exactly in double for the sizes used here (n <= ~1000).
double log_choose(long n, long k) {
  return std::lgamma(double(n + 1)) - std::lgamma(double(k + 1)) - std::lgamma(double(n - k + 1));
}

// Two-sided exact conditional test on the 2x2 median-exceedance table:
// X ~ Hypergeometric(n, n_a, t) where t of the n pooled values exceed the
// pooled median. Sums pmf(k) over all k at most as likely as the observed X.
double hypergeometric_two_sided(long n_a, long n_b, long t, long x) {
  const long n = n_a + n_b;
  const long lo = std::max<long>(0, t - n_b);
  const long hi = std::min(n_a, t);
  if (x < lo || x > hi) return 1.0;
  const double log_denom = log_choose(n, t);
  auto pmf = [&](long k) {
    return std::exp(log_choose(n_a, k) + log_choose(n_b, t - k) - log_denom);
  };
  const double observed = pmf(x);
  double p = 0.0;
  for (long k = lo; k <= hi; ++k) {
    const double pk = pmf(k);
    if (pk <= observed * (1.0 + 1e-12)) p += pk;
  }
  return std::min(p, 1.0);
}

}  // namespace

Eigen::MatrixXd gram_from_gdd(const DistanceMatrix& dist, double sigma) {
  if (!(sigma > 0.0)) throw UsageError("gram_from_gdd: sigma must be positive");
  return (-dist.values.array().square() / (2.0 * sigma * sigma)).exp().matrix();
}

KlrModel klr_fit(const Eigen::MatrixXd& gram, const std::vector<int>& labels, double lambda,
                 int max_iter, double tol, double sigma, std::vector<std::string> training_ids) {
  const Eigen::Index n = gram.rows();
  if (gram.cols() != n) throw UsageError("klr_fit: gram matrix must be square");
  check_binary_labels(labels, static_cast<std::size_t>(n), "klr_fit");
  if (lambda < 0.0) throw UsageError("klr_fit: lambda must be nonnegative");
  if (!(tol > 0.0)) throw UsageError("klr_fit: tol must be positive");

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  double bias = 0.0;
  double objective = klr_objective(gram, labels, alpha, bias, lambda);

  auto make_model = [&] {
    KlrModel model;
    model.alphas = alpha;
    model.bias = bias;
    model.sigma = sigma;
    model.lambda = lambda;
    model.training_ids = std::move(training_ids);
    return model;
  };

  for (int iter = 0; iter < max_iter; ++iter) {
    const Eigen::VectorXd f = gram * alpha + Eigen::VectorXd::Constant(n, bias);
    Eigen::VectorXd prob(n), weight(n), residual(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = std::clamp(sigmoid(f[i]), 1e-12, 1.0 - 1e-12);
      prob[i] = p;
      weight[i] = p * (1.0 - p);
      residual[i] = p - (labels[i] > 0 ? 1.0 : 0.0);
    }

    Eigen::MatrixXd h(n + 1, n + 1);
    const Eigen::MatrixXd wg = weight.asDiagonal() * gram;
    h.topLeftCorner(n, n) = gram * wg + lambda * gram;
    h.topRightCorner(n, 1) = gram * weight;
    h.bottomLeftCorner(1, n) = (gram * weight).transpose();
    h(n, n) = weight.sum();

    Eigen::VectorXd grad(n + 1);
    grad.head(n) = gram * (residual + lambda * alpha);
    grad[n] = residual.sum();

    // Newton with step halving; if the undamped step is not a descent
    // direction (rank-deficient or slightly indefinite gram), retry with
    // growing Levenberg damping, which bends the step toward the gradient.
    const double scale = h.diagonal().cwiseAbs().maxCoeff() + 1.0;
    bool improved = false;
    Eigen::VectorXd next_alpha = alpha;
    double next_bias = bias, next_objective = objective;
    double damping = 0.0;
    for (int attempt = 0; attempt < 10 && !improved; ++attempt) {
      Eigen::MatrixXd damped = h;
      if (attempt > 0) {
        damping = (attempt == 1) ? 1e-8 * scale : damping * 100.0;
        damped.diagonal().array() += damping;
      }
      const Eigen::VectorXd delta = damped.ldlt().solve(-grad);
      if (!delta.allFinite()) continue;
      for (double step = 1.0; step >= 1e-8; step *= 0.5) {
        const Eigen::VectorXd try_alpha = alpha + step * delta.head(n);
        const double try_bias = bias + step * delta[n];
        const double try_objective = klr_objective(gram, labels, try_alpha, try_bias, lambda);
        if (try_objective <= objective + 1e-12) {
          next_alpha = try_alpha;
          next_bias = try_bias;
          next_objective = try_objective;
          improved = true;
          break;
        }
      }
    }
    if (!improved) {
      if (grad.cwiseAbs().maxCoeff() <= 1e-9 * scale) return make_model();  // stationary
      throw NumericalError("klr_fit: no descent direction found (is the gram PSD?)");
    }

    const double change = std::max((next_alpha - alpha).cwiseAbs().maxCoeff(),
                                   std::abs(next_bias - bias));
    alpha = next_alpha;
    bias = next_bias;
    objective = next_objective;
    if (change < tol) return make_model();
  }
  throw NumericalError("klr_fit: IRLS did not converge in " + std::to_string(max_iter) +
                       " iterations");
}

double klr_predict(const KlrModel& model, const Eigen::VectorXd& gdd_to_training) {
  if (gdd_to_training.size() != model.alphas.size())
    throw UsageError("klr_predict: expected " + std::to_string(model.alphas.size()) +
                     " distances, got " + std::to_string(gdd_to_training.size()));
  const Eigen::VectorXd kernel =
      (-gdd_to_training.array().square() / (2.0 * model.sigma * model.sigma)).exp();
  return sigmoid(model.alphas.dot(kernel) + model.bias);
}

std::vector<double> default_sigma_grid(const DistanceMatrix& dist) {
  std::vector<double> positive;
  const Eigen::Index n = dist.values.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (dist.values(i, j) > 0.0) positive.push_back(dist.values(i, j));
  double scale = 1.0;
  if (!positive.empty()) {
    std::sort(positive.begin(), positive.end());
    scale = positive[positive.size() / 2];
  }
  return {0.5 * scale, scale, 2.0 * scale};
}

CvResult cross_validate(const DistanceMatrix& dist, const std::vector<int>& labels, int folds,
                        std::span<const double> sigma_grid, std::span<const double> lambda_grid,
                        std::uint64_t seed) {
  const Eigen::Index n = dist.values.rows();
  check_binary_labels(labels, static_cast<std::size_t>(n), "cross_validate");
  if (folds < 2) throw UsageError("cross_validate: folds must be at least 2");
  if (sigma_grid.empty() || lambda_grid.empty())
    throw UsageError("cross_validate: empty hyperparameter grid");
  for (const double sigma : sigma_grid)
    if (!(sigma > 0.0)) throw UsageError("cross_validate: sigma grid values must be positive");
  for (const double lambda : lambda_grid)
    if (lambda < 0.0) throw UsageError("cross_validate: lambda grid values must be nonnegative");

  std::vector<Eigen::Index> pos, neg;
  for (Eigen::Index i = 0; i < n; ++i) (labels[i] > 0 ? pos : neg).push_back(i);
  if (static_cast<int>(pos.size()) < folds || static_cast<int>(neg.size()) < folds)
    throw DataError("cross_validate: too few samples per class for " + std::to_string(folds) +
                    "-fold stratification");

  Rng rng(seed);
  Rng pos_rng = rng.substream(0);
  Rng neg_rng = rng.substream(1);
  pos_rng.shuffle(pos);
  neg_rng.shuffle(neg);
  std::vector<int> fold_of(static_cast<std::size_t>(n), 0);
  for (std::size_t i = 0; i < pos.size(); ++i) fold_of[pos[i]] = static_cast<int>(i % folds);
  for (std::size_t i = 0; i < neg.size(); ++i) fold_of[neg[i]] = static_cast<int>(i % folds);

  CvResult best{-1.0, sigma_grid[0], lambda_grid[0]};
  for (const double sigma : sigma_grid) {
    for (const double lambda : lambda_grid) {
      long correct = 0;
      bool failed = false;
      for (int fold = 0; fold < folds && !failed; ++fold) {
        std::vector<Eigen::Index> train, test;
        for (Eigen::Index i = 0; i < n; ++i) (fold_of[i] == fold ? test : train).push_back(i);
        const Eigen::Index nt = static_cast<Eigen::Index>(train.size());
        Eigen::MatrixXd sub(nt, nt);
        std::vector<int> sub_labels(train.size());
        for (Eigen::Index a = 0; a < nt; ++a) {
          sub_labels[a] = labels[train[a]];
          for (Eigen::Index b = 0; b < nt; ++b) sub(a, b) = dist.values(train[a], train[b]);
        }
        const Eigen::MatrixXd gram =
            (-sub.array().square() / (2.0 * sigma * sigma)).exp().matrix();
        KlrModel model;
        try {
          model = klr_fit(gram, sub_labels, lambda, 100, 1e-8, sigma);
        } catch (const NumericalError&) {
          failed = true;  // this grid cell is not usable; skip it
          break;
        }
        for (const Eigen::Index i : test) {
          Eigen::VectorXd d(nt);
          for (Eigen::Index a = 0; a < nt; ++a) d[a] = dist.values(i, train[a]);
          const int predicted = klr_predict(model, d) >= 0.5 ? 1 : -1;
          if (predicted == labels[i]) ++correct;
        }
      }
      if (failed) continue;
      const double accuracy = double(correct) / double(n);
      if (accuracy > best.accuracy) best = CvResult{accuracy, sigma, lambda};
    }
  }
  if (best.accuracy < 0.0)
    throw NumericalError("cross_validate: no hyperparameter grid cell converged");
  return best;
}

PermutationResult permutation_test(const DistanceMatrix& dist, const std::vector<int>& labels,
                                   int n_perm, std::uint64_t seed) {
  const Eigen::Index n = dist.values.rows();
  check_binary_labels(labels, static_cast<std::size_t>(n), "permutation_test");
  if (n_perm < 99) throw UsageError("permutation_test: n_perm must be at least 99");

  const double observed = group_statistic(dist.values, labels);
  std::vector<char> exceeds(static_cast<std::size_t>(n_perm), 0);
  Rng root(seed);
  parallel_for(static_cast<std::size_t>(n_perm), [&](std::size_t r) {
    Rng rng = root.substream(r);
    std::vector<int> permuted = labels;
    rng.shuffle(permuted);
    exceeds[r] = group_statistic(dist.values, permuted) >= observed ? 1 : 0;
  });
  const long count = std::accumulate(exceeds.begin(), exceeds.end(), 0L);

  PermutationResult result;
  result.statistic = observed;
  result.n_permutations = n_perm;
  result.p_value = double(1 + count) / double(1 + n_perm);
  return result;
}

PerBinResult per_bin_binomial(const std::vector<Histogram>& hists_a,
                              const std::vector<Histogram>& hists_b, double q) {
  if (hists_a.empty() || hists_b.empty())
    throw DataError("per_bin_binomial: both groups must be nonempty");
  if (!(q > 0.0) || q > 1.0) throw UsageError("per_bin_binomial: q must be in (0,1]");
  const Eigen::Index k = hists_a.front().values.size();
  for (const auto* group : {&hists_a, &hists_b})
    for (const auto& h : *group)
      if (h.values.size() != k) throw DataError("per_bin_binomial: histogram K mismatch");

  const long n_a = static_cast<long>(hists_a.size());
  const long n_b = static_cast<long>(hists_b.size());
  const long n = n_a + n_b;

  PerBinResult result;
  result.per_bin.resize(static_cast<std::size_t>(k));
  std::vector<double> p_values(static_cast<std::size_t>(k), 1.0);
  parallel_for(static_cast<std::size_t>(k), [&](std::size_t bu) {
    const Eigen::Index b = static_cast<Eigen::Index>(bu);
    std::vector<double> pooled;
    pooled.reserve(static_cast<std::size_t>(n));
    for (const auto& h : hists_a) pooled.push_back(h.values[b]);
    for (const auto& h : hists_b) pooled.push_back(h.values[b]);
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    const double median = (n % 2 == 1) ? sorted[n / 2]
                                       : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    long x = 0, t = 0;
    for (long i = 0; i < n; ++i) {
      if (pooled[static_cast<std::size_t>(i)] > median) {
        ++t;
        if (i < n_a) ++x;
      }
    }
    const double p = hypergeometric_two_sided(n_a, n_b, t, x);
    const double share_a = double(x) / double(n_a);
    const double share_b = double(t - x) / double(n_b);
    int direction = 0;
    if (share_a > share_b)
      direction = 1;
    else if (share_a < share_b)
      direction = -1;
    result.per_bin[bu] = BinTest{b, p, direction};
    p_values[bu] = p;
  });

  for (const std::size_t idx : benjamini_hochberg(p_values, q))
    result.significant_bins.push_back(static_cast<Eigen::Index>(idx));
  return result;
}

TestReport run_test_suite(const DistanceMatrix& dist, const std::vector<int>& labels,
                          const std::vector<Histogram>& hists_a,
                          const std::vector<Histogram>& hists_b, int n_perm, double q,
                          std::uint64_t seed) {
  const PermutationResult perm = permutation_test(dist, labels, n_perm, seed);
  TestReport report;
  report.global_p = perm.p_value;
  report.statistic = perm.statistic;
  report.n_permutations = perm.n_permutations;
  report.q = q;
  report.bins = per_bin_binomial(hists_a, hists_b, q);
  return report;
}

std::vector<std::size_t> benjamini_hochberg(const std::vector<double>& p_values, double q) {
  const std::size_t k = p_values.size();
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::size_t cutoff = 0;  // number of rejections
  for (std::size_t r = k; r >= 1; --r) {
    if (p_values[order[r - 1]] <= q * double(r) / double(k)) {
      cutoff = r;
      break;
    }
  }
  std::vector<std::size_t> significant(order.begin(), order.begin() + cutoff);
  std::sort(significant.begin(), significant.end());
  return significant;
}

}  // namespace fp
