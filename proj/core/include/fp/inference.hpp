#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fp/codebook.hpp"
#include "fp/metrics.hpp"

namespace fp {

// Kernel logistic regression in dual form over a Gaussian kernel of GDD.
struct KlrModel {
  Eigen::VectorXd alphas;  // dual coefficients, one per training sample
  double bias = 0.0;
  double sigma = 1.0;   // Gaussian bandwidth over GDD
  double lambda = 0.0;  // ridge penalty
  std::vector<std::string> training_ids;
};

// G_ij = exp(-d_ij^2 / (2 sigma^2)); symmetric with unit diagonal.
Eigen::MatrixXd gram_from_gdd(const DistanceMatrix& dist, double sigma);

// Minimizes sum_i log(1+exp(-y_i (G a + b)_i)) + (lambda/2) a^T G a by
// Newton/IRLS with step halving, zero initialization. labels are +/-1.
// Throws NumericalError when max_iter is exhausted before the coefficient
// change drops below tol.
KlrModel klr_fit(const Eigen::MatrixXd& gram, const std::vector<int>& labels, double lambda,
                 int max_iter = 100, double tol = 1e-8, double sigma = 1.0,
                 std::vector<std::string> training_ids = {});

// P(label = +1) from GDD distances to the training samples.
double klr_predict(const KlrModel& model, const Eigen::VectorXd& gdd_to_training);

struct CvResult {
  double accuracy = 0.0;
  double sigma = 0.0;
  double lambda = 0.0;
};

// Stratified k-fold accuracy maximized over the (sigma, lambda) grid.
CvResult cross_validate(const DistanceMatrix& dist, const std::vector<int>& labels, int folds,
                        std::span<const double> sigma_grid, std::span<const double> lambda_grid,
                        std::uint64_t seed);

// Sigma grid scaled from the median positive distance (for CLI defaults).
std::vector<double> default_sigma_grid(const DistanceMatrix& dist);

struct PermutationResult {
  double statistic = 0.0;  // mean cross-group minus mean within-group distance
  double p_value = 1.0;    // add-one permutation p-value
  int n_permutations = 0;
};

// Label-permutation two-sample test on the distance matrix. Permutations run
// on per-replicate RNG substreams, so the result is independent of the worker
// count.
PermutationResult permutation_test(const DistanceMatrix& dist, const std::vector<int>& labels,
                                   int n_perm, std::uint64_t seed);

struct BinTest {
  Eigen::Index bin = 0;
  double p_value = 1.0;
  int direction = 0;  // +1 group A overrepresented above the pooled median
};

struct PerBinResult {
  std::vector<BinTest> per_bin;
  std::vector<Eigen::Index> significant_bins;  // BH at level q
};

// Median-exceedance exact test per bin: counts of group-A samples above the
// pooled per-bin median, assessed by the exact conditional (hypergeometric)
// two-sided test; Benjamini-Hochberg across bins at level q.
PerBinResult per_bin_binomial(const std::vector<Histogram>& hists_a,
                              const std::vector<Histogram>& hists_b, double q);

// Indices surviving the BH step-up procedure at level q.
std::vector<std::size_t> benjamini_hochberg(const std::vector<double>& p_values, double q);

struct TestReport {
  double global_p = 1.0;
  double statistic = 0.0;
  int n_permutations = 0;
  double q = 0.05;
  PerBinResult bins;
};

// Global permutation test plus the per-bin suite in one report. labels are
// +/-1 aligned with dist; hists_a holds the -1 group's histograms.
TestReport run_test_suite(const DistanceMatrix& dist, const std::vector<int>& labels,
                          const std::vector<Histogram>& hists_a,
                          const std::vector<Histogram>& hists_b, int n_perm, double q,
                          std::uint64_t seed);

}  // namespace fp
