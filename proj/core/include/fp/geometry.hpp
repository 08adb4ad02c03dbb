#pragma once

#include <vector>

#include <Eigen/Dense>

#include "fp/types.hpp"

namespace fp {

// Gaussian affinity over cosine distances between compound spectra.
// Symmetric, unit diagonal, entries in [0,1].
struct AffinityMatrix {
  Eigen::MatrixXd w;
  double bandwidth_eps = 0.0;
  double alpha = 1.0;  // density renormalization exponent used downstream
};

struct MarkovMatrix {
  Eigen::MatrixXd p_matrix;     // row-stochastic
  Eigen::VectorXd stationary;   // positive, sums to 1, pi^T P = pi^T
};

// Eigenvalue-rescaled spectral embedding. Row i of coords is Psi(x_i); the
// trivial constant eigenvector is excluded. eigenvalues = (1, l_1, ..., l_d).
struct DiffusionMap {
  Eigen::MatrixXd coords;       // m x d
  Eigen::VectorXd eigenvalues;  // length d+1, descending, eigenvalues[0] = 1
  int t = 1;                    // diffusion time
  Eigen::Index d = 0;           // embedding dimension
};

// 1 - <x,y>/(|x||y|). In [0,1] for nonnegative spectra. Errors on zero vectors.
double cosine_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// w_ij = exp(-cosine_distance(x_i,x_j)^2 / eps)
AffinityMatrix build_affinity(const std::vector<Compound>& compounds, double bandwidth_eps);

// Median heuristic: square of the median pairwise cosine distance.
double select_bandwidth(const std::vector<Compound>& compounds);

// Density renormalization with exponent alpha, then row normalization:
// q_i = sum_j w_ij, wt_ij = w_ij / (q_i q_j)^alpha, P = D^-1 wt.
// Errors on isolated nodes (zero off-diagonal affinity row).
MarkovMatrix renormalize(const AffinityMatrix& aff, double alpha);

// True when every node can reach every other through nonzero affinities.
bool is_connected(const Eigen::MatrixXd& w);

// Spectral embedding via the symmetric conjugate D^{1/2} P D^{-1/2}
// (D = diag(stationary)). Column j of coords is l_j^t psi_j; psi_j has unit
// norm under the stationary-weighted inner product, and its sign is fixed so
// the entry of largest magnitude is positive. Set eigenvalue_scaling=false to
// drop the l_j^t factor.
DiffusionMap diffusion_map(const MarkovMatrix& markov, Eigen::Index d, int t,
                           bool eigenvalue_scaling = true);

// As above but with d chosen by the largest spectral gap among l_1..l_10.
DiffusionMap diffusion_map_auto(const MarkovMatrix& markov, int t, bool eigenvalue_scaling = true);

// Gap heuristic on the nontrivial eigenvalues (descending, excluding l_0 = 1).
Eigen::Index select_dimension(const Eigen::VectorXd& nontrivial_eigenvalues);

double diffusion_distance(Eigen::Index i, Eigen::Index j, const DiffusionMap& map);

}  // namespace fp
