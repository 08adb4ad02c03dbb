#pragma once

#include <Eigen/Dense>

namespace fp {

// Exact minimum-cost transport between two nonnegative vectors with equal
// totals, solved by the network simplex specialized to the complete bipartite
// transportation graph. cost(i, j) is the unit cost of moving mass from
// supply bin i to demand bin j. max_pivots = 0 picks an automatic cap;
// exceeding the cap raises NumericalError.
double transport_cost(const Eigen::VectorXd& supply, const Eigen::VectorXd& demand,
                      const Eigen::MatrixXd& cost, long max_pivots = 0);

}  // namespace fp
