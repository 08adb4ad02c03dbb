#include "fp/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "fp/errors.hpp"

namespace fp {

namespace {

// Transportation simplex over the complete bipartite graph. The basis is a
// spanning tree stored as parent pointers; every tree edge joins one supply
// and one demand node and carries the flow of the corresponding cell.
//
// Nodes 0..n-1 are supplies, n..n+m-1 demands. flow[v] and the edge to
// parent[v] belong to node v (root has neither).
class TransportationSimplex {
 public:
  TransportationSimplex(std::vector<double> supply, std::vector<double> demand,
                        const Eigen::MatrixXd& cost, const std::vector<Eigen::Index>& rows,
                        const std::vector<Eigen::Index>& cols, long max_pivots)
      : a_(std::move(supply)),
        b_(std::move(demand)),
        cost_(cost),
        rows_(rows),
        cols_(cols),
        n_(static_cast<long>(a_.size())),
        m_(static_cast<long>(b_.size())),
        max_pivots_(max_pivots) {}

  double solve() {
    init_northwest();
    const long arc_count = n_ * m_;
    const long block = std::max<long>(64, static_cast<long>(std::sqrt(double(arc_count))));
    const double tol = 1e-12 * (1.0 + cost_.cwiseAbs().maxCoeff());
    long next_arc = 0;

    for (long pivot = 0; pivot < max_pivots_; ++pivot) {
      compute_duals();
      long entering = -1;
      double best = -tol;
      long scanned = 0;
      long arc = next_arc;
      while (scanned < arc_count) {
        const long steps = std::min<long>(block, arc_count - scanned);
        for (long s = 0; s < steps; ++s) {
          const long i = arc / m_;
          const long j = arc % m_;
          const double r = c(i, j) - u_[i] - u_[n_ + j];
          if (r < best) {
            best = r;
            entering = arc;
          }
          if (++arc == arc_count) arc = 0;
        }
        scanned += steps;
        if (entering >= 0) break;
      }
      next_arc = arc;
      if (entering < 0) return objective();  // no improving arc: optimal
      pivot_on(entering / m_, n_ + entering % m_);
    }
    throw NumericalError("transport_cost: pivot limit exceeded (degenerate cycling?)");
  }

 private:
  double c(long i, long j) const { return cost_(rows_[i], cols_[j]); }

  // Edge cost between a node and its parent (one is a supply, one a demand).
  double edge_cost(long v) const {
    const long p = parent_[v];
    return v < n_ ? c(v, p - n_) : c(p, v - n_);
  }

  void init_northwest() {
    const long total = n_ + m_;
    parent_.assign(total, -1);
    flow_.assign(total, 0.0);
    u_.assign(total, 0.0);
    depth_.assign(total, 0);

    long i = 0, j = 0;
    double arem = a_[0], brem = b_[0];
    for (;;) {
      const double x = std::min(arem, brem);
      if (i == 0 && j == 0) {
        parent_[n_] = 0;  // root = supply 0, first demand hangs below it
        flow_[n_] = x;
      }
      arem -= x;
      brem -= x;
      if (i == n_ - 1 && j == m_ - 1) break;
      if ((arem <= brem && i < n_ - 1) || j == m_ - 1) {
        ++i;
        arem = a_[i];
        parent_[i] = n_ + j;
        flow_[i] = std::min(arem, brem);
      } else {
        ++j;
        brem = b_[j];
        parent_[n_ + j] = i;
        flow_[n_ + j] = std::min(arem, brem);
      }
    }
  }

  void compute_duals() {
    const long total = n_ + m_;
    std::vector<std::vector<long>> children(total);
    for (long v = 0; v < total; ++v)
      if (parent_[v] >= 0) children[parent_[v]].push_back(v);
    u_[0] = 0.0;
    depth_[0] = 0;
    std::vector<long> stack = {0};
    while (!stack.empty()) {
      const long v = stack.back();
      stack.pop_back();
      for (long w : children[v]) {
        u_[w] = edge_cost(w) - u_[v];
        depth_[w] = depth_[v] + 1;
        stack.push_back(w);
      }
    }
  }

  void pivot_on(long tail, long head) {
    // Paths from both entering endpoints up to their lowest common ancestor.
    std::vector<long> path_tail, path_head;
    long x = tail, y = head;
    while (depth_[x] > depth_[y]) {
      path_tail.push_back(x);
      x = parent_[x];
    }
    while (depth_[y] > depth_[x]) {
      path_head.push_back(y);
      y = parent_[y];
    }
    while (x != y) {
      path_tail.push_back(x);
      path_head.push_back(y);
      x = parent_[x];
      y = parent_[y];
    }

    // Tree edges at even positions along either path lose theta; the edge of
    // path node k is the edge (node, parent). Both alternations start at the
    // entering endpoints with a decrease.
    double theta = std::numeric_limits<double>::infinity();
    long leave = -1;
    bool leave_on_tail = true;
    auto scan = [&](const std::vector<long>& path, bool is_tail) {
      for (std::size_t k = 0; k < path.size(); k += 2) {
        const long v = path[k];
        if (flow_[v] <= theta) {
          theta = flow_[v];
          leave = v;
          leave_on_tail = is_tail;
        }
      }
    };
    scan(path_tail, true);
    scan(path_head, false);
    if (leave < 0) throw NumericalError("transport_cost: malformed pivot cycle");

    for (std::size_t k = 0; k < path_tail.size(); ++k)
      flow_[path_tail[k]] += (k % 2 == 0) ? -theta : theta;
    for (std::size_t k = 0; k < path_head.size(); ++k)
      flow_[path_head[k]] += (k % 2 == 0) ? -theta : theta;

    // Re-root the cut subtree at the entering endpoint on its side.
    long cur = leave_on_tail ? tail : head;
    long new_parent = leave_on_tail ? head : tail;
    double new_flow = theta;
    for (;;) {
      const long old_parent = parent_[cur];
      const double old_flow = flow_[cur];
      parent_[cur] = new_parent;
      flow_[cur] = new_flow;
      if (cur == leave) break;
      new_parent = cur;
      new_flow = old_flow;
      cur = old_parent;
    }
  }

  double objective() const {
    double total = 0.0;
    for (long v = 0; v < n_ + m_; ++v)
      if (parent_[v] >= 0) total += flow_[v] * edge_cost(v);
    return total;
  }

  std::vector<double> a_, b_;
  const Eigen::MatrixXd& cost_;
  const std::vector<Eigen::Index>& rows_;
  const std::vector<Eigen::Index>& cols_;
  long n_, m_;
  long max_pivots_;

  std::vector<long> parent_;
  std::vector<double> flow_;
  std::vector<double> u_;
  std::vector<long> depth_;
};

}  // namespace

double transport_cost(const Eigen::VectorXd& supply, const Eigen::VectorXd& demand,
                      const Eigen::MatrixXd& cost, long max_pivots) {
  if (cost.rows() != supply.size() || cost.cols() != demand.size())
    throw UsageError("transport_cost: cost matrix shape does not match marginals");
  for (Eigen::Index i = 0; i < supply.size(); ++i)
    if (!(supply[i] >= 0.0) || !std::isfinite(supply[i]))
      throw DataError("transport_cost: supplies must be nonnegative and finite");
  for (Eigen::Index j = 0; j < demand.size(); ++j)
    if (!(demand[j] >= 0.0) || !std::isfinite(demand[j]))
      throw DataError("transport_cost: demands must be nonnegative and finite");

  const double sa = supply.sum();
  const double sb = demand.sum();
  if (!(sa > 0.0) || !(sb > 0.0)) throw DataError("transport_cost: marginals must carry mass");
  if (std::abs(sa - sb) > 1e-6 * std::max(sa, sb))
    throw DataError("transport_cost: supply and demand totals differ");

  // Zero-mass bins never carry flow; drop them.
  std::vector<Eigen::Index> rows, cols;
  std::vector<double> a, b;
  for (Eigen::Index i = 0; i < supply.size(); ++i)
    if (supply[i] > 0.0) {
      rows.push_back(i);
      a.push_back(supply[i]);
    }
  for (Eigen::Index j = 0; j < demand.size(); ++j)
    if (demand[j] > 0.0) {
      cols.push_back(j);
      b.push_back(demand[j] * (sa / sb));  // match totals exactly up to rounding
    }

  if (max_pivots <= 0)
    max_pivots = std::max<long>(100000, 100 * static_cast<long>(a.size() + b.size()));
  TransportationSimplex simplex(std::move(a), std::move(b), cost, rows, cols, max_pivots);
  return simplex.solve();
}

}  // namespace fp
