#pragma once

// Piecewise-constant Huber regression on a fixed partition of the real line, and its
// reduction to sparse linear regression through the indicator basis E_j = I_j u ... u I_d.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "agghoo/errors.hpp"
#include "agghoo/huber.hpp"
#include "agghoo/model_select.hpp"

namespace agghoo {

/// d intervals (-inf, b_1), [b_1, b_2), ..., [b_{d-1}, +inf).
struct IntervalPartition {
  std::vector<double> boundaries;

  IntervalPartition() = default;
  explicit IntervalPartition(std::vector<double> b) : boundaries(std::move(b)) { validate(); }

  void validate() const {
    for (std::size_t i = 0; i < boundaries.size(); ++i) {
      if (!std::isfinite(boundaries[i])) throw DomainError("partition boundaries must be finite");
      if (i > 0 && !(boundaries[i] > boundaries[i - 1])) throw DomainError("partition boundaries must increase");
    }
  }

  Eigen::Index d() const noexcept { return static_cast<Eigen::Index>(boundaries.size()) + 1; }

  Eigen::Index locate(double u) const {
    if (!std::isfinite(u)) throw DomainError("partition: non-finite point");
    return static_cast<Eigen::Index>(std::upper_bound(boundaries.begin(), boundaries.end(), u) - boundaries.begin());
  }

  double left(Eigen::Index j) const {
    return j == 0 ? -std::numeric_limits<double>::infinity() : boundaries[static_cast<std::size_t>(j - 1)];
  }
  double right(Eigen::Index j) const {
    return j + 1 == d() ? std::numeric_limits<double>::infinity() : boundaries[static_cast<std::size_t>(j)];
  }
};

struct StepFunction {
  Eigen::VectorXd u;  // level per interval

  int jumps() const {
    int k = 0;
    for (Eigen::Index j = 0; j + 1 < u.size(); ++j) k += u(j + 1) != u(j) ? 1 : 0;
    return k;
  }

  /// Intervals j (0-based) such that u_{j+1} != u_j, i.e. a jump at the left end of interval j+1.
  std::vector<Eigen::Index> jump_indices() const {
    std::vector<Eigen::Index> out;
    for (Eigen::Index j = 0; j + 1 < u.size(); ++j) {
      if (u(j + 1) != u(j)) out.push_back(j);
    }
    return out;
  }

  double operator()(const IntervalPartition& p, double x) const { return u(p.locate(x)); }
};

namespace detail {

struct SegmentDp {
  Eigen::Index d = 0;
  std::vector<std::vector<double>> by_interval;  // responses per interval
  std::vector<std::vector<double>> cost;          // cost[a][b], segment a..b inclusive
  // best[m][j]: min cost of covering intervals 0..j-1 with m segments; from[m][j] the last start.
  std::vector<std::vector<double>> best;
  std::vector<std::vector<Eigen::Index>> from;
};

inline double segment_cost(const HuberParam& c, const std::vector<double>& ys, double& lo, double& hi) {
  if (ys.empty()) {
    lo = -std::numeric_limits<double>::infinity();
    hi = std::numeric_limits<double>::infinity();
    return 0.0;
  }
  const Interval iv = huber_location_interval(c, ys);
  lo = iv.lo;
  hi = iv.hi;
  double s = 0.0;
  for (double y : ys) s += loss_unchecked(c.value(), y - lo);
  return s;
}

inline SegmentDp build_dp(const HuberParam& c, Eigen::Index d, const std::vector<Eigen::Index>& cell,
                          const Eigen::VectorXd& y, int max_segments) {
  SegmentDp dp;
  dp.d = d;
  dp.by_interval.resize(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < cell.size(); ++i) dp.by_interval[static_cast<std::size_t>(cell[i])].push_back(y(static_cast<Eigen::Index>(i)));
  const auto D = static_cast<std::size_t>(d);
  dp.cost.assign(D, std::vector<double>(D, 0.0));
  for (std::size_t a = 0; a < D; ++a) {
    std::vector<double> ys;
    for (std::size_t b = a; b < D; ++b) {
      ys.insert(ys.end(), dp.by_interval[b].begin(), dp.by_interval[b].end());
      double lo, hi;
      dp.cost[a][b] = segment_cost(c, ys, lo, hi);
    }
  }
  const double inf = std::numeric_limits<double>::infinity();
  const auto M = static_cast<std::size_t>(max_segments);
  dp.best.assign(M + 1, std::vector<double>(D + 1, inf));
  dp.from.assign(M + 1, std::vector<Eigen::Index>(D + 1, -1));
  dp.best[0][0] = 0.0;
  for (std::size_t m = 1; m <= M; ++m) {
    for (std::size_t j = m; j <= D; ++j) {
      for (std::size_t s = m - 1; s < j; ++s) {
        const double v = dp.best[m - 1][s] + dp.cost[s][j - 1];
        if (v < dp.best[m][j]) {
          dp.best[m][j] = v;
          dp.from[m][j] = static_cast<Eigen::Index>(s);
        }
      }
    }
  }
  return dp;
}

// Levels for a segmentation (segment starts), tie-broken so that |sum_j P_n(I_j) u_j| is minimal.
inline StepFunction levels_for(const HuberParam& c, const SegmentDp& dp, const std::vector<Eigen::Index>& starts,
                               std::size_t n_total) {
  const std::size_t R = starts.size();
  std::vector<double> lo(R), hi(R), w(R);
  std::vector<char> empty(R, 0);
  for (std::size_t r = 0; r < R; ++r) {
    const auto a = static_cast<std::size_t>(starts[r]);
    const auto b = static_cast<std::size_t>(r + 1 < R ? starts[r + 1] : dp.d);
    std::vector<double> ys;
    for (std::size_t j = a; j < b; ++j) ys.insert(ys.end(), dp.by_interval[j].begin(), dp.by_interval[j].end());
    empty[r] = ys.empty();
    segment_cost(c, ys, lo[r], hi[r]);
    w[r] = static_cast<double>(ys.size()) / static_cast<double>(n_total);
  }
  // Common fraction t in [0,1] such that sum_r w_r (lo_r + t (hi_r - lo_r)) is the point of the
  // attainable range closest to zero.
  double s_lo = 0.0, width = 0.0;
  for (std::size_t r = 0; r < R; ++r) {
    if (empty[r]) continue;
    s_lo += w[r] * lo[r];
    width += w[r] * (hi[r] - lo[r]);
  }
  const double target = std::clamp(0.0, s_lo, s_lo + width);
  const double t = width > 0.0 ? std::clamp((target - s_lo) / width, 0.0, 1.0) : 0.0;
  std::vector<double> level(R, 0.0);
  for (std::size_t r = 0; r < R; ++r) {
    if (!empty[r]) level[r] = t == 1.0 ? hi[r] : lo[r] + t * (hi[r] - lo[r]);
  }
  // Data-free segments copy a neighbour's level (left if any, else right).
  for (std::size_t r = 0; r < R; ++r) {
    if (empty[r] && r > 0) level[r] = level[r - 1];
  }
  for (std::size_t r = R; r-- > 0;) {
    if (empty[r] && (r == 0 || empty[r - 1]) && r + 1 < R) level[r] = level[r + 1];
  }
  StepFunction f;
  f.u.resize(dp.d);
  for (std::size_t r = 0; r < R; ++r) {
    const auto a = starts[r];
    const auto b = r + 1 < R ? starts[r + 1] : dp.d;
    for (Eigen::Index j = a; j < b; ++j) f.u(j) = level[r];
  }
  return f;
}

// Best segmentation with at most k jumps (fewest segments among equal costs).
inline std::vector<Eigen::Index> segmentation(const SegmentDp& dp, int k) {
  const auto D = static_cast<std::size_t>(dp.d);
  std::size_t best_m = 1;
  for (std::size_t m = 2; m <= static_cast<std::size_t>(k) + 1 && m <= D; ++m) {
    if (dp.best[m][D] < dp.best[best_m][D]) best_m = m;
  }
  std::vector<Eigen::Index> starts;
  std::size_t j = D;
  for (std::size_t m = best_m; m >= 1; --m) {
    const Eigen::Index s = dp.from[m][j];
    starts.push_back(s);
    j = static_cast<std::size_t>(s);
  }
  std::reverse(starts.begin(), starts.end());
  return starts;
}

inline void check_l1_bound(const HuberParam& c, const StepFunction& f, int k, const Eigen::VectorXd& y) {
  double l1 = 0.0;
  for (Eigen::Index j = 0; j + 1 < f.u.size(); ++j) l1 += std::abs(f.u(j + 1) - f.u(j));
  const double bound = 2.0 * k * c.value() + 4.0 * y.cwiseAbs().sum();
  if (!(l1 <= bound * (1.0 + 1e-12) + 1e-12)) {
    throw std::logic_error("jump fit violates the l1 bound: " + std::to_string(l1) + " > " + std::to_string(bound));
  }
}

inline std::vector<Eigen::Index> cells(const IntervalPartition& p, const Eigen::VectorXd& u) {
  std::vector<Eigen::Index> out(static_cast<std::size_t>(u.size()));
  for (Eigen::Index i = 0; i < u.size(); ++i) out[static_cast<std::size_t>(i)] = p.locate(u(i));
  return out;
}

// All fits k = 0..k_max from one DP table.
inline std::vector<StepFunction> fit_all_jumps(const HuberParam& c, Eigen::Index d, const std::vector<Eigen::Index>& cell,
                                               const Eigen::VectorXd& y, int k_max) {
  const SegmentDp dp = build_dp(c, d, cell, y, k_max + 1);
  std::vector<StepFunction> out;
  for (int k = 0; k <= k_max; ++k) {
    StepFunction f = levels_for(c, dp, segmentation(dp, k), cell.size());
    check_l1_bound(c, f, k, y);
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace detail

/// Huber ERM over step functions with at most k jumps on the partition, with exact segment
/// costs and the level tie-break min |sum_j P_n(I_j) u_j|.
inline StepFunction fit_k_jumps(const IntervalPartition& partition, const Eigen::VectorXd& u, const Eigen::VectorXd& y,
                                int k, const HuberParam& c) {
  partition.validate();
  if (u.size() != y.size() || y.size() < 1) throw DomainError("fit_k_jumps: need matching, nonempty U and Y");
  if (!y.allFinite()) throw DomainError("fit_k_jumps: non-finite response");
  if (k < 0 || k >= partition.d()) throw DomainError("fit_k_jumps: need 0 <= k <= d-1");
  const auto cell = detail::cells(partition, u);
  const detail::SegmentDp dp = detail::build_dp(c, partition.d(), cell, y, k + 1);
  StepFunction f = detail::levels_for(c, dp, detail::segmentation(dp, k), cell.size());
  detail::check_l1_bound(c, f, k, y);
  return f;
}

/// Intercept u_1 and first differences Delta_j = u_{j+1} - u_j, the coefficients of I(E_{j+1}).
inline SparseFit jump_to_sparse(const StepFunction& f) {
  if (f.u.size() < 1) throw DomainError("jump_to_sparse: empty step function");
  Eigen::VectorXd delta(f.u.size() - 1);
  for (Eigen::Index j = 0; j + 1 < f.u.size(); ++j) delta(j) = f.u(j + 1) - f.u(j);
  return SparseFit(f.u(0), std::move(delta));
}

/// Inverse of jump_to_sparse: u_j = q + sum_{i < j} Delta_i.
inline StepFunction sparse_to_jump(const SparseFit& fit) {
  StepFunction f;
  f.u.resize(fit.theta.size() + 1);
  f.u(0) = fit.q;
  for (Eigen::Index j = 0; j < fit.theta.size(); ++j) f.u(j + 1) = f.u(j) + fit.theta(j);
  return f;
}

/// Indicator design X_ij = 1{U_i in E_{j+2}} (0-based j = 0..d-2).
inline Eigen::MatrixXd indicator_design(const IntervalPartition& p, const Eigen::VectorXd& u) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(u.size(), p.d() - 1);
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const Eigen::Index cell = p.locate(u(i));
    for (Eigen::Index j = 0; j < cell; ++j) x(i, j) = 1.0;
  }
  return x;
}

/// Family k = 0..d-1 on indicator-coded data: the interval of row i is the number of ones in it.
inline EstimatorFamily jump_family(const IntervalPartition& partition, const HuberParam& c) {
  EstimatorFamily fam;
  fam.first_index = 0;
  fam.name = "jumps";
  const Eigen::Index d = partition.d();
  fam.train = [d, c](const Dataset& data) {
    std::vector<Eigen::Index> cell(static_cast<std::size_t>(data.n()));
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      cell[static_cast<std::size_t>(i)] = static_cast<Eigen::Index>(std::lround(data.x.row(i).sum()));
    }
    std::vector<SparseFit> out;
    for (const auto& f : detail::fit_all_jumps(c, d, cell, data.y, static_cast<int>(d) - 1)) {
      out.push_back(jump_to_sparse(f));
    }
    return out;
  };
  return fam;
}

struct JumpAggregate {
  StepFunction step;
  AggregatePredictor predictor;
};

/// Agghoo over the number of jumps k = 0..d-1; the average of the selected step functions.
inline JumpAggregate agghoo_jumps(const IntervalPartition& partition, const Eigen::VectorXd& u, const Eigen::VectorXd& y,
                                  const SplitScheme& splits, const HuberParam& c) {
  partition.validate();
  if (partition.d() < 2) throw DomainError("agghoo_jumps: need at least two intervals");
  const Dataset data(indicator_design(partition, u), y);
  JumpAggregate out;
  out.predictor = agghoo(jump_family(partition, c), data, splits, c);
  out.step = sparse_to_jump(out.predictor.as_fit());
  return out;
}

}  // namespace agghoo
