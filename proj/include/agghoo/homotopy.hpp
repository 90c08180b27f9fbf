#pragma once

// Piecewise-linear regularization path of the huberized Lasso, followed downward from lambda_max.
//
// Between knots the active set A (with signs) and the observation zones are fixed: Q holds
// residuals strictly inside (-c, c), U those at or above c, W those at or below -c. With
// Z = [1, X_A] the stationarity system on such a piece reads
//
//   H beta = (1/n) Z_Q' y_Q + (c/n) (sum_U z_i - sum_W z_i) - lam s,   H = (1/n) Z_Q' Z_Q,
//
// with s = (0, sign(theta_A)), so beta moves along H^{-1} s per unit decrease of lambda. A knot
// is placed wherever a coefficient hits zero, an inactive gradient reaches the band edge, a
// residual crosses an elbow, or the l1 cap is reached. After each knot beta is re-solved from
// the new sets, so rounding does not accumulate along the path.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "agghoo/errors.hpp"
#include "agghoo/fixed_lambda.hpp"
#include "agghoo/huber.hpp"
#include "agghoo/path_config.hpp"

namespace agghoo {

struct PathEvent {
  enum class Kind { Enter, Leave, Elbow, Cap, End, Jump };

  Kind kind;
  Eigen::Index index = -1;  // coefficient for Enter/Leave, observation for Elbow

  std::string label() const {
    switch (kind) {
      case Kind::Enter: return "enter:" + std::to_string(index);
      case Kind::Leave: return "leave:" + std::to_string(index);
      case Kind::Elbow: return "elbow:" + std::to_string(index);
      case Kind::Cap: return "cap";
      case Kind::End: return "end";
      case Kind::Jump: return "jump";
    }
    return "?";
  }
};

inline std::string join_labels(const std::vector<PathEvent>& ev) {
  std::string out;
  for (const auto& e : ev) {
    if (!out.empty()) out += ';';
    out += e.label();
  }
  return out;
}

/// Knots in decreasing lambda with their fits. slope_below[m] holds d(q, theta)/d(-lambda) on the
/// piece just below knot m. A knot tagged "jump" marks a point where the path was re-anchored on
/// the fixed-lambda solver; the piece above it is reconstructed from the jump knot's own slope.
struct SolutionPath {
  std::vector<double> knots;
  std::vector<SparseFit> fits;
  std::vector<std::vector<PathEvent>> events;
  std::vector<std::vector<Eigen::Index>> piece_active;
  std::vector<Eigen::VectorXd> slope_below;
  std::optional<double> truncated_at;
  bool reached_zero = false;  // last piece extends to lambda -> 0
  bool complete = true;       // false when the knot budget ran out
  std::vector<std::string> warnings;
  SparseFit null;
  double radius = std::numeric_limits<double>::infinity();

  std::size_t size() const noexcept { return knots.size(); }
  Eigen::Index d() const noexcept { return null.d(); }

  bool has_jump(std::size_t m) const {
    for (const auto& e : events[m]) {
      if (e.kind == PathEvent::Kind::Jump) return true;
    }
    return false;
  }

  /// Whether at() can answer for this lambda without the fixed-lambda solver.
  bool covers(double lambda) const {
    if (knots.empty()) return false;
    return lambda >= knots.back() || truncated_at.has_value() || reached_zero;
  }

  SparseFit at(double lambda) const {
    if (knots.empty()) throw DomainError("SolutionPath::at on an empty path");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("SolutionPath::at: lambda must be positive");
    if (lambda >= knots.front()) return null;
    const std::size_t last = knots.size() - 1;
    if (lambda <= knots[last]) {
      if (lambda == knots[last] || truncated_at) return fits[last];
      if (reached_zero) return extend(last, knots[last] - lambda);
      throw PathError("lambda below the computed range of an incomplete path");
    }
    // knots[m] > lambda > knots[m+1]
    const auto it = std::upper_bound(knots.begin(), knots.end(), lambda, std::greater<>());
    const auto m1 = static_cast<std::size_t>(it - knots.begin());
    if (knots[m1] == lambda) return fits[m1];
    const std::size_t m = m1 - 1;
    if (knots[m] == lambda) return fits[m];
    if (has_jump(m1)) return extend(m1, knots[m1] - lambda);
    const double w = (knots[m] - lambda) / (knots[m] - knots[m1]);
    const double q = (1.0 - w) * fits[m].q + w * fits[m1].q;
    Eigen::VectorXd theta = (1.0 - w) * fits[m].theta + w * fits[m1].theta;
    zero_off(theta, piece_active[m]);
    return SparseFit(q, std::move(theta));
  }

 private:
  // Fit at knots[m] - t along the slope of the piece below knot m (t may be negative).
  SparseFit extend(std::size_t m, double t) const {
    const Eigen::VectorXd& s = slope_below[m];
    Eigen::VectorXd theta = fits[m].theta + t * s.tail(d());
    zero_off(theta, piece_active[m]);
    return SparseFit(fits[m].q + t * s(0), std::move(theta));
  }

  static void zero_off(Eigen::VectorXd& theta, const std::vector<Eigen::Index>& active) {
    std::vector<char> keep(static_cast<std::size_t>(theta.size()), 0);
    for (auto j : active) keep[static_cast<std::size_t>(j)] = 1;
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
      if (!keep[static_cast<std::size_t>(j)]) theta(j) = 0.0;
    }
  }
};

namespace detail {

class Homotopy {
 public:
  Homotopy(const PathConfig& cfg, const Dataset& data)
      : cfg_(cfg), data_(data), c_(cfg.c.value()), n_(data.n()), d_(data.d()), nn_(static_cast<double>(data.n())),
        radius_(cfg.cap_radius(data.n())), sign_(static_cast<std::size_t>(data.d()), 0),
        zone_(static_cast<std::size_t>(data.n()), 0) {}

  SolutionPath run() {
    path_.null = null_fit(cfg_.c, data_);
    path_.radius = radius_;
    q_ = path_.null.q;
    theta_ = Eigen::VectorXd::Zero(d_);
    refresh();
    const double lmax = g_.size() ? g_.cwiseAbs().maxCoeff() : 0.0;
    if (!(lmax > 0.0)) {
      push_knot(0.0, {{PathEvent::Kind::End, -1}});
      path_.slope_below.back() = Eigen::VectorXd::Zero(d_ + 1);
      path_.reached_zero = true;
      return std::move(path_);
    }
    lam_ = lmax;
    std::vector<PathEvent> first;
    for (Eigen::Index j = 0; j < d_; ++j) {
      if (std::abs(g_(j)) >= lmax * (1.0 - 1e-10)) {
        sign_[static_cast<std::size_t>(j)] = g_(j) > 0 ? 1 : -1;
        active_.push_back(j);
        first.push_back({PathEvent::Kind::Enter, j});
      }
    }
    for (Eigen::Index i = 0; i < n_; ++i) zone_[static_cast<std::size_t>(i)] = zone_of(r_(i));
    push_knot(lam_, first);
    bool ok = settle(first);
    const int budget = cfg_.knot_budget(n_, d_);
    int zero_steps = 0;
    for (;;) {
      // Below this, event tests compare gradients at rounding level; the last piece is extended.
      if (lam_ <= 1e-10 * lmax) {
        path_.reached_zero = true;
        path_.warnings.push_back("path stopped at numerically zero lambda = " + std::to_string(lam_));
        break;
      }
      if (!ok) {
        if (!reanchor()) {
          throw PathError("homotopy: singular or inconsistent active-set system near lambda = " +
                          std::to_string(lam_) + " (|A| = " + std::to_string(active_.size()) +
                          ", |Q| = " + std::to_string(count_q()) + ")");
        }
        if (path_.truncated_at) break;
        zero_steps = 0;
      }
      if (static_cast<int>(path_.size()) >= budget) {
        path_.complete = false;
        path_.warnings.push_back("knot budget of " + std::to_string(budget) + " exhausted at lambda = " +
                                 std::to_string(lam_));
        break;
      }
      const Step st = next_step();
      if (lam_ - st.delta <= 1e-10 * lmax) {
        path_.reached_zero = true;
        break;
      }
      zero_steps = st.delta <= 1e-12 * lam_ ? zero_steps + 1 : 0;
      advance(st.delta);
      std::vector<PathEvent> evs = apply(st);
      if (has_cap(evs)) {
        push_knot(lam_, evs);
        path_.slope_below.back() = Eigen::VectorXd::Zero(d_ + 1);
        path_.truncated_at = lam_;
        break;
      }
      push_knot(lam_, evs);
      ok = zero_steps <= 50 && settle(evs);
    }
    return std::move(path_);
  }

 private:
  struct Candidate {
    double delta;
    PathEvent::Kind kind;
    Eigen::Index index;
  };
  struct Step {
    double delta = std::numeric_limits<double>::infinity();
    std::vector<Candidate> events;
  };

  static bool has_cap(const std::vector<PathEvent>& evs) {
    return std::any_of(evs.begin(), evs.end(), [](const PathEvent& e) { return e.kind == PathEvent::Kind::Cap; });
  }

  int zone_of(double r) const { return r >= c_ ? 1 : (r <= -c_ ? -1 : 0); }

  std::size_t count_q() const {
    return static_cast<std::size_t>(std::count(zone_.begin(), zone_.end(), 0));
  }

  // Residuals and gradients of the current (q, theta).
  void refresh() {
    r_ = data_.y.array() - q_;
    for (auto j : active_) r_ -= theta_(j) * data_.x.col(j);
    Eigen::VectorXd psi(n_);
    for (Eigen::Index i = 0; i < n_; ++i) psi(i) = grad_unchecked(c_, r_(i));
    g_ = data_.x.transpose() * psi / nn_;
  }

  Eigen::VectorXd beta() const {
    Eigen::VectorXd b(static_cast<Eigen::Index>(active_.size()) + 1);
    b(0) = q_;
    for (std::size_t a = 0; a < active_.size(); ++a) b(static_cast<Eigen::Index>(a) + 1) = theta_(active_[a]);
    return b;
  }

  // Exact solve of the piece system at lam_ for the current sets; fills beta and the direction.
  bool solve(Eigen::VectorXd& beta_out, Eigen::VectorXd& dir_out) const {
    const auto m = static_cast<Eigen::Index>(active_.size());
    if (count_q() < active_.size() + 1) return false;
    Eigen::MatrixXd zq(static_cast<Eigen::Index>(count_q()), m + 1);
    Eigen::VectorXd yq(zq.rows());
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m + 1);
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < n_; ++i) {
      const int z = zone_[static_cast<std::size_t>(i)];
      if (z == 0) {
        zq(row, 0) = 1.0;
        for (Eigen::Index a = 0; a < m; ++a) zq(row, a + 1) = data_.x(i, active_[static_cast<std::size_t>(a)]);
        yq(row) = data_.y(i);
        ++row;
      } else {
        b(0) += z * c_;
        for (Eigen::Index a = 0; a < m; ++a) b(a + 1) += z * c_ * data_.x(i, active_[static_cast<std::size_t>(a)]);
      }
    }
    Eigen::MatrixXd h = zq.transpose() * zq / nn_;
    b = (b + zq.transpose() * yq) / nn_;
    Eigen::VectorXd s = Eigen::VectorXd::Zero(m + 1);
    for (Eigen::Index a = 0; a < m; ++a) s(a + 1) = sign_[static_cast<std::size_t>(active_[static_cast<std::size_t>(a)])];
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(h);
    if (!(lu.rcond() >= 1e-12)) return false;
    beta_out = lu.solve(b - lam_ * s);
    dir_out = lu.solve(s);
    return beta_out.allFinite() && dir_out.allFinite();
  }

  // Residual and gradient rates per unit decrease of lambda along dir_.
  void rates() {
    dr_ = Eigen::VectorXd::Constant(n_, -dir_(0));
    for (std::size_t a = 0; a < active_.size(); ++a) dr_ -= dir_(static_cast<Eigen::Index>(a) + 1) * data_.x.col(active_[a]);
    Eigen::VectorXd masked(n_);
    for (Eigen::Index i = 0; i < n_; ++i) masked(i) = zone_[static_cast<std::size_t>(i)] == 0 ? dr_(i) : 0.0;
    dg_ = data_.x.transpose() * masked / nn_;
  }

  // Adopt the sets just changed by `evs` at lam_: re-solve exactly and check that every change
  // is consistent with the new direction.
  bool settle(const std::vector<PathEvent>& evs) {
    Eigen::VectorXd b;
    Eigen::VectorXd dir;
    if (!solve(b, dir)) return false;
    const Eigen::VectorXd before = beta();
    const double scale = 1.0 + before.cwiseAbs().maxCoeff();
    if ((b - before).cwiseAbs().maxCoeff() > 1e-7 * scale) return false;
    q_ = b(0);
    for (std::size_t a = 0; a < active_.size(); ++a) theta_(active_[a]) = b(static_cast<Eigen::Index>(a) + 1);
    dir_ = dir;
    refresh();
    rates();
    for (const auto& e : evs) {
      const auto j = static_cast<std::size_t>(e.index);
      switch (e.kind) {
        case PathEvent::Kind::Enter: {
          const auto pos = std::find(active_.begin(), active_.end(), e.index) - active_.begin();
          if (!(sign_[j] * dir_(pos + 1) > 0.0)) return false;
          break;
        }
        case PathEvent::Kind::Leave:
          if (!(std::copysign(1.0, g_(e.index)) * dg_(e.index) < -1.0)) return false;
          break;
        case PathEvent::Kind::Elbow: {
          const int z = zone_[j];
          const double rate = dr_(e.index);
          const bool at_upper = r_(e.index) > 0.0;
          // Linear-zone residuals must move outward, interior ones inward.
          if (z == 1 && !(rate > 0.0)) return false;
          if (z == -1 && !(rate < 0.0)) return false;
          if (z == 0 && !(at_upper ? rate < 0.0 : rate > 0.0)) return false;
          break;
        }
        default:
          break;
      }
    }
    path_.slope_below.back() = expand(dir_);
    path_.piece_active.back() = active_;
    return true;
  }

  Eigen::VectorXd expand(const Eigen::VectorXd& dir) const {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(d_ + 1);
    full(0) = dir(0);
    for (std::size_t a = 0; a < active_.size(); ++a) full(active_[a] + 1) = dir(static_cast<Eigen::Index>(a) + 1);
    return full;
  }

  Step next_step() const {
    std::vector<Candidate> cand;
    auto add = [&](double delta, PathEvent::Kind k, Eigen::Index idx) {
      if (std::isfinite(delta)) cand.push_back({std::max(delta, 0.0), k, idx});
    };
    // leave
    double l1_rate = 0.0;
    for (std::size_t a = 0; a < active_.size(); ++a) {
      const Eigen::Index j = active_[a];
      const double v = dir_(static_cast<Eigen::Index>(a) + 1);
      const int s = sign_[static_cast<std::size_t>(j)];
      l1_rate += s * v;
      if (s * v < 0.0) add(std::abs(theta_(j)) / std::abs(v), PathEvent::Kind::Leave, j);
    }
    // enter
    for (Eigen::Index j = 0; j < d_; ++j) {
      if (sign_[static_cast<std::size_t>(j)] != 0) continue;
      double best = std::numeric_limits<double>::infinity();
      if (dg_(j) + 1.0 > 0.0) best = std::min(best, (lam_ - g_(j)) / (dg_(j) + 1.0));
      if (1.0 - dg_(j) > 0.0) best = std::min(best, (lam_ + g_(j)) / (1.0 - dg_(j)));
      add(best, PathEvent::Kind::Enter, j);
    }
    // elbow
    for (Eigen::Index i = 0; i < n_; ++i) {
      const double r = r_(i);
      const double v = dr_(i);
      switch (zone_[static_cast<std::size_t>(i)]) {
        case 0:
          if (v > 0.0) add((c_ - r) / v, PathEvent::Kind::Elbow, i);
          if (v < 0.0) add((-c_ - r) / v, PathEvent::Kind::Elbow, i);
          break;
        case 1:
          if (v < 0.0) add((r - c_) / -v, PathEvent::Kind::Elbow, i);
          break;
        default:
          if (v > 0.0) add((-c_ - r) / v, PathEvent::Kind::Elbow, i);
          break;
      }
    }
    // cap
    if (std::isfinite(radius_) && l1_rate > 0.0) {
      add((radius_ - theta_.lpNorm<1>()) / l1_rate, PathEvent::Kind::Cap, -1);
    }

    Step st;
    for (const auto& e : cand) st.delta = std::min(st.delta, e.delta);
    if (!(st.delta < lam_)) return st;
    const double tie = st.delta + 1e-10 * lam_;
    for (const auto& e : cand) {
      if (e.delta <= tie) st.events.push_back(e);
    }
    auto rank = [](PathEvent::Kind k) {
      switch (k) {
        case PathEvent::Kind::Elbow: return 0;
        case PathEvent::Kind::Leave: return 1;
        case PathEvent::Kind::Enter: return 2;
        default: return 3;
      }
    };
    std::stable_sort(st.events.begin(), st.events.end(), [&](const Candidate& a, const Candidate& b) {
      if (rank(a.kind) != rank(b.kind)) return rank(a.kind) < rank(b.kind);
      return a.index < b.index;
    });
    return st;
  }

  void advance(double delta) {
    lam_ -= delta;
    q_ += delta * dir_(0);
    for (std::size_t a = 0; a < active_.size(); ++a) theta_(active_[a]) += delta * dir_(static_cast<Eigen::Index>(a) + 1);
    r_ += delta * dr_;
    g_ += delta * dg_;
  }

  std::vector<PathEvent> apply(const Step& st) {
    std::vector<PathEvent> out;
    for (const auto& e : st.events) {
      const auto k = static_cast<std::size_t>(e.index);
      switch (e.kind) {
        case PathEvent::Kind::Elbow: {
          const int z = zone_[k];
          zone_[k] = z != 0 ? 0 : (dr_(e.index) > 0.0 ? 1 : -1);
          break;
        }
        case PathEvent::Kind::Leave:
          theta_(e.index) = 0.0;
          sign_[k] = 0;
          active_.erase(std::find(active_.begin(), active_.end(), e.index));
          break;
        case PathEvent::Kind::Enter:
          sign_[k] = g_(e.index) > 0 ? 1 : -1;
          theta_(e.index) = 0.0;
          active_.insert(std::upper_bound(active_.begin(), active_.end(), e.index), e.index);
          break;
        default:
          break;
      }
      out.push_back({e.kind, e.kind == PathEvent::Kind::Cap ? -1 : e.index});
    }
    return out;
  }

  void push_knot(double lam, std::vector<PathEvent> evs) {
    path_.knots.push_back(lam);
    path_.fits.emplace_back(q_, theta_);
    path_.events.push_back(std::move(evs));
    path_.piece_active.push_back(active_);
    path_.slope_below.push_back(Eigen::VectorXd::Zero(d_ + 1));
  }

  // Restart the path slightly below the current knot from a tightly solved fixed-lambda fit.
  bool reanchor() {
    PathConfig tight = cfg_;
    tight.kkt_tol = 1e-10;
    const SparseFit warm(q_, theta_);
    for (double frac : {1e-6, 1e-5, 1e-4, 1e-3}) {
      const double lam = path_.knots.back() * (1.0 - frac);
      SparseFit fit;
      try {
        fit = solve_fixed_lambda(tight, data_, lam, warm);
      } catch (const SolverError&) {
        continue;
      }
      lam_ = lam;
      q_ = fit.q;
      theta_ = fit.theta;
      active_.clear();
      std::fill(sign_.begin(), sign_.end(), 0);
      for (Eigen::Index j = 0; j < d_; ++j) {
        if (theta_(j) != 0.0) {
          active_.push_back(j);
          sign_[static_cast<std::size_t>(j)] = theta_(j) > 0 ? 1 : -1;
        }
      }
      refresh();
      for (Eigen::Index i = 0; i < n_; ++i) zone_[static_cast<std::size_t>(i)] = zone_of(r_(i));
      if (std::isfinite(radius_) && theta_.lpNorm<1>() >= radius_ * (1.0 - 1e-9)) {
        push_knot(lam_, {{PathEvent::Kind::Jump, -1}, {PathEvent::Kind::Cap, -1}});
        path_.truncated_at = lam_;
        path_.warnings.push_back("l1 cap reached inside a re-anchored step at lambda = " + std::to_string(lam_));
        return true;
      }
      Eigen::VectorXd b;
      Eigen::VectorXd dir;
      if (!solve(b, dir)) continue;
      q_ = b(0);
      for (std::size_t a = 0; a < active_.size(); ++a) theta_(active_[a]) = b(static_cast<Eigen::Index>(a) + 1);
      bool signs_ok = true;
      for (auto j : active_) signs_ok = signs_ok && theta_(j) * sign_[static_cast<std::size_t>(j)] > 0.0;
      refresh();
      bool zones_ok = true;
      for (Eigen::Index i = 0; i < n_; ++i) {
        const int z = zone_[static_cast<std::size_t>(i)];
        const double tol = 1e-9 * (1.0 + c_);
        if (z == 0) zones_ok = zones_ok && std::abs(r_(i)) <= c_ + tol;
        if (z == 1) zones_ok = zones_ok && r_(i) >= c_ - tol;
        if (z == -1) zones_ok = zones_ok && r_(i) <= -c_ + tol;
      }
      const SparseFit exact(q_, theta_);
      if (!signs_ok || !zones_ok || kkt_certificate(cfg_, data_, exact, lam_).residual > 1e-9) continue;
      dir_ = dir;
      rates();
      push_knot(lam_, {{PathEvent::Kind::Jump, -1}});
      path_.slope_below.back() = expand(dir_);
      // The piece above a jump knot is read off the jump knot's slope.
      const std::size_t prev = path_.size() - 2;
      path_.slope_below[prev] = path_.slope_below.back();
      path_.piece_active[prev] = active_;
      path_.warnings.push_back("re-anchored at lambda = " + std::to_string(lam_));
      return true;
    }
    return false;
  }

  const PathConfig& cfg_;
  const Dataset& data_;
  double c_;
  Eigen::Index n_;
  Eigen::Index d_;
  double nn_;
  double radius_;

  double lam_ = 0.0;
  double q_ = 0.0;
  Eigen::VectorXd theta_;
  std::vector<Eigen::Index> active_;  // sorted
  std::vector<int> sign_;
  std::vector<int> zone_;
  Eigen::VectorXd r_, g_, dir_, dr_, dg_;
  SolutionPath path_;
};

}  // namespace detail

/// Full regularization path from lambda_max downward.
inline SolutionPath homotopy_path(const PathConfig& cfg, const Dataset& data) {
  cfg.validate();
  data.validate();
  if (data.d() < 1) throw DomainError("homotopy_path: need at least one covariate");
  return detail::Homotopy(cfg, data).run();
}

/// Fit at lambda: from the path when it covers lambda, otherwise from the fixed-lambda solver.
inline SparseFit path_fit_at(const SolutionPath& path, const PathConfig& cfg, const Dataset& data, double lambda) {
  if (path.covers(lambda)) return path.at(lambda);
  return solve_fixed_lambda(cfg, data, lambda, path.fits.back());
}

/// Estimators indexed by zero-norm: entry k is the fit at the last knot with zero-norm k among the
/// knots where the support changes (plus the terminal cap knot), or the null fit if none has it.
struct ZeroNormFamily {
  std::vector<SparseFit> fits;  // index 0..K
  std::vector<long> knot;       // -1 for the null fit
  int K = 0;
};

inline std::vector<std::size_t> support_change_knots(const SolutionPath& path) {
  std::vector<std::size_t> out;
  static const std::vector<Eigen::Index> empty;
  for (std::size_t m = 0; m < path.size(); ++m) {
    const auto& prev = m == 0 ? empty : path.piece_active[m - 1];
    const bool last_cap = m + 1 == path.size() && path.truncated_at.has_value();
    if (path.piece_active[m] != prev || last_cap) out.push_back(m);
  }
  return out;
}

inline ZeroNormFamily zero_norm_family(const SolutionPath& path, int K) {
  if (path.size() == 0) throw DomainError("zero_norm_family: empty path");
  if (K < 1) throw DomainError("zero_norm_family: K must be >= 1");
  ZeroNormFamily fam;
  fam.K = K;
  fam.fits.assign(static_cast<std::size_t>(K) + 1, path.null);
  fam.knot.assign(static_cast<std::size_t>(K) + 1, -1);
  for (std::size_t m : support_change_knots(path)) {
    const int k = path.fits[m].zero_norm;
    if (k >= 1 && k <= K) {
      fam.fits[static_cast<std::size_t>(k)] = path.fits[m];
      fam.knot[static_cast<std::size_t>(k)] = static_cast<long>(m);
    }
  }
  return fam;
}

}  // namespace agghoo
