#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "agghoo/errors.hpp"

namespace agghoo {

/// Transition threshold c of the Huber loss (response units).
class HuberParam {
 public:
  explicit HuberParam(double c) : c_(c) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw DomainError("Huber threshold c must be positive and finite");
    }
  }

  double value() const noexcept { return c_; }

 private:
  double c_;
};

/// Design matrix (n x d) and response vector (n).
struct Dataset {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;

  Dataset() = default;
  Dataset(Eigen::MatrixXd x_in, Eigen::VectorXd y_in) : x(std::move(x_in)), y(std::move(y_in)) {
    validate();
  }

  Eigen::Index n() const noexcept { return y.size(); }
  Eigen::Index d() const noexcept { return x.cols(); }

  void validate() const {
    if (y.size() < 1) throw DomainError("dataset must contain at least one observation");
    if (x.rows() != y.size()) throw DomainError("design rows do not match response length");
    if (!x.allFinite() || !y.allFinite()) throw DomainError("dataset contains non-finite entries");
  }

  /// Rows listed in `rows`, in that order.
  Dataset subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
    out.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto src = static_cast<Eigen::Index>(rows[r]);
      if (src >= n()) throw DomainError("subset index out of range");
      out.x.row(static_cast<Eigen::Index>(r)) = x.row(src);
      out.y(static_cast<Eigen::Index>(r)) = y(src);
    }
    return out;
  }
};

/// A coefficient counts as zero iff |theta_j| <= 1e-10 * max(1, ||theta||_inf).
inline constexpr double kHardZeroRelTol = 1e-10;

inline double hard_zero_threshold(const Eigen::VectorXd& theta) {
  const double inf_norm = theta.size() ? theta.cwiseAbs().maxCoeff() : 0.0;
  return kHardZeroRelTol * std::max(1.0, inf_norm);
}

inline int count_nonzero(const Eigen::VectorXd& theta) {
  const double thr = hard_zero_threshold(theta);
  int k = 0;
  for (Eigen::Index j = 0; j < theta.size(); ++j) k += std::abs(theta(j)) > thr ? 1 : 0;
  return k;
}

/// One trained linear predictor x -> q + <theta, x>.
struct SparseFit {
  double q = 0.0;
  Eigen::VectorXd theta;
  int zero_norm = 0;

  SparseFit() = default;
  SparseFit(double intercept, Eigen::VectorXd coefficients)
      : q(intercept), theta(std::move(coefficients)), zero_norm(count_nonzero(theta)) {}

  static SparseFit null(Eigen::Index d, double intercept = 0.0) {
    return SparseFit(intercept, Eigen::VectorXd::Zero(d));
  }

  Eigen::Index d() const noexcept { return theta.size(); }
};

inline void require_finite(double u, const char* what) {
  if (!std::isfinite(u)) throw DomainError(std::string(what) + ": non-finite argument");
}

/// phi_c(u): quadratic on |u| <= c, linear beyond.
inline double huber_loss(const HuberParam& c, double u) {
  require_finite(u, "huber_loss");
  const double a = std::abs(u);
  const double cv = c.value();
  return a <= cv ? 0.5 * u * u : cv * (a - 0.5 * cv);
}

/// phi_c'(u) = sign(u) min(|u|, c).
inline double huber_grad(const HuberParam& c, double u) {
  require_finite(u, "huber_grad");
  return std::clamp(u, -c.value(), c.value());
}

namespace detail {
inline double loss_unchecked(double c, double u) {
  const double a = std::abs(u);
  return a <= c ? 0.5 * u * u : c * (a - 0.5 * c);
}
inline double grad_unchecked(double c, double u) { return std::clamp(u, -c, c); }
}  // namespace detail

/// Closed interval of minimizers of q -> sum_i phi_c(r_i - q).
struct Interval {
  double lo;
  double hi;
};

/// Exact minimizer set of the location problem. The objective is convex and piecewise quadratic
/// with breakpoints r_i +- c; its derivative -sum psi(r_i - q) is piecewise linear and is swept
/// over the sorted breakpoints.
inline Interval huber_location_interval(const HuberParam& c, std::span<const double> residuals) {
  const std::size_t n = residuals.size();
  if (n == 0) throw DomainError("huber_intercept: empty residual vector");
  const double cv = c.value();

  // (position, +1 = obs leaves the upper linear zone, -1 = obs enters the lower linear zone)
  struct Event {
    double at;
    int kind;
    double r;
  };
  std::vector<Event> events;
  events.reserve(2 * n);
  for (double r : residuals) {
    require_finite(r, "huber_intercept");
    events.push_back({r - cv, +1, r});
    events.push_back({r + cv, -1, r});
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.at != b.at) return a.at < b.at;
    return a.kind > b.kind;
  });

  // Piece state: S(q) = sum_Q r - m q + c (n_upper - n_lower).
  struct State {
    double sum_q = 0.0;
    long m = 0;
    long upper = 0;
    long lower = 0;
    double s_at(double q, double cv) const {
      return sum_q - static_cast<double>(m) * q + cv * static_cast<double>(upper - lower);
    }
    double root(double cv) const {
      return (sum_q + cv * static_cast<double>(upper - lower)) / static_cast<double>(m);
    }
  };

  std::vector<double> at;
  std::vector<double> s_val;
  std::vector<State> after;
  State st;
  st.upper = static_cast<long>(n);
  for (std::size_t e = 0; e < events.size();) {
    const double pos = events[e].at;
    while (e < events.size() && events[e].at == pos) {
      const auto& ev = events[e];
      if (ev.kind > 0) {
        --st.upper;
        ++st.m;
        st.sum_q += ev.r;
      } else {
        --st.m;
        st.sum_q -= ev.r;
        ++st.lower;
      }
      ++e;
    }
    if (st.m == 0) st.sum_q = 0.0;
    at.push_back(pos);
    s_val.push_back(st.s_at(pos, cv));
    after.push_back(st);
  }

  const std::size_t nb = at.size();
  // A flat bottom exists only on a piece with no quadratic-zone observations and as many above
  // as below; the counts are exact, so this avoids sign tests on rounded values of S.
  for (std::size_t k = 0; k + 1 < nb; ++k) {
    if (after[k].m == 0 && after[k].upper == after[k].lower) return {at[k], at[k + 1]};
  }
  // Otherwise the minimizer is unique: the first breakpoint with S <= 0 bounds the piece holding it.
  std::size_t k_lo = 0;
  while (k_lo < nb && s_val[k_lo] > 0.0) ++k_lo;
  double q;
  if (k_lo == 0) {
    q = at[0];
  } else if (k_lo == nb) {
    q = at[nb - 1];
  } else {
    const State& piece = after[k_lo - 1];
    q = piece.m > 0 ? std::clamp(piece.root(cv), at[k_lo - 1], at[k_lo]) : at[k_lo];
  }
  return {q, q};
}

/// Intercept minimizing sum_i phi_c(r_i - q); among minimizers, the one minimizing |q + anchor|.
inline double huber_intercept(const HuberParam& c, std::span<const double> residuals, double anchor) {
  require_finite(anchor, "huber_intercept anchor");
  const Interval iv = huber_location_interval(c, residuals);
  return std::clamp(-anchor, iv.lo, iv.hi);
}

inline double huber_intercept(const HuberParam& c, const Eigen::VectorXd& residuals, double anchor) {
  return huber_intercept(c, std::span<const double>(residuals.data(), static_cast<std::size_t>(residuals.size())),
                         anchor);
}

/// Tie-broken intercept for a given coefficient vector (q-part of the estimator contract).
inline double intercept_for(const HuberParam& c, const Dataset& data, const Eigen::VectorXd& theta) {
  const Eigen::VectorXd resid = data.y - data.x * theta;
  const double anchor = theta.dot(data.x.colwise().mean().transpose());
  return huber_intercept(c, resid, anchor);
}

/// Null fit: theta = 0 and the tie-broken Huber location of y.
inline SparseFit null_fit(const HuberParam& c, const Dataset& data) {
  return SparseFit(huber_intercept(c, data.y, 0.0), Eigen::VectorXd::Zero(data.d()));
}

inline Eigen::VectorXd residuals(const SparseFit& fit, const Dataset& data) {
  if (fit.theta.size() != data.d()) throw DomainError("fit dimension does not match data width");
  return (data.y - data.x * fit.theta).array() - fit.q;
}

/// Mean Huber loss of y_i - q - <theta, x_i>.
inline double empirical_risk(const HuberParam& c, const SparseFit& fit, const Dataset& data) {
  const Eigen::VectorXd r = residuals(fit, data);
  double total = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) total += detail::loss_unchecked(c.value(), r(i));
  return total / static_cast<double>(r.size());
}

/// Same as empirical_risk restricted to the listed rows, without materializing the subset.
inline double empirical_risk_rows(const HuberParam& c, const SparseFit& fit, const Dataset& data,
                                  std::span<const std::size_t> rows) {
  if (fit.theta.size() != data.d()) throw DomainError("fit dimension does not match data width");
  if (rows.empty()) throw DomainError("empirical risk over an empty set");
  double total = 0.0;
  for (std::size_t i : rows) {
    const auto row = static_cast<Eigen::Index>(i);
    const double r = data.y(row) - fit.q - data.x.row(row).dot(fit.theta);
    total += detail::loss_unchecked(c.value(), r);
  }
  return total / static_cast<double>(rows.size());
}

}  // namespace agghoo
