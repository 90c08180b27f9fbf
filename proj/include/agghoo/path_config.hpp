#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "agghoo/errors.hpp"
#include "agghoo/huber.hpp"

namespace agghoo {

/// Settings shared by the homotopy and the fixed-lambda solver.
struct PathConfig {
  HuberParam c{2.0};
  double alpha = 0.75;     // l1 cap ||theta||_1 <= n^alpha
  bool cap_enabled = true;
  int max_knots = 0;       // 0 selects 10 * min(n, d) + 100
  double kkt_tol = 1e-7;

  void validate() const {
    if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
    if (max_knots < 0) throw DomainError("max_knots must be >= 1 (or 0 for the default)");
    if (!(kkt_tol >= 0.0)) throw DomainError("kkt_tol must be nonnegative");
  }

  double cap_radius(Eigen::Index n) const {
    return cap_enabled ? std::pow(static_cast<double>(n), alpha) : std::numeric_limits<double>::infinity();
  }

  int knot_budget(Eigen::Index n, Eigen::Index d) const {
    return max_knots > 0 ? max_knots : 10 * static_cast<int>(std::min(n, d)) + 100;
  }
};

/// Outcome of the optimality check of a fit at a given lambda.
struct KktReport {
  double residual = 0.0;     // max violation over intercept, active and inactive conditions
  double intercept = 0.0;    // |mean psi(r_i)|
  double multiplier = 0.0;   // cap multiplier mu (0 when the cap is slack)
  bool cap_active = false;
};

/// KKT certificate. With g_j = (1/n) sum psi(r_i) x_ij, requires
/// |g_j - lam sign(theta_j)| small on the support, |g_j| <= lam off it, and mean psi(r_i) = 0.
/// When the l1 cap binds, lam is replaced by lam + mu for one mu >= 0.
inline KktReport kkt_certificate(const PathConfig& cfg, const Dataset& data, const SparseFit& fit, double lambda) {
  const Eigen::VectorXd r = residuals(fit, data);
  const double cv = cfg.c.value();
  Eigen::VectorXd psi(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) psi(i) = detail::grad_unchecked(cv, r(i));
  const double n = static_cast<double>(data.n());
  const Eigen::VectorXd g = data.x.transpose() * psi / n;

  KktReport rep;
  rep.intercept = std::abs(psi.mean());

  const double thr = hard_zero_threshold(fit.theta);
  const double l1 = fit.theta.lpNorm<1>();
  const double radius = cfg.cap_radius(data.n());
  double lam_eff = lambda;
  if (cfg.cap_enabled && l1 >= radius * (1.0 - 1e-9)) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (Eigen::Index j = 0; j < g.size(); ++j) {
      if (std::abs(fit.theta(j)) > thr) {
        lo = std::min(lo, std::abs(g(j)));
        hi = std::max(hi, std::abs(g(j)));
      }
    }
    if (hi > 0.0) {
      rep.multiplier = std::max(0.0, 0.5 * (lo + hi) - lambda);
      rep.cap_active = rep.multiplier > 0.0;
      lam_eff = lambda + rep.multiplier;
    }
  }

  double worst = rep.intercept;
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    const double t = fit.theta(j);
    if (std::abs(t) > thr) {
      worst = std::max(worst, std::abs(g(j) - lam_eff * (t > 0 ? 1.0 : -1.0)));
    } else {
      worst = std::max(worst, std::abs(g(j)) - lam_eff);
    }
  }
  rep.residual = std::max(worst, 0.0);
  return rep;
}

/// Objective (1/n) sum phi_c(r_i) + lam ||theta||_1.
inline double penalized_objective(const HuberParam& c, const Dataset& data, const SparseFit& fit, double lambda) {
  return empirical_risk(c, fit, data) + lambda * fit.theta.lpNorm<1>();
}

}  // namespace agghoo
