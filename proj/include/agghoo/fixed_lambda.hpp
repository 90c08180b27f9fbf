#pragma once

// Fixed-lambda huberized Lasso: accelerated proximal gradient with backtracking, run until the KKT
// certificate holds. It shares no code with the homotopy and serves as its independent check.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "agghoo/errors.hpp"
#include "agghoo/huber.hpp"
#include "agghoo/path_config.hpp"

namespace agghoo {

/// Smallest lambda at which theta = 0 is optimal.
inline double lambda_max(const PathConfig& cfg, const Dataset& data) {
  data.validate();
  const double q0 = huber_intercept(cfg.c, data.y, 0.0);
  Eigen::VectorXd psi(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) psi(i) = detail::grad_unchecked(cfg.c.value(), data.y(i) - q0);
  const Eigen::VectorXd g = data.x.transpose() * psi / static_cast<double>(data.n());
  return g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
}

/// Geometric grid of 100 values from lambda_max down to 0.05 lambda_max.
struct LambdaGrid {
  static constexpr int kLength = 100;
  static constexpr double kMinRatio = 0.05;

  std::vector<double> values;
  double lambda_max = 0.0;
};

inline LambdaGrid build_grid(double lambda_max) {
  if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) throw DomainError("build_grid: lambda_max must be positive");
  LambdaGrid grid;
  grid.lambda_max = lambda_max;
  grid.values.resize(LambdaGrid::kLength);
  const double last = LambdaGrid::kLength - 1;
  for (int i = 0; i < LambdaGrid::kLength; ++i) {
    grid.values[static_cast<std::size_t>(i)] = lambda_max * std::pow(LambdaGrid::kMinRatio, i / last);
  }
  grid.values.front() = lambda_max;
  grid.values.back() = LambdaGrid::kMinRatio * lambda_max;
  return grid;
}

struct SolverOptions {
  int max_iterations = 200000;
  int check_every = 25;
};

namespace prox {

inline double soft(double v, double t) { return v > t ? v - t : (v < -t ? v + t : 0.0); }

/// Euclidean projection onto the l1 ball of the given radius (sort-based).
inline void project_l1_ball(Eigen::Ref<Eigen::VectorXd> v, double radius) {
  if (v.lpNorm<1>() <= radius) return;
  std::vector<double> u(static_cast<std::size_t>(v.size()));
  for (Eigen::Index j = 0; j < v.size(); ++j) u[static_cast<std::size_t>(j)] = std::abs(v(j));
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0;
  double shift = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cum += u[k];
    const double t = (cum - radius) / static_cast<double>(k + 1);
    if (u[k] > t) shift = t;
  }
  for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = soft(v(j), shift);
}

struct Problem {
  const Dataset& data;
  double c;
  double lambda;
  double radius;

  double n() const { return static_cast<double>(data.n()); }

  // beta = (q, theta)
  Eigen::VectorXd resid(const Eigen::VectorXd& beta) const {
    return (data.y - data.x * beta.tail(data.d())).array() - beta(0);
  }

  double smooth(const Eigen::VectorXd& r) const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) s += detail::loss_unchecked(c, r(i));
    return s / n();
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& r) const {
    Eigen::VectorXd psi(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) psi(i) = detail::grad_unchecked(c, r(i));
    Eigen::VectorXd g(data.d() + 1);
    g(0) = -psi.sum() / n();
    g.tail(data.d()) = -data.x.transpose() * psi / n();
    return g;
  }

  void prox(Eigen::VectorXd& beta, double step) const {
    auto theta = beta.tail(data.d());
    for (Eigen::Index j = 0; j < theta.size(); ++j) theta(j) = soft(theta(j), lambda * step);
    if (std::isfinite(radius)) project_l1_ball(theta, radius);
  }
};

/// Upper bound on the Lipschitz constant of the smooth gradient: ||[1 X]||_2^2 / n.
inline double lipschitz_estimate(const Dataset& data) {
  const Eigen::Index d = data.d();
  Eigen::VectorXd v = Eigen::VectorXd::Ones(d + 1);
  double est = 1.0;
  for (int it = 0; it < 60; ++it) {
    Eigen::VectorXd zv = (data.x * v.tail(d)).array() + v(0);
    Eigen::VectorXd w(d + 1);
    w(0) = zv.sum();
    w.tail(d) = data.x.transpose() * zv;
    const double nw = w.norm();
    if (nw == 0.0) break;
    est = nw / v.norm();
    v = w / nw;
  }
  return std::max(est, 1e-12) * 1.05 / static_cast<double>(data.n());
}

/// Newton polish on the sign / zone pattern read off the current iterate. Solves the piecewise
/// linear stationarity system exactly; returns nothing when the pattern gives a singular system.
inline std::optional<Eigen::VectorXd> polish(const Problem& pb, const Eigen::VectorXd& beta) {
  const Dataset& data = pb.data;
  const Eigen::Index d = data.d();
  const Eigen::VectorXd r = pb.resid(beta);
  std::vector<Eigen::Index> act;
  const Eigen::VectorXd theta = beta.tail(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    if (theta(j) != 0.0) act.push_back(j);
  }
  const auto m = static_cast<Eigen::Index>(act.size());
  Eigen::VectorXd sgn(m + 1);
  sgn(0) = 0.0;
  for (Eigen::Index a = 0; a < m; ++a) sgn(a + 1) = theta(act[static_cast<std::size_t>(a)]) > 0 ? 1.0 : -1.0;

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + 1, m + 1);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m + 1);
  Eigen::VectorXd z(m + 1);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    z(0) = 1.0;
    for (Eigen::Index a = 0; a < m; ++a) z(a + 1) = data.x(i, act[static_cast<std::size_t>(a)]);
    if (std::abs(r(i)) < pb.c) {
      h.selfadjointView<Eigen::Lower>().rankUpdate(z);
      b += data.y(i) * z;
    } else {
      b += (r(i) > 0 ? pb.c : -pb.c) * z;
    }
  }
  h = h.selfadjointView<Eigen::Lower>();
  h /= pb.n();
  b /= pb.n();

  const bool capped = std::isfinite(pb.radius) && theta.lpNorm<1>() >= pb.radius * (1.0 - 1e-10) && m > 0;
  Eigen::VectorXd sol;
  if (!capped) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(h);
    if (!lu.isInvertible() || lu.rcond() < 1e-13) return std::nullopt;
    sol = lu.solve(b - pb.lambda * sgn);
  } else {
    // Unknowns (q, theta_A, lam_eff); extra row fixes sgn' theta_A = radius.
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(m + 2, m + 2);
    k.topLeftCorner(m + 1, m + 1) = h;
    k.block(0, m + 1, m + 1, 1) = sgn;
    k.block(m + 1, 0, 1, m + 1) = sgn.transpose();
    Eigen::VectorXd rhs(m + 2);
    rhs.head(m + 1) = b;
    rhs(m + 1) = pb.radius;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
    if (!lu.isInvertible() || lu.rcond() < 1e-13) return std::nullopt;
    const Eigen::VectorXd full = lu.solve(rhs);
    if (full(m + 1) < pb.lambda) return std::nullopt;
    sol = full.head(m + 1);
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(d + 1);
  out(0) = sol(0);
  for (Eigen::Index a = 0; a < m; ++a) {
    const double v = sol(a + 1);
    if (v * sgn(a + 1) <= 0.0) return std::nullopt;
    out(act[static_cast<std::size_t>(a)] + 1) = v;
  }
  return out;
}

}  // namespace prox

/// Huberized Lasso at a fixed lambda (with the l1 cap when enabled). The returned intercept is the
/// tie-broken Huber location for the returned theta.
inline SparseFit solve_fixed_lambda(const PathConfig& cfg, const Dataset& data, double lambda,
                                    const std::optional<SparseFit>& init = std::nullopt,
                                    const SolverOptions& opts = {}) {
  cfg.validate();
  data.validate();
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("solve_fixed_lambda: lambda must be positive");
  const Eigen::Index d = data.d();
  const prox::Problem pb{data, cfg.c.value(), lambda, cfg.cap_radius(data.n())};

  auto finish = [&](const Eigen::VectorXd& beta) {
    Eigen::VectorXd theta = beta.tail(d);
    const double thr = hard_zero_threshold(theta);
    for (Eigen::Index j = 0; j < d; ++j) {
      if (std::abs(theta(j)) <= thr) theta(j) = 0.0;
    }
    return SparseFit(intercept_for(cfg.c, data, theta), theta);
  };
  auto certified = [&](const SparseFit& fit) { return kkt_certificate(cfg, data, fit, lambda).residual; };

  Eigen::VectorXd x = Eigen::VectorXd::Zero(d + 1);
  if (init) {
    if (init->theta.size() != d) throw DomainError("solve_fixed_lambda: init dimension mismatch");
    x(0) = init->q;
    x.tail(d) = init->theta;
    pb.prox(x, 0.0);
  } else {
    x(0) = huber_intercept(cfg.c, data.y, 0.0);
  }
  {
    const SparseFit start = finish(x);
    if (certified(start) <= cfg.kkt_tol) return start;
  }

  double lip = prox::lipschitz_estimate(data);
  Eigen::VectorXd y = x;
  double t = 1.0;
  double last = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opts.max_iterations; ++it) {
    const Eigen::VectorXd ry = pb.resid(y);
    const double fy = pb.smooth(ry);
    const Eigen::VectorXd gy = pb.gradient(ry);
    Eigen::VectorXd xn;
    for (;;) {
      xn = y - gy / lip;
      pb.prox(xn, 1.0 / lip);
      const Eigen::VectorXd diff = xn - y;
      const double bound = fy + gy.dot(diff) + 0.5 * lip * diff.squaredNorm();
      if (pb.smooth(pb.resid(xn)) <= bound + 1e-15 * std::abs(bound)) break;
      lip *= 2.0;
    }
    if ((y - xn).dot(xn - x) > 0.0) {
      t = 1.0;
      y = xn;
    } else {
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = xn + ((t - 1.0) / tn) * (xn - x);
      t = tn;
    }
    x = std::move(xn);

    if (it % opts.check_every == 0) {
      SparseFit cur = finish(x);
      last = certified(cur);
      if (last <= cfg.kkt_tol) return cur;
      if (last < 1e-2) {
        Eigen::VectorXd cand = x;
        for (int k = 0; k < 4; ++k) {
          auto next = prox::polish(pb, cand);
          if (!next) break;
          cand = *next;
          SparseFit pol = finish(cand);
          const double res = certified(pol);
          if (res <= cfg.kkt_tol) return pol;
        }
      }
    }
  }
  throw SolverError("solve_fixed_lambda: no convergence within the iteration budget", last);
}

/// One fit per grid value, sweeping lambda downward with warm starts.
inline std::vector<SparseFit> fit_grid_family(const PathConfig& cfg, const Dataset& data, const LambdaGrid& grid,
                                              const SolverOptions& opts = {}) {
  if (grid.values.empty()) throw DomainError("fit_grid_family: empty grid");
  for (std::size_t i = 1; i < grid.values.size(); ++i) {
    if (!(grid.values[i] < grid.values[i - 1])) throw DomainError("fit_grid_family: grid must be decreasing");
  }
  std::vector<SparseFit> fits;
  fits.reserve(grid.values.size());
  std::optional<SparseFit> warm;
  for (double lam : grid.values) {
    try {
      fits.push_back(solve_fixed_lambda(cfg, data, lam, warm, opts));
    } catch (const SolverError& e) {
      throw SolverError(std::string(e.what()) + " (lambda = " + std::to_string(lam) + ")", e.last_residual());
    }
    warm = fits.back();
  }
  return fits;
}

}  // namespace agghoo
