#pragma once

// Independent reference implementations used by the unit and acceptance tests. Nothing here
// calls into the library except for plain data types.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "agghoo/huber.hpp"

namespace oracle {

inline double huber(double c, double u) {
  const double a = std::fabs(u);
  return a <= c ? 0.5 * u * u : c * a - 0.5 * c * c;
}

inline double psi(double c, double u) { return u > c ? c : (u < -c ? -c : u); }

/// Random regression instance: Gaussian design, sparse truth, Cauchy noise of the given scale.
inline agghoo::Dataset random_instance(int n, int d, std::uint64_t seed, double noise_scale = 0.5, int support = 3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::cauchy_distribution<double> e(0.0, noise_scale);
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = g(rng);
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  for (int j = 0; j < std::min(support, d); ++j) w(j) = (j % 2 ? -1.0 : 1.0) * (1.0 + 0.5 * j);
  Eigen::VectorXd y = x * w;
  for (int i = 0; i < n; ++i) y(i) += 0.3 + e(rng);
  return agghoo::Dataset(std::move(x), std::move(y));
}

/// Minimizer of a convex function on [lo, hi] by golden-section search.
inline double golden_min(const std::function<double(double)>& f, double lo, double hi, int iters = 300) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < iters && b - a > 1e-13 * (1.0 + std::fabs(a) + std::fabs(b)); ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? x1 : x2;
}

inline double location_cost(double c, const std::vector<double>& ys) {
  if (ys.empty()) return 0.0;
  const auto [mn, mx] = std::minmax_element(ys.begin(), ys.end());
  auto f = [&](double m) {
    double s = 0.0;
    for (double y : ys) s += huber(c, y - m);
    return s;
  };
  return f(golden_min(f, *mn - 1.0, *mx + 1.0));
}

/// Minimal total Huber cost over step functions with at most k jumps, by enumerating every
/// placement of jump positions. by_cell[j] holds the responses falling in interval j.
inline double exhaustive_segmentation(double c, const std::vector<std::vector<double>>& by_cell, int k) {
  const int d = static_cast<int>(by_cell.size());
  double best = std::numeric_limits<double>::infinity();
  const int positions = d - 1;
  for (unsigned mask = 0; mask < (1u << positions); ++mask) {
    if (__builtin_popcount(mask) > k) continue;
    double total = 0.0;
    std::vector<double> seg;
    for (int j = 0; j < d; ++j) {
      seg.insert(seg.end(), by_cell[j].begin(), by_cell[j].end());
      const bool cut = j == d - 1 || (mask >> j) & 1u;
      if (cut) {
        total += location_cost(c, seg);
        seg.clear();
      }
    }
    best = std::min(best, total);
  }
  return best;
}

/// Grid-scan minimizer set of q -> sum phi_c(r_i - q): returns [first, last] grid points within
/// `slack` of the minimum on a grid of step h.
inline std::pair<double, double> intercept_scan(double c, const std::vector<double>& r, double h, double slack) {
  const auto [mn, mx] = std::minmax_element(r.begin(), r.end());
  auto f = [&](double q) {
    double s = 0.0;
    for (double v : r) s += huber(c, v - q);
    return s;
  };
  const double lo = *mn - c - 1.0, hi = *mx + c + 1.0;
  const auto steps = static_cast<long>((hi - lo) / h) + 1;
  double best = std::numeric_limits<double>::infinity();
  for (long i = 0; i <= steps; ++i) best = std::min(best, f(lo + h * i));
  double first = hi, last = lo;
  for (long i = 0; i <= steps; ++i) {
    const double q = lo + h * i;
    if (f(q) <= best + slack) {
      first = std::min(first, q);
      last = std::max(last, q);
    }
  }
  return {first, last};
}

/// Least-squares lasso path of (1/2n)|yc - Xc theta|^2 + lambda |theta|_1 on centered data by the
/// LARS algorithm with the lasso modification. Knots are where the active set changes.
struct LarsPath {
  std::vector<double> lambdas;
  std::vector<Eigen::VectorXd> thetas;
  std::vector<double> intercepts;
};

inline LarsPath lars_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::Index n = x.rows(), d = x.cols();
  const Eigen::RowVectorXd xm = x.colwise().mean();
  const double ym = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - xm;
  const Eigen::VectorXd yc = y.array() - ym;
  LarsPath out;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  std::vector<Eigen::Index> active;
  std::vector<double> sgn;
  Eigen::VectorXd corr = xc.transpose() * yc / static_cast<double>(n);
  Eigen::Index j0 = 0;
  double lambda = corr.cwiseAbs().maxCoeff(&j0);
  active.push_back(j0);
  sgn.push_back(corr(j0) > 0 ? 1.0 : -1.0);
  auto record = [&] {
    out.lambdas.push_back(lambda);
    out.thetas.push_back(beta);
    out.intercepts.push_back(ym - xm.dot(beta));
  };
  record();
  for (int step = 0; step < 10 * static_cast<int>(d) + 10; ++step) {
    const auto a = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd xa(n, a);
    Eigen::VectorXd s(a);
    for (Eigen::Index i = 0; i < a; ++i) {
      xa.col(i) = xc.col(active[static_cast<std::size_t>(i)]);
      s(i) = sgn[static_cast<std::size_t>(i)];
    }
    const Eigen::MatrixXd gram = xa.transpose() * xa / static_cast<double>(n);
    const Eigen::VectorXd dir = gram.ldlt().solve(s);  // d beta_A / d(-lambda)
    const Eigen::VectorXd rate = xc.transpose() * (xa * dir) / static_cast<double>(n);
    corr = xc.transpose() * (yc - xc * beta) / static_cast<double>(n);
    double t_best = lambda;
    int kind = 0;  // 0 none, 1 enter, 2 leave
    Eigen::Index who = -1;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (std::find(active.begin(), active.end(), j) != active.end()) continue;
      for (double sg : {1.0, -1.0}) {
        const double den = 1.0 - sg * rate(j);
        if (den <= 1e-14) continue;
        const double t = (lambda - sg * corr(j)) / den;
        if (t > 1e-14 && t < t_best) {
          t_best = t;
          kind = 1;
          who = j;
        }
      }
    }
    for (Eigen::Index i = 0; i < a; ++i) {
      const double b = beta(active[static_cast<std::size_t>(i)]);
      if (dir(i) != 0.0 && b / dir(i) < 0.0) {
        const double t = -b / dir(i);
        if (t > 1e-14 && t < t_best) {
          t_best = t;
          kind = 2;
          who = i;
        }
      }
    }
    if (kind == 0) break;  // the remaining piece runs to lambda = 0
    for (Eigen::Index i = 0; i < a; ++i) beta(active[static_cast<std::size_t>(i)]) += t_best * dir(i);
    lambda -= t_best;
    if (kind == 1) {
      const Eigen::VectorXd cnow = xc.transpose() * (yc - xc * beta) / static_cast<double>(n);
      active.push_back(who);
      sgn.push_back(cnow(who) > 0 ? 1.0 : -1.0);
    } else {
      beta(active[static_cast<std::size_t>(who)]) = 0.0;
      active.erase(active.begin() + who);
      sgn.erase(sgn.begin() + who);
    }
    record();
  }
  return out;
}

/// delta(h, xi) = inf { x : h(u) <= xi u^2 for all u >= x } for h(u) = max(sqrt(r) u, s u^2), by
/// scanning a grid on [0, top]. Returns nullopt when no grid point qualifies.
inline std::optional<double> delta_scan(double r, double s, double xi, double top, double step) {
  const auto m = static_cast<long>(top / step);
  std::optional<double> best;
  // Walk down from the top while the condition keeps holding.
  for (long i = m; i >= 0; --i) {
    const double u = step * static_cast<double>(i);
    const double h = std::max(std::sqrt(r) * u, s * u * u);
    if (h <= xi * u * u * (1.0 + 1e-12)) {
      best = u;
    } else {
      break;
    }
  }
  if (best && *best >= top) return std::nullopt;
  return best;
}

/// sup { v >= 0 : v <= max(r, s sqrt(v)) z } by scanning a v-grid on [0, top].
inline double sup_I_scan(double r, double s, double z, double top, double step) {
  double best = 0.0;
  const auto m = static_cast<long>(top / step);
  for (long i = 0; i <= m; ++i) {
    const double v = step * static_cast<double>(i);
    if (v <= std::max(r, s * std::sqrt(v)) * z) best = v;
  }
  return best;
}


/// Euclidean projection onto the l1 ball of the given radius (sort-based).
inline Eigen::VectorXd project_l1(const Eigen::VectorXd& v, double radius) {
  if (v.lpNorm<1>() <= radius) return v;
  std::vector<double> a(v.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) a[static_cast<std::size_t>(j)] = std::fabs(v(j));
  std::sort(a.begin(), a.end(), std::greater<>());
  double cum = 0.0, shift = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    cum += a[k];
    const double t = (cum - radius) / static_cast<double>(k + 1);
    if (a[k] > t) shift = t;
  }
  Eigen::VectorXd out(v.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) out(j) = std::copysign(std::max(std::fabs(v(j)) - shift, 0.0), v(j));
  return out;
}

/// Minimizer set [lo, hi] of q -> sum phi_c(r_i - q) by bisection on the monotone derivative.
inline std::pair<double, double> location_interval(double c, const Eigen::VectorXd& r) {
  auto g = [&](double q) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) s += psi(c, q - r(i));
    return s;
  };
  auto bisect = [&](bool lower) {
    double a = r.minCoeff() - c - 1.0, b = r.maxCoeff() + c + 1.0;
    for (int it = 0; it < 200; ++it) {
      const double m = 0.5 * (a + b);
      const double v = g(m);
      if (lower ? v < 0.0 : v <= 0.0) a = m; else b = m;
    }
    return 0.5 * (a + b);
  };
  return {bisect(true), bisect(false)};
}

struct ProxFit {
  double q = 0.0;
  Eigen::VectorXd theta;
  int iterations = 0;
};

/// (1/n) sum phi_c(y - q - x theta) + lambda |theta|_1 subject to |theta|_1 <= radius, by FISTA with
/// adaptive restart on the stacked variable (q, theta). The prox of the penalty plus the ball
/// constraint is soft-thresholding followed by projection. The returned intercept is moved to the
/// point of its minimizer interval closest to -<theta, mean x>.
inline ProxFit prox_grad_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double c, double lambda, double radius,
                               const Eigen::VectorXd* warm = nullptr, int max_iter = 400000, double tol = 1e-13) {
  const Eigen::Index n = x.rows(), d = x.cols();
  Eigen::MatrixXd z(n, d + 1);
  z.col(0).setOnes();
  z.rightCols(d) = x;
  const double L = Eigen::JacobiSVD<Eigen::MatrixXd>(z).singularValues()(0);
  const double step = static_cast<double>(n) / (L * L);
  auto grad = [&](const Eigen::VectorXd& w) {
    const Eigen::VectorXd r = y - z * w;
    Eigen::VectorXd p(n);
    for (Eigen::Index i = 0; i < n; ++i) p(i) = psi(c, r(i));
    return Eigen::VectorXd(-(z.transpose() * p) / static_cast<double>(n));
  };
  auto prox = [&](const Eigen::VectorXd& w) {
    Eigen::VectorXd out = w;
    for (Eigen::Index j = 1; j <= d; ++j) out(j) = std::copysign(std::max(std::fabs(w(j)) - step * lambda, 0.0), w(j));
    if (std::isfinite(radius)) out.tail(d) = project_l1(out.tail(d), radius);
    return out;
  };
  Eigen::VectorXd w = warm ? *warm : Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd v = w;
  double t = 1.0;
  ProxFit out;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd next = prox(v - step * grad(v));
    const double move = (next - v).lpNorm<Eigen::Infinity>();
    out.iterations = it + 1;
    if ((v - next).dot(next - w) > 0.0) {  // restart when momentum points uphill
      t = 1.0;
      v = w;
      continue;
    }
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    v = next + ((t - 1.0) / tn) * (next - w);
    w = next;
    t = tn;
    if (move < tol) break;
  }
  out.theta = w.tail(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    if (std::fabs(out.theta(j)) < 1e-12) out.theta(j) = 0.0;
  }
  const Eigen::VectorXd r = y - x * out.theta;
  const auto [lo, hi] = location_interval(c, r);
  const double anchor = out.theta.dot(x.colwise().mean());
  out.q = std::clamp(-anchor, lo, hi);
  return out;
}

}  // namespace oracle
