#pragma once

// Numerical checks of the hypotheses behind the oracle inequality: the L-inf / L2 norm ratio
// kappa(K) on sparse linear forms, the Bernoulli bound on it, the Cauchy noise mass eta, the
// sample-size condition, the partition-mass condition, and two closed forms from the appendix.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "agghoo/errors.hpp"
#include "agghoo/huber.hpp"

namespace agghoo {

/// Finite-support distribution of a covariate vector.
struct DiscreteDesign {
  std::vector<Eigen::VectorXd> atoms;
  std::vector<double> probs;
  bool centered = false;
  bool indicative = false;  // built by quantizing a continuous design

  Eigen::Index d() const { return atoms.empty() ? 0 : atoms.front().size(); }

  Eigen::VectorXd mean() const {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(d());
    for (std::size_t a = 0; a < atoms.size(); ++a) m += probs[a] * atoms[a];
    return m;
  }

  void validate() const {
    if (atoms.empty() || atoms.size() != probs.size()) throw DomainError("design: atoms and probabilities mismatch");
    double total = 0.0;
    for (std::size_t a = 0; a < atoms.size(); ++a) {
      if (atoms[a].size() != d()) throw DomainError("design: atoms of unequal width");
      if (!(probs[a] > 0.0)) throw DomainError("design: probabilities must be positive");
      total += probs[a];
    }
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("design: probabilities must sum to 1");
    if (centered && mean().cwiseAbs().maxCoeff() > 1e-12) throw DomainError("design: not centered");
  }

  /// Copy with the mean subtracted from every atom.
  DiscreteDesign center() const {
    DiscreteDesign out = *this;
    const Eigen::VectorXd m = mean();
    for (auto& a : out.atoms) a -= m;
    out.centered = true;
    return out;
  }
};

/// Product of independent Bernoulli(p_i) coordinates, centered.
inline DiscreteDesign bernoulli_design(const std::vector<double>& p) {
  const std::size_t d = p.size();
  if (d == 0 || d > 20) throw DomainError("bernoulli_design: need 1 <= d <= 20");
  for (double pi : p) {
    if (!(pi > 0.0 && pi < 1.0)) throw DomainError("bernoulli_design: p_i must lie in (0, 1)");
  }
  DiscreteDesign des;
  for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(d));
    double prob = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
      const bool one = (mask >> i) & 1U;
      x(static_cast<Eigen::Index>(i)) = (one ? 1.0 : 0.0) - p[i];
      prob *= one ? p[i] : 1.0 - p[i];
    }
    des.atoms.push_back(std::move(x));
    des.probs.push_back(prob);
  }
  des.centered = true;
  return des;
}

namespace detail {
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}
}  // namespace detail

/// Gaussian N(0, sigma) quantized per latent coordinate into `levels` equal-mass cells (cell
/// conditional means), mapped through a Cholesky factor. Indicative only: kappa of the true
/// Gaussian design is infinite.
inline DiscreteDesign quantized_gaussian_design(const Eigen::MatrixXd& sigma, int levels = 8) {
  const Eigen::Index d = sigma.rows();
  if (d < 1 || sigma.cols() != d || d > 5) throw DomainError("quantized_gaussian_design: need square sigma, d <= 5");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw DomainError("quantized_gaussian_design: sigma must be positive definite");
  const Eigen::MatrixXd L = llt.matrixL();
  std::vector<double> pts;
  for (int k = 0; k < levels; ++k) {
    const double a = k == 0 ? -std::numeric_limits<double>::infinity() : detail::normal_quantile(double(k) / levels);
    const double b = k + 1 == levels ? std::numeric_limits<double>::infinity() : detail::normal_quantile(double(k + 1) / levels);
    const double pa = std::isfinite(a) ? detail::normal_pdf(a) : 0.0;
    const double pb = std::isfinite(b) ? detail::normal_pdf(b) : 0.0;
    pts.push_back((pa - pb) * levels);
  }
  DiscreteDesign des;
  std::size_t total = 1;
  for (Eigen::Index j = 0; j < d; ++j) total *= static_cast<std::size_t>(levels);
  for (std::size_t idx = 0; idx < total; ++idx) {
    Eigen::VectorXd z(d);
    std::size_t rest = idx;
    for (Eigen::Index j = 0; j < d; ++j) {
      z(j) = pts[rest % static_cast<std::size_t>(levels)];
      rest /= static_cast<std::size_t>(levels);
    }
    des.atoms.push_back(L * z);
    des.probs.push_back(1.0 / static_cast<double>(total));
  }
  des = des.center();
  des.indicative = true;
  return des;
}

struct KappaReport {
  int K = 0;
  double kappa = 1.0;
  std::vector<Eigen::Index> support;  // maximizing support
  Eigen::VectorXd witness;            // theta attaining kappa (full length d)
  std::optional<double> bound_cor1;
  int singular_supports = 0;          // supports whose second-moment matrix was rank deficient
  bool indicative = false;
};

namespace detail {

struct SupportValue {
  double value = 0.0;  // squared ratio
  Eigen::VectorXd theta;
  bool singular = false;
  bool degenerate = false;  // X restricted to S is a.s. zero
};

// max_a a_S' G_S^+ a_S over atoms, with G_S the second-moment matrix on S.
inline SupportValue support_value(const DiscreteDesign& des, const std::vector<Eigen::Index>& S) {
  const auto s = static_cast<Eigen::Index>(S.size());
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(s, s);
  Eigen::MatrixXd A(s, static_cast<Eigen::Index>(des.atoms.size()));
  for (std::size_t a = 0; a < des.atoms.size(); ++a) {
    for (Eigen::Index i = 0; i < s; ++i) A(i, static_cast<Eigen::Index>(a)) = des.atoms[a](S[static_cast<std::size_t>(i)]);
    G.noalias() += des.probs[a] * A.col(static_cast<Eigen::Index>(a)) * A.col(static_cast<Eigen::Index>(a)).transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
  const Eigen::VectorXd ev = eig.eigenvalues();
  const double top = ev.maxCoeff();
  SupportValue out;
  if (!(top > 0.0)) {
    out.degenerate = true;
    return out;
  }
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s);
  for (Eigen::Index i = 0; i < s; ++i) {
    if (ev(i) > 1e-12 * top) {
      inv(i) = 1.0 / ev(i);
    } else {
      out.singular = true;
    }
  }
  const Eigen::MatrixXd pinv = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  Eigen::Index best = 0;
  for (Eigen::Index a = 0; a < A.cols(); ++a) {
    const double v = A.col(a).dot(pinv * A.col(a));
    if (v > out.value) {
      out.value = v;
      best = a;
    }
  }
  out.theta = pinv * A.col(best);
  return out;
}

template <class F>
void for_each_subset(Eigen::Index d, Eigen::Index size, F&& f) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(size));
  for (Eigen::Index i = 0; i < size; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (;;) {
    f(idx);
    Eigen::Index i = size - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == d - size + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (Eigen::Index j = i + 1; j < size; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

}  // namespace detail

/// kappa over supports of size exactly 1..max_size; entry s-1 holds the max over size <= s.
inline std::vector<KappaReport> kappa_by_size(const DiscreteDesign& design, Eigen::Index max_size) {
  design.validate();
  if (!design.centered) throw DomainError("kappa: design must be centered");
  const Eigen::Index d = design.d();
  if (d > 12) throw DomainError("kappa: brute force limited to d <= 12");
  max_size = std::min(max_size, d);
  std::vector<KappaReport> out;
  KappaReport run;
  run.kappa = 0.0;
  run.indicative = design.indicative;
  for (Eigen::Index s = 1; s <= max_size; ++s) {
    detail::for_each_subset(d, s, [&](const std::vector<Eigen::Index>& S) {
      const auto sv = detail::support_value(design, S);
      if (sv.degenerate) return;
      run.singular_supports += sv.singular ? 1 : 0;
      const double k = std::sqrt(sv.value);
      if (k > run.kappa) {
        run.kappa = k;
        run.support = S;
        run.witness = Eigen::VectorXd::Zero(d);
        for (std::size_t i = 0; i < S.size(); ++i) run.witness(S[i]) = sv.theta(static_cast<Eigen::Index>(i));
      }
    });
    out.push_back(run);
  }
  return out;
}

/// kappa(K) = sup over 2K-sparse theta of ||<X, theta>||_inf / ||<X, theta>||_2, computed by
/// enumerating supports. Rank-deficient supports use the pseudo-inverse (directions in the null
/// space leave <X, theta> unchanged on every atom) and are counted in singular_supports.
inline KappaReport kappa_bruteforce(const DiscreteDesign& design, int K) {
  if (K < 1) throw DomainError("kappa: K must be >= 1");
  auto all = kappa_by_size(design, 2 * static_cast<Eigen::Index>(K));
  KappaReport rep = all.back();
  rep.K = K;
  return rep;
}

inline double cor1_bound(const std::vector<double>& p, int K) {
  if (p.empty() || K < 1) throw DomainError("cor1_bound: need p nonempty and K >= 1");
  double m = std::numeric_limits<double>::infinity();
  for (double pi : p) {
    if (!(pi > 0.0 && pi < 1.0)) throw DomainError("cor1_bound: p_i must lie in (0, 1)");
    m = std::min(m, pi * (1.0 - pi));
  }
  return std::sqrt(2.0 * K / m);
}

/// Mass of a centered Cauchy(scale) within +-c/2.
inline double eta_cauchy(const HuberParam& c, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("eta_cauchy: scale must be positive");
  return 2.0 / std::numbers::pi * std::atan(c.value() / (2.0 * scale));
}

struct ConditionCheck {
  bool satisfied = false;
  double value = 0.0;
  double bound = 0.0;
  double ratio = 0.0;  // value / bound
};

/// kappa <= (eta/8) sqrt(n_v / (8 b0 log n_t)).
inline ConditionCheck check_hw_condition(double kappa, double eta, long n_t, long n_v, double b0) {
  if (!(b0 > 1.0)) throw DomainError("check_hw_condition: b0 must exceed 1");
  if (n_t < 3 || n_v < 1) throw DomainError("check_hw_condition: need n_t >= 3 and n_v >= 1");
  if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("check_hw_condition: eta must lie in (0, 1]");
  ConditionCheck ch;
  ch.value = kappa;
  ch.bound = eta / 8.0 * std::sqrt(static_cast<double>(n_v) / (8.0 * b0 * std::log(static_cast<double>(n_t))));
  ch.ratio = kappa / ch.bound;
  ch.satisfied = kappa <= ch.bound;
  return ch;
}

/// min_j P(I_j) >= 1536 log(n_t)^2 / (eta^2 n_v).
inline ConditionCheck check_partition_mass(const std::vector<double>& masses, double eta, long n_t, long n_v) {
  if (masses.empty()) throw DomainError("check_partition_mass: no masses");
  if (n_t < 2 || n_v < 1) throw DomainError("check_partition_mass: need n_t >= 2 and n_v >= 1");
  if (!(eta > 0.0)) throw DomainError("check_partition_mass: eta must be positive");
  double total = 0.0;
  for (double m : masses) {
    if (!(m >= 0.0)) throw DomainError("check_partition_mass: masses must be nonnegative");
    total += m;
  }
  if (total > 1.0 + 1e-12) throw DomainError("check_partition_mass: masses sum above 1");
  const double lg = std::log(static_cast<double>(n_t));
  ConditionCheck ch;
  ch.value = *std::min_element(masses.begin(), masses.end());
  ch.bound = 1536.0 * lg * lg / (eta * eta * static_cast<double>(n_v));
  ch.ratio = ch.value / ch.bound;
  ch.satisfied = ch.value >= ch.bound;
  return ch;
}

/// h_{r,s}(x) = max(sqrt(r) x, s x^2).
inline double h_rs(double r, double s, double x) { return std::max(std::sqrt(r) * x, s * x * x); }

/// delta(h_{r,s}, xi) = inf{x : h(u) <= xi u^2 for all u >= x}; infinite unless xi >= s.
struct DeltaValue {
  bool finite = false;
  double value = std::numeric_limits<double>::infinity();
};

inline DeltaValue delta_op(double r, double s, double xi) {
  if (!(r > 0.0 && s > 0.0 && xi > 0.0)) throw DomainError("delta_op: arguments must be positive");
  if (xi < s) return {};
  return {true, std::sqrt(r) / xi};
}

/// sup I_{r,s}(z) = max(r z, s^2 z^2), the largest v with v <= max(r, s sqrt(v)) z.
inline double sup_I(double r, double s, double z) { return std::max(r * z, s * s * z * z); }

inline ConditionCheck fp_bound_check(double r, double s, double x, double y) {
  if (!(r > 0.0 && s > 0.0) || !(x >= 0.0 && y >= 0.0)) throw DomainError("fp_bound_check: bad arguments");
  ConditionCheck ch;
  ch.value = sup_I(r, s, x + y);
  const double h = h_rs(r, s, std::sqrt(x)) + h_rs(r, s, std::sqrt(y));
  ch.bound = h * h;
  ch.ratio = ch.bound > 0.0 ? ch.value / ch.bound : 0.0;
  ch.satisfied = ch.value <= ch.bound * (1.0 + 1e-12);
  return ch;
}

// ---------------------------------------------------------------- report

/// Reads a design description:
///   {"bernoulli": [p...]}  or  {"atoms": [[x...], ...], "probs": [...]}  or
///   {"gaussian": [[sigma row], ...], "levels": 8}
inline DiscreteDesign design_from_json(const nlohmann::json& j) {
  if (j.contains("bernoulli")) return bernoulli_design(j.at("bernoulli").get<std::vector<double>>());
  if (j.contains("gaussian")) {
    const auto rows = j.at("gaussian").get<std::vector<std::vector<double>>>();
    Eigen::MatrixXd s(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) throw DomainError("gaussian covariance must be square");
      for (std::size_t k = 0; k < rows.size(); ++k) s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
    return quantized_gaussian_design(s, j.value("levels", 8));
  }
  if (j.contains("atoms")) {
    DiscreteDesign des;
    for (const auto& a : j.at("atoms")) {
      const auto v = a.get<std::vector<double>>();
      des.atoms.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    des.probs = j.at("probs").get<std::vector<double>>();
    des.validate();
    return des.center();
  }
  throw DomainError("design must provide 'bernoulli', 'atoms' or 'gaussian'");
}

/// Audit report: one entry per check with inputs, value, bound and pass flag.
inline nlohmann::json run_audit(const nlohmann::json& spec, int K) {
  using nlohmann::json;
  const DiscreteDesign des = design_from_json(spec);
  json checks = json::array();
  const KappaReport kap = kappa_bruteforce(des, K);
  json kentry = {{"name", "kappa"},
                 {"inputs", {{"K", K}, {"d", des.d()}, {"atoms", des.atoms.size()}}},
                 {"value", kap.kappa},
                 {"support", kap.support},
                 {"witness", std::vector<double>(kap.witness.data(), kap.witness.data() + kap.witness.size())},
                 {"singular_supports", kap.singular_supports},
                 {"indicative", des.indicative}};
  if (spec.contains("bernoulli")) {
    const double b = cor1_bound(spec.at("bernoulli").get<std::vector<double>>(), K);
    kentry["bound"] = b;
    kentry["pass"] = kap.kappa <= b * (1.0 + 1e-12);
  } else {
    kentry["bound"] = nullptr;
    kentry["pass"] = true;
  }
  checks.push_back(kentry);

  const double c = spec.value("c", 2.0);
  const double scale = spec.value("noise_scale", 0.3);
  const double eta = eta_cauchy(HuberParam(c), scale);
  checks.push_back({{"name", "eta_cauchy"}, {"inputs", {{"c", c}, {"scale", scale}}}, {"value", eta},
                    {"bound", nullptr}, {"pass", eta > 0.0 && eta < 1.0}});

  if (spec.contains("n_t") && spec.contains("n_v")) {
    const long n_t = spec.at("n_t").get<long>();
    const long n_v = spec.at("n_v").get<long>();
    const double b0 = spec.value("b0", 3.0 * std::log(static_cast<double>(n_t)));
    const auto hw = check_hw_condition(kap.kappa, eta, n_t, n_v, b0);
    checks.push_back({{"name", "hw_condition"},
                      {"inputs", {{"kappa", kap.kappa}, {"eta", eta}, {"n_t", n_t}, {"n_v", n_v}, {"b0", b0}}},
                      {"value", hw.value}, {"bound", hw.bound}, {"ratio", hw.ratio}, {"pass", hw.satisfied}});
    if (spec.contains("partition_masses")) {
      const auto masses = spec.at("partition_masses").get<std::vector<double>>();
      const auto pm = check_partition_mass(masses, eta, n_t, n_v);
      checks.push_back({{"name", "partition_mass"}, {"inputs", {{"masses", masses}, {"eta", eta}, {"n_t", n_t}, {"n_v", n_v}}},
                        {"value", pm.value}, {"bound", pm.bound}, {"pass", pm.satisfied}});
    }
  }
  return {{"checks", checks}};
}

}  // namespace agghoo
