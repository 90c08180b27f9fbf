#pragma once

// Seeded generators for the three simulation designs and their Bayes predictors.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "agghoo/errors.hpp"
#include "agghoo/huber.hpp"

namespace agghoo {

/// Decorrelates a seed into an independent sub-stream seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t substream(std::uint64_t seed, std::uint64_t tag) { return splitmix64(seed ^ splitmix64(tag)); }

/// Uniform on the open interval (0, 1) from 53 random bits.
inline double open_uniform(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double cauchy_sample(double center, double scale, std::mt19937_64& rng) {
  if (!(scale > 0.0)) throw DomainError("cauchy_sample: scale must be positive");
  return center + scale * std::tan(std::numbers::pi * (open_uniform(rng) - 0.5));
}

/// Ground truth: Bayes predictor x -> <w_star, x> (zero intercept under symmetric noise).
struct GroundTruth {
  Eigen::VectorXd w_star;
  double population_l2_scale = 0.0;  // ||<X, w_star>||_{L2}

  SparseFit bayes() const { return SparseFit(0.0, w_star); }
};

struct Setup1Config {
  Eigen::Index n = 100;
  Eigen::Index d = 200;
  int cor = 15;
  int k_blocks = 25;
  double sigma = 0.08;
  double middle_ratio = 0.5;  // middle block level relative to b
  double c = 2.0;

  void validate() const {
    if (n < 1 || d < 1) throw DomainError("setup1: n and d must be positive");
    if (cor < 1) throw DomainError("setup1: cor must be >= 1");
    if (k_blocks < 1 || 3 * k_blocks > d) throw DomainError("setup1: need 1 <= k_blocks and 3 k_blocks <= d");
    if (!(sigma > 0.0)) throw DomainError("setup1: sigma must be positive");
    if (!(c > 0.0)) throw DomainError("setup1: c must be positive");
  }
};

struct Setup2Config {
  Eigen::Index n = 100;
  Eigen::Index d = 200;
  int r = 10;
  int s = 2;
  double rho = 0.8;
  double cauchy_scale = 0.3;
  double c = 2.0;

  void validate() const {
    if (n < 1 || d < 1) throw DomainError("setup2: n and d must be positive");
    if (r < 1 || s < 0 || static_cast<Eigen::Index>(r) * (s + 1) > d) throw DomainError("setup2: need r (s+1) <= d");
    if (!(rho >= 0.0 && rho < 1.0)) throw DomainError("setup2: rho must lie in [0, 1)");
    if (!(cauchy_scale > 0.0) || !(c > 0.0)) throw DomainError("setup2: scales must be positive");
  }
};

struct Setup3Config {
  Eigen::Index n = 100;
  Eigen::Index d = 200;
  int r = 10;
  double rho = 0.5;
  double cauchy_scale = 0.3;
  double c = 2.0;

  void validate() const {
    if (n < 1 || d < 1) throw DomainError("setup3: n and d must be positive");
    if (r < 1 || r > d) throw DomainError("setup3: need 1 <= r <= d");
    if (!(rho >= 0.0 && rho < 1.0)) throw DomainError("setup3: rho must lie in [0, 1)");
    if (!(cauchy_scale > 0.0) || !(c > 0.0)) throw DomainError("setup3: scales must be positive");
  }
};

using SetupConfig = std::variant<Setup1Config, Setup2Config, Setup3Config>;

// ---------------------------------------------------------------- setup 1

/// Kernel u_i = exp(-2.33^2 i^2 / (2 cor^2)) for |i| <= cor, index i + cor.
inline Eigen::VectorXd setup1_kernel(int cor) {
  Eigen::VectorXd u(2 * cor + 1);
  for (int i = -cor; i <= cor; ++i) {
    u(i + cor) = std::exp(-2.33 * 2.33 * i * i / (2.0 * cor * cor));
  }
  return u;
}

/// Covariance of the moving-average design: Cov(X_i, X_j) = sum_l u_l u_{l+|i-j|} / ||u||^2.
inline double setup1_cov(const Eigen::VectorXd& u, Eigen::Index lag) {
  const Eigen::Index m = u.size();
  lag = lag < 0 ? -lag : lag;
  if (lag >= m) return 0.0;
  return u.head(m - lag).dot(u.tail(m - lag)) / u.squaredNorm();
}

/// Quadratic form w' Sigma_cor w using the banded Toeplitz covariance.
inline double setup1_quadratic_form(const Eigen::VectorXd& u, const Eigen::VectorXd& w) {
  const Eigen::Index band = u.size() - 1;
  std::vector<Eigen::Index> nz;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    if (w(j) != 0.0) nz.push_back(j);
  }
  double s = 0.0;
  for (auto a : nz) {
    for (auto b : nz) {
      if (std::abs(a - b) <= band) s += w(a) * w(b) * setup1_cov(u, a - b);
    }
  }
  return s;
}

inline GroundTruth setup1_truth(const Setup1Config& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(cfg.d));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  for (std::size_t i = perm.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(perm[i - 1], perm[pick(rng)]);
  }
  Eigen::VectorXd shape = Eigen::VectorXd::Zero(cfg.d);
  const int k = cfg.k_blocks;
  for (int j = 0; j < 3 * k; ++j) {
    shape(perm[static_cast<std::size_t>(j)]) = j < k ? 1.0 : (j < 2 * k ? cfg.middle_ratio : 0.25);
  }
  const Eigen::VectorXd u = setup1_kernel(cfg.cor);
  GroundTruth t;
  t.w_star = shape / std::sqrt(setup1_quadratic_form(u, shape));
  t.population_l2_scale = 1.0;
  return t;
}

inline Eigen::MatrixXd setup1_design(const Setup1Config& cfg, Eigen::Index m, std::mt19937_64& rng) {
  const Eigen::VectorXd u = setup1_kernel(cfg.cor);
  const double norm = u.norm();
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(m, cfg.d);
  Eigen::VectorXd z(cfg.d + 2 * cfg.cor);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index l = 0; l < z.size(); ++l) z(l) = normal(rng);
    for (Eigen::Index j = 0; j < cfg.d; ++j) x(i, j) = u.dot(z.segment(j, u.size())) / norm;
  }
  return x;
}

// ---------------------------------------------------------------- setup 2

/// Groups of s+1 contiguous coordinates, predictive coordinate first.
inline GroundTruth setup2_truth(const Setup2Config& cfg) {
  cfg.validate();
  GroundTruth t;
  t.w_star = Eigen::VectorXd::Zero(cfg.d);
  for (int g = 0; g < cfg.r; ++g) t.w_star(static_cast<Eigen::Index>(g) * (cfg.s + 1)) = 3.0 / std::sqrt(cfg.r);
  t.population_l2_scale = 3.0;
  return t;
}

inline Eigen::MatrixXd setup2_design(const Setup2Config& cfg, Eigen::Index m, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  const double a = std::sqrt(cfg.rho);
  const double b = std::sqrt(1.0 - cfg.rho);
  const Eigen::Index grouped = static_cast<Eigen::Index>(cfg.r) * (cfg.s + 1);
  Eigen::MatrixXd x(m, cfg.d);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (int g = 0; g < cfg.r; ++g) {
      const Eigen::Index base = static_cast<Eigen::Index>(g) * (cfg.s + 1);
      const double z0 = normal(rng);
      x(i, base) = z0;
      for (int e = 1; e <= cfg.s; ++e) x(i, base + e) = a * z0 + b * normal(rng);
    }
    for (Eigen::Index j = grouped; j < cfg.d; ++j) x(i, j) = normal(rng);
  }
  return x;
}

// ---------------------------------------------------------------- setup 3

inline GroundTruth setup3_truth(const Setup3Config& cfg) {
  cfg.validate();
  const double r = cfg.r;
  GroundTruth t;
  t.w_star = Eigen::VectorXd::Zero(cfg.d);
  t.w_star.head(cfg.r).setConstant(3.0 / std::sqrt(r + r * (r - 1.0) * cfg.rho));
  t.population_l2_scale = 3.0;
  return t;
}

inline Eigen::MatrixXd setup3_design(const Setup3Config& cfg, Eigen::Index m, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  const double a = std::sqrt(cfg.rho);
  const double b = std::sqrt(1.0 - cfg.rho);
  Eigen::MatrixXd x(m, cfg.d);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double z0 = normal(rng);
    for (Eigen::Index j = 0; j < cfg.r; ++j) x(i, j) = a * z0 + b * normal(rng);
    for (Eigen::Index j = cfg.r; j < cfg.d; ++j) x(i, j) = normal(rng);
  }
  return x;
}

// ---------------------------------------------------------------- generic access

inline double setup_c(const SetupConfig& s) {
  return std::visit([](const auto& c) { return c.c; }, s);
}
inline Eigen::Index setup_n(const SetupConfig& s) {
  return std::visit([](const auto& c) { return c.n; }, s);
}
inline Eigen::Index setup_d(const SetupConfig& s) {
  return std::visit([](const auto& c) { return c.d; }, s);
}
inline double noise_scale(const SetupConfig& s) {
  if (const auto* c1 = std::get_if<Setup1Config>(&s)) return c1->sigma;
  if (const auto* c2 = std::get_if<Setup2Config>(&s)) return c2->cauchy_scale;
  return std::get<Setup3Config>(s).cauchy_scale;
}

/// Ground truth of a setup. Only setup 1 is random (support placement).
inline GroundTruth draw_truth(const SetupConfig& s, std::uint64_t seed) {
  if (const auto* c1 = std::get_if<Setup1Config>(&s)) return setup1_truth(*c1, seed);
  if (const auto* c2 = std::get_if<Setup2Config>(&s)) return setup2_truth(*c2);
  return setup3_truth(std::get<Setup3Config>(s));
}

/// m observations (X, <w_star, X> + Cauchy noise).
inline Dataset sample(const SetupConfig& s, const GroundTruth& truth, Eigen::Index m, std::uint64_t seed) {
  if (m < 1) throw DomainError("sample size must be positive");
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd x;
  if (const auto* c1 = std::get_if<Setup1Config>(&s)) {
    c1->validate();
    x = setup1_design(*c1, m, rng);
  } else if (const auto* c2 = std::get_if<Setup2Config>(&s)) {
    c2->validate();
    x = setup2_design(*c2, m, rng);
  } else {
    const auto& c3 = std::get<Setup3Config>(s);
    c3.validate();
    x = setup3_design(c3, m, rng);
  }
  const double scale = noise_scale(s);
  Eigen::VectorXd y = x * truth.w_star;
  for (Eigen::Index i = 0; i < m; ++i) y(i) = cauchy_sample(y(i), scale, rng);
  return Dataset(std::move(x), std::move(y));
}

struct Simulated {
  Dataset data;
  GroundTruth truth;
};

inline Simulated gen_setup1(const Setup1Config& cfg, std::uint64_t seed) {
  GroundTruth t = setup1_truth(cfg, substream(seed, 1));
  Dataset d = sample(cfg, t, cfg.n, substream(seed, 2));
  return {std::move(d), std::move(t)};
}

inline Simulated gen_setup2(const Setup2Config& cfg, std::uint64_t seed) {
  GroundTruth t = setup2_truth(cfg);
  Dataset d = sample(cfg, t, cfg.n, substream(seed, 2));
  return {std::move(d), std::move(t)};
}

inline Simulated gen_setup3(const Setup3Config& cfg, std::uint64_t seed) {
  GroundTruth t = setup3_truth(cfg);
  Dataset d = sample(cfg, t, cfg.n, substream(seed, 2));
  return {std::move(d), std::move(t)};
}

inline Simulated generate(const SetupConfig& s, std::uint64_t seed) {
  return std::visit(
      [seed](const auto& c) -> Simulated {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Setup1Config>) return gen_setup1(c, seed);
        else if constexpr (std::is_same_v<T, Setup2Config>) return gen_setup2(c, seed);
        else return gen_setup3(c, seed);
      },
      s);
}

// ---------------------------------------------------------------- JSON

inline void to_json(nlohmann::json& j, const Setup1Config& c) {
  j = {{"setup", 1}, {"n", c.n}, {"d", c.d}, {"cor", c.cor}, {"k_blocks", c.k_blocks},
       {"sigma", c.sigma}, {"middle_ratio", c.middle_ratio}, {"c", c.c}};
}
inline void to_json(nlohmann::json& j, const Setup2Config& c) {
  j = {{"setup", 2}, {"n", c.n}, {"d", c.d}, {"r", c.r}, {"s", c.s},
       {"rho", c.rho}, {"cauchy_scale", c.cauchy_scale}, {"c", c.c}};
}
inline void to_json(nlohmann::json& j, const Setup3Config& c) {
  j = {{"setup", 3}, {"n", c.n}, {"d", c.d}, {"r", c.r}, {"rho", c.rho}, {"cauchy_scale", c.cauchy_scale}, {"c", c.c}};
}

inline nlohmann::json setup_to_json(const SetupConfig& s) {
  nlohmann::json j;
  std::visit([&j](const auto& c) { to_json(j, c); }, s);
  return j;
}

/// Parses {"setup": 1|2|3, ...}; missing keys keep their defaults, unknown keys are rejected.
inline SetupConfig setup_from_json(const nlohmann::json& j, int setup_hint = 0) {
  const int id = j.contains("setup") ? j.at("setup").get<int>() : setup_hint;
  auto take = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  auto reject_unknown = [&j](std::initializer_list<const char*> keys) {
    for (const auto& [k, v] : j.items()) {
      bool known = k == "setup";
      for (const char* key : keys) known = known || k == key;
      if (!known) throw DomainError("unknown setup key: " + k);
    }
  };
  if (id == 1) {
    Setup1Config c;
    reject_unknown({"n", "d", "cor", "k_blocks", "sigma", "middle_ratio", "c"});
    take("n", c.n), take("d", c.d), take("cor", c.cor), take("k_blocks", c.k_blocks);
    take("sigma", c.sigma), take("middle_ratio", c.middle_ratio), take("c", c.c);
    c.validate();
    return c;
  }
  if (id == 2) {
    Setup2Config c;
    reject_unknown({"n", "d", "r", "s", "rho", "cauchy_scale", "c"});
    take("n", c.n), take("d", c.d), take("r", c.r), take("s", c.s);
    take("rho", c.rho), take("cauchy_scale", c.cauchy_scale), take("c", c.c);
    c.validate();
    return c;
  }
  if (id == 3) {
    Setup3Config c;
    reject_unknown({"n", "d", "r", "rho", "cauchy_scale", "c"});
    take("n", c.n), take("d", c.d), take("r", c.r), take("rho", c.rho);
    take("cauchy_scale", c.cauchy_scale), take("c", c.c);
    c.validate();
    return c;
  }
  throw DomainError("setup id must be 1, 2 or 3");
}

/// CSV (y, x_0..x_{d-1}) plus a JSON sidecar with the configuration, seed and w_star.
inline void write_dataset(const std::string& csv_path, const Dataset& data, const SetupConfig& cfg,
                          const GroundTruth& truth, std::uint64_t seed) {
  std::ofstream out(csv_path);
  if (!out) throw DomainError("cannot open " + csv_path);
  out.precision(17);
  out << "y";
  for (Eigen::Index j = 0; j < data.d(); ++j) out << ",x_" << j;
  out << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out << data.y(i);
    for (Eigen::Index j = 0; j < data.d(); ++j) out << ',' << data.x(i, j);
    out << '\n';
  }
  nlohmann::json meta;
  meta["config"] = setup_to_json(cfg);
  meta["seed"] = seed;
  meta["w_star"] = std::vector<double>(truth.w_star.data(), truth.w_star.data() + truth.w_star.size());
  meta["normalizer"] = truth.population_l2_scale;
  if (std::holds_alternative<Setup1Config>(cfg)) {
    meta["note"] = "middle support block level is middle_ratio * b";
  }
  std::ofstream side(csv_path + ".json");
  if (!side) throw DomainError("cannot open " + csv_path + ".json");
  side << meta.dump(2) << '\n';
}

}  // namespace agghoo
