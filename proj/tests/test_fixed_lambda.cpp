#include <cmath>

#include <gtest/gtest.h>

#include "agghoo/fixed_lambda.hpp"
#include "oracles.hpp"

using namespace agghoo;

namespace {

// Subgradient optimality residual computed from scratch (no cap).
double kkt_residual(double c, const Dataset& data, const SparseFit& f, double lambda) {
  const Eigen::Index n = data.n();
  Eigen::VectorXd psi(n);
  for (Eigen::Index i = 0; i < n; ++i) psi(i) = oracle::psi(c, data.y(i) - f.q - data.x.row(i).dot(f.theta));
  double worst = std::abs(psi.mean());
  const Eigen::VectorXd g = data.x.transpose() * psi / static_cast<double>(n);
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    if (f.theta(j) != 0.0) {
      worst = std::max(worst, std::abs(g(j) - lambda * (f.theta(j) > 0 ? 1.0 : -1.0)));
    } else {
      worst = std::max(worst, std::abs(g(j)) - lambda);
    }
  }
  return worst;
}

double objective(double c, const Dataset& data, const SparseFit& f, double lambda) {
  double s = 0;
  for (Eigen::Index i = 0; i < data.n(); ++i) s += oracle::huber(c, data.y(i) - f.q - data.x.row(i).dot(f.theta));
  return s / data.n() + lambda * f.theta.lpNorm<1>();
}

PathConfig uncapped(double c) {
  PathConfig cfg;
  cfg.c = HuberParam(c);
  cfg.cap_enabled = false;
  return cfg;
}

}  // namespace

TEST(LambdaMax, Examples) {
  PathConfig cfg;
  Dataset zero(Eigen::MatrixXd::Random(5, 3), Eigen::VectorXd::Zero(5));
  EXPECT_EQ(lambda_max(cfg, zero), 0.0);

  Eigen::MatrixXd x(2, 1);
  x << 1, -1;
  Eigen::VectorXd y(2);
  y << 1, -1;
  PathConfig big;
  big.c = HuberParam(100);
  EXPECT_NEAR(lambda_max(big, Dataset(x, y)), 1.0, 1e-14);

  const Dataset d = oracle::random_instance(30, 6, 11);
  Dataset shifted = d;
  shifted.y.array() += 7.5;
  EXPECT_NEAR(lambda_max(cfg, d), lambda_max(cfg, shifted), 1e-12);
}

TEST(LambdaGrid, Geometric) {
  const LambdaGrid g = build_grid(1.0);
  ASSERT_EQ(g.values.size(), 100u);
  EXPECT_EQ(g.values.front(), 1.0);
  EXPECT_NEAR(g.values.back(), 0.05, 1e-15);
  const double ratio = std::pow(0.05, 1.0 / 99.0);
  for (std::size_t i = 1; i < 100; ++i) {
    EXPECT_LT(g.values[i], g.values[i - 1]);
    EXPECT_NEAR(g.values[i] / g.values[i - 1], ratio, 1e-13);
  }
  const LambdaGrid g2 = build_grid(2.0);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_NEAR(g2.values[i], 2.0 * g.values[i], 1e-15);
  EXPECT_THROW(build_grid(0.0), DomainError);
  EXPECT_THROW(build_grid(-1.0), DomainError);
}

TEST(SolveFixedLambda, AboveLambdaMaxIsNull) {
  const Dataset d = oracle::random_instance(25, 5, 3);
  PathConfig cfg;
  const double lmax = lambda_max(cfg, d);
  const SparseFit f = solve_fixed_lambda(cfg, d, lmax * 1.01);
  EXPECT_EQ(f.zero_norm, 0);
  EXPECT_NEAR(f.q, huber_intercept(cfg.c, d.y, 0.0), 1e-12);
}

TEST(SolveFixedLambda, ZeroResponse) {
  Dataset d(Eigen::MatrixXd::Random(10, 4), Eigen::VectorXd::Zero(10));
  for (double lam : {1e-3, 0.1, 5.0}) {
    const SparseFit f = solve_fixed_lambda(PathConfig{}, d, lam);
    EXPECT_EQ(f.zero_norm, 0);
    EXPECT_EQ(f.q, 0.0);
  }
}

TEST(SolveFixedLambda, CertifiedAndSelfConsistent) {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const Dataset d = oracle::random_instance(20, 5, seed);
    for (double c : {0.5, 2.0, 10.0}) {
      PathConfig cfg = uncapped(c);
      const double lam = 0.5 * lambda_max(cfg, d);
      const SparseFit f = solve_fixed_lambda(cfg, d, lam);
      EXPECT_LE(kkt_residual(c, d, f, lam), 1e-7) << "seed " << seed << " c " << c;
      cfg.kkt_tol = 1e-11;
      const SparseFit tight = solve_fixed_lambda(cfg, d, lam);
      EXPECT_LE(objective(c, d, f, lam) - objective(c, d, tight, lam), 1e-8);
      // Intercept follows the tie-break for the returned theta.
      EXPECT_NEAR(f.q, intercept_for(cfg.c, d, f.theta), 1e-12);
    }
  }
}

TEST(SolveFixedLambda, CapIsRespected) {
  const Dataset d = oracle::random_instance(16, 6, 21, 0.2, 6);
  PathConfig cfg;
  cfg.alpha = 0.3;  // radius 16^0.3 ~ 2.3, well below the unconstrained norm
  const double lam = 0.01 * lambda_max(cfg, d);
  const SparseFit f = solve_fixed_lambda(cfg, d, lam);
  EXPECT_LE(f.theta.lpNorm<1>(), cfg.cap_radius(d.n()) + 1e-8);
  const KktReport rep = kkt_certificate(cfg, d, f, lam);
  EXPECT_LE(rep.residual, cfg.kkt_tol);
  EXPECT_TRUE(rep.cap_active);
  // No feasible point on a segment towards random feasible points does better.
  const double base = objective(2.0, d, f, lam);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int t = 0; t < 200; ++t) {
    Eigen::VectorXd th(6);
    for (auto& v : th) v = g(rng);
    th *= cfg.cap_radius(d.n()) / th.lpNorm<1>() * 0.999;
    for (double s : {0.01, 0.1}) {
      SparseFit alt(0.0, (1 - s) * f.theta + s * th);
      alt.q = intercept_for(cfg.c, d, alt.theta);
      EXPECT_GE(objective(2.0, d, alt, lam), base - 1e-9);
    }
  }
}

TEST(SolveFixedLambda, RejectsBadLambda) {
  const Dataset d = oracle::random_instance(10, 3, 1);
  EXPECT_THROW(solve_fixed_lambda(PathConfig{}, d, 0.0), DomainError);
  EXPECT_THROW(solve_fixed_lambda(PathConfig{}, d, -1.0), DomainError);
}

TEST(SolveFixedLambda, BudgetExhaustionCarriesResidual) {
  const Dataset d = oracle::random_instance(30, 8, 4);
  PathConfig cfg;
  cfg.kkt_tol = 1e-7;
  SolverOptions opts;
  opts.max_iterations = 1;
  opts.check_every = 1;
  const double lam = 0.05 * lambda_max(cfg, d);
  try {
    solve_fixed_lambda(cfg, d, lam, std::nullopt, opts);
    FAIL() << "expected a SolverError";
  } catch (const SolverError& e) {
    EXPECT_TRUE(std::isfinite(e.last_residual()));
    EXPECT_GT(e.last_residual(), cfg.kkt_tol);
  }
}

TEST(FitGridFamily, WarmEqualsCold) {
  const Dataset d = oracle::random_instance(25, 6, 8);
  PathConfig cfg;
  cfg.kkt_tol = 1e-10;
  const LambdaGrid g = build_grid(lambda_max(cfg, d));
  const auto fits = fit_grid_family(cfg, d, g);
  ASSERT_EQ(fits.size(), 100u);
  EXPECT_EQ(fits.front().zero_norm, 0);
  for (std::size_t i = 0; i < fits.size(); i += 9) {
    const SparseFit cold = solve_fixed_lambda(cfg, d, g.values[i]);
    EXPECT_LE((cold.theta - fits[i].theta).lpNorm<Eigen::Infinity>(), 1e-6);
    EXPECT_NEAR(cold.q, fits[i].q, 1e-6);
    EXPECT_LE(kkt_certificate(cfg, d, fits[i], g.values[i]).residual, cfg.kkt_tol);
  }
}

TEST(FitGridFamily, ZeroResponseAllNull) {
  Dataset d(Eigen::MatrixXd::Random(12, 3), Eigen::VectorXd::Zero(12));
  const auto fits = fit_grid_family(PathConfig{}, d, build_grid(1.0));
  for (const auto& f : fits) EXPECT_EQ(f.zero_norm, 0);
}

TEST(KktCertificate, DetectsSuboptimalFit) {
  const Dataset d = oracle::random_instance(20, 4, 2);
  PathConfig cfg;
  const double lam = 0.3 * lambda_max(cfg, d);
  SparseFit f = solve_fixed_lambda(cfg, d, lam);
  EXPECT_LE(kkt_certificate(cfg, d, f, lam).residual, 1e-7);
  f.theta(0) += 0.1;
  EXPECT_GT(kkt_certificate(cfg, d, f, lam).residual, 1e-3);
}
