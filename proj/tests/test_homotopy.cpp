#include <random>
#include <set>

#include <gtest/gtest.h>

#include "agghoo/families.hpp"
#include "agghoo/homotopy.hpp"
#include "oracles.hpp"

using namespace agghoo;

namespace {

PathConfig config(double c, bool cap = true) {
  PathConfig cfg;
  cfg.c = HuberParam(c);
  cfg.cap_enabled = cap;
  return cfg;
}

double linf(const SparseFit& a, const SparseFit& b) {
  return std::max(std::abs(a.q - b.q), (a.theta - b.theta).lpNorm<Eigen::Infinity>());
}

std::set<Eigen::Index> support(const Eigen::VectorXd& t) {
  std::set<Eigen::Index> s;
  for (Eigen::Index j = 0; j < t.size(); ++j) {
    if (t(j) != 0.0) s.insert(j);
  }
  return s;
}

}  // namespace

TEST(Homotopy, ZeroResponseSingleKnot) {
  Dataset d(Eigen::MatrixXd::Random(8, 3), Eigen::VectorXd::Zero(8));
  const SolutionPath p = homotopy_path(PathConfig{}, d);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p.fits[0].zero_norm, 0);
  EXPECT_EQ(p.fits[0].q, 0.0);
  EXPECT_EQ(p.at(0.3).zero_norm, 0);
}

TEST(Homotopy, KnotsDecreaseAndFitsAreCertified) {
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    for (double c : {0.5, 2.0, 10.0}) {
      const Dataset d = oracle::random_instance(30, 10, seed);
      PathConfig cfg = config(c);
      const SolutionPath p = homotopy_path(cfg, d);
      ASSERT_GE(p.size(), 2u);
      for (std::size_t m = 0; m < p.size(); ++m) {
        if (m > 0) EXPECT_LT(p.knots[m], p.knots[m - 1]);
        EXPECT_LE(kkt_certificate(cfg, d, p.fits[m], p.knots[m]).residual, 1e-7) << "seed " << seed << " knot " << m;
        EXPECT_LE(p.fits[m].theta.lpNorm<1>(), cfg.cap_radius(d.n()) + 1e-8);
      }
      // Affine interpolation at piece midpoints.
      for (std::size_t m = 0; m + 1 < p.size(); ++m) {
        const double mid = 0.5 * (p.knots[m] + p.knots[m + 1]);
        EXPECT_LE(kkt_certificate(cfg, d, p.at(mid), mid).residual, 1e-6) << "seed " << seed << " piece " << m;
      }
    }
  }
}

TEST(Homotopy, MatchesFixedLambdaOracle) {
  std::mt19937_64 rng(99);
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    std::uniform_int_distribution<int> nd(20, 40), dd(3, 15);
    const int n = nd(rng), dim = dd(rng);
    for (double c : {0.5, 2.0, 10.0}) {
      const Dataset d = oracle::random_instance(n, dim, seed);
      PathConfig cfg = config(c);
      const SolutionPath p = homotopy_path(cfg, d);
      PathConfig tight = cfg;
      tight.kkt_tol = 1e-10;
      std::uniform_real_distribution<double> u(0.02, 1.0);
      for (int t = 0; t < 8; ++t) {
        const double lam = u(rng) * p.knots.front();
        const SparseFit a = path_fit_at(p, cfg, d, lam);
        const SparseFit b = solve_fixed_lambda(tight, d, lam);
        EXPECT_LE(linf(a, b), 1e-4) << "seed " << seed << " c " << c << " lambda " << lam;
      }
    }
  }
}

TEST(Homotopy, QuadraticRegimeEqualsLars) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    const int n = 30, dim = 7;
    Eigen::MatrixXd x(n, dim);
    for (auto& v : x.reshaped()) v = g(rng);
    Eigen::VectorXd w(dim);
    for (auto& v : w) v = g(rng);
    Eigen::VectorXd y = x * w;
    for (auto& v : y) v += 0.5 * g(rng);
    const Dataset d(x, y);
    const PathConfig cfg = config(1e4, false);
    const SolutionPath p = homotopy_path(cfg, d);
    const oracle::LarsPath ref = oracle::lars_lasso(x, y);
    ASSERT_EQ(p.size(), ref.lambdas.size()) << "seed " << seed;
    for (std::size_t m = 0; m < p.size(); ++m) {
      EXPECT_NEAR(p.knots[m], ref.lambdas[m], 1e-6);
      EXPECT_LE((p.fits[m].theta - ref.thetas[m]).lpNorm<Eigen::Infinity>(), 1e-6);
      EXPECT_NEAR(p.fits[m].q, ref.intercepts[m], 1e-6);
    }
  }
}

TEST(Homotopy, CapTruncatesAndStaysConstant) {
  const Dataset d = oracle::random_instance(25, 8, 5, 0.2, 8);
  PathConfig cfg = config(2.0);
  cfg.alpha = 0.35;
  const SolutionPath p = homotopy_path(cfg, d);
  ASSERT_TRUE(p.truncated_at.has_value());
  EXPECT_EQ(*p.truncated_at, p.knots.back());
  EXPECT_NEAR(p.fits.back().theta.lpNorm<1>(), cfg.cap_radius(d.n()), 1e-8);
  const SparseFit below = p.at(0.5 * p.knots.back());
  EXPECT_EQ(linf(below, p.fits.back()), 0.0);
  // The capped problem below the truncation has the same solution.
  PathConfig tight = cfg;
  tight.kkt_tol = 1e-10;
  EXPECT_LE(linf(solve_fixed_lambda(tight, d, 0.9 * p.knots.back()), p.fits.back()), 1e-4);
}

TEST(Homotopy, WideDesignReachesZeroWithinBudget) {
  // d > n without a cap: the path ends at an interpolating fit as lambda -> 0.
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Dataset d = oracle::random_instance(30, 60, seed, 0.5, 5);
    const PathConfig cfg = config(2.0, false);
    const SolutionPath p = homotopy_path(cfg, d);
    EXPECT_TRUE(p.complete) << "seed " << seed;
    EXPECT_TRUE(p.reached_zero);
    EXPECT_LT(p.size(), static_cast<std::size_t>(cfg.knot_budget(30, 60)));
    EXPECT_GT(p.knots.back(), 1e-10 * p.knots.front());
    const double lam = 0.5 * p.knots.back();
    EXPECT_LE(kkt_certificate(cfg, d, p.at(lam), lam).residual, 1e-7);
  }
}

TEST(Homotopy, KnotBudgetMarksIncomplete) {
  const Dataset d = oracle::random_instance(30, 10, 3);
  PathConfig cfg = config(2.0);
  cfg.max_knots = 3;
  const SolutionPath p = homotopy_path(cfg, d);
  EXPECT_FALSE(p.complete);
  EXPECT_FALSE(p.warnings.empty());
  EXPECT_LE(p.size(), 3u);
  const double below = 0.5 * p.knots.back();
  EXPECT_THROW(p.at(below), PathError);
  // Grid readers fall back to the fixed-lambda solver.
  EXPECT_LE(kkt_certificate(cfg, d, path_fit_at(p, cfg, d, below), below).residual, 1e-7);
}

TEST(ZeroNormFamily, LastKnotRule) {
  // Supports by knot: {0}, {0,1}, {0}, {0,1}, {0,1,2}; every knot changes the support.
  SolutionPath p;
  const int dim = 3;
  p.null = SparseFit::null(dim, 0.25);
  const std::vector<std::vector<Eigen::Index>> sup{{0}, {0, 1}, {0}, {0, 1}, {0, 1, 2}};
  for (std::size_t m = 0; m < sup.size(); ++m) {
    Eigen::VectorXd t = Eigen::VectorXd::Zero(dim);
    for (auto j : sup[m]) t(j) = 1.0 + static_cast<double>(m);
    p.knots.push_back(5.0 - static_cast<double>(m));
    p.fits.emplace_back(0.0, t);
    p.events.push_back({});
    p.piece_active.push_back(sup[m]);
    p.slope_below.push_back(Eigen::VectorXd::Zero(dim + 1));
  }
  const ZeroNormFamily fam = zero_norm_family(p, 4);
  EXPECT_EQ(fam.knot[2], 3);  // the fourth knot
  EXPECT_EQ(fam.knot[1], 2);
  EXPECT_EQ(fam.knot[3], 4);
  EXPECT_EQ(fam.knot[4], -1);
  EXPECT_EQ(fam.fits[4].theta, p.null.theta);
  EXPECT_EQ(fam.fits[4].q, 0.25);
  EXPECT_EQ(fam.fits[0].zero_norm, 0);
  EXPECT_THROW(zero_norm_family(p, 0), DomainError);
  EXPECT_THROW(zero_norm_family(SolutionPath{}, 2), DomainError);
}

TEST(ZeroNormFamily, MatchesSupportScan) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (double c : {0.5, 2.0, 10.0}) {
      const Dataset d = oracle::random_instance(30, 10, seed);
      const PathConfig cfg = config(c);
      const SolutionPath p = homotopy_path(cfg, d);
      const int K = 10;
      const ZeroNormFamily fam = zero_norm_family(p, K);
      // Support of each open piece from the interpolated knot fits (no piece bookkeeping).
      std::vector<std::set<Eigen::Index>> below(p.size());
      for (std::size_t m = 0; m + 1 < p.size(); ++m) below[m] = support(0.5 * (p.fits[m].theta + p.fits[m + 1].theta));
      if (p.truncated_at) {
        below.back() = support(p.fits.back().theta);
      } else {
        PathConfig tight = cfg;
        tight.kkt_tol = 1e-11;
        below.back() = support(solve_fixed_lambda(tight, d, 0.5 * p.knots.back()).theta);
      }
      std::vector<long> expect(K + 1, -1);
      std::set<Eigen::Index> above;
      for (std::size_t m = 0; m < p.size(); ++m) {
        const bool change = below[m] != above || (m + 1 == p.size() && p.truncated_at);
        const int k = p.fits[m].zero_norm;
        if (change && k >= 1 && k <= K) expect[k] = static_cast<long>(m);
        above = below[m];
      }
      for (int k = 0; k <= K; ++k) {
        EXPECT_LE(fam.fits[k].zero_norm, k);
        EXPECT_EQ(fam.knot[k], expect[k]) << "seed " << seed << " c " << c << " k " << k;
      }
    }
  }
}

TEST(Families, GridMembersAgreeWithDirectSolves) {
  const Dataset d = oracle::random_instance(30, 8, 17);
  const PathConfig cfg = config(2.0);
  const LambdaGrid g = build_grid(lambda_max(cfg, d));
  const auto a = grid_members(homotopy_path(cfg, d), cfg, d, g);
  const auto b = fit_grid_family(cfg, d, g);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LE(linf(a[i], b[i]), 1e-4);
  const auto z = zero_norm_members(homotopy_path(cfg, d), 5);
  ASSERT_EQ(z.size(), 5u);
  for (int k = 0; k < 5; ++k) EXPECT_LE(z[k].zero_norm, k + 1);
}
