#pragma once

// Simulation harness: repeated train/test draws, every (method, parametrization, tau, V), test
// excess risks, oracle baselines and the G statistic, with CSV/JSON output.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "agghoo/errors.hpp"
#include "agghoo/families.hpp"
#include "agghoo/fixed_lambda.hpp"
#include "agghoo/homotopy.hpp"
#include "agghoo/huber.hpp"
#include "agghoo/model_select.hpp"
#include "agghoo/sim_data.hpp"

namespace agghoo {

enum class Method { Agghoo, Cv, Agcv };
enum class Param { Grid, ZeroNorm };

struct MethodId {
  Method method;
  Param param;

  std::string name() const {
    const char* m = method == Method::Agghoo ? "agghoo" : (method == Method::Cv ? "cv" : "agcv");
    return std::string(m) + (param == Param::Grid ? "_grid" : "_zeronorm");
  }
  bool operator==(const MethodId&) const = default;
};

inline std::vector<MethodId> all_methods() {
  std::vector<MethodId> out;
  for (Param p : {Param::Grid, Param::ZeroNorm}) {
    for (Method m : {Method::Agghoo, Method::Cv, Method::Agcv}) out.push_back({m, p});
  }
  return out;
}

inline MethodId method_from_name(const std::string& s) {
  for (const auto& m : all_methods()) {
    if (m.name() == s) return m;
  }
  throw DomainError("unknown method: " + s);
}

struct ExperimentPlan {
  SetupConfig setup = Setup1Config{};
  std::vector<MethodId> methods = all_methods();
  std::vector<double> taus{0.8, 0.9};
  std::vector<int> Vs{1, 5, 10};
  int repetitions = 100;
  Eigen::Index test_size = 500;
  std::uint64_t seed = 1;
  int threads = 1;
  double alpha = 0.75;
  bool cap_enabled = true;
  int zero_norm_K = 0;          // 0 selects min(n_t, d)
  int lambda_max_datasets = 10;  // datasets averaged for the fixed grid's top

  void validate() const {
    if (repetitions < 1) throw DomainError("plan: repetitions must be >= 1");
    if (test_size < 1) throw DomainError("plan: test size must be >= 1");
    if (taus.empty() || Vs.empty() || methods.empty()) throw DomainError("plan: empty tau, V or method list");
    for (double t : taus) {
      if (!(t > 0.0 && t < 1.0)) throw DomainError("plan: tau values must lie in (0, 1)");
    }
    for (int v : Vs) {
      if (v < 1) throw DomainError("plan: V values must be >= 1");
    }
    if (threads < 1) throw DomainError("plan: threads must be >= 1");
    if (!(alpha > 0.0)) throw DomainError("plan: alpha must be positive");
    if (lambda_max_datasets < 1) throw DomainError("plan: lambda_max_datasets must be >= 1");
    std::visit([](const auto& c) { c.validate(); }, setup);
  }

  PathConfig path_config() const {
    PathConfig cfg;
    cfg.c = HuberParam(setup_c(setup));
    cfg.alpha = alpha;
    cfg.cap_enabled = cap_enabled;
    return cfg;
  }

  int K_for(std::size_t n_t) const {
    const auto d = static_cast<std::size_t>(setup_d(setup));
    return zero_norm_K > 0 ? zero_norm_K : static_cast<int>(std::min(n_t, d));
  }
};

// ---------------------------------------------------------------- statistics

/// Mean over the test set of phi_c(y - f(x)) - phi_c(y - s(x)).
inline double excess_risk_hat(const HuberParam& c, const SparseFit& f, const Dataset& test, const GroundTruth& truth) {
  if (f.theta.size() != test.d() || truth.w_star.size() != test.d()) throw DomainError("excess_risk_hat: dimension mismatch");
  const Eigen::VectorXd pred = (test.x * f.theta).array() + f.q;
  const Eigen::VectorXd bayes = test.x * truth.w_star;
  double s = 0.0;
  for (Eigen::Index i = 0; i < test.n(); ++i) {
    s += detail::loss_unchecked(c.value(), test.y(i) - pred(i)) - detail::loss_unchecked(c.value(), test.y(i) - bayes(i));
  }
  return s / static_cast<double>(test.n());
}

struct OracleResult {
  int k = 0;  // label, first member = first_index
  double risk = 0.0;
};

inline OracleResult oracle_risk(const HuberParam& c, const std::vector<SparseFit>& family, const Dataset& test,
                                const GroundTruth& truth, int first_index = 1) {
  if (family.empty()) throw DomainError("oracle_risk: empty family");
  std::vector<double> r;
  r.reserve(family.size());
  for (const auto& f : family) r.push_back(excess_risk_hat(c, f, test, truth));
  const std::size_t k = min_argmin(r);
  return {first_index + static_cast<int>(k), r[k]};
}

/// Signed infinity when the spread vanishes but the mean does not.
inline double g_statistic(const std::vector<double>& diffs) {
  if (diffs.size() < 2) throw DomainError("g_statistic: need at least two values");
  double mean = 0.0;
  for (double x : diffs) mean += x;
  mean /= static_cast<double>(diffs.size());
  double ss = 0.0;
  for (double x : diffs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(diffs.size() - 1));
  if (sd == 0.0) {
    if (mean == 0.0) return 0.0;
    return mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  }
  return mean / sd;
}

inline double sample_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = sample_mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// ---------------------------------------------------------------- report

struct RiskRow {
  std::string method;
  double tau;
  int V;
  int rep;
  double risk;
};

struct SummaryRow {
  std::string method;
  double tau;
  int V;
  double mean;
  double sd;
  int count;
  double tau_star;
  double g;
};

struct RepetitionResult {
  bool ok = false;
  std::string error;
  std::vector<RiskRow> rows;
  double oracle_grid = 0.0;
  double oracle_zeronorm = 0.0;
  int jensen_violations = 0;
  double jensen_worst = -std::numeric_limits<double>::infinity();  // max(ag - mean components)
};

struct ExperimentReport {
  std::vector<RiskRow> rows;  // sorted by method, tau, V, rep
  std::vector<SummaryRow> summary;
  std::vector<int> reps_ok;
  std::vector<double> oracle_grid;      // per included repetition
  std::vector<double> oracle_zeronorm;
  std::vector<int> failed_reps;
  std::vector<std::string> failure_messages;
  int jensen_violations = 0;
  double jensen_worst = -std::numeric_limits<double>::infinity();
  double lambda_max_fixed = 0.0;
  double seconds = 0.0;

  /// Per-repetition risks of one (method, tau, V) in repetition order.
  std::vector<double> risks(const std::string& method, double tau, int V) const {
    std::vector<double> out;
    for (const auto& r : rows) {
      if (r.method == method && r.tau == tau && r.V == V) out.push_back(r.risk);
    }
    return out;
  }

  const SummaryRow& find(const std::string& method, double tau, int V) const {
    for (const auto& s : summary) {
      if (s.method == method && s.tau == tau && s.V == V) return s;
    }
    throw DomainError("no summary row for " + method);
  }
};

namespace detail {

inline std::uint64_t rep_seed(std::uint64_t base, int rep) { return base ^ static_cast<std::uint64_t>(rep); }

/// Fixed grid top: mean lambda_max over independent seeded datasets of the plan's setup.
inline double fixed_lambda_max(const ExperimentPlan& plan, const PathConfig& cfg) {
  double s = 0.0;
  const Eigen::Index n = setup_n(plan.setup);
  for (int i = 0; i < plan.lambda_max_datasets; ++i) {
    const std::uint64_t seed = substream(plan.seed, 0x6c616d6264610000ULL + static_cast<std::uint64_t>(i));
    const GroundTruth t = draw_truth(plan.setup, substream(seed, 1));
    s += lambda_max(cfg, sample(plan.setup, t, n, substream(seed, 2)));
  }
  return s / plan.lambda_max_datasets;
}

struct TauWork {
  SplitScheme splits;                          // Vmax subsets
  TrainedSplits grid;                          // per split + full
  TrainedSplits zero;
  std::vector<std::vector<double>> grid_risk;  // validation risks per split
  std::vector<std::vector<double>> zero_risk;
};

inline SplitScheme prefix(const SplitScheme& s, std::size_t V) {
  SplitScheme out = s;
  out.subsets.resize(V);
  return out;
}

inline TrainedSplits prefix(const TrainedSplits& t, std::size_t V) {
  TrainedSplits out;
  out.per_split.assign(t.per_split.begin(), t.per_split.begin() + static_cast<std::ptrdiff_t>(V));
  out.full = t.full;
  out.first_index = t.first_index;
  return out;
}

template <class T>
std::vector<T> prefix(const std::vector<T>& v, std::size_t V) {
  return std::vector<T>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(V));
}

inline RepetitionResult run_repetition(const ExperimentPlan& plan, const PathConfig& cfg, const LambdaGrid& grid, int rep) {
  RepetitionResult res;
  const std::uint64_t seed = rep_seed(plan.seed, rep);
  const HuberParam& c = cfg.c;
  const GroundTruth truth = draw_truth(plan.setup, substream(seed, 1));
  const Dataset train = sample(plan.setup, truth, setup_n(plan.setup), substream(seed, 2));
  const Dataset test = sample(plan.setup, truth, plan.test_size, substream(seed, 3));
  const auto n = static_cast<std::size_t>(train.n());
  const int vmax = *std::max_element(plan.Vs.begin(), plan.Vs.end());

  const SolutionPath full_path = homotopy_path(cfg, train);
  const std::vector<SparseFit> full_grid = grid_members(full_path, cfg, train, grid);
  const int k_full = static_cast<int>(std::min<Eigen::Index>(train.n(), train.d()));
  const std::vector<SparseFit> full_zero = zero_norm_members(full_path, std::max(k_full, plan.zero_norm_K));

  res.oracle_grid = oracle_risk(c, full_grid, test, truth).risk;

  bool zero_oracle_set = false;
  for (std::size_t ti = 0; ti < plan.taus.size(); ++ti) {
    const double tau = plan.taus[ti];
    TauWork w;
    w.splits = monte_carlo_splits(n, tau, static_cast<std::size_t>(vmax), substream(seed, 16 + ti));
    const int K = plan.K_for(w.splits.n_t);
    w.grid.first_index = w.zero.first_index = 1;
    w.grid.full = full_grid;
    w.zero.full.assign(full_zero.begin(), full_zero.begin() + K);
    if (!zero_oracle_set) {
      res.oracle_zeronorm = oracle_risk(c, w.zero.full, test, truth).risk;
      zero_oracle_set = true;
    }
    for (std::size_t v = 0; v < w.splits.size(); ++v) {
      const Dataset sub = train.subset(w.splits.subsets[v]);
      const SolutionPath p = homotopy_path(cfg, sub);
      w.grid.per_split.push_back(grid_members(p, cfg, sub, grid));
      w.zero.per_split.push_back(zero_norm_members(p, K));
      const auto val = w.splits.complement(v);
      w.grid_risk.push_back(validation_risks(c, w.grid.per_split.back(), train, val));
      w.zero_risk.push_back(validation_risks(c, w.zero.per_split.back(), train, val));
    }
    for (int V : plan.Vs) {
      const auto uV = static_cast<std::size_t>(V);
      const SplitScheme s = prefix(w.splits, uV);
      for (const auto& m : plan.methods) {
        const TrainedSplits ts = prefix(m.param == Param::Grid ? w.grid : w.zero, uV);
        const auto risks = prefix(m.param == Param::Grid ? w.grid_risk : w.zero_risk, uV);
        SparseFit f;
        if (m.method == Method::Cv) {
          f = cv_from(ts, risks, s).fit;
        } else {
          const AggregatePredictor ag = m.method == Method::Agghoo ? agghoo_from(ts, risks, s) : agcv_from(ts, risks, s);
          f = ag.as_fit();
          // Convexity: the averaged predictor's test risk is at most the mean component risk.
          double comp = 0.0;
          for (const auto& sel : ag.per_split) comp += empirical_risk(c, sel.fit, test);
          comp /= static_cast<double>(ag.per_split.size());
          const double gap = empirical_risk(c, f, test) - comp;
          res.jensen_worst = std::max(res.jensen_worst, gap);
          if (gap > 1e-12) ++res.jensen_violations;
        }
        res.rows.push_back({m.name(), tau, V, rep, excess_risk_hat(c, f, test, truth)});
      }
    }
  }
  res.ok = true;
  return res;
}

inline std::string fmt(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// Runs every repetition (on `plan.threads` workers), then aggregates in repetition order.
inline ExperimentReport run_experiment(const ExperimentPlan& plan) {
  plan.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const PathConfig cfg = plan.path_config();
  ExperimentReport rep;
  rep.lambda_max_fixed = detail::fixed_lambda_max(plan, cfg);
  const LambdaGrid grid = build_grid(rep.lambda_max_fixed);

  std::vector<RepetitionResult> results(static_cast<std::size_t>(plan.repetitions));
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int j = next.fetch_add(1);
      if (j >= plan.repetitions) return;
      auto& out = results[static_cast<std::size_t>(j)];
      try {
        out = detail::run_repetition(plan, cfg, grid, j);
      } catch (const PathError& e) {
        out.error = e.what();
      } catch (const SolverError& e) {
        out.error = e.what();
      }
    }
  };
  const int width = std::min(plan.threads, plan.repetitions);
  std::vector<std::thread> pool;
  for (int t = 1; t < width; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  for (int j = 0; j < plan.repetitions; ++j) {
    auto& r = results[static_cast<std::size_t>(j)];
    if (!r.ok) {
      rep.failed_reps.push_back(j);
      rep.failure_messages.push_back(r.error);
      continue;
    }
    rep.reps_ok.push_back(j);
    rep.oracle_grid.push_back(r.oracle_grid);
    rep.oracle_zeronorm.push_back(r.oracle_zeronorm);
    rep.jensen_violations += r.jensen_violations;
    rep.jensen_worst = std::max(rep.jensen_worst, r.jensen_worst);
    rep.rows.insert(rep.rows.end(), r.rows.begin(), r.rows.end());
  }
  if (rep.failed_reps.size() * 100 > static_cast<std::size_t>(plan.repetitions)) {
    throw PathError("experiment aborted: " + std::to_string(rep.failed_reps.size()) + " of " +
                    std::to_string(plan.repetitions) + " repetitions failed; first: " + rep.failure_messages.front());
  }
  std::stable_sort(rep.rows.begin(), rep.rows.end(), [&](const RiskRow& a, const RiskRow& b) {
    auto pos = [&](const std::string& m) {
      for (std::size_t i = 0; i < plan.methods.size(); ++i) {
        if (plan.methods[i].name() == m) return i;
      }
      return plan.methods.size();
    };
    if (a.method != b.method) return pos(a.method) < pos(b.method);
    if (a.tau != b.tau) return a.tau < b.tau;
    if (a.V != b.V) return a.V < b.V;
    return a.rep < b.rep;
  });

  for (const auto& m : plan.methods) {
    for (int V : plan.Vs) {
      // tau_* = smallest tau attaining the minimal mean risk.
      std::vector<double> taus = plan.taus;
      std::sort(taus.begin(), taus.end());
      std::vector<double> means;
      for (double tau : taus) means.push_back(sample_mean(rep.risks(m.name(), tau, V)));
      const double tau_star = taus[min_argmin(means)];
      const auto base = rep.risks(m.name(), tau_star, V);
      for (double tau : taus) {
        const auto r = rep.risks(m.name(), tau, V);
        std::vector<double> diff(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) diff[i] = r[i] - base[i];
        const double g = r.size() >= 2 ? g_statistic(diff) : std::numeric_limits<double>::quiet_NaN();
        rep.summary.push_back({m.name(), tau, V, sample_mean(r), sample_sd(r), static_cast<int>(r.size()), tau_star, g});
      }
    }
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// ---------------------------------------------------------------- plan / report I/O

inline ExperimentPlan plan_from_json(const nlohmann::json& j) {
  ExperimentPlan p;
  for (const auto& [k, v] : j.items()) {
    static const std::vector<std::string> known{"setup", "methods", "taus", "Vs", "repetitions", "test_size", "seed",
                                                "threads", "alpha", "cap_enabled", "zero_norm_K", "lambda_max_datasets"};
    if (std::find(known.begin(), known.end(), k) == known.end()) throw DomainError("unknown plan key: " + k);
  }
  if (!j.contains("setup")) throw DomainError("plan needs a 'setup' object");
  p.setup = setup_from_json(j.at("setup"));
  if (j.contains("methods")) {
    p.methods.clear();
    for (const auto& m : j.at("methods")) p.methods.push_back(method_from_name(m.get<std::string>()));
  }
  if (j.contains("taus")) p.taus = j.at("taus").get<std::vector<double>>();
  if (j.contains("Vs")) p.Vs = j.at("Vs").get<std::vector<int>>();
  p.repetitions = j.value("repetitions", p.repetitions);
  p.test_size = j.value("test_size", p.test_size);
  p.seed = j.value("seed", p.seed);
  p.threads = j.value("threads", p.threads);
  p.alpha = j.value("alpha", p.alpha);
  p.cap_enabled = j.value("cap_enabled", p.cap_enabled);
  p.zero_norm_K = j.value("zero_norm_K", p.zero_norm_K);
  p.lambda_max_datasets = j.value("lambda_max_datasets", p.lambda_max_datasets);
  p.validate();
  return p;
}

inline nlohmann::json plan_to_json(const ExperimentPlan& p) {
  std::vector<std::string> methods;
  for (const auto& m : p.methods) methods.push_back(m.name());
  return {{"setup", setup_to_json(p.setup)}, {"methods", methods}, {"taus", p.taus}, {"Vs", p.Vs},
          {"repetitions", p.repetitions}, {"test_size", p.test_size}, {"seed", p.seed}, {"threads", p.threads},
          {"alpha", p.alpha}, {"cap_enabled", p.cap_enabled}, {"zero_norm_K", p.zero_norm_K},
          {"lambda_max_datasets", p.lambda_max_datasets}};
}

/// report.csv: one row per (method, tau, V, repetition), followed by oracle rows.
inline std::string report_csv(const ExperimentReport& r) {
  std::ostringstream out;
  out << "method,tau,V,rep,excess_risk\n";
  for (const auto& row : r.rows) {
    out << row.method << ',' << detail::fmt(row.tau) << ',' << row.V << ',' << row.rep << ',' << detail::fmt(row.risk) << '\n';
  }
  for (std::size_t i = 0; i < r.reps_ok.size(); ++i) {
    out << "oracle_grid,,," << r.reps_ok[i] << ',' << detail::fmt(r.oracle_grid[i]) << '\n';
  }
  for (std::size_t i = 0; i < r.reps_ok.size(); ++i) {
    out << "oracle_zeronorm,,," << r.reps_ok[i] << ',' << detail::fmt(r.oracle_zeronorm[i]) << '\n';
  }
  return out.str();
}

/// gstats.csv: mean, sd, 90% normal error bar (z = 1.645), tau_* and G per (method, tau, V).
inline std::string gstats_csv(const ExperimentReport& r) {
  constexpr double z = 1.645;
  std::ostringstream out;
  out << "method,tau,V,mean,sd,count,err90_low,err90_high,tau_star,G\n";
  for (const auto& s : r.summary) {
    const double half = s.count > 0 ? z * s.sd / std::sqrt(static_cast<double>(s.count)) : 0.0;
    out << s.method << ',' << detail::fmt(s.tau) << ',' << s.V << ',' << detail::fmt(s.mean) << ',' << detail::fmt(s.sd)
        << ',' << s.count << ',' << detail::fmt(s.mean - half) << ',' << detail::fmt(s.mean + half) << ','
        << detail::fmt(s.tau_star) << ',' << detail::fmt(s.g) << '\n';
  }
  const double om = sample_mean(r.oracle_grid);
  out << "oracle_grid,,," << detail::fmt(om) << ',' << detail::fmt(sample_sd(r.oracle_grid)) << ','
      << r.oracle_grid.size() << ",,,,\n";
  out << "oracle_zeronorm,,," << detail::fmt(sample_mean(r.oracle_zeronorm)) << ','
      << detail::fmt(sample_sd(r.oracle_zeronorm)) << ',' << r.oracle_zeronorm.size() << ",,,,\n";
  return out.str();
}

inline nlohmann::json report_meta(const ExperimentPlan& p, const ExperimentReport& r) {
  return {{"plan", plan_to_json(p)},
          {"lambda_max_fixed", r.lambda_max_fixed},
          {"repetitions_ok", r.reps_ok.size()},
          {"failed_repetitions", r.failed_reps},
          {"failure_messages", r.failure_messages},
          {"jensen_violations", r.jensen_violations},
          {"jensen_worst_gap", r.jensen_worst},
          {"error_bars", "mean +- 1.645 sd / sqrt(J) (normal approximation, 90%)"},
          {"seconds", r.seconds}};
}

inline void write_report(const std::string& dir, const ExperimentPlan& p, const ExperimentReport& r) {
  auto put = [](const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw DomainError("cannot open " + path);
    f << text;
  };
  put(dir + "/report.csv", report_csv(r));
  put(dir + "/gstats.csv", gstats_csv(r));
  put(dir + "/meta.json", report_meta(p, r).dump(2) + "\n");
}

}  // namespace agghoo
