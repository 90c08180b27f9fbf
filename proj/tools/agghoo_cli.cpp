// agghoo_cli: path / fit / simulate / bench / audit.
// Exit codes: 0 success, 2 invalid input, 3 solver or path failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "agghoo/agghoo.hpp"

namespace {

using nlohmann::json;

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw agghoo::DomainError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw agghoo::DomainError(path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw agghoo::DomainError("cannot open " + path);
  out << text;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

agghoo::PathConfig path_config(double c, double alpha, bool no_cap) {
  agghoo::PathConfig cfg;
  cfg.c = agghoo::HuberParam(c);
  cfg.alpha = alpha;
  cfg.cap_enabled = !no_cap;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Huberized Lasso paths, hold-out aggregation and simulation benchmarks"};
  app.require_subcommand(1);

  std::string input, out;
  double c = 2.0, alpha = 0.75;
  bool no_cap = false;

  auto* path = app.add_subcommand("path", "compute the solution path of a dataset");
  bool grid = false, knots = false, sparse = false;
  path->add_option("--input", input, "dataset CSV (y, x_0, ...)")->required();
  path->add_option("--c", c, "Huber threshold");
  path->add_option("--alpha", alpha, "l1 cap exponent: radius n^alpha");
  path->add_flag("--no-cap", no_cap, "disable the l1 cap");
  path->add_flag("--grid", grid, "emit fits on the 100-point lambda grid");
  path->add_flag("--knots", knots, "emit the knots (default)");
  path->add_flag("--sparse", sparse, "emit knots as (knot_index, j, theta_j) triplets");
  path->add_option("--out", out, "output CSV ('-' for stdout)");

  auto* fit = app.add_subcommand("fit", "select and aggregate over Monte-Carlo splits");
  std::string method = "agghoo", param = "grid";
  double tau = 0.8;
  int V = 10, K = 0;
  std::uint64_t seed = 1;
  fit->add_option("--method", method)->check(CLI::IsMember({"agghoo", "cv", "agcv"}));
  fit->add_option("--param", param)->check(CLI::IsMember({"grid", "zeronorm"}));
  fit->add_option("--tau", tau, "training fraction");
  fit->add_option("--V", V, "number of splits");
  fit->add_option("--K", K, "zero-norm family size (default min(n_t, d))");
  fit->add_option("--seed", seed);
  fit->add_option("--input", input)->required();
  fit->add_option("--c", c);
  fit->add_option("--alpha", alpha);
  fit->add_flag("--no-cap", no_cap);
  fit->add_option("--out", out, "model JSON ('-' for stdout)");

  auto* sim = app.add_subcommand("simulate", "draw a dataset from a simulation setup");
  int setup = 1;
  std::string config;
  sim->add_option("--setup", setup)->check(CLI::IsMember({1, 2, 3}));
  sim->add_option("--config", config, "setup JSON (missing keys take defaults)");
  sim->add_option("--seed", seed);
  sim->add_option("--out", out, "dataset CSV; a .json sidecar is written next to it")->required();

  auto* bench = app.add_subcommand("bench", "run a benchmark plan");
  std::string plan_path;
  int threads = 0;
  bench->add_option("--plan", plan_path)->required();
  bench->add_option("--threads", threads, "override the plan's parallelism width");
  bench->add_option("--out", out, "report directory")->required();

  auto* audit = app.add_subcommand("audit", "evaluate the theoretical conditions for a design");
  std::string design;
  audit->add_option("--design", design)->required();
  audit->add_option("--K", K, "sparsity level")->default_val(3);
  audit->add_option("--out", out, "report JSON ('-' for stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*path) {
      const auto data = agghoo::read_dataset_csv(input);
      const auto cfg = path_config(c, alpha, no_cap);
      const auto sp = agghoo::homotopy_path(cfg, data);
      for (const auto& w : sp.warnings) std::cerr << "warning: " << w << '\n';
      std::ostringstream s;
      if (grid && knots) throw agghoo::DomainError("--grid and --knots are exclusive");
      if (grid) {
        const auto g = agghoo::build_grid(agghoo::lambda_max(cfg, data));
        agghoo::write_fits_csv(s, g.values, agghoo::grid_members(sp, cfg, data, g));
      } else if (sparse) {
        agghoo::write_path_triplets(s, sp);
      } else {
        agghoo::write_path_csv(s, sp);
      }
      write_text(out, s.str());
    } else if (*fit) {
      const auto data = agghoo::read_dataset_csv(input);
      const auto cfg = path_config(c, alpha, no_cap);
      const auto splits =
          agghoo::monte_carlo_splits(static_cast<std::size_t>(data.n()), tau, static_cast<std::size_t>(V), seed);
      const int k = K > 0 ? K : static_cast<int>(std::min<std::size_t>(splits.n_t, static_cast<std::size_t>(data.d())));
      const auto family = param == "grid"
                              ? agghoo::grid_estimators(cfg, agghoo::build_grid(agghoo::lambda_max(cfg, data)))
                              : agghoo::zero_norm_estimators(cfg, k);
      json model = {{"method", method}, {"param", param}, {"tau", tau}, {"V", V}, {"seed", seed}, {"c", c},
                    {"alpha", alpha}, {"n_t", splits.n_t}};
      if (method == "cv") {
        const auto sel = agghoo::cv_select(family, data, splits, cfg.c);
        model["k"] = sel.k;
        model["q"] = sel.fit.q;
        model["theta"] = to_vec(sel.fit.theta);
        model["cv_risks"] = sel.risks;
      } else {
        const auto ag = method == "agghoo" ? agghoo::agghoo(family, data, splits, cfg.c)
                                           : agghoo::agcv(family, data, splits, cfg.c);
        json per = json::array();
        for (const auto& s : ag.per_split) per.push_back({{"k", s.k}, {"q", s.fit.q}, {"zero_norm", s.fit.zero_norm}});
        model["splits"] = per;
        model["q"] = ag.q;
        model["theta"] = to_vec(ag.theta);
      }
      write_text(out, model.dump(2) + "\n");
    } else if (*sim) {
      json j = config.empty() ? json::object() : read_json(config);
      if (j.contains("setup") && j.at("setup").get<int>() != setup) {
        throw agghoo::DomainError("config setup id disagrees with --setup");
      }
      j["setup"] = setup;
      const auto cfg = agghoo::setup_from_json(j);
      const auto s = agghoo::generate(cfg, seed);
      agghoo::write_dataset(out, s.data, cfg, s.truth, seed);
    } else if (*bench) {
      auto plan = agghoo::plan_from_json(read_json(plan_path));
      if (threads > 0) plan.threads = threads;
      std::filesystem::create_directories(out);
      const auto report = agghoo::run_experiment(plan);
      agghoo::write_report(out, plan, report);
      std::cerr << report.reps_ok.size() << " repetitions in " << report.seconds << " s\n";
    } else if (*audit) {
      const auto rep = agghoo::run_audit(read_json(design), K);
      write_text(out, rep.dump(2) + "\n");
    }
  } catch (const agghoo::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const agghoo::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 3;
  } catch (const agghoo::PathError& e) {
    std::cerr << "path failure: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
