#include "greensec/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "greensec/csv.hpp"
#include "greensec/deterrence.hpp"
#include "greensec/run_config.hpp"
#include "greensec/tensor_io.hpp"

namespace greensec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) { return format_double(v); }

void write_eval_csv(const std::string& path, const std::vector<EvalResult>& evals) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& e : evals)
    rows.push_back({e.method, num(e.max_regret), num(e.stderr_), num(e.audit_max_regret)});
  write_csv(path, {"method", "max_regret", "stderr", "audit_max_regret"}, rows);
}

std::vector<EnvParams> audit_thetas_for(const NatureDomain& domain, int audit_points,
                                        std::uint64_t seed) {
  std::vector<EnvParams> audit;
  if (audit_points > 0 && !domain.box.is_point() && !domain.finite()) {
    Rng rng(mix_seed(seed, 0xA0D17u));
    for (int k = 0; k < audit_points; ++k) audit.push_back(EnvParams{domain.box.sample(rng)});
  }
  return audit;
}

void write_run_artifacts(const std::string& out_dir, const MirrorResult& res) {
  const StrategySets& sets = *res.sets;

  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : res.reports)
      rows.push_back({std::to_string(r.epoch), num(r.game_value), num(r.agent_delta),
                      num(r.nature_delta), num(r.nature_oracle_regret),
                      std::to_string(r.n_policies), std::to_string(r.n_thetas), num(r.seconds)});
    write_csv(out_dir + "/" + RunArtifacts::kEpochLog,
              {"epoch", "game_value", "agent_delta", "nature_delta", "nature_oracle_regret",
               "n_policies", "n_thetas", "seconds"},
              rows);
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < sets.n_policies(); ++i)
      rows.push_back({std::to_string(i), sets.policy_names()[static_cast<std::size_t>(i)],
                      num(res.final_mixture.probs[static_cast<std::size_t>(i)])});
    write_csv(out_dir + "/" + RunArtifacts::kMixture, {"index", "name", "probability"}, rows);
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (int j = 0; j < sets.n_thetas(); ++j)
      rows.push_back({std::to_string(j), num(res.final_nature_mixture.probs[static_cast<std::size_t>(j)])});
    write_csv(out_dir + "/" + RunArtifacts::kNatureMixture, {"index", "probability"}, rows);
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (int j = 0; j < sets.n_thetas(); ++j) {
      const Vec& th = sets.thetas()[static_cast<std::size_t>(j)].attractiveness;
      for (int i = 0; i < th.size(); ++i)
        rows.push_back({std::to_string(j), std::to_string(i), num(th[i])});
    }
    write_csv(out_dir + "/" + RunArtifacts::kThetas, {"theta_index", "target_index", "value"},
              rows);
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < sets.n_policies(); ++i)
      for (int j = 0; j < sets.n_thetas(); ++j) {
        const MeanStderr& c = sets.cell(i, j);
        rows.push_back({std::to_string(i), std::to_string(j), num(c.mean), num(c.stderr_),
                        std::to_string(c.n)});
      }
    write_csv(out_dir + "/" + RunArtifacts::kRTable,
              {"policy_index", "theta_index", "mean", "stderr", "n_episodes"}, rows);
  }
  {
    const std::string ckpt_dir = out_dir + "/" + RunArtifacts::kCheckpointDir;
    fs::create_directories(ckpt_dir);
    for (int i = 0; i < sets.n_policies(); ++i)
      save_policy(*sets.policies()[static_cast<std::size_t>(i)],
                  ckpt_dir + "/policy_" + std::to_string(i) + ".tensors");
  }
}

std::vector<EvalResult> evaluate_run(const MirrorResult& res, const NatureDomain& domain,
                                     int audit_points, std::uint64_t seed, int n_threads) {
  StrategySets& sets = *res.sets;
  std::vector<MethodSpec> methods;
  MixedStrategy mirror_mix = res.final_mixture;
  mirror_mix.probs.resize(static_cast<std::size_t>(sets.n_policies()), 0.0);
  methods.push_back({"mirror", mirror_mix});
  methods.push_back(pure_method("middle", res.middle_index, sets.n_policies()));
  methods.push_back(pure_method("random", res.random_index, sets.n_policies()));
  methods.push_back(pure_method("zero", res.zero_index, sets.n_policies()));
  return evaluate_max_regret(sets, methods, audit_thetas_for(domain, audit_points, seed),
                             n_threads);
}

int cmd_fit(const std::string& panel_path, const std::string& out_path, bool neighbors,
            bool per_target, bool p_values) {
  PatrolPanel panel = read_panel_csv(panel_path);
  FitOptions opts;
  opts.include_neighbors = neighbors;
  opts.per_target_intercepts = per_target;
  opts.compute_p_values = p_values;
  DeterrenceCoefficients coeffs;
  coeffs.normalization = normalize_efforts(panel);
  auto fitted = fit_logistic(panel, opts);
  fitted.normalization = coeffs.normalization;
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw ArgumentError(out_path + ": cannot open file for writing");
  out << coefficients_to_json(fitted);
  std::cout << "fit: intercept " << num(fitted.mean_attractiveness) << ", gamma "
            << num(fitted.gamma) << ", beta " << num(fitted.beta);
  if (fitted.eta) std::cout << ", eta " << num(*fitted.eta);
  std::cout << " (" << (fitted.diagnostics.converged ? "converged" : "not converged") << " in "
            << fitted.diagnostics.iterations << " iterations)\n";
  return 0;
}

int cmd_synth(double intercept, double gamma, double beta, double eta, bool with_eta, int targets,
              int periods, const std::string& process, std::uint64_t seed,
              const std::string& out_path) {
  EffortProcess proc;
  if (process == "hotspot") proc.kind = EffortProcess::Kind::kHotspot;
  else if (process == "iid_exp") proc.kind = EffortProcess::Kind::kIidExponential;
  else throw ArgumentError("synth: unknown process \"" + process + "\" (hotspot or iid_exp)");
  Rng rng(seed);
  PatrolPanel panel = synth_panel(intercept, gamma, beta,
                                  with_eta ? std::optional<double>(eta) : std::nullopt, targets,
                                  periods, proc, rng);
  write_panel_csv(out_path, panel);
  long positives = 0;
  for (int o : panel.observed) positives += o;
  std::cout << "synth: " << panel.size() << " rows, " << positives << " positive observations\n";
  return 0;
}

int cmd_run(const std::string& config_path, std::uint64_t seed, const std::string& out_dir,
            int threads, int episodes_eval) {
  RunConfig rc = load_run_config(config_path, seed);
  rc.mirror.n_threads = threads;
  if (episodes_eval > 0) rc.mirror.eval_episodes = episodes_eval;
  fs::create_directories(out_dir);

  RunManifest manifest;
  manifest.command = "run";
  manifest.seed = seed;
  manifest.out_dir = out_dir;
  manifest.threads = threads;
  manifest.config = rc.resolved;
  manifest.write(out_dir + "/" + RunArtifacts::kManifest);

  MirrorResult res = run_mirror(rc.park, rc.domain, rc.mirror);
  write_run_artifacts(out_dir, res);
  const auto evals = evaluate_run(res, rc.domain, rc.audit_points, seed, threads);
  write_eval_csv(out_dir + "/" + RunArtifacts::kEval, evals);

  std::cout << "run: " << (res.converged ? "converged" : "epoch cap reached") << " after "
            << res.epochs << " epochs; |policies| = " << res.sets->n_policies()
            << ", |thetas| = " << res.sets->n_thetas() << "\n";
  for (const auto& e : evals)
    std::cout << "  " << e.method << ": max regret " << num(e.max_regret) << " +- "
              << num(e.stderr_) << "\n";
  return 0;
}

int cmd_eval(const std::string& run_dir, int episodes_eval, int audit_points,
             const std::string& out_path, int threads) {
  RunManifest manifest = RunManifest::read(run_dir + "/" + RunArtifacts::kManifest);
  RunConfig rc = parse_run_config(manifest.config, manifest.seed);

  CsvTable mix_table = read_csv(run_dir + "/" + RunArtifacts::kMixture);
  const int ci = mix_table.column("index");
  const int cn = mix_table.column("name");
  const int cp = mix_table.column("probability");

  const int n_eval = episodes_eval > 0 ? episodes_eval : rc.mirror.eval_episodes;
  StrategySets sets(rc.park, mix_seed(manifest.seed, seed_tag::eval), n_eval);
  MixedStrategy mirror_mix;
  std::map<std::string, int> named_rows;
  for (std::size_t r = 0; r < mix_table.rows.size(); ++r) {
    const long idx = parse_field_long(mix_table, r, ci, RunArtifacts::kMixture);
    auto policy = load_policy(run_dir + "/" + RunArtifacts::kCheckpointDir + "/policy_" +
                              std::to_string(idx) + ".tensors");
    const int row = sets.add_policy(policy, mix_table.rows[r][static_cast<std::size_t>(cn)]);
    named_rows[mix_table.rows[r][static_cast<std::size_t>(cn)]] = row;
    mirror_mix.probs.push_back(parse_field_double(mix_table, r, cp, RunArtifacts::kMixture));
  }

  CsvTable theta_table = read_csv(run_dir + "/" + RunArtifacts::kThetas);
  const int tj = theta_table.column("theta_index");
  const int ti = theta_table.column("target_index");
  const int tv = theta_table.column("value");
  std::map<long, Vec> thetas;
  for (std::size_t r = 0; r < theta_table.rows.size(); ++r) {
    const long j = parse_field_long(theta_table, r, tj, RunArtifacts::kThetas);
    auto [it, inserted] = thetas.try_emplace(j, Vec::Zero(rc.park.n_targets));
    it->second[parse_field_long(theta_table, r, ti, RunArtifacts::kThetas)] =
        parse_field_double(theta_table, r, tv, RunArtifacts::kThetas);
  }
  for (auto& [j, th] : thetas) sets.add_theta(EnvParams{th});

  std::vector<MethodSpec> methods;
  methods.push_back({"mirror", mirror_mix});
  for (const char* name : {"baseline_middle", "baseline_random", "baseline_zero"}) {
    auto it = named_rows.find(name);
    if (it != named_rows.end())
      methods.push_back(pure_method(name + 9, it->second, sets.n_policies()));  // strip prefix
  }
  const auto evals = evaluate_max_regret(
      sets, methods, audit_thetas_for(rc.domain, audit_points, manifest.seed), threads);
  write_eval_csv(out_path, evals);
  for (const auto& e : evals)
    std::cout << e.method << ": max regret " << num(e.max_regret) << " +- " << num(e.stderr_)
              << "\n";
  return 0;
}

int cmd_grid(const std::string& config_path, std::uint64_t seed, const std::string& out_dir,
             int threads) {
  GridConfig grid = load_grid_config(config_path, seed);
  fs::create_directories(out_dir + "/cells");

  const std::vector<std::string> cell_header = {"method",      "setting", "trial",
                                                "max_regret",  "stderr",  "runtime_s"};
  std::vector<std::vector<std::string>> all_rows;
  std::vector<std::vector<std::string>> failures;
  for (const auto& setting : grid.settings) {
    for (int trial = 0; trial < setting.trials; ++trial) {
      const std::string cell_path =
          out_dir + "/cells/" + setting.name + "_t" + std::to_string(trial) + ".csv";
      if (fs::exists(cell_path)) {
        CsvTable t = read_csv(cell_path);  // resumption: completed cell
        for (auto& row : t.rows) all_rows.push_back(row);
        continue;
      }
      ExperimentConfig cfg = setting;
      cfg.mirror.n_threads = threads;
      try {
        std::vector<std::vector<std::string>> cell_rows;
        for (const auto& r : run_trial(cfg, trial)) {
          cell_rows.push_back({r.method, r.setting, std::to_string(r.trial), num(r.max_regret),
                               num(r.stderr_), num(r.runtime_s)});
        }
        write_csv(cell_path, cell_header, cell_rows);
        for (auto& row : cell_rows) all_rows.push_back(std::move(row));
        std::cout << "grid: finished " << setting.name << " trial " << trial << "\n";
      } catch (const std::exception& e) {
        failures.push_back({setting.name, std::to_string(trial), e.what()});
        std::cout << "grid: FAILED " << setting.name << " trial " << trial << ": " << e.what()
                  << "\n";
      }
    }
  }
  write_csv(out_dir + "/results.csv", cell_header, all_rows);
  if (!failures.empty()) write_csv(out_dir + "/failures.csv", {"setting", "trial", "error"}, failures);

  // per-setting summary and ranking
  struct Agg {
    std::vector<double> regrets;
    double runtime = 0.0;
  };
  std::map<std::string, std::map<std::string, Agg>> by_setting;
  for (const auto& row : all_rows) {
    Agg& a = by_setting[row[1]][row[0]];
    a.regrets.push_back(std::strtod(row[3].c_str(), nullptr));
    a.runtime += std::strtod(row[5].c_str(), nullptr);
  }
  std::vector<std::vector<std::string>> summary;
  for (const auto& [setting, methods] : by_setting) {
    std::vector<std::pair<double, std::string>> ranking;
    for (const auto& [method, agg] : methods) {
      const auto ms = mean_stderr(agg.regrets);
      summary.push_back({setting, method, std::to_string(ms.n), num(ms.mean), num(ms.stderr_),
                         num(agg.runtime / std::max(ms.n, 1))});
      ranking.push_back({ms.mean, method});
    }
    std::sort(ranking.begin(), ranking.end());
    std::cout << setting << " ranking:";
    for (const auto& [regret, method] : ranking)
      std::cout << "  " << method << "=" << num(regret);
    std::cout << "\n";
  }
  write_csv(out_dir + "/summary.csv",
            {"setting", "method", "trials", "mean_max_regret", "stderr", "mean_runtime_s"},
            summary);
  return failures.empty() ? 0 : 4;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"greensec: robust sequential patrol planning toolkit"};
  app.require_subcommand(1);

  std::string config, out, panel, run_dir, process = "hotspot";
  std::uint64_t seed = 0;
  int threads = 1, episodes_eval = 0, audit_points = 20;
  bool neighbors = false, per_target = false, p_values = false;
  double intercept = -9.285, gamma = 1.074, beta = -0.165, eta = 0.0;
  int targets = 625, periods = 80;

  auto* fit = app.add_subcommand("fit", "fit the deterrence/displacement regression on a panel");
  fit->add_option("--panel", panel, "panel CSV path")->required();
  fit->add_option("--out", out, "coefficients JSON output path")->required();
  fit->add_flag("--neighbors", neighbors, "include the neighbor displacement term");
  fit->add_flag("--per-target-intercepts", per_target, "per-target fixed effects");
  fit->add_flag("--p-values", p_values, "report Wald p-values");

  auto* synth = app.add_subcommand("synth", "generate a synthetic patrol panel");
  synth->add_option("--intercept", intercept, "attractiveness intercept");
  synth->add_option("--gamma", gamma, "current-effort coefficient");
  synth->add_option("--beta", beta, "past-effort coefficient");
  auto* eta_opt = synth->add_option("--eta", eta, "neighbor coefficient (enables the term)");
  synth->add_option("--targets", targets, "number of grid targets");
  synth->add_option("--periods", periods, "number of periods");
  synth->add_option("--process", process, "effort process: hotspot or iid_exp");
  synth->add_option("--seed", seed, "random seed");
  synth->add_option("--out", out, "panel CSV output path")->required();

  auto* run = app.add_subcommand("run", "run the double-oracle planner end to end");
  run->add_option("--config", config, "run config JSON")->required();
  run->add_option("--seed", seed, "root seed");
  run->add_option("--out", out, "output directory")->required();
  run->add_option("--threads", threads, "worker threads");
  run->add_option("--episodes-eval", episodes_eval, "episodes per return-table cell");

  auto* grid = app.add_subcommand("grid", "run an experiment grid");
  grid->add_option("--config", config, "grid config JSON")->required();
  grid->add_option("--seed", seed, "root seed");
  grid->add_option("--out", out, "output directory")->required();
  grid->add_option("--threads", threads, "worker threads");

  auto* eval = app.add_subcommand("eval", "re-evaluate max regret from a run directory");
  eval->add_option("--run", run_dir, "run directory")->required();
  eval->add_option("--episodes-eval", episodes_eval, "episodes per return-table cell");
  eval->add_option("--audit-points", audit_points, "held-out audit parameter points");
  eval->add_option("--out", out, "output CSV path")->required();
  eval->add_option("--threads", threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (fit->parsed()) return cmd_fit(panel, out, neighbors, per_target, p_values);
    if (synth->parsed())
      return cmd_synth(intercept, gamma, beta, eta, eta_opt->count() > 0, targets, periods,
                       process, seed, out);
    if (run->parsed()) return cmd_run(config, seed, out, threads, episodes_eval);
    if (grid->parsed()) return cmd_grid(config, seed, out, threads);
    if (eval->parsed()) return cmd_eval(run_dir, episodes_eval, audit_points, out, threads);
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int cli_main(const std::vector<std::string>& args) {
  std::vector<std::string> all{"greensec"};
  all.insert(all.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : all) argv.push_back(s.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace greensec
