#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "greensec/baselines.hpp"
#include "greensec/deterrence.hpp"
#include "greensec/run_config.hpp"

namespace py = pybind11;
using namespace greensec;

namespace {

// const-shared_ptr policies held behind a plain handle for the binding layer
struct PyPolicy {
  PolicyPtr ptr;
};

ParamsMixture make_params_mixture(const std::vector<Vec>& thetas, std::vector<double> probs) {
  ParamsMixture m;
  for (const auto& t : thetas) m.support.push_back(EnvParams{t});
  if (probs.empty()) probs.assign(thetas.size(), 1.0 / static_cast<double>(thetas.size()));
  m.weights.probs = std::move(probs);
  m.validate();
  return m;
}

py::dict fit_to_dict(const DeterrenceCoefficients& c) {
  py::dict d;
  d["mean_attractiveness"] = c.mean_attractiveness;
  d["gamma"] = c.gamma;
  d["beta"] = c.beta;
  if (c.eta) d["eta"] = *c.eta;
  d["log_likelihood"] = c.diagnostics.log_likelihood;
  d["iterations"] = c.diagnostics.iterations;
  d["converged"] = c.diagnostics.converged;
  d["std_errors"] = c.diagnostics.std_errors;
  if (!c.diagnostics.p_values.empty()) d["p_values"] = c.diagnostics.p_values;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "greensec core: green-security patrol planning primitives";

  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<ParkInstance>(m, "Park")
      .def(py::init([](int n_targets, int horizon, double budget) {
             return ParkInstance::make(n_targets, horizon, budget);
           }),
           py::arg("n_targets"), py::arg("horizon"), py::arg("budget"))
      .def_readwrite("alpha", &ParkInstance::alpha)
      .def_readwrite("psi", &ParkInstance::psi)
      .def_readwrite("beta", &ParkInstance::beta)
      .def_readwrite("eta", &ParkInstance::eta)
      .def_readwrite("neighbor_window", &ParkInstance::neighbor_window)
      .def_property(
          "initial_wildlife", [](const ParkInstance& p) { return p.initial_wildlife; },
          [](ParkInstance& p, const Vec& w) { p.initial_wildlife = w; })
      .def_readonly("n_targets", &ParkInstance::n_targets)
      .def_readonly("horizon", &ParkInstance::horizon)
      .def_readonly("budget", &ParkInstance::budget)
      .def("validate", &ParkInstance::validate)
      .def("neighbors", [](const ParkInstance& p, int i) { return p.neighbors(i); });

  py::class_<EnvState>(m, "EnvState")
      .def(py::init([](Vec past_effort, Vec wildlife, int timestep) {
             return EnvState{std::move(past_effort), std::move(wildlife), timestep};
           }),
           py::arg("past_effort"), py::arg("wildlife"), py::arg("timestep"))
      .def_readwrite("past_effort", &EnvState::past_effort)
      .def_readwrite("wildlife", &EnvState::wildlife)
      .def_readwrite("timestep", &EnvState::timestep);

  m.def("initial_state", &initial_state);
  m.def(
      "attack_probability",
      [](const ParkInstance& park, const Vec& theta, const EnvState& s, int i) {
        return attack_probability(park, EnvParams{theta}, s, i);
      },
      py::arg("park"), py::arg("theta"), py::arg("state"), py::arg("target"));
  m.def("wildlife_step", &wildlife_step, py::arg("park"), py::arg("wildlife"), py::arg("attack"),
        py::arg("current_effort"));

  py::class_<PyPolicy>(m, "Policy")
      .def("kind", [](const PyPolicy& p) { return p.ptr->kind(); })
      .def("param_hash", [](const PyPolicy& p) { return p.ptr->param_hash(); })
      .def(
          "act",
          [](const PyPolicy& p, const EnvState& s, std::uint64_t seed) {
            EpisodeContext ctx(seed);
            return p.ptr->act(s, ctx);
          },
          py::arg("state"), py::arg("episode_seed") = 0);

  m.def("zero_policy", [](int n) { return PyPolicy{std::make_shared<ZeroPolicy>(n)}; });
  m.def("random_policy", [](int n, double budget) {
    return PyPolicy{std::make_shared<RandomPolicy>(n, budget)};
  });
  m.def("load_policy", [](const std::string& path) { return PyPolicy{load_policy(path)}; });
  m.def("save_policy",
        [](const PyPolicy& p, const std::string& path) { save_policy(*p.ptr, path); });

  m.def(
      "rollout_return",
      [](const ParkInstance& park, const Vec& theta, const PyPolicy& policy,
         std::uint64_t attack_seed, std::uint64_t policy_seed) {
        return rollout_return(park, EnvParams{theta}, *policy.ptr, attack_seed, policy_seed);
      },
      py::arg("park"), py::arg("theta"), py::arg("policy"), py::arg("attack_seed"),
      py::arg("policy_seed") = 0);

  m.def(
      "estimate_return",
      [](const ParkInstance& park, const std::vector<Vec>& thetas, std::vector<double> theta_probs,
         const std::vector<PyPolicy>& policies, std::vector<double> policy_probs, int n_episodes,
         std::uint64_t seed, int threads) {
        PolicyMixture pm;
        for (const auto& p : policies) pm.support.push_back(p.ptr.get());
        if (policy_probs.empty())
          policy_probs.assign(policies.size(), 1.0 / static_cast<double>(policies.size()));
        pm.weights.probs = std::move(policy_probs);
        const auto est = estimate_return(park, make_params_mixture(thetas, std::move(theta_probs)),
                                         pm, n_episodes, seed, threads);
        return py::make_tuple(est.mean, est.stderr_);
      },
      py::arg("park"), py::arg("thetas"), py::arg("theta_probs"), py::arg("policies"),
      py::arg("policy_probs"), py::arg("n_episodes"), py::arg("seed"), py::arg("threads") = 1);

  m.def(
      "train_agent",
      [](const ParkInstance& park, const std::vector<Vec>& thetas, std::vector<double> probs,
         int episodes, std::uint64_t seed) {
        TrainConfig cfg;
        cfg.episodes = episodes;
        cfg.warmup_transitions = std::max(64, cfg.batch_size);
        cfg.eval_every = std::max(episodes / 5, 1);
        cfg.eval_episodes = 16;
        cfg.seed = seed;
        return PyPolicy{train_agent(park, make_params_mixture(thetas, std::move(probs)), cfg).policy};
      },
      py::arg("park"), py::arg("thetas"), py::arg("theta_probs"), py::arg("episodes"),
      py::arg("seed"));

  m.def("solve_zero_sum", [](const Mat& a) {
    PayoffMatrix pm;
    pm.entries = a;
    const GameSolution sol = solve_zero_sum(pm);
    return py::make_tuple(sol.row.probs, sol.col.probs, sol.value);
  });
  m.def("solve_support_enumeration", [](const Mat& a) {
    PayoffMatrix pm;
    pm.entries = a;
    const GameSolution sol = solve_support_enumeration(pm);
    return py::make_tuple(sol.row.probs, sol.col.probs, sol.value);
  });

  m.def(
      "fit_logistic",
      [](std::vector<double> current, std::vector<double> past, std::vector<double> neighbor,
         std::vector<int> observed, bool include_neighbors, bool p_values) {
        PatrolPanel panel;
        const std::size_t n = current.size();
        panel.current_effort = std::move(current);
        panel.past_effort = std::move(past);
        panel.neighbor_effort =
            neighbor.empty() ? std::vector<double>(n, 0.0) : std::move(neighbor);
        panel.observed = std::move(observed);
        panel.target.resize(n);
        panel.period.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i) panel.target[i] = static_cast<int>(i);
        normalize_efforts(panel);
        FitOptions opts;
        opts.include_neighbors = include_neighbors;
        opts.compute_p_values = p_values;
        return fit_to_dict(fit_logistic(panel, opts));
      },
      py::arg("current_effort"), py::arg("past_effort"), py::arg("neighbor_effort"),
      py::arg("observed"), py::arg("include_neighbors") = false, py::arg("p_values") = false);

  m.def(
      "synth_panel",
      [](double intercept, double gamma, double beta, std::optional<double> eta, int n_targets,
         int n_periods, const std::string& process, std::uint64_t seed) {
        EffortProcess proc;
        if (process == "hotspot") proc.kind = EffortProcess::Kind::kHotspot;
        else if (process == "iid_exp") proc.kind = EffortProcess::Kind::kIidExponential;
        else throw ArgumentError("synth_panel: unknown process \"" + process + "\"");
        Rng rng(seed);
        PatrolPanel p = synth_panel(intercept, gamma, beta, eta, n_targets, n_periods, proc, rng);
        py::dict d;
        d["target"] = p.target;
        d["period"] = p.period;
        d["current_effort"] = p.current_effort;
        d["past_effort"] = p.past_effort;
        d["neighbor_effort"] = p.neighbor_effort;
        d["observed"] = p.observed;
        return d;
      },
      py::arg("intercept"), py::arg("gamma"), py::arg("beta"), py::arg("eta") = std::nullopt,
      py::arg("n_targets") = 625, py::arg("n_periods") = 80, py::arg("process") = "hotspot",
      py::arg("seed") = 0);

  m.def(
      "run_mirror",
      [](const std::string& config_json, std::uint64_t seed, int threads) {
        RunConfig rc = parse_run_config(nlohmann::json::parse(config_json), seed);
        rc.mirror.n_threads = threads;
        const MirrorResult res = run_mirror(rc.park, rc.domain, rc.mirror);
        StrategySets& sets = *res.sets;
        std::vector<MethodSpec> methods;
        MixedStrategy mix = res.final_mixture;
        mix.probs.resize(static_cast<std::size_t>(sets.n_policies()), 0.0);
        methods.push_back({"mirror", mix});
        methods.push_back(pure_method("middle", res.middle_index, sets.n_policies()));
        methods.push_back(pure_method("random", res.random_index, sets.n_policies()));
        methods.push_back(pure_method("zero", res.zero_index, sets.n_policies()));
        const auto evals = evaluate_max_regret(sets, methods, {}, threads);
        py::dict d;
        d["converged"] = res.converged;
        d["epochs"] = res.epochs;
        d["n_policies"] = sets.n_policies();
        d["n_thetas"] = sets.n_thetas();
        d["mixture"] = res.final_mixture.probs;
        py::dict regrets;
        for (const auto& e : evals) regrets[e.method.c_str()] = e.max_regret;
        d["max_regret"] = regrets;
        return d;
      },
      py::arg("config_json"), py::arg("seed") = 0, py::arg("threads") = 1);

  m.attr("__version__") = "0.1.0";
}
