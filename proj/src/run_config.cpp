#include "greensec/run_config.hpp"

#include <fstream>

#include "greensec/csv.hpp"

namespace greensec {

using nlohmann::json;

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ArgumentError("config error at " + path + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        ok = true;
        break;
      }
    if (!ok) throw ArgumentError("config error at " + path + "." + it.key() + ": unknown key");
  }
}

namespace {

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError(path + ": cannot open file");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ArgumentError(path + ": " + e.what());
  }
  return j;
}

double get_num(const json& j, const std::string& path, const std::string& key, double dflt) {
  if (!j.contains(key)) return dflt;
  if (!j.at(key).is_number())
    throw ArgumentError("config error at " + path + "." + key + ": expected a number");
  return j.at(key).get<double>();
}

int get_int(const json& j, const std::string& path, const std::string& key, int dflt) {
  if (!j.contains(key)) return dflt;
  if (!j.at(key).is_number_integer())
    throw ArgumentError("config error at " + path + "." + key + ": expected an integer");
  return j.at(key).get<int>();
}

std::string get_str(const json& j, const std::string& path, const std::string& key,
                    const std::string& dflt) {
  if (!j.contains(key)) return dflt;
  if (!j.at(key).is_string())
    throw ArgumentError("config error at " + path + "." + key + ": expected a string");
  return j.at(key).get<std::string>();
}

Vec get_vec(const json& j, const std::string& path) {
  if (j.is_string()) return read_vector_csv(j.get<std::string>());
  if (!j.is_array()) throw ArgumentError("config error at " + path + ": expected an array or CSV path");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number())
      throw ArgumentError("config error at " + path + "[" + std::to_string(i) + "]: expected a number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

TrainConfig parse_train(const json& j, const std::string& path, std::uint64_t seed) {
  check_keys(j, path,
             {"episodes", "buffer_capacity", "batch_size", "warmup_transitions",
              "updates_per_step", "actor_lr", "critic_lr", "polyak", "noise_start", "noise_end",
              "hidden", "eval_every", "eval_episodes"});
  TrainConfig c;
  c.episodes = get_int(j, path, "episodes", c.episodes);
  c.buffer_capacity = get_int(j, path, "buffer_capacity", c.buffer_capacity);
  c.batch_size = get_int(j, path, "batch_size", c.batch_size);
  c.warmup_transitions = get_int(j, path, "warmup_transitions", c.warmup_transitions);
  c.updates_per_step = get_int(j, path, "updates_per_step", c.updates_per_step);
  c.actor_lr = get_num(j, path, "actor_lr", c.actor_lr);
  c.critic_lr = get_num(j, path, "critic_lr", c.critic_lr);
  c.polyak = get_num(j, path, "polyak", c.polyak);
  c.noise_start = get_num(j, path, "noise_start", c.noise_start);
  c.noise_end = get_num(j, path, "noise_end", c.noise_end);
  if (j.contains("hidden")) {
    if (!j.at("hidden").is_array())
      throw ArgumentError("config error at " + path + ".hidden: expected an array");
    c.hidden.clear();
    for (const auto& h : j.at("hidden")) c.hidden.push_back(h.get<int>());
  }
  c.eval_every = get_int(j, path, "eval_every", c.eval_every);
  c.eval_episodes = get_int(j, path, "eval_episodes", c.eval_episodes);
  c.seed = seed;
  c.validate();
  return c;
}

NatureConfig parse_nature(const json& j, const std::string& path, std::uint64_t seed) {
  check_keys(j, path, {"kappa", "theta_lr", "train"});
  NatureConfig c;
  c.kappa = get_int(j, path, "kappa", c.kappa);
  c.theta_lr = get_num(j, path, "theta_lr", c.theta_lr);
  if (j.contains("train")) c.train = parse_train(j.at("train"), path + ".train", seed);
  c.train.seed = seed;
  c.validate();
  return c;
}

MirrorConfig parse_mirror(const json& j, const std::string& path, std::uint64_t seed) {
  check_keys(j, path,
             {"epsilon", "perturbations", "perturb_scale", "epoch_cap", "eval_episodes",
              "agent_train", "nature", "threads"});
  MirrorConfig c;
  c.epsilon = get_num(j, path, "epsilon", c.epsilon);
  c.perturbations = get_int(j, path, "perturbations", c.perturbations);
  c.perturb_scale = get_num(j, path, "perturb_scale", c.perturb_scale);
  c.epoch_cap = get_int(j, path, "epoch_cap", c.epoch_cap);
  c.eval_episodes = get_int(j, path, "eval_episodes", c.eval_episodes);
  c.n_threads = get_int(j, path, "threads", c.n_threads);
  if (j.contains("agent_train"))
    c.agent_train = parse_train(j.at("agent_train"), path + ".agent_train", seed);
  if (j.contains("nature")) c.nature = parse_nature(j.at("nature"), path + ".nature", seed);
  c.agent_train.seed = seed;
  c.nature.train.seed = seed;
  c.seed = seed;
  c.validate();
  return c;
}

ParkInstance parse_park(const json& j, std::uint64_t seed, json& resolved) {
  check_keys(j, "park",
             {"n_targets", "horizon", "budget", "alpha", "psi", "beta", "eta", "neighbor_window",
              "initial_wildlife"});
  if (!j.contains("n_targets") || !j.contains("horizon") || !j.contains("budget"))
    throw ArgumentError("config error at park: n_targets, horizon and budget are required");
  ParkInstance park = ParkInstance::make(get_int(j, "park", "n_targets", 0),
                                         get_int(j, "park", "horizon", 0),
                                         get_num(j, "park", "budget", 0.0));
  park.alpha = get_num(j, "park", "alpha", park.alpha);
  park.psi = get_num(j, "park", "psi", park.psi);
  park.beta = get_num(j, "park", "beta", park.beta);
  park.eta = get_num(j, "park", "eta", park.eta);
  park.neighbor_window = get_int(j, "park", "neighbor_window", park.neighbor_window);

  json w = j.contains("initial_wildlife") ? j.at("initial_wildlife")
                                          : json{{"kind", "random"}};
  if (w.is_array() || w.is_string()) {
    park.initial_wildlife = get_vec(w, "park.initial_wildlife");
  } else {
    check_keys(w, "park.initial_wildlife", {"kind", "values", "path"});
    const std::string kind = get_str(w, "park.initial_wildlife", "kind", "random");
    if (kind == "values") {
      park.initial_wildlife = get_vec(w.at("values"), "park.initial_wildlife.values");
    } else if (kind == "csv") {
      park.initial_wildlife =
          read_vector_csv(get_str(w, "park.initial_wildlife", "path", ""), park.n_targets);
    } else if (kind == "random") {
      Rng rng(mix_seed(seed, 0x317Du));
      park.initial_wildlife = wildlife_random(park, rng);
    } else if (kind == "peaked") {
      park.initial_wildlife = wildlife_peaked(park);
    } else if (kind == "flatter") {
      park.initial_wildlife = wildlife_flatter(park);
    } else {
      throw ArgumentError("config error at park.initial_wildlife.kind: unknown kind \"" + kind +
                          "\"");
    }
  }
  park.validate();

  resolved = json{{"n_targets", park.n_targets}, {"horizon", park.horizon},
                  {"budget", park.budget},       {"alpha", park.alpha},
                  {"psi", park.psi},             {"beta", park.beta},
                  {"eta", park.eta},             {"neighbor_window", park.neighbor_window}};
  resolved["initial_wildlife"] =
      std::vector<double>(park.initial_wildlife.data(),
                          park.initial_wildlife.data() + park.initial_wildlife.size());
  return park;
}

NatureDomain parse_uncertainty(const json& j, const ParkInstance& park, std::uint64_t seed,
                               json& resolved) {
  check_keys(j, "uncertainty",
             {"kind", "lower", "upper", "points", "interval", "center_low", "center_high"});
  const std::string kind = get_str(j, "uncertainty", "kind", "box");
  NatureDomain domain;
  if (kind == "box") {
    if (!j.contains("lower") || !j.contains("upper"))
      throw ArgumentError("config error at uncertainty: box needs lower and upper");
    domain = NatureDomain::from_box(UncertaintySet(get_vec(j.at("lower"), "uncertainty.lower"),
                                                   get_vec(j.at("upper"), "uncertainty.upper")));
  } else if (kind == "points") {
    if (!j.contains("points") || !j.at("points").is_array())
      throw ArgumentError("config error at uncertainty.points: expected an array of arrays");
    std::vector<EnvParams> pts;
    for (std::size_t i = 0; i < j.at("points").size(); ++i)
      pts.push_back(EnvParams{get_vec(j.at("points")[i], "uncertainty.points")});
    domain = NatureDomain::from_points(std::move(pts));
  } else if (kind == "random_box") {
    const double interval = get_num(j, "uncertainty", "interval", 3.0);
    Rng rng(mix_seed(seed, 0xB0D5u));
    domain = NatureDomain::from_box(
        make_experiment_box(park.n_targets, interval, rng, get_num(j, "uncertainty", "center_low", -10.0),
                            get_num(j, "uncertainty", "center_high", 0.0)));
  } else {
    throw ArgumentError("config error at uncertainty.kind: unknown kind \"" + kind + "\"");
  }
  if (domain.box.size() != park.n_targets)
    throw ArgumentError("config error at uncertainty: vector length must equal park.n_targets");

  auto vec_json = [](const Vec& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  resolved = json{{"kind", domain.finite() ? "points" : "box"}};
  if (domain.finite()) {
    json pts = json::array();
    for (const auto& p : domain.points) pts.push_back(vec_json(p.attractiveness));
    resolved["points"] = pts;
  } else {
    resolved["lower"] = vec_json(domain.box.lower);
    resolved["upper"] = vec_json(domain.box.upper);
  }
  return domain;
}

}  // namespace

RunConfig parse_run_config(const json& j, std::uint64_t seed) {
  check_keys(j, "config", {"version", "park", "uncertainty", "mirror", "audit_points"});
  const int version = get_int(j, "config", "version", 1);
  if (version != 1) throw ArgumentError("config error at version: only version 1 is supported");
  if (!j.contains("park")) throw ArgumentError("config error: missing park section");
  if (!j.contains("uncertainty")) throw ArgumentError("config error: missing uncertainty section");

  RunConfig rc;
  json park_resolved, unc_resolved;
  rc.park = parse_park(j.at("park"), seed, park_resolved);
  rc.domain = parse_uncertainty(j.at("uncertainty"), rc.park, seed, unc_resolved);
  rc.mirror = j.contains("mirror") ? parse_mirror(j.at("mirror"), "mirror", seed) : MirrorConfig{};
  rc.mirror.seed = seed;
  rc.mirror.agent_train.seed = seed;
  rc.mirror.nature.train.seed = seed;
  rc.audit_points = get_int(j, "config", "audit_points", rc.audit_points);
  if (rc.audit_points < 0) throw ArgumentError("config error at audit_points: must be >= 0");

  rc.resolved = json{{"version", 1},
                     {"park", park_resolved},
                     {"uncertainty", unc_resolved},
                     {"audit_points", rc.audit_points}};
  if (j.contains("mirror")) rc.resolved["mirror"] = j.at("mirror");
  return rc;
}

RunConfig load_run_config(const std::string& path, std::uint64_t seed) {
  return parse_run_config(load_json(path), seed);
}

namespace {

ExperimentConfig parse_experiment(const json& j, const std::string& path,
                                  const ExperimentConfig& base, std::uint64_t seed) {
  check_keys(j, path,
             {"name", "n_targets", "horizon", "budget", "interval", "deterrence", "wildlife_init",
              "eta", "alpha", "psi", "trials", "methods", "audit_points", "baseline_variants",
              "mirror", "rarl"});
  ExperimentConfig c = base;
  c.name = get_str(j, path, "name", c.name);
  c.n_targets = get_int(j, path, "n_targets", c.n_targets);
  c.horizon = get_int(j, path, "horizon", c.horizon);
  c.budget = get_num(j, path, "budget", c.budget);
  c.interval = get_num(j, path, "interval", c.interval);
  c.deterrence = get_num(j, path, "deterrence", c.deterrence);
  c.wildlife_init = get_str(j, path, "wildlife_init", c.wildlife_init);
  c.eta = get_num(j, path, "eta", c.eta);
  c.alpha = get_num(j, path, "alpha", c.alpha);
  c.psi = get_num(j, path, "psi", c.psi);
  c.trials = get_int(j, path, "trials", c.trials);
  if (j.contains("methods")) {
    if (!j.at("methods").is_array())
      throw ArgumentError("config error at " + path + ".methods: expected an array");
    c.methods.clear();
    for (const auto& m : j.at("methods")) c.methods.push_back(m.get<std::string>());
  }
  c.audit_points = get_int(j, path, "audit_points", c.audit_points);
  c.baseline_variants = get_int(j, path, "baseline_variants", c.baseline_variants);
  if (j.contains("mirror")) c.mirror = parse_mirror(j.at("mirror"), path + ".mirror", seed);
  if (j.contains("rarl")) {
    check_keys(j.at("rarl"), path + ".rarl", {"kappa", "theta_lr", "train"});
    c.rarl.kappa = get_int(j.at("rarl"), path + ".rarl", "kappa", c.rarl.kappa);
    c.rarl.theta_lr = get_num(j.at("rarl"), path + ".rarl", "theta_lr", c.rarl.theta_lr);
    if (j.at("rarl").contains("train"))
      c.rarl.train = parse_train(j.at("rarl").at("train"), path + ".rarl.train", seed);
  }
  c.seed = seed;
  c.validate();
  return c;
}

}  // namespace

GridConfig load_grid_config(const std::string& path, std::uint64_t seed) {
  const json j = load_json(path);
  check_keys(j, "grid", {"version", "defaults", "settings"});
  if (get_int(j, "grid", "version", 1) != 1)
    throw ArgumentError("config error at version: only version 1 is supported");
  GridConfig g;
  g.defaults = parse_experiment(j.contains("defaults") ? j.at("defaults") : json::object(),
                                "defaults", ExperimentConfig{}, seed);
  if (!j.contains("settings") || !j.at("settings").is_array() || j.at("settings").empty())
    throw ArgumentError("config error at settings: expected a nonempty array");
  for (std::size_t i = 0; i < j.at("settings").size(); ++i)
    g.settings.push_back(parse_experiment(j.at("settings")[i],
                                          "settings[" + std::to_string(i) + "]", g.defaults, seed));
  return g;
}

void RunManifest::write(const std::string& path) const {
  json j{{"command", command}, {"seed", seed}, {"out_dir", out_dir}, {"threads", threads},
         {"config", config}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError(path + ": cannot open file for writing");
  out << j.dump(2) << "\n";
}

RunManifest RunManifest::read(const std::string& path) {
  const json j = load_json(path);
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.out_dir = j.at("out_dir").get<std::string>();
  m.threads = j.value("threads", 1);
  m.config = j.at("config");
  return m;
}

}  // namespace greensec
