#include "icbf/scenario_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace icbf {

using nlohmann::json;

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw ConfigError(field + ": " + msg, field);
}

void expect_keys(const json& obj, const std::string& path,
                 std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) {
        ok = true;
        break;
      }
    if (!ok) fail(path.empty() ? key : path + "." + key, "unknown field");
  }
}

double get_number(const json& obj, const std::string& path, const char* key,
                  double fallback, bool required = false) {
  if (!obj.contains(key)) {
    if (required) fail(path + "." + key, "missing required field");
    return fallback;
  }
  const auto& v = obj.at(key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  return v.get<double>();
}

bool get_bool(const json& obj, const std::string& path, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_boolean()) fail(path + "." + key, "expected a boolean");
  return v.get<bool>();
}

Vec2 get_vec2(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    fail(path, "expected [x, y]");
  return Vec2(v[0].get<double>(), v[1].get<double>());
}

State get_state(const json& obj, const std::string& path, bool v_required) {
  if (!obj.is_object()) fail(path, "expected an object with p and v");
  expect_keys(obj, path, {"p", "v"});
  State s;
  if (!obj.contains("p")) fail(path + ".p", "missing required field");
  s.p = get_vec2(obj.at("p"), path + ".p");
  if (obj.contains("v")) {
    s.v = get_vec2(obj.at("v"), path + ".v");
  } else if (v_required) {
    fail(path + ".v", "missing required field");
  }
  return s;
}

ScenarioConfig parse_config(const json& root) {
  if (!root.is_object()) fail("(root)", "config must be a JSON object");
  expect_keys(root, "",
              {"name", "model", "beacons", "barrier", "filter", "nls", "lqr", "x0",
               "goal", "dt", "t_final", "noise", "eval_at_truth", "violation_tol"});

  ScenarioConfig cfg;

  if (root.contains("name")) {
    if (!root.at("name").is_string()) fail("name", "expected a string");
    cfg.name = root.at("name").get<std::string>();
  }

  if (!root.contains("model")) fail("model", "missing required field");
  const std::string model = root.at("model").is_string()
                                ? root.at("model").get<std::string>()
                                : std::string();
  if (model == "range") {
    cfg.model = MeasurementModel::Range;
  } else if (model == "bearing") {
    cfg.model = MeasurementModel::Bearing;
  } else {
    fail("model", "expected \"range\" or \"bearing\"");
  }

  if (!root.contains("beacons")) fail("beacons", "missing required field");
  const auto& bj = root.at("beacons");
  if (!bj.is_array() || bj.empty()) fail("beacons", "expected a nonempty array of [x, y]");
  for (size_t i = 0; i < bj.size(); ++i)
    cfg.beacons.positions.push_back(get_vec2(bj[i], "beacons[" + std::to_string(i) + "]"));

  if (!root.contains("barrier")) fail("barrier", "missing required field");
  const auto& barrier = root.at("barrier");
  if (!barrier.is_object()) fail("barrier", "expected an object");
  expect_keys(barrier, "barrier",
              {"lambda_s", "kappa", "delta", "delta_cross", "alpha", "mode", "method",
               "fd_step", "analytic_hessian", "simple_tol"});
  cfg.barrier.lambda_s = get_number(barrier, "barrier", "lambda_s", 0.0, true);
  cfg.barrier.kappa = get_number(barrier, "barrier", "kappa", 0.0, true);
  cfg.barrier.delta = get_number(barrier, "barrier", "delta", 0.0, true);
  cfg.barrier.delta_cross = get_number(barrier, "barrier", "delta_cross", 0.0, true);
  cfg.barrier.fd_step = get_number(barrier, "barrier", "fd_step", cfg.barrier.fd_step);
  cfg.barrier.simple_tol =
      get_number(barrier, "barrier", "simple_tol", cfg.barrier.simple_tol);
  cfg.barrier.analytic_hessian =
      get_bool(barrier, "barrier", "analytic_hessian", cfg.barrier.analytic_hessian);

  if (!barrier.contains("alpha")) fail("barrier.alpha", "missing required field");
  const auto& alpha = barrier.at("alpha");
  if (!alpha.is_object()) fail("barrier.alpha", "expected an object");
  expect_keys(alpha, "barrier.alpha", {"analytic", "anticross", "anticross_gap"});
  cfg.barrier.alpha_analytic = get_number(alpha, "barrier.alpha", "analytic", 0.0, true);
  cfg.barrier.alpha_anticross = get_number(alpha, "barrier.alpha", "anticross", 0.0, true);
  cfg.barrier.alpha_anticross_gap =
      get_number(alpha, "barrier.alpha", "anticross_gap", 0.0, true);

  const std::string mode = barrier.contains("mode") && barrier.at("mode").is_string()
                               ? barrier.at("mode").get<std::string>()
                               : std::string();
  if (mode == "localize") {
    cfg.barrier.mode = BarrierMode::Localize;
  } else if (mode == "avoid") {
    cfg.barrier.mode = BarrierMode::Avoid;
  } else {
    fail("barrier.mode", "expected \"localize\" or \"avoid\"");
  }

  const std::string method = barrier.contains("method") && barrier.at("method").is_string()
                                 ? barrier.at("method").get<std::string>()
                                 : std::string();
  if (method == "analytic") {
    cfg.barrier.method = BarrierMethod::Analytic;
  } else if (method == "anticross") {
    cfg.barrier.method = BarrierMethod::AntiCrossing;
  } else {
    fail("barrier.method", "expected \"analytic\" or \"anticross\"");
  }

  if (root.contains("filter")) {
    const auto& filter = root.at("filter");
    if (!filter.is_object()) fail("filter", "expected an object");
    expect_keys(filter, "filter", {"c", "u_max", "lgh_eps"});
    cfg.filter.c = get_number(filter, "filter", "c", cfg.filter.c);
    cfg.filter.lgh_eps = get_number(filter, "filter", "lgh_eps", cfg.filter.lgh_eps);
    if (filter.contains("u_max"))
      cfg.filter.u_max = get_vec2(filter.at("u_max"), "filter.u_max");
  }

  if (root.contains("nls")) {
    const auto& nls = root.at("nls");
    if (!nls.is_object()) fail("nls", "expected an object");
    expect_keys(nls, "nls", {"step", "max_iters", "grad_tol", "warm_start"});
    cfg.nls.step = get_number(nls, "nls", "step", cfg.nls.step);
    cfg.nls.grad_tol = get_number(nls, "nls", "grad_tol", cfg.nls.grad_tol);
    cfg.nls.max_iters =
        static_cast<int>(get_number(nls, "nls", "max_iters", cfg.nls.max_iters));
    cfg.nls.warm_start = get_bool(nls, "nls", "warm_start", cfg.nls.warm_start);
  }

  if (root.contains("lqr")) {
    const auto& lqr = root.at("lqr");
    if (!lqr.is_object()) fail("lqr", "expected an object");
    expect_keys(lqr, "lqr", {"q", "r"});
    if (lqr.contains("q")) {
      const auto& q = lqr.at("q");
      if (!q.is_array() || q.size() != 4) fail("lqr.q", "expected [qp_x, qp_y, qv_x, qv_y]");
      for (int i = 0; i < 4; ++i) {
        if (!q[i].is_number()) fail("lqr.q", "expected numbers");
        cfg.lqr_Q(i, i) = q[i].get<double>();
      }
    }
    if (lqr.contains("r")) {
      const auto& r = lqr.at("r");
      if (!r.is_array() || r.size() != 2) fail("lqr.r", "expected [r_x, r_y]");
      for (int i = 0; i < 2; ++i) {
        if (!r[i].is_number()) fail("lqr.r", "expected numbers");
        cfg.lqr_R(i, i) = r[i].get<double>();
      }
    }
  }

  if (!root.contains("x0")) fail("x0", "missing required field");
  cfg.x0 = get_state(root.at("x0"), "x0", false);
  if (!root.contains("goal")) fail("goal", "missing required field");
  cfg.goal = get_state(root.at("goal"), "goal", false);

  cfg.dt = get_number(root, "", "dt", 0.0, true);
  cfg.t_final = get_number(root, "", "t_final", 0.0, true);

  if (root.contains("noise")) {
    const auto& noise = root.at("noise");
    if (!noise.is_object()) fail("noise", "expected an object");
    expect_keys(noise, "noise", {"std", "seed"});
    if (noise.contains("std")) {
      const auto& sd = noise.at("std");
      if (sd.is_number()) {
        cfg.noise_std.resize(1);
        cfg.noise_std[0] = sd.get<double>();
      } else if (sd.is_array()) {
        cfg.noise_std.resize(static_cast<Eigen::Index>(sd.size()));
        for (size_t i = 0; i < sd.size(); ++i) {
          if (!sd[i].is_number()) fail("noise.std", "expected numbers");
          cfg.noise_std[static_cast<Eigen::Index>(i)] = sd[i].get<double>();
        }
      } else {
        fail("noise.std", "expected a number or an array");
      }
    }
    if (noise.contains("seed")) {
      const auto& seed = noise.at("seed");
      if (!seed.is_number_unsigned()) fail("noise.seed", "expected a nonnegative integer");
      cfg.seed = seed.get<std::uint64_t>();
    }
  }

  cfg.eval_at_truth = get_bool(root, "", "eval_at_truth", cfg.eval_at_truth);
  cfg.violation_tol = get_number(root, "", "violation_tol", cfg.violation_tol);

  // A zero-std noise vector means noiseless; normalize so digests match intent.
  if (cfg.noise_std.size() > 0 && cfg.noise_std.maxCoeff() == 0.0) cfg.noise_std.resize(0);

  try {
    cfg.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what(), "(semantic)");
  }
  return cfg;
}

}  // namespace

LoadedScenario load_scenario_text(const std::string& json_text,
                                  const std::string& source_name) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    // nlohmann reports "... at line L, column C ..." in what()
    throw ConfigError(source_name + ": " + e.what(), "(parse)");
  }
  LoadedScenario out;
  out.cfg = parse_config(root);
  out.canonical_json = root.dump();
  out.digest = fnv1a_hex(out.canonical_json);
  return out;
}

LoadedScenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path, "(io)");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_scenario_text(ss.str(), path);
}

namespace {

json octagon_beacons(double radius) {
  json arr = json::array();
  for (int k = 0; k < 8; ++k) {
    const double a = 2.0 * M_PI * k / 8.0;
    arr.push_back({radius * std::cos(a), radius * std::sin(a)});
  }
  return arr;
}

json triangle_beacons(double side) {
  const double rc = side / std::sqrt(3.0);
  json arr = json::array();
  for (int k = 0; k < 3; ++k) {
    const double a = M_PI / 2.0 + 2.0 * M_PI * k / 3.0;
    arr.push_back({rc * std::cos(a), rc * std::sin(a)});
  }
  return arr;
}

json base_scenario(bool range, bool localize) {
  json j;
  j["model"] = range ? "range" : "bearing";
  j["beacons"] = range ? octagon_beacons(6.0) : triangle_beacons(10.0);
  j["dt"] = 1e-3;
  j["t_final"] = 10.0;

  json barrier;
  if (range && localize) {
    barrier = {{"lambda_s", 5.0},    {"kappa", 1.0},
               {"delta", 0.01},      {"delta_cross", 0.01},
               {"mode", "localize"}, {"method", "analytic"},
               {"alpha", {{"analytic", 10.0}, {"anticross", 10.0}, {"anticross_gap", 100.0}}}};
    j["filter"] = {{"c", 1.0}};
    j["x0"] = {{"p", {-1.5, 0.4}}, {"v", {-1.0, 0.0}}};
    j["goal"] = {{"p", {7.0, 1.0}}, {"v", {0.0, 0.0}}};
  } else if (range && !localize) {
    barrier = {{"lambda_s", 5.0},  {"kappa", 10.0},
               {"delta", 0.01},    {"delta_cross", 0.01},
               {"mode", "avoid"},  {"method", "analytic"},
               {"alpha", {{"analytic", 0.1}, {"anticross", 0.1}, {"anticross_gap", 500.0}}}};
    j["filter"] = {{"c", 10.0}};
    // offset the crossing so the approach grazes the detectable region instead
    // of spearing through a beacon shadow at full speed
    j["x0"] = {{"p", {-10.0, 2.5}}, {"v", {0.0, 0.0}}};
    j["goal"] = {{"p", {10.0, 2.5}}, {"v", {0.0, 0.0}}};
  } else if (!range && localize) {
    barrier = {{"lambda_s", 0.01}, {"kappa", 1000.0},
               {"delta", 1e-6},    {"delta_cross", 0.01},
               {"mode", "localize"}, {"method", "analytic"},
               {"alpha", {{"analytic", 500.0}, {"anticross", 100.0}, {"anticross_gap", 10.0}}}};
    j["filter"] = {{"c", 100.0}};
    j["nls"] = {{"step", 1.0}};
    j["x0"] = {{"p", {0.5, 1.0}}, {"v", {0.0, 0.0}}};
    j["goal"] = {{"p", {14.0, 0.0}}, {"v", {0.0, 0.0}}};
  } else {
    barrier = {{"lambda_s", 0.01}, {"kappa", 5000.0},
               {"delta", 1e-6},    {"delta_cross", 0.01},
               {"mode", "avoid"},  {"method", "analytic"},
               {"alpha", {{"analytic", 100.0}, {"anticross", 100.0}, {"anticross_gap", 500.0}}}};
    j["filter"] = {{"c", 5000.0}};
    j["nls"] = {{"step", 1.0}};
    j["x0"] = {{"p", {-14.0, 0.0}}, {"v", {0.0, 0.0}}};
    j["goal"] = {{"p", {14.0, 0.0}}, {"v", {0.0, 0.0}}};
  }
  j["barrier"] = barrier;
  return j;
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"range-localize-analytic",   "range-localize-anticross",
          "range-avoid-analytic",      "range-avoid-anticross",
          "bearing-localize-analytic", "bearing-localize-anticross",
          "bearing-avoid-analytic",    "bearing-avoid-anticross"};
}

std::string builtin_json(const std::string& name) {
  for (const bool range : {true, false}) {
    for (const bool localize : {true, false}) {
      for (const bool analytic : {true, false}) {
        std::string n = std::string(range ? "range" : "bearing") + "-" +
                        (localize ? "localize" : "avoid") + "-" +
                        (analytic ? "analytic" : "anticross");
        if (n != name) continue;
        json j = base_scenario(range, localize);
        j["name"] = n;
        j["barrier"]["method"] = analytic ? "analytic" : "anticross";
        return j.dump(2) + "\n";
      }
    }
  }
  std::string msg = "unknown scenario \"" + name + "\"; builtins:";
  for (const auto& b : builtin_names()) msg += " " + b;
  throw ConfigError(msg, "(scenario)");
}

LoadedScenario resolve_scenario(const std::string& ref) {
  if (std::filesystem::exists(ref)) return load_scenario_file(ref);
  return load_scenario_text(builtin_json(ref), "builtin:" + ref);
}

}  // namespace icbf
