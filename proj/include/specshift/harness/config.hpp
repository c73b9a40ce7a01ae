#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "specshift/errors.hpp"

namespace specshift::harness {

inline constexpr int kSchemaVersion = 1;

enum class Task { Remainder, Ssf, VerifyIdentities, VerifyBounds, Bump, Constants };

inline std::string to_string(Task t) {
  switch (t) {
    case Task::Remainder: return "remainder";
    case Task::Ssf: return "ssf";
    case Task::VerifyIdentities: return "verify-identities";
    case Task::VerifyBounds: return "verify-bounds";
    case Task::Bump: return "bump";
    case Task::Constants: return "constants";
  }
  return "?";
}

struct BlockSpec {
  int dim = 4;
  double weight = 1.0;
};

// Operator fixtures: a named generator, a count and a seed. Fixture i is drawn
// from its own stream seeded by (seed, i), so fixtures are independent of
// evaluation order and worker count.
struct OperatorFixtures {
  std::string generator = "random-hermitian";  // or "spread-spectrum"
  int count = 8;
  std::uint64_t seed = 1;
  double h_scale = 1.5;
  double v_scale = 0.5;
};

struct FunctionSpec {
  std::string kind = "gaussian";  // gaussian, exp-bump, bump, bspline, polynomial, exponential
  std::vector<double> params;
};

struct Tolerances {
  double identity = 1e-8;
  double divided_difference = 1e-9;
  double moi = 1e-5;
  double cyclic = 1e-9;
  double trace_formula = 1e-7;
  double reconstruction = 1e-5;
  double uniqueness = 1e-6;
  double remainder = 1e-9;
  double bump = 1e-12;
};

struct Parameters {
  int n = 2;
  double a = -1.0;
  double b = 1.0;
  double eps = 0.5;
  int grid_size = 512;
  std::optional<double> window;
  int samples = 201;
  int instances = 200;
  Tolerances tol;
};

struct ExperimentConfig {
  int schema = kSchemaVersion;
  std::string name = "experiment";
  Task task = Task::VerifyIdentities;
  std::vector<BlockSpec> algebra{{4, 1.0}};
  OperatorFixtures operators;
  FunctionSpec function;
  Parameters parameters;
  int workers = 1;
  std::optional<std::filesystem::path> output;
  std::optional<std::filesystem::path> constants_store;
};

namespace detail {

using nlohmann::json;

inline void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, _] : j.items()) {
    if (!allowed.count(k)) throw ConfigError(path.empty() ? k : path + "." + k, "unknown field");
  }
}

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

template <typename T>
void read(const json& j, const std::string& path, const char* key, T& out) {
  if (!j.contains(key)) return;
  const auto p = join(path, key);
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(p, "wrong type");
  }
}

inline void positive(const std::string& path, double v) {
  if (!(v > 0.0)) throw ConfigError(path, "must be positive");
}

}  // namespace detail

inline Task parse_task(const std::string& s, const std::string& path = "task") {
  for (Task t : {Task::Remainder, Task::Ssf, Task::VerifyIdentities, Task::VerifyBounds, Task::Bump, Task::Constants}) {
    if (to_string(t) == s) return t;
  }
  throw ConfigError(path, "unknown task '" + s + "'");
}

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using detail::read;
  detail::only_keys(j, "", {"schema", "name", "task", "algebra", "operators", "function", "parameters", "workers",
                            "output", "constants_store"});
  ExperimentConfig c;
  if (!j.contains("schema")) throw ConfigError("schema", "missing");
  read(j, "", "schema", c.schema);
  if (c.schema != kSchemaVersion) throw ConfigError("schema", "unsupported version " + std::to_string(c.schema));
  if (!j.contains("task")) throw ConfigError("task", "missing");
  std::string task;
  read(j, "", "task", task);
  c.task = parse_task(task);
  read(j, "", "name", c.name);
  if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos) throw ConfigError("name", "bad report name");
  read(j, "", "workers", c.workers);
  if (c.workers < 1) throw ConfigError("workers", "must be >= 1");
  if (j.contains("output")) {
    std::string o;
    read(j, "", "output", o);
    c.output = o;
  }
  if (j.contains("constants_store")) {
    std::string o;
    read(j, "", "constants_store", o);
    c.constants_store = o;
  }

  if (j.contains("algebra")) {
    const auto& a = j["algebra"];
    if (!a.is_array() || a.empty()) throw ConfigError("algebra", "expected a nonempty array of blocks");
    c.algebra.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto p = "algebra[" + std::to_string(i) + "]";
      detail::only_keys(a[i], p, {"dim", "weight"});
      BlockSpec b;
      read(a[i], p, "dim", b.dim);
      read(a[i], p, "weight", b.weight);
      if (b.dim < 1 || b.dim > 12) throw ConfigError(p + ".dim", "must be in [1, 12]");
      detail::positive(p + ".weight", b.weight);
      c.algebra.push_back(b);
    }
  }

  if (j.contains("operators")) {
    const auto& o = j["operators"];
    detail::only_keys(o, "operators", {"generator", "count", "seed", "h_scale", "v_scale"});
    read(o, "operators", "generator", c.operators.generator);
    read(o, "operators", "count", c.operators.count);
    read(o, "operators", "seed", c.operators.seed);
    read(o, "operators", "h_scale", c.operators.h_scale);
    read(o, "operators", "v_scale", c.operators.v_scale);
    if (c.operators.count < 1) throw ConfigError("operators.count", "must be >= 1");
    detail::positive("operators.h_scale", c.operators.h_scale);
    if (c.operators.v_scale < 0.0) throw ConfigError("operators.v_scale", "must be nonnegative");
  }

  if (j.contains("function")) {
    const auto& f = j["function"];
    detail::only_keys(f, "function", {"kind", "params"});
    read(f, "function", "kind", c.function.kind);
    read(f, "function", "params", c.function.params);
  }

  if (j.contains("parameters")) {
    const auto& p = j["parameters"];
    auto& q = c.parameters;
    detail::only_keys(p, "parameters", {"n", "a", "b", "eps", "grid_size", "window", "samples", "instances",
                                        "tolerance"});
    read(p, "parameters", "n", q.n);
    read(p, "parameters", "a", q.a);
    read(p, "parameters", "b", q.b);
    read(p, "parameters", "eps", q.eps);
    read(p, "parameters", "grid_size", q.grid_size);
    read(p, "parameters", "samples", q.samples);
    read(p, "parameters", "instances", q.instances);
    if (p.contains("window")) {
      double w = 0.0;
      read(p, "parameters", "window", w);
      detail::positive("parameters.window", w);
      q.window = w;
    }
    if (q.n < 1 || q.n > 6) throw ConfigError("parameters.n", "must be in [1, 6]");
    if (!(q.a < q.b)) throw ConfigError("parameters.b", "must exceed parameters.a");
    detail::positive("parameters.eps", q.eps);
    if (q.grid_size < 2) throw ConfigError("parameters.grid_size", "must be >= 2");
    if (q.samples < 2) throw ConfigError("parameters.samples", "must be >= 2");
    if (q.instances < 1) throw ConfigError("parameters.instances", "must be >= 1");
    if (p.contains("tolerance")) {
      const auto& t = p["tolerance"];
      const std::string tp = "parameters.tolerance";
      detail::only_keys(t, tp, {"identity", "divided_difference", "moi", "cyclic", "trace_formula", "reconstruction",
                                "uniqueness", "remainder", "bump"});
      auto& T = q.tol;
      for (auto [key, ref] : {std::pair<const char*, double*>{"identity", &T.identity},
                              {"divided_difference", &T.divided_difference},
                              {"moi", &T.moi},
                              {"cyclic", &T.cyclic},
                              {"trace_formula", &T.trace_formula},
                              {"reconstruction", &T.reconstruction},
                              {"uniqueness", &T.uniqueness},
                              {"remainder", &T.remainder},
                              {"bump", &T.bump}}) {
        read(t, tp, key, *ref);
        detail::positive(tp + "." + key, *ref);
      }
    }
  }
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<root>", std::string("not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["schema"] = c.schema;
  j["name"] = c.name;
  j["task"] = to_string(c.task);
  for (const auto& b : c.algebra) j["algebra"].push_back({{"dim", b.dim}, {"weight", b.weight}});
  j["operators"] = {{"generator", c.operators.generator}, {"count", c.operators.count}, {"seed", c.operators.seed},
                    {"h_scale", c.operators.h_scale}, {"v_scale", c.operators.v_scale}};
  j["function"] = {{"kind", c.function.kind}, {"params", c.function.params}};
  const auto& p = c.parameters;
  j["parameters"] = {{"n", p.n}, {"a", p.a}, {"b", p.b}, {"eps", p.eps}, {"grid_size", p.grid_size},
                     {"samples", p.samples}, {"instances", p.instances}};
  if (p.window) j["parameters"]["window"] = *p.window;
  j["parameters"]["tolerance"] = {{"identity", p.tol.identity},
                                  {"divided_difference", p.tol.divided_difference},
                                  {"moi", p.tol.moi},
                                  {"cyclic", p.tol.cyclic},
                                  {"trace_formula", p.tol.trace_formula},
                                  {"reconstruction", p.tol.reconstruction},
                                  {"uniqueness", p.tol.uniqueness},
                                  {"remainder", p.tol.remainder},
                                  {"bump", p.tol.bump}};
  j["workers"] = c.workers;
  if (c.output) j["output"] = c.output->string();
  if (c.constants_store) j["constants_store"] = c.constants_store->string();
  return j;
}

}  // namespace specshift::harness
