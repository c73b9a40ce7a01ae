#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "specshift/harness/suites.hpp"

namespace fs = std::filesystem;
using namespace specshift;
using namespace specshift::harness;

namespace {

enum Exit { kOk = 0, kCheckFail = 1, kUsage = 2 };

fs::path default_out() {
  if (const char* e = std::getenv("SPECSHIFT_OUT"); e && *e) return e;
  return "specshift-out";
}

int finish(const VerificationReport& r, const fs::path& dir) {
  const auto csv = write_report(r, dir);
  emit_all_plotdata(r, dir);
  const auto s = r.summary();
  std::cout << r.name << ": " << s.pass << " pass, " << s.info << " info, " << s.fail << " fail -> " << csv.string()
            << '\n';
  for (const auto& c : r.records) {
    if (c.verdict == Verdict::Fail) {
      std::cout << "  FAIL " << c.tag << ' ' << c.fixture << ' ' << format_double(c.value) << " > "
                << format_double(c.bound) << '\n';
    }
  }
  return r.ok() ? kOk : kCheckFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral shift and multiple operator integral verification harness"};
  app.require_subcommand(1);
  std::string out;
  app.add_option("--out", out, "output directory (default: $SPECSHIFT_OUT or ./specshift-out)");
  int workers = 1;
  app.add_option("--workers", workers, "fixture worker threads")->check(CLI::PositiveNumber);

  auto* run = app.add_subcommand("run", "run an experiment config");
  std::string config_path;
  run->add_option("config", config_path, "JSON experiment config")->required();

  auto* verify = app.add_subcommand("verify", "run a seeded verification suite");
  std::string suite;
  std::uint64_t seed = 1;
  int dim = 4, order = 2, count = 8;
  verify->add_option("--suite", suite)->required()->check(CLI::IsMember({"identities", "bounds", "ssf"}));
  verify->add_option("--seed", seed);
  verify->add_option("--dim", dim)->check(CLI::Range(1, 12));
  verify->add_option("--order", order)->check(CLI::Range(1, 6));
  verify->add_option("--count", count, "number of operator fixtures")->check(CLI::PositiveNumber);

  auto* bump = app.add_subcommand("bump", "sample and certify the bump Phi_eps");
  double a = 0.0, b = 1.0, eps = 0.25;
  int samples = 201;
  bump->add_option("--a", a);
  bump->add_option("--b", b);
  bump->add_option("--eps", eps);
  bump->add_option("--samples", samples)->check(CLI::Range(2, 1000000));

  auto* constants = app.add_subcommand("constants", "estimate or show empirical constants");
  std::string store_path;
  int max_k = 0, instances = 200;
  constants->add_option("--store", store_path, "constant log (CSV)")->required();
  constants->add_option("--estimate", max_k, "estimate c_{2,k} for k = 1..K before showing");
  constants->add_option("--instances", instances)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kOk : kUsage;
  }

  try {
    if (*constants) {
      EmpiricalConstantStore store(store_path);
      for (int k = 1; k <= max_k; ++k) estimate_constant(store, ConstantKey::two(k), instances, 1);
      std::cout << "key,supremum,samples\n";
      for (const auto& [k, v] : store.snapshot()) std::cout << k << ',' << format_double(v.first) << ',' << v.second << '\n';
      return kOk;
    }

    ExperimentConfig cfg;
    if (*run) {
      cfg = load_config(config_path);
    } else if (*verify) {
      cfg.task = suite == "identities" ? Task::VerifyIdentities : suite == "bounds" ? Task::VerifyBounds : Task::Ssf;
      cfg.name = "verify-" + suite;
      cfg.algebra = {{dim, 1.0}};
      cfg.operators.seed = seed;
      cfg.operators.count = count;
      cfg.parameters.n = order;
    } else {
      if (!(eps > 0.0) || !(a < b)) throw ConfigError("bump", "need a < b and eps > 0");
      cfg.task = Task::Bump;
      cfg.name = "bump";
      cfg.parameters.a = a;
      cfg.parameters.b = b;
      cfg.parameters.eps = eps;
      cfg.parameters.samples = samples;
    }
    if (app.get_option("--workers")->count()) cfg.workers = workers;
    const fs::path dir = !out.empty() ? fs::path(out) : cfg.output ? *cfg.output : default_out();
    return finish(run_experiment(cfg), dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const FixtureError& e) {
    std::cerr << "fixture error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCheckFail;
  }
}
