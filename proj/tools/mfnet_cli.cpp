// mfnet: run or validate an experiment config.
//
//   mfnet run --config exp.json --seed 1 --out metrics.csv
//   mfnet validate --config exp.json
//   mfnet fields [experiment]
//
// Exit codes: 0 ok, 2 invalid config or input, 3 numerical failure,
// 1 anything else. Failures print one line to stderr:
//   error kind=<validation|format|numerical|io|internal> [field=<f>] reason="<text>"

#include "CLI11.hpp"

#include "mfnet/errors.hpp"
#include "mfnet/experiment.hpp"
#include "mfnet/parallel.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

std::string quoted(std::string s) {
  for (auto& c : s) {
    if (c == '"') c = '\'';
    if (c == '\n' || c == '\r') c = ' ';
  }
  return "\"" + s + "\"";
}

int fail(int code, const std::string& kind, const std::string& reason,
         const std::string& field = "") {
  std::cerr << "error kind=" << kind;
  if (!field.empty()) std::cerr << " field=" << field;
  std::cerr << " reason=" << quoted(reason) << std::endl;
  return code;
}

void check_threads_env() {
  const char* v = std::getenv("MFNET_THREADS");
  if (v == nullptr || *v == '\0') return;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) {
    throw mfnet::ConfigError("MFNET_THREADS", "must be a positive integer, got '" + std::string(v) + "'");
  }
}

void print_fields(const std::string& experiment) {
  std::cout << experiment << ":\n";
  for (const auto& f : mfnet::experiment_fields(experiment)) {
    const std::string def = f.default_value.is_null() ? "(required)" : f.default_value.dump();
    std::cout << "  " << f.name << " = " << def << "    " << f.help << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ManifoldNet experiments"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  auto* run = app.add_subcommand("run", "run an experiment and write metrics CSV");
  run->add_option("--config", config, "experiment JSON")->required();
  run->add_option("--seed", seed, "run seed (default: config seed)");
  run->add_option("--out", out, "metrics CSV (default: config output)");

  std::string vconfig;
  auto* validate = app.add_subcommand("validate", "check a config and print resolved fields");
  validate->add_option("--config", vconfig, "experiment JSON")->required();

  std::string which;
  auto* fields = app.add_subcommand("fields", "list config fields and defaults");
  fields->add_option("experiment", which, "experiment name (default: all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(2, "usage", e.what());
  }

  try {
    check_threads_env();
    if (fields->parsed()) {
      if (which.empty()) {
        for (const auto& name : mfnet::experiment_names()) print_fields(name);
      } else {
        print_fields(which);
      }
      return 0;
    }
    if (validate->parsed()) {
      const auto cfg = mfnet::load_config(vconfig);
      std::cout << "experiment " << cfg.experiment << " ok\n";
      mfnet::print_config(std::cout, cfg);
      return 0;
    }

    const auto cfg = mfnet::load_config(config);
    const std::uint64_t s = seed ? *seed : cfg.values.at("seed").get<std::uint64_t>();
    if (out.empty()) out = cfg.values.at("output").get<std::string>();
    if (out.empty()) throw mfnet::ConfigError("output", "no --out given and config output is empty");
    std::cout << "experiment " << cfg.experiment << " seed " << s << " threads "
              << mfnet::thread_count() << '\n';
    mfnet::print_config(std::cout, cfg);
    std::cout.flush();

    std::ofstream file(out, std::ios::binary | std::ios::trunc);
    if (!file) return fail(2, "io", "cannot open " + out + " for writing", "out");
    mfnet::MetricsWriter writer(file);
    mfnet::run_experiment(cfg, s, writer);
    file.close();
    if (!file) return fail(2, "io", "write to " + out + " failed", "out");
    std::cout << "wrote " << writer.rows() << " rows to " << out << '\n';
    return 0;
  } catch (const mfnet::ConfigError& e) {
    return fail(2, "validation", e.message(), e.field());
  } catch (const mfnet::InvalidArgument& e) {
    return fail(2, "validation", e.what());
  } catch (const mfnet::FormatError& e) {
    return fail(2, "format", e.what());
  } catch (const mfnet::NumericalError& e) {
    return fail(3, "numerical", std::string(e.what()) + " (residual " + std::to_string(e.residual()) + ")");
  } catch (const std::exception& e) {
    return fail(1, "internal", e.what());
  }
}
