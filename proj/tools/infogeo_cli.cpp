// Command-line entry point: infogeo <subcommand> [--config PATH] [--fixture NAME]
// [--resolution N[,N...]] [--seed U64] [--psi NAME] [--out DIR]

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "infogeo/infogeo.hpp"

namespace fs = std::filesystem;
using namespace infogeo;

namespace {

int fail(const std::string& kind, const std::string& message, int code) {
  Json rec{{"status", "error"}, {"kind", kind}, {"message", message}};
  std::cout << rec.dump() << std::endl;
  return code;
}

std::string utc_timestamp() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Information geometry of the divergence-form elliptic inverse problem"};
  app.require_subcommand(1);
  std::string config_path, fixture, resolution, psi, out;
  std::string seed;
  app.add_option("--config", config_path, "INI experiment file");
  app.add_option("--fixture", fixture, "square_ex1 | disk_ex2 | saddle");
  app.add_option("--resolution", resolution, "grid resolution list, e.g. 17,33,65");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--psi", psi, "named psi fixture");
  app.add_option("--out", out, "output directory");
  app.fallthrough();
  for (const auto& [name, fn] : subcommands()) app.add_subcommand(name);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage_error", e.what(), 2);
  }
  const std::string sub = app.get_subcommands().front()->get_name();

  ExperimentConfig cfg;
  try {
    if (!config_path.empty()) load_config_file(cfg, config_path);
    if (!fixture.empty()) override_setting(cfg, "problem.fixture", fixture);
    if (!resolution.empty()) override_setting(cfg, "problem.resolutions", resolution);
    if (!seed.empty()) override_setting(cfg, "problem.seed", seed);
    if (!psi.empty()) override_setting(cfg, "psi.name", psi);
    if (!out.empty()) cfg.out = out;
    validate(cfg);
  } catch (const ConfigError& e) {
    return fail("config_error", e.what(), 2);
  }

  RunResult result;
  auto t0 = std::chrono::steady_clock::now();
  try {
    result = subcommands().at(sub)(cfg);
  } catch (const PreconditionError& e) {
    return fail("precondition_error", e.what(), 3);
  } catch (const Error& e) {
    return fail("numerical_error", e.what(), 4);
  } catch (const std::exception& e) {
    return fail("internal_error", e.what(), 4);
  }
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  Json config_json = to_json(cfg);
  Json summary{{"subcommand", sub}, {"config", config_json}, {"result", result.summary}};
  try {
    fs::create_directories(cfg.out);
    std::vector<std::string> files{"summary.json"};
    {
      std::ofstream os(fs::path(cfg.out) / "summary.json");
      os << summary.dump(2) << "\n";
    }
    for (const auto& t : result.tables) {
      write_csv_file((fs::path(cfg.out) / (t.name + ".csv")).string(), t);
      files.push_back(t.name + ".csv");
    }
    Json manifest{{"subcommand", sub},
                  {"version", kVersion},
                  {"config_hash", hex64(fnv1a(config_json.dump()))},
                  {"config_file", config_path},
                  {"seed", cfg.seed},
                  {"files", files},
                  {"timestamp", utc_timestamp()},
                  {"runtime_seconds", seconds}};
    std::ofstream os(fs::path(cfg.out) / "manifest.json");
    os << manifest.dump(2) << "\n";
  } catch (const std::exception& e) {
    return fail("io_error", e.what(), 5);
  }
  std::cout << Json{{"status", "ok"}, {"subcommand", sub}, {"out", cfg.out}}.dump() << std::endl;
  return 0;
}
