#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pwacert/parallel.hpp"
#include "pwacert/pipeline.hpp"
#include "pwacert/serialize.hpp"

#ifdef PWACERT_HAVE_OPENMP
#include <omp.h>
#endif

using namespace pwacert;

namespace {

int cmd_run(const std::string& config_path) {
  config::RunConfig cfg;
  try {
    cfg = config::load_run_config(config_path);
  } catch (const std::invalid_argument& ex) {
    std::cerr << "invalid config: " << ex.what() << "\n";
    return 2;
  }
  try {
    auto res = pipeline::run_pipeline(cfg);
    std::cout << "system:        " << cfg.system << "\n"
              << "certified:     " << (res.certified ? "yes" : "no") << "\n"
              << "uis_seconds:   " << res.uis_seconds << "\n"
              << "verify_seconds:" << res.verify_seconds << "\n"
              << "total_seconds: " << res.total_seconds << "\n"
              << "artifacts:     " << res.out_dir << "\n";
    return res.certified ? 0 : 1;
  } catch (const std::exception& ex) {
    std::cerr << "pipeline failed: " << ex.what() << "\n";
    return 1;
  }
}

int cmd_inspect(const std::string& barrier_path, const std::string& point_str) {
  uis::UisBarrier barrier;
  try {
    barrier = serialize::barrier_from_json(serialize::read_json(barrier_path));
  } catch (const std::exception& ex) {
    std::cerr << "cannot load barrier: " << ex.what() << "\n";
    return 2;
  }
  Vec x(barrier.domain.dim);
  {
    std::stringstream ss(point_str);
    std::string item;
    int i = 0;
    while (std::getline(ss, item, ',') && i < x.size()) x(i++) = std::stod(item);
    if (i != x.size()) {
      std::cerr << "expected " << x.size() << " coordinates\n";
      return 2;
    }
  }
  try {
    auto ev = barrier.eval(x);
    std::cout << "h_bar(x)      = " << ev.value << "\n"
              << "active member = " << ev.member
              << " (alpha = " << barrier.members[ev.member].alpha << ")\n"
              << "active cell   = " << ev.cell << "\n"
              << "verdict       = " << (ev.value >= 0 ? "inside" : "outside") << "\n";
    return 0;
  } catch (const std::runtime_error& ex) {
    std::cout << ex.what() << "\n";
    return 1;
  }
}

int cmd_verify_only(const std::string& barrier_path, const std::string& config_path) {
  config::RunConfig cfg;
  uis::UisBarrier barrier;
  try {
    cfg = config::load_run_config(config_path);
    barrier = serialize::barrier_from_json(serialize::read_json(barrier_path));
  } catch (const std::exception& ex) {
    std::cerr << "invalid input: " << ex.what() << "\n";
    return 2;
  }
  try {
    auto dyn = pipeline::make_system(cfg);
    auto patches = verify::facet_patches(barrier);
    if (patches.empty()) std::cerr << "warning: empty boundary, nothing to verify\n";
    auto outcomes = verify::verify_patches(dyn, patches, cfg.budgets.restarts);
    std::filesystem::create_directories(cfg.out_dir);
    auto path = (std::filesystem::path(cfg.out_dir) / "verify.json").string();
    serialize::write_json(path, serialize::to_json(outcomes));
    int bad = 0;
    for (const auto& oc : outcomes)
      if (oc.status != verify::VerificationOutcome::Status::kVerified) ++bad;
    std::cout << "patches:  " << patches.size() << "\n"
              << "failures: " << bad << "\n"
              << "report:   " << path << "\n";
    return bad == 0 ? 0 : 1;
  } catch (const std::exception& ex) {
    std::cerr << "verification failed: " << ex.what() << "\n";
    return 1;
  }
}

int cmd_report(const std::string& run_dir) {
  namespace fs = std::filesystem;
  try {
    auto manifest = serialize::read_json((fs::path(run_dir) / "manifest.json").string());
    std::cout << "system:      " << manifest.at("system").get<std::string>() << "\n"
              << "config hash: " << manifest.at("config_hash").get<std::string>() << "\n"
              << "certified:   " << (manifest.at("certified").get<bool>() ? "yes" : "no") << "\n";
    std::ifstream timings((fs::path(run_dir) / "timings.csv").string());
    if (timings) {
      std::cout << "timings:\n";
      std::string line;
      std::getline(timings, line);  // header
      while (std::getline(timings, line)) {
        auto comma = line.find(',');
        std::cout << "  " << line.substr(0, comma) << ": " << line.substr(comma + 1) << " s\n";
      }
    }
    auto vj = serialize::read_json((fs::path(run_dir) / "verify.json").string());
    int verified = 0, counter = 0, failed = 0;
    for (const auto& oc : vj) {
      auto s = oc.at("status").get<std::string>();
      if (s == "verified") ++verified;
      else if (s == "counterexample") ++counter;
      else ++failed;
    }
    std::cout << "facets: " << vj.size() << " verified: " << verified
              << " counterexamples: " << counter << " solver failures: " << failed << "\n";
    return 0;
  } catch (const std::exception& ex) {
    std::cerr << "cannot read run directory: " << ex.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
#ifdef PWACERT_HAVE_OPENMP
  omp_set_num_threads(max_threads());
#endif
  CLI::App app{"piecewise-affine control barrier synthesis and verification"};
  app.require_subcommand(1);

  std::string config_path, barrier_path, point_str, run_dir;

  auto* run = app.add_subcommand("run", "run the full pipeline from a config");
  run->add_option("config", config_path, "TOML config file")->required();

  auto* inspect = app.add_subcommand("inspect", "evaluate a stored barrier at a point");
  inspect->add_option("barrier", barrier_path, "barrier.json")->required();
  inspect->add_option("--point", point_str, "comma-separated coordinates")->required();

  auto* verify_only = app.add_subcommand("verify-only", "re-verify a stored barrier");
  verify_only->add_option("barrier", barrier_path, "barrier.json")->required();
  verify_only->add_option("config", config_path, "TOML config file")->required();

  auto* report = app.add_subcommand("report", "summarize a finished run directory");
  report->add_option("dir", run_dir, "run directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cmd_run(config_path);
  if (inspect->parsed()) return cmd_inspect(barrier_path, point_str);
  if (verify_only->parsed()) return cmd_verify_only(barrier_path, config_path);
  if (report->parsed()) return cmd_report(run_dir);
  return 2;
}
