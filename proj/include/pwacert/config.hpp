#pragma once

#include <map>
#include <string>
#include <vector>

#include "pwacert/synthesis.hpp"
#include "pwacert/verify.hpp"

namespace pwacert::config {

// Flat-table TOML subset: [section] headers, key = value lines, values are
// strings, numbers, booleans or arrays of numbers. '#' starts a comment.
struct TomlValue {
  enum class Kind { kString, kNumber, kBool, kArray } kind = Kind::kString;
  std::string str;
  double num = 0.0;
  bool boolean = false;
  std::vector<double> array;
};

using TomlTable = std::map<std::string, std::map<std::string, TomlValue>>;

TomlTable parse_toml(const std::string& path);
TomlTable parse_toml_text(const std::string& text);

struct RunConfig {
  // [system]
  std::string system;            // builtin name
  std::string model_path;        // or a PWA model JSON for user systems
  // [surrogate]
  int width = 8;
  int samples = 2000;
  std::uint64_t seed = 1;
  std::string weights_path;      // optional externally trained weights
  // [alpha]
  std::vector<double> alpha_grid;
  // [synthesis]
  synthesis::SynthesisConfig synthesis;
  // [budgets]
  verify::CertifyBudgets budgets;
  // [outputs]
  std::string out_dir = "out";
  bool emit_svg = true;
  bool emit_csv = true;
  // [sim]
  int n_trajectories = 200;
  double horizon_s = 20.0;
  double dt = 1e-3;

  std::string source_text;       // raw config bytes, hashed into the manifest
};

// Parses and validates; throws std::invalid_argument with a message naming
// the offending key. Unknown sections or keys are rejected.
RunConfig load_run_config(const std::string& path);
RunConfig run_config_from_table(const TomlTable& table, std::string source_text);

std::string fnv1a_hex(const std::string& bytes);

}  // namespace pwacert::config
