#pragma once

// Experiment configuration: a TOML-style key/value file with optional [section] headers.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace acbem {

enum class NPolicy { Offset, Ratio };

struct ExperimentConfig {
  double beta = 0.3;
  double delta = 0.2;
  double alpha = 0.1;

  std::vector<double> K{4, 8, 16};
  NPolicy n_policy = NPolicy::Offset;
  double n_offset = 1.0;  ///< N = K + n_offset
  double n_ratio = 1.0;   ///< N = n_ratio · K

  double R_ref = 136.0;
  double reference_tol = 1e-10;
  bool contamination_guard = true;
  std::string cache_dir;  ///< empty: no reference cache

  double solver_tol = 1e-10;
  int max_iterations = 50;

  std::string out_dir = "out";
  std::uint64_t seed = 20240601;

  double N_for(double K) const;
  double max_N() const;
};

/// Parse a config stream. Throws ConfigError carrying the offending line number.
ExperimentConfig parse_config(std::istream& is);
ExperimentConfig parse_config_string(const std::string& text);
/// "default" resolves to the built-in configuration, anything else is a file path.
ExperimentConfig load_config(const std::string& name_or_path);

/// Throws ConfigError if N(K) < K for some K or R_ref < 8·max N.
void validate(const ExperimentConfig& cfg);

/// Canonical text form; parse_config(format_config(c)) reproduces c.
std::string format_config(const ExperimentConfig& cfg);
nlohmann::json to_json(const ExperimentConfig& cfg);

}  // namespace acbem
