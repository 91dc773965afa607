#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gravduct/background.hpp"
#include "gravduct/boundary_data.hpp"
#include "gravduct/driver.hpp"
#include "gravduct/elliptic.hpp"

namespace gravduct {

enum class Subcommand { background, phase, solve, verify, stability, uniqueness };

Subcommand parse_subcommand(const std::string& name);
std::string to_string(Subcommand cmd);

struct PhaseConfig {
  double rho_min = 0.0;  // 0 selects rho_s / 10
  double rho_max = 0.0;  // 0 selects 4 max(rho0, rho_s)
  int samples = 400;
  std::vector<double> level_factors = {0.25, 0.5, 1.0, 2.0, 4.0};  // times the inlet first integral
};

struct RunConfig {
  BackgroundParams background;
  int n1 = 64;
  int n2 = 64;
  IterationConfig iteration;
  BoundaryData boundary;  // modes and general_k; reference values filled from the background
  SolverOptions solver;
  int background_nodes = 10001;
  int background_refinement = 8;
  PhaseConfig phase;
  int uniqueness_starts = 3;
  std::uint64_t seed = 20240611;
  std::string out_dir = "gravduct_out";
  bool dump_matrix = false;
  std::string source_text;  // raw configuration, hashed into run summaries
};

/// Parses an INI-style file: [section] headers, key = value lines, ';' or '#'
/// comments. Unknown sections or keys are errors. Throws ConfigError naming
/// the offending key.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);

/// Subcommand-specific checks, e.g. the 2D pipeline needs rho0 > rho_s.
void validate_for(const RunConfig& cfg, Subcommand cmd);

}  // namespace gravduct
