#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "liefrw/expr.hpp"
#include "liefrw/models.hpp"

namespace liefrw::cli {

enum ExitCode : int {
  kOk = 0,
  kMismatch = 1,
  kConfigError = 2,
  kConstraintInfeasible = 3,
  kStepUnderflow = 4,
  kTurningPoint = 5,
};

/// Raw key/value settings; keys use underscores, flags use dashes.
using Settings = std::map<std::string, std::string>;

/// Every accepted key with its help text, in display order.
const std::vector<std::pair<std::string, std::string>>& known_keys();

/// `key = value` lines with `#` comments. Throws ConfigError on malformed
/// lines, duplicate or unknown keys.
Settings parse_config_text(const std::string& text);

/// Validated run parameters.
struct RunConfig {
  std::string system = "conformal";
  ModelConfig model;
  std::string potential_spec = "exp:-2";
  std::vector<std::string> gens;
  std::optional<Expr> c1, c2, mu;
  std::string field;
  std::vector<bool> expect;
  double a0 = 1.0;
  std::optional<double> adot0;
  double phi0 = 1.0;
  double phidot0 = 0.3;
  double N0 = 1.0;
  int branch = 1;
  double t_end = 10.0;
  double rtol = 1e-10;
  double atol = 1e-12;
  std::size_t samples = 101;
  std::optional<double> x_end;
  double drift_max = 1e-7;
  double roundtrip_max = 1e-6;
  double e0 = 0.7;
  std::string lagrangian = "both";
  bool numeric = false;
  bool verify_reassembly = false;
  std::string out;
  std::string csv;
  std::string reduced_csv;
};

/// Throws ConfigError for invalid values.
RunConfig build_config(const Settings& settings);

/// "opaque", "exp:LAMBDA[:C]", "const:V0" or "poly:c0,c1,...". Throws
/// ConfigError.
Potential parse_potential(const std::string& spec);

/// FNV-1a over the command name and the sorted settings, output paths excluded.
std::uint64_t config_hash(const std::string& command, const Settings& settings);

/// Each command writes its report body to `out` and returns the exit code.
int cmd_check(const RunConfig& cfg, std::ostream& out);
int cmd_derive(const RunConfig& cfg, std::ostream& out);
int cmd_integrate(const RunConfig& cfg, std::ostream& out);
int cmd_reduce(const RunConfig& cfg, std::ostream& out);
int cmd_noether(const RunConfig& cfg, std::ostream& out);
int cmd_algebra(const RunConfig& cfg, std::ostream& out);

/// Entry point of the `liefrw` executable; returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace liefrw::cli
