#ifndef EVOLAB_CONFIG_HPP
#define EVOLAB_CONFIG_HPP

// Operator config files: a small TOML subset.
//
//   name = "power4"            # optional
//   dimension = 1              # optional, default 1
//
//   [diffusion]                # Q(t) = q I, q a number or an expression in t;
//   q = 1.0                    # or diag = [1.0, 2.0] for a constant diagonal
//
//   [drift]                    # preset with its parameters ...
//   preset = "power"
//   kappa = 4
//   # expr = "-x1 - x1^3"      # ... or one expression per component, ';'-separated
//
//   [constants]                # eta0, Lambda, r0, regime, K1, K2, alpha, K3, kappa, R, superlinear
//   [lyapunov]                 # family = "quadratic" | "logpower" | "powerexp", lambda, delta, kappa, a, gamma, R
//   [potential]                # c = "1 + x1^2", c0 = 1
//
// Values are numbers, booleans, double-quoted strings or flat number arrays.
// Unknown sections and keys are errors.

#include "evolab/operator.hpp"

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace evolab {

using ConfigValue = std::variant<double, bool, std::string, std::vector<double>>;

struct ConfigEntry {
  ConfigValue value;
  int line = 0;
};

/// section -> key -> value; top-level keys live under "".
using ConfigTable = std::map<std::string, std::map<std::string, ConfigEntry>>;

ConfigTable parse_config_text(const std::string& text);

struct LoadedConfig {
  OperatorSpec spec;
  std::optional<LyapunovSpec> lyapunov;
  std::optional<PotentialSpec> potential;
  /// FNV-1a of the raw file bytes.
  std::uint64_t content_hash = 0;
  std::string path;
};

LoadedConfig load_config_text(const std::string& text);
LoadedConfig load_config(const std::string& path);

}  // namespace evolab

#endif  // EVOLAB_CONFIG_HPP
