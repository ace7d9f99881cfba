#include "evolab/runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> split_numbers(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split(s)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw evolab::ConfigError("bad number '" + item + "' in --delta-grid");
    out.push_back(v);
  }
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ",") + s;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  evolab::RunManifest m;
  CLI::App app{"evolab: Monte Carlo checks for nonautonomous evolution operators"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run checks on an operator config");
  std::string checks = join(m.checks);
  std::string deltas = "0.25,1";
  bool force = false;
  run->add_option("config", m.config_path, "operator config file")->required();
  run->add_option("--checks", checks, "comma-separated checks (see 'evolab checks')")->capture_default_str();
  run->add_option("--samples", m.samples, "paths per estimate and particles per measure")->capture_default_str();
  run->add_option("--seed", m.seed, "master seed")->capture_default_str();
  run->add_option("--step", m.step, "Euler-Maruyama step")->capture_default_str();
  run->add_option("--burn-in", m.burn_in, "burn-in time for mu_t; 0 means 10/|r0|")->capture_default_str();
  run->add_option("--family", m.family, "test-function family: standard|gaussian|trig|cutoff|indicator")
      ->capture_default_str();
  run->add_option("--delta-grid", deltas, "comma-separated gaps t - s")->capture_default_str();
  run->add_option("--out", m.out, "output root; results go to <out>/<manifest hash>")->capture_default_str();
  run->add_flag("--oracle", m.oracle, "cross-check against the closed-form OU oracle");
  run->add_flag("--force", force, "overwrite an existing output directory");

  auto* presets = app.add_subcommand("presets", "list built-in drift presets");
  auto* list = app.add_subcommand("checks", "list available checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : evolab::kExitConfig;
  }

  if (presets->parsed()) {
    for (const auto& p : evolab::list_presets())
      std::cout << p.name << "(" << p.parameters << ")  regime: " << p.regime << "  " << p.description << "\n";
    return 0;
  }
  if (list->parsed()) {
    for (const auto& c : evolab::available_checks())
      std::cout << c.name << (c.needs.empty() ? "" : "  [needs " + c.needs + "]") << "  " << c.description << "\n";
    return 0;
  }

  try {
    m.checks = split(checks);
    m.delta_grid = split_numbers(deltas);
  } catch (const evolab::ConfigError& e) {
    std::cerr << "evolab: " << e.what() << "\n";
    return evolab::kExitConfig;
  }
  const evolab::RunResult r = evolab::run(m, force);
  if (!r.diagnostic.empty()) std::cerr << "evolab: " << r.diagnostic << "\n";
  if (!r.directory.empty()) std::cout << r.directory << "\n";
  if (r.exit_code <= evolab::kExitInconclusive) {
    int pass = 0, fail = 0, inconclusive = 0;
    for (const auto& rep : r.reports) {
      pass += rep.verdict == evolab::Verdict::Pass;
      fail += rep.verdict == evolab::Verdict::Fail;
      inconclusive += rep.verdict == evolab::Verdict::Inconclusive;
    }
    std::cout << pass << " pass, " << fail << " fail, " << inconclusive << " inconclusive\n";
  }
  return r.exit_code;
}
