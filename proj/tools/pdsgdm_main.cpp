// Copyright 2026 The pdsgdm Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================
// Command-line front end: run, sweep, check, preset.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pdsgdm/config.hpp"
#include "pdsgdm/presets.hpp"
#include "pdsgdm/runner.hpp"

namespace fs = std::filesystem;
using namespace pdsgdm::runner;

namespace {

void print_summary(const RunSummary& s, const fs::path& dir) {
  std::cout << s.method << " K=" << s.workers << " p=" << s.period
            << " T=" << s.completed << "/" << s.iterations
            << " f_bar=" << pdsgdm::diagnostics::format_double(s.final_f_bar)
            << " grad_norm_sq="
            << pdsgdm::diagnostics::format_double(s.final_grad_norm_sq)
            << " bits=" << s.comm_bits << " violations=" << s.violations
            << " status=" << s.status << "\n  -> " << dir.string() << "\n";
  if (!s.message.empty()) std::cerr << "error: " << s.message << '\n';
}

int run_sweep(const RunConfig& base, const Grid& grid, int repeats,
              const fs::path& root) {
  const std::vector<SweepCell> cells = plan_sweep(base, grid, repeats);
  std::cout << "sweep: " << grid.cells() << " cells x " << repeats
            << " repeats -> " << root.string() << '\n';
  const SweepResult result = sweep(cells, root);
  for (const SweepRow& row : result.rows) {
    std::cout << "  " << row.cell << " rep " << row.repeat << ": "
              << row.summary.status << " f_bar="
              << pdsgdm::diagnostics::format_double(row.summary.final_f_bar)
              << " bits=" << row.summary.comm_bits << '\n';
  }
  return result.exit_code;
}

fs::path output_root() {
  const char* env = std::getenv("PDSGDM_OUTPUT_ROOT");
  return env && *env ? fs::path(env) : fs::path("runs");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic decentralized momentum SGD simulator"};
  app.require_subcommand(1);
  app.footer("Default output root: $PDSGDM_OUTPUT_ROOT, else ./runs\n"
             "Exit codes: 0 ok, 1 invariant or numeric failure, 2 config error");

  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;

  auto* run_cmd = app.add_subcommand("run", "run one configuration");
  run_cmd->add_option("--config", config_path, "config file")->required();
  run_cmd->add_option("--set", sets, "override, key=value (repeatable)");
  run_cmd->add_option("--out", out_dir, "output directory");

  std::string grid_path;
  std::optional<int> repeats;
  auto* sweep_cmd = app.add_subcommand("sweep", "run a Cartesian grid of configs");
  sweep_cmd->add_option("--config", config_path, "base config file")->required();
  sweep_cmd->add_option("--grid", grid_path, "grid file")->required();
  sweep_cmd->add_option("--repeats", repeats, "seeds per cell")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--set", sets, "override, key=value (repeatable)");
  sweep_cmd->add_option("--out", out_dir, "sweep root directory");

  auto* check_cmd = app.add_subcommand("check", "validate a config and print it resolved");
  check_cmd->add_option("--config", config_path, "config file")->required();
  check_cmd->add_option("--set", sets, "override, key=value (repeatable)");

  std::string preset_name;
  auto* preset_cmd = app.add_subcommand("preset", "list or run a built-in preset");
  preset_cmd->add_option("name", preset_name, "preset to run; omit to list");
  preset_cmd->add_option("--repeats", repeats, "seeds per cell")
      ->check(CLI::PositiveNumber);
  preset_cmd->add_option("--out", out_dir, "sweep root directory");
  preset_cmd->add_option("--set", sets, "override, key=value (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) {
      const RunConfig config = load_config(config_path, sets);
      const fs::path dir = out_dir.empty() ? default_run_dir(config) : fs::path(out_dir);
      const RunResult result = run(config, dir);
      print_summary(result.summary, dir);
      return result.summary.exit_code();
    }
    if (*sweep_cmd) {
      const RunConfig base = load_config(config_path, sets);
      const Grid grid = load_grid(grid_path);
      const fs::path root =
          out_dir.empty() ? fs::path(base.output_dir) /
                                ("sweep-" + fs::path(grid_path).stem().string())
                          : fs::path(out_dir);
      return run_sweep(base, grid, repeats.value_or(base.repeats), root);
    }
    if (*check_cmd) {
      const RunConfig config = load_config(config_path, sets);
      std::cout << serialize_config(config);
      return kExitOk;
    }
    if (*preset_cmd) {
      if (preset_name.empty()) {
        for (const Preset& p : presets()) {
          std::cout << p.name << "\n    " << p.description << '\n';
        }
        return kExitOk;
      }
      const Preset* preset = find_preset(preset_name);
      if (!preset) {
        std::cerr << "error: unknown preset '" << preset_name
                  << "'; run 'preset' to list them\n";
        return kExitConfig;
      }
      const RunConfig base = load_config_text(preset->config_text, sets);
      const Grid grid = parse_grid_text(preset->grid_text);
      const fs::path root = out_dir.empty() ? output_root() / preset->name
                                            : fs::path(out_dir);
      return run_sweep(base, grid, repeats.value_or(preset->repeats), root);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const pdsgdm::ParameterError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}
