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
#ifndef PDSGDM_RUNNER_HPP_
#define PDSGDM_RUNNER_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "pdsgdm/config.hpp"
#include "pdsgdm/diagnostics.hpp"
#include "pdsgdm/engine.hpp"

namespace pdsgdm::runner {

// Process exit codes shared by the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // invariant violation or numeric abort
inline constexpr int kExitConfig = 2;

std::shared_ptr<const problems::Problem> build_problem(const RunConfig& config);
topology::MixingMatrix build_mixing(const RunConfig& config);
optim::EngineOptions engine_options(const RunConfig& config,
                                    int model_dim);
// Engine ready at t = 0 for the configuration.
optim::Engine make_engine(const RunConfig& config, bool keep_history = false);

struct RunSummary {
  std::string method;
  std::string topology;
  int workers = 0;
  std::string problem;
  std::string compressor;  // empty when uncompressed
  int period = 0;
  double eta = 0.0;
  double mu = 0.0;
  std::optional<double> gamma;
  std::uint64_t seed = 0;
  long long iterations = 0;
  long long completed = 0;
  double final_f_bar = 0.0;
  double final_grad_norm_sq = 0.0;
  double final_consensus = 0.0;
  std::optional<double> final_suboptimality;
  std::optional<double> final_holdout_loss;
  std::uint64_t comm_bits = 0;
  long long gossip_rounds = 0;
  std::map<std::string, double> worst_residuals;
  long long violations = 0;
  std::optional<long long> aborted_at;
  std::string status = "ok";  // ok | invariant_violation | numeric_abort
  std::string message;
  double wall_seconds = 0.0;  // written to timing.csv only

  int exit_code() const { return status == "ok" ? kExitOk : kExitFailure; }
};

// Summary columns in CSV order (without wall time).
const std::vector<std::string>& summary_columns();
std::vector<std::string> summary_values(const RunSummary& summary);

struct RunResult {
  std::vector<diagnostics::MetricsRecord> records;
  RunSummary summary;
};

// Runs T iterations. With an output directory, writes metrics.csv,
// resolved.toml, summary.csv and timing.csv there; metrics rows are streamed
// so an aborted run keeps its partial CSV. Rows are recorded at t = 0, every
// record_stride iterations and at the final iteration.
RunResult run(const RunConfig& config,
              const std::optional<std::filesystem::path>& out_dir = std::nullopt);

// Default directory for a single run under the configured output root.
std::filesystem::path default_run_dir(const RunConfig& config);

// One grid axis. A linked axis sets several keys together:
//   optim.method | optim.period = pd_sgdm|4, c_sgdm|1
struct GridAxis {
  std::vector<std::string> keys;
  std::vector<std::vector<std::string>> values;  // one tuple per point
};

struct Grid {
  std::vector<GridAxis> axes;
  std::size_t cells() const;
};

// `key = a, b, c` per line, `#` comments. Keys must exist in the schema.
Grid parse_grid_text(std::string_view text);
Grid load_grid(const std::string& path);

struct SweepCell {
  std::string name;  // directory name built from the varied keys
  int repeat = 0;
  RunConfig config;
};

// Expands and validates every (cell, repeat) before anything runs. Repeat r
// uses seed = base seed + r. Throws ConfigError naming the offending cell.
std::vector<SweepCell> plan_sweep(const RunConfig& base, const Grid& grid,
                                  int repeats);

struct SweepRow {
  std::string cell;
  int repeat = 0;
  RunSummary summary;
  std::optional<long long> ttt_grad_norm_sq;
  std::optional<long long> ttt_suboptimality;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  int exit_code = kExitOk;  // worst over cells
};

// Runs the planned cells into <root>/<cell>[/rep-<r>] and writes
// <root>/aggregate.csv (one row per cell and repeat).
SweepResult sweep(const std::vector<SweepCell>& cells,
                  const std::filesystem::path& root);

void write_aggregate(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace pdsgdm::runner

#endif  // PDSGDM_RUNNER_HPP_
