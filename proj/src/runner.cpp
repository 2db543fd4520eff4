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
#include "pdsgdm/runner.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <sstream>

namespace pdsgdm::runner {
namespace fs = std::filesystem;
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << csv_field(fields[i]);
  }
  out << '\n';
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

const char* const kResidualNames[] = {
    diagnostics::kResMeanPreserve, diagnostics::kResAuxZ,
    diagnostics::kResConsensusBound, diagnostics::kResMomentumBound,
    diagnostics::kResSharedKnowledge};

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == '/' || c == '\\' || c == ' ' || c == ',') c = '_';
  }
  return s;
}

std::optional<long long> threshold_time(
    const std::vector<diagnostics::MetricsRecord>& records,
    const std::optional<double>& threshold, bool suboptimality) {
  if (!threshold) return std::nullopt;
  std::vector<std::pair<long long, double>> series;
  for (const auto& r : records) {
    if (suboptimality) {
      if (!r.suboptimality) return std::nullopt;
      series.emplace_back(r.t, *r.suboptimality);
    } else {
      series.emplace_back(r.t, r.grad_norm_sq);
    }
  }
  return diagnostics::time_to_threshold(series, *threshold);
}

}  // namespace

std::shared_ptr<const problems::Problem> build_problem(const RunConfig& config) {
  problems::ProblemConfig pc = config.problem;
  pc.workers = config.workers;
  return problems::make_problem(pc);
}

topology::MixingMatrix build_mixing(const RunConfig& config) {
  if (config.topology_kind == topology::Kind::kCustom) {
    return topology::load_mixing_matrix(config.custom_path);
  }
  return topology::build_topology(config.topology_kind, config.workers);
}

optim::EngineOptions engine_options(const RunConfig& config, int model_dim) {
  optim::EngineOptions o;
  o.batch_size = config.batch_size;
  o.seed = config.seed;
  if (config.compression_kind) {
    o.compressor = compression::CompressorSpec(*config.compression_kind,
                                               model_dim, config.compression_k);
  }
  o.check_consensus_bound = config.check_consensus_bound();
  o.bound_slack = config.bound_slack;
  return o;
}

optim::Engine make_engine(const RunConfig& config, bool keep_history) {
  auto problem = build_problem(config);
  optim::OptimizerConfig oc = config.optim;
  // A computed gamma is recomputed by the engine so it is reported as such.
  if (auto it = config.settings.find("optim.gamma");
      it != config.settings.end() &&
      it->second.provenance == Provenance::kComputed) {
    oc.gamma.reset();
  }
  optim::EngineOptions options = engine_options(config, problem->dim());
  options.keep_history = keep_history;
  return optim::Engine(std::move(problem), build_mixing(config), std::move(oc),
                       std::move(options));
}

const std::vector<std::string>& summary_columns() {
  static const std::vector<std::string> columns = [] {
    std::vector<std::string> c = {
        "method",        "topology",       "workers",
        "problem",       "compressor",     "period",
        "eta",           "mu",             "gamma",
        "seed",          "iterations",     "completed",
        "final_f_bar",   "final_grad_norm_sq", "final_consensus",
        "final_suboptimality", "final_holdout_loss", "comm_bits",
        "gossip_rounds"};
    for (const char* name : kResidualNames) {
      c.push_back(std::string("worst_res_") + name);
    }
    c.insert(c.end(), {"violations", "aborted_at", "status"});
    return c;
  }();
  return columns;
}

std::vector<std::string> summary_values(const RunSummary& s) {
  using diagnostics::format_double;
  using diagnostics::format_optional;
  std::vector<std::string> v = {s.method,
                                s.topology,
                                std::to_string(s.workers),
                                s.problem,
                                s.compressor,
                                std::to_string(s.period),
                                format_double(s.eta),
                                format_double(s.mu),
                                format_optional(s.gamma),
                                std::to_string(s.seed),
                                std::to_string(s.iterations),
                                std::to_string(s.completed),
                                format_double(s.final_f_bar),
                                format_double(s.final_grad_norm_sq),
                                format_double(s.final_consensus),
                                format_optional(s.final_suboptimality),
                                format_optional(s.final_holdout_loss),
                                std::to_string(s.comm_bits),
                                std::to_string(s.gossip_rounds)};
  for (const char* name : kResidualNames) {
    const auto it = s.worst_residuals.find(name);
    v.push_back(it == s.worst_residuals.end() ? "" : format_double(it->second));
  }
  v.push_back(std::to_string(s.violations));
  v.push_back(s.aborted_at ? std::to_string(*s.aborted_at) : "");
  v.push_back(s.status);
  return v;
}

fs::path default_run_dir(const RunConfig& config) {
  std::string name = std::string(optim::to_string(config.optim.method)) + "-" +
                     std::string(topology::to_string(config.topology_kind)) +
                     "-K" + std::to_string(config.workers) + "-p" +
                     std::to_string(config.optim.effective_period()) + "-seed" +
                     std::to_string(config.seed);
  return fs::path(config.output_dir) / name;
}

RunResult run(const RunConfig& config, const std::optional<fs::path>& out_dir) {
  // Everything that can reject the configuration happens before any output.
  optim::Engine engine = make_engine(config);

  RunResult result;
  RunSummary& s = result.summary;
  s.method = optim::to_string(config.optim.method);
  s.topology = topology::to_string(config.topology_kind);
  s.workers = config.workers;
  s.problem = problems::to_string(config.problem.kind);
  if (config.compression_kind) {
    s.compressor = compression::to_string(*config.compression_kind);
  }
  s.period = config.optim.effective_period();
  s.eta = config.optim.eta;
  s.mu = config.optim.effective_mu();
  if (config.optim.method == optim::Method::kCpdSgdm) s.gamma = engine.gamma();
  s.seed = config.seed;
  s.iterations = config.optim.iterations;

  std::ofstream metrics;
  std::optional<diagnostics::MetricsCsvWriter> writer;
  if (out_dir) {
    fs::create_directories(*out_dir);
    {
      std::ofstream resolved = open_output(*out_dir / "resolved.toml");
      resolved << serialize_config(config);
    }
    metrics = open_output(*out_dir / "metrics.csv");
    writer.emplace(metrics, engine.problem().has_holdout());
    writer->write_header();
  }

  auto emit = [&](diagnostics::MetricsRecord r) {
    if (writer) {
      writer->write(r);
      metrics.flush();
    }
    result.records.push_back(std::move(r));
  };

  const auto start = std::chrono::steady_clock::now();
  emit(engine.record());
  const long long total = config.optim.iterations;
  try {
    while (!engine.finished()) {
      engine.advance();
      const long long t = engine.iteration();
      if (t % config.record_stride == 0 || t == total) emit(engine.record());
    }
  } catch (const optim::NumericAbort& e) {
    s.status = "numeric_abort";
    s.message = e.what();
    s.aborted_at = e.iteration();
  } catch (const optim::InvariantViolation& e) {
    s.status = "invariant_violation";
    s.message = e.what();
    s.aborted_at = e.iteration();
  }
  s.wall_seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start)
                       .count();

  s.completed = engine.iteration();
  const diagnostics::MetricsRecord& last = result.records.back();
  s.final_f_bar = last.f_bar;
  s.final_grad_norm_sq = last.grad_norm_sq;
  s.final_consensus = last.consensus;
  s.final_suboptimality = last.suboptimality;
  s.final_holdout_loss = last.holdout_loss;
  s.comm_bits = engine.comm_bits();
  s.gossip_rounds = engine.gossip_rounds();
  s.worst_residuals = engine.worst_residuals();
  s.violations = engine.violations().total();

  if (out_dir) {
    metrics.close();
    std::ofstream summary = open_output(*out_dir / "summary.csv");
    write_row(summary, summary_columns());
    write_row(summary, summary_values(s));
    std::ofstream timing = open_output(*out_dir / "timing.csv");
    timing << "wall_seconds\n" << diagnostics::format_double(s.wall_seconds)
           << '\n';
  }
  return result;
}

std::size_t Grid::cells() const {
  std::size_t n = 1;
  for (const GridAxis& a : axes) n *= a.values.size();
  return n;
}

Grid parse_grid_text(std::string_view text) {
  Grid grid;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  std::vector<std::string> seen;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const std::string where = "grid line " + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where + "expected 'key = v1, v2, ...'", "", line_no);
    }
    GridAxis axis;
    axis.keys = split(line.substr(0, eq), '|');
    for (const std::string& key : axis.keys) {
      const auto& known = known_keys();
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        std::string msg = where + "unknown key '" + key + "'";
        if (auto hint = suggest_key(key)) msg += " (did you mean '" + *hint + "'?)";
        throw ConfigError(msg, key, line_no);
      }
      if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
        throw ConfigError(where + "key '" + key + "' appears twice", key,
                          line_no);
      }
      seen.push_back(key);
    }
    std::string list = trim(line.substr(eq + 1));
    if (list.size() >= 2 && list.front() == '[' && list.back() == ']') {
      list = list.substr(1, list.size() - 2);
    }
    for (const std::string& point : split(list, ',')) {
      std::vector<std::string> tuple = split(point, '|');
      if (tuple.size() != axis.keys.size()) {
        throw ConfigError(where + "value '" + point + "' needs " +
                              std::to_string(axis.keys.size()) + " parts",
                          axis.keys.front(), line_no);
      }
      axis.values.push_back(std::move(tuple));
    }
    if (axis.values.empty()) {
      throw ConfigError(where + "empty value list", axis.keys.front(), line_no);
    }
    grid.axes.push_back(std::move(axis));
  }
  return grid;
}

Grid load_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read grid file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_grid_text(buffer.str());
}

std::vector<SweepCell> plan_sweep(const RunConfig& base, const Grid& grid,
                                  int repeats) {
  if (repeats < 1) throw ConfigError("repeats must be >= 1", "repeats");
  // Leaf names label directories unless two varied keys share a leaf.
  std::vector<std::string> all_keys;
  for (const GridAxis& a : grid.axes) {
    all_keys.insert(all_keys.end(), a.keys.begin(), a.keys.end());
  }
  auto label_of = [&all_keys](const std::string& key) {
    const std::string leaf = key.substr(key.rfind('.') + 1);
    const auto clashes = std::count_if(
        all_keys.begin(), all_keys.end(), [&leaf](const std::string& k) {
          return k.substr(k.rfind('.') + 1) == leaf;
        });
    return clashes > 1 ? key : leaf;
  };

  std::vector<SweepCell> cells;
  const std::size_t n = grid.cells();
  std::vector<std::string> names;
  for (std::size_t index = 0; index < n; ++index) {
    std::vector<ConfigEntry> overrides;
    std::string name;
    std::size_t rest = index;
    // Last axis varies fastest.
    std::vector<std::size_t> pick(grid.axes.size());
    for (std::size_t a = grid.axes.size(); a-- > 0;) {
      pick[a] = rest % grid.axes[a].values.size();
      rest /= grid.axes[a].values.size();
    }
    for (std::size_t a = 0; a < grid.axes.size(); ++a) {
      const GridAxis& axis = grid.axes[a];
      for (std::size_t i = 0; i < axis.keys.size(); ++i) {
        ConfigEntry e;
        e.key = axis.keys[i];
        e.value = axis.values[pick[a]][i];
        e.source = Provenance::kOverride;
        if (!e.value.empty()) {
          if (!name.empty()) name += '_';
          name += label_of(e.key) + "=" + sanitize(e.value);
        }
        overrides.push_back(std::move(e));
      }
    }
    if (name.empty()) name = "base";
    if (std::find(names.begin(), names.end(), name) != names.end()) {
      name += "_" + std::to_string(index);
    }
    names.push_back(name);

    for (int r = 0; r < repeats; ++r) {
      std::vector<ConfigEntry> entries = overrides;
      ConfigEntry seed;
      seed.key = "seed";
      seed.value = std::to_string(base.seed + static_cast<std::uint64_t>(r));
      seed.source = Provenance::kOverride;
      entries.push_back(std::move(seed));
      SweepCell cell;
      cell.name = name;
      cell.repeat = r;
      try {
        cell.config = with_overrides(base, entries);
      } catch (const ConfigError& e) {
        throw ConfigError("cell '" + name + "': " + e.what(), e.key(), e.line());
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

void write_aggregate(std::ostream& out, const std::vector<SweepRow>& rows) {
  std::vector<std::string> header = {"cell", "repeat"};
  header.insert(header.end(), summary_columns().begin(),
                summary_columns().end());
  header.push_back("time_to_threshold_grad_norm_sq");
  header.push_back("time_to_threshold_suboptimality");
  write_row(out, header);
  for (const SweepRow& row : rows) {
    std::vector<std::string> fields = {row.cell, std::to_string(row.repeat)};
    const std::vector<std::string> values = summary_values(row.summary);
    fields.insert(fields.end(), values.begin(), values.end());
    fields.push_back(row.ttt_grad_norm_sq ? std::to_string(*row.ttt_grad_norm_sq)
                                          : "");
    fields.push_back(row.ttt_suboptimality
                         ? std::to_string(*row.ttt_suboptimality)
                         : "");
    write_row(out, fields);
  }
}

SweepResult sweep(const std::vector<SweepCell>& cells, const fs::path& root) {
  const bool repeated = std::any_of(cells.begin(), cells.end(),
                                    [](const SweepCell& c) { return c.repeat > 0; });
  SweepResult result;
  fs::create_directories(root);
  for (const SweepCell& cell : cells) {
    fs::path dir = root / cell.name;
    if (repeated) dir /= "rep-" + std::to_string(cell.repeat);
    RunResult run_result = run(cell.config, dir);
    SweepRow row;
    row.cell = cell.name;
    row.repeat = cell.repeat;
    row.ttt_grad_norm_sq = threshold_time(
        run_result.records, cell.config.threshold_grad_norm_sq, false);
    row.ttt_suboptimality = threshold_time(
        run_result.records, cell.config.threshold_suboptimality, true);
    result.exit_code = std::max(result.exit_code, run_result.summary.exit_code());
    row.summary = std::move(run_result.summary);
    result.rows.push_back(std::move(row));
  }
  std::ofstream out = open_output(root / "aggregate.csv");
  write_aggregate(out, result.rows);
  return result;
}

}  // namespace pdsgdm::runner
