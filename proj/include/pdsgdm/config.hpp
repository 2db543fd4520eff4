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
#ifndef PDSGDM_CONFIG_HPP_
#define PDSGDM_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pdsgdm/common.hpp"
#include "pdsgdm/compression.hpp"
#include "pdsgdm/optim.hpp"
#include "pdsgdm/problems.hpp"
#include "pdsgdm/topology.hpp"

namespace pdsgdm::runner {

// Parse or validation failure. `key` and `line` are set when known.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::string key = {}, int line = 0)
      : Error(what), key_(std::move(key)), line_(line) {}
  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  std::string key_;
  int line_;
};

enum class Provenance { kDefault, kConfig, kOverride, kComputed };
std::string_view to_string(Provenance p);

struct ConfigEntry {
  std::string key;  // fully qualified, e.g. "optim.eta"
  std::string value;
  int line = 0;  // 0 for command-line overrides
  Provenance source = Provenance::kConfig;
};

// Parses the sectioned key/value text format:
//
//   seed = 3
//   [optim]
//   method = pd_sgdm        # comment
//   lr_decay.milestones = 150, 225
//
// Keys may also be written fully qualified outside any section. Only syntax
// is checked here; unknown keys are rejected by resolve_config.
std::vector<ConfigEntry> parse_config_text(std::string_view text);

// "key=value" as given to --set.
ConfigEntry parse_override(std::string_view assignment);

// Every key the schema accepts, in serialisation order.
const std::vector<std::string>& known_keys();

enum class BoundMode { kAuto, kOn, kOff };

struct Setting {
  std::string value;
  Provenance provenance = Provenance::kDefault;
};

// Fully resolved and validated run description.
struct RunConfig {
  topology::Kind topology_kind = topology::Kind::kRing;
  int workers = 8;
  std::string custom_path;

  problems::ProblemConfig problem;
  int batch_size = 8;

  optim::OptimizerConfig optim;

  std::optional<compression::Kind> compression_kind;
  int compression_k = 0;

  std::uint64_t seed = 0;
  std::string output_dir;
  int record_stride = 1;
  int repeats = 1;

  BoundMode consensus_bound = BoundMode::kAuto;
  double bound_slack = 0.05;
  std::optional<double> threshold_grad_norm_sq;
  std::optional<double> threshold_suboptimality;

  // Every schema key with its final value and where it came from. Absent
  // optional keys are omitted.
  std::map<std::string, Setting> settings;
  // The explicit entries this config was resolved from, for re-resolution
  // with more overrides (sweeps, repeats).
  std::vector<ConfigEntry> entries;

  bool check_consensus_bound() const;
};

// Applies defaults, checks types and cross-field constraints, builds the
// topology to resolve the default consensus step size. Throws ConfigError.
RunConfig resolve_config(std::vector<ConfigEntry> entries);

RunConfig load_config_text(std::string_view text,
                           const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides = {});

// Returns `base` re-resolved with extra entries appended (later wins).
RunConfig with_overrides(const RunConfig& base,
                         const std::vector<ConfigEntry>& overrides);

// Round-trippable text form with provenance comments.
std::string serialize_config(const RunConfig& config);

// Closest known key, used in unknown-key diagnostics.
std::optional<std::string> suggest_key(std::string_view unknown);

}  // namespace pdsgdm::runner

#endif  // PDSGDM_CONFIG_HPP_
