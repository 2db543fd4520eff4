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
#include "pdsgdm/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pdsgdm/diagnostics.hpp"

namespace pdsgdm::runner {
namespace {

struct KeySpec {
  const char* key;
  const char* fallback;  // nullptr: no default (key optional or computed)
};

// Serialisation order follows this table.
const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> table = {
      {"seed", "0"},
      {"output_dir", nullptr},
      {"record_stride", "1"},
      {"repeats", "1"},
      {"topology.kind", "ring"},
      {"topology.workers", "8"},
      {"topology.custom_path", nullptr},
      {"problem.kind", "quadratic"},
      {"problem.dim", "10"},
      {"problem.samples_per_worker", "64"},
      {"problem.heterogeneity", "0"},
      {"problem.batch_size", "8"},
      {"problem.seed", nullptr},
      {"problem.regularization", "0.01"},
      {"problem.hidden", "8"},
      {"problem.noise", "0.5"},
      {"problem.holdout_fraction", "0"},
      {"problem.shared_dataset", "false"},
      {"optim.method", "pd_sgdm"},
      {"optim.eta", "0.01"},
      {"optim.mu", "0.9"},
      {"optim.period", "4"},
      {"optim.gamma", nullptr},
      {"optim.iterations", "1000"},
      {"optim.strict", "false"},
      {"optim.lr_decay.factor", "0.1"},
      {"optim.lr_decay.milestones", ""},
      {"compression.kind", nullptr},
      {"compression.k", nullptr},
      {"diagnostics.consensus_bound", "auto"},
      {"diagnostics.bound_slack", "0.05"},
      {"diagnostics.threshold_grad_norm_sq", nullptr},
      {"diagnostics.threshold_suboptimality", nullptr},
  };
  return table;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string unquote(std::string v) {
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') ||
                        (v.front() == '\'' && v.back() == '\''))) {
    return v.substr(1, v.size() - 2);
  }
  return v;
}

// Strips a trailing comment that is not inside quotes.
std::string strip_comment(const std::string& line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#' || c == ';') {
      return line.substr(0, i);
    }
  }
  return line;
}

bool valid_key(const std::string& key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') return false;
  return std::all_of(key.begin(), key.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
  });
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                         prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

class Resolver {
 public:
  explicit Resolver(std::vector<ConfigEntry> entries) {
    for (ConfigEntry& e : entries) {
      const bool known = std::any_of(
          schema().begin(), schema().end(),
          [&e](const KeySpec& s) { return e.key == s.key; });
      if (!known) {
        std::string msg = "unknown key '" + e.key + "'";
        if (auto hint = suggest_key(e.key)) {
          msg += " (did you mean '" + *hint + "'?)";
        }
        throw ConfigError(where(e) + msg, e.key, e.line);
      }
      lines_[e.key] = e.line;
      const bool optional = std::any_of(
          schema().begin(), schema().end(), [&e](const KeySpec& s) {
            return e.key == s.key && s.fallback == nullptr;
          });
      if (e.value.empty() && optional) {
        values_.erase(e.key);  // an empty value unsets an optional key
      } else {
        values_[e.key] = {e.value, e.source};
      }
    }
    config_.entries = std::move(entries);
  }

  RunConfig resolve();

 private:
  std::string where(const ConfigEntry& e) const {
    return e.line > 0 ? "line " + std::to_string(e.line) + ": " : "";
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const auto it = lines_.find(key);
    const int line = it == lines_.end() ? 0 : it->second;
    std::string prefix = line > 0 ? "line " + std::to_string(line) + ": " : "";
    throw ConfigError(prefix + key + ": " + what, key, line);
  }

  bool explicit_value(const std::string& key) const {
    return values_.count(key) > 0;
  }

  // Fills the default when the key was not given; returns nullopt for
  // optional keys without a default.
  std::optional<std::string> get(const std::string& key) {
    if (auto it = values_.find(key); it != values_.end()) {
      config_.settings[key] = it->second;
      return it->second.value;
    }
    for (const KeySpec& s : schema()) {
      if (key == s.key && s.fallback != nullptr) {
        config_.settings[key] = {s.fallback, Provenance::kDefault};
        return std::string(s.fallback);
      }
    }
    return std::nullopt;
  }

  void set_default(const std::string& key, std::string value,
                   Provenance p = Provenance::kDefault) {
    values_.emplace(key, Setting{std::move(value), p});
  }

  std::string get_string(const std::string& key) { return get(key).value_or(""); }

  long long get_int(const std::string& key) {
    return parse_int(key, get(key).value());
  }

  long long parse_int(const std::string& key, const std::string& text) const {
    long long v = 0;
    const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size()) {
      fail(key, "expected an integer, got '" + text + "'");
    }
    return v;
  }

  double parse_real(const std::string& key, const std::string& text) const {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
      fail(key, "expected a finite number, got '" + text + "'");
    }
    return v;
  }

  double get_real(const std::string& key) {
    return parse_real(key, get(key).value());
  }

  std::optional<double> get_optional_real(const std::string& key) {
    auto v = get(key);
    if (!v) return std::nullopt;
    return parse_real(key, *v);
  }

  bool get_bool(const std::string& key) {
    std::string v = get(key).value();
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    fail(key, "expected true or false, got '" + v + "'");
  }

  void require(bool ok, const std::string& key, const std::string& what) const {
    if (!ok) fail(key, what);
  }

  template <typename Fn>
  auto guarded(const std::string& key, Fn&& fn) -> decltype(fn()) {
    try {
      return fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      fail(key, e.what());
    }
  }

  std::map<std::string, Setting> values_;
  std::map<std::string, int> lines_;
  RunConfig config_;
};

RunConfig Resolver::resolve() {
  RunConfig& c = config_;

  // Top level.
  const long long seed = get_int("seed");
  require(seed >= 0, "seed", "seed must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);
  if (!explicit_value("output_dir")) {
    const char* env = std::getenv("PDSGDM_OUTPUT_ROOT");
    set_default("output_dir", env && *env ? env : "runs");
  }
  c.output_dir = get_string("output_dir");
  c.record_stride = static_cast<int>(get_int("record_stride"));
  require(c.record_stride >= 1, "record_stride", "record_stride must be >= 1");
  c.repeats = static_cast<int>(get_int("repeats"));
  require(c.repeats >= 1, "repeats", "repeats must be >= 1");

  // Optimizer (method first: it changes defaults of mu and period).
  c.optim.method =
      guarded("optim.method", [&] { return optim::parse_method(get_string("optim.method")); });
  if (c.optim.method == optim::Method::kDSgd ||
      c.optim.method == optim::Method::kPdSgd) {
    set_default("optim.mu", "0");
  }
  if (c.optim.method == optim::Method::kDSgd) set_default("optim.period", "1");
  c.optim.eta = get_real("optim.eta");
  require(c.optim.eta > 0.0, "optim.eta", "eta must be > 0");
  c.optim.mu = get_real("optim.mu");
  require(c.optim.mu >= 0.0, "optim.mu", "mu must be >= 0");
  require(c.optim.mu < 1.0, "optim.mu", "mu must be < 1");
  const long long period = get_int("optim.period");
  require(period >= 1, "optim.period", "period must be >= 1");
  c.optim.period = static_cast<int>(period);
  c.optim.iterations = get_int("optim.iterations");
  require(c.optim.iterations >= 0, "optim.iterations",
          "iterations must be >= 0");
  c.optim.strict = get_bool("optim.strict");
  c.optim.lr_decay.factor = get_real("optim.lr_decay.factor");
  require(c.optim.lr_decay.factor > 0.0, "optim.lr_decay.factor",
          "factor must be > 0");
  {
    std::string list = get_string("optim.lr_decay.milestones");
    list.erase(std::remove(list.begin(), list.end(), '['), list.end());
    list.erase(std::remove(list.begin(), list.end(), ']'), list.end());
    std::stringstream in(list);
    std::string item;
    while (std::getline(in, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      c.optim.lr_decay.milestones.push_back(
          parse_int("optim.lr_decay.milestones", item));
    }
  }
  c.optim.gamma = get_optional_real("optim.gamma");
  guarded("optim.method", [&] {
    c.optim.validate();
    return 0;
  });

  // Compression.
  if (auto kind = get("compression.kind")) {
    c.compression_kind = guarded("compression.kind",
                                 [&] { return compression::parse_kind(*kind); });
  }
  if (auto k = get("compression.k")) {
    c.compression_k = static_cast<int>(parse_int("compression.k", *k));
  }
  if (c.optim.method == optim::Method::kCpdSgdm) {
    require(c.compression_kind.has_value(), "compression.kind",
            "cpd_sgdm requires a compression section (compression.kind)");
  } else if (c.compression_kind &&
             *c.compression_kind != compression::Kind::kIdentity) {
    fail("compression.kind", "compression is only used by cpd_sgdm");
  }
  if (c.compression_kind && (*c.compression_kind == compression::Kind::kTopK ||
                             *c.compression_kind == compression::Kind::kRandomK)) {
    require(explicit_value("compression.k"), "compression.k",
            "top_k and random_k require compression.k");
  }
  if (c.optim.gamma) {
    require(c.optim.method == optim::Method::kCpdSgdm, "optim.gamma",
            "gamma is only used by cpd_sgdm");
  }

  // Problem.
  c.problem.kind = guarded("problem.kind", [&] {
    return problems::parse_kind(get_string("problem.kind"));
  });
  c.problem.dim = static_cast<int>(get_int("problem.dim"));
  require(c.problem.dim >= 1, "problem.dim", "dim must be >= 1");
  c.problem.samples_per_worker =
      static_cast<int>(get_int("problem.samples_per_worker"));
  require(c.problem.samples_per_worker >= 1, "problem.samples_per_worker",
          "samples_per_worker must be >= 1");
  c.problem.heterogeneity = get_real("problem.heterogeneity");
  require(c.problem.heterogeneity >= 0.0 && c.problem.heterogeneity <= 1.0,
          "problem.heterogeneity", "heterogeneity must lie in [0, 1]");
  c.batch_size = static_cast<int>(get_int("problem.batch_size"));
  require(c.batch_size >= 1, "problem.batch_size", "batch_size must be >= 1");
  set_default("problem.seed", std::to_string(c.seed), Provenance::kComputed);
  const long long problem_seed = get_int("problem.seed");
  require(problem_seed >= 0, "problem.seed", "seed must be >= 0");
  c.problem.seed = static_cast<std::uint64_t>(problem_seed);
  c.problem.regularization = get_real("problem.regularization");
  require(c.problem.regularization >= 0.0, "problem.regularization",
          "regularization must be >= 0");
  c.problem.hidden = static_cast<int>(get_int("problem.hidden"));
  require(c.problem.hidden >= 1, "problem.hidden", "hidden must be >= 1");
  c.problem.noise = get_real("problem.noise");
  require(c.problem.noise >= 0.0, "problem.noise", "noise must be >= 0");
  c.problem.holdout_fraction = get_real("problem.holdout_fraction");
  require(c.problem.holdout_fraction >= 0.0 && c.problem.holdout_fraction < 1.0,
          "problem.holdout_fraction", "holdout_fraction must lie in [0, 1)");
  if (c.problem.holdout_fraction > 0.0) {
    require(c.problem.kind != problems::Kind::kQuadratic,
            "problem.holdout_fraction",
            "holdout is only available for logistic and mlp problems");
  }
  c.problem.shared_dataset = get_bool("problem.shared_dataset");

  // Topology.
  c.topology_kind = guarded("topology.kind", [&] {
    return topology::parse_kind(get_string("topology.kind"));
  });
  if (auto path = get("topology.custom_path")) c.custom_path = *path;
  std::optional<topology::MixingMatrix> mixing;
  if (c.topology_kind == topology::Kind::kCustom) {
    require(!c.custom_path.empty(), "topology.custom_path",
            "topology.kind = custom requires topology.custom_path");
    mixing = guarded("topology.custom_path", [&] {
      return topology::load_mixing_matrix(c.custom_path);
    });
    if (explicit_value("topology.workers")) {
      require(get_int("topology.workers") == mixing->workers(),
              "topology.workers", "does not match the custom matrix size");
    }
    set_default("topology.workers", std::to_string(mixing->workers()),
                Provenance::kComputed);
  } else {
    require(c.custom_path.empty(), "topology.custom_path",
            "custom_path requires topology.kind = custom");
  }
  const long long workers = get_int("topology.workers");
  require(workers >= 1, "topology.workers", "workers must be >= 1");
  c.workers = static_cast<int>(workers);
  c.problem.workers = c.workers;
  if (!mixing) {
    mixing = guarded("topology.workers", [&] {
      return topology::build_topology(c.topology_kind, c.workers);
    });
  }

  // Problem-dependent checks that need the model dimension.
  int model_dim = c.problem.dim;
  if (c.problem.kind == problems::Kind::kMlp) {
    model_dim = c.problem.hidden * c.problem.dim + 2 * c.problem.hidden + 1;
  }
  if (c.compression_kind) {
    const compression::CompressorSpec spec = guarded("compression.k", [&] {
      return compression::CompressorSpec(*c.compression_kind, model_dim,
                                         c.compression_k);
    });
    if (c.optim.method == optim::Method::kCpdSgdm && !c.optim.gamma) {
      const double gamma =
          guarded("optim.gamma", [&] {
            return optim::default_gamma(mixing->rho(), spec.delta_bound(),
                                        mixing->beta());
          }).gamma;
      c.settings["optim.gamma"] = {diagnostics::format_double(gamma),
                                   Provenance::kComputed};
      c.optim.gamma = gamma;
    }
  }

  // Diagnostics.
  {
    const std::string mode = get_string("diagnostics.consensus_bound");
    if (mode == "auto") {
      c.consensus_bound = BoundMode::kAuto;
    } else if (mode == "on") {
      c.consensus_bound = BoundMode::kOn;
    } else if (mode == "off") {
      c.consensus_bound = BoundMode::kOff;
    } else {
      fail("diagnostics.consensus_bound", "expected auto, on or off");
    }
  }
  c.bound_slack = get_real("diagnostics.bound_slack");
  require(c.bound_slack >= 0.0, "diagnostics.bound_slack",
          "bound_slack must be >= 0");
  c.threshold_grad_norm_sq =
      get_optional_real("diagnostics.threshold_grad_norm_sq");
  c.threshold_suboptimality =
      get_optional_real("diagnostics.threshold_suboptimality");
  return std::move(c);
}

}  // namespace

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kDefault:
      return "default";
    case Provenance::kConfig:
      return "config";
    case Provenance::kOverride:
      return "override";
    case Provenance::kComputed:
      return "computed";
  }
  return "unknown";
}

std::vector<ConfigEntry> parse_config_text(std::string_view text) {
  std::vector<ConfigEntry> entries;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("line " + std::to_string(line_no) +
                              ": unterminated section header",
                          "", line_no);
      }
      section = trim(line.substr(1, line.size() - 2));
      if (!section.empty() && !valid_key(section)) {
        throw ConfigError("line " + std::to_string(line_no) +
                              ": invalid section name '" + section + "'",
                          "", line_no);
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) +
                            ": expected 'key = value'",
                        "", line_no);
    }
    const std::string key = trim(line.substr(0, eq));
    if (!valid_key(key)) {
      throw ConfigError("line " + std::to_string(line_no) + ": invalid key '" +
                            key + "'",
                        key, line_no);
    }
    ConfigEntry e;
    e.key = section.empty() ? key : section + "." + key;
    e.value = unquote(trim(line.substr(eq + 1)));
    e.line = line_no;
    e.source = Provenance::kConfig;
    entries.push_back(std::move(e));
  }
  return entries;
}

ConfigEntry parse_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) +
                      "' must have the form key=value");
  }
  ConfigEntry e;
  e.key = trim(assignment.substr(0, eq));
  e.value = unquote(trim(assignment.substr(eq + 1)));
  e.source = Provenance::kOverride;
  if (!valid_key(e.key)) {
    throw ConfigError("override has an invalid key '" + e.key + "'", e.key);
  }
  return e;
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const KeySpec& s : schema()) out.emplace_back(s.key);
    return out;
  }();
  return keys;
}

std::optional<std::string> suggest_key(std::string_view unknown) {
  static const std::map<std::string, std::string> synonyms = {
      {"learning_rate", "eta"}, {"lr", "eta"},          {"step_size", "eta"},
      {"momentum", "mu"},       {"p", "period"},        {"comm_period", "period"},
      {"T", "iterations"},      {"steps", "iterations"}, {"iters", "iterations"},
      {"K", "workers"},         {"nodes", "workers"},   {"d", "dim"},
      {"dimension", "dim"},     {"batch", "batch_size"}, {"compressor", "kind"},
  };
  const std::string key(unknown);
  const auto dot = key.rfind('.');
  const std::string section = dot == std::string::npos ? "" : key.substr(0, dot);
  const std::string leaf = dot == std::string::npos ? key : key.substr(dot + 1);
  if (auto it = synonyms.find(leaf); it != synonyms.end()) {
    const std::string candidate =
        section.empty() ? it->second : section + "." + it->second;
    if (std::find(known_keys().begin(), known_keys().end(), candidate) !=
        known_keys().end()) {
      return candidate;
    }
  }
  std::optional<std::string> best;
  std::size_t best_distance = 4;  // suggest only close matches
  for (const std::string& k : known_keys()) {
    const std::size_t d = edit_distance(key, k);
    if (d < best_distance) {
      best_distance = d;
      best = k;
    }
  }
  return best;
}

bool RunConfig::check_consensus_bound() const {
  switch (consensus_bound) {
    case BoundMode::kOn:
      return true;
    case BoundMode::kOff:
      return false;
    case BoundMode::kAuto:
      return problem.kind == problems::Kind::kLogistic;
  }
  return false;
}

RunConfig resolve_config(std::vector<ConfigEntry> entries) {
  Resolver resolver(std::move(entries));
  return resolver.resolve();
}

RunConfig load_config_text(std::string_view text,
                           const std::vector<std::string>& overrides) {
  std::vector<ConfigEntry> entries = parse_config_text(text);
  for (const std::string& o : overrides) entries.push_back(parse_override(o));
  return resolve_config(std::move(entries));
}

RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_config_text(buffer.str(), overrides);
}

RunConfig with_overrides(const RunConfig& base,
                         const std::vector<ConfigEntry>& overrides) {
  std::vector<ConfigEntry> entries = base.entries;
  entries.insert(entries.end(), overrides.begin(), overrides.end());
  return resolve_config(std::move(entries));
}

std::string serialize_config(const RunConfig& config) {
  std::ostringstream out;
  out << "# resolved configuration; comments give the provenance of each value\n";
  std::string section;
  for (const std::string& key : known_keys()) {
    const auto it = config.settings.find(key);
    if (it == config.settings.end()) continue;
    const auto dot = key.find('.');
    const std::string key_section = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string leaf = dot == std::string::npos ? key : key.substr(dot + 1);
    if (key_section != section) {
      out << "\n[" << key_section << "]\n";
      section = key_section;
    }
    out << leaf << " = \"" << it->second.value << "\"  # "
        << to_string(it->second.provenance) << '\n';
  }
  return out.str();
}

}  // namespace pdsgdm::runner
