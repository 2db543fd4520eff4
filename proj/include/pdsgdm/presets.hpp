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
#ifndef PDSGDM_PRESETS_HPP_
#define PDSGDM_PRESETS_HPP_

#include <string>
#include <string_view>
#include <vector>

namespace pdsgdm::runner {

// A built-in sweep: base config text plus a grid, at desk scale.
struct Preset {
  std::string name;
  std::string description;
  std::string config_text;
  std::string grid_text;
  int repeats = 1;
};

const std::vector<Preset>& presets();
// nullptr when unknown.
const Preset* find_preset(std::string_view name);

}  // namespace pdsgdm::runner

#endif  // PDSGDM_PRESETS_HPP_
