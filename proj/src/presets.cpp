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
#include "pdsgdm/presets.hpp"

#include <algorithm>

namespace pdsgdm::runner {

const std::vector<Preset>& presets() {
  static const std::vector<Preset> table = {
      {"fig12-convergence",
       "convergence vs iterations: pd_sgdm p in {4,8,16} against c_sgdm, "
       "quadratic d=50 on a ring of 8, mildly non-iid",
       R"(seed = 0
record_stride = 50
[topology]
kind = ring
workers = 8
[problem]
kind = quadratic
dim = 50
samples_per_worker = 500
heterogeneity = 0.1
batch_size = 4
[optim]
method = pd_sgdm
eta = 0.002
mu = 0.9
iterations = 5000
[diagnostics]
threshold_suboptimality = 0.01
)",
       "optim.method | optim.period = c_sgdm|1, pd_sgdm|4, pd_sgdm|8, pd_sgdm|16\n",
       5},
      {"fig3-compressed",
       "compressed vs full precision: pd_sgdm p=16 against cpd_sgdm "
       "p in {4,8,16} with scaled_sign",
       R"(seed = 0
record_stride = 50
[topology]
kind = ring
workers = 8
[problem]
kind = quadratic
dim = 50
samples_per_worker = 500
heterogeneity = 0.1
batch_size = 4
[optim]
method = pd_sgdm
eta = 0.002
mu = 0.9
iterations = 5000
[diagnostics]
threshold_suboptimality = 0.01
)",
       "optim.method | optim.period | compression.kind = pd_sgdm|16|, "
       "cpd_sgdm|4|scaled_sign, cpd_sgdm|8|scaled_sign, cpd_sgdm|16|scaled_sign\n",
       5},
      {"comm-bits",
       "accuracy vs communication bits: logistic regression, pd_sgdm and "
       "cpd_sgdm over p in {4,8,16}",
       R"(seed = 0
record_stride = 20
[topology]
kind = ring
workers = 8
[problem]
kind = logistic
dim = 20
samples_per_worker = 256
heterogeneity = 0.5
batch_size = 8
holdout_fraction = 0.2
[optim]
method = pd_sgdm
eta = 0.05
mu = 0.9
iterations = 2000
[diagnostics]
threshold_grad_norm_sq = 1e-3
)",
       "optim.period = 4, 8, 16\n"
       "optim.method | compression.kind = pd_sgdm|, cpd_sgdm|scaled_sign\n",
       3},
      {"speedup",
       "linear speedup: iid logistic regression, K in {1,2,4,8} with eta "
       "scaled by sqrt(K)",
       R"(seed = 0
[topology]
kind = complete
workers = 1
[problem]
kind = logistic
dim = 10
samples_per_worker = 512
heterogeneity = 0
batch_size = 1
[optim]
method = pd_sgdm
mu = 0.9
period = 4
iterations = 3000
[diagnostics]
threshold_grad_norm_sq = 1e-3
)",
       "topology.workers | optim.eta = 1|0.005, 2|0.0070710678118654755, "
       "4|0.01, 8|0.014142135623730951\n",
       5},
  };
  return table;
}

const Preset* find_preset(std::string_view name) {
  const auto& table = presets();
  const auto it = std::find_if(table.begin(), table.end(),
                               [name](const Preset& p) { return p.name == name; });
  return it == table.end() ? nullptr : &*it;
}

}  // namespace pdsgdm::runner
