// cellfree: system-level simulator for cell-free massive MIMO radio stripes
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "cellfree/pilots.hpp"
#include "cellfree/scenario.hpp"

namespace cellfree {

// Large-scale fading coefficients beta_lk, linear power gain. Rows index
// APs, columns index UEs.
struct LargeScaleMatrix {
  Eigen::MatrixXd beta;
};

// One Rayleigh fading draw g_lk = sqrt(beta_lk) * z, z ~ CN(0,1).
struct ChannelRealization {
  Eigen::MatrixXcd g;
};

// MMSE channel-estimate variance gamma_lk = E{|ghat_lk|^2}.
struct EstimateQuality {
  Eigen::MatrixXd gamma;
};

// Path loss in dB at a 3D distance, shadowing excluded. Distances below 1 m
// are clamped to 1 m.
double pathloss_db(const PathLossParams& params, double distance_m);

// beta_lk = 10^(-PL_dB/10) with lognormal shadowing. Shadowing draws are
// consumed UE-major (k outer, l inner) so results are reproducible for a
// given seed. The three-slope model applies shadowing only beyond d1.
LargeScaleMatrix large_scale(const Layout& layout, const ScenarioConfig& config,
                             std::uint64_t rng_seed);

ChannelRealization small_scale(const LargeScaleMatrix& ls, std::uint64_t rng_seed);

// gamma_lk = tau_up * rho_p * beta_lk^2 /
//            (tau_up * rho_p * sum_{k'} beta_lk' c(k,k') + 1).
EstimateQuality estimate_quality(const LargeScaleMatrix& ls, const PilotAssignment& pilots,
                                 const FrameConfig& frame, double pilot_snr);

// Debug export, row = AP index, column = UE index.
void write_beta_csv(const LargeScaleMatrix& ls, const std::string& path);

}  // namespace cellfree
