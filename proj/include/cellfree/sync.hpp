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

#include <array>
#include <cstdint>
#include <vector>

#include "cellfree/rng.hpp"

namespace cellfree {

// Unknown transmit and receive chain biases of one AP, in seconds.
struct ClockBias {
  double t = 0.0;
  double r = 0.0;
};

// Round of pulse exchanges within a group of three APs:
// delta[i][j] = t_i - r_j for i != j. The diagonal is never measured; only
// bias differences are observable, so shifting every t and r by a common
// constant leaves the matrix unchanged.
struct TimestampMatrix {
  std::array<std::array<double, 3>, 3> delta{};
};

struct CalibrationResult {
  std::array<double, 3> reciprocity{};  // t_i - r_i per AP
  double t12 = 0.0;                     // t_1 - t_2
  double t13 = 0.0;                     // t_1 - t_3
  double t23 = 0.0;                     // t_2 - t_3
};

TimestampMatrix measure_round(const std::array<ClockBias, 3>& group);

// Adds i.i.d. N(0, sigma^2) measurement noise to each off-diagonal entry.
TimestampMatrix measure_round(const std::array<ClockBias, 3>& group, double sigma_s, Rng& rng);

// Optional propagation compensation: subtracts d_ij / c from each entry
// given pairwise distances in meters.
TimestampMatrix compensate_propagation(const TimestampMatrix& m,
                                       const std::array<std::array<double, 3>, 3>& dist_m);

// Closed-form recovery of reciprocity and sync differences:
//   t1-r1 = d12 + d31 - d32     t1-t2 = d13 - d23
//   t2-r2 = d21 + d32 - d31     t1-t3 = d12 - d32
//   t3-r3 = d31 + d23 - d21     t2-t3 = d21 - d31
CalibrationResult recover(const TimestampMatrix& m);

// Drift between two rounds: recover(second - first), element-wise. Uniform
// drift common to every clock cancels exactly.
CalibrationResult differential(const TimestampMatrix& first, const TimestampMatrix& second);

// One cross-group pulse measurement: transmitter tx_index in its own group,
// received by AP receiver_index of group B.
struct IntergroupSample {
  int tx_index = 0;
  int receiver_index = 0;
  double delta = 0.0;
};

// t_i^A - t_j^B = delta^{A,B}_{i,k} - delta^{B,B}_{j,k}; both samples must
// use the same receiving AP k of group B.
double intergroup_offset(const IntergroupSample& ab, const IntergroupSample& bb);

// Transmit offsets of every AP relative to AP 0 of group 0, composed
// left-to-right along the stripe.
struct ChainResult {
  std::vector<std::array<double, 3>> tx_offset;
};

ChainResult calibrate_chain(const std::vector<std::array<ClockBias, 3>>& groups,
                            double sigma_s = 0.0, std::uint64_t rng_seed = 0);

// Consecutive groups of three; when the AP count is not a multiple of three
// the final group is the last three APs, overlapping its predecessor.
std::vector<std::array<int, 3>> partition_stripe(int num_aps);

}  // namespace cellfree
