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

#include "cellfree/sync.hpp"

#include <stdexcept>

namespace cellfree {

namespace {
constexpr double kSpeedOfLight = 299792458.0;
}

TimestampMatrix measure_round(const std::array<ClockBias, 3>& group) {
  TimestampMatrix m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) m.delta[i][j] = group[i].t - group[j].r;
  return m;
}

TimestampMatrix measure_round(const std::array<ClockBias, 3>& group, double sigma_s, Rng& rng) {
  TimestampMatrix m = measure_round(group);
  if (sigma_s < 0.0) throw std::invalid_argument("measure_round: negative noise level");
  if (sigma_s > 0.0)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j) m.delta[i][j] += sigma_s * rng.normal();
  return m;
}

TimestampMatrix compensate_propagation(const TimestampMatrix& m,
                                       const std::array<std::array<double, 3>, 3>& dist_m) {
  TimestampMatrix out = m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) out.delta[i][j] -= dist_m[i][j] / kSpeedOfLight;
  return out;
}

CalibrationResult recover(const TimestampMatrix& m) {
  const auto& d = m.delta;
  CalibrationResult r;
  r.reciprocity[0] = d[0][1] + d[2][0] - d[2][1];
  r.reciprocity[1] = d[1][0] + d[2][1] - d[2][0];
  r.reciprocity[2] = d[2][0] + d[1][2] - d[1][0];
  r.t12 = d[0][2] - d[1][2];
  r.t13 = d[0][1] - d[2][1];
  r.t23 = d[1][0] - d[2][0];
  return r;
}

CalibrationResult differential(const TimestampMatrix& first, const TimestampMatrix& second) {
  TimestampMatrix diff;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) diff.delta[i][j] = second.delta[i][j] - first.delta[i][j];
  return recover(diff);
}

double intergroup_offset(const IntergroupSample& ab, const IntergroupSample& bb) {
  if (ab.receiver_index != bb.receiver_index)
    throw std::invalid_argument("intergroup_offset: samples must share the receiving AP");
  if (bb.tx_index == bb.receiver_index)
    throw std::invalid_argument("intergroup_offset: in-group sample needs tx != receiver");
  return ab.delta - bb.delta;
}

ChainResult calibrate_chain(const std::vector<std::array<ClockBias, 3>>& groups, double sigma_s,
                            std::uint64_t rng_seed) {
  if (groups.empty()) throw std::invalid_argument("calibrate_chain: no groups");
  Rng rng(rng_seed);
  const bool noisy = sigma_s > 0.0;

  // All in-group rounds first, then the cross pulses in stripe order, so the
  // draw sequence is independent of how results are consumed.
  std::vector<TimestampMatrix> rounds(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g)
    rounds[g] = noisy ? measure_round(groups[g], sigma_s, rng) : measure_round(groups[g]);
  std::vector<double> cross(groups.size(), 0.0);
  for (std::size_t g = 1; g < groups.size(); ++g) {
    cross[g] = groups[g - 1][0].t - groups[g][1].r;
    if (noisy) cross[g] += sigma_s * rng.normal();
  }

  ChainResult result;
  result.tx_offset.resize(groups.size());
  double anchor = 0.0;  // estimate of t_0^{(g)} - t_0^{(0)}
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const CalibrationResult cal = recover(rounds[g]);
    if (g > 0) {
      const IntergroupSample ab{0, 1, cross[g]};
      const IntergroupSample bb{0, 1, rounds[g].delta[0][1]};
      // offset = t_0^{(g-1)} - t_0^{(g)}
      anchor -= intergroup_offset(ab, bb);
    }
    result.tx_offset[g] = {anchor, anchor - cal.t12, anchor - cal.t13};
  }
  return result;
}

std::vector<std::array<int, 3>> partition_stripe(int num_aps) {
  if (num_aps < 3) throw std::invalid_argument("partition_stripe: need at least 3 APs");
  std::vector<std::array<int, 3>> groups;
  int start = 0;
  while (start + 3 <= num_aps) {
    groups.push_back({start, start + 1, start + 2});
    start += 3;
  }
  if (start < num_aps) groups.push_back({num_aps - 3, num_aps - 2, num_aps - 1});
  return groups;
}

}  // namespace cellfree
