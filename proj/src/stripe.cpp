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

#include "cellfree/stripe.hpp"

#include <algorithm>
#include <stdexcept>

namespace cellfree {

std::complex<double> dl_transmit(const ApuState& apu, const StreamFrame& frame) {
  if (apu.g_hat.size() != frame.streams.size() || apu.g_hat.size() != apu.sqrt_rho.size())
    throw std::invalid_argument("dl_transmit: stream count mismatch");
  std::complex<double> sample(0.0, 0.0);
  for (Eigen::Index k = 0; k < frame.streams.size(); ++k)
    sample += apu.sqrt_rho[k] * std::conj(apu.g_hat[k]) * frame.streams[k];
  return sample;
}

StreamFrame ul_accumulate(const ApuState& apu, std::complex<double> received,
                          const StreamFrame& upstream) {
  if (apu.g_hat.size() != upstream.streams.size())
    throw std::invalid_argument("ul_accumulate: stream count mismatch");
  StreamFrame out = upstream;
  for (Eigen::Index k = 0; k < out.streams.size(); ++k)
    out.streams[k] += std::conj(apu.g_hat[k]) * received;
  return out;
}

FronthaulReport fronthaul_requirement(const std::vector<int>& active_streams_per_frame,
                                      double bandwidth_hz, int bits_per_complex_sample) {
  if (active_streams_per_frame.empty())
    throw std::invalid_argument("fronthaul_requirement: no frames");
  if (bandwidth_hz <= 0.0 || bits_per_complex_sample <= 0)
    throw std::invalid_argument("fronthaul_requirement: invalid rate parameters");
  FronthaulReport rep;
  rep.max_streams =
      *std::max_element(active_streams_per_frame.begin(), active_streams_per_frame.end());
  rep.bits_per_second = static_cast<double>(rep.max_streams) * bandwidth_hz *
                        static_cast<double>(bits_per_complex_sample);
  return rep;
}

std::vector<int> segment_stream_counts(const std::vector<std::vector<int>>& subsets,
                                       const std::vector<std::vector<int>>& segments) {
  std::vector<int> counts(segments.size(), 0);
  for (std::size_t s = 0; s < segments.size(); ++s) {
    for (const auto& subset : subsets) {
      const bool hit = std::any_of(subset.begin(), subset.end(), [&](int ap) {
        return std::find(segments[s].begin(), segments[s].end(), ap) != segments[s].end();
      });
      if (hit) ++counts[s];
    }
  }
  return counts;
}

}  // namespace cellfree
