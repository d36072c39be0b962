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
#include <complex>
#include <vector>

namespace cellfree {

// Per-UE sample streams travelling on the shared stripe bus.
struct StreamFrame {
  Eigen::VectorXcd streams;
};

// Local state of one antenna processing unit: its channel estimates and
// downlink weights for every stream it serves.
struct ApuState {
  int apu_index = 0;
  Eigen::VectorXcd g_hat;
  Eigen::VectorXd sqrt_rho;
};

// Downlink: superimpose the precoded streams into one transmit sample,
// sum_k sqrt_rho_k * conj(g_hat_k) * q_k.
std::complex<double> dl_transmit(const ApuState& apu, const StreamFrame& frame);

// Uplink: add the locally combined receive sample into each stream,
// out_k = upstream_k + conj(g_hat_k) * received.
StreamFrame ul_accumulate(const ApuState& apu, std::complex<double> received,
                          const StreamFrame& upstream);

struct FronthaulReport {
  int max_streams = 0;
  double bits_per_second = 0.0;
};

// Bus capacity needed: peak simultaneous streams times the per-stream sample
// rate (default 2 x 16-bit words per complex sample).
FronthaulReport fronthaul_requirement(const std::vector<int>& active_streams_per_frame,
                                      double bandwidth_hz, int bits_per_complex_sample = 32);

// Streams a stripe segment must carry given the per-UE serving subsets and a
// partition of the APs into segments.
std::vector<int> segment_stream_counts(const std::vector<std::vector<int>>& subsets,
                                       const std::vector<std::vector<int>>& segments);

}  // namespace cellfree
