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
#include <vector>

#include "cellfree/power_control.hpp"

namespace cellfree {

struct SEResult {
  Eigen::VectorXd per_user_se;  // bit/s/Hz
  std::string policy;
  int drop = 0;
};

// SE_k = prelog * log2(1 + SINR_k) from the closed-form SINR.
SEResult se_closed_form(const PowerAllocation& alloc, const EstimateQuality& quality,
                        const LargeScaleMatrix& ls, const PilotAssignment& pilots, double rho_d,
                        const FrameConfig& frame);

struct MonteCarloOptions {
  bool perfect_csi = false;  // bypass the pilot phase, ghat = g
};

// Independent fading-level oracle: simulates uplink training, MMSE
// estimation and maximum-ratio downlink transmission, then evaluates the
// use-and-forget bound with the mean effective gain taken over the ensemble.
SEResult se_monte_carlo(const PowerAllocation& alloc, const LargeScaleMatrix& ls,
                        const PilotAssignment& pilots, const FrameConfig& frame, double rho_d,
                        double rho_p, int draws, std::uint64_t rng_seed,
                        const MonteCarloOptions& options = {});

// Empirical distribution summary with lower-interpolation percentiles:
// percentile(p) returns the smallest sample v with P(X <= v) >= p/100.
class CdfSummary {
 public:
  explicit CdfSummary(std::vector<double> samples);  // throws if empty

  double percentile(double p) const;  // p in [0, 100]
  double likely95() const;            // 5th percentile; requires >= 20 samples
  double min() const { return sorted_.front(); }
  double max() const { return sorted_.back(); }
  const std::vector<double>& sorted() const { return sorted_; }
  std::size_t size() const { return sorted_.size(); }

  void write_csv(const std::string& path) const;  // value,cumulative_probability

 private:
  std::vector<double> sorted_;
};

enum class GainMode { cellfree, cellular };

// Channel gain per UE in dB: ||h||^2 when every AP serves the UE, or
// max_l |h_l|^2 when only the strongest single AP does.
CdfSummary channel_gain_stats(const std::vector<Eigen::VectorXcd>& per_ue_channels, GainMode mode);

// |h1^H h2|^2 / (||h1||^2 ||h2||^2), in [0, 1]. Throws on zero vectors.
double orthogonality(const Eigen::VectorXcd& h1, const Eigen::VectorXcd& h2);

}  // namespace cellfree
