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

#include "cellfree/channel.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "cellfree/csv.hpp"
#include "cellfree/rng.hpp"

namespace cellfree {

double pathloss_db(const PathLossParams& params, double distance_m) {
  const double d = std::max(distance_m, 1.0);
  if (params.model == PathLossModel::one_slope) {
    const auto& p = params.one_slope;
    return p.pl_d0_db + 10.0 * p.exponent_n * std::log10(d / p.d0_m);
  }
  const auto& p = params.three_slope;
  if (d > p.d1_m) return p.l_const_db + 35.0 * std::log10(d);
  if (d > p.d0_m) return p.l_const_db + 15.0 * std::log10(p.d1_m) + 20.0 * std::log10(d);
  return p.l_const_db + 15.0 * std::log10(p.d1_m) + 20.0 * std::log10(p.d0_m);
}

LargeScaleMatrix large_scale(const Layout& layout, const ScenarioConfig& config,
                             std::uint64_t rng_seed) {
  const int num_aps = static_cast<int>(layout.ap_positions.size());
  const int num_ues = static_cast<int>(layout.ue_positions.size());
  if (num_aps == 0 || num_ues == 0)
    throw std::invalid_argument("large_scale: empty layout");

  Rng rng(rng_seed);
  LargeScaleMatrix out;
  out.beta.resize(num_aps, num_ues);
  const bool three = config.pathloss.model == PathLossModel::three_slope;
  const double sigma = three ? config.pathloss.three_slope.shadow_sigma_db
                             : config.pathloss.one_slope.shadow_sigma_db;
  for (int k = 0; k < num_ues; ++k) {
    for (int l = 0; l < num_aps; ++l) {
      const double d = distance(layout.ap_positions[l], layout.ue_positions[k], config);
      double pl = pathloss_db(config.pathloss, d);
      const double x = sigma * rng.normal();  // drawn unconditionally, fixed order
      if (!three || d > config.pathloss.three_slope.d1_m) pl += x;
      out.beta(l, k) = std::pow(10.0, -pl / 10.0);
    }
  }
  return out;
}

ChannelRealization small_scale(const LargeScaleMatrix& ls, std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  ChannelRealization out;
  out.g.resize(ls.beta.rows(), ls.beta.cols());
  for (Eigen::Index k = 0; k < ls.beta.cols(); ++k)
    for (Eigen::Index l = 0; l < ls.beta.rows(); ++l)
      out.g(l, k) = std::sqrt(ls.beta(l, k)) * rng.cnormal();
  return out;
}

EstimateQuality estimate_quality(const LargeScaleMatrix& ls, const PilotAssignment& pilots,
                                 const FrameConfig& frame, double pilot_snr) {
  pilots.validate();
  frame.validate();
  const Eigen::Index num_aps = ls.beta.rows();
  const Eigen::Index num_ues = ls.beta.cols();
  if (pilots.num_ues() != num_ues)
    throw std::invalid_argument("estimate_quality: pilot assignment size mismatch");
  if (pilot_snr <= 0.0) throw std::invalid_argument("estimate_quality: pilot_snr must be positive");

  const double tp = frame.tau_up * pilot_snr;
  // Contaminating beta sums share a value within each pilot group.
  Eigen::MatrixXd group_sum = Eigen::MatrixXd::Zero(num_aps, pilots.num_pilots);
  for (Eigen::Index k = 0; k < num_ues; ++k)
    group_sum.col(pilots.pilot_of[k]) += ls.beta.col(k);

  EstimateQuality out;
  out.gamma.resize(num_aps, num_ues);
  for (Eigen::Index k = 0; k < num_ues; ++k) {
    const auto denom = (tp * group_sum.col(pilots.pilot_of[k])).array() + 1.0;
    out.gamma.col(k) = (tp * ls.beta.col(k).array().square() / denom).matrix();
  }
  return out;
}

void write_beta_csv(const LargeScaleMatrix& ls, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (Eigen::Index l = 0; l < ls.beta.rows(); ++l) {
    for (Eigen::Index k = 0; k < ls.beta.cols(); ++k) {
      if (k > 0) out << ',';
      out << fmt_double(ls.beta(l, k));
    }
    out << '\n';
  }
}

}  // namespace cellfree
