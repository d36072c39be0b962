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

namespace cellfree {

// TDD frame bookkeeping, in samples per coherence interval.
struct FrameConfig {
  int tau = 200;     // coherence interval length
  int tau_up = 20;   // uplink pilots
  int tau_ud = 0;    // uplink data
  int tau_dp = 0;    // downlink pilots
  int tau_dd = 180;  // downlink data
  void validate() const;
};

// Payload fraction left after uplink training: 1 - tau_up / tau.
double prelog(const FrameConfig& frame);

enum class Deployment { grid, perimeter };
enum class PathLossModel { one_slope, three_slope };

struct OneSlopeParams {
  double d0_m = 15.0;
  double pl_d0_db = 70.28;
  double exponent_n = 2.59;
  double shadow_sigma_db = 6.09;
};

// Piecewise model with exponents 3.5 / 2 / flat below d0. Distances in
// meters; l_const_db is referenced to log10(d / 1 m). Shadowing applies only
// beyond d1.
struct ThreeSlopeParams {
  double d0_m = 10.0;
  double d1_m = 50.0;
  double l_const_db = 35.715;  // overwritten by hata_cost231_db() in presets
  double shadow_sigma_db = 8.0;
};

struct PathLossParams {
  PathLossModel model = PathLossModel::one_slope;
  OneSlopeParams one_slope;
  ThreeSlopeParams three_slope;
  void validate() const;
};

// Full description of one deployment. Serializable to/from JSON so campaign
// outputs can echo the exact configuration they were produced with.
struct ScenarioConfig {
  double area_width_m = 100.0;
  double area_height_m = 100.0;
  Deployment deployment = Deployment::grid;
  int num_aps = 400;
  int num_ues = 20;
  double ap_height_m = 6.0;
  double ue_height_m = 2.0;
  bool wrap_around = true;
  double carrier_freq_hz = 5.2e9;
  double bandwidth_hz = 20.0e6;
  double max_ap_power_w = 0.2;
  double pilot_power_w = 0.1;
  double noise_figure_db = 9.0;
  PathLossParams pathloss;
  FrameConfig frame;

  void validate() const;

  double noise_power_w() const;
  double dl_snr() const;     // max_ap_power_w / noise_power_w
  double pilot_snr() const;  // pilot_power_w / noise_power_w

  std::string to_json() const;
  static ScenarioConfig from_json(const std::string& text);
  static ScenarioConfig from_json_file(const std::string& path);
  static ScenarioConfig preset(const std::string& name);  // "indoor", "piazza"
};

struct Layout {
  std::vector<Eigen::Vector3d> ap_positions;
  std::vector<Eigen::Vector3d> ue_positions;
};

// Deterministic AP placement. Grid: sqrt(L) x sqrt(L) lattice with spacing
// area_width / sqrt(L), first row/column offset by half a spacing. Perimeter:
// L/4 per side, equally spaced along the boundary.
std::vector<Eigen::Vector3d> place_aps(const ScenarioConfig& config);

// UEs drawn i.i.d. uniform over the area at ue_height_m.
std::vector<Eigen::Vector3d> place_ues(const ScenarioConfig& config, std::uint64_t rng_seed);

Layout make_layout(const ScenarioConfig& config, std::uint64_t ue_seed);

// 3D distance; the horizontal components use the torus metric when
// wrap_around is set.
double distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const ScenarioConfig& config);

// Hata-COST231 constant for the three-slope model, shifted so that distances
// enter in meters. freq in MHz, heights in meters.
double hata_cost231_db(double freq_mhz, double ap_height_m, double ue_height_m);

}  // namespace cellfree
