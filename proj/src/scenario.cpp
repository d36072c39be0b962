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

#include "cellfree/scenario.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cellfree/rng.hpp"

namespace cellfree {

using nlohmann::json;

void FrameConfig::validate() const {
  if (tau <= 0) throw std::invalid_argument("FrameConfig: tau must be positive");
  if (tau_up < 0 || tau_ud < 0 || tau_dp < 0 || tau_dd < 0)
    throw std::invalid_argument("FrameConfig: negative segment length");
  if (tau_up + tau_ud + tau_dp + tau_dd != tau)
    throw std::invalid_argument("FrameConfig: segments must sum to tau");
  if (tau_up == 0) throw std::invalid_argument("FrameConfig: tau_up must be positive");
}

// Guards only what the ratio needs, so frame limits (tau_up = 0 or
// tau_up = tau) stay evaluable even though full configs require tau_up >= 1.
double prelog(const FrameConfig& frame) {
  if (frame.tau <= 0) throw std::invalid_argument("prelog: tau must be positive");
  if (frame.tau_up < 0 || frame.tau_up > frame.tau)
    throw std::invalid_argument("prelog: tau_up outside [0, tau]");
  return 1.0 - static_cast<double>(frame.tau_up) / static_cast<double>(frame.tau);
}

void PathLossParams::validate() const {
  if (model == PathLossModel::one_slope) {
    if (one_slope.d0_m <= 0.0) throw std::invalid_argument("one_slope: d0 must be positive");
    if (one_slope.shadow_sigma_db < 0.0)
      throw std::invalid_argument("one_slope: negative shadow sigma");
  } else {
    if (three_slope.d0_m <= 0.0 || three_slope.d1_m <= three_slope.d0_m)
      throw std::invalid_argument("three_slope: require 0 < d0 < d1");
    if (three_slope.shadow_sigma_db < 0.0)
      throw std::invalid_argument("three_slope: negative shadow sigma");
  }
}

void ScenarioConfig::validate() const {
  if (area_width_m < 0.0 || area_height_m < 0.0)
    throw std::invalid_argument("ScenarioConfig: negative area");
  if (num_aps <= 0 || num_ues <= 0)
    throw std::invalid_argument("ScenarioConfig: need at least one AP and one UE");
  if (deployment == Deployment::grid) {
    const int side = static_cast<int>(std::llround(std::sqrt(static_cast<double>(num_aps))));
    if (side * side != num_aps)
      throw std::invalid_argument("ScenarioConfig: grid deployment needs a square AP count");
  } else {
    if (num_aps % 4 != 0)
      throw std::invalid_argument("ScenarioConfig: perimeter deployment needs num_aps % 4 == 0");
  }
  if (ap_height_m < 0.0 || ue_height_m < 0.0)
    throw std::invalid_argument("ScenarioConfig: negative height");
  if (carrier_freq_hz <= 0.0 || bandwidth_hz <= 0.0)
    throw std::invalid_argument("ScenarioConfig: carrier and bandwidth must be positive");
  if (max_ap_power_w <= 0.0 || pilot_power_w <= 0.0)
    throw std::invalid_argument("ScenarioConfig: transmit powers must be positive");
  pathloss.validate();
  frame.validate();
}

double ScenarioConfig::noise_power_w() const {
  const double dbm = -174.0 + 10.0 * std::log10(bandwidth_hz) + noise_figure_db;
  return std::pow(10.0, (dbm - 30.0) / 10.0);
}

double ScenarioConfig::dl_snr() const { return max_ap_power_w / noise_power_w(); }

double ScenarioConfig::pilot_snr() const { return pilot_power_w / noise_power_w(); }

double hata_cost231_db(double freq_mhz, double ap_height_m, double ue_height_m) {
  const double lf = std::log10(freq_mhz);
  const double l_km = 46.3 + 33.9 * lf - 13.82 * std::log10(ap_height_m) -
                      (1.1 * lf - 0.7) * ue_height_m + (1.56 * lf - 0.8);
  // Shift from the kilometer reference of the classical form to meters.
  return l_km - 105.0;
}

namespace {

std::string deployment_name(Deployment d) {
  return d == Deployment::grid ? "grid" : "perimeter";
}

Deployment parse_deployment(const std::string& s) {
  if (s == "grid") return Deployment::grid;
  if (s == "perimeter") return Deployment::perimeter;
  throw std::invalid_argument("unknown deployment: " + s);
}

json frame_to_json(const FrameConfig& f) {
  return json{{"tau", f.tau},
              {"tau_up", f.tau_up},
              {"tau_ud", f.tau_ud},
              {"tau_dp", f.tau_dp},
              {"tau_dd", f.tau_dd}};
}

FrameConfig frame_from_json(const json& j) {
  FrameConfig f;
  f.tau = j.at("tau").get<int>();
  f.tau_up = j.at("tau_up").get<int>();
  f.tau_ud = j.at("tau_ud").get<int>();
  f.tau_dp = j.at("tau_dp").get<int>();
  f.tau_dd = j.at("tau_dd").get<int>();
  return f;
}

json pathloss_to_json(const PathLossParams& p) {
  json j;
  if (p.model == PathLossModel::one_slope) {
    j["model"] = "one_slope";
    j["one_slope"] = json{{"d0_m", p.one_slope.d0_m},
                          {"pl_d0_db", p.one_slope.pl_d0_db},
                          {"exponent_n", p.one_slope.exponent_n},
                          {"shadow_sigma_db", p.one_slope.shadow_sigma_db}};
  } else {
    j["model"] = "three_slope";
    j["three_slope"] = json{{"d0_m", p.three_slope.d0_m},
                            {"d1_m", p.three_slope.d1_m},
                            {"l_const_db", p.three_slope.l_const_db},
                            {"shadow_sigma_db", p.three_slope.shadow_sigma_db}};
  }
  return j;
}

PathLossParams pathloss_from_json(const json& j) {
  PathLossParams p;
  const std::string model = j.at("model").get<std::string>();
  if (model == "one_slope") {
    p.model = PathLossModel::one_slope;
    const json& o = j.at("one_slope");
    p.one_slope.d0_m = o.at("d0_m").get<double>();
    p.one_slope.pl_d0_db = o.at("pl_d0_db").get<double>();
    p.one_slope.exponent_n = o.at("exponent_n").get<double>();
    p.one_slope.shadow_sigma_db = o.at("shadow_sigma_db").get<double>();
  } else if (model == "three_slope") {
    p.model = PathLossModel::three_slope;
    const json& o = j.at("three_slope");
    p.three_slope.d0_m = o.at("d0_m").get<double>();
    p.three_slope.d1_m = o.at("d1_m").get<double>();
    p.three_slope.l_const_db = o.at("l_const_db").get<double>();
    p.three_slope.shadow_sigma_db = o.at("shadow_sigma_db").get<double>();
  } else {
    throw std::invalid_argument("unknown path loss model: " + model);
  }
  return p;
}

json config_to_json_obj(const ScenarioConfig& c) {
  return json{{"area_width_m", c.area_width_m},
              {"area_height_m", c.area_height_m},
              {"deployment", deployment_name(c.deployment)},
              {"num_aps", c.num_aps},
              {"num_ues", c.num_ues},
              {"ap_height_m", c.ap_height_m},
              {"ue_height_m", c.ue_height_m},
              {"wrap_around", c.wrap_around},
              {"carrier_freq_hz", c.carrier_freq_hz},
              {"bandwidth_hz", c.bandwidth_hz},
              {"max_ap_power_w", c.max_ap_power_w},
              {"pilot_power_w", c.pilot_power_w},
              {"noise_figure_db", c.noise_figure_db},
              {"pathloss", pathloss_to_json(c.pathloss)},
              {"frame", frame_to_json(c.frame)}};
}

}  // namespace

std::string ScenarioConfig::to_json() const { return config_to_json_obj(*this).dump(2) + "\n"; }

ScenarioConfig ScenarioConfig::from_json(const std::string& text) {
  const json j = json::parse(text);
  ScenarioConfig c;
  c.area_width_m = j.at("area_width_m").get<double>();
  c.area_height_m = j.at("area_height_m").get<double>();
  c.deployment = parse_deployment(j.at("deployment").get<std::string>());
  c.num_aps = j.at("num_aps").get<int>();
  c.num_ues = j.at("num_ues").get<int>();
  c.ap_height_m = j.at("ap_height_m").get<double>();
  c.ue_height_m = j.at("ue_height_m").get<double>();
  c.wrap_around = j.at("wrap_around").get<bool>();
  c.carrier_freq_hz = j.at("carrier_freq_hz").get<double>();
  c.bandwidth_hz = j.at("bandwidth_hz").get<double>();
  c.max_ap_power_w = j.at("max_ap_power_w").get<double>();
  c.pilot_power_w = j.at("pilot_power_w").get<double>();
  c.noise_figure_db = j.at("noise_figure_db").get<double>();
  c.pathloss = pathloss_from_json(j.at("pathloss"));
  c.frame = frame_from_json(j.at("frame"));
  c.validate();
  return c;
}

ScenarioConfig ScenarioConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

ScenarioConfig ScenarioConfig::preset(const std::string& name) {
  if (name == "indoor") {
    ScenarioConfig c;  // defaults describe the indoor hall
    c.validate();
    return c;
  }
  if (name == "piazza") {
    ScenarioConfig c;
    c.area_width_m = 300.0;
    c.area_height_m = 300.0;
    c.deployment = Deployment::perimeter;
    c.num_aps = 400;
    c.num_ues = 20;
    c.ap_height_m = 9.0;
    c.ue_height_m = 1.65;
    c.wrap_around = false;
    c.carrier_freq_hz = 2.0e9;
    c.max_ap_power_w = 0.4;
    c.pathloss.model = PathLossModel::three_slope;
    c.pathloss.three_slope.l_const_db = hata_cost231_db(2000.0, 15.0, 1.65);
    c.validate();
    return c;
  }
  throw std::invalid_argument("unknown preset: " + name);
}

std::vector<Eigen::Vector3d> place_aps(const ScenarioConfig& config) {
  config.validate();
  std::vector<Eigen::Vector3d> pos;
  pos.reserve(config.num_aps);
  if (config.deployment == Deployment::grid) {
    const int side = static_cast<int>(std::llround(std::sqrt(static_cast<double>(config.num_aps))));
    const double sx = config.area_width_m / side;
    const double sy = config.area_height_m / side;
    for (int iy = 0; iy < side; ++iy)
      for (int ix = 0; ix < side; ++ix)
        pos.emplace_back((ix + 0.5) * sx, (iy + 0.5) * sy, config.ap_height_m);
  } else {
    const int per_side = config.num_aps / 4;
    const double w = config.area_width_m;
    const double h = config.area_height_m;
    const double z = config.ap_height_m;
    for (int i = 0; i < per_side; ++i)  // south, west to east
      pos.emplace_back((i + 0.5) * w / per_side, 0.0, z);
    for (int i = 0; i < per_side; ++i)  // east, south to north
      pos.emplace_back(w, (i + 0.5) * h / per_side, z);
    for (int i = 0; i < per_side; ++i)  // north, east to west
      pos.emplace_back(w - (i + 0.5) * w / per_side, h, z);
    for (int i = 0; i < per_side; ++i)  // west, north to south
      pos.emplace_back(0.0, h - (i + 0.5) * h / per_side, z);
  }
  return pos;
}

std::vector<Eigen::Vector3d> place_ues(const ScenarioConfig& config, std::uint64_t rng_seed) {
  config.validate();
  Rng rng(rng_seed);
  std::vector<Eigen::Vector3d> pos;
  pos.reserve(config.num_ues);
  for (int k = 0; k < config.num_ues; ++k) {
    const double x = rng.uniform() * config.area_width_m;
    const double y = rng.uniform() * config.area_height_m;
    pos.emplace_back(x, y, config.ue_height_m);
  }
  return pos;
}

Layout make_layout(const ScenarioConfig& config, std::uint64_t ue_seed) {
  return Layout{place_aps(config), place_ues(config, ue_seed)};
}

double distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const ScenarioConfig& config) {
  double dx = std::abs(a.x() - b.x());
  double dy = std::abs(a.y() - b.y());
  if (config.wrap_around) {
    if (config.area_width_m > 0.0) dx = std::min(dx, config.area_width_m - dx);
    if (config.area_height_m > 0.0) dy = std::min(dy, config.area_height_m - dy);
  }
  const double dz = a.z() - b.z();
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace cellfree
