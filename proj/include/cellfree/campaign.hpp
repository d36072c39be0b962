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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cellfree/performance.hpp"
#include "cellfree/scenario.hpp"

namespace cellfree {

enum class Policy { cdfpt, mmf, mmf_rpb, mmf_cqb };

Policy parse_policy(const std::string& name);
std::string policy_name(Policy p);
int default_drops(Policy p);  // 200 for cdfpt, 50 for the max-min family

enum class PilotStrategy { random, greedy, bruteforce, structured };
PilotStrategy parse_pilot_strategy(const std::string& name);

struct CampaignSpec {
  std::string scenario = "indoor";  // preset name or path to a JSON file
  std::vector<Policy> policies = {Policy::cdfpt, Policy::mmf, Policy::mmf_rpb, Policy::mmf_cqb};
  PilotStrategy pilots = PilotStrategy::structured;
  double alpha_pct = 95.0;
  int drops = 0;  // 0: per-policy defaults
  std::uint64_t seed = 1;
  std::string out_dir;  // empty: in-memory only
  int workers = 1;
  bool reoptimize_after_selection = true;
  int greedy_iters = 32;
  bool dump_beta = false;
  bool dump_pilots = false;
  bool dump_rho = false;
};

struct PolicyStats {
  Policy policy = Policy::cdfpt;
  int drops = 0;
  std::vector<double> se_samples;  // drops x K, drop-major
  std::optional<double> likely95;
  std::optional<double> avg_subset_fraction;
};

struct CampaignReport {
  ScenarioConfig config;
  std::vector<PolicyStats> policies;
  double min_user_sum_beta_db = 0.0;  // worst-drop diagnostic
  double runtime_seconds = 0.0;       // not serialized: outputs stay reproducible
};

// One independent drop: UE placement, large-scale fading, pilot assignment,
// estimation quality, then every requested policy evaluated on the shared
// realization. Per-drop seeds derive from mix_seed(campaign seed, drop).
struct DropResult {
  std::map<Policy, Eigen::VectorXd> se;
  std::map<Policy, double> subset_fraction;
  double min_user_sum_beta_db = 0.0;
};

DropResult run_drop(const ScenarioConfig& config, const CampaignSpec& spec, int drop_index);

// Runs all drops (optionally across worker threads; the output is
// byte-identical regardless of worker count), aggregates per-policy CDFs and
// writes cdf_<policy>.csv, se.csv and summary.json into out_dir when set.
CampaignReport run_campaign(const CampaignSpec& spec);

ScenarioConfig resolve_scenario(const std::string& name_or_path);

// Macro-diversity experiment: dense AP lattice, pairs of UEs dropped at
// random, channel-gain and orthogonality CDFs collected.
struct PairStatsSpec {
  double isd_m = 5.0;
  int grid_side = 50;  // grid_side^2 APs
  int draws = 10000;
  std::uint64_t seed = 1;
  double ap_height_m = 10.0;
  double ue_height_m = 1.65;
  std::string out_dir;
};

struct PairStatsResult {
  CdfSummary cellfree_gain_db;
  CdfSummary cellular_gain_db;
  CdfSummary orthogonality;
};

PairStatsResult run_pair_stats(const PairStatsSpec& spec);

}  // namespace cellfree
