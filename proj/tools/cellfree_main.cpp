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

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "cellfree/campaign.hpp"
#include "cellfree/rng.hpp"
#include "cellfree/stripe.hpp"
#include "cellfree/sync.hpp"

namespace {

int cmd_run(const std::string& scenario, const std::vector<std::string>& policies,
            const std::string& pilots, double alpha, int drops, std::uint64_t seed,
            const std::string& out, int workers, bool no_reopt, int greedy_iters, bool dump_beta,
            bool dump_pilots, bool dump_rho) {
  cellfree::CampaignSpec spec;
  spec.scenario = scenario;
  if (!policies.empty() && !(policies.size() == 1 && policies[0] == "all")) {
    spec.policies.clear();
    for (const auto& name : policies) spec.policies.push_back(cellfree::parse_policy(name));
  }
  spec.pilots = cellfree::parse_pilot_strategy(pilots);
  spec.alpha_pct = alpha;
  spec.drops = drops;
  spec.seed = seed;
  spec.out_dir = out;
  spec.workers = workers;
  spec.reoptimize_after_selection = !no_reopt;
  spec.greedy_iters = greedy_iters;
  spec.dump_beta = dump_beta;
  spec.dump_pilots = dump_pilots;
  spec.dump_rho = dump_rho;

  const cellfree::CampaignReport report = cellfree::run_campaign(spec);
  for (const auto& stats : report.policies) {
    std::printf("%-8s drops=%-4d", cellfree::policy_name(stats.policy).c_str(), stats.drops);
    if (stats.likely95) std::printf(" likely95=%.4f bit/s/Hz", *stats.likely95);
    if (stats.avg_subset_fraction)
      std::printf(" avg_subset_fraction=%.4f", *stats.avg_subset_fraction);
    std::printf("\n");
  }
  std::printf("worst per-user sum beta: %.2f dB\n", report.min_user_sum_beta_db);
  std::printf("runtime: %.1f s\n", report.runtime_seconds);
  return 0;
}

int cmd_fig3(double isd, int grid_side, int draws, std::uint64_t seed, const std::string& out) {
  cellfree::PairStatsSpec spec;
  spec.isd_m = isd;
  spec.grid_side = grid_side;
  spec.draws = draws;
  spec.seed = seed;
  spec.out_dir = out;
  const cellfree::PairStatsResult res = cellfree::run_pair_stats(spec);
  for (double p : {5.0, 50.0, 95.0})
    std::printf("p%02.0f  cellfree=%.2f dB  cellular=%.2f dB  gap=%.2f dB\n", p,
                res.cellfree_gain_db.percentile(p), res.cellular_gain_db.percentile(p),
                res.cellfree_gain_db.percentile(p) - res.cellular_gain_db.percentile(p));
  std::printf("median orthogonality measure: %.5f\n", res.orthogonality.percentile(50.0));
  return 0;
}

int cmd_sync_demo(int num_groups, double sigma, std::uint64_t seed) {
  cellfree::Rng rng(seed);
  std::vector<std::array<cellfree::ClockBias, 3>> groups(num_groups);
  for (auto& g : groups)
    for (auto& ap : g) {
      ap.t = 2e-6 * (rng.uniform() - 0.5);
      ap.r = 2e-6 * (rng.uniform() - 0.5);
    }
  const cellfree::ChainResult chain =
      cellfree::calibrate_chain(groups, sigma, cellfree::mix_seed(seed, 1));
  double worst = 0.0;
  for (int g = 0; g < num_groups; ++g)
    for (int i = 0; i < 3; ++i) {
      const double truth = groups[g][i].t - groups[0][0].t;
      worst = std::max(worst, std::abs(chain.tx_offset[g][i] - truth));
    }
  std::printf("groups=%d sigma=%g s\n", num_groups, sigma);
  std::printf("max |estimated - true| transmit offset: %.3e s\n", worst);
  return 0;
}

int cmd_stripe_verify() {
  const int num_aps = 50;
  const int num_ues = 8;
  const int frames = 100;
  cellfree::Rng rng(7);
  double worst = 0.0;
  for (int f = 0; f < frames; ++f) {
    std::vector<cellfree::ApuState> apus(num_aps);
    Eigen::MatrixXcd ghat(num_aps, num_ues);
    for (int l = 0; l < num_aps; ++l) {
      apus[l].apu_index = l;
      apus[l].g_hat.resize(num_ues);
      apus[l].sqrt_rho.resize(num_ues);
      for (int k = 0; k < num_ues; ++k) {
        apus[l].g_hat[k] = rng.cnormal();
        apus[l].sqrt_rho[k] = rng.uniform();
        ghat(l, k) = apus[l].g_hat[k];
      }
    }
    Eigen::VectorXcd received(num_aps);
    for (int l = 0; l < num_aps; ++l) received[l] = rng.cnormal();

    cellfree::StreamFrame bus;
    bus.streams = Eigen::VectorXcd::Zero(num_ues);
    for (int l = 0; l < num_aps; ++l)
      bus = cellfree::ul_accumulate(apus[l], received[l], bus);
    const Eigen::VectorXcd central = ghat.adjoint() * received;
    worst = std::max(worst, (bus.streams - central).norm() / central.norm());
  }
  const bool pass = worst < 1e-9;
  std::printf("stripe uplink accumulation vs centralized combining: max relative error %.3e %s\n",
              worst, pass ? "[ok]" : "[mismatch]");
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cell-free massive MIMO system-level simulator"};
  app.require_subcommand(1);

  std::string scenario = "indoor";
  std::vector<std::string> policies;
  std::string pilots = "structured";
  double alpha = 95.0;
  int drops = 0;
  std::uint64_t seed = 1;
  std::string out;
  int workers = 1;
  bool no_reopt = false;
  int greedy_iters = 32;
  bool dump_beta = false, dump_pilots = false, dump_rho = false;

  auto* run = app.add_subcommand("run", "simulate a downlink campaign");
  run->add_option("--scenario", scenario, "preset name (indoor, piazza) or JSON config path");
  run->add_option("--power-control", policies,
                  "policy: cdfpt, mmf, mmf-rpb, mmf-cqb or all (repeatable)");
  run->add_option("--pilots", pilots, "random, greedy, bruteforce or structured");
  run->add_option("--alpha", alpha, "AP-selection threshold in percent");
  run->add_option("--drops", drops, "drop count (0: per-policy default)");
  run->add_option("--seed", seed, "campaign seed");
  run->add_option("--out", out, "output directory for CSV/JSON files");
  run->add_option("--workers", workers, "worker threads");
  run->add_flag("--no-reoptimize", no_reopt, "keep max-min powers after AP selection");
  run->add_option("--greedy-iters", greedy_iters, "refinement rounds for greedy pilots");
  run->add_flag("--dump-beta", dump_beta, "write per-drop large-scale fading CSVs");
  run->add_flag("--dump-pilots", dump_pilots, "write per-drop pilot maps");
  run->add_flag("--dump-rho", dump_rho, "write per-drop power coefficient CSVs");

  double isd = 5.0;
  int grid_side = 50;
  int draws = 10000;
  std::uint64_t fig3_seed = 1;
  std::string fig3_out;
  auto* fig3 = app.add_subcommand("fig3", "macro-diversity and favorable-propagation statistics");
  fig3->add_option("--isd", isd, "inter-site distance in meters");
  fig3->add_option("--grid-side", grid_side, "APs per lattice side");
  fig3->add_option("--draws", draws, "UE pair draws");
  fig3->add_option("--seed", fig3_seed, "RNG seed");
  fig3->add_option("--out", fig3_out, "output directory");

  auto* sync = app.add_subcommand("sync", "clock-bias calibration utilities");
  sync->require_subcommand(1);
  int groups = 10;
  double sigma = 0.0;
  std::uint64_t sync_seed = 1;
  auto* demo = sync->add_subcommand("demo", "calibrate a chain of AP triplets");
  demo->add_option("--groups", groups, "number of 3-AP groups");
  demo->add_option("--sigma", sigma, "timestamp noise std dev in seconds");
  demo->add_option("--seed", sync_seed, "RNG seed");

  auto* stripe = app.add_subcommand("stripe", "radio-stripe bus utilities");
  stripe->require_subcommand(1);
  auto* verify = stripe->add_subcommand("verify", "check sequential accumulation");

  std::string preset_name = "indoor";
  auto* preset = app.add_subcommand("preset", "print a built-in scenario as JSON");
  preset->add_option("name", preset_name, "indoor or piazza");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(scenario, policies, pilots, alpha, drops, seed, out, workers, no_reopt,
                     greedy_iters, dump_beta, dump_pilots, dump_rho);
    if (fig3->parsed()) return cmd_fig3(isd, grid_side, draws, fig3_seed, fig3_out);
    if (sync->parsed() && demo->parsed()) return cmd_sync_demo(groups, sigma, sync_seed);
    if (stripe->parsed() && verify->parsed()) return cmd_stripe_verify();
    if (preset->parsed()) {
      std::cout << cellfree::ScenarioConfig::preset(preset_name).to_json();
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
