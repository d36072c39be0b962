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

#include "cellfree/campaign.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "cellfree/channel.hpp"
#include "cellfree/csv.hpp"
#include "cellfree/pilots.hpp"
#include "cellfree/rng.hpp"

namespace cellfree {

namespace {

using nlohmann::json;

int policy_drop_count(const CampaignSpec& spec, Policy p) {
  return spec.drops > 0 ? spec.drops : default_drops(p);
}

bool wants(const CampaignSpec& spec, Policy p) {
  for (Policy q : spec.policies)
    if (q == p) return true;
  return false;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << text;
}

}  // namespace

Policy parse_policy(const std::string& name) {
  std::string n = name;
  for (char& ch : n)
    if (ch == '-') ch = '_';
  if (n == "cdfpt" || n == "cd_fpt") return Policy::cdfpt;
  if (n == "mmf") return Policy::mmf;
  if (n == "mmf_rpb") return Policy::mmf_rpb;
  if (n == "mmf_cqb") return Policy::mmf_cqb;
  throw std::invalid_argument("unknown power-control policy: " + name);
}

std::string policy_name(Policy p) {
  switch (p) {
    case Policy::cdfpt: return "cdfpt";
    case Policy::mmf: return "mmf";
    case Policy::mmf_rpb: return "mmf_rpb";
    case Policy::mmf_cqb: return "mmf_cqb";
  }
  throw std::logic_error("unreachable");
}

int default_drops(Policy p) { return p == Policy::cdfpt ? 200 : 50; }

PilotStrategy parse_pilot_strategy(const std::string& name) {
  if (name == "random") return PilotStrategy::random;
  if (name == "greedy") return PilotStrategy::greedy;
  if (name == "bruteforce") return PilotStrategy::bruteforce;
  if (name == "structured") return PilotStrategy::structured;
  throw std::invalid_argument("unknown pilot strategy: " + name);
}

ScenarioConfig resolve_scenario(const std::string& name_or_path) {
  if (name_or_path == "indoor" || name_or_path == "piazza")
    return ScenarioConfig::preset(name_or_path);
  return ScenarioConfig::from_json_file(name_or_path);
}

DropResult run_drop(const ScenarioConfig& config, const CampaignSpec& spec, int drop_index) {
  const std::uint64_t drop_seed = mix_seed(spec.seed, static_cast<std::uint64_t>(drop_index));
  const Layout layout = make_layout(config, mix_seed(drop_seed, 0));
  const LargeScaleMatrix ls = large_scale(layout, config, mix_seed(drop_seed, 1));

  PilotAssignment pilots;
  switch (spec.pilots) {
    case PilotStrategy::random:
      pilots = assign_random(config.num_ues, config.frame.tau_up, mix_seed(drop_seed, 2));
      break;
    case PilotStrategy::greedy:
      pilots = assign_greedy(ls.beta, config.frame.tau_up, config.frame, config.pilot_snr(),
                             config.dl_snr(), spec.greedy_iters, mix_seed(drop_seed, 2));
      break;
    case PilotStrategy::bruteforce:
      pilots = assign_bruteforce(ls.beta, config.frame.tau_up, config.frame, config.pilot_snr(),
                                 config.dl_snr(), PilotUtility::max_min);
      break;
    case PilotStrategy::structured:
      pilots = assign_structured(layout, config.num_ues, config.frame.tau_up);
      break;
  }
  const EstimateQuality quality = estimate_quality(ls, pilots, config.frame, config.pilot_snr());
  const double rho_d = config.dl_snr();

  DropResult res;
  {
    Eigen::VectorXd sums = ls.beta.colwise().sum();
    res.min_user_sum_beta_db = 10.0 * std::log10(sums.minCoeff());
  }

  const auto active = [&](Policy p) {
    return wants(spec, p) && drop_index < policy_drop_count(spec, p);
  };

  std::optional<PowerAllocation> mmf_alloc;
  const auto ensure_mmf = [&]() -> const PowerAllocation& {
    if (!mmf_alloc) {
      MaxminOptions opt;
      mmf_alloc = maxmin(quality, ls, pilots, rho_d, opt);
    }
    return *mmf_alloc;
  };

  const auto record = [&](Policy p, const PowerAllocation& alloc) {
    alloc.validate(quality);
    res.se[p] = se_closed_form(alloc, quality, ls, pilots, rho_d, config.frame).per_user_se;
    if (spec.dump_rho && !spec.out_dir.empty()) {
      std::string path = spec.out_dir + "/rho_" + policy_name(p) + "_drop" +
                         std::to_string(drop_index) + ".csv";
      std::ofstream out(path, std::ios::binary);
      if (!out) throw std::runtime_error("cannot open " + path);
      out << "ap,ue,rho\n";
      for (Eigen::Index l = 0; l < alloc.rho.rows(); ++l)
        for (Eigen::Index k = 0; k < alloc.rho.cols(); ++k)
          out << l << ',' << k << ',' << fmt_double(alloc.rho(l, k)) << '\n';
    }
  };

  if (active(Policy::cdfpt)) record(Policy::cdfpt, cdfpt(quality));
  if (active(Policy::mmf)) record(Policy::mmf, ensure_mmf());
  if (active(Policy::mmf_rpb)) {
    auto [masked, report] = select_rpb(ensure_mmf(), quality, spec.alpha_pct);
    res.subset_fraction[Policy::mmf_rpb] = report.avg_subset_fraction;
    if (spec.reoptimize_after_selection) {
      MaxminOptions opt;
      opt.subsets = masked.subsets;
      record(Policy::mmf_rpb, maxmin(quality, ls, pilots, rho_d, opt));
    } else {
      record(Policy::mmf_rpb, masked);
    }
  }
  if (active(Policy::mmf_cqb)) {
    auto [subsets, report] = select_cqb(ls, spec.alpha_pct);
    res.subset_fraction[Policy::mmf_cqb] = report.avg_subset_fraction;
    if (spec.reoptimize_after_selection) {
      MaxminOptions opt;
      opt.subsets = subsets;
      record(Policy::mmf_cqb, maxmin(quality, ls, pilots, rho_d, opt));
    } else {
      PowerAllocation masked = ensure_mmf();
      for (Eigen::Index k = 0; k < masked.rho.cols(); ++k) {
        Eigen::VectorXd keep = Eigen::VectorXd::Zero(masked.rho.rows());
        for (int l : subsets[static_cast<std::size_t>(k)]) keep[l] = 1.0;
        masked.rho.col(k) = (masked.rho.col(k).array() * keep.array()).matrix();
      }
      masked.subsets = subsets;
      masked.sinr_target.reset();
      record(Policy::mmf_cqb, masked);
    }
  }

  if (spec.dump_beta && !spec.out_dir.empty())
    write_beta_csv(ls, spec.out_dir + "/beta_drop" + std::to_string(drop_index) + ".csv");
  if (spec.dump_pilots && !spec.out_dir.empty()) {
    std::string path = spec.out_dir + "/pilots_drop" + std::to_string(drop_index) + ".csv";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "ue,pilot\n";
    for (int k = 0; k < pilots.num_ues(); ++k) out << k << ',' << pilots.pilot_of[k] << '\n';
  }
  return res;
}

CampaignReport run_campaign(const CampaignSpec& spec) {
  const auto t_start = std::chrono::steady_clock::now();
  if (spec.policies.empty()) throw std::invalid_argument("run_campaign: no policies requested");
  ScenarioConfig config = resolve_scenario(spec.scenario);
  config.validate();
  if (!(spec.alpha_pct > 0.0) || spec.alpha_pct > 100.0)
    throw std::invalid_argument("run_campaign: alpha_pct must lie in (0, 100]");
  if (spec.drops < 0) throw std::invalid_argument("run_campaign: negative drop count");

  if (!spec.out_dir.empty()) std::filesystem::create_directories(spec.out_dir);

  int total_drops = 0;
  for (Policy p : spec.policies) total_drops = std::max(total_drops, policy_drop_count(spec, p));

  // Every drop gets its own preallocated slot, so worker scheduling cannot
  // change the aggregate.
  std::vector<DropResult> results(static_cast<std::size_t>(total_drops));
  const int workers = std::max(1, std::min(spec.workers, total_drops));
  if (workers == 1) {
    for (int d = 0; d < total_drops; ++d) results[static_cast<std::size_t>(d)] =
        run_drop(config, spec, d);
  } else {
    std::atomic<int> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto body = [&]() {
      while (true) {
        const int d = next.fetch_add(1);
        if (d >= total_drops) return;
        try {
          results[static_cast<std::size_t>(d)] = run_drop(config, spec, d);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  CampaignReport report;
  report.config = config;
  report.min_user_sum_beta_db = results.front().min_user_sum_beta_db;
  for (const auto& r : results)
    report.min_user_sum_beta_db = std::min(report.min_user_sum_beta_db, r.min_user_sum_beta_db);

  for (Policy p : spec.policies) {
    PolicyStats stats;
    stats.policy = p;
    stats.drops = policy_drop_count(spec, p);
    stats.se_samples.reserve(static_cast<std::size_t>(stats.drops * config.num_ues));
    double frac_sum = 0.0;
    int frac_count = 0;
    for (int d = 0; d < stats.drops; ++d) {
      const DropResult& r = results[static_cast<std::size_t>(d)];
      const auto it = r.se.find(p);
      if (it == r.se.end()) throw std::logic_error("run_campaign: missing drop result");
      for (Eigen::Index k = 0; k < it->second.size(); ++k)
        stats.se_samples.push_back(it->second[k]);
      const auto jt = r.subset_fraction.find(p);
      if (jt != r.subset_fraction.end()) {
        frac_sum += jt->second;
        ++frac_count;
      }
    }
    if (stats.se_samples.size() >= 20)
      stats.likely95 = CdfSummary(stats.se_samples).likely95();
    if (frac_count > 0) stats.avg_subset_fraction = frac_sum / frac_count;
    report.policies.push_back(std::move(stats));
  }

  if (!spec.out_dir.empty()) {
    for (const PolicyStats& stats : report.policies) {
      CdfSummary cdf(stats.se_samples);
      cdf.write_csv(spec.out_dir + "/cdf_" + policy_name(stats.policy) + ".csv");
    }
    {
      std::string path = spec.out_dir + "/se.csv";
      std::ofstream out(path, std::ios::binary);
      if (!out) throw std::runtime_error("cannot open " + path);
      out << "policy,drop,ue,se_bit_per_s_per_hz\n";
      for (Policy p : spec.policies) {
        const int n = policy_drop_count(spec, p);
        for (int d = 0; d < n; ++d) {
          const Eigen::VectorXd& se = results[static_cast<std::size_t>(d)].se.at(p);
          for (Eigen::Index k = 0; k < se.size(); ++k)
            out << policy_name(p) << ',' << d << ',' << k << ',' << fmt_double(se[k]) << '\n';
        }
      }
    }
    // Runtime and worker count stay out of the summary on purpose: re-runs of
    // the same spec must produce byte-identical files.
    json summary;
    summary["config"] = json::parse(config.to_json());
    summary["scenario"] = spec.scenario;
    summary["pilot_strategy"] = spec.pilots == PilotStrategy::random       ? "random"
                                : spec.pilots == PilotStrategy::greedy     ? "greedy"
                                : spec.pilots == PilotStrategy::bruteforce ? "bruteforce"
                                                                           : "structured";
    summary["alpha_pct"] = spec.alpha_pct;
    summary["seed"] = spec.seed;
    summary["reoptimize_after_selection"] = spec.reoptimize_after_selection;
    summary["min_user_sum_beta_db"] = report.min_user_sum_beta_db;
    json policies = json::object();
    for (const PolicyStats& stats : report.policies) {
      json entry;
      entry["drops"] = stats.drops;
      entry["likely95"] = stats.likely95 ? json(*stats.likely95) : json(nullptr);
      entry["avg_subset_fraction"] =
          stats.avg_subset_fraction ? json(*stats.avg_subset_fraction) : json(nullptr);
      policies[policy_name(stats.policy)] = entry;
    }
    summary["policies"] = policies;
    write_text(spec.out_dir + "/summary.json", summary.dump(2) + "\n");
  }

  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

PairStatsResult run_pair_stats(const PairStatsSpec& spec) {
  if (spec.draws < 1) throw std::invalid_argument("run_pair_stats: draws must be positive");
  if (spec.grid_side < 1 || spec.isd_m <= 0.0)
    throw std::invalid_argument("run_pair_stats: invalid lattice");

  ScenarioConfig config;
  config.area_width_m = spec.isd_m * spec.grid_side;
  config.area_height_m = config.area_width_m;
  config.deployment = Deployment::grid;
  config.num_aps = spec.grid_side * spec.grid_side;
  config.num_ues = 2;
  config.ap_height_m = spec.ap_height_m;
  config.ue_height_m = spec.ue_height_m;
  config.wrap_around = true;
  config.carrier_freq_hz = 1.9e9;
  config.pathloss.model = PathLossModel::three_slope;
  config.validate();

  std::vector<double> cellfree_db, cellular_db, ortho;
  cellfree_db.reserve(2 * static_cast<std::size_t>(spec.draws));
  cellular_db.reserve(2 * static_cast<std::size_t>(spec.draws));
  ortho.reserve(static_cast<std::size_t>(spec.draws));

  const std::vector<Eigen::Vector3d> aps = place_aps(config);
  for (int d = 0; d < spec.draws; ++d) {
    const std::uint64_t draw_seed = mix_seed(spec.seed, static_cast<std::uint64_t>(d));
    Layout layout;
    layout.ap_positions = aps;
    layout.ue_positions = place_ues(config, mix_seed(draw_seed, 0));
    const LargeScaleMatrix ls = large_scale(layout, config, mix_seed(draw_seed, 1));
    const ChannelRealization ch = small_scale(ls, mix_seed(draw_seed, 2));
    const std::vector<Eigen::VectorXcd> pair = {ch.g.col(0), ch.g.col(1)};
    const CdfSummary cf = channel_gain_stats(pair, GainMode::cellfree);
    const CdfSummary cu = channel_gain_stats(pair, GainMode::cellular);
    for (double v : cf.sorted()) cellfree_db.push_back(v);
    for (double v : cu.sorted()) cellular_db.push_back(v);
    ortho.push_back(orthogonality(pair[0], pair[1]));
  }

  PairStatsResult result{CdfSummary(std::move(cellfree_db)), CdfSummary(std::move(cellular_db)),
                         CdfSummary(std::move(ortho))};
  if (!spec.out_dir.empty()) {
    std::filesystem::create_directories(spec.out_dir);
    result.cellfree_gain_db.write_csv(spec.out_dir + "/gain_cellfree.csv");
    result.cellular_gain_db.write_csv(spec.out_dir + "/gain_cellular.csv");
    result.orthogonality.write_csv(spec.out_dir + "/orthogonality.csv");
  }
  return result;
}

}  // namespace cellfree
