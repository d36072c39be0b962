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

#include "cellfree/pilots.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cellfree/channel.hpp"
#include "cellfree/power_control.hpp"
#include "cellfree/rng.hpp"

namespace cellfree {

bool PilotAssignment::injective() const {
  std::vector<int> seen(num_pilots, 0);
  for (int p : pilot_of) {
    if (seen[p]++) return false;
  }
  return true;
}

void PilotAssignment::validate() const {
  if (num_pilots <= 0) throw std::invalid_argument("PilotAssignment: num_pilots must be positive");
  for (int p : pilot_of)
    if (p < 0 || p >= num_pilots)
      throw std::invalid_argument("PilotAssignment: pilot index out of range");
}

std::vector<std::vector<int>> PilotAssignment::copilots() const {
  const int k_total = num_ues();
  std::vector<std::vector<int>> out(k_total);
  for (int k = 0; k < k_total; ++k)
    for (int j = 0; j < k_total; ++j)
      if (j != k && pilot_of[j] == pilot_of[k]) out[k].push_back(j);
  return out;
}

PilotAssignment assign_random(int num_ues, int tau_up, std::uint64_t seed) {
  if (num_ues <= 0 || tau_up <= 0)
    throw std::invalid_argument("assign_random: num_ues and tau_up must be positive");
  Rng rng(seed);
  PilotAssignment a;
  a.num_pilots = tau_up;
  a.pilot_of.resize(num_ues);
  for (int k = 0; k < num_ues; ++k) a.pilot_of[k] = rng.uniform_int(tau_up);
  return a;
}

namespace {

// Per-user SE under CD-FPT, the utility all optimizing strategies share.
Eigen::VectorXd se_under_cdfpt(const Eigen::MatrixXd& beta, const PilotAssignment& pilots,
                               const FrameConfig& frame, double pilot_snr, double dl_snr) {
  LargeScaleMatrix ls{beta};
  const EstimateQuality q = estimate_quality(ls, pilots, frame, pilot_snr);
  const PowerAllocation alloc = cdfpt(q);
  const Eigen::VectorXd sinr = dl_sinr(alloc, q, ls, pilots, dl_snr);
  const double pl = prelog(frame);
  return (pl * (1.0 + sinr.array()).log() / std::log(2.0)).matrix();
}

// Ascending comparison of sorted SE profiles; used so that a move helping a
// non-minimal user still counts as progress when the minimum ties.
bool lex_better(const Eigen::VectorXd& cand, const Eigen::VectorXd& base) {
  std::vector<double> a(cand.data(), cand.data() + cand.size());
  std::vector<double> b(base.data(), base.data() + base.size());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1e-300});
    if (std::abs(a[i] - b[i]) <= 1e-12 * scale) continue;
    return a[i] > b[i];
  }
  return false;
}

}  // namespace

PilotAssignment assign_greedy(const Eigen::MatrixXd& beta, int tau_up, const FrameConfig& frame,
                              double pilot_snr, double dl_snr, int iters, std::uint64_t seed) {
  const int k_total = static_cast<int>(beta.cols());
  PilotAssignment a = assign_random(k_total, tau_up, seed);
  if (iters == 0) return a;

  const Eigen::VectorXd ap_sum = beta.colwise().sum();  // sum_l beta_lk per UE
  Eigen::VectorXd se = se_under_cdfpt(beta, a, frame, pilot_snr, dl_snr);

  for (int it = 0; it < iters; ++it) {
    std::vector<int> order(k_total);
    for (int k = 0; k < k_total; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](int x, int y) {
      if (se[x] != se[y]) return se[x] < se[y];
      return x < y;
    });

    bool moved = false;
    for (int w : order) {
      // Pilot with the least large-scale overlap from its current holders.
      int best_p = 0;
      double best_overlap = std::numeric_limits<double>::infinity();
      for (int p = 0; p < tau_up; ++p) {
        double overlap = 0.0;
        for (int j = 0; j < k_total; ++j)
          if (j != w && a.pilot_of[j] == p) overlap += ap_sum[j];
        if (overlap < best_overlap) {
          best_overlap = overlap;
          best_p = p;
        }
      }
      if (best_p == a.pilot_of[w]) continue;
      PilotAssignment cand = a;
      cand.pilot_of[w] = best_p;
      const Eigen::VectorXd cand_se = se_under_cdfpt(beta, cand, frame, pilot_snr, dl_snr);
      if (lex_better(cand_se, se)) {
        a = cand;
        se = cand_se;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return a;
}

PilotAssignment assign_bruteforce(const Eigen::MatrixXd& beta, int tau_up, const FrameConfig& frame,
                                  double pilot_snr, double dl_snr, PilotUtility utility) {
  const int k_total = static_cast<int>(beta.cols());
  if (tau_up <= 0) throw std::invalid_argument("assign_bruteforce: tau_up must be positive");
  const double space = std::pow(static_cast<double>(tau_up), static_cast<double>(k_total));
  if (space > 1e6)
    throw std::invalid_argument("assign_bruteforce: search space exceeds 1e6 assignments");

  PilotAssignment cur;
  cur.num_pilots = tau_up;
  cur.pilot_of.assign(k_total, 0);
  PilotAssignment best = cur;
  double best_util = -std::numeric_limits<double>::infinity();

  while (true) {
    const Eigen::VectorXd se = se_under_cdfpt(beta, cur, frame, pilot_snr, dl_snr);
    const double util = utility == PilotUtility::max_min ? se.minCoeff() : se.sum();
    if (util > best_util) {  // strict: first (lexicographically smallest) wins ties
      best_util = util;
      best = cur;
    }
    int pos = k_total - 1;  // UE 0 most significant: enumeration is lexicographic
    while (pos >= 0 && cur.pilot_of[pos] == tau_up - 1) {
      cur.pilot_of[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++cur.pilot_of[pos];
  }
  return best;
}

PilotAssignment assign_structured(const Layout& layout, int num_ues, int tau_up) {
  if (num_ues <= 0 || tau_up <= 0)
    throw std::invalid_argument("assign_structured: num_ues and tau_up must be positive");
  if (static_cast<int>(layout.ue_positions.size()) < num_ues)
    throw std::invalid_argument("assign_structured: layout has too few UE positions");

  PilotAssignment a;
  a.num_pilots = tau_up;
  a.pilot_of.resize(num_ues);
  for (int k = 0; k < num_ues; ++k) {
    int best_p = 0;
    double best_d = -1.0;
    for (int p = 0; p < tau_up; ++p) {
      double d_min = std::numeric_limits<double>::infinity();
      for (int j = 0; j < k; ++j)
        if (a.pilot_of[j] == p)
          d_min = std::min(d_min, (layout.ue_positions[k] - layout.ue_positions[j]).norm());
      if (d_min > best_d) {  // strict: ties keep the lowest pilot index
        best_d = d_min;
        best_p = p;
      }
    }
    a.pilot_of[k] = best_p;
  }
  return a;
}

}  // namespace cellfree
