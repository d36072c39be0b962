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
#include <vector>

#include "cellfree/scenario.hpp"

namespace cellfree {

// Map UE -> pilot index in [0, num_pilots). Two UEs interfere during
// training iff they hold the same index; the contamination indicator
// c(k, k') = same_pilot(k, k') is symmetric and reflexive by construction.
struct PilotAssignment {
  std::vector<int> pilot_of;
  int num_pilots = 0;

  int num_ues() const { return static_cast<int>(pilot_of.size()); }
  bool same_pilot(int k, int j) const { return pilot_of[k] == pilot_of[j]; }
  bool injective() const;
  void validate() const;

  // Co-pilot UE lists, excluding self.
  std::vector<std::vector<int>> copilots() const;
};

PilotAssignment assign_random(int num_ues, int tau_up, std::uint64_t seed);

enum class PilotUtility { max_min, sum };

// Iterative refinement starting from assign_random(num_ues, tau_up, seed).
// Each round takes the UE with the lowest closed-form downlink SE under
// channel-dependent full power transmission and moves it to the pilot with
// the least large-scale overlap; a move is kept only if it improves the SE
// profile (minimum first, then lexicographically). iters == 0 returns the
// random assignment unchanged.
PilotAssignment assign_greedy(const Eigen::MatrixXd& beta, int tau_up, const FrameConfig& frame,
                              double pilot_snr, double dl_snr, int iters, std::uint64_t seed);

// Exhaustive search over all tau_up^K assignments. Throws when the search
// space exceeds 1e6. Ties resolve to the lexicographically smallest
// assignment (lowest pilot indices first).
PilotAssignment assign_bruteforce(const Eigen::MatrixXd& beta, int tau_up, const FrameConfig& frame,
                                  double pilot_snr, double dl_snr,
                                  PilotUtility utility = PilotUtility::max_min);

// Deterministic spatial coloring: UEs processed in index order, each taking
// the pilot that maximizes the minimum distance to UEs already on it (empty
// pilots count as infinitely far; ties resolve to the lowest pilot index).
PilotAssignment assign_structured(const Layout& layout, int num_ues, int tau_up);

}  // namespace cellfree
