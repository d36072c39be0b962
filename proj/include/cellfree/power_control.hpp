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
#include <optional>
#include <utility>
#include <vector>

#include "cellfree/channel.hpp"
#include "cellfree/pilots.hpp"

namespace cellfree {

// Downlink power coefficients rho_lk (L x K) plus the per-UE serving sets.
// Every AP must respect sum_k rho_lk * gamma_lk <= 1.
struct PowerAllocation {
  Eigen::MatrixXd rho;
  std::vector<std::vector<int>> subsets;  // serving APs per UE, ascending
  std::optional<double> sinr_target;      // achieved max-min target, if any

  void validate(const EstimateQuality& quality) const;
};

struct SelectionReport {
  double alpha_pct = 0.0;
  double avg_subset_fraction = 0.0;       // mean |A_k| / L
  std::vector<int> per_ue_sizes;
};

// Channel-dependent full power transmission: rho_lk = 1 / sum_k' gamma_lk',
// which meets every per-AP constraint with equality.
PowerAllocation cdfpt(const EstimateQuality& quality);

// Closed-form downlink SINR under maximum-ratio precoding.
Eigen::VectorXd dl_sinr(const PowerAllocation& alloc, const EstimateQuality& quality,
                        const LargeScaleMatrix& ls, const PilotAssignment& pilots, double rho_d);

struct MaxminOptions {
  double tol = 1e-3;  // relative bisection tolerance on the SINR target
  // Restrict each UE to a serving subset (AP indices). Empty: all APs serve
  // all UEs.
  std::vector<std::vector<int>> subsets;
};

// Max-min fairness power control: bisection over the common SINR target with
// a log-barrier interior-point solve of the per-target second-order cone
// feasibility problem.
PowerAllocation maxmin(const EstimateQuality& quality, const LargeScaleMatrix& ls,
                       const PilotAssignment& pilots, double rho_d,
                       const MaxminOptions& options = {});

// Received-power-based selection: per UE, shortest prefix of descending
// sqrt(rho_lk)*gamma_lk capturing alpha_pct of the total. Returns the
// allocation with rho zeroed outside the subsets (re-optimize separately via
// maxmin with MaxminOptions::subsets).
std::pair<PowerAllocation, SelectionReport> select_rpb(const PowerAllocation& alloc,
                                                       const EstimateQuality& quality,
                                                       double alpha_pct);

// Channel-quality-based selection: same prefix rule on beta_lk.
std::pair<std::vector<std::vector<int>>, SelectionReport> select_cqb(const LargeScaleMatrix& ls,
                                                                     double alpha_pct);

// Per-UE subset of APs that would deliver 95% of the full-power received
// sum power; a deployment-density diagnostic.
SelectionReport power_subset_95(const LargeScaleMatrix& ls);

}  // namespace cellfree
