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
#include <vector>

#include "cellfree/pilots.hpp"

namespace cellfree {

// Feasibility oracle for one bisection step of max-min power control.
//
// Variables are u_lk = sqrt(rho_lk * gamma_lk), so per-AP power constraints
// become unit row norms. For a SINR target t the per-UE requirement
//   sqrt(rho_d) * s_k >= sqrt(t) * || w_k(u) ||
// (s_k the coherent signal term, w_k stacking contamination, beamforming
// uncertainty and noise) is smooth thanks to the constant noise entry, so a
// plain log-barrier on the margin-maximization form applies. Newton systems
// are solved exactly in O(L*K) memory by combining a per-AP block inverse
// with a low-rank Woodbury correction for the per-UE cones.
struct MarginProblem {
  const Eigen::MatrixXd* gamma = nullptr;  // L x K
  const Eigen::MatrixXd* beta = nullptr;   // L x K
  const PilotAssignment* pilots = nullptr;
  double rho_d = 0.0;
  double target = 0.0;  // SINR target t
  // Allowed serving APs per UE; empty means all.
  const std::vector<std::vector<int>>* subsets = nullptr;
};

struct MarginSolution {
  bool feasible = false;
  Eigen::MatrixXd u;  // L x K, zero off the serving subsets
  double margin = 0.0;
  int newton_steps = 0;
};

struct MarginSolverOptions {
  double mu = 3.0;            // first barrier growth factor
  double mu_growth = 2.0;     // growth of the growth: doubles each stage
  double mu_max = 256.0;      // cap on the per-stage growth factor
  double tau0 = 1.0;          // initial barrier weight
  int max_stages = 48;
  int max_newton_per_stage = 60;
  double newton_tol = 0.02;   // stage centering tolerance on half the squared decrement
  double gap_rel = 1e-6;      // final barrier gap relative to the margin and cone slack scale
};

MarginSolution solve_margin(const MarginProblem& problem,
                            const Eigen::MatrixXd* warm_start = nullptr,
                            const MarginSolverOptions& options = {});

}  // namespace cellfree
