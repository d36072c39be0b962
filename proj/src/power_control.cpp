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

#include "cellfree/power_control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "cellfree/socp.hpp"

namespace cellfree {

namespace {

std::vector<std::vector<int>> all_subsets(Eigen::Index num_aps, Eigen::Index num_ues) {
  std::vector<int> all(num_aps);
  std::iota(all.begin(), all.end(), 0);
  return std::vector<std::vector<int>>(num_ues, all);
}

// Shortest prefix of the descending weights reaching alpha_pct of the total;
// zero-weight entries never enter. Returns ascending AP indices.
std::vector<int> prefix_subset(const Eigen::VectorXd& weights, double alpha_pct) {
  const Eigen::Index num_aps = weights.size();
  std::vector<int> order(num_aps);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return weights[a] > weights[b]; });
  const double total = weights.sum();
  if (total <= 0.0) throw std::invalid_argument("selection: weights must have positive sum");
  const double goal = total * (alpha_pct / 100.0) * (1.0 - 1e-12);
  std::vector<int> subset;
  double acc = 0.0;
  for (int l : order) {
    if (weights[l] <= 0.0) break;
    subset.push_back(l);
    acc += weights[l];
    if (acc >= goal) break;
  }
  if (subset.empty()) subset.push_back(order.front());
  std::sort(subset.begin(), subset.end());
  return subset;
}

SelectionReport make_report(const std::vector<std::vector<int>>& subsets, Eigen::Index num_aps,
                            double alpha_pct) {
  SelectionReport rep;
  rep.alpha_pct = alpha_pct;
  rep.per_ue_sizes.reserve(subsets.size());
  double acc = 0.0;
  for (const auto& s : subsets) {
    rep.per_ue_sizes.push_back(static_cast<int>(s.size()));
    acc += static_cast<double>(s.size()) / static_cast<double>(num_aps);
  }
  rep.avg_subset_fraction = subsets.empty() ? 0.0 : acc / static_cast<double>(subsets.size());
  return rep;
}

void check_alpha(double alpha_pct) {
  if (!(alpha_pct > 0.0) || alpha_pct > 100.0)
    throw std::invalid_argument("selection: alpha_pct must lie in (0, 100]");
}

}  // namespace

void PowerAllocation::validate(const EstimateQuality& quality) const {
  if (rho.rows() != quality.gamma.rows() || rho.cols() != quality.gamma.cols())
    throw std::invalid_argument("PowerAllocation: shape mismatch");
  if ((rho.array() < 0.0).any())
    throw std::invalid_argument("PowerAllocation: negative coefficient");
  const Eigen::VectorXd load = (rho.array() * quality.gamma.array()).rowwise().sum();
  if ((load.array() > 1.0 + 1e-9).any())
    throw std::invalid_argument("PowerAllocation: per-AP power constraint violated");
}

PowerAllocation cdfpt(const EstimateQuality& quality) {
  const Eigen::VectorXd colsum = quality.gamma.rowwise().sum();
  if ((colsum.array() <= 0.0).any())
    throw std::invalid_argument("cdfpt: every AP needs positive total gamma");
  PowerAllocation alloc;
  alloc.rho = (1.0 / colsum.array()).matrix().replicate(1, quality.gamma.cols());
  alloc.subsets = all_subsets(quality.gamma.rows(), quality.gamma.cols());
  return alloc;
}

Eigen::VectorXd dl_sinr(const PowerAllocation& alloc, const EstimateQuality& quality,
                        const LargeScaleMatrix& ls, const PilotAssignment& pilots, double rho_d) {
  const Eigen::Index num_aps = ls.beta.rows();
  const Eigen::Index num_ues = ls.beta.cols();
  if (alloc.rho.rows() != num_aps || alloc.rho.cols() != num_ues)
    throw std::invalid_argument("dl_sinr: allocation shape mismatch");
  if (rho_d <= 0.0) throw std::invalid_argument("dl_sinr: rho_d must be positive");

  const Eigen::MatrixXd amp = (alloc.rho.array() * quality.gamma.array()).sqrt() *
                              quality.gamma.array().sqrt();  // sqrt(rho)*gamma
  const Eigen::VectorXd ap_load = (alloc.rho.array() * quality.gamma.array()).rowwise().sum();

  Eigen::VectorXd sinr(num_ues);
  for (Eigen::Index k = 0; k < num_ues; ++k) {
    const double sig = amp.col(k).sum();
    double denom = 1.0 + rho_d * ls.beta.col(k).dot(ap_load);
    for (Eigen::Index j = 0; j < num_ues; ++j) {
      if (j == k || !pilots.same_pilot(static_cast<int>(k), static_cast<int>(j))) continue;
      const double coh =
          (amp.col(j).array() * ls.beta.col(k).array() / ls.beta.col(j).array()).sum();
      denom += rho_d * coh * coh;
    }
    sinr[k] = rho_d * sig * sig / denom;
  }
  return sinr;
}

PowerAllocation maxmin(const EstimateQuality& quality, const LargeScaleMatrix& ls,
                       const PilotAssignment& pilots, double rho_d,
                       const MaxminOptions& options) {
  const Eigen::Index num_aps = quality.gamma.rows();
  const Eigen::Index num_ues = quality.gamma.cols();
  const bool masked = !options.subsets.empty();
  if (masked && static_cast<Eigen::Index>(options.subsets.size()) != num_ues)
    throw std::invalid_argument("maxmin: subset list size mismatch");

  // Feasible starting point: CD-FPT restricted to the serving subsets.
  PowerAllocation start = cdfpt(quality);
  if (masked) {
    Eigen::MatrixXd mask = Eigen::MatrixXd::Zero(num_aps, num_ues);
    for (Eigen::Index k = 0; k < num_ues; ++k) {
      if (options.subsets[k].empty())
        throw std::invalid_argument("maxmin: empty serving subset");
      for (int l : options.subsets[k]) mask(l, k) = 1.0;
    }
    start.rho = (start.rho.array() * mask.array()).matrix();
  }
  const Eigen::VectorXd sinr0 = dl_sinr(start, quality, ls, pilots, rho_d);
  double t_lo = sinr0.minCoeff();
  if (!(t_lo > 0.0)) throw std::runtime_error("maxmin: starting point has zero SINR");

  // Proven bisection cap: u_lk <= 1 under the per-AP constraint, so even with
  // every serving AP at full power for UE k alone and zero interference,
  // SINR_k <= rho_d (sum_l sqrt(gamma_lk))^2. The max-min value cannot exceed
  // the worst such cap, so no upward probing is needed.
  double t_hi = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < num_ues; ++k) {
    double root_sum = 0.0;
    if (masked) {
      for (int l : options.subsets[k]) root_sum += std::sqrt(quality.gamma(l, k));
    } else {
      root_sum = quality.gamma.col(k).array().sqrt().sum();
    }
    t_hi = std::min(t_hi, rho_d * root_sum * root_sum);
  }
  t_hi = std::max(t_hi, t_lo * (1.0 + options.tol));

  MarginProblem prob;
  prob.gamma = &quality.gamma;
  prob.beta = &ls.beta;
  prob.pilots = &pilots;
  prob.rho_d = rho_d;
  if (masked) prob.subsets = &options.subsets;

  Eigen::MatrixXd u_best = (start.rho.array() * quality.gamma.array()).sqrt().matrix();

  // Geometric bisection: the cap can sit orders of magnitude above the
  // optimum, so halving the ratio t_hi / t_lo instead of the difference keeps
  // the probe count logarithmic in that overshoot.
  while (t_hi - t_lo > options.tol * t_lo) {
    prob.target = std::sqrt(t_lo * t_hi);
    const MarginSolution sol = solve_margin(prob, &u_best);
    if (sol.feasible) {
      t_lo = prob.target;
      u_best = sol.u;
    } else {
      t_hi = prob.target;
    }
  }

  PowerAllocation alloc;
  alloc.rho = (u_best.array().square() / quality.gamma.array()).matrix();
  alloc.subsets = masked ? options.subsets : all_subsets(num_aps, num_ues);
  const Eigen::VectorXd sinr = dl_sinr(alloc, quality, ls, pilots, rho_d);
  alloc.sinr_target = sinr.minCoeff();
  return alloc;
}

std::pair<PowerAllocation, SelectionReport> select_rpb(const PowerAllocation& alloc,
                                                       const EstimateQuality& quality,
                                                       double alpha_pct) {
  check_alpha(alpha_pct);
  const Eigen::Index num_aps = quality.gamma.rows();
  const Eigen::Index num_ues = quality.gamma.cols();
  const Eigen::MatrixXd weight =
      ((alloc.rho.array() * quality.gamma.array()).sqrt() * quality.gamma.array().sqrt()).matrix();

  PowerAllocation out = alloc;
  out.subsets.assign(num_ues, {});
  out.sinr_target.reset();
  for (Eigen::Index k = 0; k < num_ues; ++k) {
    out.subsets[k] = prefix_subset(weight.col(k), alpha_pct);
    Eigen::VectorXd keep = Eigen::VectorXd::Zero(num_aps);
    for (int l : out.subsets[k]) keep[l] = 1.0;
    out.rho.col(k) = (out.rho.col(k).array() * keep.array()).matrix();
  }
  return {out, make_report(out.subsets, num_aps, alpha_pct)};
}

std::pair<std::vector<std::vector<int>>, SelectionReport> select_cqb(const LargeScaleMatrix& ls,
                                                                     double alpha_pct) {
  check_alpha(alpha_pct);
  std::vector<std::vector<int>> subsets(ls.beta.cols());
  for (Eigen::Index k = 0; k < ls.beta.cols(); ++k)
    subsets[k] = prefix_subset(ls.beta.col(k), alpha_pct);
  auto rep = make_report(subsets, ls.beta.rows(), alpha_pct);
  return {std::move(subsets), rep};
}

SelectionReport power_subset_95(const LargeScaleMatrix& ls) {
  // Received power from AP l is beta_lk * P_max; the common factor cancels in
  // the prefix rule, so the subsets coincide with channel-quality selection.
  return select_cqb(ls, 95.0).second;
}

}  // namespace cellfree
