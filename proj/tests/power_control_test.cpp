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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cellfree/channel.hpp"
#include "cellfree/pilots.hpp"
#include "cellfree/power_control.hpp"
#include "cellfree/rng.hpp"
#include "cellfree/scenario.hpp"

using namespace cellfree;

namespace {

PilotAssignment orthogonal_pilots(int num_ues) {
  PilotAssignment p;
  p.num_pilots = num_ues;
  p.pilot_of.resize(num_ues);
  for (int k = 0; k < num_ues; ++k) p.pilot_of[k] = k;
  return p;
}

EstimateQuality quality_of(const Eigen::MatrixXd& beta, const PilotAssignment& pilots,
                           double pilot_snr) {
  LargeScaleMatrix ls{beta};
  FrameConfig frame;
  return estimate_quality(ls, pilots, frame, pilot_snr);
}

Eigen::MatrixXd random_beta(int num_aps, int num_ues, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd beta(num_aps, num_ues);
  for (int k = 0; k < num_ues; ++k)
    for (int l = 0; l < num_aps; ++l)
      beta(l, k) = std::pow(10.0, -(4.0 + 2.0 * rng.uniform()));
  return beta;
}

// Independent oracle for the 2x2 max-min value: shrinking-box grid search in
// the amplitude variables u_lk = sqrt(rho_lk). The SINR superlevel sets are
// convex in u, so refining around the incumbent converges to the global
// optimum. Each round re-centers on the incumbent with a two-cell margin so
// a near-boundary best grid point cannot push the optimum outside the box.
double grid_maxmin_2x2(const EstimateQuality& q, const LargeScaleMatrix& ls,
                       const PilotAssignment& pilots, double rho_d) {
  Eigen::Vector4d cap;
  cap << 1.0 / std::sqrt(q.gamma(0, 0)), 1.0 / std::sqrt(q.gamma(0, 1)),
      1.0 / std::sqrt(q.gamma(1, 0)), 1.0 / std::sqrt(q.gamma(1, 1));
  Eigen::Vector4d lo = Eigen::Vector4d::Zero();
  Eigen::Vector4d hi = cap;
  Eigen::Vector4d best = Eigen::Vector4d::Zero();
  double best_val = -1.0;
  PowerAllocation alloc;
  alloc.rho.resize(2, 2);
  const int pts = 13;
  for (int round = 0; round < 10; ++round) {
    const Eigen::Vector4d step = (hi - lo) / (pts - 1);
    for (int a = 0; a < pts; ++a)
      for (int b = 0; b < pts; ++b)
        for (int c = 0; c < pts; ++c)
          for (int d = 0; d < pts; ++d) {
            Eigen::Vector4d u(lo[0] + a * step[0], lo[1] + b * step[1], lo[2] + c * step[2],
                              lo[3] + d * step[3]);
            if (u[0] * u[0] * q.gamma(0, 0) + u[1] * u[1] * q.gamma(0, 1) > 1.0) continue;
            if (u[2] * u[2] * q.gamma(1, 0) + u[3] * u[3] * q.gamma(1, 1) > 1.0) continue;
            alloc.rho(0, 0) = u[0] * u[0];
            alloc.rho(0, 1) = u[1] * u[1];
            alloc.rho(1, 0) = u[2] * u[2];
            alloc.rho(1, 1) = u[3] * u[3];
            const double val = dl_sinr(alloc, q, ls, pilots, rho_d).minCoeff();
            if (val > best_val) {
              best_val = val;
              best = u;
            }
          }
    const Eigen::Vector4d span = 2.0 * (hi - lo) / (pts - 1);
    lo = (best - span).cwiseMax(0.0);
    hi = (best + span).cwiseMin(cap);
  }
  return best_val;
}

}  // namespace

TEST_CASE("cdfpt single user inverts gamma and saturates every AP") {
  EstimateQuality q;
  q.gamma.resize(3, 1);
  q.gamma << 0.1, 0.25, 0.5;
  PowerAllocation a = cdfpt(q);
  CHECK(a.rho(0, 0) == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(a.rho(1, 0) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(a.rho(2, 0) == doctest::Approx(2.0).epsilon(1e-14));
  REQUIRE(a.subsets.size() == 1);
  CHECK(a.subsets[0] == std::vector<int>({0, 1, 2}));
  CHECK_FALSE(a.sinr_target.has_value());
}

TEST_CASE("cdfpt shares one coefficient per AP across users") {
  EstimateQuality q;
  q.gamma.resize(1, 2);
  q.gamma << 0.2, 0.3;
  PowerAllocation a = cdfpt(q);
  CHECK(a.rho(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(a.rho(0, 1) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("cdfpt meets the per-AP constraint with equality") {
  Eigen::MatrixXd beta = random_beta(7, 4, 3);
  EstimateQuality q = quality_of(beta, orthogonal_pilots(4), 1e4);
  PowerAllocation a = cdfpt(q);
  const Eigen::VectorXd load = (a.rho.array() * q.gamma.array()).rowwise().sum();
  for (int l = 0; l < 7; ++l) CHECK(load[l] == doctest::Approx(1.0).epsilon(1e-12));
  a.validate(q);
}

TEST_CASE("cdfpt rejects an AP with no estimated gain") {
  EstimateQuality q;
  q.gamma = Eigen::MatrixXd::Zero(2, 2);
  q.gamma(0, 0) = 0.1;
  CHECK_THROWS_AS(cdfpt(q), std::invalid_argument);
}

TEST_CASE("allocation validation flags violated power budgets") {
  EstimateQuality q;
  q.gamma.resize(1, 1);
  q.gamma << 0.5;
  PowerAllocation a;
  a.rho.resize(1, 1);
  a.rho << 2.0 + 1e-6;  // load = 1 + 5e-7 > 1 + 1e-9
  CHECK_THROWS_AS(a.validate(q), std::invalid_argument);
  a.rho << -0.1;
  CHECK_THROWS_AS(a.validate(q), std::invalid_argument);
  a.rho << 1.0;
  a.validate(q);
}

TEST_CASE("single-link SINR matches the closed form") {
  LargeScaleMatrix ls;
  ls.beta.resize(1, 1);
  ls.beta << 2e-5;
  PilotAssignment pilots = orthogonal_pilots(1);
  EstimateQuality q = quality_of(ls.beta, pilots, 1e4);
  PowerAllocation a = cdfpt(q);
  const double rho_d = 5e4;
  Eigen::VectorXd sinr = dl_sinr(a, q, ls, pilots, rho_d);
  const double g = q.gamma(0, 0);
  CHECK(sinr[0] ==
        doctest::Approx(rho_d * g / (rho_d * ls.beta(0, 0) + 1.0)).epsilon(1e-12));
}

TEST_CASE("zero power yields zero SINR for everyone") {
  Eigen::MatrixXd beta = random_beta(4, 3, 11);
  LargeScaleMatrix ls{beta};
  PilotAssignment pilots = orthogonal_pilots(3);
  EstimateQuality q = quality_of(beta, pilots, 1e4);
  PowerAllocation a;
  a.rho = Eigen::MatrixXd::Zero(4, 3);
  Eigen::VectorXd sinr = dl_sinr(a, q, ls, pilots, 1e4);
  CHECK(sinr.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("SINR is equivariant under relabeling of APs and users") {
  Eigen::MatrixXd beta = random_beta(3, 3, 21);
  LargeScaleMatrix ls{beta};
  PilotAssignment pilots;
  pilots.num_pilots = 2;
  pilots.pilot_of = {0, 1, 0};  // a contaminated pair exercises the coherent term
  EstimateQuality q = quality_of(beta, pilots, 1e4);
  PowerAllocation a = cdfpt(q);
  const double rho_d = 2e4;
  Eigen::VectorXd sinr = dl_sinr(a, q, ls, pilots, rho_d);

  const std::vector<int> ap_perm = {2, 0, 1};
  const std::vector<int> ue_perm = {1, 2, 0};
  LargeScaleMatrix ls_p;
  ls_p.beta.resize(3, 3);
  EstimateQuality q_p;
  q_p.gamma.resize(3, 3);
  PowerAllocation a_p;
  a_p.rho.resize(3, 3);
  PilotAssignment pilots_p;
  pilots_p.num_pilots = 2;
  pilots_p.pilot_of.resize(3);
  for (int k = 0; k < 3; ++k) {
    pilots_p.pilot_of[k] = pilots.pilot_of[ue_perm[k]];
    for (int l = 0; l < 3; ++l) {
      ls_p.beta(l, k) = ls.beta(ap_perm[l], ue_perm[k]);
      q_p.gamma(l, k) = q.gamma(ap_perm[l], ue_perm[k]);
      a_p.rho(l, k) = a.rho(ap_perm[l], ue_perm[k]);
    }
  }
  Eigen::VectorXd sinr_p = dl_sinr(a_p, q_p, ls_p, pilots_p, rho_d);
  for (int k = 0; k < 3; ++k)
    CHECK(sinr_p[k] == doctest::Approx(sinr[ue_perm[k]]).epsilon(1e-12));
}

TEST_CASE("max-min with one link returns full power") {
  LargeScaleMatrix ls;
  ls.beta.resize(1, 1);
  ls.beta << 1e-5;
  PilotAssignment pilots = orthogonal_pilots(1);
  EstimateQuality q = quality_of(ls.beta, pilots, 1e4);
  const double rho_d = 1e5;
  MaxminOptions opt;
  opt.tol = 1e-5;
  PowerAllocation a = maxmin(q, ls, pilots, rho_d, opt);
  const double g = q.gamma(0, 0);
  const double expect = rho_d * g / (rho_d * ls.beta(0, 0) + 1.0);
  REQUIRE(a.sinr_target.has_value());
  CHECK(*a.sinr_target == doctest::Approx(expect).epsilon(1e-4));
  CHECK(a.rho(0, 0) == doctest::Approx(1.0 / g).epsilon(1e-3));
  a.validate(q);
}

TEST_CASE("max-min equalizes symmetric users") {
  // Identical beta columns with orthogonal pilots: the optimum treats the
  // two users identically.
  Eigen::MatrixXd beta(3, 2);
  beta.col(0) << 3e-5, 8e-6, 1.5e-5;
  beta.col(1) = beta.col(0);
  LargeScaleMatrix ls{beta};
  PilotAssignment pilots = orthogonal_pilots(2);
  EstimateQuality q = quality_of(beta, pilots, 1e4);
  MaxminOptions opt;
  opt.tol = 1e-4;
  PowerAllocation a = maxmin(q, ls, pilots, 1e5, opt);
  Eigen::VectorXd sinr = dl_sinr(a, q, ls, pilots, 1e5);
  CHECK(std::abs(sinr[0] - sinr[1]) <= 5e-3 * sinr.maxCoeff());
  const double p0 = a.rho.col(0).sum();
  const double p1 = a.rho.col(1).sum();
  CHECK(std::abs(p0 - p1) <= 5e-3 * std::max(p0, p1));
  a.validate(q);
}

TEST_CASE("max-min matches the grid-search oracle on 2x2 instances") {
  for (std::uint64_t seed : {1, 2, 3}) {
    Eigen::MatrixXd beta = random_beta(2, 2, seed);
    LargeScaleMatrix ls{beta};
    PilotAssignment pilots = orthogonal_pilots(2);
    EstimateQuality q = quality_of(beta, pilots, 1e4);
    const double rho_d = 1e5;
    MaxminOptions opt;
    opt.tol = 1e-4;
    PowerAllocation a = maxmin(q, ls, pilots, rho_d, opt);
    const double oracle = grid_maxmin_2x2(q, ls, pilots, rho_d);
    REQUIRE(a.sinr_target.has_value());
    CHECK(*a.sinr_target == doctest::Approx(oracle).epsilon(1e-2));
    a.validate(q);
  }
}

TEST_CASE("max-min value is non-decreasing in transmit SNR") {
  Eigen::MatrixXd beta = random_beta(4, 3, 5);
  LargeScaleMatrix ls{beta};
  PilotAssignment pilots = orthogonal_pilots(3);
  EstimateQuality q = quality_of(beta, pilots, 1e4);
  MaxminOptions opt;
  opt.tol = 1e-4;
  double prev = 0.0;
  for (double rho_d : {1e3, 1e4, 1e5}) {
    PowerAllocation a = maxmin(q, ls, pilots, rho_d, opt);
    REQUIRE(a.sinr_target.has_value());
    CHECK(*a.sinr_target >= prev * (1.0 - 3e-4));
    prev = *a.sinr_target;
  }
}

TEST_CASE("max-min value is non-decreasing in a served user's gain") {
  for (std::uint64_t seed : {7, 8, 9}) {
    Eigen::MatrixXd beta = random_beta(2, 2, seed);
    LargeScaleMatrix ls{beta};
    PilotAssignment pilots = orthogonal_pilots(2);
    MaxminOptions opt;
    opt.tol = 1e-4;
    EstimateQuality q = quality_of(beta, pilots, 1e4);
    PowerAllocation before = maxmin(q, ls, pilots, 1e5, opt);

    Eigen::MatrixXd beta_up = beta;
    beta_up(0, 0) *= 1.1;
    LargeScaleMatrix ls_up{beta_up};
    EstimateQuality q_up = quality_of(beta_up, pilots, 1e4);
    PowerAllocation after = maxmin(q_up, ls_up, pilots, 1e5, opt);
    CHECK(*after.sinr_target >= *before.sinr_target * (1.0 - 2e-2));
  }
}

TEST_CASE("max-min honors serving subsets and rejects malformed ones") {
  Eigen::MatrixXd beta = random_beta(4, 2, 13);
  LargeScaleMatrix ls{beta};
  PilotAssignment pilots = orthogonal_pilots(2);
  EstimateQuality q = quality_of(beta, pilots, 1e4);
  MaxminOptions opt;
  opt.tol = 1e-3;
  opt.subsets = {{0, 2}, {1, 3}};
  PowerAllocation a = maxmin(q, ls, pilots, 1e5, opt);
  CHECK(a.rho(1, 0) == 0.0);
  CHECK(a.rho(3, 0) == 0.0);
  CHECK(a.rho(0, 1) == 0.0);
  CHECK(a.rho(2, 1) == 0.0);
  CHECK(a.subsets == opt.subsets);
  a.validate(q);

  MaxminOptions bad;
  bad.subsets = {{0}};
  CHECK_THROWS_AS(maxmin(q, ls, pilots, 1e5, bad), std::invalid_argument);
  bad.subsets = {{0}, {}};
  CHECK_THROWS_AS(maxmin(q, ls, pilots, 1e5, bad), std::invalid_argument);
}

TEST_CASE("received-power selection keeps the documented prefixes") {
  EstimateQuality q;
  q.gamma = Eigen::MatrixXd::Constant(2, 1, 1.0);
  PowerAllocation a;
  a.rho.resize(2, 1);

  // Weights sqrt(rho)*gamma = (0.96, 0.04): one AP already covers 95%.
  a.rho << 0.96 * 0.96, 0.04 * 0.04;
  auto [sel1, rep1] = select_rpb(a, q, 95.0);
  CHECK(sel1.subsets[0] == std::vector<int>({0}));
  CHECK(rep1.per_ue_sizes == std::vector<int>({1}));
  CHECK(rep1.avg_subset_fraction == doctest::Approx(0.5));
  CHECK(sel1.rho(1, 0) == 0.0);
  CHECK(sel1.rho(0, 0) == a.rho(0, 0));

  // Weights (0.9, 0.1): the prefix needs both APs.
  a.rho << 0.81, 0.01;
  auto [sel2, rep2] = select_rpb(a, q, 95.0);
  CHECK(sel2.subsets[0] == std::vector<int>({0, 1}));
  CHECK(rep2.avg_subset_fraction == doctest::Approx(1.0));
}

TEST_CASE("full-alpha selection keeps every contributing AP") {
  EstimateQuality q;
  q.gamma = Eigen::MatrixXd::Constant(3, 1, 1.0);
  PowerAllocation a;
  a.rho.resize(3, 1);
  a.rho << 0.5, 0.25, 0.0;
  auto [sel, rep] = select_rpb(a, q, 100.0);
  CHECK(sel.subsets[0] == std::vector<int>({0, 1}));
  CHECK(rep.per_ue_sizes == std::vector<int>({2}));
  CHECK_THROWS_AS(select_rpb(a, q, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(select_rpb(a, q, 100.5), std::invalid_argument);
}

TEST_CASE("channel-quality selection trims the documented prefix") {
  LargeScaleMatrix ls;
  ls.beta.resize(3, 1);
  ls.beta << 0.5, 0.3, 0.2;
  auto [subsets, rep] = select_cqb(ls, 75.0);
  CHECK(subsets[0] == std::vector<int>({0, 1}));  // 0.8 >= 0.75
  auto [one, rep1] = select_cqb(ls, 1e-6);
  CHECK(one[0] == std::vector<int>({0}));
  CHECK(rep1.per_ue_sizes == std::vector<int>({1}));
}

TEST_CASE("channel-quality subsets grow with alpha") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    LargeScaleMatrix ls{random_beta(12, 3, seed + 100)};
    std::vector<int> prev(3, 0);
    for (double alpha : {20.0, 50.0, 80.0, 95.0, 100.0}) {
      auto [subsets, rep] = select_cqb(ls, alpha);
      for (int k = 0; k < 3; ++k) {
        CHECK(static_cast<int>(subsets[k].size()) >= prev[k]);
        prev[k] = static_cast<int>(subsets[k].size());
      }
    }
  }
}

TEST_CASE("selection after re-optimization at full alpha matches no selection") {
  Eigen::MatrixXd beta = random_beta(5, 3, 42);
  LargeScaleMatrix ls{beta};
  PilotAssignment pilots = orthogonal_pilots(3);
  EstimateQuality q = quality_of(beta, pilots, 1e4);
  MaxminOptions opt;
  opt.tol = 1e-4;
  PowerAllocation full = maxmin(q, ls, pilots, 1e5, opt);
  auto [sel, rep] = select_rpb(full, q, 100.0);
  MaxminOptions re = opt;
  re.subsets = sel.subsets;
  PowerAllocation again = maxmin(q, ls, pilots, 1e5, re);
  CHECK(*again.sinr_target == doctest::Approx(*full.sinr_target).epsilon(1e-3));
}

TEST_CASE("95 percent power subset handles the textbook cases") {
  LargeScaleMatrix one;
  one.beta = Eigen::MatrixXd::Constant(1, 1, 1e-6);
  SelectionReport r1 = power_subset_95(one);
  CHECK(r1.avg_subset_fraction == doctest::Approx(1.0));
  CHECK(r1.per_ue_sizes == std::vector<int>({1}));

  LargeScaleMatrix two;
  two.beta.resize(2, 1);
  two.beta << 19.0, 1.0;  // 19/20 = 95% exactly
  SelectionReport r2 = power_subset_95(two);
  CHECK(r2.per_ue_sizes == std::vector<int>({1}));
}

TEST_CASE("dense deployments need a larger share of APs for 95 percent") {
  auto fraction_for_isd = [](double isd_m) {
    ScenarioConfig c = ScenarioConfig::preset("piazza");
    c.deployment = Deployment::grid;
    c.num_aps = 100;
    c.num_ues = 10;
    c.area_width_m = 10.0 * isd_m;
    c.area_height_m = 10.0 * isd_m;
    c.wrap_around = true;
    c.pathloss.three_slope.shadow_sigma_db = 0.0;
    Layout layout = make_layout(c, 6);
    LargeScaleMatrix ls = large_scale(layout, c, 7);
    return power_subset_95(ls).avg_subset_fraction;
  };
  const double dense = fraction_for_isd(5.0);
  const double sparse = fraction_for_isd(100.0);
  CHECK(dense > sparse);
}
