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

#include "cellfree/performance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "cellfree/csv.hpp"
#include "cellfree/rng.hpp"

namespace cellfree {

SEResult se_closed_form(const PowerAllocation& alloc, const EstimateQuality& quality,
                        const LargeScaleMatrix& ls, const PilotAssignment& pilots, double rho_d,
                        const FrameConfig& frame) {
  const Eigen::VectorXd sinr = dl_sinr(alloc, quality, ls, pilots, rho_d);
  SEResult res;
  res.per_user_se = prelog(frame) * (1.0 + sinr.array()).log() / std::log(2.0);
  return res;
}

SEResult se_monte_carlo(const PowerAllocation& alloc, const LargeScaleMatrix& ls,
                        const PilotAssignment& pilots, const FrameConfig& frame, double rho_d,
                        double rho_p, int draws, std::uint64_t rng_seed,
                        const MonteCarloOptions& options) {
  const Eigen::Index num_aps = ls.beta.rows();
  const Eigen::Index num_ues = ls.beta.cols();
  if (draws < 2) throw std::invalid_argument("se_monte_carlo: need at least 2 draws");
  pilots.validate();
  if (pilots.num_ues() != static_cast<int>(num_ues))
    throw std::invalid_argument("se_monte_carlo: pilot assignment size mismatch");

  const double tp = static_cast<double>(frame.tau_up) * rho_p;
  const Eigen::MatrixXd root_beta = ls.beta.cwiseSqrt();
  const Eigen::MatrixXd sqrt_rho = alloc.rho.cwiseSqrt();

  // MMSE scaling: ghat_lk = coef_lk * (pilot-matched receive signal).
  Eigen::MatrixXd coef(num_aps, num_ues);
  for (Eigen::Index k = 0; k < num_ues; ++k) {
    Eigen::VectorXd den = Eigen::VectorXd::Ones(num_aps);
    for (Eigen::Index j = 0; j < num_ues; ++j)
      if (pilots.same_pilot(static_cast<int>(k), static_cast<int>(j)))
        den += tp * ls.beta.col(j);
    coef.col(k) = std::sqrt(tp) * ls.beta.col(k).cwiseQuotient(den);
  }

  Rng rng(rng_seed);
  Eigen::VectorXcd mean_gain = Eigen::VectorXcd::Zero(num_ues);
  Eigen::VectorXd second_moment = Eigen::VectorXd::Zero(num_ues);
  Eigen::VectorXd cross_power = Eigen::VectorXd::Zero(num_ues);

  Eigen::MatrixXcd g(num_aps, num_ues), ghat(num_aps, num_ues);
  Eigen::MatrixXcd pilot_rx(num_aps, frame.tau_up);
  for (int d = 0; d < draws; ++d) {
    for (Eigen::Index k = 0; k < num_ues; ++k)
      for (Eigen::Index l = 0; l < num_aps; ++l) g(l, k) = root_beta(l, k) * rng.cnormal();
    if (options.perfect_csi) {
      ghat = g;
    } else {
      for (int p = 0; p < frame.tau_up; ++p)
        for (Eigen::Index l = 0; l < num_aps; ++l) pilot_rx(l, p) = rng.cnormal();
      for (Eigen::Index k = 0; k < num_ues; ++k)
        pilot_rx.col(pilots.pilot_of[static_cast<std::size_t>(k)]) += std::sqrt(tp) * g.col(k);
      for (Eigen::Index k = 0; k < num_ues; ++k)
        ghat.col(k) =
            coef.col(k).asDiagonal() * pilot_rx.col(pilots.pilot_of[static_cast<std::size_t>(k)]);
    }
    // gain(j, k) = sum_l sqrt(rho_lj) ghat*_lj g_lk: stream j seen at UE k.
    const Eigen::MatrixXcd w = sqrt_rho.cast<std::complex<double>>().cwiseProduct(ghat);
    const Eigen::MatrixXcd gain = w.adjoint() * g;
    for (Eigen::Index k = 0; k < num_ues; ++k) {
      mean_gain[k] += gain(k, k);
      second_moment[k] += std::norm(gain(k, k));
      double cross = 0.0;
      for (Eigen::Index j = 0; j < num_ues; ++j)
        if (j != k) cross += std::norm(gain(j, k));
      cross_power[k] += cross;
    }
  }
  const double inv_draws = 1.0 / static_cast<double>(draws);
  mean_gain *= inv_draws;
  second_moment *= inv_draws;
  cross_power *= inv_draws;

  SEResult res;
  res.per_user_se.resize(num_ues);
  for (Eigen::Index k = 0; k < num_ues; ++k) {
    const double desired = std::norm(mean_gain[k]);
    const double fluctuation = std::max(0.0, second_moment[k] - desired);
    const double sinr = rho_d * desired / (rho_d * fluctuation + rho_d * cross_power[k] + 1.0);
    res.per_user_se[k] = prelog(frame) * std::log2(1.0 + sinr);
  }
  return res;
}

CdfSummary::CdfSummary(std::vector<double> samples) : sorted_(std::move(samples)) {
  if (sorted_.empty()) throw std::invalid_argument("CdfSummary: no samples");
  std::sort(sorted_.begin(), sorted_.end());
}

double CdfSummary::percentile(double p) const {
  if (p < 0.0 || p > 100.0) throw std::invalid_argument("CdfSummary: percentile out of range");
  const auto n = static_cast<double>(sorted_.size());
  auto idx = static_cast<std::ptrdiff_t>(std::ceil(p / 100.0 * n));
  idx = std::clamp<std::ptrdiff_t>(idx, 1, static_cast<std::ptrdiff_t>(sorted_.size()));
  return sorted_[static_cast<std::size_t>(idx - 1)];
}

double CdfSummary::likely95() const {
  if (sorted_.size() < 20)
    throw std::logic_error("CdfSummary: likely95 needs at least 20 samples");
  return percentile(5.0);
}

void CdfSummary::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("CdfSummary: cannot open " + path);
  out << "value,cumulative_probability\n";
  const auto n = static_cast<double>(sorted_.size());
  for (std::size_t i = 0; i < sorted_.size(); ++i)
    out << fmt_double(sorted_[i]) << ',' << fmt_double(static_cast<double>(i + 1) / n) << '\n';
}

CdfSummary channel_gain_stats(const std::vector<Eigen::VectorXcd>& per_ue_channels,
                              GainMode mode) {
  std::vector<double> gains_db;
  gains_db.reserve(per_ue_channels.size());
  for (const auto& h : per_ue_channels) {
    double gain = 0.0;
    if (mode == GainMode::cellfree) {
      gain = h.squaredNorm();
    } else {
      for (Eigen::Index l = 0; l < h.size(); ++l) gain = std::max(gain, std::norm(h[l]));
    }
    if (!(gain > 0.0)) throw std::invalid_argument("channel_gain_stats: zero channel");
    gains_db.push_back(10.0 * std::log10(gain));
  }
  return CdfSummary(std::move(gains_db));
}

double orthogonality(const Eigen::VectorXcd& h1, const Eigen::VectorXcd& h2) {
  const double n1 = h1.squaredNorm();
  const double n2 = h2.squaredNorm();
  if (!(n1 > 0.0) || !(n2 > 0.0)) throw std::invalid_argument("orthogonality: zero vector");
  return std::norm(h1.dot(h2)) / (n1 * n2);
}

}  // namespace cellfree
