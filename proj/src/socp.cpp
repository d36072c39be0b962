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

#include "cellfree/socp.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <utility>

namespace cellfree {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Near-center gate for the duality-gap certificates: lambda <= 1/4, i.e.
// half the squared Newton decrement at most 1/32. Inside this region the
// barrier analysis bounds the true optimum by m + 2 n_con / tau.
constexpr double kCenterGate = 1.0 / 32.0;

// Barrier state for the margin maximization
//   max m  s.t.  sqrt(rho_d) s_k - sqrt(t) nu_k >= m,  P_l <= 1,  u >= 0,
// where s_k = sum_l u_lk sqrt(gamma_lk), P_l = sum_k u_lk^2 and
// nu_k^2 = 1 + rho_d sum_l beta_lk P_l + rho_d sum_{j copilot} p_kj^2 with
// p_kj = sum_l u_lj sqrt(gamma_lj) beta_lk / beta_lj. nu_k equals the square
// root of the full interference-plus-noise power, so SINR_k = rho_d s_k^2 /
// nu_k^2 and the cone constraint is exactly SINR_k >= t once m reaches 0.
//
// Each cone is handled through its canonical barrier
//   -ln((y_k - sqrt(t) nu_k)(y_k + sqrt(t) nu_k)) = -ln(c-_k) - ln(c+_k),
// y_k = sqrt(rho_d) s_k - m, which is self-concordant; the one-sided variant
// -ln(c-) alone is not, and damped Newton then loses its guaranteed decrease
// exactly on the large deeply-infeasible instances that need it most.
struct Engine {
  const Eigen::MatrixXd& gamma;
  const Eigen::MatrixXd& beta;
  double rho_d;
  double target;
  Eigen::Index L;
  Eigen::Index K;

  Eigen::MatrixXd sg;      // sqrt(gamma), zero off the active set
  Eigen::MatrixXd active;  // 1.0 on serving pairs, else 0.0
  Eigen::MatrixXd ubar;    // 1.0 where the sign barrier -ln(u) applies
  std::vector<std::vector<int>> cop;  // co-pilot lists, self excluded
  double sq_rho;  // sqrt(rho_d)
  double sq_t;    // sqrt(target)
  int n_con = 0;  // barrier parameter for the duality gap bound

  // Current iterate.
  Eigen::MatrixXd u;
  double m = 0.0;

  // Derived quantities, refreshed by eval().
  Eigen::VectorXd P, a;           // per AP
  Eigen::VectorXd s, nu, raw;     // per UE; raw = sqrt(rho_d) s - sqrt(t) nu
  Eigen::VectorXd cm, cp;         // cone slacks raw - m and raw - m + 2 sqrt(t) nu
  Eigen::MatrixXd p;              // K x K, co-pilot coherent terms
  double F = kInf;
  bool ok = false;

  Engine(const MarginProblem& prob)
      : gamma(*prob.gamma),
        beta(*prob.beta),
        rho_d(prob.rho_d),
        target(prob.target),
        L(prob.gamma->rows()),
        K(prob.gamma->cols()) {
    sq_rho = std::sqrt(rho_d);
    sq_t = std::sqrt(target);
    active = Eigen::MatrixXd::Ones(L, K);
    if (prob.subsets != nullptr && !prob.subsets->empty()) {
      active.setZero();
      for (Eigen::Index k = 0; k < K; ++k)
        for (int l : (*prob.subsets)[static_cast<std::size_t>(k)]) active(l, k) = 1.0;
    }
    sg = (gamma.array().sqrt() * active.array()).matrix();
    cop = prob.pilots->copilots();
    // Sign constraints are only binding where pilot contamination couples a
    // UE into other cones: without co-pilots, u_lk -> |u_lk| raises s_k and
    // changes nothing else, so dropping -ln(u) there is an exact relaxation
    // that removes the dominant share of the barrier parameter (and with it
    // the Newton phase-1 bill). rho = u^2 / gamma is sign-blind anyway.
    ubar = active;
    for (Eigen::Index k = 0; k < K; ++k)
      if (cop[static_cast<std::size_t>(k)].empty()) ubar.col(k).setZero();
    n_con = 2 * static_cast<int>(K) + static_cast<int>(L) + static_cast<int>(ubar.sum());
  }

  // Recomputes the derived state; ok=false when a barrier argument is not
  // strictly positive (used as the +inf return of the merit function).
  void eval(double tau) {
    P = u.array().square().matrix().rowwise().sum();
    a = (1.0 - P.array()).matrix();
    s = (u.array() * sg.array()).colwise().sum();
    if (p.rows() != K) p = Eigen::MatrixXd::Zero(K, K);
    nu.resize(K);
    raw.resize(K);
    for (Eigen::Index k = 0; k < K; ++k) {
      double contamination = 0.0;
      for (int j : cop[static_cast<std::size_t>(k)]) {
        const double pkj =
            (u.col(j).array() * sg.col(j).array() * beta.col(k).array() / beta.col(j).array())
                .sum();
        p(k, j) = pkj;
        contamination += pkj * pkj;
      }
      const double nu2 = 1.0 + rho_d * beta.col(k).dot(P) + rho_d * contamination;
      nu[k] = std::sqrt(nu2);
      raw[k] = sq_rho * s[k] - sq_t * nu[k];
    }
    cm = (raw.array() - m).matrix();
    cp = (cm.array() + 2.0 * sq_t * nu.array()).matrix();
    ok = (a.array() > 0.0).all() && (cm.array() > 0.0).all();
    if (!ok) return;
    double barrier = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) barrier += std::log(cm[k]) + std::log(cp[k]);
    for (Eigen::Index l = 0; l < L; ++l) barrier += std::log(a[l]);
    for (Eigen::Index k = 0; k < K; ++k)
      for (Eigen::Index l = 0; l < L; ++l)
        if (ubar(l, k) != 0.0) {
          if (!(u(l, k) > 0.0)) {
            ok = false;
            return;
          }
          barrier += std::log(u(l, k));
        }
    F = -tau * m - barrier;
    if (!std::isfinite(F)) ok = false;
  }

  // Coherent gains may run negative while the sign barrier is relaxed; such
  // points never witness feasibility, so clamp instead of squaring them away.
  double min_sinr() const {
    double worst = kInf;
    for (Eigen::Index k = 0; k < K; ++k) {
      const double sk = s[k] > 0.0 ? s[k] : 0.0;
      worst = std::min(worst, rho_d * sk * sk / (nu[k] * nu[k]));
    }
    return worst;
  }

  // Recenters the margin variable at fixed u: minimizes
  // -tau m - sum_k [ln(raw_k - m) + ln(raw_k + 2 sqrt(t) nu_k - m)] over
  // m < min raw (no other barrier term depends on m). Safeguarded 1-D Newton
  // on the increasing derivative; keeps the iterate on the conditional center
  // so the joint Newton direction only has to move u, which removes the slow
  // margin crawl through the coupled system.
  void recenter_m(double tau) {
    const double hi = raw.minCoeff();
    double x = m;
    if (!(x < hi)) x = hi - 1e-6 * (1.0 + std::abs(hi));
    for (int it = 0; it < 80; ++it) {
      double g = -tau, h = 0.0;
      for (Eigen::Index k = 0; k < K; ++k) {
        const double ckm = raw[k] - x;
        const double ckp = ckm + 2.0 * sq_t * nu[k];
        g += 1.0 / ckm + 1.0 / ckp;
        h += 1.0 / (ckm * ckm) + 1.0 / (ckp * ckp);
      }
      double x_new = x - g / h;
      if (!(x_new < hi)) x_new = 0.5 * (x + hi);
      const bool done = std::abs(x_new - x) <= 1e-12 * (1.0 + std::abs(x));
      x = x_new;
      if (done) break;
    }
    m = x;
    eval(tau);
  }
};

}  // namespace

MarginSolution solve_margin(const MarginProblem& problem, const Eigen::MatrixXd* warm_start,
                            const MarginSolverOptions& options) {
  if (problem.gamma == nullptr || problem.beta == nullptr || problem.pilots == nullptr)
    throw std::invalid_argument("solve_margin: problem matrices not set");
  if (!(problem.target > 0.0) || !(problem.rho_d > 0.0))
    throw std::invalid_argument("solve_margin: target and rho_d must be positive");

  Engine eng(problem);
  const Eigen::Index L = eng.L;
  const Eigen::Index K = eng.K;
  const Eigen::Index n = L * K;

  // Strictly interior start: positive entries on the active set, AP loads
  // bounded away from 1, margin variable below the worst cone slack.
  if (warm_start != nullptr && warm_start->rows() == L && warm_start->cols() == K) {
    eng.u = (warm_start->array() * eng.active.array()).matrix();
  } else {
    eng.u = eng.active / std::sqrt(static_cast<double>(K) + 1.0);
  }
  double floor_val = 1e-8 * std::max(1e-12, eng.u.maxCoeff());
  for (Eigen::Index k = 0; k < K; ++k)
    for (Eigen::Index l = 0; l < L; ++l)
      if (eng.active(l, k) != 0.0 && eng.u(l, k) < floor_val) eng.u(l, k) = floor_val;
  {
    const double max_load = eng.u.array().square().matrix().rowwise().sum().maxCoeff();
    if (max_load > 1.0 - 1e-6) eng.u *= std::sqrt((1.0 - 1e-3) / max_load);
  }

  // Target-aware start: a warm start tuned for a reachable target carries
  // near-full AP loads, and against a hopeless target its interference term
  // sqrt(t) nu dwarfs everything, parking the start millions below the
  // attainable margin. Scanning a log grid of global scalings and keeping the
  // one with the best worst cone slack costs a few dozen cheap evaluations
  // and removes that phase-1 bill; c = 1 wins whenever the warm start already
  // fits the target.
  {
    const Eigen::MatrixXd base_u = eng.u;
    eng.eval(options.tau0);
    double best_c = 1.0;
    double best_raw = eng.raw.allFinite() ? eng.raw.minCoeff() : -kInf;
    for (double log_c = -0.25; log_c > -6.0; log_c -= 0.25) {
      const double c = std::pow(10.0, log_c);
      eng.u = base_u * c;
      eng.eval(options.tau0);
      if (!eng.raw.allFinite()) continue;
      const double worst = eng.raw.minCoeff();
      if (worst > best_raw) {
        best_raw = worst;
        best_c = c;
      }
    }
    eng.u = base_u * best_c;
  }

  eng.m = 0.0;
  eng.eval(options.tau0);
  if (!eng.raw.allFinite() || !(eng.a.array() > 0.0).all())
    throw std::runtime_error("solve_margin: start point not interior");

  MarginSolution sol;
  sol.u = eng.u;
  sol.margin = eng.m;

  // A start that already clears the target settles the probe outright.
  if (eng.min_sinr() >= eng.target * (1.0 - 1e-9)) {
    sol.feasible = true;
    return sol;
  }

  // Match the initial barrier weight to where the start sits on the path:
  // the certificates resolve once the gap n_con / tau drops under the margin
  // scale, and |min raw| estimates that scale. A warm start handed down from
  // a neighbouring target then begins at the weight whose center it already
  // hugs, instead of being dragged to the spread-out tau = 1 center and
  // paying the climb back out over the following stages.
  double tau = options.tau0;
  {
    const double depth = -eng.raw.minCoeff();
    if (depth > 0.0)
      tau = std::min(1e6, std::max(options.tau0, static_cast<double>(eng.n_con) / depth));
  }
  {
    const double lo = eng.raw.minCoeff();
    eng.m = lo - 1e-3 * (1.0 + std::abs(lo));
    eng.recenter_m(tau);
    if (!eng.ok) throw std::runtime_error("solve_margin: margin init failed");
  }

  auto finish = [&](bool feasible) {
    sol.feasible = feasible;
    sol.u = eng.u;
    sol.margin = eng.m;
    return sol;
  };

  using Map = Eigen::Map<const Eigen::VectorXd>;
  using MapMut = Eigen::Map<Eigen::VectorXd>;

  const bool trace = std::getenv("CELLFREE_SOCP_TRACE") != nullptr;
  const int budget = options.max_stages * options.max_newton_per_stage;

  // The growth factor starts small so an infeasibility certificate sitting
  // one modest bump away (where the adaptive tau0 parks it) is reached
  // cheaply, then accelerates so barely-feasible targets still climb to the
  // weight whose center clears them without grinding through many stages.
  double bump = options.mu;

  for (int stage = 0; stage < options.max_stages; ++stage) {
    // Newton decrement at the point the stage ends on; kInf until a direction
    // has been computed there, so aborted stages never look centered.
    double stage_lambda2 = kInf;
    for (int iter = 0; sol.newton_steps < budget; ++iter) {
      ++sol.newton_steps;
      stage_lambda2 = kInf;

      // Per-UE weights shared by the gradient and Hessian pieces. The two
      // cone logs enter through the sum and difference of their inverse
      // slacks: ek = 1/c- + 1/c+ multiplies the coherent-gain gradient,
      // dk = 1/c- - 1/c+ > 0 multiplies everything that came through nu.
      Eigen::VectorXd inv_cm = eng.cm.cwiseInverse();
      Eigen::VectorXd inv_cp = eng.cp.cwiseInverse();
      Eigen::VectorXd ek = inv_cm + inv_cp;
      Eigen::VectorXd dk = inv_cm - inv_cp;
      Eigen::VectorXd e = (dk.array() / eng.nu.array()).matrix();
      Eigen::VectorXd be = eng.beta * e;  // (beta e)_l

      // Co-pilot coupling shared across gradient and Woodbury columns.
      Eigen::MatrixXd copcol = Eigen::MatrixXd::Zero(L, K);
      int n_pairs = 0;
      for (Eigen::Index k = 0; k < K; ++k)
        for (int j : eng.cop[static_cast<std::size_t>(k)]) {
          copcol.col(j) += e[k] * eng.p(k, j) *
                           (eng.beta.col(k).array() / eng.beta.col(j).array()).matrix();
          ++n_pairs;
        }

      // Gradient over u (inactive coordinates stay zero) and the diagonal of
      // the Hessian base.
      Eigen::MatrixXd g_u(L, K), diag(L, K);
      for (Eigen::Index k = 0; k < K; ++k) {
        for (Eigen::Index l = 0; l < L; ++l) {
          if (eng.active(l, k) == 0.0) {
            g_u(l, k) = 0.0;
            diag(l, k) = 1.0;
            continue;
          }
          const double ulk = eng.u(l, k);
          const double w_l = eng.sq_t * eng.rho_d * be[l];
          g_u(l, k) = -eng.sq_rho * eng.sg(l, k) * ek[k] +
                      eng.sq_t * eng.rho_d * ulk * be[l] +
                      eng.sq_t * eng.rho_d * eng.sg(l, k) * copcol(l, k) +
                      2.0 * ulk / eng.a[l];
          diag(l, k) = 2.0 / eng.a[l] + w_l;
          if (eng.ubar(l, k) != 0.0) {
            g_u(l, k) -= 1.0 / ulk;
            diag(l, k) += 1.0 / (ulk * ulk);
          }
        }
      }
      const double g_m = ek.sum() - tau;

      // Hessian split: H_u = H0 + G G^T where G holds one column per cone
      // slack, grad(c-_k)/c-_k and grad(c+_k)/c+_k, and
      // H0 = B + sum_k sqrt(t) dk_k hess(nu_k) is positive definite. The
      // margin blocks of the bordered system are exactly h_um = -G v,
      // h_mm = v^T v with v = (1/c-; 1/c+), so the margin pivot equals
      // v^T (I + G^T H0^{-1} G)^{-1} v, a positive quadratic form of a
      // 2K x 2K SPD matrix. Forming it as h_mm - h_um^T H_u^{-1} h_um
      // instead cancels catastrophically once the cone columns dominate the
      // base and the roundoff flips its sign.
      //
      // B = diag + sum_l (4/a_l^2) u_l u_l^T is inverted per AP row by
      // Sherman-Morrison; hess(nu_k) contributes a diagonal piece (folded into
      // diag above), one downdate column Q_k (weight -sqrt(t) dk_k / nu_k^3)
      // and one column phi_kj per co-pilot (weight +sqrt(t) rho_d e_k).
      // Columns are scaled by sqrt(|weight|) so the Woodbury core keeps signs.
      Eigen::MatrixXd dinv = diag.cwiseInverse();
      Eigen::MatrixXd dinvu = (dinv.array() * eng.u.array()).matrix();
      Eigen::VectorXd sigma = (4.0 / eng.a.array().square()).matrix();
      Eigen::VectorXd denom =
          (1.0 + sigma.array() * (eng.u.array() * dinvu.array()).rowwise().sum()).matrix();
      auto apply_binv = [&](const Eigen::MatrixXd& x) {
        Eigen::MatrixXd y = (dinv.array() * x.array()).matrix();
        Eigen::VectorXd dot = (eng.u.array() * y.array()).rowwise().sum();
        y -= ((sigma.array() * dot.array() / denom.array()).matrix()).asDiagonal() * dinvu;
        return y;
      };
      auto apply_b = [&](const Eigen::MatrixXd& x) {
        Eigen::MatrixXd y = (diag.array() * x.array()).matrix();
        Eigen::VectorXd dot = (eng.u.array() * x.array()).rowwise().sum();
        y += ((sigma.array() * dot.array()).matrix()).asDiagonal() * eng.u;
        return y;
      };

      const int r0 = static_cast<int>(K) + n_pairs;
      const int rg = 2 * static_cast<int>(K);
      Eigen::MatrixXd U0(n, r0);
      Eigen::VectorXd sign0(r0);
      Eigen::MatrixXd G(n, rg);
      Eigen::VectorXd v(rg);
      int col = 0;
      Eigen::MatrixXd qk(L, K), gck(L, K);
      for (Eigen::Index k = 0; k < K; ++k) {
        qk = eng.rho_d * (eng.u.array().colwise() * eng.beta.col(k).array()).matrix();
        for (int j : eng.cop[static_cast<std::size_t>(k)])
          qk.col(j) += eng.rho_d * eng.p(k, j) *
                       (eng.sg.col(j).array() * eng.beta.col(k).array() /
                        eng.beta.col(j).array())
                           .matrix();
        // grad c-: sqrt(rho) sg e_k-col minus sqrt(t) q / nu; grad c+ flips
        // the nu part's sign.
        gck = -(eng.sq_t / eng.nu[k]) * qk;
        gck.col(k) += eng.sq_rho * eng.sg.col(k);
        G.col(static_cast<int>(k)) = Map(gck.data(), n) * inv_cm[k];
        v[static_cast<int>(k)] = inv_cm[k];
        gck += (2.0 * eng.sq_t / eng.nu[k]) * qk;
        G.col(static_cast<int>(K + k)) = Map(gck.data(), n) * inv_cp[k];
        v[static_cast<int>(K + k)] = inv_cp[k];

        const double wq = eng.sq_t * dk[k] / (eng.nu[k] * eng.nu[k] * eng.nu[k]);
        U0.col(col) = Map(qk.data(), n) * std::sqrt(wq);
        sign0[col++] = -1.0;
        for (int j : eng.cop[static_cast<std::size_t>(k)]) {
          Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(L, K);
          phi.col(j) = (eng.sg.col(j).array() * eng.beta.col(k).array() /
                        eng.beta.col(j).array())
                           .matrix();
          const double wp = eng.sq_t * eng.rho_d * e[k];
          U0.col(col) = Map(phi.data(), n) * std::sqrt(wp);
          sign0[col++] = 1.0;
        }
      }

      Eigen::MatrixXd BU0(n, r0);
      for (int i = 0; i < r0; ++i) {
        Eigen::MatrixXd xm = Eigen::Map<const Eigen::MatrixXd>(U0.col(i).data(), L, K);
        Eigen::MatrixXd ym = apply_binv(xm);
        BU0.col(i) = Map(ym.data(), n);
      }
      Eigen::MatrixXd core0 = U0.transpose() * BU0;
      core0 += sign0.asDiagonal();
      Eigen::PartialPivLU<Eigen::MatrixXd> lu0(core0);
      auto solve_h0_once = [&](const Eigen::VectorXd& rhs) {
        Eigen::MatrixXd rm = Eigen::Map<const Eigen::MatrixXd>(rhs.data(), L, K);
        Eigen::MatrixXd zm = apply_binv(rm);
        Eigen::VectorXd z = Map(zm.data(), n);
        z -= BU0 * lu0.solve(U0.transpose() * z);
        return z;
      };
      auto apply_h0 = [&](const Eigen::VectorXd& x) {
        Eigen::MatrixXd xm = Eigen::Map<const Eigen::MatrixXd>(x.data(), L, K);
        Eigen::MatrixXd ym = apply_b(xm);
        Eigen::VectorXd yv = Map(ym.data(), n);
        yv += U0 * (sign0.asDiagonal() * (U0.transpose() * x));
        return yv;
      };
      auto solve_h0 = [&](const Eigen::VectorXd& rhs) {
        // One refinement pass: the downdate columns can shave digits.
        Eigen::VectorXd z = solve_h0_once(rhs);
        z += solve_h0_once(rhs - apply_h0(z));
        return z;
      };

      Eigen::VectorXd gu_vec = Map(g_u.data(), n);
      Eigen::VectorXd x0 = solve_h0(gu_vec);

      // Only the gradient solve carries a refinement pass; the cone columns
      // feed a Cholesky-regularized core where a digit of drift is harmless.
      Eigen::MatrixXd zg(n, rg);
      for (int i = 0; i < rg; ++i) zg.col(i) = solve_h0_once(G.col(i));
      Eigen::MatrixXd cone = G.transpose() * zg;
      cone += Eigen::MatrixXd::Identity(rg, rg);
      cone = (0.5 * (cone + cone.transpose())).eval();
      Eigen::LLT<Eigen::MatrixXd> llt(cone);
      if (llt.info() != Eigen::Success) {
        cone.diagonal().array() += 1e-10 * (1.0 + cone.trace() / static_cast<double>(rg));
        llt.compute(cone);
        if (llt.info() != Eigen::Success) break;
      }
      Eigen::VectorXd minv_b = llt.solve(-(G.transpose() * x0));
      Eigen::VectorXd minv_v = llt.solve(v);
      const double schur = v.dot(minv_v);
      if (!(schur > 0.0)) break;
      const double dm = (v.dot(minv_b) - g_m) / schur;
      Eigen::VectorXd w = minv_b - dm * minv_v;
      Eigen::VectorXd du = -(x0 + zg * w);

      double lambda2 = -(gu_vec.dot(du) + g_m * dm);
      if (lambda2 < 0.0) lambda2 = 0.0;
      stage_lambda2 = lambda2;
      if (0.5 * lambda2 < options.newton_tol) break;

      // Damped Newton step: above the quadratic-convergence region a full
      // step keeps the decrement from contracting (the iterate rides the
      // curved valley of the central path), so start from 1/(1+lambda).
      // The ratio test only guards u > 0; the remaining barriers reject
      // through the merit value turning infinite.
      const double lambda = std::sqrt(lambda2);
      double alpha = lambda > 0.25 ? 1.0 / (1.0 + lambda) : 1.0;
      {
        Eigen::Map<const Eigen::MatrixXd> dum(du.data(), L, K);
        for (Eigen::Index k = 0; k < K; ++k)
          for (Eigen::Index l = 0; l < L; ++l)
            if (eng.ubar(l, k) != 0.0 && dum(l, k) < 0.0)
              alpha = std::min(alpha, -0.99 * eng.u(l, k) / dum(l, k));
      }
      const Eigen::MatrixXd u_old = eng.u;
      const double m_old = eng.m;
      const double f_old = eng.F;
      bool accepted = false;
      for (int bt = 0; bt < 60; ++bt) {
        MapMut(eng.u.data(), n) = Map(u_old.data(), n) + alpha * du;
        eng.m = m_old + alpha * dm;
        eng.eval(tau);
        if (eng.ok && eng.F <= f_old - 0.01 * alpha * lambda2) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (trace)
        std::fprintf(stderr,
                     "[socp] stage=%d tau=%.3e iter=%d m=%+.6e lam2=%.3e alpha=%.3e schur=%.3e%s\n",
                     stage, tau, iter, eng.m, lambda2, alpha, schur, accepted ? "" : " STALL");
      if (!accepted) {
        eng.u = u_old;
        eng.m = m_old;
        eng.eval(tau);
        break;
      }
      eng.recenter_m(tau);
      // The u iterate witnesses feasibility on its own; m can lag below zero
      // while the allocation already clears the target.
      if (eng.min_sinr() >= eng.target * (1.0 - 1e-9)) return finish(true);
    }

    const double gap = static_cast<double>(eng.n_con) / tau;
    if (eng.min_sinr() >= eng.target * (1.0 - 1e-9)) return finish(true);
    // The duality bound m* <= m + 2 gap only holds near the stage center, so
    // a stage that stalled before centering must not certify infeasibility.
    if (0.5 * stage_lambda2 <= kCenterGate) {
      if (eng.m + 2.0 * gap < 0.0) return finish(false);
      const double scale = 1.0 + std::abs(eng.m) + eng.raw.cwiseAbs().maxCoeff();
      if (gap < options.gap_rel * scale) return finish(false);
    }
    if (sol.newton_steps >= budget) break;
    tau *= bump;
    bump = std::min(options.mu_max, bump * options.mu_growth);
    eng.recenter_m(tau);  // also refreshes F for the new weight
  }
  return finish(false);
}

}  // namespace cellfree
