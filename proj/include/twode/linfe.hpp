// Linear fixed-effects deconfounders under the three confounding
// assumptions, with closed-form MSE oracles and a linear plug-in
// policy-value estimator.

#ifndef TWODE_LINFE_HPP
#define TWODE_LINFE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "twode/types.hpp"

namespace twode::linfe {

enum class AssumptionKind { UUC, OWUC, TWUC };

std::string to_string(AssumptionKind kind);
AssumptionKind assumption_from_string(const std::string& name);

enum class RegressionTarget { Reward, NextObs };

// Design for Y = [O A | latent dummies] beta. Rows are (i, t) lexicographic;
// the dummy block is stored implicitly (its pattern is fixed per assumption),
// which keeps the unconstrained design usable at scale. materialize() builds
// the full dense matrix for small systems and tests.
struct DesignSystem {
  AssumptionKind kind = AssumptionKind::TWUC;
  RegressionTarget target = RegressionTarget::Reward;
  int n_traj = 0;
  int n_time = 0;  // time points in this system: T (reward) or T-1 (next obs)
  Eigen::MatrixXd dense;  // rows x 2: observation, action
  Eigen::MatrixXd y;      // rows x n_rhs
  std::vector<std::string> column_map;

  int rows() const { return n_traj * n_time; }
  int n_dummies() const;
  int p() const { return 2 + n_dummies(); }
  int row(int i, int t) const { return i * n_time + t; }
  Eigen::MatrixXd materialize() const;
};

struct LseFit {
  Eigen::MatrixXd beta_hat;  // p x n_rhs (minimum-norm least squares)
  Eigen::MatrixXd fitted;    // rows x n_rhs
  int rank = 0;
  double pinv_tolerance = 0.0;  // singular-value cutoff actually applied
};

// Builds the reward (or per-coordinate next-observation) design. The
// next-observation system keeps rows t = 1..T-1 so all targets stay inside
// the stored grid; its columns cover every observation coordinate at once.
DesignSystem build_design(const Dataset& data, AssumptionKind kind,
                          RegressionTarget target = RegressionTarget::Reward,
                          int max_cells = 4'000'000);

// Minimum-norm least squares. Structured systems route through either an
// exact rank-2 update (UUC, whose dummy block is the identity) or an
// eigendecomposition of the analytically assembled Gram matrix; both agree
// with the dense SVD path below.
LseFit fit_lse(const DesignSystem& system);

// Dense route for arbitrary (small) design matrices: SVD pseudo-inverse
// with cutoff tau = p * eps * sigma_max.
LseFit fit_lse_dense(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

// (1/rows) * || fitted - truth ||^2 against the simulator's conditional
// means, for one right-hand side.
double prediction_mse(const LseFit& fit, const Eigen::VectorXd& truth, int rhs = 0);

// Closed-form MSE predictions: UUC -> sigma2 (constant); TWUC ->
// sigma2*(N+T+2)/(N*T); OWUC -> the asymptotic floor var_w (the finite-T
// floor is computed empirically from the true draws, not by this formula).
double theoretical_mse(AssumptionKind kind, double sigma2, int n, int t, double var_w);

// Latent effect the fit assigns to cell (i, t): z_hat[i,t] (UUC),
// h_hat[i] (OWUC) or u_hat[i] + w_hat[t] (TWUC). For next-observation
// systems t must stay within the system's time range.
double latent_effect(const DesignSystem& system, const LseFit& fit, int rhs,
                     int i, int t);

// Fitted linear environment model: a reward fit plus a next-observation fit
// under one assumption.
struct LinearModel {
  DesignSystem reward_sys;
  LseFit reward_fit;
  DesignSystem obs_sys;
  LseFit obs_fit;
};

LinearModel fit_linear_model(const Dataset& data, AssumptionKind kind);

// Plug-in policy value: Monte Carlo rollout of the fitted linear system
// from the dataset's initial observations with the recovered latent
// effects, averaged over N x T x m.
double linear_ope(const LinearModel& model, const Dataset& data,
                  const PolicySpec& target, int m_rollouts, std::uint64_t seed);

}  // namespace twode::linfe

#endif  // TWODE_LINFE_HPP
