#include "twode/linfe.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "twode/env.hpp"
#include "twode/rng.hpp"

namespace twode::linfe {

std::string to_string(AssumptionKind kind) {
  switch (kind) {
    case AssumptionKind::UUC: return "UUC";
    case AssumptionKind::OWUC: return "OWUC";
    case AssumptionKind::TWUC: return "TWUC";
  }
  return "?";
}

AssumptionKind assumption_from_string(const std::string& name) {
  if (name == "UUC" || name == "uuc") return AssumptionKind::UUC;
  if (name == "OWUC" || name == "owuc") return AssumptionKind::OWUC;
  if (name == "TWUC" || name == "twuc") return AssumptionKind::TWUC;
  throw std::invalid_argument("unknown assumption: " + name);
}

int DesignSystem::n_dummies() const {
  switch (kind) {
    case AssumptionKind::UUC: return rows();
    case AssumptionKind::OWUC: return n_traj;
    case AssumptionKind::TWUC: return n_traj + n_time;
  }
  return 0;
}

Eigen::MatrixXd DesignSystem::materialize() const {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(rows(), p());
  x.leftCols<2>() = dense;
  for (int i = 0; i < n_traj; ++i) {
    for (int t = 0; t < n_time; ++t) {
      const int r = row(i, t);
      switch (kind) {
        case AssumptionKind::UUC:
          x(r, 2 + r) = 1.0;
          break;
        case AssumptionKind::OWUC:
          x(r, 2 + i) = 1.0;
          break;
        case AssumptionKind::TWUC:
          x(r, 2 + i) = 1.0;
          x(r, 2 + n_traj + t) = 1.0;
          break;
      }
    }
  }
  return x;
}

DesignSystem build_design(const Dataset& data, AssumptionKind kind,
                          RegressionTarget target, int max_cells) {
  if (data.obs_dim != 1)
    throw std::invalid_argument("fixed-effects designs require a scalar observation");
  if (data.rewards.size() == 0) throw std::invalid_argument("dataset has no rewards");

  DesignSystem sys;
  sys.kind = kind;
  sys.target = target;
  sys.n_traj = data.n_traj;
  sys.n_time = target == RegressionTarget::Reward ? data.horizon : data.horizon - 1;
  if (sys.n_time < 1) throw std::invalid_argument("horizon too short for this target");
  if (static_cast<long long>(sys.rows()) > max_cells)
    throw std::invalid_argument("design exceeds the configured max problem size");

  sys.dense.resize(sys.rows(), 2);
  sys.y.resize(sys.rows(), 1);
  for (int i = 0; i < sys.n_traj; ++i) {
    for (int t = 0; t < sys.n_time; ++t) {
      const int r = sys.row(i, t);
      const int cell = data.row(i, t);
      sys.dense(r, 0) = data.observations(cell, 0);
      sys.dense(r, 1) = static_cast<double>(data.actions(cell, 0));
      sys.y(r, 0) = target == RegressionTarget::Reward
                        ? data.rewards(cell)
                        : data.next_observations(cell, 0);
    }
  }

  sys.column_map.clear();
  sys.column_map.reserve(sys.p());
  sys.column_map.emplace_back("zeta1");
  sys.column_map.emplace_back("zeta2");
  switch (kind) {
    case AssumptionKind::UUC:
      for (int i = 0; i < sys.n_traj; ++i)
        for (int t = 0; t < sys.n_time; ++t)
          sys.column_map.push_back("z[" + std::to_string(i) + "," + std::to_string(t) + "]");
      break;
    case AssumptionKind::OWUC:
      for (int i = 0; i < sys.n_traj; ++i)
        sys.column_map.push_back("h[" + std::to_string(i) + "]");
      break;
    case AssumptionKind::TWUC:
      for (int i = 0; i < sys.n_traj; ++i)
        sys.column_map.push_back("u[" + std::to_string(i) + "]");
      for (int t = 0; t < sys.n_time; ++t)
        sys.column_map.push_back("w[" + std::to_string(t) + "]");
      break;
  }
  return sys;
}

namespace {

void check_finite(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  if (!x.allFinite() || !y.allFinite())
    throw std::invalid_argument("non-finite entries in X or Y");
}

// UUC: X = [C | I]. The minimum-norm solution has the closed form
// zeta = (I2 + C'C)^{-1} C'y, z = y - C zeta, and the fitted values
// interpolate y exactly because the dummy block spans every row.
LseFit fit_uuc(const DesignSystem& sys) {
  const auto& c = sys.dense;
  const auto& y = sys.y;
  const Eigen::Matrix2d g = Eigen::Matrix2d::Identity() + c.transpose() * c;
  const Eigen::MatrixXd zeta = g.ldlt().solve(c.transpose() * y);
  LseFit fit;
  fit.beta_hat.resize(sys.p(), y.cols());
  fit.beta_hat.topRows(2) = zeta;
  fit.beta_hat.bottomRows(sys.rows()) = y - c * zeta;
  fit.fitted = y;  // algebraic identity: the column space is the full row space
  fit.rank = sys.rows();
  fit.pinv_tolerance = 0.0;
  return fit;
}

// OWUC/TWUC: solve the normal equations through an eigendecomposition of
// the analytically assembled Gram matrix. With the cutoff below this equals
// the minimum-norm SVD solution; the Gram never touches an NT x p product.
LseFit fit_structured(const DesignSystem& sys) {
  const int n = sys.n_traj;
  const int tt = sys.n_time;
  const int p = sys.p();
  const bool twoway = sys.kind == AssumptionKind::TWUC;
  const auto& c = sys.dense;
  const auto& y = sys.y;

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd xty = Eigen::MatrixXd::Zero(p, y.cols());

  gram.topLeftCorner(2, 2) = c.transpose() * c;
  xty.topRows(2) = c.transpose() * y;

  for (int i = 0; i < n; ++i) {
    const Eigen::RowVector2d csum = c.middleRows(i * tt, tt).colwise().sum();
    gram.block(2 + i, 0, 1, 2) = csum;
    gram.block(0, 2 + i, 2, 1) = csum.transpose();
    gram(2 + i, 2 + i) = static_cast<double>(tt);
    xty.row(2 + i) = y.middleRows(i * tt, tt).colwise().sum();
  }
  if (twoway) {
    const int off = 2 + n;
    for (int t = 0; t < tt; ++t) {
      Eigen::RowVector2d csum = Eigen::RowVector2d::Zero();
      Eigen::RowVectorXd ysum = Eigen::RowVectorXd::Zero(y.cols());
      for (int i = 0; i < n; ++i) {
        csum += c.row(i * tt + t);
        ysum += y.row(i * tt + t);
      }
      gram.block(off + t, 0, 1, 2) = csum;
      gram.block(0, off + t, 2, 1) = csum.transpose();
      gram(off + t, off + t) = static_cast<double>(n);
      xty.row(off + t) = ysum;
    }
    // every (i, t) pair occurs exactly once
    gram.block(2, off, n, tt).setOnes();
    gram.block(off, 2, tt, n).setOnes();
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition of the Gram matrix failed");
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double lambda_max = std::max(lambda(p - 1), 0.0);
  const double cutoff = p * std::numeric_limits<double>::epsilon() * lambda_max;

  Eigen::VectorXd inv_lambda = Eigen::VectorXd::Zero(p);
  int rank = 0;
  for (int k = 0; k < p; ++k) {
    if (lambda(k) > cutoff) {
      inv_lambda(k) = 1.0 / lambda(k);
      ++rank;
    }
  }

  LseFit fit;
  fit.beta_hat = eig.eigenvectors() *
                 (inv_lambda.asDiagonal() * (eig.eigenvectors().transpose() * xty));
  fit.rank = rank;
  fit.pinv_tolerance = std::sqrt(cutoff);

  fit.fitted.resize(sys.rows(), y.cols());
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < tt; ++t) {
      const int r = i * tt + t;
      Eigen::RowVectorXd v = c.row(r) * fit.beta_hat.topRows(2);
      v += fit.beta_hat.row(2 + i);
      if (twoway) v += fit.beta_hat.row(2 + n + t);
      fit.fitted.row(r) = v;
    }
  }
  return fit;
}

}  // namespace

LseFit fit_lse(const DesignSystem& sys) {
  if (sys.rows() == 0) throw std::invalid_argument("empty design system");
  check_finite(sys.dense, sys.y);
  if (sys.kind == AssumptionKind::UUC) return fit_uuc(sys);
  return fit_structured(sys);
}

LseFit fit_lse_dense(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  if (x.rows() == 0 || x.cols() == 0) throw std::invalid_argument("empty design matrix");
  if (x.rows() != y.rows()) throw std::invalid_argument("X and Y row mismatch");
  check_finite(x, y);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double tol =
      static_cast<double>(x.cols()) * std::numeric_limits<double>::epsilon() *
      (sv.size() > 0 ? sv(0) : 0.0);

  Eigen::VectorXd inv_sv = Eigen::VectorXd::Zero(sv.size());
  int rank = 0;
  for (int k = 0; k < sv.size(); ++k) {
    if (sv(k) > tol) {
      inv_sv(k) = 1.0 / sv(k);
      ++rank;
    }
  }
  LseFit fit;
  fit.beta_hat = svd.matrixV() * (inv_sv.asDiagonal() * (svd.matrixU().transpose() * y));
  fit.fitted = x * fit.beta_hat;
  fit.rank = rank;
  fit.pinv_tolerance = tol;
  return fit;
}

double prediction_mse(const LseFit& fit, const Eigen::VectorXd& truth, int rhs) {
  if (fit.fitted.rows() != truth.size())
    throw std::invalid_argument("prediction_mse: dimension mismatch");
  return (fit.fitted.col(rhs) - truth).squaredNorm() / static_cast<double>(truth.size());
}

double theoretical_mse(AssumptionKind kind, double sigma2, int n, int t, double var_w) {
  if (sigma2 < 0.0) throw std::invalid_argument("sigma2 must be >= 0");
  switch (kind) {
    case AssumptionKind::UUC:
      return sigma2;
    case AssumptionKind::TWUC:
      return sigma2 * static_cast<double>(n + t + 2) / (static_cast<double>(n) * t);
    case AssumptionKind::OWUC:
      return var_w;
  }
  return 0.0;
}

double latent_effect(const DesignSystem& sys, const LseFit& fit, int rhs, int i, int t) {
  if (i < 0 || i >= sys.n_traj || t < 0 || t >= sys.n_time)
    throw std::out_of_range("latent_effect: cell outside the design");
  switch (sys.kind) {
    case AssumptionKind::UUC:
      return fit.beta_hat(2 + sys.row(i, t), rhs);
    case AssumptionKind::OWUC:
      return fit.beta_hat(2 + i, rhs);
    case AssumptionKind::TWUC:
      return fit.beta_hat(2 + i, rhs) + fit.beta_hat(2 + sys.n_traj + t, rhs);
  }
  return 0.0;
}

LinearModel fit_linear_model(const Dataset& data, AssumptionKind kind) {
  LinearModel model;
  model.reward_sys = build_design(data, kind, RegressionTarget::Reward);
  model.reward_fit = fit_lse(model.reward_sys);
  model.obs_sys = build_design(data, kind, RegressionTarget::NextObs);
  model.obs_fit = fit_lse(model.obs_sys);
  return model;
}

double linear_ope(const LinearModel& model, const Dataset& data,
                  const PolicySpec& target, int m_rollouts, std::uint64_t seed) {
  if (!target.is_target())
    throw std::invalid_argument("linear_ope requires a latent-free target policy");
  if (m_rollouts < 1) throw std::invalid_argument("m_rollouts must be >= 1");

  double p1 = 0.5;
  switch (target.kind) {
    case PolicyKind::TargetRandom: p1 = target.p; break;
    case PolicyKind::TargetA: p1 = 0.3; break;
    case PolicyKind::TargetB: p1 = 0.5; break;
    default:
      throw std::invalid_argument("linear_ope supports binary-action target policies");
  }

  const int n = data.n_traj;
  const int horizon = data.horizon;
  const double zr_o = model.reward_fit.beta_hat(0, 0);
  const double zr_a = model.reward_fit.beta_hat(1, 0);
  const double zo_o = model.obs_fit.beta_hat(0, 0);
  const double zo_a = model.obs_fit.beta_hat(1, 0);

  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    RngStream rng = RngStream::derive(seed, StreamPurpose::Rollout, i);
    for (int run = 0; run < m_rollouts; ++run) {
      double o = data.initial_obs(i, 0);
      for (int t = 0; t < horizon; ++t) {
        const int a = rng.bernoulli(p1);
        total += zr_o * o + zr_a * a +
                 latent_effect(model.reward_sys, model.reward_fit, 0, i, t);
        if (t + 1 < horizon)
          o = zo_o * o + zo_a * a +
              latent_effect(model.obs_sys, model.obs_fit, 0, i, t);
      }
    }
  }
  return total / (static_cast<double>(n) * horizon * m_rollouts);
}

}  // namespace twode::linfe
