#include "lstdlab/algorithms.hpp"

#include <cmath>
#include <stdexcept>

namespace lstdlab {

namespace {

// alpha sum_{i<t} (I - alpha S)^i through the eigenbasis of the symmetric S.
// On ker(S) the sum is alpha*t; on an eigenvalue s it is (1 - (1-alpha s)^t)/s.
Matrix pfqi_preconditioner(const Matrix& sigma_cov, double alpha, int t) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma_cov);
  const Vector& vals = es.eigenvalues();
  const double smax = vals.cwiseAbs().maxCoeff();
  Vector g(vals.size());
  for (int i = 0; i < vals.size(); ++i) {
    const double s = vals(i);
    if (std::abs(s) <= Tol::rank_rel * std::max(1.0, smax))
      g(i) = alpha * t;
    else
      g(i) = (1.0 - std::pow(1.0 - alpha * s, t)) / s;
  }
  return es.eigenvectors() * g.asDiagonal() * es.eigenvectors().transpose();
}

int default_max_iters(AlgorithmKind kind) {
  return kind == AlgorithmKind::td ? 200000 : 10000;
}

}  // namespace

Vector td_step(const MomentSet& m, double gamma, double alpha, const Vector& theta) {
  const LinearSystem sys = target_system(m, gamma);
  return theta - alpha * (sys.A * theta - sys.b);
}

Vector fqi_step(const MomentSet& m, double gamma, const Vector& theta) {
  const Matrix cov_pinv = pseudoinverse(m.sigma_cov);
  return gamma * cov_pinv * m.sigma_cr * theta + cov_pinv * m.theta_phi_r;
}

Vector pfqi_step_literal(const MomentSet& m, double gamma, double alpha, int t,
                         const Vector& theta_target) {
  if (t < 1) throw std::invalid_argument("pfqi_step_literal: t must be >= 1");
  const Vector drive = alpha * (gamma * m.sigma_cr * theta_target + m.theta_phi_r);
  const int d = static_cast<int>(m.sigma_cov.rows());
  const Matrix inner = Matrix::Identity(d, d) - alpha * m.sigma_cov;
  Vector theta = theta_target;
  for (int i = 0; i < t; ++i) theta = inner * theta + drive;
  return theta;
}

Vector pfqi_step_closed(const MomentSet& m, double gamma, double alpha, int t,
                        const Vector& theta) {
  if (t < 1) throw std::invalid_argument("pfqi_step_closed: t must be >= 1");
  const int d = static_cast<int>(m.sigma_cov.rows());
  const Matrix mp = pfqi_preconditioner(m.sigma_cov, alpha, t);
  const Matrix inner_pow =
      Matrix::Identity(d, d) - mp * m.sigma_cov;  // equals (I - alpha Sigma_cov)^t
  const Vector direct = (mp * gamma * m.sigma_cr + inner_pow) * theta + mp * m.theta_phi_r;

  const LinearSystem sys = target_system(m, gamma);
  const Vector preconditioned = (Matrix::Identity(d, d) - mp * sys.A) * theta + mp * sys.b;
  if ((direct - preconditioned).norm() > 1e-9 * std::max(1.0, direct.norm()))
    throw std::runtime_error("pfqi_step_closed: the two affine forms disagree");
  return preconditioned;
}

Matrix preconditioner(AlgorithmKind kind, const MomentSet& m, double alpha, int t) {
  const int d = static_cast<int>(m.sigma_cov.rows());
  switch (kind) {
    case AlgorithmKind::td:
      return alpha * Matrix::Identity(d, d);
    case AlgorithmKind::fqi:
      return pseudoinverse(m.sigma_cov);
    case AlgorithmKind::pfqi:
      return pfqi_preconditioner(m.sigma_cov, alpha, t);
  }
  throw std::logic_error("preconditioner: unknown kind");
}

AffineMap algorithm_map(const MomentSet& m, double gamma, const AlgorithmConfig& config) {
  const int d = static_cast<int>(m.sigma_cov.rows());
  AffineMap map;
  switch (config.kind) {
    case AlgorithmKind::td: {
      const LinearSystem sys = target_system(m, gamma);
      map.H = Matrix::Identity(d, d) - config.alpha * sys.A;
      map.c = config.alpha * sys.b;
      break;
    }
    case AlgorithmKind::fqi: {
      const Matrix cov_pinv = pseudoinverse(m.sigma_cov);
      map.H = gamma * cov_pinv * m.sigma_cr;
      map.c = cov_pinv * m.theta_phi_r;
      break;
    }
    case AlgorithmKind::pfqi: {
      const LinearSystem sys = target_system(m, gamma);
      const Matrix mp = pfqi_preconditioner(m.sigma_cov, config.alpha, config.t);
      map.H = Matrix::Identity(d, d) - mp * sys.A;
      map.c = mp * sys.b;
      break;
    }
  }
  return map;
}

IterationTrace run(const MomentSet& m, double gamma, const AlgorithmConfig& config,
                   const RunLimits& limits) {
  const int d = static_cast<int>(m.sigma_cov.rows());
  if (config.kind != AlgorithmKind::fqi && !(config.alpha > 0.0))
    throw std::invalid_argument("run: alpha must be positive for TD/PFQI");
  if (config.kind == AlgorithmKind::pfqi && config.t < 1)
    throw std::invalid_argument("run: t must be >= 1 for PFQI");

  const LinearSystem target = target_system(m, gamma);
  const int max_iters = limits.max_iters > 0 ? limits.max_iters : default_max_iters(config.kind);

  // The literal PFQI loop and the closed form are property-tested equal; the
  // closed form keeps long-t runs cheap.
  const bool literal_pfqi = config.kind == AlgorithmKind::pfqi && config.t <= 64;
  AffineMap map;
  if (!literal_pfqi) map = algorithm_map(m, gamma, config);

  IterationTrace trace;
  Vector theta = config.theta0.size() == d ? config.theta0 : Vector::Zero(d);
  if (config.theta0.size() != 0 && config.theta0.size() != d)
    throw std::invalid_argument("run: theta0 has the wrong dimension");
  const int record_every = std::max(1, limits.record_every);
  trace.iterates.push_back(theta);
  trace.residuals.push_back((target.A * theta - target.b).norm());

  int quiet_steps = 0;
  double min_step = std::numeric_limits<double>::infinity();
  for (int k = 0; k < max_iters; ++k) {
    Vector next = literal_pfqi
                      ? pfqi_step_literal(m, gamma, config.alpha, config.t, theta)
                      : map.apply(theta);
    const double step = (next - theta).norm();
    theta = next;
    trace.step_norms.push_back(step);
    if ((k + 1) % record_every == 0 || k + 1 == max_iters) {
      trace.iterates.push_back(theta);
      trace.residuals.push_back((target.A * theta - target.b).norm());
    }

    if (!theta.allFinite() || theta.cwiseAbs().maxCoeff() > limits.blowup) {
      trace.status = RunStatus::diverged;
      return trace;
    }
    min_step = std::min(min_step, step);
    // Sustained growth of the step size flags slow geometric divergence long
    // before the iterate norm reaches the blow-up bound.
    if (min_step > 0.0 && step > 1e8 * min_step && step > 1.0) {
      trace.status = RunStatus::diverged;
      return trace;
    }
    quiet_steps = step < limits.tol ? quiet_steps + 1 : 0;
    if (quiet_steps >= 5) {
      trace.status = RunStatus::converged;
      trace.limit = theta;
      return trace;
    }
  }
  trace.status = RunStatus::max_iters;
  return trace;
}

}  // namespace lstdlab
