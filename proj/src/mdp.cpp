#include "lstdlab/mdp.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace lstdlab {

void MdpInstance::validate() const {
  if (h <= 0) throw std::invalid_argument("MdpInstance: h must be positive");
  if (P.rows() != h || P.cols() != h || R.size() != h || mu.size() != h)
    throw std::invalid_argument("MdpInstance: dimension mismatch");
  require_finite(P, "MdpInstance.P");
  require_finite(R, "MdpInstance.R");
  require_finite(mu, "MdpInstance.mu");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("MdpInstance: gamma must lie strictly in (0,1)");
  if ((P.array() < -Tol::nonneg).any())
    throw std::invalid_argument("MdpInstance: P has negative entries");
  for (int i = 0; i < h; ++i) {
    const double row_sum = P.row(i).sum();
    const bool zero_row = batch && P.row(i).cwiseAbs().maxCoeff() <= Tol::nonneg;
    if (!zero_row && std::abs(row_sum - 1.0) > 1e-10)
      throw std::invalid_argument("MdpInstance: row " + std::to_string(i) +
                                  " of P sums to " + std::to_string(row_sum));
  }
  if ((mu.array() < -Tol::nonneg).any())
    throw std::invalid_argument("MdpInstance: mu has negative entries");
  if (std::abs(mu.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("MdpInstance: mu must sum to 1");
  if (!batch && (mu.array() <= 0.0).any())
    throw std::invalid_argument("MdpInstance: expected-mode instances require mu > 0 (coverage)");
}

FeatureMap FeatureMap::from(Matrix phi) {
  require_finite(phi, "FeatureMap.Phi");
  FeatureMap f;
  f.d = static_cast<int>(phi.cols());
  f.rank = numerical_rank(phi);
  f.full_column_rank = f.rank == phi.cols();
  f.full_row_rank = f.rank == phi.rows();
  f.Phi = std::move(phi);
  return f;
}

MomentSet build_moments(const MdpInstance& mdp, const FeatureMap& features) {
  mdp.validate();
  if (features.Phi.rows() != mdp.h)
    throw std::invalid_argument("build_moments: Phi must have h rows");
  const Matrix d = mdp.D();
  MomentSet m;
  Matrix cov = features.Phi.transpose() * d * features.Phi;
  m.sigma_cov = 0.5 * (cov + cov.transpose());
  m.sigma_cr = features.Phi.transpose() * d * mdp.P * features.Phi;
  m.theta_phi_r = features.Phi.transpose() * d * mdp.R;
  return m;
}

std::pair<MomentSet, MdpInstance> build_empirical(const BatchDataset& dataset,
                                                  const FeatureMap& features, double gamma) {
  if (dataset.samples.empty()) throw std::invalid_argument("build_empirical: empty dataset");
  const int h = static_cast<int>(features.Phi.rows());
  for (const Transition& t : dataset.samples)
    if (t.sa < 0 || t.sa >= h || t.sa_next < 0 || t.sa_next >= h)
      throw std::invalid_argument("build_empirical: feature row missing for an observed pair");

  const int n = static_cast<int>(dataset.samples.size());
  Vector counts = Vector::Zero(h);
  Matrix joint = Matrix::Zero(h, h);
  Vector reward_sum = Vector::Zero(h);
  for (const Transition& t : dataset.samples) {
    counts(t.sa) += 1.0;
    joint(t.sa, t.sa_next) += 1.0;
    reward_sum(t.sa) += t.reward;
  }

  MdpInstance emp;
  emp.h = h;
  emp.gamma = gamma;
  emp.batch = true;
  emp.mu = counts / static_cast<double>(n);
  emp.P = Matrix::Zero(h, h);
  emp.R = Vector::Zero(h);  // unobserved pairs keep reward 0
  for (int i = 0; i < h; ++i) {
    if (counts(i) > 0) {
      emp.P.row(i) = joint.row(i) / counts(i);
      emp.R(i) = reward_sum(i) / counts(i);
    }
  }
  emp.validate();
  return {build_moments(emp, features), emp};
}

bool is_on_policy(const MdpInstance& mdp) {
  mdp.validate();
  return (mdp.mu.transpose() * mdp.P - mdp.mu.transpose()).cwiseAbs().maxCoeff() < 1e-9;
}

DynamicsReport system_dynamics(const MdpInstance& mdp) {
  mdp.validate();
  DynamicsReport rep;
  rep.dynamics = mdp.D() * (Matrix::Identity(mdp.h, mdp.h) - mdp.gamma * mdp.P);
  rep.nonsingular_m_matrix = is_nonsingular_m_matrix(rep.dynamics);
  rep.strictly_diagonally_dominant = true;
  for (int i = 0; i < mdp.h; ++i) {
    double off = 0.0;
    for (int j = 0; j < mdp.h; ++j)
      if (j != i) off += std::abs(rep.dynamics(i, j));
    if (std::abs(rep.dynamics(i, i)) <= off) rep.strictly_diagonally_dominant = false;
  }
  return rep;
}

Vector true_q(const MdpInstance& mdp) {
  mdp.validate();
  const Matrix a = Matrix::Identity(mdp.h, mdp.h) - mdp.gamma * mdp.P;
  return a.partialPivLu().solve(mdp.R);
}

RealizabilityReport check_realizability(const MdpInstance& mdp, const FeatureMap& features) {
  const Vector q = true_q(mdp);
  RealizabilityReport rep;
  rep.theta_min_norm = pseudoinverse(features.Phi) * q;
  rep.residual = (features.Phi * rep.theta_min_norm - q).norm();
  rep.realizable = rep.residual < 1e-8;
  rep.theta_set_basis = kernel_basis(features.Phi);
  return rep;
}

Vector stationary_distribution(const Matrix& P) {
  require_square(P, "stationary_distribution");
  const int h = static_cast<int>(P.rows());
  Vector mu = Vector::Constant(h, 1.0 / h);
  for (int iter = 0; iter < 100000; ++iter) {
    // Damped update keeps periodic chains from oscillating.
    Vector next = 0.5 * (mu + (mu.transpose() * P).transpose());
    next /= next.sum();
    if (((next.transpose() * P).transpose() - next).cwiseAbs().maxCoeff() < 1e-12) return next;
    mu = next;
  }
  throw std::runtime_error("stationary_distribution: power iteration did not converge");
}

}  // namespace lstdlab
