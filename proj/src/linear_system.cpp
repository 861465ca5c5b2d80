#include "lstdlab/linear_system.hpp"

#include <stdexcept>

namespace lstdlab {

LinearSystem target_system(const MomentSet& m, double gamma) {
  LinearSystem sys;
  sys.A = m.sigma_cov - gamma * m.sigma_cr;
  sys.b = m.theta_phi_r;
  sys.role = SystemRole::target;
  return sys;
}

LinearSystem fqi_system(const MomentSet& m, double gamma) {
  const int d = static_cast<int>(m.sigma_cov.rows());
  const Matrix cov_pinv = pseudoinverse(m.sigma_cov);
  LinearSystem sys;
  sys.A = Matrix::Identity(d, d) - gamma * cov_pinv * m.sigma_cr;
  sys.b = cov_pinv * m.theta_phi_r;
  sys.role = SystemRole::fqi;

  const LinearSystem target = target_system(m, gamma);
  const double scale = std::max(1.0, m.sigma_cov.norm());
  if ((m.sigma_cov * sys.A - target.A).norm() > 1e-9 * scale ||
      (m.sigma_cov * sys.b - target.b).norm() > 1e-9 * scale)
    throw std::runtime_error("fqi_system: projection identity violated");
  return sys;
}

bool check_consistency(const LinearSystem& sys) { return in_column_space(sys.A, sys.b); }

RankInvarianceReport check_rank_invariance(const MomentSet& m, const FeatureMap& features,
                                           const MdpInstance& mdp) {
  const Matrix a = target_system(m, mdp.gamma).A;
  RankInvarianceReport rep;
  rep.rank_cov_equals_rank_target = numerical_rank(m.sigma_cov) == numerical_rank(a);
  rep.col_cov_equals_col_target = same_column_space(m.sigma_cov, a);
  rep.ker_phi_equals_ker_target = same_kernel(features.Phi, a);

  const Matrix dynamics_phi =
      mdp.D() * (Matrix::Identity(mdp.h, mdp.h) - mdp.gamma * mdp.P) * features.Phi;
  const Matrix left_kernel = kernel_basis(features.Phi.transpose());
  if (left_kernel.cols() == 0) {
    rep.trivial_intersection = true;
  } else {
    Matrix joint(mdp.h, left_kernel.cols() + dynamics_phi.cols());
    joint << left_kernel, dynamics_phi;
    const int dim_sum = static_cast<int>(left_kernel.cols()) + numerical_rank(dynamics_phi);
    rep.trivial_intersection = numerical_rank(joint) == dim_sum;
  }

  const bool v = rep.rank_cov_equals_rank_target;
  if (rep.col_cov_equals_col_target != v || rep.ker_phi_equals_ker_target != v ||
      rep.trivial_intersection != v)
    throw std::runtime_error(
        "check_rank_invariance: equivalent forms disagree (numerical-rank borderline case)");
  rep.holds = v;
  return rep;
}

bool check_nonsingularity(const MomentSet& m, const FeatureMap& features,
                          const MdpInstance& mdp, const LinearSystem& sys) {
  if (sys.role != SystemRole::target && sys.role != SystemRole::empirical_target)
    throw std::invalid_argument("check_nonsingularity: expects the target system");
  const bool nonsingular = numerical_rank(sys.A) == sys.A.rows();
  const bool expected = features.full_column_rank && check_rank_invariance(m, features, mdp).holds;
  if (nonsingular != expected)
    throw std::runtime_error(
        "check_nonsingularity: disagreement with (full column rank and rank invariance)");
  return nonsingular;
}

SolutionSet solve(const LinearSystem& sys) {
  SolutionSet sol;
  sol.particular = pseudoinverse(sys.A) * sys.b;
  sol.kernel_basis = kernel_basis(sys.A);
  sol.residual = (sys.A * sol.particular - sys.b).norm();
  sol.consistent = in_column_space(sys.A, sys.b);
  if (sol.consistent && sol.residual > 1e-8 * std::max(1.0, sys.b.norm()))
    throw std::runtime_error("solve: consistent system left a large residual");
  return sol;
}

namespace {

bool affine_contains(const SolutionSet& big, const SolutionSet& small) {
  // small subset of big: kernel containment plus particular-difference membership.
  if (!column_space_contains(big.kernel_basis, small.kernel_basis) &&
      small.kernel_basis.cols() > 0)
    return false;
  const Vector diff = small.particular - big.particular;
  if (diff.norm() < 1e-7 * std::max(1.0, big.particular.norm())) return true;
  if (big.kernel_basis.cols() == 0) return false;
  return in_column_space(big.kernel_basis, diff);
}

}  // namespace

SetRelation compare_solution_sets(const SolutionSet& s1, const SolutionSet& s2) {
  if (s1.particular.size() != s2.particular.size())
    throw std::invalid_argument("compare_solution_sets: dimension mismatch");
  const bool one_in_two = affine_contains(s2, s1);
  const bool two_in_one = affine_contains(s1, s2);
  if (one_in_two && two_in_one) return SetRelation::equal;
  if (one_in_two) return SetRelation::s1_subset_s2;
  if (two_in_one) return SetRelation::s2_subset_s1;
  return SetRelation::incomparable;
}

}  // namespace lstdlab
