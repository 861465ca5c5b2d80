#pragma once

#include "lstdlab/mdp.hpp"

namespace lstdlab {

enum class SystemRole { target, fqi, empirical_target, empirical_fqi };

struct LinearSystem {
  Matrix A;
  Vector b;
  SystemRole role = SystemRole::target;
};

struct SolutionSet {
  Vector particular;   // minimal-norm A^+ b (least-squares point when inconsistent)
  Matrix kernel_basis; // columns span ker(A)
  bool consistent = false;
  double residual = 0.0;
};

// (Sigma_cov - gamma Sigma_cr) theta = theta_phi_r
LinearSystem target_system(const MomentSet& m, double gamma);

// (I - gamma Sigma_cov^+ Sigma_cr) theta = Sigma_cov^+ theta_phi_r.
// Checks the projection identity Sigma_cov A_fqi = A_target, Sigma_cov b_fqi = b_target.
LinearSystem fqi_system(const MomentSet& m, double gamma);

bool check_consistency(const LinearSystem& sys);

struct RankInvarianceReport {
  bool holds = false;
  bool rank_cov_equals_rank_target = false;
  bool col_cov_equals_col_target = false;
  bool ker_phi_equals_ker_target = false;
  bool trivial_intersection = false;  // ker(Phi^T) cap col(D(I-gamma P)Phi) = {0}
};

// Evaluates four equivalent forms of rank invariance and asserts they agree.
RankInvarianceReport check_rank_invariance(const MomentSet& m, const FeatureMap& features,
                                           const MdpInstance& mdp);

// Nonsingularity of the target system; asserts equivalence with
// full column rank + rank invariance.
bool check_nonsingularity(const MomentSet& m, const FeatureMap& features,
                          const MdpInstance& mdp, const LinearSystem& sys);

SolutionSet solve(const LinearSystem& sys);

enum class SetRelation { equal, s1_subset_s2, s2_subset_s1, incomparable };

SetRelation compare_solution_sets(const SolutionSet& s1, const SolutionSet& s2);

}  // namespace lstdlab
