#pragma once

#include "lstdlab/algorithms.hpp"
#include "lstdlab/linear_system.hpp"

#include <map>
#include <optional>
#include <string>

namespace lstdlab {

enum class Prediction { converges_for_all_theta0, diverges, no_fixed_point, marginal };

std::string to_string(Prediction p);
std::string to_string(AlgorithmKind k);

struct ConditionCheck {
  std::string name;
  bool holds = false;
  std::string citation;
};

// Limit as an affine function of the initial point: particular + projector * theta0.
struct AffineLimit {
  Vector particular;
  Matrix kernel_projector;
  Vector at(const Vector& theta0) const { return particular + kernel_projector * theta0; }
};

struct ConvergenceVerdict {
  AlgorithmKind algorithm = AlgorithmKind::td;
  Prediction prediction = Prediction::marginal;
  std::vector<ConditionCheck> conditions;
  std::optional<AffineLimit> predicted_limit;
  std::optional<std::pair<double, double>> alpha_interval;
  std::vector<std::string> specializations;
};

// Everything the analyzer needs about one instance, computed once.
struct AnalysisContext {
  MdpInstance mdp;
  FeatureMap features;
  MomentSet moments;
  LinearSystem target;
  LinearSystem fqi;
  bool rank_invariance = false;
  bool target_nonsingular = false;
  bool consistent = false;  // b_target in col(A_target)

  static AnalysisContext from(const MdpInstance& mdp, const FeatureMap& features);
};

struct StabilityReport {
  bool stable = false;
  bool marginal = false;
  std::vector<ConditionCheck> conditions;
  bool m_matrix_relaxation_used = false;
  bool singular_m_matrix_flagged = false;
};

StabilityReport td_stability(const AnalysisContext& ctx);

// (0, epsilon) with epsilon = min over nonzero eigenvalues of 2 Re(lambda)/|lambda|^2.
std::pair<double, double> td_alpha_interval(const AnalysisContext& ctx);

ConvergenceVerdict predict_td(const AnalysisContext& ctx, double alpha);
ConvergenceVerdict predict_fqi(const AnalysisContext& ctx);
ConvergenceVerdict predict_pfqi(const AnalysisContext& ctx, double alpha, int t);

struct TransitionReport {
  bool td_stable = false;
  std::map<int, double> epsilon_t;           // t -> largest admissible alpha (0 when none)
  std::map<double, std::optional<int>> t_threshold;  // alpha -> smallest T with convergence for all grid t >= T
};

TransitionReport transition_analysis(const AnalysisContext& ctx,
                                     const std::vector<double>& alphas,
                                     const std::vector<int>& ts);

struct ZMatrixReport {
  bool assumption1 = false;  // A_target Z-matrix, Sigma_cov^{-1} >= 0, Sigma_cov^{-1} Sigma_cr >= 0
  bool assumption2 = false;  // Sigma_cov nonsingular Z-matrix, Sigma_cr >= 0
  bool applicable = false;   // assumption1 and rank invariance
  bool td_stable = false;
  bool fqi_converges = false;
  bool equivalence_holds = false;  // applicable implies (td_stable == fqi_converges)
};

ZMatrixReport zmatrix_equivalence(const AnalysisContext& ctx);

struct EncoderDecoderReport {
  ComplexVector encoded_spectrum;  // eigenvalues of Phi^T D (I - gamma P) Phi
  ComplexVector decoded_spectrum;  // eigenvalues of D (I - gamma P) Phi Phi^T
  bool nonzero_spectra_match = false;
  bool dynamics_positive_stable = false;
  bool encoded_positive_semi_stable = false;
  bool stability_preserved = false;
};

EncoderDecoderReport encoder_decoder_report(const AnalysisContext& ctx);

struct OnPolicyReport {
  bool target_rpn = false;
  bool rank_invariance = false;
  bool td_stable = false;
  bool all_hold = false;
};

OnPolicyReport onpolicy_report(const AnalysisContext& ctx);

}  // namespace lstdlab
