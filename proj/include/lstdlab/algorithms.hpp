#pragma once

#include "lstdlab/linear_system.hpp"

#include <optional>
#include <vector>

namespace lstdlab {

enum class AlgorithmKind { td, fqi, pfqi };

struct AlgorithmConfig {
  AlgorithmKind kind = AlgorithmKind::td;
  double alpha = 0.0;  // learning rate (td, pfqi)
  int t = 1;           // inner updates per target (pfqi)
  Vector theta0;       // empty means the zero vector
};

struct RunLimits {
  int max_iters = 0;   // 0 picks the per-algorithm default
  double tol = 1e-10;
  double blowup = 1e12;
  int record_every = 1;  // thin the stored trace; step norms are always kept
};

enum class RunStatus { converged, diverged, max_iters };

struct IterationTrace {
  std::vector<Vector> iterates;
  std::vector<double> residuals;   // ||A_target theta_k - b_target|| at recorded iterates
  std::vector<double> step_norms;  // ||theta_{k+1} - theta_k|| for every iteration
  RunStatus status = RunStatus::max_iters;
  std::optional<Vector> limit;
};

Vector td_step(const MomentSet& m, double gamma, double alpha, const Vector& theta);

// Minimal-norm regression update; valid for rank-deficient Sigma_cov.
Vector fqi_step(const MomentSet& m, double gamma, const Vector& theta);

// Runs the inner recursion t times from theta_target and returns the new target.
Vector pfqi_step_literal(const MomentSet& m, double gamma, double alpha, int t,
                         const Vector& theta_target);

// Closed-form affine map for one PFQI target update.
Vector pfqi_step_closed(const MomentSet& m, double gamma, double alpha, int t,
                        const Vector& theta);

// M_td = alpha I, M_fqi = Sigma_cov^+, M_pfqi = alpha sum_{i<t} (I - alpha Sigma_cov)^i.
Matrix preconditioner(AlgorithmKind kind, const MomentSet& m, double alpha, int t);

IterationTrace run(const MomentSet& m, double gamma, const AlgorithmConfig& config,
                   const RunLimits& limits = {});

// The affine map theta -> H theta + c executed by one outer update.
struct AffineMap {
  Matrix H;
  Vector c;
  Vector apply(const Vector& theta) const { return H * theta + c; }
};

AffineMap algorithm_map(const MomentSet& m, double gamma, const AlgorithmConfig& config);

}  // namespace lstdlab
