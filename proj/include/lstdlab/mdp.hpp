#pragma once

#include "lstdlab/matrix_analysis.hpp"

#include <optional>
#include <vector>

namespace lstdlab {

// Evaluation instance over h flattened state-action pairs.
struct MdpInstance {
  int h = 0;
  Matrix P;      // h x h, row-stochastic (sub-stochastic when batch-derived)
  Vector R;      // h
  double gamma = 0.0;
  Vector mu;     // h, nonnegative, sums to 1
  bool batch = false;  // batch-derived instances may have zero-mass pairs and zero P rows

  Matrix D() const { return Matrix(mu.asDiagonal()); }
  void validate() const;
};

struct FeatureMap {
  Matrix Phi;  // h x d
  int d = 0;
  int rank = 0;
  bool full_column_rank = false;
  bool full_row_rank = false;

  static FeatureMap from(Matrix phi);
};

struct Transition {
  int sa = 0;      // initial state-action pair index
  double reward = 0.0;
  int sa_next = 0; // next state-action pair index
};

struct BatchDataset {
  std::vector<Transition> samples;
  int num_pairs = 0;  // size of the pair space the indices live in
};

struct MomentSet {
  Matrix sigma_cov;   // Phi^T D Phi, symmetrized
  Matrix sigma_cr;    // Phi^T D P Phi
  Vector theta_phi_r; // Phi^T D R
};

MomentSet build_moments(const MdpInstance& mdp, const FeatureMap& features);

// Empirical moments plus the empirical sub-stochastic chain; rows of pairs
// never seen as initial are zero.
std::pair<MomentSet, MdpInstance> build_empirical(const BatchDataset& dataset,
                                                  const FeatureMap& features, double gamma);

bool is_on_policy(const MdpInstance& mdp);

struct DynamicsReport {
  Matrix dynamics;  // D (I - gamma P)
  bool nonsingular_m_matrix = false;
  bool strictly_diagonally_dominant = false;
};

DynamicsReport system_dynamics(const MdpInstance& mdp);

// Solves (I - gamma P) Q = R.
Vector true_q(const MdpInstance& mdp);

struct RealizabilityReport {
  bool realizable = false;
  Vector theta_min_norm;   // minimal-norm theta fitting Q_pi
  Matrix theta_set_basis;  // basis of ker(Phi); Theta_pi = theta_min_norm + span(basis)
  double residual = 0.0;
};

RealizabilityReport check_realizability(const MdpInstance& mdp, const FeatureMap& features);

// Stationary distribution of P by power iteration (residual 1e-12, capped).
Vector stationary_distribution(const Matrix& P);

}  // namespace lstdlab
