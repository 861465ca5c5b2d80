#pragma once

#include "lstdlab/analyzer.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <string>

namespace lstdlab {

enum class Regime {
  general,
  on_policy,
  full_column_rank,
  full_row_rank,
  orthogonal_rows,
  tabular,
  z_matrix_feature_reversal,
  rank_invariance_violating,
};

std::string to_string(Regime r);
Regime regime_from_string(const std::string& s);
const std::vector<Regime>& all_regimes();

struct GeneratorSpec {
  std::uint64_t seed = 0;
  int h = 4;
  int d = 2;
  Regime regime = Regime::general;
  double gamma_lo = 0.5;
  double gamma_hi = 0.99;
};

struct GeneratedInstance {
  MdpInstance mdp;
  FeatureMap features;
  Regime regime = Regime::general;
  std::uint64_t seed = 0;
};

GeneratedInstance generate(const GeneratorSpec& spec);

// Fixed point computed without the core-nilpotent route: with k = n,
// A^D = A^k (A^{2k+1})^+ A^k, limit = A^D b + (I - A A^D) theta0.
Vector oracle_fixed_point(const Matrix& a, const Vector& b, const Vector& theta0);

enum class EmpiricalOutcome { converged, diverged, ambiguous };

// Status from the run when decisive; otherwise compares late step norms
// against mid-run step norms to call the trend.
EmpiricalOutcome classify_trace(const IterationTrace& trace);

struct CheckTally {
  int checked = 0;
  int agreed = 0;
  int mismatched = 0;
  int skipped_marginal = 0;
  int skipped_ambiguous = 0;
};

struct CampaignConfig {
  std::uint64_t base_seed = 1;
  int instances_per_regime = 100;
  std::vector<Regime> regimes = all_regimes();
  std::string reproducer_dir;  // empty disables reproducer files
  int run_iters_cap = 0;       // 0 keeps the per-algorithm defaults
};

struct CampaignResult {
  std::map<std::string, CheckTally> tallies;
  std::vector<std::string> mismatches;
  int total_checked = 0;
  int total_mismatched = 0;
};

CampaignResult run_campaign(const CampaignConfig& config);

// Checks one instance against every applicable statement; records results in place.
void check_instance(const GeneratedInstance& gen, const CampaignConfig& config,
                    CampaignResult& result);

// Empirical upper end of the convergent TD learning-rate interval, found by
// bisection on probe runs.
double empirical_td_alpha_boundary(const AnalysisContext& ctx, int probe_iters = 6000);

}  // namespace lstdlab
