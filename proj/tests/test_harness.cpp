#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_support.hpp"

#include "lstdlab/json_io.hpp"

using namespace lstdlab;
using testsupport::random_matrix;

TEST_CASE("generation is deterministic in the seed") {
  GeneratorSpec spec;
  spec.seed = 99;
  spec.h = 5;
  spec.d = 3;
  spec.regime = Regime::general;
  auto a = generate(spec);
  auto b = generate(spec);
  CHECK((a.mdp.P - b.mdp.P).norm() == doctest::Approx(0.0));
  CHECK((a.mdp.R - b.mdp.R).norm() == doctest::Approx(0.0));
  CHECK((a.features.Phi - b.features.Phi).norm() == doctest::Approx(0.0));
}

TEST_CASE("every regime emits instances satisfying its predicate") {
  for (Regime regime : all_regimes()) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      GeneratorSpec spec;
      spec.seed = seed;
      spec.h = 4;
      spec.d = 3;
      spec.regime = regime;
      auto gen = generate(spec);
      CHECK_NOTHROW(gen.mdp.validate());
      MomentSet m = build_moments(gen.mdp, gen.features);
      switch (regime) {
        case Regime::on_policy:
          CHECK(is_on_policy(gen.mdp));
          break;
        case Regime::full_column_rank:
          CHECK(gen.features.full_column_rank);
          break;
        case Regime::full_row_rank:
        case Regime::orthogonal_rows:
          CHECK(gen.features.full_row_rank);
          break;
        case Regime::tabular:
          CHECK((gen.features.Phi - Matrix::Identity(4, 4)).norm() == doctest::Approx(0.0));
          break;
        case Regime::z_matrix_feature_reversal: {
          CHECK(is_z_matrix(m.sigma_cov));
          CHECK(numerical_rank(m.sigma_cov) == m.sigma_cov.rows());
          CHECK(entrywise_nonneg(m.sigma_cr));
          break;
        }
        case Regime::rank_invariance_violating:
          CHECK_FALSE(check_rank_invariance(m, gen.features, gen.mdp).holds);
          break;
        case Regime::general:
          break;
      }
    }
  }
}

TEST_CASE("orthogonal-row regime produces orthonormal rows") {
  GeneratorSpec spec;
  spec.seed = 3;
  spec.h = 3;
  spec.d = 6;
  spec.regime = Regime::orthogonal_rows;
  auto gen = generate(spec);
  Matrix gram = gen.features.Phi * gen.features.Phi.transpose();
  CHECK((gram - Matrix::Identity(3, 3)).norm() < 1e-10);
}

TEST_CASE("independent fixed-point oracle") {
  std::mt19937_64 rng(41);
  Matrix a = random_matrix(rng, 3, 3);
  while (numerical_rank(a) < 3) a = random_matrix(rng, 3, 3);
  Vector b = random_matrix(rng, 3, 1);
  Vector direct = a.partialPivLu().solve(b);
  CHECK((oracle_fixed_point(a, b, Vector::Ones(3)) - direct).norm() <
        1e-8 * (1.0 + direct.norm()));

  Matrix d(2, 2);
  d << 1.0, 0.0, 0.0, 0.0;
  Vector b2(2);
  b2 << 1.0, 0.0;
  Vector theta0(2);
  theta0 << 5.0, 7.0;
  Vector lim = oracle_fixed_point(d, b2, theta0);
  CHECK(lim(0) == doctest::Approx(1.0));
  CHECK(lim(1) == doctest::Approx(7.0));
}

TEST_CASE("oracle matches the long-run gradient iteration on a singular consistent system") {
  GeneratorSpec spec;
  spec.seed = 8;
  spec.h = 3;
  spec.d = 4;
  spec.regime = Regime::on_policy;
  auto gen = generate(spec);
  AnalysisContext ctx = AnalysisContext::from(gen.mdp, gen.features);
  REQUIRE(ctx.consistent);
  REQUIRE(numerical_rank(ctx.target.A) < 4);
  REQUIRE(matrix_index(ctx.target.A) == 1);

  std::mt19937_64 rng(19);
  Vector theta0 = random_matrix(rng, 4, 1);
  double alpha = 0.5 * td_alpha_interval(ctx).second;
  AlgorithmConfig cfg{AlgorithmKind::td, alpha, 1, theta0};
  IterationTrace trace = run(ctx.moments, gen.mdp.gamma, cfg);
  REQUIRE(trace.status == RunStatus::converged);
  Vector predicted = oracle_fixed_point(ctx.target.A, ctx.target.b, theta0);
  CHECK((*trace.limit - predicted).norm() < 1e-6 * (1.0 + predicted.norm()));
}

TEST_CASE("trace classification") {
  IterationTrace conv;
  conv.status = RunStatus::converged;
  CHECK(classify_trace(conv) == EmpiricalOutcome::converged);

  IterationTrace div;
  div.status = RunStatus::diverged;
  CHECK(classify_trace(div) == EmpiricalOutcome::diverged);

  IterationTrace slow_growth;
  slow_growth.status = RunStatus::max_iters;
  for (int i = 0; i < 2000; ++i) slow_growth.step_norms.push_back(1e-3 * std::pow(1.005, i));
  CHECK(classify_trace(slow_growth) == EmpiricalOutcome::diverged);

  IterationTrace slow_decay;
  slow_decay.status = RunStatus::max_iters;
  for (int i = 0; i < 2000; ++i) slow_decay.step_norms.push_back(std::pow(0.995, i));
  CHECK(classify_trace(slow_decay) == EmpiricalOutcome::converged);

  IterationTrace flat;
  flat.status = RunStatus::max_iters;
  for (int i = 0; i < 2000; ++i) flat.step_norms.push_back(1.0);
  CHECK(classify_trace(flat) == EmpiricalOutcome::ambiguous);
}

TEST_CASE("small campaign finds no disagreements") {
  CampaignConfig config;
  config.base_seed = 5;
  config.instances_per_regime = 3;
  config.run_iters_cap = 20000;
  CampaignResult result = run_campaign(config);
  CHECK(result.total_checked > 0);
  CHECK(result.total_mismatched == 0);
}

TEST_CASE("example pair verdict grid matches the expected outcomes") {
  AnalysisContext sys1 = AnalysisContext::from(testsupport::td_ok_fqi_bad().mdp,
                                               testsupport::td_ok_fqi_bad().features);
  AnalysisContext sys2 = AnalysisContext::from(testsupport::td_bad_fqi_ok().mdp,
                                               testsupport::td_bad_fqi_ok().features);
  CHECK(td_stability(sys1).stable);
  CHECK(predict_fqi(sys1).prediction == Prediction::diverges);
  CHECK_FALSE(td_stability(sys2).stable);
  CHECK(predict_fqi(sys2).prediction == Prediction::converges_for_all_theta0);
}
