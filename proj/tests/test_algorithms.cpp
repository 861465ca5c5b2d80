#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_support.hpp"

using namespace lstdlab;
using testsupport::random_matrix;

TEST_CASE("single gradient step fixes solutions and respects a zero learning rate") {
  auto gen = testsupport::td_ok_fqi_bad();
  MomentSet m = build_moments(gen.mdp, gen.features);
  LinearSystem sys = target_system(m, gen.mdp.gamma);
  Vector sol = sys.A.partialPivLu().solve(sys.b);
  CHECK((td_step(m, gen.mdp.gamma, 0.7, sol) - sol).norm() < 1e-10);

  Vector theta = Vector::Ones(2);
  CHECK((td_step(m, gen.mdp.gamma, 0.0, theta) - theta).norm() == doctest::Approx(0.0));
}

TEST_CASE("gradient iteration converges on the stable example at unit learning rate") {
  auto gen = testsupport::td_ok_fqi_bad();
  MomentSet m = build_moments(gen.mdp, gen.features);
  AlgorithmConfig cfg;
  cfg.kind = AlgorithmKind::td;
  cfg.alpha = 1.0;
  IterationTrace trace = run(m, gen.mdp.gamma, cfg);
  CHECK(trace.status == RunStatus::converged);
  LinearSystem sys = target_system(m, gen.mdp.gamma);
  CHECK((sys.A * *trace.limit - sys.b).norm() < 1e-8);
}

TEST_CASE("regression iteration diverges on one example and converges on the other") {
  auto bad = testsupport::td_ok_fqi_bad();
  MomentSet mb = build_moments(bad.mdp, bad.features);
  AlgorithmConfig cfg;
  cfg.kind = AlgorithmKind::fqi;
  CHECK(run(mb, bad.mdp.gamma, cfg).status == RunStatus::diverged);

  auto good = testsupport::td_bad_fqi_ok();
  MomentSet mg = build_moments(good.mdp, good.features);
  IterationTrace trace = run(mg, good.mdp.gamma, cfg);
  REQUIRE(trace.status == RunStatus::converged);
  LinearSystem sys = target_system(mg, good.mdp.gamma);
  Vector direct = sys.A.partialPivLu().solve(sys.b);
  CHECK((*trace.limit - direct).norm() < 1e-6 * (1.0 + direct.norm()));
}

TEST_CASE("regression step fixes its own fixed point") {
  auto gen = testsupport::td_bad_fqi_ok();
  MomentSet m = build_moments(gen.mdp, gen.features);
  LinearSystem sys = fqi_system(m, gen.mdp.gamma);
  Vector sol = sys.A.partialPivLu().solve(sys.b);
  CHECK((fqi_step(m, gen.mdp.gamma, sol) - sol).norm() < 1e-9);
}

TEST_CASE("inner-loop recursion matches the closed form") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> alpha_draw(0.01, 1.5);
  std::uniform_int_distribution<int> t_draw(1, 50);
  int draws = 0;
  for (std::uint64_t seed = 1; seed <= 25 && draws < 200; ++seed) {
    GeneratorSpec spec;
    spec.seed = seed;
    spec.h = 4;
    spec.d = 3;
    spec.regime = Regime::general;
    auto gen = generate(spec);
    MomentSet m = build_moments(gen.mdp, gen.features);
    for (int k = 0; k < 8; ++k, ++draws) {
      double alpha = alpha_draw(rng);
      int t = t_draw(rng);
      Vector theta = random_matrix(rng, 3, 1);
      Vector lit = pfqi_step_literal(m, gen.mdp.gamma, alpha, t, theta);
      Vector closed = pfqi_step_closed(m, gen.mdp.gamma, alpha, t, theta);
      CHECK((lit - closed).norm() < 1e-9 * (1.0 + lit.norm()));
    }
  }
  CHECK(draws == 200);
}

TEST_CASE("target-network iteration with a single inner step is the gradient iteration") {
  auto gen = testsupport::td_ok_fqi_bad();
  MomentSet m = build_moments(gen.mdp, gen.features);
  AlgorithmConfig td_cfg{AlgorithmKind::td, 0.8, 1, {}};
  AlgorithmConfig pf_cfg{AlgorithmKind::pfqi, 0.8, 1, {}};
  RunLimits limits;
  limits.max_iters = 300;
  IterationTrace td = run(m, gen.mdp.gamma, td_cfg, limits);
  IterationTrace pf = run(m, gen.mdp.gamma, pf_cfg, limits);
  REQUIRE(td.iterates.size() == pf.iterates.size());
  for (std::size_t i = 0; i < td.iterates.size(); ++i)
    CHECK((td.iterates[i] - pf.iterates[i]).norm() < 1e-12 * (1.0 + td.iterates[i].norm()));
}

TEST_CASE("preconditioners") {
  auto gen = testsupport::td_ok_fqi_bad();
  MomentSet m = build_moments(gen.mdp, gen.features);
  CHECK((preconditioner(AlgorithmKind::pfqi, m, 0.3, 1) - 0.3 * Matrix::Identity(2, 2)).norm() <
        1e-12);

  Eigen::SelfAdjointEigenSolver<Matrix> es(m.sigma_cov);
  double alpha = 1.0 / es.eigenvalues().maxCoeff();
  Matrix inv = m.sigma_cov.inverse();
  double prev_gap = std::numeric_limits<double>::infinity();
  for (int t : {10, 100, 1000, 10000}) {
    double gap = (preconditioner(AlgorithmKind::pfqi, m, alpha, t) - inv).norm();
    CHECK(gap < prev_gap + 1e-15);
    prev_gap = gap;
  }
  CHECK(prev_gap < 1e-6);
}

TEST_CASE("preconditioner grows linearly on the covariance kernel") {
  MdpInstance mdp = testsupport::td_ok_fqi_bad().mdp;
  Matrix phi(3, 2);
  phi << 1.0, 2.0, 0.5, 1.0, -0.2, -0.4;  // rank one
  FeatureMap f = FeatureMap::from(phi);
  REQUIRE(f.rank == 1);
  MomentSet m = build_moments(mdp, f);
  Vector kernel = kernel_basis(m.sigma_cov).col(0);
  double alpha = 0.1;
  double n1 = (preconditioner(AlgorithmKind::pfqi, m, alpha, 100) * kernel).norm();
  double n2 = (preconditioner(AlgorithmKind::pfqi, m, alpha, 200) * kernel).norm();
  CHECK(n2 / n1 == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("full-row-rank regression update reduces to the projected Bellman form") {
  GeneratorSpec spec;
  spec.seed = 21;
  spec.h = 3;
  spec.d = 5;
  spec.regime = Regime::full_row_rank;
  auto gen = generate(spec);
  MomentSet m = build_moments(gen.mdp, gen.features);
  Matrix phi_pinv = pseudoinverse(gen.features.Phi);
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    Vector theta = random_matrix(rng, 5, 1);
    Vector direct = fqi_step(m, gen.mdp.gamma, theta);
    Vector projected =
        gen.mdp.gamma * phi_pinv * gen.mdp.P * gen.features.Phi * theta + phi_pinv * gen.mdp.R;
    CHECK((direct - projected).norm() < 1e-10 * (1.0 + direct.norm()));
  }
}

TEST_CASE("full-row-rank regression iteration contracts at rate gamma") {
  GeneratorSpec spec;
  spec.seed = 22;
  spec.h = 3;
  spec.d = 6;
  spec.regime = Regime::full_row_rank;
  auto gen = generate(spec);
  MomentSet m = build_moments(gen.mdp, gen.features);
  Matrix h = gen.mdp.gamma * pseudoinverse(m.sigma_cov) * m.sigma_cr;
  CHECK(spectral_report(h).spectral_radius == doctest::Approx(gen.mdp.gamma).epsilon(1e-8));
}

TEST_CASE("runs accept custom starting points and reject bad configurations") {
  auto gen = testsupport::td_ok_fqi_bad();
  MomentSet m = build_moments(gen.mdp, gen.features);
  AlgorithmConfig cfg{AlgorithmKind::td, 1.0, 1, Vector::Ones(2)};
  IterationTrace trace = run(m, gen.mdp.gamma, cfg);
  CHECK(trace.status == RunStatus::converged);

  AlgorithmConfig bad{AlgorithmKind::td, -1.0, 1, {}};
  CHECK_THROWS_AS(run(m, gen.mdp.gamma, bad), std::invalid_argument);
  AlgorithmConfig wrong_dim{AlgorithmKind::td, 0.5, 1, Vector::Ones(5)};
  CHECK_THROWS_AS(run(m, gen.mdp.gamma, wrong_dim), std::invalid_argument);
}

TEST_CASE("divergence above the learning-rate boundary") {
  auto gen = testsupport::td_ok_fqi_bad();
  AnalysisContext ctx = AnalysisContext::from(gen.mdp, gen.features);
  auto [lo, eps] = td_alpha_interval(ctx);
  (void)lo;
  AlgorithmConfig cfg{AlgorithmKind::td, 1.5 * eps, 1, {}};
  CHECK(run(ctx.moments, gen.mdp.gamma, cfg).status == RunStatus::diverged);
}
