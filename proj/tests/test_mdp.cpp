#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_support.hpp"

using namespace lstdlab;
using testsupport::random_matrix;

namespace {

double fqi_spectral_radius(const GeneratedInstance& gen) {
  MomentSet m = build_moments(gen.mdp, gen.features);
  Matrix h = gen.mdp.gamma * m.sigma_cov.inverse() * m.sigma_cr;
  return spectral_report(h).spectral_radius;
}

}  // namespace

TEST_CASE("instance validation") {
  auto gen = testsupport::td_ok_fqi_bad();
  CHECK_NOTHROW(gen.mdp.validate());

  MdpInstance bad = gen.mdp;
  bad.gamma = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = gen.mdp;
  bad.P(0, 0) = 0.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = gen.mdp;
  bad.mu(0) = 0.0;
  bad.mu(1) = 0.8;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("tabular uniform moments") {
  MdpInstance mdp;
  mdp.h = 4;
  mdp.gamma = 0.9;
  mdp.P = Matrix::Constant(4, 4, 0.25);
  mdp.R = Vector::Zero(4);
  mdp.mu = Vector::Constant(4, 0.25);
  FeatureMap f = FeatureMap::from(Matrix::Identity(4, 4));
  MomentSet m = build_moments(mdp, f);
  CHECK((m.sigma_cov - 0.25 * Matrix::Identity(4, 4)).norm() < 1e-12);
}

TEST_CASE("example pair spectral radii of the regression iteration") {
  CHECK(fqi_spectral_radius(testsupport::td_ok_fqi_bad()) == doctest::Approx(1.011068).epsilon(1e-4));
  CHECK(fqi_spectral_radius(testsupport::td_bad_fqi_ok()) == doctest::Approx(0.94628).epsilon(1e-4));
}

TEST_CASE("empirical moments from an exact-frequency dataset match expected moments") {
  MdpInstance mdp;
  mdp.h = 2;
  mdp.gamma = 0.9;
  mdp.P = Matrix(2, 2);
  mdp.P << 0.5, 0.5, 0.25, 0.75;
  mdp.R = Vector(2);
  mdp.R << 1.0, -2.0;
  mdp.mu = Vector(2);
  mdp.mu << 0.4, 0.6;
  FeatureMap f = FeatureMap::from((Matrix(2, 2) << 1.0, 0.3, -0.5, 2.0).finished());

  BatchDataset ds;
  ds.num_pairs = 2;
  auto add = [&](int s, int sp, int count) {
    for (int i = 0; i < count; ++i) ds.samples.push_back({s, mdp.R(s), sp});
  };
  add(0, 0, 4);
  add(0, 1, 4);
  add(1, 0, 3);
  add(1, 1, 9);

  auto [emp_m, emp_mdp] = build_empirical(ds, f, mdp.gamma);
  MomentSet exact = build_moments(mdp, f);
  CHECK((emp_m.sigma_cov - exact.sigma_cov).norm() < 1e-12);
  CHECK((emp_m.sigma_cr - exact.sigma_cr).norm() < 1e-12);
  CHECK((emp_m.theta_phi_r - exact.theta_phi_r).norm() < 1e-12);
  CHECK((emp_mdp.P - mdp.P).norm() < 1e-12);
}

TEST_CASE("single-sample empirical moments") {
  FeatureMap f = FeatureMap::from(Matrix::Identity(2, 2));
  BatchDataset ds;
  ds.num_pairs = 2;
  ds.samples.push_back({0, 1.0, 0});
  auto [m, mdp] = build_empirical(ds, f, 0.9);
  Matrix e00 = Matrix::Zero(2, 2);
  e00(0, 0) = 1.0;
  CHECK((m.sigma_cov - e00).norm() < 1e-12);
  CHECK(m.theta_phi_r(0) == doctest::Approx(1.0));
  CHECK(m.theta_phi_r(1) == doctest::Approx(0.0));
  CHECK(mdp.batch);
}

TEST_CASE("pairs never seen as initial get zero measure and a zero transition row") {
  FeatureMap f = FeatureMap::from(Matrix::Identity(3, 3));
  BatchDataset ds;
  ds.num_pairs = 3;
  ds.samples.push_back({0, 1.0, 2});
  ds.samples.push_back({1, 0.5, 2});
  auto [m, mdp] = build_empirical(ds, f, 0.9);
  (void)m;
  CHECK(mdp.mu(2) == doctest::Approx(0.0));
  CHECK(mdp.P.row(2).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK(mdp.R(2) == doctest::Approx(0.0));
}

TEST_CASE("on-policy detection") {
  std::mt19937_64 rng(5);
  GeneratorSpec spec;
  spec.seed = 9;
  spec.regime = Regime::on_policy;
  auto gen = generate(spec);
  CHECK(is_on_policy(gen.mdp));

  auto off = testsupport::td_ok_fqi_bad();
  CHECK_FALSE(is_on_policy(off.mdp));
}

TEST_CASE("weighted dynamics matrix classification") {
  for (auto gen : {testsupport::td_ok_fqi_bad(), testsupport::td_bad_fqi_ok()}) {
    DynamicsReport rep = system_dynamics(gen.mdp);
    CHECK(rep.nonsingular_m_matrix);
    CHECK(rep.strictly_diagonally_dominant);
  }

  MdpInstance iso;
  iso.h = 2;
  iso.gamma = 0.8;
  iso.P = Matrix::Identity(2, 2);
  iso.R = Vector::Zero(2);
  iso.mu = Vector::Constant(2, 0.5);
  DynamicsReport rep = system_dynamics(iso);
  CHECK((rep.dynamics - 0.1 * Matrix::Identity(2, 2)).norm() < 1e-12);
  CHECK(rep.nonsingular_m_matrix);
}

TEST_CASE("value function solves the Bellman equation") {
  MdpInstance iso;
  iso.h = 3;
  iso.gamma = 0.5;
  iso.P = Matrix::Identity(3, 3);
  iso.R = Vector::Ones(3);
  iso.mu = Vector::Constant(3, 1.0 / 3.0);
  CHECK((true_q(iso) - 2.0 * Vector::Ones(3)).norm() < 1e-12);

  auto gen = testsupport::td_bad_fqi_ok();
  Vector q = true_q(gen.mdp);
  Vector series = Vector::Zero(3);
  Matrix pk = Matrix::Identity(3, 3);
  double gk = 1.0;
  for (int k = 0; k <= 2000; ++k) {
    series += gk * pk * gen.mdp.R;
    pk = pk * gen.mdp.P;
    gk *= gen.mdp.gamma;
  }
  CHECK((q - series).norm() < 1e-8);
}

TEST_CASE("realizability report") {
  auto gen = testsupport::td_ok_fqi_bad();
  FeatureMap id = FeatureMap::from(Matrix::Identity(3, 3));
  RealizabilityReport rep = check_realizability(gen.mdp, id);
  CHECK(rep.realizable);
  CHECK((rep.theta_min_norm - true_q(gen.mdp)).norm() < 1e-9);

  Vector q = true_q(gen.mdp);
  FeatureMap column = FeatureMap::from(Matrix(q));
  RealizabilityReport rep2 = check_realizability(gen.mdp, column);
  CHECK(rep2.realizable);
  CHECK(rep2.theta_min_norm(0) == doctest::Approx(1.0));
}

TEST_CASE("cross-moment column space sits inside covariance column space") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
    GeneratorSpec spec;
    spec.seed = seed;
    spec.h = 5;
    spec.d = 7;
    spec.regime = Regime::general;
    auto gen = generate(spec);
    MomentSet m = build_moments(gen.mdp, gen.features);
    CHECK(column_space_contains(m.sigma_cov, m.sigma_cr));
  }
}

TEST_CASE("stationary distribution fixed point") {
  std::mt19937_64 rng(3);
  Matrix p(3, 3);
  p << 0.2, 0.5, 0.3, 0.4, 0.4, 0.2, 0.1, 0.3, 0.6;
  Vector mu = stationary_distribution(p);
  CHECK(((mu.transpose() * p).transpose() - mu).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(mu.sum() == doctest::Approx(1.0));

  Matrix periodic(2, 2);
  periodic << 0.0, 1.0, 1.0, 0.0;
  Vector mu2 = stationary_distribution(periodic);
  CHECK(mu2(0) == doctest::Approx(0.5));
}
