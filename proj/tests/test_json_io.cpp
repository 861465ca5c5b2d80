#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_support.hpp"

#include "lstdlab/json_io.hpp"

#include <cstdio>

using namespace lstdlab;

TEST_CASE("instance serialization round-trips") {
  auto gen = testsupport::td_ok_fqi_bad();
  Json j = instance_to_json(gen.mdp);
  MdpInstance back = instance_from_json(j);
  CHECK(back.h == gen.mdp.h);
  CHECK(back.gamma == doctest::Approx(gen.mdp.gamma));
  CHECK((back.P - gen.mdp.P).norm() < 1e-11);
  CHECK((back.R - gen.mdp.R).norm() < 1e-11);
  CHECK((back.mu - gen.mdp.mu).norm() < 1e-11);
}

TEST_CASE("instance json keeps the documented field order") {
  Json j = instance_to_json(testsupport::td_ok_fqi_bad().mdp);
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  std::vector<std::string> expected{"h", "gamma", "P", "R", "mu"};
  CHECK(keys == expected);
}

TEST_CASE("floats are rounded to 12 significant digits") {
  CHECK(round_sig(1.0 / 3.0) == doctest::Approx(0.333333333333).epsilon(1e-13));
  CHECK(round_sig(123456.789123456789) == doctest::Approx(123456.789123).epsilon(1e-13));
  CHECK(round_sig(0.0) == 0.0);
  CHECK(round_sig(-2.5e-17) == doctest::Approx(-2.5e-17).epsilon(1e-13));
}

TEST_CASE("instance parsing rejects malformed input") {
  Json j = instance_to_json(testsupport::td_ok_fqi_bad().mdp);
  Json missing = j;
  missing.erase("mu");
  CHECK_THROWS_AS(instance_from_json(missing), std::invalid_argument);

  Json bad_rows = j;
  bad_rows["P"].erase(2);
  CHECK_THROWS_AS(instance_from_json(bad_rows), std::invalid_argument);
}

TEST_CASE("dataset parsing flattens state-action pairs") {
  Json j;
  j["num_actions"] = 2;
  j["records"] = Json::array();
  j["records"].push_back({{"s", 1}, {"a", 0}, {"r", 0.5}, {"sp", 0}, {"ap", 1}});
  j["records"].push_back({{"s", 0}, {"a", 1}, {"r", -1.0}, {"sp", 1}, {"ap", 0}});
  j["num_pairs"] = 4;
  BatchDataset data = dataset_from_json(j);
  REQUIRE(data.samples.size() == 2);
  CHECK(data.num_pairs == 4);
  CHECK(data.samples[0].sa == 2);
  CHECK(data.samples[0].sa_next == 1);
  CHECK(data.samples[0].reward == doctest::Approx(0.5));
  CHECK(data.samples[1].sa == 1);
  CHECK(data.samples[1].sa_next == 2);
}

TEST_CASE("dataset parsing rejects missing fields and bad indices") {
  Json j;
  j["records"] = Json::array();
  j["records"].push_back({{"s", 0}, {"a", 0}, {"r", 0.0}, {"sp", 0}});
  CHECK_THROWS_AS(dataset_from_json(j), std::invalid_argument);

  Json k;
  k["num_pairs"] = 2;
  k["records"] = Json::array();
  k["records"].push_back({{"s", 5}, {"a", 0}, {"r", 0.0}, {"sp", 0}, {"ap", 0}});
  CHECK_THROWS_AS(dataset_from_json(k), std::invalid_argument);
}

TEST_CASE("verdict json carries the fields the CLI prints") {
  AnalysisContext ctx = AnalysisContext::from(testsupport::td_ok_fqi_bad().mdp,
                                              testsupport::td_ok_fqi_bad().features);
  Json j = verdict_to_json(predict_td(ctx, 1.0));
  CHECK(j.contains("algorithm"));
  CHECK(j.contains("prediction"));
  CHECK(j.contains("conditions"));
  CHECK(j["algorithm"] == "td");
  CHECK(j["prediction"] == "converges_for_all_theta0");
  CHECK(j["conditions"].is_array());
  CHECK(j["conditions"].size() > 0);
  for (const auto& c : j["conditions"]) {
    CHECK(c.contains("name"));
    CHECK(c.contains("holds"));
  }
}

TEST_CASE("matrix round-trip preserves values to output precision") {
  std::mt19937_64 rng(7);
  Matrix m = testsupport::random_matrix(rng, 3, 5);
  Matrix back = matrix_from_json(matrix_to_json(m));
  CHECK((back - m).norm() < 1e-10 * (1.0 + m.norm()));
}

TEST_CASE("file round-trip reproduces the analysis verdicts") {
  GeneratorSpec spec;
  spec.seed = 21;
  spec.h = 4;
  spec.d = 3;
  spec.regime = Regime::general;
  auto gen = generate(spec);
  std::string path = "roundtrip_instance.json";
  save_instance(path, gen.mdp, gen.features);
  auto [mdp, features] = load_instance(path);
  std::remove(path.c_str());

  AnalysisContext before = AnalysisContext::from(gen.mdp, gen.features);
  AnalysisContext after = AnalysisContext::from(mdp, features);
  CHECK(predict_fqi(before).prediction == predict_fqi(after).prediction);
  CHECK(predict_td(before, 0.1).prediction == predict_td(after, 0.1).prediction);
  CHECK(td_alpha_interval(before).second ==
        doctest::Approx(td_alpha_interval(after).second).epsilon(1e-9));
}

TEST_CASE("read_json reports unreadable paths") {
  CHECK_THROWS_AS(read_json("no_such_dir/nothing.json"), std::runtime_error);
}
