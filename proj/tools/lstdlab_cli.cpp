#include "lstdlab/harness.hpp"
#include "lstdlab/json_io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 2;
constexpr int kVerificationFailure = 3;
constexpr int kMarginal = 4;

using namespace lstdlab;

void print_verdict(const ConvergenceVerdict& v) {
  std::cout << "algorithm: " << to_string(v.algorithm) << "\n";
  std::cout << "prediction: " << to_string(v.prediction) << "\n";
  for (const ConditionCheck& c : v.conditions) {
    std::cout << "  [" << (c.holds ? "yes" : "no ") << "] " << c.name << " (" << c.citation
              << ")\n";
  }
  if (!v.specializations.empty()) {
    std::cout << "  specializations:";
    for (const std::string& s : v.specializations) std::cout << " " << s;
    std::cout << "\n";
  }
  if (v.alpha_interval) {
    std::cout << "  convergent learning rates: (" << v.alpha_interval->first << ", "
              << v.alpha_interval->second << ")\n";
  }
  if (v.predicted_limit) {
    std::cout << "  limit from zero start: "
              << v.predicted_limit->particular.transpose() << "\n";
  }
}

int cmd_analyze(const std::string& instance_path, const std::string& algorithm, double alpha,
                int t, const std::string& json_out) {
  auto [mdp, features] = load_instance(instance_path);
  AnalysisContext ctx = AnalysisContext::from(mdp, features);

  std::vector<ConvergenceVerdict> verdicts;
  if (algorithm == "td" || algorithm == "all") verdicts.push_back(predict_td(ctx, alpha));
  if (algorithm == "fqi" || algorithm == "all") verdicts.push_back(predict_fqi(ctx));
  if (algorithm == "pfqi" || algorithm == "all") verdicts.push_back(predict_pfqi(ctx, alpha, t));
  if (verdicts.empty()) throw std::invalid_argument("unknown algorithm: " + algorithm);

  bool any_marginal = false;
  Json out = Json::array();
  for (const ConvergenceVerdict& v : verdicts) {
    print_verdict(v);
    std::cout << "\n";
    out.push_back(verdict_to_json(v));
    any_marginal = any_marginal || v.prediction == Prediction::marginal;
  }

  StabilityReport stability = td_stability(ctx);
  std::cout << "td stable for small enough learning rates: "
            << (stability.stable ? "yes" : "no") << "\n";
  std::cout << "rank invariance: " << (ctx.rank_invariance ? "holds" : "fails") << "\n";
  std::cout << "target system nonsingular: " << (ctx.target_nonsingular ? "yes" : "no") << "\n";

  if (!json_out.empty()) write_json(json_out, out);
  return any_marginal ? kMarginal : kOk;
}

int cmd_simulate(const std::string& instance_path, const std::string& algorithm, double alpha,
                 int t, int iters, const std::string& csv_out, const std::string& json_out) {
  auto [mdp, features] = load_instance(instance_path);
  MomentSet m = build_moments(mdp, features);

  AlgorithmConfig cfg;
  if (algorithm == "td") cfg.kind = AlgorithmKind::td;
  else if (algorithm == "fqi") cfg.kind = AlgorithmKind::fqi;
  else if (algorithm == "pfqi") cfg.kind = AlgorithmKind::pfqi;
  else throw std::invalid_argument("unknown algorithm: " + algorithm);
  cfg.alpha = alpha;
  cfg.t = t;

  RunLimits limits;
  limits.max_iters = iters;
  IterationTrace trace = run(m, mdp.gamma, cfg, limits);

  const char* status = trace.status == RunStatus::converged ? "converged"
                       : trace.status == RunStatus::diverged ? "diverged"
                                                             : "max_iters";
  std::cout << "status: " << status << " after " << trace.step_norms.size() << " iterations\n";
  if (trace.limit) std::cout << "limit: " << trace.limit->transpose() << "\n";

  if (!csv_out.empty()) {
    std::ofstream csv(csv_out);
    if (!csv) throw std::runtime_error("cannot open " + csv_out);
    csv << "iter";
    for (int j = 0; j < features.d; ++j) csv << ",theta_" << j;
    csv << ",residual\n";
    for (std::size_t i = 0; i < trace.iterates.size(); ++i) {
      csv << i;
      for (int j = 0; j < features.d; ++j) csv << "," << trace.iterates[i](j);
      csv << "," << trace.residuals[i] << "\n";
    }
  }
  if (!json_out.empty()) write_json(json_out, trace_to_json(trace));
  return kOk;
}

int cmd_verify(const std::string& regime, int count, std::uint64_t seed,
               const std::string& reproducer_dir) {
  CampaignConfig config;
  config.base_seed = seed;
  config.instances_per_regime = count;
  if (regime != "all") config.regimes = {regime_from_string(regime)};
  config.reproducer_dir = reproducer_dir;

  CampaignResult result = run_campaign(config);
  int marginal = 0, ambiguous = 0;
  for (const auto& [name, tally] : result.tallies) {
    std::cout << name << ": " << tally.agreed << "/" << tally.checked << " agree";
    if (tally.skipped_marginal) std::cout << ", " << tally.skipped_marginal << " marginal";
    if (tally.skipped_ambiguous) std::cout << ", " << tally.skipped_ambiguous << " inconclusive";
    std::cout << "\n";
    marginal += tally.skipped_marginal;
    ambiguous += tally.skipped_ambiguous;
  }
  std::cout << "total: " << result.total_checked - result.total_mismatched << "/"
            << result.total_checked << " agree, " << marginal << " marginal, " << ambiguous
            << " inconclusive\n";
  for (const std::string& m : result.mismatches) std::cout << "mismatch: " << m << "\n";
  if (result.total_mismatched > 0) return kVerificationFailure;
  return (marginal + ambiguous) > 0 ? kMarginal : kOk;
}

int cmd_transitions(const std::string& instance_path, std::vector<double> alphas,
                    std::vector<int> ts, const std::string& json_out) {
  auto [mdp, features] = load_instance(instance_path);
  AnalysisContext ctx = AnalysisContext::from(mdp, features);
  if (ts.empty()) ts = {1, 2, 4, 8, 16, 32, 64};
  TransitionReport rep = transition_analysis(ctx, alphas, ts);
  std::cout << "td stable: " << (rep.td_stable ? "yes" : "no") << "\n";
  for (const auto& [t, eps] : rep.epsilon_t) {
    std::cout << "t=" << t << ": convergent learning rates up to " << eps << "\n";
  }
  for (const auto& [a, tmin] : rep.t_threshold) {
    std::cout << "alpha=" << a << ": ";
    if (tmin) {
      std::cout << "convergent for every tested t >= " << *tmin << "\n";
    } else {
      std::cout << "no tested t converges\n";
    }
  }
  if (!json_out.empty()) write_json(json_out, transition_to_json(rep));
  return kOk;
}

int cmd_generate(const std::string& regime, std::uint64_t seed, int h, int d,
                 const std::string& out) {
  GeneratorSpec spec;
  spec.seed = seed;
  spec.h = h;
  spec.d = d;
  spec.regime = regime_from_string(regime);
  GeneratedInstance gen = generate(spec);
  save_instance(out, gen.mdp, gen.features);
  std::cout << "wrote " << out << " (regime " << regime << ", h=" << gen.mdp.h
            << ", d=" << gen.features.d << ")\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convergence analysis for expected TD, FQI, and partial FQI"};
  app.require_subcommand(1);

  std::string instance_path, algorithm = "all", json_out, csv_out, regime = "general", out_path;
  double alpha = 0.01;
  int t = 1, iters = 0, h = 4, d = 2;
  std::uint64_t seed = 1;
  std::vector<double> alphas;
  std::vector<int> ts;

  CLI::App* analyze = app.add_subcommand("analyze", "Predict convergence from the moments");
  analyze->add_option("--instance", instance_path, "Instance JSON file")->required();
  analyze->add_option("--algorithm", algorithm, "td, fqi, pfqi, or all");
  analyze->add_option("--alpha", alpha, "Learning rate for td and pfqi");
  analyze->add_option("--t", t, "Inner updates per target for pfqi");
  analyze->add_option("--json", json_out, "Write verdicts to this JSON file");

  CLI::App* simulate = app.add_subcommand("simulate", "Run the iteration and record the trace");
  simulate->add_option("--instance", instance_path, "Instance JSON file")->required();
  simulate->add_option("--algorithm", algorithm, "td, fqi, or pfqi")->required();
  simulate->add_option("--alpha", alpha, "Learning rate for td and pfqi");
  simulate->add_option("--t", t, "Inner updates per target for pfqi");
  simulate->add_option("--iters", iters, "Iteration cap (0 keeps the default)");
  simulate->add_option("--csv", csv_out, "Write the trace to this CSV file");
  simulate->add_option("--json", json_out, "Write the trace to this JSON file");

  int count = 20;
  std::string reproducer_dir;
  CLI::App* verify = app.add_subcommand("verify", "Compare predictions against empirical runs");
  verify->add_option("--regime", regime, "Regime to test, or all");
  verify->add_option("--count", count, "Instances per regime");
  verify->add_option("--seed", seed, "Campaign base seed");
  verify->add_option("--reproducers", reproducer_dir, "Directory for mismatch instance files");

  CLI::App* transitions =
      app.add_subcommand("transitions", "Admissible learning rates as t grows");
  transitions->add_option("--instance", instance_path, "Instance JSON file")->required();
  transitions->add_option("--alphas", alphas, "Learning rates to test for a threshold t");
  transitions->add_option("--ts", ts, "Inner update counts to scan");
  transitions->add_option("--json", json_out, "Write the report to this JSON file");

  CLI::App* gen = app.add_subcommand("generate", "Write a random instance");
  gen->add_option("--regime", regime, "Structural regime of the instance");
  gen->add_option("--seed", seed, "Generator seed");
  gen->add_option("--h", h, "Number of state-action pairs");
  gen->add_option("--d", d, "Feature dimension");
  gen->add_option("--out", out_path, "Output JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze->parsed()) return cmd_analyze(instance_path, algorithm, alpha, t, json_out);
    if (simulate->parsed()) return cmd_simulate(instance_path, algorithm, alpha, t, iters,
                                                csv_out, json_out);
    if (verify->parsed()) return cmd_verify(regime, count, seed, reproducer_dir);
    if (transitions->parsed()) return cmd_transitions(instance_path, alphas, ts, json_out);
    if (gen->parsed()) return cmd_generate(regime, seed, h, d, out_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kOk;
}
