#include "lstdlab/harness.hpp"

#include "lstdlab/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lstdlab {

std::string to_string(Regime r) {
  switch (r) {
    case Regime::general: return "general";
    case Regime::on_policy: return "on_policy";
    case Regime::full_column_rank: return "full_column_rank";
    case Regime::full_row_rank: return "full_row_rank";
    case Regime::orthogonal_rows: return "orthogonal_rows";
    case Regime::tabular: return "tabular";
    case Regime::z_matrix_feature_reversal: return "z_matrix_feature_reversal";
    case Regime::rank_invariance_violating: return "rank_invariance_violating";
  }
  throw std::logic_error("to_string: bad Regime");
}

Regime regime_from_string(const std::string& s) {
  for (Regime r : all_regimes()) {
    if (to_string(r) == s) return r;
  }
  throw std::invalid_argument("unknown regime: " + s);
}

const std::vector<Regime>& all_regimes() {
  static const std::vector<Regime> regimes = {
      Regime::general,
      Regime::on_policy,
      Regime::full_column_rank,
      Regime::full_row_rank,
      Regime::orthogonal_rows,
      Regime::tabular,
      Regime::z_matrix_feature_reversal,
      Regime::rank_invariance_violating,
  };
  return regimes;
}

namespace {

using Rng = std::mt19937_64;

Vector simplex_row(Rng& rng, int n) {
  std::exponential_distribution<double> draw(1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = draw(rng) + 1e-3;
  return v / v.sum();
}

Matrix random_stochastic(Rng& rng, int h) {
  Matrix p(h, h);
  for (int i = 0; i < h; ++i) p.row(i) = simplex_row(rng, h).transpose();
  return p;
}

Matrix gaussian(Rng& rng, int rows, int cols) {
  std::normal_distribution<double> draw(0.0, 1.0);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = draw(rng);
  return m;
}

Matrix dynamics_core(const MdpInstance& mdp) {
  return mdp.D() * (Matrix::Identity(mdp.h, mdp.h) - mdp.gamma * mdp.P);
}

// Features that make the target system singular beyond ker(Phi): pick q with
// q^T sym(C) q = 0, span a subspace containing q that is orthogonal to C q,
// and factor it through a random full-row-rank mixing matrix.
Matrix rank_invariance_breaking_features(Rng& rng, const MdpInstance& mdp, int d) {
  const int h = mdp.h;
  Matrix c = dynamics_core(mdp);
  Matrix sym = 0.5 * (c + c.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.eigenvalues()(0) > -1e-8 || es.eigenvalues()(h - 1) < 1e-8) {
    throw std::runtime_error("rank_invariance_breaking_features: sym dynamics not indefinite");
  }
  Vector vplus = es.eigenvectors().col(h - 1);
  Vector vminus = es.eigenvectors().col(0);
  double lo = 0.0, hi = M_PI / 2.0;
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    Vector u = std::cos(mid) * vplus + std::sin(mid) * vminus;
    if (u.transpose() * sym * u > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double theta = 0.5 * (lo + hi);
  Vector q = std::cos(theta) * vplus + std::sin(theta) * vminus;
  q.normalize();
  Vector cq = c * q;
  if (cq.norm() < 1e-12) {
    throw std::runtime_error("rank_invariance_breaking_features: C q vanished");
  }
  cq.normalize();

  int r = std::min(d, h - 1);
  Matrix u(h, r);
  u.col(0) = q - cq * (cq.dot(q));
  u.col(0).normalize();
  for (int j = 1; j < r; ++j) {
    Vector v = gaussian(rng, h, 1);
    v -= cq * cq.dot(v);
    for (int i = 0; i < j; ++i) v -= u.col(i) * u.col(i).dot(v);
    if (v.norm() < 1e-8) {
      v = gaussian(rng, h, 1);
      v -= cq * cq.dot(v);
      for (int i = 0; i < j; ++i) v -= u.col(i) * u.col(i).dot(v);
    }
    u.col(j) = v.normalized();
  }
  Matrix w = gaussian(rng, r, d);
  return u * w;
}

}  // namespace

GeneratedInstance generate(const GeneratorSpec& spec) {
  Rng rng(spec.seed * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL);
  std::uniform_real_distribution<double> gamma_draw(spec.gamma_lo, spec.gamma_hi);

  if (spec.h < 2) throw std::invalid_argument("generate: h must be at least 2");
  if (spec.d < 1) throw std::invalid_argument("generate: d must be at least 1");

  int d = spec.d;
  switch (spec.regime) {
    case Regime::full_column_rank: d = std::min(d, spec.h); break;
    case Regime::full_row_rank:
    case Regime::orthogonal_rows: d = std::max(d, spec.h); break;
    case Regime::tabular:
    case Regime::z_matrix_feature_reversal: d = spec.h; break;
    case Regime::rank_invariance_violating:
      if (spec.h < 3) throw std::invalid_argument("generate: the rank-invariance-violating regime needs h >= 3");
      d = std::max(d, 2);
      break;
    default: break;
  }

  const int max_tries = 10000;
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    MdpInstance mdp;
    mdp.h = spec.h;
    mdp.P = random_stochastic(rng, spec.h);
    mdp.R = gaussian(rng, spec.h, 1);
    mdp.mu = simplex_row(rng, spec.h);
    mdp.gamma = (spec.regime == Regime::rank_invariance_violating)
                    ? std::uniform_real_distribution<double>(0.9, 0.99)(rng)
                    : gamma_draw(rng);
    if (spec.regime == Regime::on_policy) mdp.mu = stationary_distribution(mdp.P);
    mdp.validate();

    Matrix phi;
    switch (spec.regime) {
      case Regime::tabular:
        phi = Matrix::Identity(spec.h, spec.h);
        break;
      case Regime::z_matrix_feature_reversal: {
        std::uniform_real_distribution<double> scale(0.5, 1.5);
        Vector c(spec.h);
        for (int i = 0; i < spec.h; ++i) c(i) = scale(rng);
        phi = Matrix(c.asDiagonal());
        break;
      }
      case Regime::orthogonal_rows: {
        Eigen::HouseholderQR<Matrix> qr(gaussian(rng, d, spec.h));
        Matrix q = qr.householderQ() * Matrix::Identity(d, spec.h);
        phi = q.transpose();
        break;
      }
      case Regime::rank_invariance_violating: {
        Matrix sym = 0.5 * (dynamics_core(mdp) + dynamics_core(mdp).transpose());
        Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
        if (es.eigenvalues()(0) > -1e-6) continue;
        phi = rank_invariance_breaking_features(rng, mdp, d);
        break;
      }
      default:
        phi = gaussian(rng, spec.h, d);
        break;
    }

    FeatureMap features = FeatureMap::from(phi);
    if (spec.regime == Regime::full_column_rank && !features.full_column_rank) continue;
    if ((spec.regime == Regime::full_row_rank || spec.regime == Regime::orthogonal_rows) &&
        !features.full_row_rank) {
      continue;
    }
    if (spec.regime == Regime::rank_invariance_violating) {
      MomentSet m = build_moments(mdp, features);
      if (check_rank_invariance(m, features, mdp).holds) continue;
    }

    GeneratedInstance gen;
    gen.mdp = mdp;
    gen.features = features;
    gen.regime = spec.regime;
    gen.seed = spec.seed;
    return gen;
  }
  throw std::runtime_error("generate: rejection sampling exhausted for regime " +
                           to_string(spec.regime));
}

Vector oracle_fixed_point(const Matrix& a, const Vector& b, const Vector& theta0) {
  require_square(a, "oracle_fixed_point");
  const int n = static_cast<int>(a.rows());
  double scale = a.norm();
  if (scale == 0.0) return theta0;
  if (numerical_rank(a) == n) return a.fullPivHouseholderQr().solve(b);
  Matrix s = a / scale;
  const int k = std::max(1, matrix_index(a));
  Matrix sk = Matrix::Identity(n, n);
  for (int i = 0; i < k; ++i) sk = sk * s;
  // the power formula cubes the spectral spread, so the rank cut here must sit
  // well below the library-wide one to keep the small true directions
  Matrix skk = sk * sk * s;
  Eigen::JacobiSVD<Matrix> svd(skk, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  Vector inv = Vector::Zero(sv.size());
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-13 * sv(0)) inv(i) = 1.0 / sv(i);
  Matrix pinv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  Matrix ad = sk * pinv * sk / scale;
  return ad * b + (Matrix::Identity(n, n) - a * ad) * theta0;
}

namespace {

double window_mean(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
  double s = 0.0;
  for (std::size_t i = lo; i < hi; ++i) s += v[i];
  return s / static_cast<double>(hi - lo);
}

}  // namespace

EmpiricalOutcome classify_trace(const IterationTrace& trace) {
  if (trace.status == RunStatus::converged) return EmpiricalOutcome::converged;
  if (trace.status == RunStatus::diverged) return EmpiricalOutcome::diverged;
  const std::vector<double>& steps = trace.step_norms;
  const std::size_t n = steps.size();
  if (n < 200) return EmpiricalOutcome::ambiguous;
  std::size_t w = std::max<std::size_t>(n / 20, 10);
  double tail = window_mean(steps, n - w, n);
  double mid = window_mean(steps, n / 2, n / 2 + w);
  if (tail < 1e-13) return EmpiricalOutcome::converged;
  if (mid < 1e-300) return EmpiricalOutcome::converged;
  double ratio = tail / mid;
  if (ratio > 10.0) return EmpiricalOutcome::diverged;
  if (ratio < 0.1) return EmpiricalOutcome::converged;
  return EmpiricalOutcome::ambiguous;
}

namespace {

struct Checker {
  const GeneratedInstance& gen;
  const CampaignConfig& config;
  CampaignResult& result;

  void record(const std::string& name, bool agreed) {
    CheckTally& t = result.tallies[name];
    ++t.checked;
    ++result.total_checked;
    if (agreed) {
      ++t.agreed;
    } else {
      ++t.mismatched;
      ++result.total_mismatched;
      std::ostringstream msg;
      msg << name << " regime=" << to_string(gen.regime) << " seed=" << gen.seed
          << " h=" << gen.mdp.h << " d=" << gen.features.d;
      result.mismatches.push_back(msg.str());
      if (!config.reproducer_dir.empty()) {
        std::ostringstream path;
        path << config.reproducer_dir << "/" << to_string(gen.regime) << "_" << gen.seed << "_"
             << name << ".json";
        save_instance(path.str(), gen.mdp, gen.features);
      }
    }
  }

  void skip_marginal(const std::string& name) {
    ++result.tallies[name].skipped_marginal;
  }

  void skip_ambiguous(const std::string& name) {
    ++result.tallies[name].skipped_ambiguous;
  }
};

IterationTrace run_capped(const AnalysisContext& ctx, const AlgorithmConfig& cfg,
                          const CampaignConfig& campaign) {
  RunLimits limits;
  limits.max_iters = campaign.run_iters_cap;
  limits.record_every = 1000000;
  return run(ctx.moments, ctx.mdp.gamma, cfg, limits);
}

bool limits_agree(const Vector& predicted, const Vector& actual) {
  return (predicted - actual).norm() <= 1e-6 * (1.0 + predicted.norm());
}

void check_prediction_against_run(Checker& ck, const std::string& name,
                                  const AnalysisContext& ctx, const ConvergenceVerdict& verdict,
                                  const AlgorithmConfig& cfg) {
  if (verdict.prediction == Prediction::marginal) {
    ck.skip_marginal(name);
    return;
  }
  IterationTrace trace = run_capped(ctx, cfg, ck.config);
  EmpiricalOutcome outcome = classify_trace(trace);
  if (outcome == EmpiricalOutcome::ambiguous) {
    ck.skip_ambiguous(name);
    return;
  }
  bool predicted_conv = verdict.prediction == Prediction::converges_for_all_theta0;
  bool agreed = predicted_conv == (outcome == EmpiricalOutcome::converged);
  if (agreed && predicted_conv && trace.limit && verdict.predicted_limit) {
    Vector theta0 = cfg.theta0.size() ? cfg.theta0 : Vector::Zero(ctx.target.A.cols());
    agreed = limits_agree(verdict.predicted_limit->at(theta0), *trace.limit);
  }
  ck.record(name, agreed);
}

}  // namespace

void check_instance(const GeneratedInstance& gen, const CampaignConfig& config,
                    CampaignResult& result) {
  AnalysisContext ctx = AnalysisContext::from(gen.mdp, gen.features);
  Checker ck{gen, config, result};
  const int d = gen.features.d;

  ck.record("encoder_decoder_spectrum", encoder_decoder_report(ctx).nonzero_spectra_match);

  auto [alpha_lo, alpha_hi] = td_alpha_interval(ctx);
  (void)alpha_lo;
  bool interval_usable = std::isfinite(alpha_hi) && alpha_hi > 1e-9;

  if (interval_usable) {
    double alpha = 0.5 * alpha_hi;
    check_prediction_against_run(ck, "td_inside_interval", ctx, predict_td(ctx, alpha),
                                 {AlgorithmKind::td, alpha, 1, Vector()});
    double above = 1.5 * alpha_hi;
    check_prediction_against_run(ck, "td_outside_interval", ctx, predict_td(ctx, above),
                                 {AlgorithmKind::td, above, 1, Vector()});
  }

  check_prediction_against_run(ck, "fqi_prediction", ctx, predict_fqi(ctx),
                               {AlgorithmKind::fqi, 0.0, 1, Vector()});

  Eigen::SelfAdjointEigenSolver<Matrix> cov_es(ctx.moments.sigma_cov);
  double smax = cov_es.eigenvalues().maxCoeff();
  if (smax > 1e-12) {
    double alpha = 0.9 / smax;
    for (int t : {2, 8}) {
      check_prediction_against_run(ck, "pfqi_prediction", ctx, predict_pfqi(ctx, alpha, t),
                                   {AlgorithmKind::pfqi, alpha, t, Vector()});
    }
    AffineMap td1 = algorithm_map(ctx.moments, ctx.mdp.gamma, {AlgorithmKind::td, alpha, 1, {}});
    AffineMap pf1 = algorithm_map(ctx.moments, ctx.mdp.gamma, {AlgorithmKind::pfqi, alpha, 1, {}});
    ck.record("pfqi_t1_matches_td",
              (td1.H - pf1.H).norm() < 1e-9 * (1.0 + td1.H.norm()) &&
                  (td1.c - pf1.c).norm() < 1e-9 * (1.0 + td1.c.norm()));
  }

  if (ctx.consistent) {
    Eigen::JacobiSVD<Matrix> target_svd(ctx.target.A);
    int rank = numerical_rank(ctx.target.A);
    double sv_spread =
        rank > 0 ? target_svd.singularValues()(rank - 1) / target_svd.singularValues()(0) : 0.0;
    if (sv_spread >= 1e-4) {
      Vector theta0 = Vector::Zero(d);
      Vector oracle = oracle_fixed_point(ctx.target.A, ctx.target.b, theta0);
      Matrix ad = drazin_inverse(ctx.target.A);
      Vector direct = ad * ctx.target.b;
      ck.record("fixed_point_oracle", limits_agree(direct, oracle));
    }

    SolutionSet target_set = solve(ctx.target);
    SolutionSet fqi_set = solve(ctx.fqi);
    if (fqi_set.consistent) {
      SetRelation rel = compare_solution_sets(fqi_set, target_set);
      ck.record("fqi_solutions_within_target",
                rel == SetRelation::equal || rel == SetRelation::s1_subset_s2);
    }
  }

  StabilityReport stability = td_stability(ctx);
  if (stability.stable && !stability.marginal) {
    TransitionReport tr = transition_analysis(ctx, {}, {1, 2, 4});
    bool all_positive = true;
    for (const auto& [t, eps] : tr.epsilon_t) all_positive = all_positive && eps > 0.0;
    ck.record("stable_td_admits_pfqi", all_positive);
  }

  switch (gen.regime) {
    case Regime::on_policy:
      ck.record("on_policy_guarantees", onpolicy_report(ctx).all_hold);
      break;
    case Regime::z_matrix_feature_reversal: {
      ZMatrixReport z = zmatrix_equivalence(ctx);
      ck.record("feature_reversal_assumptions", z.assumption2 && z.assumption1);
      if (z.applicable && !stability.marginal) {
        ck.record("z_matrix_td_fqi_equivalence", z.equivalence_holds);
      }
      break;
    }
    case Regime::rank_invariance_violating:
      ck.record("rank_invariance_violated", !ctx.rank_invariance);
      break;
    case Regime::full_row_rank:
    case Regime::orthogonal_rows:
    case Regime::tabular: {
      ConvergenceVerdict v = predict_fqi(ctx);
      if (v.prediction == Prediction::marginal) {
        ck.skip_marginal("full_row_rank_fqi_converges");
      } else {
        ck.record("full_row_rank_fqi_converges",
                  v.prediction == Prediction::converges_for_all_theta0);
      }
      break;
    }
    default:
      break;
  }
}

CampaignResult run_campaign(const CampaignConfig& config) {
  CampaignResult result;
  for (Regime regime : config.regimes) {
    for (int i = 0; i < config.instances_per_regime; ++i) {
      GeneratorSpec spec;
      spec.seed = config.base_seed + 1000003ULL * static_cast<std::uint64_t>(i) +
                  777767ULL * static_cast<std::uint64_t>(static_cast<int>(regime));
      spec.regime = regime;
      spec.h = 2 + static_cast<int>((spec.seed / 7) % 7);       // 2..8
      spec.d = 1 + static_cast<int>((spec.seed / 13) % 10);     // 1..10
      if (regime == Regime::rank_invariance_violating && spec.h < 3) spec.h = 3;
      GeneratedInstance gen = generate(spec);
      check_instance(gen, config, result);
    }
  }
  return result;
}

namespace {

bool probe_convergent(const AnalysisContext& ctx, double alpha, int probe_iters) {
  AlgorithmConfig cfg{AlgorithmKind::td, alpha, 1, Vector()};
  double ratio = 1.0;
  for (int round = 0; round < 3; ++round) {
    RunLimits limits;
    limits.max_iters = probe_iters;
    limits.record_every = probe_iters;
    IterationTrace trace = run(ctx.moments, ctx.mdp.gamma, cfg, limits);
    if (trace.status == RunStatus::converged) return true;
    if (trace.status == RunStatus::diverged) return false;
    const std::vector<double>& steps = trace.step_norms;
    const std::size_t n = steps.size();
    std::size_t w = std::max<std::size_t>(n / 20, 5);
    double tail = window_mean(steps, n - w, n);
    double mid = window_mean(steps, n / 2, n / 2 + w);
    ratio = tail / mid;
    // a slowly rotating mode can hide weak decay inside one window span,
    // so indecisive ratios get a longer look before the call is made
    if (ratio < 0.5) return true;
    if (ratio > 2.0) return false;
    probe_iters *= 10;
  }
  return ratio < 1.0;
}

}  // namespace

double empirical_td_alpha_boundary(const AnalysisContext& ctx, int probe_iters) {
  // the far-from-boundary probes can misread slow transients, so the bracket
  // bottom is the largest convergent grid point rather than the first failure
  double lo = 0.0;
  for (double probe = 1e-6; probe < 1e9; probe *= 2.0) {
    if (probe_convergent(ctx, probe, probe_iters)) lo = probe;
  }
  if (lo == 0.0) return 0.0;
  double hi = 2.0 * lo;
  while (hi - lo > 0.005 * lo) {
    double mid = 0.5 * (lo + hi);
    if (probe_convergent(ctx, mid, probe_iters)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace lstdlab
