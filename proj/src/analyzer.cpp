#include "lstdlab/analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lstdlab {

std::string to_string(Prediction p) {
  switch (p) {
    case Prediction::converges_for_all_theta0: return "converges_for_all_theta0";
    case Prediction::diverges: return "diverges";
    case Prediction::no_fixed_point: return "no_fixed_point";
    case Prediction::marginal: return "marginal";
  }
  throw std::logic_error("to_string: bad Prediction");
}

std::string to_string(AlgorithmKind k) {
  switch (k) {
    case AlgorithmKind::td: return "td";
    case AlgorithmKind::fqi: return "fqi";
    case AlgorithmKind::pfqi: return "pfqi";
  }
  throw std::logic_error("to_string: bad AlgorithmKind");
}

AnalysisContext AnalysisContext::from(const MdpInstance& mdp, const FeatureMap& features) {
  AnalysisContext ctx;
  ctx.mdp = mdp;
  ctx.features = features;
  ctx.moments = build_moments(mdp, features);
  ctx.target = target_system(ctx.moments, mdp.gamma);
  ctx.fqi = fqi_system(ctx.moments, mdp.gamma);
  ctx.rank_invariance = check_rank_invariance(ctx.moments, features, mdp).holds;
  ctx.target_nonsingular = check_nonsingularity(ctx.moments, features, mdp, ctx.target);
  ctx.consistent = check_consistency(ctx.target);
  return ctx;
}

namespace {

AffineLimit limit_of(const Matrix& a, const Vector& b) {
  Matrix ad = drazin_inverse(a);
  AffineLimit lim;
  lim.particular = ad * b;
  lim.kernel_projector = Matrix::Identity(a.rows(), a.cols()) - a * ad;
  return lim;
}

double spectrum_scale(const ComplexVector& eigs) {
  double s = 0.0;
  for (int i = 0; i < eigs.size(); ++i) s = std::max(s, std::abs(eigs(i)));
  return s;
}

}  // namespace

StabilityReport td_stability(const AnalysisContext& ctx) {
  StabilityReport rep;
  const Matrix& a = ctx.target.A;
  SpectralReport sp = spectral_report(a);
  bool index_ok = sp.index <= 1;

  rep.conditions.push_back({"target_system_consistent", ctx.consistent, "td_general_stable"});
  rep.conditions.push_back({"target_positive_semi_stable", sp.positive_semi_stable,
                            "td_general_stable"});
  rep.conditions.push_back({"target_index_at_most_one", index_ok, "td_general_stable"});

  if (is_z_matrix(a)) {
    rep.m_matrix_relaxation_used = true;
    bool relaxed = ctx.consistent && sp.nonnegative_stable && index_ok;
    rep.conditions.push_back({"z_matrix_nonnegative_stable", sp.nonnegative_stable,
                              "m_matrix_relaxation"});
    bool singular_m = is_m_matrix(a) && sp.index > 0;
    rep.singular_m_matrix_flagged = singular_m;
    bool strict = ctx.consistent && sp.positive_semi_stable && index_ok;
    if (relaxed != strict) {
      throw std::runtime_error("td_stability: Z-matrix relaxation disagrees with the strict test");
    }
  }

  rep.stable = ctx.consistent && sp.positive_semi_stable && index_ok;
  rep.marginal = sp.marginal;
  return rep;
}

std::pair<double, double> td_alpha_interval(const AnalysisContext& ctx) {
  SpectralReport sp = spectral_report(ctx.target.A);
  double scale = spectrum_scale(sp.eigenvalues);
  if (scale == 0.0) return {0.0, 0.0};
  double eps = std::numeric_limits<double>::infinity();
  bool any = false;
  for (int i = 0; i < sp.eigenvalues.size(); ++i) {
    Complex lam = sp.eigenvalues(i);
    if (std::abs(lam) <= Tol::eig_cluster * scale) continue;
    any = true;
    double bound = 2.0 * lam.real() / std::norm(lam);
    eps = std::min(eps, bound);
  }
  if (!any) return {0.0, 0.0};
  return {0.0, std::max(eps, 0.0)};
}

ConvergenceVerdict predict_td(const AnalysisContext& ctx, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("predict_td: alpha must be positive");
  ConvergenceVerdict v;
  v.algorithm = AlgorithmKind::td;
  const Matrix& a = ctx.target.A;
  Matrix h = Matrix::Identity(a.rows(), a.cols()) - alpha * a;
  SpectralReport sp = spectral_report(h);

  v.conditions.push_back({"target_system_consistent", ctx.consistent, "tdgeneralconvergence"});
  v.conditions.push_back({"iteration_matrix_semiconvergent", sp.semiconvergent,
                          "tdgeneralconvergence"});
  v.alpha_interval = td_alpha_interval(ctx);

  if (sp.marginal) {
    v.prediction = Prediction::marginal;
  } else if (!ctx.consistent) {
    v.prediction = Prediction::no_fixed_point;
  } else if (!sp.semiconvergent) {
    v.prediction = Prediction::diverges;
  } else {
    v.prediction = Prediction::converges_for_all_theta0;
    v.predicted_limit = limit_of(a, ctx.target.b);
  }
  return v;
}

ConvergenceVerdict predict_fqi(const AnalysisContext& ctx) {
  ConvergenceVerdict v;
  v.algorithm = AlgorithmKind::fqi;
  const Matrix& af = ctx.fqi.A;
  const Vector& bf = ctx.fqi.b;
  Matrix h = Matrix::Identity(af.rows(), af.cols()) - af;  // gamma Sigma_cov^+ Sigma_cr
  SpectralReport sp = spectral_report(h);

  bool fqi_consistent = in_column_space(af, bf);
  v.conditions.push_back({"fqi_system_consistent", fqi_consistent, "fqigeneral"});
  v.conditions.push_back({"fqi_iteration_matrix_semiconvergent", sp.semiconvergent, "fqigeneral"});

  bool general_converges = fqi_consistent && sp.semiconvergent;

  if (ctx.target_nonsingular) {
    v.specializations.push_back("nonsingular_target");
    bool spec = sp.spectral_radius < 1.0;
    v.conditions.push_back({"spectral_radius_below_one", spec, "nonsingularfqi"});
    if (!sp.marginal && spec != general_converges) {
      throw std::runtime_error("predict_fqi: nonsingular specialization disagrees");
    }
  } else if (ctx.rank_invariance) {
    v.specializations.push_back("rank_invariance");
    bool spec = sp.spectral_radius < 1.0;
    v.conditions.push_back({"spectral_radius_below_one", spec, "ucfqi"});
    if (!sp.marginal && spec != general_converges) {
      throw std::runtime_error("predict_fqi: rank-invariance specialization disagrees");
    }
  } else if (ctx.features.full_row_rank) {
    v.specializations.push_back("full_row_rank");
    v.conditions.push_back({"spectral_radius_equals_gamma",
                            std::abs(sp.spectral_radius - ctx.mdp.gamma) < 1e-6,
                            "full_row_rank_fqi"});
    if (!sp.marginal && !general_converges) {
      throw std::runtime_error("predict_fqi: full-row-rank specialization disagrees");
    }
  }
  if (ctx.features.full_column_rank && !ctx.target_nonsingular) {
    v.specializations.push_back("full_column_rank");
  }

  if (sp.marginal) {
    v.prediction = Prediction::marginal;
  } else if (!fqi_consistent) {
    v.prediction = Prediction::no_fixed_point;
  } else if (!sp.semiconvergent) {
    v.prediction = Prediction::diverges;
  } else {
    v.prediction = Prediction::converges_for_all_theta0;
    v.predicted_limit = limit_of(af, bf);
  }
  return v;
}

ConvergenceVerdict predict_pfqi(const AnalysisContext& ctx, double alpha, int t) {
  if (!(alpha > 0.0)) throw std::invalid_argument("predict_pfqi: alpha must be positive");
  if (t < 1) throw std::invalid_argument("predict_pfqi: t must be at least 1");
  ConvergenceVerdict v;
  v.algorithm = AlgorithmKind::pfqi;

  Eigen::SelfAdjointEigenSolver<Matrix> es(ctx.moments.sigma_cov);
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    double s = alpha * es.eigenvalues()(i);
    if (std::abs(s - 1.0) < 1e-12 || std::abs(s - 2.0) < 1e-12) {
      throw std::invalid_argument(
          "predict_pfqi: alpha * Sigma_cov has an eigenvalue in {1, 2}");
    }
  }

  Matrix mp = preconditioner(AlgorithmKind::pfqi, ctx.moments, alpha, t);
  Matrix ma = mp * ctx.target.A;
  Matrix h = Matrix::Identity(ma.rows(), ma.cols()) - ma;
  SpectralReport sp = spectral_report(h);

  v.conditions.push_back({"target_system_consistent", ctx.consistent,
                          "pfqi_general_convergence"});
  v.conditions.push_back({"iteration_matrix_semiconvergent", sp.semiconvergent,
                          "pfqi_general_convergence"});

  if (ctx.target_nonsingular) {
    v.specializations.push_back("nonsingular_target");
    bool spec = sp.spectral_radius < 1.0;
    v.conditions.push_back({"spectral_radius_below_one", spec, "nonsingular_pfqi"});
    if (!sp.marginal && spec != (ctx.consistent && sp.semiconvergent)) {
      throw std::runtime_error("predict_pfqi: nonsingular specialization disagrees");
    }
  }
  if (ctx.features.full_row_rank) v.specializations.push_back("full_row_rank");

  if (sp.marginal) {
    v.prediction = Prediction::marginal;
  } else if (!ctx.consistent) {
    v.prediction = Prediction::no_fixed_point;
  } else if (!sp.semiconvergent) {
    v.prediction = Prediction::diverges;
  } else {
    v.prediction = Prediction::converges_for_all_theta0;
    v.predicted_limit = limit_of(ma, mp * ctx.target.b);
  }
  return v;
}

namespace {

bool pfqi_convergent_analytic(const AnalysisContext& ctx, double alpha, int t) {
  if (!ctx.consistent) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> es(ctx.moments.sigma_cov);
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    double s = es.eigenvalues()(i);
    if (std::abs(s) < 1e-12) continue;
    if (std::abs(std::pow(1.0 - alpha * s, t) - 1.0) < 1e-12) return false;
  }
  Matrix mp = preconditioner(AlgorithmKind::pfqi, ctx.moments, alpha, t);
  Matrix h = Matrix::Identity(ctx.target.A.rows(), ctx.target.A.cols()) - mp * ctx.target.A;
  return spectral_report(h).semiconvergent;
}

}  // namespace

TransitionReport transition_analysis(const AnalysisContext& ctx,
                                     const std::vector<double>& alphas,
                                     const std::vector<int>& ts) {
  TransitionReport rep;
  rep.td_stable = td_stability(ctx).stable;

  for (int t : ts) {
    double lo = 0.0;
    for (double probe = 1e-6; probe < 1e6; probe *= 2.0) {
      if (pfqi_convergent_analytic(ctx, probe, t)) lo = probe;
    }
    if (lo == 0.0) {
      rep.epsilon_t[t] = 0.0;
      continue;
    }
    double hi = 2.0 * lo;
    for (int it = 0; it < 40; ++it) {
      double mid = 0.5 * (lo + hi);
      if (pfqi_convergent_analytic(ctx, mid, t)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    rep.epsilon_t[t] = lo;
  }

  std::vector<int> sorted_ts = ts;
  std::sort(sorted_ts.begin(), sorted_ts.end());
  for (double alpha : alphas) {
    std::optional<int> threshold;
    for (int i = static_cast<int>(sorted_ts.size()) - 1; i >= 0; --i) {
      if (pfqi_convergent_analytic(ctx, alpha, sorted_ts[i])) {
        threshold = sorted_ts[i];
      } else {
        break;
      }
    }
    rep.t_threshold[alpha] = threshold;
  }
  return rep;
}

ZMatrixReport zmatrix_equivalence(const AnalysisContext& ctx) {
  ZMatrixReport rep;
  const Matrix& cov = ctx.moments.sigma_cov;
  const Matrix& cr = ctx.moments.sigma_cr;
  bool cov_nonsingular = numerical_rank(cov) == cov.rows();

  rep.assumption2 = cov_nonsingular && is_z_matrix(cov) && entrywise_nonneg(cr);
  if (cov_nonsingular) {
    Matrix cov_inv = cov.inverse();
    rep.assumption1 = is_z_matrix(ctx.target.A) && entrywise_nonneg(cov_inv) &&
                      entrywise_nonneg(cov_inv * cr);
  }
  if (rep.assumption2 && !rep.assumption1) {
    throw std::runtime_error("zmatrix_equivalence: assumption 2 holds but assumption 1 fails");
  }

  rep.applicable = rep.assumption1 && ctx.rank_invariance;
  rep.td_stable = td_stability(ctx).stable;
  rep.fqi_converges = predict_fqi(ctx).prediction == Prediction::converges_for_all_theta0;
  rep.equivalence_holds = !rep.applicable || (rep.td_stable == rep.fqi_converges);
  return rep;
}

namespace {

bool nonzero_spectra_equal(const ComplexVector& s1, const ComplexVector& s2,
                           double matrix_scale) {
  // a defective zero eigenvalue splits under rounding by a root of machine
  // epsilon times the matrix norm, which can exceed a small spectral radius
  double scale = std::max({spectrum_scale(s1), spectrum_scale(s2), matrix_scale});
  double cut = std::max(1e-5 * matrix_scale, 1e-300);
  std::vector<Complex> a, b;
  for (int i = 0; i < s1.size(); ++i)
    if (std::abs(s1(i)) > cut) a.push_back(s1(i));
  for (int i = 0; i < s2.size(); ++i)
    if (std::abs(s2(i)) > cut) b.push_back(s2(i));
  if (a.size() != b.size()) return false;
  std::vector<bool> used(b.size(), false);
  double match_tol = std::max(100.0 * Tol::eig_cluster * scale, 1e-8);
  for (const Complex& x : a) {
    bool matched = false;
    for (size_t j = 0; j < b.size(); ++j) {
      if (!used[j] && std::abs(x - b[j]) < match_tol) {
        used[j] = true;
        matched = true;
        break;
      }
    }
    if (!matched) return false;
  }
  return true;
}

}  // namespace

EncoderDecoderReport encoder_decoder_report(const AnalysisContext& ctx) {
  EncoderDecoderReport rep;
  const Matrix& phi = ctx.features.Phi;
  Matrix core = ctx.mdp.D() *
                (Matrix::Identity(ctx.mdp.h, ctx.mdp.h) - ctx.mdp.gamma * ctx.mdp.P);
  Matrix decoded = core * phi * phi.transpose();

  SpectralReport enc = spectral_report(ctx.target.A);
  SpectralReport dec = spectral_report(decoded);
  SpectralReport dyn = spectral_report(core);

  rep.encoded_spectrum = enc.eigenvalues;
  rep.decoded_spectrum = dec.eigenvalues;
  rep.nonzero_spectra_match = nonzero_spectra_equal(
      enc.eigenvalues, dec.eigenvalues, std::max(ctx.target.A.norm(), decoded.norm()));
  rep.dynamics_positive_stable = dyn.positive_stable;
  rep.encoded_positive_semi_stable = enc.positive_semi_stable;
  rep.stability_preserved = !rep.dynamics_positive_stable || rep.encoded_positive_semi_stable;
  return rep;
}

OnPolicyReport onpolicy_report(const AnalysisContext& ctx) {
  if (!is_on_policy(ctx.mdp)) {
    throw std::invalid_argument("onpolicy_report: distribution is not stationary for P");
  }
  OnPolicyReport rep;
  rep.target_rpn = is_rpn(ctx.target.A);
  rep.rank_invariance = ctx.rank_invariance;
  rep.td_stable = td_stability(ctx).stable;
  rep.all_hold = rep.target_rpn && rep.rank_invariance && rep.td_stable;
  return rep;
}

}  // namespace lstdlab
