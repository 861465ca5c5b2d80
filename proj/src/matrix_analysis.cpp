#include "lstdlab/matrix_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lstdlab {

void require_square(const Matrix& a, const char* who) {
  if (a.rows() != a.cols())
    throw std::invalid_argument(std::string(who) + ": matrix must be square, got " +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
}

void require_finite(const Matrix& a, const char* who) {
  if (!a.allFinite())
    throw std::invalid_argument(std::string(who) + ": matrix has NaN or Inf entries");
}

int numerical_rank(const Matrix& a) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double cut = Tol::rank_rel * s(0);
  int r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > cut) ++r;
  return r;
}

Matrix range_basis(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU);
  const int r = numerical_rank(a);
  return svd.matrixU().leftCols(r);
}

Matrix kernel_basis(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
  const int r = numerical_rank(a);
  return svd.matrixV().rightCols(a.cols() - r);
}

bool entrywise_nonneg(const Matrix& a) { return (a.array() >= -Tol::nonneg).all(); }

bool in_column_space(const Matrix& a, const Vector& b) {
  Matrix aug(a.rows(), a.cols() + 1);
  aug << a, b;
  return numerical_rank(aug) == numerical_rank(a);
}

bool column_space_contains(const Matrix& a, const Matrix& b) {
  Matrix aug(a.rows(), a.cols() + b.cols());
  aug << a, b;
  return numerical_rank(aug) == numerical_rank(a);
}

bool same_column_space(const Matrix& a, const Matrix& b) {
  return numerical_rank(a) == numerical_rank(b) && column_space_contains(a, b);
}

bool same_kernel(const Matrix& a, const Matrix& b) {
  return same_column_space(a.transpose(), b.transpose());
}

Matrix pseudoinverse(const Matrix& a) {
  require_finite(a, "pseudoinverse");
  if (a.size() == 0) return a.transpose();
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cut = s.size() > 0 ? Tol::rank_rel * s(0) : 0.0;
  Vector inv = Vector::Zero(s.size());
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > cut) inv(i) = 1.0 / s(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

int matrix_index(const Matrix& a) {
  require_square(a, "matrix_index");
  const int n = static_cast<int>(a.rows());
  if (n == 0) return 0;
  int prev = numerical_rank(a);
  if (prev == n) return 0;
  Matrix power = a;
  for (int k = 1; k <= n; ++k) {
    power = power * a;  // A^{k+1}
    const int next = numerical_rank(power);
    if (next == prev) return k;
    prev = next;
  }
  return n;  // rank chain must have stabilized by k = n
}

Matrix drazin_inverse(const Matrix& a) {
  require_square(a, "drazin_inverse");
  const int n = static_cast<int>(a.rows());
  const int k = matrix_index(a);
  if (k == 0) return a.inverse();
  Matrix ak = Matrix::Identity(n, n);
  for (int i = 0; i < k; ++i) ak = ak * a;
  const int r = numerical_rank(ak);
  if (r == 0) return Matrix::Zero(n, n);  // nilpotent
  // col(A^k) + ker(A^k) spans R^n and both are A-invariant, so in the basis
  // Q = [U V] the matrix is block diagonal with a nonsingular core C.
  Matrix u = range_basis(ak);
  Matrix v = kernel_basis(ak);
  Matrix q(n, n);
  q << u, v;
  Matrix qinv = q.inverse();
  Matrix core = (qinv * a * q).topLeftCorner(r, r);
  Matrix block = Matrix::Zero(n, n);
  block.topLeftCorner(r, r) = core.inverse();
  return q * block * qinv;
}

namespace {

// Cluster the spectrum into distinct roots with algebraic counts.
std::vector<std::pair<Complex, int>> cluster_spectrum(const ComplexVector& eigs) {
  std::vector<std::pair<Complex, int>> clusters;
  for (int i = 0; i < eigs.size(); ++i) {
    bool placed = false;
    for (auto& [center, count] : clusters) {
      if (std::abs(eigs(i) - center) <= Tol::eig_cluster) {
        center = (center * static_cast<double>(count) + eigs(i)) / static_cast<double>(count + 1);
        ++count;
        placed = true;
        break;
      }
    }
    if (!placed) clusters.emplace_back(eigs(i), 1);
  }
  return clusters;
}

int geometric_multiplicity(const Matrix& a, Complex lambda) {
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXcd shifted = a.cast<Complex>();
  shifted.diagonal().array() -= lambda;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(shifted);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return n;
  const double cut = Tol::rank_rel * std::max(s(0), a.norm());
  int r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > cut) ++r;
  return n - r;
}

}  // namespace

MultiplicityRecord eig_multiplicity(const Matrix& a, Complex lambda) {
  require_square(a, "eig_multiplicity");
  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  const auto clusters = cluster_spectrum(es.eigenvalues());
  const std::pair<Complex, int>* best = nullptr;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& c : clusters) {
    const double d = std::abs(c.first - lambda);
    if (d < best_dist) {
      best_dist = d;
      best = &c;
    }
  }
  // Scale-aware acceptance: lambda must actually be (near) an eigenvalue.
  const double scale = std::max(1.0, a.norm());
  if (best == nullptr || best_dist > 1e-6 * scale)
    throw std::invalid_argument("eig_multiplicity: lambda is not an eigenvalue");
  MultiplicityRecord rec;
  rec.eigenvalue = best->first;
  rec.algebraic = best->second;
  rec.geometric = geometric_multiplicity(a, best->first);
  rec.semisimple = rec.algebraic == rec.geometric;
  return rec;
}

SpectralReport spectral_report(const Matrix& a) {
  require_square(a, "spectral_report");
  SpectralReport rep;
  const int n = static_cast<int>(a.rows());
  if (n == 0) {
    rep.semiconvergent = true;
    rep.positive_stable = rep.positive_semi_stable = rep.nonnegative_stable = true;
    rep.zero_eig_semisimple = true;
    return rep;
  }
  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  rep.eigenvalues = es.eigenvalues();
  rep.spectral_radius = rep.eigenvalues.cwiseAbs().maxCoeff();
  rep.index = matrix_index(a);

  bool pos = true, semi = true, nonneg = true;
  bool has_zero = false;
  for (int i = 0; i < n; ++i) {
    const Complex lam = rep.eigenvalues(i);
    const bool is_zero = std::abs(lam) <= Tol::eig_cluster;
    if (is_zero) has_zero = true;
    if (lam.real() <= 0.0 && !is_zero) semi = false;
    if (lam.real() <= 0.0) pos = false;
    if (lam.real() < -Tol::nonneg) nonneg = false;
    if (std::abs(std::abs(lam) - 1.0) <= Tol::unit_circle)
      rep.unit_circle_eigs.push_back(lam);
    if (std::abs(lam.real()) <= Tol::marginal && !is_zero) rep.marginal = true;
    if (std::abs(std::abs(lam) - 1.0) <= Tol::marginal &&
        std::abs(std::abs(lam) - 1.0) > Tol::unit_circle)
      rep.marginal = true;
  }
  if (has_zero) pos = false;
  rep.positive_stable = pos;
  rep.positive_semi_stable = semi;
  rep.nonnegative_stable = nonneg;
  rep.zero_eig_semisimple = has_zero ? eig_multiplicity(a, Complex(0.0, 0.0)).semisimple : true;

  if (rep.spectral_radius < 1.0 - Tol::unit_circle) {
    rep.semiconvergent = true;
  } else if (rep.spectral_radius <= 1.0 + Tol::unit_circle) {
    bool only_one = true;
    for (const Complex& lam : rep.unit_circle_eigs)
      if (std::abs(lam - Complex(1.0, 0.0)) > Tol::eig_cluster) only_one = false;
    bool one_semisimple = true;
    if (!rep.unit_circle_eigs.empty() && only_one)
      one_semisimple = eig_multiplicity(a, Complex(1.0, 0.0)).semisimple;
    rep.semiconvergent = only_one && one_semisimple;
  } else {
    rep.semiconvergent = false;
  }
  return rep;
}

bool is_z_matrix(const Matrix& a) {
  require_square(a, "is_z_matrix");
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (i != j && a(i, j) > Tol::nonneg) return false;
  return true;
}

bool is_nonsingular_m_matrix(const Matrix& a) {
  require_square(a, "is_nonsingular_m_matrix");
  if (!is_z_matrix(a)) return false;
  if (numerical_rank(a) != a.rows()) return false;
  return entrywise_nonneg(a.inverse());
}

bool is_m_matrix(const Matrix& a) {
  require_square(a, "is_m_matrix");
  if (!is_z_matrix(a)) return false;
  Eigen::EigenSolver<Matrix> es(a, false);
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i).real() < -Tol::nonneg * std::max(1.0, a.norm())) return false;
  return true;
}

bool is_rpn(const Matrix& a) {
  require_square(a, "is_rpn");
  return same_column_space(a, a.transpose());
}

std::set<SplittingLabel> splitting_classify(const Matrix& a, const Matrix& m, const Matrix& n) {
  require_square(a, "splitting_classify");
  if (m.rows() != a.rows() || m.cols() != a.cols() || n.rows() != a.rows() ||
      n.cols() != a.cols())
    throw std::invalid_argument("splitting_classify: dimension mismatch");
  const double scale = std::max({1.0, a.norm(), m.norm(), n.norm()});
  if ((a - (m - n)).norm() > 1e-9 * scale)
    throw std::invalid_argument("splitting_classify: a != m - n");

  std::set<SplittingLabel> labels;
  const bool m_nonsingular = numerical_rank(m) == m.rows();
  if (m_nonsingular) {
    const Matrix minv = m.inverse();
    if (entrywise_nonneg(minv)) {
      if (entrywise_nonneg(n)) labels.insert(SplittingLabel::regular);
      if (entrywise_nonneg(minv * n)) labels.insert(SplittingLabel::weak_regular);
    }
  }
  if (same_column_space(a, m) && same_kernel(a, m)) labels.insert(SplittingLabel::proper);
  return labels;
}

}  // namespace lstdlab
