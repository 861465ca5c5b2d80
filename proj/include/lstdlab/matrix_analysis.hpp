#pragma once

#include <Eigen/Dense>
#include <complex>
#include <set>
#include <vector>

namespace lstdlab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

// Numeric policy shared by every rank/spectral decision in the library.
struct Tol {
  static constexpr double rank_rel = 1e-10;     // singular values below rank_rel*smax are zero
  static constexpr double eig_cluster = 1e-8;   // eigenvalues closer than this are one root
  static constexpr double unit_circle = 1e-8;   // |lambda| within this band of 1 is "on" the circle
  static constexpr double nonneg = 1e-10;       // entries >= -nonneg count as nonnegative
  static constexpr double marginal = 1e-6;      // decisive quantities inside this band are "marginal"
};

void require_square(const Matrix& a, const char* who);
void require_finite(const Matrix& a, const char* who);

int numerical_rank(const Matrix& a);

// Orthonormal bases from the SVD, using the numerical-rank cutoff.
Matrix range_basis(const Matrix& a);
Matrix kernel_basis(const Matrix& a);

bool entrywise_nonneg(const Matrix& a);

// rank([A|b]) == rank(A)
bool in_column_space(const Matrix& a, const Vector& b);
// col(B) subseteq col(A)
bool column_space_contains(const Matrix& a, const Matrix& b);
bool same_column_space(const Matrix& a, const Matrix& b);
// ker(A) == ker(B), via row-space equality
bool same_kernel(const Matrix& a, const Matrix& b);

Matrix pseudoinverse(const Matrix& a);

// Smallest k with rank(A^k) == rank(A^{k+1}); 0 for nonsingular A.
int matrix_index(const Matrix& a);

// Drazin inverse through the core-nilpotent decomposition at k = ind(A).
Matrix drazin_inverse(const Matrix& a);

struct MultiplicityRecord {
  Complex eigenvalue;
  int algebraic = 0;
  int geometric = 0;
  bool semisimple = false;
};

MultiplicityRecord eig_multiplicity(const Matrix& a, Complex lambda);

struct SpectralReport {
  ComplexVector eigenvalues;
  double spectral_radius = 0.0;
  int index = 0;
  std::vector<Complex> unit_circle_eigs;
  bool semiconvergent = false;
  bool positive_stable = false;       // every eigenvalue has Re > 0
  bool positive_semi_stable = false;  // every nonzero eigenvalue has Re > 0
  bool nonnegative_stable = false;    // every eigenvalue has Re >= 0
  bool zero_eig_semisimple = false;   // true when A is nonsingular
  bool marginal = false;              // some decisive eigenvalue sits inside the marginal band
};

SpectralReport spectral_report(const Matrix& a);

// Off-diagonal entries <= 0 (within tolerance).
bool is_z_matrix(const Matrix& a);

// Z-matrix, nonsingular, inverse entrywise nonnegative.
bool is_nonsingular_m_matrix(const Matrix& a);

// Possibly singular M-matrix: Z-matrix whose spectrum lies in Re >= 0.
bool is_m_matrix(const Matrix& a);

// col(A) == col(A^T)
bool is_rpn(const Matrix& a);

enum class SplittingLabel { regular, weak_regular, proper };

// Classify the splitting A = M - N. Labels are not mutually exclusive.
std::set<SplittingLabel> splitting_classify(const Matrix& a, const Matrix& m, const Matrix& n);

}  // namespace lstdlab
