#pragma once

// Finite-dimensional model of the two-inner-product space: vectors in R^n,
// an energy form A and a mass form M (both SPD), the Rayleigh quotient and
// the spectral projections onto the lowest eigenspace and its complement.

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "invit/errors.hpp"

namespace invit {

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Index = Eigen::Index;

/// Symmetric positive-definite bilinear form backed by an explicit matrix.
///
/// Construction symmetrizes the input as (B + B^T)/2, so the stored entries are
/// exactly symmetric, and then runs a Cholesky factorization. A failed
/// factorization is a constructor error. The factorization is kept and reused
/// for every solve; instances are immutable and cheap to copy.
class SymmetricForm {
 public:
  static SymmetricForm dense(const DenseMatrix& entries);
  static SymmetricForm sparse(const SparseMatrix& entries);
  static SymmetricForm identity(Index dim);
  static SymmetricForm diagonal(const Vector& diag);

  Index dim() const noexcept;
  bool is_sparse() const noexcept;

  /// y = B x
  Vector apply(const Vector& x) const;
  /// x^T B y
  double inner(const Vector& x, const Vector& y) const;
  /// Solves B x = b with the stored factorization.
  Vector solve(const Vector& b) const;

  double entry(Index i, Index j) const;
  DenseMatrix to_dense() const;
  SparseMatrix to_sparse() const;

 private:
  struct Impl;
  explicit SymmetricForm(std::shared_ptr<const Impl> impl);
  std::shared_ptr<const Impl> impl_;
};

/// Lowest eigenvalue, the infimum above it and an M-orthonormal basis of the
/// lowest eigenspace.
struct SpectralMetadata {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::vector<Vector> e1_basis;

  int multiplicity() const noexcept { return static_cast<int>(e1_basis.size()); }
};

/// Residual of one basis vector relative to |A chi|.
double relative_eigen_residual(const SymmetricForm& a, const SymmetricForm& m, double lambda,
                               const Vector& chi);

/// Generalized eigenproblem A u = lambda M u.
class Eigenproblem {
 public:
  Eigenproblem(SymmetricForm a, SymmetricForm m);
  Eigenproblem(SymmetricForm a, SymmetricForm m, SpectralMetadata metadata);

  const SymmetricForm& energy() const noexcept { return a_; }
  const SymmetricForm& mass() const noexcept { return m_; }
  Index dim() const noexcept { return a_.dim(); }

  bool has_metadata() const noexcept { return metadata_.has_value(); }
  /// Throws MissingMetadata when absent.
  const SpectralMetadata& metadata() const;

  /// Returns a copy carrying (validated) metadata.
  Eigenproblem with_metadata(SpectralMetadata metadata) const;

 private:
  SymmetricForm a_;
  SymmetricForm m_;
  std::optional<SpectralMetadata> metadata_;
};

double energy_inner(const Eigenproblem& p, const Vector& u, const Vector& v);
double mass_inner(const Eigenproblem& p, const Vector& u, const Vector& v);
double energy_norm(const Eigenproblem& p, const Vector& u);
double mass_norm(const Eigenproblem& p, const Vector& u);

double rayleigh_quotient(const Eigenproblem& p, const Vector& u);

/// u / |u|_0, sign preserved.
Vector m_normalize(const Eigenproblem& p, const Vector& u);

/// P1 u = sum_i (u, chi_i) chi_i over the stored M-orthonormal basis.
Vector project_e1(const Eigenproblem& p, const Vector& u);
/// Q u = u - P1 u.
Vector complement_project(const Eigenproblem& p, const Vector& u);

void require_dim(const Eigenproblem& p, const Vector& u);
void require_finite(const Vector& u, const char* what);

}  // namespace invit
