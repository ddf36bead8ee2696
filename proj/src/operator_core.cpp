#include "invit/operator_core.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>

namespace invit {

namespace {

constexpr double kResidualTol = 1e-10;
constexpr double kGramTol = 1e-12;

}  // namespace

struct SymmetricForm::Impl {
  std::optional<DenseMatrix> dense;
  std::optional<Eigen::LLT<DenseMatrix>> dense_factor;
  std::optional<SparseMatrix> sparse;
  std::unique_ptr<Eigen::SimplicialLLT<SparseMatrix>> sparse_factor;
  Index n = 0;
};

SymmetricForm::SymmetricForm(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

SymmetricForm SymmetricForm::dense(const DenseMatrix& entries) {
  if (entries.rows() != entries.cols() || entries.rows() < 1) {
    throw Error(ErrorCode::DimensionMismatch, "form matrix must be square and nonempty");
  }
  if (!entries.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "form matrix has non-finite entries");
  }
  auto impl = std::make_shared<Impl>();
  impl->n = entries.rows();
  DenseMatrix sym = 0.5 * (entries + entries.transpose());
  impl->dense_factor.emplace(sym);
  if (impl->dense_factor->info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "Cholesky factorization failed");
  }
  impl->dense = std::move(sym);
  return SymmetricForm(std::move(impl));
}

SymmetricForm SymmetricForm::sparse(const SparseMatrix& entries) {
  if (entries.rows() != entries.cols() || entries.rows() < 1) {
    throw Error(ErrorCode::DimensionMismatch, "form matrix must be square and nonempty");
  }
  for (Index k = 0; k < entries.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(entries, k); it; ++it) {
      if (!std::isfinite(it.value())) {
        throw Error(ErrorCode::InvalidArgument, "form matrix has non-finite entries");
      }
    }
  }
  auto impl = std::make_shared<Impl>();
  impl->n = entries.rows();
  SparseMatrix transposed = entries.transpose();
  SparseMatrix sym = 0.5 * (entries + transposed);
  sym.makeCompressed();
  impl->sparse_factor = std::make_unique<Eigen::SimplicialLLT<SparseMatrix>>(sym);
  if (impl->sparse_factor->info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "sparse Cholesky factorization failed");
  }
  impl->sparse = std::move(sym);
  return SymmetricForm(std::move(impl));
}

SymmetricForm SymmetricForm::identity(Index dim) {
  return diagonal(Vector::Ones(dim));
}

SymmetricForm SymmetricForm::diagonal(const Vector& diag) {
  if (diag.size() < 1) throw Error(ErrorCode::DimensionMismatch, "empty diagonal");
  SparseMatrix d(diag.size(), diag.size());
  d.reserve(Eigen::VectorXi::Constant(diag.size(), 1));
  for (Index i = 0; i < diag.size(); ++i) d.insert(i, i) = diag[i];
  d.makeCompressed();
  return sparse(d);
}

Index SymmetricForm::dim() const noexcept { return impl_->n; }

bool SymmetricForm::is_sparse() const noexcept { return impl_->sparse.has_value(); }

Vector SymmetricForm::apply(const Vector& x) const {
  if (x.size() != dim()) throw Error(ErrorCode::DimensionMismatch, "apply");
  if (impl_->sparse) return *impl_->sparse * x;
  return *impl_->dense * x;
}

double SymmetricForm::inner(const Vector& x, const Vector& y) const {
  return x.dot(apply(y));
}

Vector SymmetricForm::solve(const Vector& b) const {
  if (b.size() != dim()) throw Error(ErrorCode::DimensionMismatch, "solve");
  if (impl_->sparse) return impl_->sparse_factor->solve(b);
  return impl_->dense_factor->solve(b);
}

double SymmetricForm::entry(Index i, Index j) const {
  if (impl_->sparse) return impl_->sparse->coeff(i, j);
  return (*impl_->dense)(i, j);
}

DenseMatrix SymmetricForm::to_dense() const {
  if (impl_->sparse) return DenseMatrix(*impl_->sparse);
  return *impl_->dense;
}

SparseMatrix SymmetricForm::to_sparse() const {
  if (impl_->sparse) return *impl_->sparse;
  return impl_->dense->sparseView();
}

double relative_eigen_residual(const SymmetricForm& a, const SymmetricForm& m, double lambda,
                               const Vector& chi) {
  const Vector a_chi = a.apply(chi);
  const double denom = a_chi.norm();
  if (denom == 0.0) return std::numeric_limits<double>::infinity();
  return (a_chi - lambda * m.apply(chi)).norm() / denom;
}

namespace {

// Floor below which a residual cannot be resolved in double precision: the
// rounding error of forming |A||chi| relative to |A chi|.
double residual_floor(const SymmetricForm& a, const Vector& chi) {
  const Vector abs_prod = a.is_sparse() ? Vector(a.to_sparse().cwiseAbs() * chi.cwiseAbs())
                                        : Vector(a.to_dense().cwiseAbs() * chi.cwiseAbs());
  const double denom = a.apply(chi).norm();
  return 100.0 * std::numeric_limits<double>::epsilon() * abs_prod.norm() / denom;
}

void validate_metadata(const SymmetricForm& a, const SymmetricForm& m,
                       const SpectralMetadata& meta) {
  if (!(meta.lambda1 > 0.0) || !(meta.lambda2 > meta.lambda1) || !std::isfinite(meta.lambda2)) {
    throw Error(ErrorCode::InvalidArgument, "metadata requires 0 < lambda1 < lambda2");
  }
  if (meta.e1_basis.empty()) {
    throw Error(ErrorCode::InvalidArgument, "metadata requires a nonempty E1 basis");
  }
  for (const auto& chi : meta.e1_basis) {
    if (chi.size() != a.dim()) throw Error(ErrorCode::DimensionMismatch, "E1 basis vector");
    require_finite(chi, "E1 basis vector");
    const double res = relative_eigen_residual(a, m, meta.lambda1, chi);
    const double tol = std::max(kResidualTol, residual_floor(a, chi));
    if (!(res <= tol)) {
      throw Error(ErrorCode::InvalidArgument,
                  "E1 basis vector residual " + std::to_string(res) + " exceeds tolerance");
    }
  }
  const auto k = meta.e1_basis.size();
  for (std::size_t i = 0; i < k; ++i) {
    const Vector m_chi = m.apply(meta.e1_basis[i]);
    for (std::size_t j = 0; j < k; ++j) {
      const double g = meta.e1_basis[j].dot(m_chi);
      const double expected = (i == j) ? 1.0 : 0.0;
      if (std::abs(g - expected) > kGramTol) {
        throw Error(ErrorCode::InvalidArgument, "E1 basis is not M-orthonormal");
      }
    }
  }
}

}  // namespace

Eigenproblem::Eigenproblem(SymmetricForm a, SymmetricForm m) : a_(std::move(a)), m_(std::move(m)) {
  if (a_.dim() != m_.dim()) throw Error(ErrorCode::DimensionMismatch, "A and M dimensions differ");
}

Eigenproblem::Eigenproblem(SymmetricForm a, SymmetricForm m, SpectralMetadata metadata)
    : Eigenproblem(std::move(a), std::move(m)) {
  validate_metadata(a_, m_, metadata);
  metadata_ = std::move(metadata);
}

const SpectralMetadata& Eigenproblem::metadata() const {
  if (!metadata_) throw Error(ErrorCode::MissingMetadata, "eigenproblem has no spectral metadata");
  return *metadata_;
}

Eigenproblem Eigenproblem::with_metadata(SpectralMetadata metadata) const {
  return Eigenproblem(a_, m_, std::move(metadata));
}

void require_dim(const Eigenproblem& p, const Vector& u) {
  if (u.size() != p.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "vector has dimension " + std::to_string(u.size()) +
                                                  ", problem has " + std::to_string(p.dim()));
  }
}

void require_finite(const Vector& u, const char* what) {
  if (!u.allFinite()) throw Error(ErrorCode::InvalidArgument, std::string(what) + " is not finite");
}

double energy_inner(const Eigenproblem& p, const Vector& u, const Vector& v) {
  require_dim(p, u);
  require_dim(p, v);
  return p.energy().inner(u, v);
}

double mass_inner(const Eigenproblem& p, const Vector& u, const Vector& v) {
  require_dim(p, u);
  require_dim(p, v);
  return p.mass().inner(u, v);
}

double energy_norm(const Eigenproblem& p, const Vector& u) {
  return std::sqrt(std::max(0.0, energy_inner(p, u, u)));
}

double mass_norm(const Eigenproblem& p, const Vector& u) {
  return std::sqrt(std::max(0.0, mass_inner(p, u, u)));
}

double rayleigh_quotient(const Eigenproblem& p, const Vector& u) {
  require_dim(p, u);
  const double mm = p.mass().inner(u, u);
  if (!(mm > 0.0)) throw Error(ErrorCode::ZeroVector, "Rayleigh quotient of the zero vector");
  return p.energy().inner(u, u) / mm;
}

Vector m_normalize(const Eigenproblem& p, const Vector& u) {
  const double n0 = mass_norm(p, u);
  if (!(n0 > 0.0)) throw Error(ErrorCode::ZeroVector, "cannot normalize the zero vector");
  return u / n0;
}

Vector project_e1(const Eigenproblem& p, const Vector& u) {
  const auto& meta = p.metadata();
  require_dim(p, u);
  const Vector mu = p.mass().apply(u);
  Vector out = Vector::Zero(p.dim());
  for (const auto& chi : meta.e1_basis) out += chi.dot(mu) * chi;
  return out;
}

Vector complement_project(const Eigenproblem& p, const Vector& u) {
  return u - project_e1(p, u);
}

}  // namespace invit
