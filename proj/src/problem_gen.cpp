#include "invit/problem_gen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "invit/matrix_market.hpp"

namespace invit {

namespace {

constexpr double kPi = std::numbers::pi;

void require_grid(int n, const char* what) {
  if (n < 3) throw Error(ErrorCode::InvalidArgument, std::string(what) + ": n must be >= 3");
}

SparseMatrix tridiagonal(int n, double diag, double off) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(3 * n));
  for (int i = 0; i < n; ++i) {
    t.emplace_back(i, i, diag);
    if (i + 1 < n) {
      t.emplace_back(i, i + 1, off);
      t.emplace_back(i + 1, i, off);
    }
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

// Gram-Schmidt in the mass inner product, applied twice.
std::vector<Vector> m_orthonormalize(const SymmetricForm& m, std::vector<Vector> basis) {
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < basis.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        basis[i] -= m.inner(basis[j], basis[i]) * basis[j];
      }
      basis[i] /= std::sqrt(m.inner(basis[i], basis[i]));
    }
  }
  return basis;
}

// Metadata from closed-form sine eigenvectors, used above the oracle size.
SpectralMetadata sine_metadata(const SymmetricForm& m, double lambda1, double lambda2, int n,
                               int dims) {
  const double h = 1.0 / (n + 1);
  Vector chi(static_cast<Index>(std::pow(n, dims)));
  for (Index idx = 0; idx < chi.size(); ++idx) {
    double value = 1.0;
    Index rest = idx;
    for (int d = 0; d < dims; ++d) {
      const Index i = rest % n;
      rest /= n;
      value *= std::sin(kPi * static_cast<double>(i + 1) * h);
    }
    chi[idx] = value;
  }
  chi /= std::sqrt(m.inner(chi, chi));
  return SpectralMetadata{lambda1, lambda2, {chi}};
}

Eigenproblem attach_oracle(Eigenproblem p) {
  auto meta = spectral_oracle(p);
  return p.with_metadata(std::move(meta));
}

}  // namespace

std::string to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::Diagonal: return "diagonal";
    case GeneratorKind::Laplacian1d: return "laplacian1d";
    case GeneratorKind::Laplacian2d: return "laplacian2d";
    case GeneratorKind::Fem1d: return "fem1d";
    case GeneratorKind::MatrixMarket: return "matrix-market";
  }
  return "unknown";
}

GeneratorKind generator_kind_from_string(const std::string& name) {
  if (name == "diagonal") return GeneratorKind::Diagonal;
  if (name == "laplacian1d") return GeneratorKind::Laplacian1d;
  if (name == "laplacian2d") return GeneratorKind::Laplacian2d;
  if (name == "fem1d") return GeneratorKind::Fem1d;
  if (name == "matrix-market") return GeneratorKind::MatrixMarket;
  throw Error(ErrorCode::InvalidArgument, "unknown generator kind '" + name + "'");
}

void GeneratorSpec::validate() const {
  switch (kind) {
    case GeneratorKind::Diagonal: {
      if (eigenvalues.empty()) throw Error(ErrorCode::InvalidArgument, "diagonal: empty eigenvalue list");
      for (double e : eigenvalues) {
        if (!(e > 0.0) || !std::isfinite(e)) {
          throw Error(ErrorCode::InvalidArgument, "diagonal: eigenvalues must be positive and finite");
        }
      }
      const auto [lo, hi] = std::minmax_element(eigenvalues.begin(), eigenvalues.end());
      if (*lo == *hi) throw Error(ErrorCode::InvalidArgument, "diagonal: need two distinct eigenvalues");
      break;
    }
    case GeneratorKind::Laplacian1d:
    case GeneratorKind::Fem1d:
      require_grid(n, to_string(kind).c_str());
      break;
    case GeneratorKind::Laplacian2d:
      require_grid(n, "laplacian2d");
      if (n > 100) throw Error(ErrorCode::InvalidArgument, "laplacian2d: n^2 must not exceed 10000");
      break;
    case GeneratorKind::MatrixMarket:
      if (a_path.empty()) throw Error(ErrorCode::InvalidArgument, "matrix-market: missing A path");
      break;
  }
}

Eigenproblem build_problem(const GeneratorSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case GeneratorKind::Diagonal: return diagonal_problem(spec.eigenvalues);
    case GeneratorKind::Laplacian1d: return laplacian_1d(spec.n);
    case GeneratorKind::Laplacian2d: return laplacian_2d(spec.n);
    case GeneratorKind::Fem1d: return fem1d_problem(spec.n);
    case GeneratorKind::MatrixMarket: return matrix_market_problem(spec.a_path, spec.m_path);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown generator kind");
}

Eigenproblem diagonal_problem(std::vector<double> eigs) {
  GeneratorSpec{GeneratorKind::Diagonal, eigs, 0, {}, {}, 0}.validate();
  std::sort(eigs.begin(), eigs.end());
  const Index n = static_cast<Index>(eigs.size());
  const Vector diag = Eigen::Map<const Vector>(eigs.data(), n);
  auto a = SymmetricForm::diagonal(diag);
  auto m = SymmetricForm::identity(n);

  SpectralMetadata meta;
  meta.lambda1 = eigs.front();
  meta.lambda2 = *std::upper_bound(eigs.begin(), eigs.end(), meta.lambda1);
  for (Index i = 0; i < n && eigs[static_cast<std::size_t>(i)] == meta.lambda1; ++i) {
    meta.e1_basis.push_back(Vector::Unit(n, i));
  }
  return Eigenproblem(std::move(a), std::move(m), std::move(meta));
}

Eigenproblem laplacian_1d(int n) {
  require_grid(n, "laplacian1d");
  const double s = static_cast<double>(n + 1) * (n + 1);
  Eigenproblem p(SymmetricForm::sparse(tridiagonal(n, 2.0 * s, -s)), SymmetricForm::identity(n));
  if (n <= kOracleMaxDim) return attach_oracle(std::move(p));
  const double h = 1.0 / (n + 1);
  auto eig = [&](int k) { return 4.0 / (h * h) * std::pow(std::sin(k * kPi * h / 2.0), 2); };
  return p.with_metadata(sine_metadata(p.mass(), eig(1), eig(2), n, 1));
}

Eigenproblem laplacian_2d(int n) {
  require_grid(n, "laplacian2d");
  if (n > 100) throw Error(ErrorCode::InvalidArgument, "laplacian2d: n^2 must not exceed 10000");
  const double s = static_cast<double>(n + 1) * (n + 1);
  const int dim = n * n;
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(5 * dim));
  auto at = [n](int i, int j) { return j * n + i; };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int row = at(i, j);
      t.emplace_back(row, row, 4.0 * s);
      if (i > 0) t.emplace_back(row, at(i - 1, j), -s);
      if (i + 1 < n) t.emplace_back(row, at(i + 1, j), -s);
      if (j > 0) t.emplace_back(row, at(i, j - 1), -s);
      if (j + 1 < n) t.emplace_back(row, at(i, j + 1), -s);
    }
  }
  SparseMatrix a(dim, dim);
  a.setFromTriplets(t.begin(), t.end());
  a.makeCompressed();
  Eigenproblem p(SymmetricForm::sparse(a), SymmetricForm::identity(dim));
  if (dim <= kOracleMaxDim) return attach_oracle(std::move(p));
  const double h = 1.0 / (n + 1);
  auto eig1d = [&](int k) { return 4.0 / (h * h) * std::pow(std::sin(k * kPi * h / 2.0), 2); };
  return p.with_metadata(sine_metadata(p.mass(), 2.0 * eig1d(1), eig1d(1) + eig1d(2), n, 2));
}

Eigenproblem fem1d_problem(int n) {
  require_grid(n, "fem1d");
  const double h = 1.0 / (n + 1);
  Eigenproblem p(SymmetricForm::sparse(tridiagonal(n, 2.0 / h, -1.0 / h)),
                 SymmetricForm::sparse(tridiagonal(n, 4.0 * h / 6.0, h / 6.0)));
  if (n <= kOracleMaxDim) return attach_oracle(std::move(p));
  auto eig = [&](int k) {
    const double c = std::cos(k * kPi * h);
    return (2.0 - 2.0 * c) / h / (h / 6.0 * (4.0 + 2.0 * c));
  };
  return p.with_metadata(sine_metadata(p.mass(), eig(1), eig(2), n, 1));
}

Eigenproblem matrix_market_problem(const std::filesystem::path& a_path,
                                   const std::optional<std::filesystem::path>& m_path) {
  auto a = SymmetricForm::sparse(mm::read_file(a_path));
  auto m = m_path ? SymmetricForm::sparse(mm::read_file(*m_path)) : SymmetricForm::identity(a.dim());
  Eigenproblem p(std::move(a), std::move(m));
  if (p.dim() <= kOracleMaxDim) return attach_oracle(std::move(p));
  return p;
}

namespace {

Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> dense_solve(const Eigenproblem& p) {
  if (p.dim() > kOracleMaxDim) {
    throw Error(ErrorCode::InvalidArgument,
                "spectral oracle limited to dimension " + std::to_string(kOracleMaxDim));
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> solver(p.energy().to_dense(),
                                                               p.mass().to_dense());
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "dense generalized eigensolver failed");
  }
  return solver;
}

}  // namespace

Vector dense_eigenvalues(const Eigenproblem& p) { return dense_solve(p).eigenvalues(); }

SpectralMetadata spectral_oracle(const Eigenproblem& p) {
  const auto solver = dense_solve(p);
  const Vector& evals = solver.eigenvalues();
  const DenseMatrix& evecs = solver.eigenvectors();
  const double lambda1 = evals[0];
  if (!(lambda1 > 0.0)) throw Error(ErrorCode::NotPositiveDefinite, "smallest eigenvalue not positive");

  std::vector<Vector> cluster;
  Index k = 0;
  while (k < evals.size() && evals[k] - lambda1 <= kClusterTol * lambda1) {
    cluster.emplace_back(evecs.col(k));
    ++k;
  }
  if (k == evals.size()) {
    throw Error(ErrorCode::ClusterAmbiguity, "no eigenvalue above the lowest cluster");
  }
  const double lambda2 = evals[k];
  if (lambda2 - lambda1 < kGapFloor * lambda1) {
    throw Error(ErrorCode::ClusterAmbiguity, "spectral gap below 1e-6 * lambda1");
  }
  SpectralMetadata meta;
  meta.lambda1 = lambda1;
  meta.lambda2 = lambda2;
  meta.e1_basis = m_orthonormalize(p.mass(), std::move(cluster));
  return meta;
}

Vector admissible_start(const Eigenproblem& p, double gap_fraction, std::uint64_t seed) {
  if (!(gap_fraction > 0.0 && gap_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "gap_fraction must lie in (0, 1)");
  }
  const auto& meta = p.metadata();
  if (meta.multiplicity() >= p.dim()) {
    throw Error(ErrorCode::InvalidArgument, "E1 is the whole space; no admissible start exists");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector z(p.dim());
  double z_norm = 0.0;
  while (!(z_norm > 1e-8)) {
    for (Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
    const double raw = mass_norm(p, z);
    z = complement_project(p, z);
    z_norm = mass_norm(p, z) / raw;
  }
  z = m_normalize(p, z);
  const Vector& chi = meta.e1_basis.front();

  // With chi in E1 and z in its complement both forms are diagonal in (chi, z):
  // lambda(cos t chi + sin t z) = cos^2 t lambda1 + sin^2 t lambda(z).
  const double target = meta.lambda1 + gap_fraction * (meta.lambda2 - meta.lambda1);
  const double lambda_z = rayleigh_quotient(p, z);
  const double sin2 = (target - meta.lambda1) / (lambda_z - meta.lambda1);
  const double s = std::sqrt(sin2);
  const double c = std::sqrt(1.0 - sin2);
  return m_normalize(p, c * chi + s * z);
}

}  // namespace invit
