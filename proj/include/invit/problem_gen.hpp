#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "invit/operator_core.hpp"

namespace invit {

enum class GeneratorKind { Diagonal, Laplacian1d, Laplacian2d, Fem1d, MatrixMarket };

std::string to_string(GeneratorKind kind);
GeneratorKind generator_kind_from_string(const std::string& name);

/// Declarative description of a test problem. Only the fields relevant to
/// `kind` are read.
struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::Diagonal;
  std::vector<double> eigenvalues;     // diagonal
  int n = 0;                           // laplacian1d, laplacian2d, fem1d
  std::filesystem::path a_path;        // matrix-market
  std::optional<std::filesystem::path> m_path;  // matrix-market, identity when absent
  std::uint64_t seed = 0;

  /// Throws InvalidArgument when the kind-specific invariants do not hold.
  void validate() const;
};

Eigenproblem build_problem(const GeneratorSpec& spec);

/// A = diag(sorted eigs), M = I with exact metadata.
Eigenproblem diagonal_problem(std::vector<double> eigs);

/// (n+1)^2 tridiag(-1, 2, -1), M = I.
Eigenproblem laplacian_1d(int n);

/// 5-point stencil on an n x n interior grid scaled by (n+1)^2, M = I.
Eigenproblem laplacian_2d(int n);

/// P1 finite elements on (0,1) with homogeneous Dirichlet conditions.
Eigenproblem fem1d_problem(int n);

/// Reads A (and optionally M, else identity) from Matrix Market files.
/// Metadata is attached through the dense oracle when the dimension allows.
Eigenproblem matrix_market_problem(const std::filesystem::path& a_path,
                                   const std::optional<std::filesystem::path>& m_path);

inline constexpr Index kOracleMaxDim = 2000;
inline constexpr double kClusterTol = 1e-8;
inline constexpr double kGapFloor = 1e-6;

/// Dense generalized symmetric eigendecomposition of (A, M). E1 collects all
/// eigenvectors within kClusterTol * lambda1 of the smallest eigenvalue; the
/// returned basis is M-orthonormal.
SpectralMetadata spectral_oracle(const Eigenproblem& p);

/// All generalized eigenvalues in ascending order (dense, dim <= kOracleMaxDim).
Vector dense_eigenvalues(const Eigenproblem& p);

/// Unit mass-norm start vector whose Rayleigh quotient is
/// lambda1 + gap_fraction * (lambda2 - lambda1), mixed from the first E1 basis
/// vector and a seeded random direction in the complement.
Vector admissible_start(const Eigenproblem& p, double gap_fraction, std::uint64_t seed);

}  // namespace invit
