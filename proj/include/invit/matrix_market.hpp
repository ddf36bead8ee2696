#pragma once

#include <filesystem>
#include <iosfwd>

#include "invit/operator_core.hpp"

namespace invit::mm {

/// Reads a `%%MatrixMarket matrix coordinate real {symmetric|general}` file.
/// Symmetric files store one triangle with 1-based indices; entries from
/// either triangle are mirrored. General files are returned as stored.
SparseMatrix read(std::istream& in);
SparseMatrix read_file(const std::filesystem::path& path);

/// Writes the lower triangle in coordinate real symmetric format with 17
/// significant digits.
void write(std::ostream& out, const SparseMatrix& matrix);
void write_file(const std::filesystem::path& path, const SparseMatrix& matrix);

/// Vector files: one scalar per line, or a JSON array.
Vector read_vector(std::istream& in);
Vector read_vector_file(const std::filesystem::path& path);

}  // namespace invit::mm
