#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qftlab/basis.hpp"
#include "qftlab/linalg.hpp"

namespace qftlab {

/// Binary matrix dump. Layout (little-endian):
///   magic "QLMD", u32 version, u64 rows, u64 cols, u8 complex flag,
///   u64 basis hash, then row-major doubles ((re, im) pairs when complex).
void dump_matrix(const std::string& path, const Matrix& m, std::uint64_t basis_hash);
Matrix load_matrix(const std::string& path, std::uint64_t* basis_hash = nullptr);

/// CSV variant of the matrix dump: header row with dimensions and basis hash,
/// then one row per entry (row, col, re, im) at 17 significant digits.
void dump_matrix_csv(const std::string& path, const Matrix& m, std::uint64_t basis_hash);

/// CSV with 17-significant-digit floats.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  ~CsvWriter();
  void header(const std::vector<std::string>& cols);
  void row(const std::vector<Real>& values);
  void raw_row(const std::vector<std::string>& cells);

 private:
  struct Impl;
  Impl* impl_;
};

std::string format_real17(Real v);

}  // namespace qftlab
