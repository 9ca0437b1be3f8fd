#include "qftlab/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "qftlab/errors.hpp"

namespace qftlab {

namespace {
constexpr char kMagic[4] = {'Q', 'L', 'M', 'D'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_raw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_raw(std::ifstream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
}
}  // namespace

void dump_matrix(const std::string& path, const Matrix& m, std::uint64_t basis_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.write(kMagic, 4);
  write_raw(out, kVersion);
  const std::uint64_t rows = static_cast<std::uint64_t>(m.rows());
  const std::uint64_t cols = static_cast<std::uint64_t>(m.cols());
  write_raw(out, rows);
  write_raw(out, cols);
  const std::uint8_t is_complex = 1;
  write_raw(out, is_complex);
  write_raw(out, basis_hash);
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      const double re = m(r, c).real();
      const double im = m(r, c).imag();
      write_raw(out, re);
      write_raw(out, im);
    }
  }
}

Matrix load_matrix(const std::string& path, std::uint64_t* basis_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw Error(path + ": bad magic");
  std::uint32_t version = 0;
  read_raw(in, version);
  if (version != kVersion) throw Error(path + ": unsupported version");
  std::uint64_t rows = 0, cols = 0, hash = 0;
  std::uint8_t is_complex = 0;
  read_raw(in, rows);
  read_raw(in, cols);
  read_raw(in, is_complex);
  read_raw(in, hash);
  if (basis_hash) *basis_hash = hash;
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      double re = 0, im = 0;
      read_raw(in, re);
      if (is_complex) read_raw(in, im);
      m(r, c) = Complex(re, im);
    }
  }
  if (!in) throw Error(path + ": truncated matrix payload");
  return m;
}

void dump_matrix_csv(const std::string& path, const Matrix& m, std::uint64_t basis_hash) {
  CsvWriter csv(path);
  csv.raw_row({"rows", std::to_string(m.rows()), "cols", std::to_string(m.cols()), "basis_hash",
               std::to_string(basis_hash)});
  csv.header({"row", "col", "re", "im"});
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c)
      csv.row({static_cast<Real>(r), static_cast<Real>(c), m(r, c).real(), m(r, c).imag()});
}

std::string format_real17(Real v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct CsvWriter::Impl {
  std::ofstream out;
};

CsvWriter::CsvWriter(const std::string& path) : impl_(new Impl) {
  impl_->out.open(path);
  if (!impl_->out) {
    delete impl_;
    throw Error("cannot open " + path + " for writing");
  }
}

CsvWriter::~CsvWriter() { delete impl_; }

void CsvWriter::header(const std::vector<std::string>& cols) { raw_row(cols); }

void CsvWriter::row(const std::vector<Real>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (Real v : values) cells.push_back(format_real17(v));
  raw_row(cells);
}

void CsvWriter::raw_row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) impl_->out << ',';
    impl_->out << cells[i];
  }
  impl_->out << '\n';
}

}  // namespace qftlab
