#include "hmsyn/fmat.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

namespace hmsyn::pipeline {

static_assert(std::endian::native == std::endian::little,
              "FMAT I/O assumes a little-endian host");

namespace {

constexpr std::array<char, 4> kMagic = {'F', 'M', 'A', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_raw(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool read_raw(std::istream& in, T& value) {
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  return in.gcount() == static_cast<std::streamsize>(sizeof(T));
}

}  // namespace

void write_fmat(std::ostream& out, const Matrix& m, FmatDtype dtype) {
  if (!m.allFinite() && m.size() > 0) {
    throw NumericalError("write_fmat: matrix contains non-finite values");
  }
  out.write(kMagic.data(), kMagic.size());
  write_raw(out, kVersion);
  write_raw(out, static_cast<std::uint64_t>(m.rows()));
  write_raw(out, static_cast<std::uint64_t>(m.cols()));
  write_raw(out, static_cast<std::uint8_t>(dtype));
  const std::array<char, 7> pad{};
  out.write(pad.data(), pad.size());

  if (dtype == FmatDtype::F64) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) row[c] = m(r, c);
      out.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(double)));
    }
  } else {
    std::vector<float> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        row[c] = static_cast<float>(m(r, c));
      out.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
  }
  if (!out) throw DataError("write_fmat: write failed");
}

Matrix read_fmat(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4 || magic != kMagic) {
    throw DataError("read_fmat: bad magic (not an FMAT file)");
  }
  std::uint32_t version = 0;
  std::uint64_t rows = 0, cols = 0;
  std::uint8_t dtype = 0;
  std::array<char, 7> pad{};
  if (!read_raw(in, version)) throw DataError("read_fmat: truncated header");
  if (version != kVersion) {
    throw DataError("read_fmat: unsupported version " +
                    std::to_string(version));
  }
  if (!read_raw(in, rows) || !read_raw(in, cols) || !read_raw(in, dtype)) {
    throw DataError("read_fmat: truncated header");
  }
  in.read(pad.data(), pad.size());
  if (in.gcount() != 7) throw DataError("read_fmat: truncated header");
  if (dtype != 0 && dtype != 1) {
    throw DataError("read_fmat: unknown dtype " + std::to_string(dtype));
  }

  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  if (dtype == 1) {
    std::vector<double> row(static_cast<std::size_t>(cols));
    for (std::uint64_t r = 0; r < rows; ++r) {
      in.read(reinterpret_cast<char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
      if (in.gcount() !=
          static_cast<std::streamsize>(row.size() * sizeof(double))) {
        throw DataError("read_fmat: truncated payload");
      }
      for (std::uint64_t c = 0; c < cols; ++c)
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
    }
  } else {
    std::vector<float> row(static_cast<std::size_t>(cols));
    for (std::uint64_t r = 0; r < rows; ++r) {
      in.read(reinterpret_cast<char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
      if (in.gcount() !=
          static_cast<std::streamsize>(row.size() * sizeof(float))) {
        throw DataError("read_fmat: truncated payload");
      }
      for (std::uint64_t c = 0; c < cols; ++c)
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
    }
  }
  return m;
}

void write_fmat(const std::string& path, const Matrix& m, FmatDtype dtype) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("write_fmat: cannot open " + path);
  write_fmat(out, m, dtype);
}

Matrix read_fmat(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("read_fmat: cannot open " + path);
  return read_fmat(in);
}

}  // namespace hmsyn::pipeline
