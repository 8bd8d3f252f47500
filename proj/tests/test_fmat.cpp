#include "hmsyn/fmat.hpp"

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

using namespace hmsyn;
using pipeline::FmatDtype;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

Matrix seeded_matrix(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  }
  return m;
}

}  // namespace

TEST_CASE("fmat f64 round trip is bitwise exact") {
  const Matrix m = seeded_matrix(17, 5, 42);
  const std::string path = temp_path("roundtrip.fmat");
  pipeline::write_fmat(path, m, FmatDtype::F64);
  const Matrix back = pipeline::read_fmat(path);
  REQUIRE(back.rows() == m.rows());
  REQUIRE(back.cols() == m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      CHECK(std::memcmp(&back(r, c), &m(r, c), sizeof(double)) == 0);
    }
  }
}

TEST_CASE("fmat f32 round trip matches float casts") {
  const Matrix m = seeded_matrix(8, 3, 1);
  const std::string path = temp_path("roundtrip32.fmat");
  pipeline::write_fmat(path, m, FmatDtype::F32);
  const Matrix back = pipeline::read_fmat(path);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      CHECK(back(r, c) == doctest::Approx(static_cast<float>(m(r, c))));
    }
  }
}

TEST_CASE("fmat 0x0 matrix round-trips") {
  const Matrix empty(0, 0);
  const std::string path = temp_path("empty.fmat");
  pipeline::write_fmat(path, empty);
  const Matrix back = pipeline::read_fmat(path);
  CHECK(back.rows() == 0);
  CHECK(back.cols() == 0);
}

TEST_CASE("fmat bad magic is rejected") {
  const std::string path = temp_path("badmagic.fmat");
  pipeline::write_fmat(path, seeded_matrix(2, 2, 3));
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("XMAT", 4);
  }
  CHECK_THROWS_WITH_AS(pipeline::read_fmat(path),
                       doctest::Contains("magic"), DataError);
}

TEST_CASE("fmat truncated payload is rejected") {
  const std::string path = temp_path("trunc.fmat");
  pipeline::write_fmat(path, seeded_matrix(4, 4, 5));
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 9);
  CHECK_THROWS_WITH_AS(pipeline::read_fmat(path),
                       doctest::Contains("truncated"), DataError);
}

TEST_CASE("fmat unknown dtype is rejected") {
  const std::string path = temp_path("dtype.fmat");
  pipeline::write_fmat(path, seeded_matrix(2, 2, 6));
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(24);  // magic + version + rows + cols
    const char bad = 7;
    f.write(&bad, 1);
  }
  CHECK_THROWS_WITH_AS(pipeline::read_fmat(path),
                       doctest::Contains("dtype"), DataError);
}
