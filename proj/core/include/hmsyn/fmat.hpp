#pragma once

#include "hmsyn/common.hpp"

#include <iosfwd>
#include <string>

namespace hmsyn::pipeline {

// FMAT: a flat binary matrix container.
//
//   bytes 0..3   magic "FMAT"
//   u32 LE       version (currently 1)
//   u64 LE       rows
//   u64 LE       cols
//   u8           dtype: 0 = f32, 1 = f64
//   7 bytes      zero padding
//   payload      rows*cols values, row-major, little-endian
enum class FmatDtype : std::uint8_t { F32 = 0, F64 = 1 };

void write_fmat(std::ostream& out, const Matrix& m,
                FmatDtype dtype = FmatDtype::F64);
Matrix read_fmat(std::istream& in);

void write_fmat(const std::string& path, const Matrix& m,
                FmatDtype dtype = FmatDtype::F64);
Matrix read_fmat(const std::string& path);

}  // namespace hmsyn::pipeline
