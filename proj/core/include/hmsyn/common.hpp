#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace hmsyn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller misuse: bad arguments or an unsupported operation (CLI exit code 2).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed files, shape mismatches, inconsistent data (CLI exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or a failed numerical routine (CLI exit code 4).
class NumericalError : public Error {
 public:
  using Error::Error;
};

using Rng = std::mt19937_64;

/// Derives an independent stream seed from a base seed and a salt
/// (splitmix64 finalizer), so per-utterance / per-layer streams do not
/// overlap when the base seed is incremented.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

double gaussian(Rng& rng);
double uniform(Rng& rng, double lo, double hi);

bool all_finite(const Matrix& m);
bool all_finite(const Vector& v);

/// Writes a one-line warning to stderr; stdout stays reserved for command
/// output so re-runs remain byte-comparable.
void warn(const std::string& message);

}  // namespace hmsyn
