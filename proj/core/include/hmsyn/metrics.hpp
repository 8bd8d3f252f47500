#pragma once

#include "hmsyn/common.hpp"
#include "hmsyn/headmotion.hpp"

#include <optional>
#include <string>

namespace hmsyn::metrics {

/// Per-view ridge used by the evaluation-side local CCA:
/// reg = max(kBaseReg, kDimRegCoeff * dim / window). The dimension-scaled
/// term shrinks the small-sample inflation a wide view can extract from a
/// 300-frame window, so feature sets of different widths score comparably.
constexpr double kDimRegCoeff = 1.0;
constexpr double kBaseReg = 1e-8;

struct EvalConfig {
  int cca_window = 300;
  std::string system = "system";
  std::uint64_t seed = 0;
  bool with_chance = false;
};

/// Mean over dims of MSE_d / Var_d(truth), population variance. Dimensions
/// whose truth variance is below 1e-12 are excluded with a warning; an
/// all-constant truth is an error.
double nmse(const headmotion::HeadMotionSequence& pred,
            const headmotion::HeadMotionSequence& truth);
double nmse(const Matrix& pred, const Matrix& truth);

/// Evaluation-side local CCA: per non-overlapping window, both views are
/// standardized per dimension and CCA is computed with dimension-scaled
/// ridge regularization; the score is the mean of the k = min(dx, dy)
/// correlations averaged over windows.
double local_cca_score(const Matrix& x, const Matrix& y, int window = 300);

struct EvalReport {
  double nmse = 0.0;
  double local_cca = 0.0;
  Eigen::Matrix<double, 6, 1> sd_pred;
  Eigen::Matrix<double, 6, 1> sd_truth;
  std::optional<double> chance;
  std::string system;
  std::uint64_t seed = 0;
};

EvalReport evaluate_system(const headmotion::HeadMotionSequence& pred,
                           const headmotion::HeadMotionSequence& truth,
                           const EvalConfig& cfg = {});

/// Local CCA between `truth` and `unrelated` circularly shifted by a seeded
/// random offset of at least `window` frames (sequences truncated to their
/// common length first). Passing an explicit offset overrides the draw;
/// offset 0 is the degenerate control.
double chance_score(const headmotion::HeadMotionSequence& truth,
                    const headmotion::HeadMotionSequence& unrelated,
                    int window = 300, std::uint64_t seed = 0,
                    std::optional<Eigen::Index> offset = std::nullopt);

/// JSON document with fixed keys: nmse, local_cca, sd_pred, sd_truth,
/// chance, system, seed.
std::string to_json(const EvalReport& report);
void write_report(const std::string& path, const EvalReport& report);

}  // namespace hmsyn::metrics
