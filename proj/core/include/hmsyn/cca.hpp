#pragma once

#include "hmsyn/common.hpp"

namespace hmsyn::cca {

/// Ridge term on both view covariances. 1e-4 suits training minibatches;
/// kEvalReg suits long, well-conditioned sequences.
constexpr double kTrainReg = 1e-4;
constexpr double kEvalReg = 1e-8;

struct CcaConfig {
  double reg = kTrainReg;
  int k = 0;  // 0 -> min(dx, dy)
};

/// Fitted two-view CCA: dx x k and dy x k projections, view means, and the
/// canonical correlations sorted descending.
struct CcaModel {
  Matrix wx;
  Matrix wy;
  Vector mean_x;
  Vector mean_y;
  Vector correlations;
};

struct CcaLossGrad {
  double value = 0.0;   // sum of the top-k canonical correlations
  Matrix grad_x;        // d value / d X, T x dx
  bool degenerate = false;  // repeated singular values: subgradient returned
};

/// Symmetric inverse square root with eigenvalues clamped below at `clamp`.
Matrix sym_inv_sqrt(const Matrix& s, double clamp);

/// Standard CCA via SVD of the whitened cross-covariance
/// Sxx^(-1/2) Sxy Syy^(-1/2), covariances regularized by cfg.reg * I.
CcaModel fit_cca(const Matrix& x, const Matrix& y, const CcaConfig& cfg = {});

/// Sum of the top-k canonical correlations (trace norm of the whitened
/// cross-covariance restricted to k components).
double total_correlation(const Matrix& x, const Matrix& y,
                         const CcaConfig& cfg = {});

/// total_correlation plus its analytic gradient with respect to X; Y is
/// treated as constant.
CcaLossGrad cca_loss_grad(const Matrix& x, const Matrix& y,
                          const CcaConfig& cfg = {});

/// Mean of the k canonical correlations per non-overlapping `window`-frame
/// block (trailing remainder dropped), averaged over blocks in order.
double local_cca(const Matrix& x, const Matrix& y, int window = 300,
                 const CcaConfig& cfg = {kEvalReg, 0});

}  // namespace hmsyn::cca
