#include "hmsyn/cca.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

namespace hmsyn::cca {

namespace {

struct Whitened {
  Matrix xc, yc;          // centered views
  Matrix isqrt_xx, isqrt_yy;
  Matrix t_mat;           // isqrt_xx * Sxy * isqrt_yy
  Vector mean_x, mean_y;
};

void validate_views(const Matrix& x, const Matrix& y, const CcaConfig& cfg) {
  if (x.rows() != y.rows()) {
    throw DataError("cca: views have different row counts (" +
                    std::to_string(x.rows()) + " vs " +
                    std::to_string(y.rows()) + ")");
  }
  if (x.rows() < 2) throw DataError("cca: need at least 2 rows");
  if (x.cols() < 1 || y.cols() < 1) throw DataError("cca: empty view");
  if (!x.allFinite() || !y.allFinite()) {
    throw NumericalError("cca: non-finite input");
  }
  if (cfg.reg <= 0.0) throw UsageError("cca: reg must be positive");
  const int kmax = static_cast<int>(std::min(x.cols(), y.cols()));
  if (cfg.k < 0 || cfg.k > kmax) {
    throw UsageError("cca: k must be in [0, min(dx, dy)]");
  }
}

Whitened whiten(const Matrix& x, const Matrix& y, const CcaConfig& cfg) {
  Whitened w;
  w.mean_x = x.colwise().mean();
  w.mean_y = y.colwise().mean();
  w.xc = x.rowwise() - w.mean_x.transpose();
  w.yc = y.rowwise() - w.mean_y.transpose();
  const double denom = static_cast<double>(x.rows() - 1);
  const Matrix sxx =
      (w.xc.transpose() * w.xc) / denom +
      cfg.reg * Matrix::Identity(x.cols(), x.cols());
  const Matrix syy =
      (w.yc.transpose() * w.yc) / denom +
      cfg.reg * Matrix::Identity(y.cols(), y.cols());
  const Matrix sxy = (w.xc.transpose() * w.yc) / denom;
  if (!sxx.allFinite() || !syy.allFinite() || !sxy.allFinite()) {
    throw NumericalError("cca: non-finite covariance");
  }
  w.isqrt_xx = sym_inv_sqrt(sxx, cfg.reg);
  w.isqrt_yy = sym_inv_sqrt(syy, cfg.reg);
  w.t_mat = w.isqrt_xx * sxy * w.isqrt_yy;
  return w;
}

int resolve_k(const CcaConfig& cfg, Eigen::Index dx, Eigen::Index dy) {
  const int kmax = static_cast<int>(std::min(dx, dy));
  return cfg.k == 0 ? kmax : cfg.k;
}

}  // namespace

Matrix sym_inv_sqrt(const Matrix& s, double clamp) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("sym_inv_sqrt: eigendecomposition failed");
  }
  Vector inv_sqrt = eig.eigenvalues();
  for (Eigen::Index i = 0; i < inv_sqrt.size(); ++i) {
    inv_sqrt[i] = 1.0 / std::sqrt(std::max(inv_sqrt[i], clamp));
  }
  return eig.eigenvectors() * inv_sqrt.asDiagonal() *
         eig.eigenvectors().transpose();
}

CcaModel fit_cca(const Matrix& x, const Matrix& y, const CcaConfig& cfg) {
  validate_views(x, y, cfg);
  const int k = resolve_k(cfg, x.cols(), y.cols());
  const Whitened w = whiten(x, y, cfg);

  Eigen::JacobiSVD<Matrix> svd(w.t_mat,
                               Eigen::ComputeThinU | Eigen::ComputeThinV);
  CcaModel model;
  model.mean_x = w.mean_x;
  model.mean_y = w.mean_y;
  model.wx = w.isqrt_xx * svd.matrixU().leftCols(k);
  model.wy = w.isqrt_yy * svd.matrixV().leftCols(k);
  model.correlations =
      svd.singularValues().head(k).cwiseMin(1.0).cwiseMax(0.0);
  return model;
}

double total_correlation(const Matrix& x, const Matrix& y,
                         const CcaConfig& cfg) {
  validate_views(x, y, cfg);
  const int k = resolve_k(cfg, x.cols(), y.cols());
  const Whitened w = whiten(x, y, cfg);
  Eigen::JacobiSVD<Matrix> svd(w.t_mat);
  return svd.singularValues().head(k).sum();
}

CcaLossGrad cca_loss_grad(const Matrix& x, const Matrix& y,
                          const CcaConfig& cfg) {
  validate_views(x, y, cfg);
  const int k = resolve_k(cfg, x.cols(), y.cols());
  const Whitened w = whiten(x, y, cfg);

  Eigen::JacobiSVD<Matrix> svd(w.t_mat,
                               Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector s = svd.singularValues();
  const Matrix u_k = svd.matrixU().leftCols(k);
  const Matrix v_k = svd.matrixV().leftCols(k);
  const Vector s_k = s.head(k);

  CcaLossGrad out;
  out.value = s_k.sum();
  for (Eigen::Index i = 0; i + 1 < s.size(); ++i) {
    if (s[i] - s[i + 1] < 1e-10) out.degenerate = true;
  }

  // Trace-norm gradient through the whitened SVD: with T = U S V^T,
  //   dJ/dSxy = isqrt_xx U V^T isqrt_yy
  //   dJ/dSxx = -1/2 isqrt_xx U S U^T isqrt_xx
  // pushed back through the empirical covariances of the centered view.
  const Matrix grad_sxy = w.isqrt_xx * u_k * v_k.transpose() * w.isqrt_yy;
  const Matrix grad_sxx =
      -0.5 * w.isqrt_xx * u_k * s_k.asDiagonal() * u_k.transpose() *
      w.isqrt_xx;
  const double denom = static_cast<double>(x.rows() - 1);
  out.grad_x = (2.0 * w.xc * grad_sxx + w.yc * grad_sxy.transpose()) / denom;
  return out;
}

double local_cca(const Matrix& x, const Matrix& y, int window,
                 const CcaConfig& cfg) {
  if (window < 2) throw UsageError("local_cca: window must be >= 2");
  if (x.rows() != y.rows()) {
    throw DataError("local_cca: views have different row counts");
  }
  if (x.rows() < window) {
    throw DataError("local_cca: sequence has " + std::to_string(x.rows()) +
                    " frames, " + std::to_string(window - x.rows()) +
                    " short of one " + std::to_string(window) +
                    "-frame window");
  }
  const Eigen::Index n_windows = x.rows() / window;
  const int k = resolve_k(cfg, x.cols(), y.cols());
  double sum = 0.0;
  for (Eigen::Index wi = 0; wi < n_windows; ++wi) {
    const CcaModel model = fit_cca(x.middleRows(wi * window, window),
                                   y.middleRows(wi * window, window), cfg);
    sum += model.correlations.sum() / k;
  }
  return sum / static_cast<double>(n_windows);
}

}  // namespace hmsyn::cca
