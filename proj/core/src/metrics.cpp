#include "hmsyn/metrics.hpp"

#include "hmsyn/cca.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>

namespace hmsyn::metrics {

namespace {

Vector population_variance(const Matrix& m) {
  Vector var(m.cols());
  const Eigen::RowVectorXd mean = m.colwise().mean();
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    var[c] = (m.col(c).array() - mean[c]).square().sum() /
             static_cast<double>(m.rows());
  }
  return var;
}

// Standardize columns in place (population SD, zero-variance columns left
// centered only).
Matrix standardized(const Matrix& m) {
  Matrix out = m.rowwise() - m.colwise().mean();
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const double sd = std::sqrt(out.col(c).squaredNorm() /
                                static_cast<double>(out.rows()));
    if (sd > 1e-12) out.col(c) /= sd;
  }
  return out;
}

}  // namespace

double nmse(const Matrix& pred, const Matrix& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) {
    throw DataError("nmse: shape mismatch");
  }
  if (truth.rows() < 2) throw DataError("nmse: need at least 2 frames");
  const Vector var = population_variance(truth);
  double sum = 0.0;
  int used = 0;
  for (Eigen::Index c = 0; c < truth.cols(); ++c) {
    if (var[c] < 1e-12) {
      warn("nmse: dimension " + std::to_string(c) +
           " of the ground truth is constant; excluded");
      continue;
    }
    const double mse = (pred.col(c) - truth.col(c)).squaredNorm() /
                       static_cast<double>(truth.rows());
    sum += mse / var[c];
    ++used;
  }
  if (used == 0) {
    throw DataError("nmse: ground truth is constant in every dimension");
  }
  return sum / used;
}

double nmse(const headmotion::HeadMotionSequence& pred,
            const headmotion::HeadMotionSequence& truth) {
  return nmse(pred.data, truth.data);
}

double local_cca_score(const Matrix& x, const Matrix& y, int window) {
  if (window < 2) throw UsageError("local_cca_score: window must be >= 2");
  if (x.rows() != y.rows()) {
    throw DataError("local_cca_score: row count mismatch");
  }
  if (x.rows() < window) {
    throw DataError("local_cca_score: sequence has " +
                    std::to_string(x.rows()) + " frames, " +
                    std::to_string(window - x.rows()) + " short of one " +
                    std::to_string(window) + "-frame window");
  }
  const Eigen::Index n_windows = x.rows() / window;
  const int k = static_cast<int>(std::min(x.cols(), y.cols()));
  const double reg_x =
      std::max(kBaseReg, kDimRegCoeff * static_cast<double>(x.cols()) / window);
  const double reg_y =
      std::max(kBaseReg, kDimRegCoeff * static_cast<double>(y.cols()) / window);

  double sum = 0.0;
  for (Eigen::Index wi = 0; wi < n_windows; ++wi) {
    const Matrix xw = standardized(x.middleRows(wi * window, window));
    const Matrix yw = standardized(y.middleRows(wi * window, window));
    const double denom = static_cast<double>(window - 1);
    const Matrix sxx = (xw.transpose() * xw) / denom +
                       reg_x * Matrix::Identity(xw.cols(), xw.cols());
    const Matrix syy = (yw.transpose() * yw) / denom +
                       reg_y * Matrix::Identity(yw.cols(), yw.cols());
    const Matrix sxy = (xw.transpose() * yw) / denom;
    const Matrix t_mat = cca::sym_inv_sqrt(sxx, kBaseReg) * sxy *
                         cca::sym_inv_sqrt(syy, kBaseReg);
    Eigen::JacobiSVD<Matrix> svd(t_mat);
    sum += svd.singularValues().head(k).cwiseMin(1.0).cwiseMax(0.0).sum() / k;
  }
  return sum / static_cast<double>(n_windows);
}

EvalReport evaluate_system(const headmotion::HeadMotionSequence& pred,
                           const headmotion::HeadMotionSequence& truth,
                           const EvalConfig& cfg) {
  if (pred.data.rows() != truth.data.rows()) {
    throw DataError("evaluate_system: prediction and truth lengths differ (" +
                    std::to_string(pred.data.rows()) + " vs " +
                    std::to_string(truth.data.rows()) + ")");
  }
  EvalReport report;
  report.system = cfg.system;
  report.seed = cfg.seed;
  report.nmse = nmse(pred, truth);
  report.local_cca = local_cca_score(pred.data, truth.data, cfg.cca_window);
  report.sd_pred = headmotion::sd_profile(pred);
  report.sd_truth = headmotion::sd_profile(truth);
  return report;
}

double chance_score(const headmotion::HeadMotionSequence& truth,
                    const headmotion::HeadMotionSequence& unrelated,
                    int window, std::uint64_t seed,
                    std::optional<Eigen::Index> offset) {
  const Eigen::Index t_common =
      std::min(truth.data.rows(), unrelated.data.rows());
  if (t_common < window) {
    throw DataError("chance_score: sequences shorter than one window");
  }
  Eigen::Index shift = 0;
  if (offset.has_value()) {
    shift = *offset % unrelated.data.rows();
  } else {
    const Eigen::Index span = unrelated.data.rows() - 2 * window;
    Rng rng(mix_seed(seed, 0x63686e63ULL));
    shift = window;
    if (span > 0) {
      std::uniform_int_distribution<Eigen::Index> dist(0, span - 1);
      shift += dist(rng);
    }
  }
  Matrix rolled(t_common, unrelated.data.cols());
  for (Eigen::Index i = 0; i < t_common; ++i) {
    rolled.row(i) =
        unrelated.data.row((i + shift) % unrelated.data.rows());
  }
  return local_cca_score(truth.data.topRows(t_common), rolled, window);
}

std::string to_json(const EvalReport& report) {
  nlohmann::json j;
  j["nmse"] = report.nmse;
  j["local_cca"] = report.local_cca;
  j["sd_pred"] = std::vector<double>(report.sd_pred.data(),
                                     report.sd_pred.data() + 6);
  j["sd_truth"] = std::vector<double>(report.sd_truth.data(),
                                      report.sd_truth.data() + 6);
  if (report.chance.has_value()) {
    j["chance"] = *report.chance;
  } else {
    j["chance"] = nullptr;
  }
  j["system"] = report.system;
  j["seed"] = report.seed;
  return j.dump(2) + "\n";
}

void write_report(const std::string& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("write_report: cannot open " + path);
  out << to_json(report);
  if (!out) throw DataError("write_report: write failed");
}

}  // namespace hmsyn::metrics
