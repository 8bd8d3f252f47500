#include "hmsyn/headmotion.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace hmsyn::headmotion {

namespace {

using std::numbers::pi;

void check_cloud(const MarkerFrame& frame, const char* which) {
  if (frame.positions.rows() < 3 || frame.positions.cols() != 3) {
    throw DataError(std::string("estimate_rigid_rotation: ") + which +
                    " cloud must be M x 3 with M >= 3");
  }
  const Matrix centered =
      frame.positions.rowwise() - frame.positions.colwise().mean();
  Eigen::JacobiSVD<Matrix> svd(centered);
  const auto& s = svd.singularValues();
  if (s.size() < 2 || s[1] <= 1e-12 * std::max(s[0], 1e-300)) {
    throw DataError(std::string("estimate_rigid_rotation: ") + which +
                    " markers are collinear (degenerate cloud)");
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, const std::string& path) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("bad numeric field '" + s + "' in " + path);
  }
}

}  // namespace

RotationMatrix estimate_rigid_rotation(const MarkerFrame& ref,
                                       const MarkerFrame& cur) {
  if (ref.positions.rows() != cur.positions.rows()) {
    throw DataError(
        "estimate_rigid_rotation: marker counts differ between frames");
  }
  check_cloud(ref, "reference");
  check_cloud(cur, "current");

  const Matrix a = ref.positions.rowwise() - ref.positions.colwise().mean();
  const Matrix b = cur.positions.rowwise() - cur.positions.colwise().mean();
  const Eigen::Matrix3d h = a.transpose() * b;
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  // Reflection guard: force a proper rotation when the cross-covariance
  // has negative determinant.
  d(2, 2) = ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0)
                ? -1.0
                : 1.0;
  return svd.matrixV() * d * svd.matrixU().transpose();
}

RotationVector rotmat_to_rotvec(const RotationMatrix& r) {
  const double ortho_err =
      (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho_err > 1e-6 || r.determinant() < 0.0) {
    throw DataError("rotmat_to_rotvec: input is not a rotation matrix");
  }

  const Eigen::Vector3d skew(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0),
                             r(1, 0) - r(0, 1));
  const double cos_theta =
      std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  const double theta = std::acos(cos_theta);

  Eigen::Vector3d v;
  if (theta < 1e-7) {
    // First order: R ~ I + [v]_x.
    v = 0.5 * skew;
  } else if (pi - theta < 1e-5) {
    // Near pi the skew part vanishes; recover the axis from (R + I) / 2 =
    // axis axis^T + O(pi - theta), using the largest diagonal for stability.
    const Eigen::Matrix3d b = 0.5 * (r + Eigen::Matrix3d::Identity());
    int i0 = 0;
    b.diagonal().maxCoeff(&i0);
    Eigen::Vector3d axis;
    axis[i0] = std::sqrt(std::max(b(i0, i0), 0.0));
    for (int j = 0; j < 3; ++j) {
      if (j != i0) axis[j] = b(i0, j) / axis[i0];
    }
    axis.normalize();
    // Sign from the largest skew entry: sin(theta) > 0 below pi, so the
    // skew part still points along the axis.
    int s0 = 0;
    skew.cwiseAbs().maxCoeff(&s0);
    if (std::abs(skew[s0]) > 1e-300 && skew[s0] * axis[s0] < 0.0) axis = -axis;
    // asin is well conditioned here; acos loses digits next to pi.
    const double theta_pi = pi - std::asin(std::min(0.5 * skew.norm(), 1.0));
    v = theta_pi * axis;
  } else {
    v = (theta / (2.0 * std::sin(theta))) * skew;
  }

  const double angle = v.norm();
  if (angle > pi) v *= (angle - 2.0 * pi) / angle;
  return v;
}

RotationMatrix rotvec_to_rotmat(const RotationVector& v) {
  if (!v.allFinite()) throw NumericalError("rotvec_to_rotmat: non-finite input");
  const double theta = v.norm();
  Eigen::Matrix3d k;
  k << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  double a, b;  // sin(t)/t and (1-cos(t))/t^2, series-stable near zero
  if (theta < 1e-6) {
    const double t2 = theta * theta;
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / (theta * theta);
  }
  return Eigen::Matrix3d::Identity() + a * k + b * (k * k);
}

HeadMotionSequence markers_to_motion(const std::vector<MarkerFrame>& frames,
                                     int ref_index) {
  if (frames.empty()) throw DataError("markers_to_motion: empty sequence");
  if (ref_index < 0 || ref_index >= static_cast<int>(frames.size())) {
    throw DataError("markers_to_motion: ref_index " +
                    std::to_string(ref_index) + " out of range");
  }
  const MarkerFrame& ref = frames[static_cast<std::size_t>(ref_index)];
  HeadMotionSequence out;
  out.data.resize(static_cast<Eigen::Index>(frames.size()), 3);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const RotationVector v = (static_cast<int>(t) == ref_index)
                                 ? RotationVector::Zero()
                                 : rotmat_to_rotvec(
                                       estimate_rigid_rotation(ref, frames[t]));
    out.data.row(static_cast<Eigen::Index>(t)) = v.transpose();
  }
  return out;
}

Matrix velocity(const HeadMotionSequence& motion) {
  if (motion.data.rows() < 2) {
    throw DataError("velocity: need at least 2 frames");
  }
  const Eigen::Index t_count = motion.data.rows();
  return (motion.data.bottomRows(t_count - 1) -
          motion.data.topRows(t_count - 1)) *
         motion.frame_rate;
}

Eigen::Matrix<double, 6, 1> sd_profile(const HeadMotionSequence& motion) {
  if (motion.data.rows() < 2) {
    throw DataError("sd_profile: need at least 2 frames");
  }
  auto population_sd = [](const Matrix& m) {
    Vector sd(m.cols());
    const Eigen::RowVectorXd mean = m.colwise().mean();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      sd[c] = std::sqrt((m.col(c).array() - mean[c]).square().sum() /
                        static_cast<double>(m.rows()));
    }
    return sd;
  };
  Eigen::Matrix<double, 6, 1> profile;
  profile.head<3>() = population_sd(motion.data);
  profile.tail<3>() = population_sd(velocity(motion));
  return profile;
}

std::vector<MarkerFrame> read_marker_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("read_marker_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError("read_marker_csv: empty file " + path);
  }
  const auto header = split_csv_line(line);
  if (header.size() < 10 || header[0] != "t" || (header.size() - 1) % 3 != 0) {
    throw DataError("read_marker_csv: expected header t,m0x,m0y,m0z,... in " +
                    path);
  }
  const auto n_markers = static_cast<Eigen::Index>((header.size() - 1) / 3);
  std::vector<MarkerFrame> frames;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError("read_marker_csv: row width mismatch in " + path);
    }
    MarkerFrame frame;
    frame.positions.resize(n_markers, 3);
    for (Eigen::Index m = 0; m < n_markers; ++m) {
      for (int c = 0; c < 3; ++c) {
        frame.positions(m, c) =
            parse_double(fields[static_cast<std::size_t>(1 + 3 * m + c)], path);
      }
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

HeadMotionSequence read_motion_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("read_motion_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError("read_motion_csv: empty file " + path);
  }
  if (split_csv_line(line) != std::vector<std::string>{"t", "rx", "ry", "rz"}) {
    throw DataError("read_motion_csv: expected header t,rx,ry,rz in " + path);
  }
  std::vector<std::array<double, 3>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4) {
      throw DataError("read_motion_csv: row width mismatch in " + path);
    }
    rows.push_back({parse_double(fields[1], path), parse_double(fields[2], path),
                    parse_double(fields[3], path)});
  }
  HeadMotionSequence motion;
  motion.data.resize(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      motion.data(static_cast<Eigen::Index>(i), c) = rows[i][static_cast<std::size_t>(c)];
    }
  }
  return motion;
}

void write_motion_csv(const std::string& path,
                      const HeadMotionSequence& motion) {
  std::ofstream out(path);
  if (!out) throw DataError("write_motion_csv: cannot open " + path);
  out << "t,rx,ry,rz\n";
  char buf[128];
  for (Eigen::Index t = 0; t < motion.data.rows(); ++t) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.12g,%.12g,%.12g\n",
                  static_cast<double>(t) / motion.frame_rate,
                  motion.data(t, 0), motion.data(t, 1), motion.data(t, 2));
    out << buf;
  }
  if (!out) throw DataError("write_motion_csv: write failed");
}

}  // namespace hmsyn::headmotion
