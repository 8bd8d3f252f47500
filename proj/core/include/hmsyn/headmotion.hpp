#pragma once

#include "hmsyn/common.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace hmsyn::headmotion {

constexpr double kMotionFrameRate = 100.0;

/// One motion-capture frame: M >= 3 marker positions (meters), rows
/// corresponding across frames.
struct MarkerFrame {
  Matrix positions;  // M x 3
};

using RotationMatrix = Eigen::Matrix3d;
using RotationVector = Eigen::Vector3d;

/// T x 3 rotation vectors (axis * angle, radians) at 100 Hz.
struct HeadMotionSequence {
  Matrix data;
  double frame_rate = kMotionFrameRate;

  Eigen::Index frames() const { return data.rows(); }
};

/// Least-squares rotation aligning the centered reference cloud to the
/// centered current cloud, via SVD of the cross-covariance with the
/// determinant-sign (reflection) correction.
RotationMatrix estimate_rigid_rotation(const MarkerFrame& ref,
                                       const MarkerFrame& cur);

/// Log map with guarded behavior near angle 0 and pi; the result satisfies
/// ||v|| <= pi.
RotationVector rotmat_to_rotvec(const RotationMatrix& r);

/// Rodrigues formula (exp map).
RotationMatrix rotvec_to_rotmat(const RotationVector& v);

/// Per-frame rotation against frames[ref_index], converted to rotation
/// vectors.
HeadMotionSequence markers_to_motion(const std::vector<MarkerFrame>& frames,
                                     int ref_index = 0);

/// First differences scaled by the frame rate: (T-1) x 3, radians/s.
Matrix velocity(const HeadMotionSequence& motion);

/// Population SD of each rotation component followed by the SD of each
/// velocity component: (sdX, sdY, sdZ, sdVX, sdVY, sdVZ).
Eigen::Matrix<double, 6, 1> sd_profile(const HeadMotionSequence& motion);

// CSV interchange. Marker files: header `t,m0x,m0y,m0z,m1x,...`;
// motion files: header `t,rx,ry,rz`. Seconds and meters/radians, LF endings.
std::vector<MarkerFrame> read_marker_csv(const std::string& path);
HeadMotionSequence read_motion_csv(const std::string& path);
void write_motion_csv(const std::string& path,
                      const HeadMotionSequence& motion);

}  // namespace hmsyn::headmotion
