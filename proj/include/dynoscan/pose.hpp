#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dynoscan {

/// Rigid transform p -> R p + t.
struct Pose
{
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }
  static Pose translation(double x, double y, double z);
  static Pose rotation_z(double angle);
  /// Rotation from an axis-angle vector (radians) followed by translation.
  static Pose from_rotvec(const Eigen::Vector3d& rotvec, const Eigen::Vector3d& t);

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return R * p + t; }
  Pose inverse() const;
  Eigen::Matrix4d matrix() const;

  /// max |R^T R - I|
  double orthonormality_error() const;
};

/// a * b, i.e. apply b first. The rotation is re-projected onto SO(3).
Pose compose(const Pose& a, const Pose& b);

/// T_1 * T_2 * ... * T_n; identity for an empty chain.
Pose accumulate(std::span<const Pose> chain);

/// Relative transforms W_{i-1}^{-1} W_i of an absolute world_from_sensor
/// sequence; the first entry is identity.
std::vector<Pose> relative_poses(std::span<const Pose> absolute);

struct TimedPose
{
  double t = 0.0;
  Pose pose;
};

/// TUM trajectory text: `t x y z qx qy qz qw` per line, `#` comments allowed.
std::vector<TimedPose> read_tum(const std::filesystem::path& path);
void write_tum(std::span<const TimedPose> poses, const std::filesystem::path& path);
std::string tum_line(const TimedPose& pose);

/// Closest rotation in the Frobenius sense (polar factor with det +1).
Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& m);

}  // namespace dynoscan
