#pragma once

#include <cstdint>
#include <span>

#include "dynoscan/features.hpp"
#include "dynoscan/pose.hpp"

namespace dynoscan {

struct RansacParams
{
  double inlier_threshold = 0.3;  // meters
  int iterations = 100;
  double min_inlier_ratio = 0.3;
  std::uint64_t seed = 42;
};

struct MotionEstimate
{
  Pose pose;  // maps previous-frame coordinates into the current frame: Y = R X + t
  std::size_t inliers = 0;
  double inlier_ratio = 0.0;
};

/// Closed-form least-squares rigid fit Y ~ R X + t (centroids + SVD, proper rotation).
/// Throws DegenerateGeometryError when X is collinear or has fewer than 3 points.
Pose fit_rigid(std::span<const Eigen::Vector3d> X, std::span<const Eigen::Vector3d> Y);

/// RANSAC over minimal 3-point samples, refit on the best consensus set.
MotionEstimate estimate_motion(const MatchSet& matches, const RansacParams& params = {});
MotionEstimate estimate_motion(std::span<const Eigen::Vector3d> X, std::span<const Eigen::Vector3d> Y,
                               const RansacParams& params = {});

}  // namespace dynoscan
