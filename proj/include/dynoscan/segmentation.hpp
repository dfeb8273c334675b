#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dynoscan/frame_model.hpp"
#include "dynoscan/pose.hpp"

namespace dynoscan {

/// Dynamic pixels of one frame, as sorted unique indices v * w + u.
struct DynamicLabel
{
  double t = 0.0;
  std::vector<std::uint32_t> idx;

  bool operator==(const DynamicLabel&) const = default;
};

/// Sorts and removes duplicates in place.
void normalize(DynamicLabel& label);

/// Plane n . p + d = 0 with n pointing up (n.z > 0).
struct GroundPlane
{
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double d = 0.0;
  double tolerance = 0.1;  // meters
  bool fallback = false;   // true when the RANSAC fit was not trusted

  double signed_distance(const Eigen::Vector3d& p) const { return normal.dot(p) + d; }
};

struct GroundParams
{
  int iterations = 200;
  double fit_tolerance = 0.1;     // RANSAC inlier distance
  double low_fraction = 0.3;      // fit only the lowest share of points by z
  double min_inlier_ratio = 0.5;  // below this the horizontal fallback is used
  double max_tilt = 0.5236;       // radians; hypotheses steeper than this are rejected
  std::size_t min_low_points = 50;
  double grow_tolerance = 0.1;  // points within this height of the plane are ground
  std::uint64_t seed = 7;
};

GroundPlane estimate_ground_plane(const PointFrame& frame, const GroundParams& params = {});

struct SeedResult
{
  std::vector<Pixel> seeds;
  std::size_t dropped = 0;
};

/// Maps window-origin centroids into the current frame with the inverse of the
/// current window pose, projects them, and snaps seeds on empty pixels to the
/// nearest occupied pixel within `snap_radius`.
SeedResult seeds_to_current(std::span<const Eigen::Vector3d> window_centroids, const Pose& current_window_pose,
                            const IntensityImage& image, const SensorModel& sensor, int snap_radius = 3);

struct GrowParams
{
  double eps = 0.4;  // meters between adjoining region points
  std::size_t max_points = 5000;
};

struct GrowResult
{
  DynamicLabel label;
  bool truncated = false;
  std::size_t rejected_seeds = 0;  // empty or ground seed pixels
};

/// Breadth-first growth over 8-neighbourhoods (columns wrap). A neighbour joins
/// when occupied, within eps of the adjoining region point, and above the
/// ground plane tolerance. Seeds share one visited set.
GrowResult region_grow(const IntensityImage& image, const PointFrame& frame, std::span<const Pixel> seeds,
                       const GroundPlane& plane, const GrowParams& params, double timestamp);

}  // namespace dynoscan
