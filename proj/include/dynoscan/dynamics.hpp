#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "dynoscan/association.hpp"
#include "dynoscan/pose.hpp"
#include "dynoscan/segmentation.hpp"

namespace dynoscan {

struct DynamicsParams
{
  std::size_t window = 10;                              // k, frames including the origin
  double eps_d = 0.5;                                   // meters
  double eps_o = 0.7;                                   // net / path length ratio
  double eps_theta = 15.0 * std::numbers::pi / 180.0;  // radians
  // A cluster is occluded when a non-ground pixel this much nearer borders it; 0 disables.
  double occlusion_margin = 1.0;  // meters
  // A dynamic candidate is demoted when this fraction of its points already lay
  // on a surface at the same range (within persistence_tolerance) in the track's
  // window-origin frame. Values above 1 disable the check.
  double persistence_ratio = 0.5;
  double persistence_tolerance = 0.3;  // meters
};

/// Range images of the frames currently in the window, keyed by frame index.
using ImageLookup = std::function<const IntensityImage*(std::size_t frame_index)>;

/// Partial products T_i^w = T_1 * ... * T_i of a chain of relative poses,
/// where T_j maps frame-j coordinates into frame j-1.
std::vector<Pose> window_poses(std::span<const Pose> relative);

/// Centroid expressed in the window-origin frame (homogeneous transform).
Eigen::Vector3d to_window_origin(const Eigen::Vector3d& centroid, const Pose& window_pose);

/// The last k frames and their poses relative to the oldest one. Poses
/// before the window are never consulted, which bounds accumulated drift.
class SlidingWindow
{
public:
  explicit SlidingWindow(std::size_t k);

  /// `relative` maps this frame's coordinates into the previous frame's.
  void push(std::size_t frame_index, double timestamp, const Pose& relative);

  std::size_t size() const { return frames_.size(); }
  std::size_t capacity() const { return k_; }
  bool contains(std::size_t frame_index) const;
  std::size_t origin_frame() const { return frames_.front().index; }
  std::size_t current_frame() const { return frames_.back().index; }

  /// Pose of a window frame relative to the origin (identity for the origin).
  const Pose& pose_of(std::size_t frame_index) const;
  const Pose& current_pose() const { return window_[window_.size() - 1]; }
  const std::vector<Pose>& poses() const { return window_; }

private:
  struct Frame
  {
    std::size_t index;
    double timestamp;
    Pose relative;
  };
  void recompute();

  std::size_t k_;
  std::deque<Frame> frames_;
  std::vector<Pose> window_;
};

/// |c_last - c_first|; throws DomainError below two entries.
double net_displacement(std::span<const Eigen::Vector3d> history);
/// Sum of consecutive step lengths; throws DomainError below two entries.
double path_length(std::span<const Eigen::Vector3d> history);
/// f / f_a, defined as 0 for a perfectly stationary history.
double displacement_ratio(double f, double f_a);
/// True when the motion is consistent (ratio >= eps_o).
bool ratio_test(double f, double f_a, double eps_o);

struct PcaTestResult
{
  bool evaluated = false;  // false for fewer than 3 points, zero motion or coincident points
  bool outlier = false;
  double theta = std::numbers::pi / 2.0;  // angle between motion and principal axis, folded to [0, pi/2]
};

/// Flags clusters whose principal axis runs along their apparent motion.
PcaTestResult pca_long_object_test(std::span<const Eigen::Vector3d> points, const Eigen::Vector3d& motion,
                                   double eps_theta);

enum class MotionClass
{
  Static,
  Dynamic,
  Outlier
};

std::string_view to_string(MotionClass c);

struct TrackVerdict
{
  int track_id = 0;
  int cluster_id = 0;
  MotionClass cls = MotionClass::Static;
  double f = 0.0;
  double f_a = 0.0;
  double ratio = 0.0;
  double theta = std::numbers::pi / 2.0;
  bool pca_evaluated = false;
  bool persisted = false;  // demoted: the points sat on an unchanged surface at the window origin
  std::size_t history = 0;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();         // current frame
  Eigen::Vector3d window_centroid = Eigen::Vector3d::Zero();  // window origin
};

/// Applies the displacement, ratio and PCA tests to one window history.
/// `cluster_points` are the track's current-frame points, already expressed
/// in the window-origin frame.
TrackVerdict classify_track(std::span<const Eigen::Vector3d> window_history,
                            std::span<const Eigen::Vector3d> cluster_points, const DynamicsParams& params);

/// One flag per cluster: some member pixel has, within (radius_u, radius_v) pixels, an
/// occupied non-ground pixel at least `margin` nearer to the sensor. A partly hidden
/// cluster's centroid moves with the occluder, not with the object.
std::vector<char> occluded_clusters(const ClusterSet& clusters, const ForegroundSet& foreground,
                                    const IntensityImage& image, const SensorModel& sensor,
                                    const GroundPlane& ground, int radius_u, int radius_v, double margin);

/// Refreshes window-origin centroids of every track and classifies those
/// observed in the current frame with at least two entries inside the window.
/// Tracks with an occluded entry inside the window are not evaluated. The
/// persistence check runs only when `images` is set.
std::vector<TrackVerdict> analyze_tracks(TrackTable& tracks, const SlidingWindow& window,
                                         const ClusterSet& current, std::span<const Eigen::Vector3d> points,
                                         const DynamicsParams& params, const ImageLookup& images = {},
                                         const SensorModel* sensor = nullptr);

/// Fraction of `points` (already in the reference frame of `image`) whose
/// projection has an occupied 3x3 neighbour within `tolerance` of their range.
double persisted_fraction(std::span<const Eigen::Vector3d> points, const IntensityImage& image,
                          const SensorModel& sensor, double tolerance);

}  // namespace dynoscan
