#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dynoscan/association.hpp"
#include "dynoscan/config.hpp"
#include "dynoscan/dynamics.hpp"
#include "dynoscan/features.hpp"
#include "dynoscan/foreground.hpp"
#include "dynoscan/pose.hpp"
#include "dynoscan/segmentation.hpp"

namespace dynoscan {

struct StageTimings
{
  double project = 0.0;  // milliseconds
  double foreground = 0.0;
  double odometry = 0.0;
  double cluster = 0.0;
  double associate = 0.0;
  double classify = 0.0;
  double grow = 0.0;
  double total = 0.0;
};

struct FrameResult
{
  std::size_t index = 0;
  double timestamp = 0.0;
  Pose motion;    // previous-frame coordinates -> current frame
  Pose odometry;  // accumulated world_from_sensor, first frame at identity
  bool odometry_failed = false;
  std::string odometry_error;
  bool frame_failed = false;  // a stage other than odometry threw; label is empty
  std::string frame_error;
  std::size_t foreground_points = 0;
  std::size_t cluster_count = 0;
  std::vector<TrackVerdict> verdicts;
  std::vector<int> cluster_tracks;  // track id per current cluster
  std::vector<Eigen::Vector3d> cluster_centroids;
  bool ground_fallback = false;
  std::size_t seeds_dropped = 0;
  bool grow_truncated = false;
  DynamicLabel label;
  StageTimings timings;
};

/// Single-pass per-frame processor. State is bounded by the sliding window.
class Pipeline
{
public:
  /// `external_poses` are absolute world_from_sensor poses (TUM) that replace
  /// feature odometry; frames are matched to them by nearest timestamp.
  explicit Pipeline(PipelineConfig config, std::optional<std::vector<TimedPose>> external_poses = std::nullopt);

  FrameResult process(const PointFrame& frame);

  const PipelineConfig& config() const { return config_; }
  const TrackTable& tracks() const { return tracks_; }
  const SlidingWindow& window() const { return window_; }

private:
  Pose external_motion(double timestamp, FrameResult& result);

  PipelineConfig config_;
  GaussianKernel kernel_;
  std::optional<std::vector<TimedPose>> external_;
  std::optional<Pose> previous_external_;

  std::size_t frame_index_ = 0;
  std::optional<double> last_timestamp_;
  std::vector<Feature> previous_features_;
  ClusterSet previous_clusters_;
  Pose last_motion_;
  Pose odometry_;
  TrackTable tracks_;
  SlidingWindow window_;
  std::deque<std::pair<std::size_t, IntensityImage>> images_;  // window frames
};

}  // namespace dynoscan
