#include "dynoscan/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "dynoscan/clustering.hpp"
#include "dynoscan/egomotion.hpp"
#include "dynoscan/errors.hpp"

namespace dynoscan {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point& mark)
{
  const auto now = Clock::now();
  const double ms = std::chrono::duration<double, std::milli>(now - mark).count();
  mark = now;
  return ms;
}

}  // namespace

Pipeline::Pipeline(PipelineConfig config, std::optional<std::vector<TimedPose>> external_poses)
    : config_(std::move(config)),
      external_(std::move(external_poses)),
      tracks_(config_.dynamics.window),
      window_(config_.dynamics.window)
{
  config_.validate();
  kernel_ = build_kernel(config_.kernel_a, config_.kernel_b, config_.sigma_m, config_.sigma_n);
  if (external_)
    std::stable_sort(external_->begin(), external_->end(),
                     [](const TimedPose& a, const TimedPose& b) { return a.t < b.t; });
}

Pose Pipeline::external_motion(double timestamp, FrameResult& result)
{
  const auto& poses = *external_;
  const double tolerance = 0.5 / config_.sensor.rate_hz;
  auto it = std::lower_bound(poses.begin(), poses.end(), timestamp,
                             [](const TimedPose& p, double t) { return p.t < t; });
  const TimedPose* best = nullptr;
  if (it != poses.end())
    best = &*it;
  if (it != poses.begin() && (!best || std::abs(std::prev(it)->t - timestamp) < std::abs(best->t - timestamp)))
    best = &*std::prev(it);
  if (!best || std::abs(best->t - timestamp) > tolerance)
  {
    result.odometry_failed = true;
    result.odometry_error = "no external pose near this timestamp";
    previous_external_.reset();
    return last_motion_;
  }
  Pose motion;
  if (previous_external_)
    motion = compose(best->pose.inverse(), *previous_external_);
  previous_external_ = best->pose;
  return motion;
}

FrameResult Pipeline::process(const PointFrame& frame)
{
  FrameResult r;
  r.index = frame_index_++;
  r.timestamp = frame.timestamp;
  r.label.t = frame.timestamp;
  const auto start = Clock::now();
  auto mark = start;

  try
  {
    if (last_timestamp_ && !(frame.timestamp > *last_timestamp_))
      throw DomainError("frame timestamps must increase");
    last_timestamp_ = frame.timestamp;

    IntensityImage image = project(frame, config_.sensor);
    r.timings.project = elapsed_ms(mark);

    const ForegroundSet fg = extract_foreground(frame, image, kernel_, config_.theta);
    r.foreground_points = fg.points.size();
    r.timings.foreground = elapsed_ms(mark);

    const bool first = r.index == 0;
    Pose motion;
    if (external_)
      motion = external_motion(frame.timestamp, r);
    else
    {
      std::vector<Feature> features;
      try
      {
        features = detect_features(feature_image(image), image.width(), image.height(), config_.features);
        lift_features(features, image, frame);
        if (features.size() < static_cast<std::size_t>(config_.features.min_corners))
          throw InsufficientFeaturesError("only " + std::to_string(features.size()) + " corners");
        if (!first)
        {
          if (previous_features_.empty())
            throw InsufficientFeaturesError("previous frame has no features");
          const MatchSet matches = match_features(previous_features_, features, config_.features);
          motion = estimate_motion(matches, config_.ransac).pose;
        }
      }
      catch (const Error& e)
      {
        if (!first)
        {
          r.odometry_failed = true;
          r.odometry_error = e.what();
          motion = last_motion_;
        }
      }
      previous_features_ = std::move(features);
    }
    last_motion_ = motion;
    r.motion = motion;
    odometry_ = compose(odometry_, motion.inverse());
    r.odometry = odometry_;
    r.timings.odometry = elapsed_ms(mark);

    const std::vector<Eigen::Vector3d> points = foreground_positions(fg);
    ClusterSet clusters = cluster_points(points, config_.clustering);
    clusters.timestamp = frame.timestamp;
    r.cluster_count = clusters.size();
    r.timings.cluster = elapsed_ms(mark);

    const GroundPlane plane = estimate_ground_plane(frame, config_.ground);
    r.ground_fallback = plane.fallback;
    const std::vector<char> occluded =
      occluded_clusters(clusters, fg, image, config_.sensor, plane, config_.kernel_a + 1, config_.kernel_b + 1,
                        config_.dynamics.occlusion_margin);

    const CostMatrix costs = build_cost_matrix(previous_clusters_, clusters, motion, config_.d_max);
    const Assignment assignment = solve_assignment(costs);
    tracks_.update(assignment, clusters, r.index, occluded);
    for (const auto& c : clusters.clusters)
    {
      r.cluster_tracks.push_back(tracks_.track_of_cluster(c.id));
      r.cluster_centroids.push_back(c.centroid);
    }
    r.timings.associate = elapsed_ms(mark);

    window_.push(r.index, frame.timestamp, motion.inverse());
    while (!images_.empty() && !window_.contains(images_.front().first))
      images_.pop_front();
    const ImageLookup lookup = [&](std::size_t index) -> const IntensityImage* {
      for (const auto& [i, img] : images_)
        if (i == index)
          return &img;
      return index == r.index ? &image : nullptr;
    };
    r.verdicts = analyze_tracks(tracks_, window_, clusters, points, config_.dynamics, lookup, &config_.sensor);
    r.timings.classify = elapsed_ms(mark);

    std::vector<Eigen::Vector3d> window_centroids;
    for (const auto& v : r.verdicts)
      if (v.cls == MotionClass::Dynamic)
        window_centroids.push_back(v.window_centroid);
    if (!window_centroids.empty())
    {
      const SeedResult seeds =
        seeds_to_current(window_centroids, window_.current_pose(), image, config_.sensor, config_.snap_radius);
      r.seeds_dropped = seeds.dropped;
      GrowResult grown = region_grow(image, frame, seeds.seeds, plane, config_.grow, frame.timestamp);
      r.grow_truncated = grown.truncated;
      r.label = std::move(grown.label);
    }
    r.timings.grow = elapsed_ms(mark);

    previous_clusters_ = std::move(clusters);
    images_.emplace_back(r.index, std::move(image));
  }
  catch (const Error& e)
  {
    r.frame_failed = true;
    r.frame_error = e.what();
    r.label.idx.clear();
  }
  r.timings.total = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  return r;
}

}  // namespace dynoscan
