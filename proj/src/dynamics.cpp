#include "dynoscan/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "dynoscan/errors.hpp"

namespace dynoscan {

std::vector<Pose> window_poses(std::span<const Pose> relative)
{
  std::vector<Pose> out;
  out.reserve(relative.size());
  Pose acc;
  for (const Pose& t : relative)
  {
    acc = compose(acc, t);
    out.push_back(acc);
  }
  return out;
}

Eigen::Vector3d to_window_origin(const Eigen::Vector3d& centroid, const Pose& window_pose)
{
  const Eigen::Vector4d homogeneous(centroid.x(), centroid.y(), centroid.z(), 1.0);
  const Eigen::Vector4d moved = window_pose.matrix() * homogeneous;
  return moved.head<3>() / moved.w();
}

SlidingWindow::SlidingWindow(std::size_t k) : k_(k)
{
  if (k < 2)
    throw ConfigError("sliding window needs at least 2 frames");
}

void SlidingWindow::push(std::size_t frame_index, double timestamp, const Pose& relative)
{
  frames_.push_back({frame_index, timestamp, relative});
  while (frames_.size() > k_)
    frames_.pop_front();
  recompute();
}

void SlidingWindow::recompute()
{
  // The origin's own relative pose points outside the window and is ignored.
  window_.assign(1, Pose::identity());
  std::vector<Pose> chain;
  chain.reserve(frames_.size());
  for (std::size_t i = 1; i < frames_.size(); ++i)
    chain.push_back(frames_[i].relative);
  const auto partial = window_poses(chain);
  window_.insert(window_.end(), partial.begin(), partial.end());
}

bool SlidingWindow::contains(std::size_t frame_index) const
{
  return !frames_.empty() && frame_index >= frames_.front().index && frame_index <= frames_.back().index;
}

const Pose& SlidingWindow::pose_of(std::size_t frame_index) const
{
  if (!contains(frame_index))
    throw DomainError("frame outside the sliding window");
  return window_[frame_index - frames_.front().index];
}

double net_displacement(std::span<const Eigen::Vector3d> history)
{
  if (history.size() < 2)
    throw DomainError("track history too short to evaluate");
  return (history.back() - history.front()).norm();
}

double path_length(std::span<const Eigen::Vector3d> history)
{
  if (history.size() < 2)
    throw DomainError("track history too short to evaluate");
  double total = 0.0;
  for (std::size_t j = 1; j < history.size(); ++j)
    total += (history[j] - history[j - 1]).norm();
  return total;
}

double displacement_ratio(double f, double f_a) { return f_a > 0.0 ? std::min(f / f_a, 1.0) : 0.0; }

bool ratio_test(double f, double f_a, double eps_o) { return displacement_ratio(f, f_a) >= eps_o; }

PcaTestResult pca_long_object_test(std::span<const Eigen::Vector3d> points, const Eigen::Vector3d& motion,
                                   double eps_theta)
{
  PcaTestResult result;
  const double motion_norm = motion.norm();
  if (points.size() < 3 || !(motion_norm > 0.0))
    return result;

  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : points)
    mean += p;
  mean /= static_cast<double>(points.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : points)
    cov += (p - mean) * (p - mean).transpose();
  cov /= static_cast<double>(points.size());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  const Eigen::Vector3d values = solver.eigenvalues();  // ascending
  if (!(values(2) > 1e-12))
    return result;
  const Eigen::Vector3d axis = solver.eigenvectors().col(2).normalized();

  const double c = std::clamp(std::abs(axis.dot(motion / motion_norm)), 0.0, 1.0);
  result.evaluated = true;
  result.theta = std::acos(c);
  result.outlier = result.theta < eps_theta;
  return result;
}

std::string_view to_string(MotionClass c)
{
  switch (c)
  {
    case MotionClass::Dynamic:
      return "dynamic";
    case MotionClass::Outlier:
      return "outlier";
    case MotionClass::Static:
      break;
  }
  return "static";
}

TrackVerdict classify_track(std::span<const Eigen::Vector3d> window_history,
                            std::span<const Eigen::Vector3d> cluster_points, const DynamicsParams& params)
{
  TrackVerdict verdict;
  verdict.history = window_history.size();
  verdict.f = net_displacement(window_history);
  verdict.f_a = path_length(window_history);
  verdict.ratio = displacement_ratio(verdict.f, verdict.f_a);
  verdict.window_centroid = window_history.back();

  if (verdict.f > 0.0)
  {
    const auto pca =
      pca_long_object_test(cluster_points, window_history.back() - window_history.front(), params.eps_theta);
    verdict.pca_evaluated = pca.evaluated;
    verdict.theta = pca.theta;
    if (verdict.f > params.eps_d && pca.outlier)
    {
      verdict.cls = MotionClass::Outlier;
      return verdict;
    }
  }
  if (verdict.f > params.eps_d && verdict.ratio >= params.eps_o)
    verdict.cls = MotionClass::Dynamic;
  return verdict;
}

std::vector<char> occluded_clusters(const ClusterSet& clusters, const ForegroundSet& foreground,
                                    const IntensityImage& image, const SensorModel& sensor,
                                    const GroundPlane& ground, int radius_u, int radius_v, double margin)
{
  std::vector<char> flags(clusters.size(), 0);
  if (!(margin > 0.0))
    return flags;
  const int w = image.width();
  const int h = image.height();
  std::vector<int> owner(image.size(), -1);
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (std::size_t m : clusters.clusters[c].members)
      owner[image.index(foreground.points[m].pixel.u, foreground.points[m].pixel.v)] = static_cast<int>(c);
  for (std::size_t c = 0; c < clusters.size(); ++c)
  {
    for (std::size_t m : clusters.clusters[c].members)
    {
      const ForegroundPoint& fp = foreground.points[m];
      const double r = image.range(image.index(fp.pixel.u, fp.pixel.v));
      for (int dv = -radius_v; dv <= radius_v && !flags[c]; ++dv)
      {
        const int v = fp.pixel.v + dv;
        if (v < 0 || v >= h)
          continue;
        for (int du = -radius_u; du <= radius_u; ++du)
        {
          const std::size_t n = image.index((fp.pixel.u + du + w) % w, v);
          if (!image.occupied(n) || owner[n] == static_cast<int>(c) || image.range(n) > r - margin)
            continue;
          const Pixel q = image.pixel(n);
          if (ground.signed_distance(unproject(q.u, q.v, image.range(n), sensor).pos()) <= ground.tolerance)
            continue;
          flags[c] = 1;
          break;
        }
      }
      if (flags[c])
        break;
    }
  }
  return flags;
}

double persisted_fraction(std::span<const Eigen::Vector3d> points, const IntensityImage& image,
                          const SensorModel& sensor, double tolerance)
{
  if (points.empty())
    return 0.0;
  const int w = image.width();
  const int h = image.height();
  std::size_t hits = 0;
  for (const auto& p : points)
  {
    const auto px = pixel_of(p, sensor);
    if (!px)
      continue;
    const double r = p.norm();
    bool hit = false;
    for (int dv = -1; dv <= 1 && !hit; ++dv)
    {
      const int v = px->v + dv;
      if (v < 0 || v >= h)
        continue;
      for (int du = -1; du <= 1 && !hit; ++du)
      {
        const std::size_t n = image.index((px->u + du + w) % w, v);
        hit = image.occupied(n) && std::abs(image.range(n) - r) <= tolerance;
      }
    }
    hits += hit ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(points.size());
}

std::vector<TrackVerdict> analyze_tracks(TrackTable& tracks, const SlidingWindow& window,
                                         const ClusterSet& current, std::span<const Eigen::Vector3d> points,
                                         const DynamicsParams& params, const ImageLookup& images,
                                         const SensorModel* sensor)
{
  std::vector<TrackVerdict> verdicts;
  if (window.size() == 0)
    return verdicts;
  const std::size_t now = window.current_frame();
  const Pose& current_pose = window.current_pose();

  std::vector<Eigen::Vector3d> history;
  std::vector<Eigen::Vector3d> cluster_pts;
  for (Track& track : tracks.tracks())
  {
    history.clear();
    for (TrackEntry& e : track.entries)
    {
      if (!window.contains(e.frame))
        continue;
      e.window_centroid = to_window_origin(e.centroid, window.pose_of(e.frame));
      history.push_back(e.window_centroid);
    }
    if (track.status != TrackStatus::Live || track.entries.empty() || track.entries.back().frame != now)
      continue;
    if (history.size() < 2)
      continue;
    if (std::any_of(track.entries.begin(), track.entries.end(),
                    [&](const TrackEntry& e) { return e.occluded && window.contains(e.frame); }))
      continue;

    const int cluster_id = track.entries.back().cluster_id;
    const Cluster& cluster = current.clusters.at(static_cast<std::size_t>(cluster_id));
    cluster_pts.clear();
    for (std::size_t m : cluster.members)
      cluster_pts.push_back(current_pose.apply(points[m]));

    TrackVerdict v = classify_track(history, cluster_pts, params);
    if (v.cls == MotionClass::Dynamic && images && sensor && params.persistence_ratio <= 1.0)
    {
      const auto origin = std::find_if(track.entries.begin(), track.entries.end(),
                                       [&](const TrackEntry& e) { return window.contains(e.frame); });
      if (const IntensityImage* image = images(origin->frame))
      {
        const Pose to_origin = window.pose_of(origin->frame).inverse();
        for (auto& p : cluster_pts)
          p = to_origin.apply(p);
        if (persisted_fraction(cluster_pts, *image, *sensor, params.persistence_tolerance) >= params.persistence_ratio)
        {
          v.cls = MotionClass::Static;
          v.persisted = true;
        }
      }
    }
    v.track_id = track.id;
    v.cluster_id = cluster_id;
    v.centroid = track.entries.back().centroid;
    verdicts.push_back(v);
  }
  return verdicts;
}

}  // namespace dynoscan
