#include "dynoscan/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

#include <Eigen/Eigenvalues>

#include "dynoscan/errors.hpp"

namespace dynoscan {

void normalize(DynamicLabel& label)
{
  std::sort(label.idx.begin(), label.idx.end());
  label.idx.erase(std::unique(label.idx.begin(), label.idx.end()), label.idx.end());
}

namespace {

GroundPlane horizontal_at(double z, double tolerance)
{
  GroundPlane plane;
  plane.normal = Eigen::Vector3d::UnitZ();
  plane.d = -z;
  plane.tolerance = tolerance;
  plane.fallback = true;
  return plane;
}

double percentile_z(std::vector<double> zs, double q)
{
  if (zs.empty())
    return 0.0;
  const auto k = static_cast<std::size_t>(q * static_cast<double>(zs.size() - 1));
  std::nth_element(zs.begin(), zs.begin() + static_cast<std::ptrdiff_t>(k), zs.end());
  return zs[k];
}

}  // namespace

GroundPlane estimate_ground_plane(const PointFrame& frame, const GroundParams& params)
{
  std::vector<double> zs;
  zs.reserve(frame.points.size());
  std::size_t below = 0;
  for (const auto& p : frame.points)
  {
    zs.push_back(p.z);
    below += p.z < 0.f;
  }
  if (below < params.min_low_points)
    return horizontal_at(percentile_z(zs, 0.05), params.grow_tolerance);

  // Lowest share of points by z.
  std::vector<std::size_t> order(frame.points.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = i;
  const auto keep = std::max<std::size_t>(3, static_cast<std::size_t>(params.low_fraction * order.size()));
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep - 1), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return frame.points[a].z < frame.points[b].z ||
                            (frame.points[a].z == frame.points[b].z && a < b);
                   });
  order.resize(keep);
  std::sort(order.begin(), order.end());
  std::vector<Eigen::Vector3d> low;
  low.reserve(order.size());
  for (std::size_t i : order)
    low.push_back(frame.points[i].pos());

  // Hypotheses are scored on a bounded subsample; the winner is rescored on all low points.
  std::mt19937_64 rng(params.seed);
  constexpr std::size_t kScoreSample = 4000;
  std::vector<Eigen::Vector3d> sample;
  if (low.size() <= kScoreSample)
    sample = low;
  else
  {
    std::uniform_int_distribution<std::size_t> pick(0, low.size() - 1);
    sample.reserve(kScoreSample);
    for (std::size_t i = 0; i < kScoreSample; ++i)
      sample.push_back(low[pick(rng)]);
  }

  std::uniform_int_distribution<std::size_t> pick(0, low.size() - 1);
  const double min_nz = std::cos(params.max_tilt);
  Eigen::Vector3d best_n = Eigen::Vector3d::UnitZ();
  double best_d = 0.0;
  std::size_t best_count = 0;
  for (int it = 0; it < params.iterations; ++it)
  {
    const Eigen::Vector3d& a = low[pick(rng)];
    const Eigen::Vector3d& b = low[pick(rng)];
    const Eigen::Vector3d& c = low[pick(rng)];
    Eigen::Vector3d n = (b - a).cross(c - a);
    const double len = n.norm();
    if (!(len > 1e-9))
      continue;
    n /= len;
    if (n.z() < 0)
      n = -n;
    if (n.z() < min_nz)
      continue;
    const double d = -n.dot(a);
    std::size_t count = 0;
    for (const auto& p : sample)
      count += std::abs(n.dot(p) + d) < params.fit_tolerance;
    if (count > best_count)
    {
      best_count = count;
      best_n = n;
      best_d = d;
    }
  }
  if (best_count == 0)
    return horizontal_at(percentile_z(zs, 0.05), params.grow_tolerance);

  std::vector<Eigen::Vector3d> inliers;
  for (const auto& p : low)
    if (std::abs(best_n.dot(p) + best_d) < params.fit_tolerance)
      inliers.push_back(p);
  const double ratio = static_cast<double>(inliers.size()) / static_cast<double>(low.size());
  if (ratio < params.min_inlier_ratio || inliers.size() < 3)
    return horizontal_at(percentile_z(zs, 0.05), params.grow_tolerance);

  // Least-squares refit: normal is the smallest principal axis of the inliers.
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : inliers)
    mean += p;
  mean /= static_cast<double>(inliers.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : inliers)
    cov += (p - mean) * (p - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  Eigen::Vector3d n = solver.eigenvectors().col(0).normalized();
  if (n.z() < 0)
    n = -n;

  GroundPlane plane;
  plane.normal = n;
  plane.d = -n.dot(mean);
  plane.tolerance = params.grow_tolerance;
  return plane;
}

SeedResult seeds_to_current(std::span<const Eigen::Vector3d> window_centroids, const Pose& current_window_pose,
                            const IntensityImage& image, const SensorModel& sensor, int snap_radius)
{
  SeedResult result;
  const Pose to_current = current_window_pose.inverse();
  for (const auto& cw : window_centroids)
  {
    const auto px = pixel_of(to_current.apply(cw), sensor);
    if (!px)
    {
      ++result.dropped;
      continue;
    }
    if (image.occupied(px->u, px->v))
    {
      result.seeds.push_back(*px);
      continue;
    }
    int best_d2 = snap_radius * snap_radius + 1;
    Pixel best{};
    for (int dv = -snap_radius; dv <= snap_radius; ++dv)
    {
      const int v = px->v + dv;
      if (v < 0 || v >= image.height())
        continue;
      for (int du = -snap_radius; du <= snap_radius; ++du)
      {
        const int d2 = du * du + dv * dv;
        if (d2 >= best_d2)
          continue;
        const int u = ((px->u + du) % image.width() + image.width()) % image.width();
        if (image.occupied(u, v))
        {
          best_d2 = d2;
          best = {u, v};
        }
      }
    }
    if (best_d2 <= snap_radius * snap_radius)
      result.seeds.push_back(best);
    else
      ++result.dropped;
  }
  return result;
}

GrowResult region_grow(const IntensityImage& image, const PointFrame& frame, std::span<const Pixel> seeds,
                       const GroundPlane& plane, const GrowParams& params, double timestamp)
{
  if (!(params.eps > 0.0))
    throw ConfigError("region growing eps must be positive");

  const int w = image.width();
  const int h = image.height();
  GrowResult result;
  result.label.t = timestamp;

  auto point_at = [&](std::size_t idx) { return frame.points[image.source_index(idx)].pos(); };
  auto above_ground = [&](const Eigen::Vector3d& p) { return plane.signed_distance(p) > plane.tolerance; };

  std::vector<char> visited(image.size(), 0);
  std::deque<std::size_t> queue;
  const double eps2 = params.eps * params.eps;

  for (const Pixel& seed : seeds)
  {
    if (seed.u < 0 || seed.u >= w || seed.v < 0 || seed.v >= h)
    {
      ++result.rejected_seeds;
      continue;
    }
    const std::size_t s = image.index(seed.u, seed.v);
    if (visited[s])
      continue;
    if (!image.occupied(s) || !above_ground(point_at(s)))
    {
      ++result.rejected_seeds;
      continue;
    }
    visited[s] = 1;
    result.label.idx.push_back(static_cast<std::uint32_t>(s));
    std::size_t grown = 1;
    queue.assign(1, s);
    while (!queue.empty())
    {
      if (grown >= params.max_points)
      {
        result.truncated = true;
        break;
      }
      const std::size_t cur = queue.front();
      queue.pop_front();
      const Eigen::Vector3d pc = point_at(cur);
      const int cu = static_cast<int>(cur % static_cast<std::size_t>(w));
      const int cv = static_cast<int>(cur / static_cast<std::size_t>(w));
      for (int dv = -1; dv <= 1 && grown < params.max_points; ++dv)
      {
        const int v = cv + dv;
        if (v < 0 || v >= h)
          continue;
        for (int du = -1; du <= 1; ++du)
        {
          if (du == 0 && dv == 0)
            continue;
          const int u = (cu + du + w) % w;
          const std::size_t n = image.index(u, v);
          if (visited[n] || !image.occupied(n))
            continue;
          const Eigen::Vector3d pn = point_at(n);
          if ((pn - pc).squaredNorm() > eps2 || !above_ground(pn))
            continue;
          visited[n] = 1;
          result.label.idx.push_back(static_cast<std::uint32_t>(n));
          queue.push_back(n);
          if (++grown >= params.max_points)
          {
            result.truncated = true;
            break;
          }
        }
      }
    }
  }
  normalize(result.label);
  return result;
}

}  // namespace dynoscan
