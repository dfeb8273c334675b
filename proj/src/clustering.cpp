#include "dynoscan/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "dynoscan/errors.hpp"

namespace dynoscan {

namespace {

class DisjointSets
{
public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x)
  {
    while (parent_[x] != x)
    {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // The smaller index becomes the root so roots are stable under input order.
  void unite(std::size_t a, std::size_t b)
  {
    a = find(a);
    b = find(b);
    if (a == b)
      return;
    if (b < a)
      std::swap(a, b);
    parent_[b] = a;
  }

private:
  std::vector<std::size_t> parent_;
};

std::int64_t cell_key(std::int64_t cx, std::int64_t cy) { return (cx << 32) ^ (cy & 0xFFFFFFFF); }

}  // namespace

ClusterSet cluster_points(std::span<const Eigen::Vector3d> points, const ClusterParams& params)
{
  if (!(params.eps_xy > 0.0) || !(params.eps_z > 0.0))
    throw ConfigError("clustering thresholds must be positive");

  ClusterSet out;
  if (points.empty())
    return out;

  double scale_max = 1.0;
  std::vector<double> scale(points.size(), 1.0);
  if (params.range_scaled)
  {
    for (std::size_t i = 0; i < points.size(); ++i)
    {
      scale[i] = 1.0 + points[i].norm() / params.range_scale;
      scale_max = std::max(scale_max, scale[i]);
    }
  }
  const double cell = params.eps_xy * scale_max;

  std::unordered_map<std::int64_t, std::vector<std::size_t>> grid;
  grid.reserve(points.size());
  std::vector<std::pair<std::int64_t, std::int64_t>> cells(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
  {
    const auto cx = static_cast<std::int64_t>(std::floor(points[i].x() / cell));
    const auto cy = static_cast<std::int64_t>(std::floor(points[i].y() / cell));
    cells[i] = {cx, cy};
    grid[cell_key(cx, cy)].push_back(i);
  }

  DisjointSets sets(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
  {
    const auto [cx, cy] = cells[i];
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy)
      {
        const auto it = grid.find(cell_key(cx + dx, cy + dy));
        if (it == grid.end())
          continue;
        for (std::size_t j : it->second)
        {
          if (j <= i)
            continue;
          const double s = std::max(scale[i], scale[j]);
          const double ex = params.eps_xy * s;
          const double ez = params.eps_z * s;
          const Eigen::Vector3d d = points[i] - points[j];
          if (std::abs(d.z()) <= ez && d.x() * d.x() + d.y() * d.y() <= ex * ex)
            sets.unite(i, j);
        }
      }
  }

  // Roots are the smallest member, so scanning in index order yields clusters
  // ordered by first member.
  std::unordered_map<std::size_t, std::size_t> slot;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < points.size(); ++i)
  {
    const std::size_t root = sets.find(i);
    auto [it, inserted] = slot.try_emplace(root, groups.size());
    if (inserted)
      groups.emplace_back();
    groups[it->second].push_back(i);
  }

  for (auto& members : groups)
  {
    if (members.size() < params.min_points)
      continue;
    Cluster c;
    c.id = static_cast<int>(out.clusters.size());
    c.members = std::move(members);
    c.centroid = centroid(c, points);
    out.clusters.push_back(std::move(c));
  }
  return out;
}

std::vector<Eigen::Vector3d> foreground_positions(const ForegroundSet& foreground)
{
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(foreground.points.size());
  for (const auto& p : foreground.points)
    pts.push_back(p.point.pos());
  return pts;
}

ClusterSet cluster_points(const ForegroundSet& foreground, const ClusterParams& params)
{
  const auto pts = foreground_positions(foreground);
  return cluster_points(pts, params);
}

Eigen::Vector3d centroid(const Cluster& cluster, std::span<const Eigen::Vector3d> points)
{
  if (cluster.members.empty())
    throw DomainError("centroid of an empty cluster");
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (std::size_t m : cluster.members)
    sum += points[m];
  return sum / static_cast<double>(cluster.members.size());
}

}  // namespace dynoscan
