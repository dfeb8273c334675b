#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "dynoscan/foreground.hpp"

namespace dynoscan {

struct Cluster
{
  int id = 0;
  std::vector<std::size_t> members;  // indices into the clustered point list
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
};

struct ClusterSet
{
  double timestamp = 0.0;
  std::vector<Cluster> clusters;

  std::size_t size() const { return clusters.size(); }
};

struct ClusterParams
{
  double eps_xy = 0.5;  // meters
  double eps_z = 0.5;   // meters
  std::size_t min_points = 3;
  // Grow both thresholds as eps * (1 + r / range_scale) with the pair's larger range.
  bool range_scaled = false;
  double range_scale = 30.0;
};

/// Transitive closure of (d_xy <= eps_xy and d_z <= eps_z). Clusters smaller than
/// min_points are dropped; ids are dense and ordered by each cluster's first member.
ClusterSet cluster_points(std::span<const Eigen::Vector3d> points, const ClusterParams& params);
ClusterSet cluster_points(const ForegroundSet& foreground, const ClusterParams& params);

/// Componentwise mean of the member points. Throws DomainError for an empty cluster.
Eigen::Vector3d centroid(const Cluster& cluster, std::span<const Eigen::Vector3d> points);

std::vector<Eigen::Vector3d> foreground_positions(const ForegroundSet& foreground);

}  // namespace dynoscan
