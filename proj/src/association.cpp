#include "dynoscan/association.hpp"

#include <algorithm>
#include <limits>

#include "dynoscan/errors.hpp"

namespace dynoscan {

CostMatrix::CostMatrix(std::size_t current, std::size_t previous, double d_max)
  : m_(current), n_(previous), d_max_(d_max),
    infeasible_(10.0 * d_max * static_cast<double>(std::max<std::size_t>(current + previous, 1))),
    data_((current + previous) * (current + previous), 0.0)
{
  if (!(d_max > 0.0))
    throw ConfigError("d_max must be positive");
  const std::size_t dim = dimension();
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t c = 0; c < dim; ++c)
    {
      const bool real_row = r < m_;
      const bool real_col = c < n_;
      if (real_row && real_col)
        (*this)(r, c) = infeasible_;
      else if (real_row || real_col)
        (*this)(r, c) = 2.0 * d_max;
      // dummy-dummy stays 0
    }
}

CostMatrix build_cost_matrix(const ClusterSet& previous, const ClusterSet& current, const Pose& motion,
                             double d_max)
{
  CostMatrix costs(current.size(), previous.size(), d_max);
  for (std::size_t n = 0; n < previous.size(); ++n)
  {
    const Eigen::Vector3d predicted = motion.apply(previous.clusters[n].centroid);
    for (std::size_t m = 0; m < current.size(); ++m)
    {
      const double d = (current.clusters[m].centroid - predicted).norm();
      if (d <= d_max)
        costs(m, n) = d;
    }
  }
  return costs;
}

std::vector<int> hungarian(std::span<const double> costs, std::size_t n)
{
  if (costs.size() != n * n)
    throw DomainError("hungarian: matrix is not square");
  if (n == 0)
    return {};

  // Shortest augmenting path with row/column potentials; 1-based with a
  // virtual column 0. Rows are inserted in index order.
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);

  for (std::size_t i = 1; i <= n; ++i)
  {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do
    {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j)
      {
        if (used[j])
          continue;
        const double cur = costs[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j])
        {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta)
        {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j)
      {
        if (used[j])
        {
          u[p[j]] += delta;
          v[j] -= delta;
        }
        else
          minv[j] -= delta;
      }
      j0 = j1;
    } while (p[j0] != 0);
    do
    {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n, -1);
  for (std::size_t j = 1; j <= n; ++j)
    row_to_col[p[j] - 1] = static_cast<int>(j - 1);
  return row_to_col;
}

Assignment solve_assignment(const CostMatrix& costs)
{
  Assignment a;
  a.row_to_col = hungarian(costs.data(), costs.dimension());
  for (std::size_t r = 0; r < a.row_to_col.size(); ++r)
  {
    const auto c = static_cast<std::size_t>(a.row_to_col[r]);
    a.total_cost += costs(r, c);
    if (costs.is_real_pair(r, c) && costs(r, c) <= costs.d_max())
      a.matches.push_back({static_cast<int>(r), static_cast<int>(c), costs(r, c)});
  }
  return a;
}

void TrackTable::update(const Assignment& assignment, const ClusterSet& current, std::size_t frame_index,
                        std::span<const char> occluded)
{
  auto is_occluded = [&](std::size_t m) { return m < occluded.size() && occluded[m] != 0; };
  std::vector<int> next_map(current.size(), -1);
  std::vector<char> extended(tracks_.size(), 0);

  for (const auto& match : assignment.matches)
  {
    if (match.previous < 0 || static_cast<std::size_t>(match.previous) >= cluster_to_track_.size())
      continue;
    const int track_id = cluster_to_track_[static_cast<std::size_t>(match.previous)];
    if (track_id < 0)
      continue;
    auto it = std::find_if(tracks_.begin(), tracks_.end(), [&](const Track& t) { return t.id == track_id; });
    if (it == tracks_.end() || it->status != TrackStatus::Live)
      continue;
    const auto& cluster = current.clusters[static_cast<std::size_t>(match.current)];
    it->entries.push_back(
      {frame_index, cluster.id, cluster.centroid, cluster.centroid, is_occluded(static_cast<std::size_t>(match.current))});
    it->last_frame = frame_index;
    extended[static_cast<std::size_t>(it - tracks_.begin())] = 1;
    next_map[static_cast<std::size_t>(match.current)] = track_id;
  }

  for (std::size_t t = 0; t < extended.size(); ++t)
    if (!extended[t])
      tracks_[t].status = TrackStatus::Lost;

  for (std::size_t m = 0; m < current.size(); ++m)
  {
    if (next_map[m] >= 0)
      continue;
    Track track;
    track.id = next_id_++;
    track.birth_frame = frame_index;
    track.last_frame = frame_index;
    const auto& cluster = current.clusters[m];
    track.entries.push_back({frame_index, cluster.id, cluster.centroid, cluster.centroid, is_occluded(m)});
    tracks_.push_back(std::move(track));
    next_map[m] = tracks_.back().id;
  }
  cluster_to_track_ = std::move(next_map);

  // Retain O(window) state only.
  std::erase_if(tracks_, [&](const Track& t) {
    return t.status == TrackStatus::Lost && frame_index - t.last_frame >= retention_;
  });
  for (Track& t : tracks_)
    std::erase_if(t.entries, [&](const TrackEntry& e) { return frame_index - e.frame >= retention_; });
}

const Track* TrackTable::find(int id) const
{
  auto it = std::find_if(tracks_.begin(), tracks_.end(), [&](const Track& t) { return t.id == id; });
  return it == tracks_.end() ? nullptr : &*it;
}

int TrackTable::track_of_cluster(int cluster_id) const
{
  if (cluster_id < 0 || static_cast<std::size_t>(cluster_id) >= cluster_to_track_.size())
    return -1;
  return cluster_to_track_[static_cast<std::size_t>(cluster_id)];
}

std::size_t TrackTable::live_count() const
{
  return static_cast<std::size_t>(
    std::count_if(tracks_.begin(), tracks_.end(), [](const Track& t) { return t.status == TrackStatus::Live; }));
}

}  // namespace dynoscan
