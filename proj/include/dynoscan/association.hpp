#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dynoscan/clustering.hpp"
#include "dynoscan/pose.hpp"

namespace dynoscan {

/// Square (M + N) x (M + N) association costs. Rows 0..M-1 are current-frame
/// clusters, columns 0..N-1 previous-frame clusters; the remaining rows and
/// columns are dummy targets absorbing births and deaths.
class CostMatrix
{
public:
  CostMatrix(std::size_t current, std::size_t previous, double d_max);

  std::size_t current_count() const { return m_; }
  std::size_t previous_count() const { return n_; }
  std::size_t dimension() const { return m_ + n_; }
  double d_max() const { return d_max_; }
  /// Finite stand-in for an infinite real-real cost.
  double infeasible() const { return infeasible_; }

  double operator()(std::size_t row, std::size_t col) const { return data_[row * dimension() + col]; }
  double& operator()(std::size_t row, std::size_t col) { return data_[row * dimension() + col]; }
  bool is_real_pair(std::size_t row, std::size_t col) const { return row < m_ && col < n_; }

  std::span<const double> data() const { return data_; }

private:
  std::size_t m_;
  std::size_t n_;
  double d_max_;
  double infeasible_;
  std::vector<double> data_;
};

/// d = |c_curr - (R c_prev + t)| gated at d_max, augmented with dummies at 2 d_max.
CostMatrix build_cost_matrix(const ClusterSet& previous, const ClusterSet& current, const Pose& motion,
                             double d_max);

/// Optimal permutation of a square cost matrix (row -> column), O(n^3).
std::vector<int> hungarian(std::span<const double> costs, std::size_t n);

struct Assignment
{
  std::vector<int> row_to_col;  // full permutation over the augmented matrix
  double total_cost = 0.0;
  struct Match
  {
    int current = 0;   // cluster id in the current frame
    int previous = 0;  // cluster id in the previous frame
    double cost = 0.0;
  };
  std::vector<Match> matches;  // real-real pairs within the gate
};

Assignment solve_assignment(const CostMatrix& costs);

enum class TrackStatus
{
  Live,
  Lost
};

struct TrackEntry
{
  std::size_t frame = 0;
  int cluster_id = 0;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();         // sensor frame
  Eigen::Vector3d window_centroid = Eigen::Vector3d::Zero();  // window-origin frame, refreshed per frame
  bool occluded = false;  // partly hidden behind a nearer surface when observed
};

struct Track
{
  int id = 0;
  std::size_t birth_frame = 0;
  std::size_t last_frame = 0;
  TrackStatus status = TrackStatus::Live;
  std::vector<TrackEntry> entries;  // strictly increasing frame indices
};

/// Persistent identities across frames. Single writer.
class TrackTable
{
public:
  explicit TrackTable(std::size_t retention_frames = 10) : retention_(retention_frames) {}

  /// Extends matched tracks, starts tracks for unmatched current clusters and
  /// marks tracks without a match as lost. Lost tracks and entries older than
  /// the retention span are pruned. `occluded`, when given, holds one flag per current cluster.
  void update(const Assignment& assignment, const ClusterSet& current, std::size_t frame_index,
              std::span<const char> occluded = {});

  const std::vector<Track>& tracks() const { return tracks_; }
  std::vector<Track>& tracks() { return tracks_; }
  const Track* find(int id) const;
  /// Track id owning a current-frame cluster, or -1.
  int track_of_cluster(int cluster_id) const;
  std::size_t live_count() const;

private:
  std::size_t retention_;
  int next_id_ = 0;
  std::vector<Track> tracks_;
  std::vector<int> cluster_to_track_;  // indexed by current cluster id
};

}  // namespace dynoscan
