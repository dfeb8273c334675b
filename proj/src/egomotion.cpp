#include "dynoscan/egomotion.hpp"

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "dynoscan/errors.hpp"

namespace dynoscan {

namespace {

// Relative size of the second principal extent below which a point set is a line.
constexpr double kCollinearTolerance = 1e-6;

bool collinear(std::span<const Eigen::Vector3d> X)
{
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& x : X)
    mean += x;
  mean /= static_cast<double>(X.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& x : X)
    cov += (x - mean) * (x - mean).transpose();
  const Eigen::Vector3d s = Eigen::JacobiSVD<Eigen::Matrix3d>(cov).singularValues();
  return !(s(0) > 0.0) || std::sqrt(s(1) / s(0)) < kCollinearTolerance;
}

std::vector<std::size_t> inliers_of(const Pose& pose, std::span<const Eigen::Vector3d> X,
                                    std::span<const Eigen::Vector3d> Y, double threshold)
{
  std::vector<std::size_t> inliers;
  const double t2 = threshold * threshold;
  for (std::size_t i = 0; i < X.size(); ++i)
    if ((Y[i] - pose.apply(X[i])).squaredNorm() < t2)
      inliers.push_back(i);
  return inliers;
}

}  // namespace

Pose fit_rigid(std::span<const Eigen::Vector3d> X, std::span<const Eigen::Vector3d> Y)
{
  if (X.size() != Y.size())
    throw DomainError("fit_rigid: correspondence sets differ in size");
  if (X.size() < 3 || collinear(X))
    throw DegenerateGeometryError("fit_rigid: correspondences are degenerate");

  Eigen::Vector3d mx = Eigen::Vector3d::Zero();
  Eigen::Vector3d my = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < X.size(); ++i)
  {
    mx += X[i];
    my += Y[i];
  }
  mx /= static_cast<double>(X.size());
  my /= static_cast<double>(Y.size());

  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < X.size(); ++i)
    H += (X[i] - mx) * (Y[i] - my).transpose();

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& U = svd.matrixU();
  const Eigen::Matrix3d& V = svd.matrixV();
  Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
  D(2, 2) = (V * U.transpose()).determinant() < 0.0 ? -1.0 : 1.0;

  Pose pose;
  pose.R = V * D * U.transpose();
  pose.t = my - pose.R * mx;
  return pose;
}

MotionEstimate estimate_motion(std::span<const Eigen::Vector3d> X, std::span<const Eigen::Vector3d> Y,
                               const RansacParams& params)
{
  if (X.size() != Y.size())
    throw DomainError("estimate_motion: correspondence sets differ in size");
  if (X.size() < 4)
    throw InsufficientMatchesError("estimate_motion needs at least 4 correspondences");

  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<std::size_t> pick(0, X.size() - 1);

  std::vector<std::size_t> best;
  std::array<Eigen::Vector3d, 3> xs, ys;
  for (int it = 0; it < params.iterations; ++it)
  {
    std::size_t idx[3];
    idx[0] = pick(rng);
    do
      idx[1] = pick(rng);
    while (idx[1] == idx[0]);
    do
      idx[2] = pick(rng);
    while (idx[2] == idx[0] || idx[2] == idx[1]);
    for (int k = 0; k < 3; ++k)
    {
      xs[static_cast<std::size_t>(k)] = X[idx[k]];
      ys[static_cast<std::size_t>(k)] = Y[idx[k]];
    }
    Pose hypothesis;
    try
    {
      hypothesis = fit_rigid(xs, ys);
    }
    catch (const DegenerateGeometryError&)
    {
      continue;
    }
    auto inliers = inliers_of(hypothesis, X, Y, params.inlier_threshold);
    if (inliers.size() > best.size())
      best = std::move(inliers);
  }

  const double ratio = static_cast<double>(best.size()) / static_cast<double>(X.size());
  if (best.size() < 3 || ratio < params.min_inlier_ratio)
    throw UnreliableMotionError("RANSAC inlier ratio " + std::to_string(ratio) + " below threshold");

  auto refit = [&](const std::vector<std::size_t>& set) {
    std::vector<Eigen::Vector3d> xi, yi;
    xi.reserve(set.size());
    yi.reserve(set.size());
    for (std::size_t i : set)
    {
      xi.push_back(X[i]);
      yi.push_back(Y[i]);
    }
    return fit_rigid(xi, yi);
  };

  MotionEstimate est;
  est.pose = refit(best);
  // One re-selection pass with the refined model.
  auto final_set = inliers_of(est.pose, X, Y, params.inlier_threshold);
  if (final_set.size() >= best.size())
  {
    est.pose = refit(final_set);
    best = std::move(final_set);
  }
  est.inliers = best.size();
  est.inlier_ratio = static_cast<double>(best.size()) / static_cast<double>(X.size());
  return est;
}

MotionEstimate estimate_motion(const MatchSet& matches, const RansacParams& params)
{
  return estimate_motion(matches.prev_points, matches.curr_points, params);
}

}  // namespace dynoscan
