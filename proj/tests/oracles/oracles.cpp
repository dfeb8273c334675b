#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace oracle {

std::vector<double> convolve(const dynoscan::IntensityImage& image, const dynoscan::Kernel& kernel)
{
  const int w = image.width();
  const int h = image.height();
  std::vector<double> out(image.size(), 0.0);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
    {
      double acc = 0.0;
      for (int n = -kernel.b; n <= kernel.b; ++n)
        for (int m = -kernel.a; m <= kernel.a; ++m)
        {
          int su = (u - m) % w;
          if (su < 0)
            su += w;
          const int sv = std::min(std::max(v - n, 0), h - 1);
          const std::size_t idx = static_cast<std::size_t>(sv) * w + su;
          if (image.occupied(idx))
            acc += kernel.at(m, n) * image.intensity(idx);
        }
      out[static_cast<std::size_t>(v) * w + u] = acc;
    }
  return out;
}

double min_permutation_cost(std::span<const double> costs, std::size_t n)
{
  if (n > 9)
    throw std::invalid_argument("permutation oracle limited to n <= 9");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do
  {
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r)
      total += costs[r * n + perm[r]];
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return n == 0 ? 0.0 : best;
}

namespace {

void partial_matchings(const std::vector<std::vector<double>>& d, double d_max, std::size_t row,
                       std::vector<char>& used, double sum, std::size_t matched, double& best)
{
  const std::size_t m = d.size();
  const std::size_t n = used.size();
  if (row == m)
  {
    best = std::min(best, sum + 2.0 * d_max * static_cast<double>(m + n - 2 * matched));
    return;
  }
  partial_matchings(d, d_max, row + 1, used, sum, matched, best);
  for (std::size_t c = 0; c < n; ++c)
  {
    if (used[c] || d[row][c] > d_max)
      continue;
    used[c] = 1;
    partial_matchings(d, d_max, row + 1, used, sum + d[row][c], matched + 1, best);
    used[c] = 0;
  }
}

}  // namespace

double min_partial_matching_cost(const std::vector<std::vector<double>>& d, std::size_t n, double d_max)
{
  std::vector<char> used(n, 0);
  double best = std::numeric_limits<double>::infinity();
  partial_matchings(d, d_max, 0, used, 0.0, 0, best);
  return best;
}

std::vector<std::vector<std::size_t>> cluster_closure(std::span<const Eigen::Vector3d> points, double eps_xy,
                                                      double eps_z, std::size_t min_points)
{
  const std::size_t n = points.size();
  std::vector<std::size_t> label(n);
  std::iota(label.begin(), label.end(), 0);
  bool changed = true;
  while (changed)
  {
    changed = false;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
      {
        const Eigen::Vector3d d = points[i] - points[j];
        if (std::hypot(d.x(), d.y()) <= eps_xy && std::abs(d.z()) <= eps_z && label[j] < label[i])
        {
          label[i] = label[j];
          changed = true;
        }
      }
  }
  std::vector<std::vector<std::size_t>> groups;
  std::vector<long> slot(n, -1);
  for (std::size_t i = 0; i < n; ++i)
  {
    if (slot[label[i]] < 0)
    {
      slot[label[i]] = static_cast<long>(groups.size());
      groups.emplace_back();
    }
    groups[static_cast<std::size_t>(slot[label[i]])].push_back(i);
  }
  std::erase_if(groups, [&](const auto& g) { return g.size() < min_points; });
  return groups;
}

std::vector<std::uint32_t> grow_fixpoint(const dynoscan::IntensityImage& image, const dynoscan::PointFrame& frame,
                                         std::span<const dynoscan::Pixel> seeds, const dynoscan::GroundPlane& plane,
                                         double eps)
{
  const int w = image.width();
  const int h = image.height();
  auto point = [&](std::size_t i) { return frame.points[image.source_index(i)].pos(); };
  auto eligible = [&](std::size_t i) {
    return image.occupied(i) && plane.signed_distance(point(i)) > plane.tolerance;
  };
  auto adjacent = [&](std::size_t a, std::size_t b) {
    const int ua = static_cast<int>(a % w), va = static_cast<int>(a / w);
    const int ub = static_cast<int>(b % w), vb = static_cast<int>(b / w);
    const int du = std::min((ua - ub + w) % w, (ub - ua + w) % w);
    return a != b && std::abs(va - vb) <= 1 && du <= 1;
  };

  std::vector<char> in(image.size(), 0);
  for (const auto& s : seeds)
  {
    if (s.u < 0 || s.u >= w || s.v < 0 || s.v >= h)
      continue;
    const std::size_t i = static_cast<std::size_t>(s.v) * w + s.u;
    if (eligible(i))
      in[i] = 1;
  }
  bool changed = true;
  while (changed)
  {
    changed = false;
    for (std::size_t a = 0; a < image.size(); ++a)
    {
      if (in[a] || !eligible(a))
        continue;
      for (std::size_t b = 0; b < image.size(); ++b)
        if (in[b] && adjacent(a, b) && (point(a) - point(b)).norm() <= eps)
        {
          in[a] = 1;
          changed = true;
          break;
        }
    }
  }
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < in.size(); ++i)
    if (in[i])
      out.push_back(static_cast<std::uint32_t>(i));
  return out;
}

SignedRankOracle signed_rank_enumeration(std::span<const double> a, std::span<const double> b)
{
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i])
      d.push_back(a[i] - b[i]);
  const std::size_t n = d.size();
  if (n > 24)
    throw std::invalid_argument("enumeration limited to 24 differences");

  // Mid-ranks straight from the definition: 1 + #smaller + (#equal - 1) / 2.
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i)
  {
    std::size_t smaller = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j)
    {
      if (std::abs(d[j]) < std::abs(d[i]))
        ++smaller;
      else if (std::abs(d[j]) == std::abs(d[i]))
        ++equal;
    }
    rank[i] = 1.0 + static_cast<double>(smaller) + (static_cast<double>(equal) - 1.0) / 2.0;
  }
  SignedRankOracle out;
  for (std::size_t i = 0; i < n; ++i)
    if (d[i] > 0)
      out.w_plus += rank[i];

  std::uint64_t lower = 0, upper = 0;
  const std::uint64_t patterns = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < patterns; ++mask)
  {
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1)
        w += rank[i];
    // Ranks are multiples of 1/2, so these comparisons are exact.
    if (w <= out.w_plus)
      ++lower;
    if (w >= out.w_plus)
      ++upper;
  }
  out.p_value = std::min(1.0, 2.0 * static_cast<double>(std::min(lower, upper)) / static_cast<double>(patterns));
  return out;
}

Eigen::Matrix4d homogeneous(const Eigen::Matrix3d& R, const Eigen::Vector3d& t)
{
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  for (int r = 0; r < 3; ++r)
  {
    for (int c = 0; c < 3; ++c)
      m(r, c) = R(r, c);
    m(r, 3) = t(r);
  }
  m(3, 3) = 1.0;
  return m;
}

}  // namespace oracle
