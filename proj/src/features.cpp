#include "dynoscan/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>

#include "dynoscan/errors.hpp"

namespace dynoscan {

namespace {

// Bresenham circle of radius 3, clockwise from the top.
constexpr int kCircle[16][2] = {{0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0},  {3, 1},  {2, 2},  {1, 3},
                                {0, 3},  {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}};

struct Candidate
{
  int u;
  int v;
  float fast_score;
  float harris;
};

class Gray
{
public:
  Gray(const std::vector<std::uint8_t>& data, int w, int h) : data_(data), w_(w), h_(h) {}
  int operator()(int u, int v) const { return data_[static_cast<std::size_t>(v) * w_ + wrap(u)]; }
  int wrap(int u) const { return u < 0 ? u + w_ : (u >= w_ ? u - w_ : u); }

private:
  const std::vector<std::uint8_t>& data_;
  int w_;
  int h_;
};

// Sum-of-absolute-differences FAST score, 0 when not a 9-arc corner.
float fast_score(const Gray& img, int u, int v, int threshold)
{
  const int p = img(u, v);
  const int hi = p + threshold;
  const int lo = p - threshold;

  int bright_compass = 0;
  int dark_compass = 0;
  for (int k = 0; k < 16; k += 4)
  {
    const int q = img(u + kCircle[k][0], v + kCircle[k][1]);
    bright_compass += q > hi;
    dark_compass += q < lo;
  }
  if (bright_compass < 2 && dark_compass < 2)
    return 0.f;

  int ring[16];
  for (int k = 0; k < 16; ++k)
    ring[k] = img(u + kCircle[k][0], v + kCircle[k][1]);

  auto longest_arc = [&](auto pred) {
    int best = 0;
    int run = 0;
    for (int k = 0; k < 32; ++k)
    {
      run = pred(ring[k & 15]) ? run + 1 : 0;
      best = std::max(best, std::min(run, 16));
    }
    return best;
  };
  const bool bright = longest_arc([&](int q) { return q > hi; }) >= 9;
  const bool dark = longest_arc([&](int q) { return q < lo; }) >= 9;
  if (!bright && !dark)
    return 0.f;

  int sad_bright = 0;
  int sad_dark = 0;
  for (int q : ring)
  {
    if (q > hi)
      sad_bright += q - hi;
    else if (q < lo)
      sad_dark += lo - q;
  }
  return static_cast<float>(std::max(sad_bright, sad_dark));
}

float harris_response(const Gray& img, int u, int v, int height)
{
  constexpr double k = 0.04;
  double a = 0.0, b = 0.0, c = 0.0;
  for (int dy = -3; dy <= 3; ++dy)
  {
    const int y = v + dy;
    if (y < 1 || y >= height - 1)
      continue;
    for (int dx = -3; dx <= 3; ++dx)
    {
      const int x = u + dx;
      const double ix = (img(x + 1, y - 1) + 2 * img(x + 1, y) + img(x + 1, y + 1)) -
                        (img(x - 1, y - 1) + 2 * img(x - 1, y) + img(x - 1, y + 1));
      const double iy = (img(x - 1, y + 1) + 2 * img(x, y + 1) + img(x + 1, y + 1)) -
                        (img(x - 1, y - 1) + 2 * img(x, y - 1) + img(x + 1, y - 1));
      a += ix * ix;
      b += iy * iy;
      c += ix * iy;
    }
  }
  return static_cast<float>(a * b - c * c - k * (a + b) * (a + b));
}

struct PatternPair
{
  float x1, y1, x2, y2;
};

// Fixed Gaussian test pattern inside a disk, shared by every call.
const std::vector<PatternPair>& pattern(int radius)
{
  static thread_local int cached_radius = -1;
  static thread_local std::vector<PatternPair> pairs;
  if (cached_radius == radius)
    return pairs;
  std::mt19937 rng(0x0B5EED);
  std::normal_distribution<double> gauss(0.0, radius / 2.5);
  const double limit = radius - 1.0;
  auto sample = [&](float& x, float& y) {
    do
    {
      x = static_cast<float>(std::round(gauss(rng)));
      y = static_cast<float>(std::round(gauss(rng)));
    } while (x * x + y * y > limit * limit);
  };
  pairs.clear();
  while (pairs.size() < 256)
  {
    PatternPair p{};
    sample(p.x1, p.y1);
    sample(p.x2, p.y2);
    if (p.x1 == p.x2 && p.y1 == p.y2)
      continue;
    pairs.push_back(p);
  }
  cached_radius = radius;
  return pairs;
}

std::vector<std::uint8_t> box_smooth(const std::vector<std::uint8_t>& gray, int w, int h)
{
  // 5x5 box, columns wrap, rows clamp.
  std::vector<int> tmp(gray.size());
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
    {
      int s = 0;
      for (int d = -2; d <= 2; ++d)
        s += gray[static_cast<std::size_t>(v) * w + ((u + d + w) % w)];
      tmp[static_cast<std::size_t>(v) * w + u] = s;
    }
  std::vector<std::uint8_t> out(gray.size());
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
    {
      int s = 0;
      for (int d = -2; d <= 2; ++d)
        s += tmp[static_cast<std::size_t>(std::clamp(v + d, 0, h - 1)) * w + u];
      out[static_cast<std::size_t>(v) * w + u] = static_cast<std::uint8_t>((s + 12) / 25);
    }
  return out;
}

}  // namespace

int hamming(const Descriptor& a, const Descriptor& b)
{
  return std::popcount(a[0] ^ b[0]) + std::popcount(a[1] ^ b[1]) + std::popcount(a[2] ^ b[2]) +
         std::popcount(a[3] ^ b[3]);
}

std::vector<std::uint8_t> feature_image(const IntensityImage& image)
{
  std::vector<double> logi(image.size(), 0.0);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < image.size(); ++i)
  {
    if (!image.occupied(i))
      continue;
    logi[i] = std::log1p(std::max(image.intensity(i), 0.0));
    lo = std::min(lo, logi[i]);
    hi = std::max(hi, logi[i]);
  }
  std::vector<std::uint8_t> out(image.size(), 0);
  if (!(hi > lo))
    return out;
  const double scale = 255.0 / (hi - lo);
  for (std::size_t i = 0; i < image.size(); ++i)
    if (image.occupied(i))
      out[i] = static_cast<std::uint8_t>(std::lround((logi[i] - lo) * scale));
  return out;
}

std::vector<Feature> detect_features(const std::vector<std::uint8_t>& gray_data, int width, int height,
                                     const FeatureParams& params)
{
  const Gray img(gray_data, width, height);
  const int margin = std::max(3, params.patch_radius);
  if (height <= 2 * margin)
    return {};

  // FAST scores on the valid band, then 3x3 non-maximum suppression.
  std::vector<float> score(gray_data.size(), 0.f);
  for (int v = margin; v < height - margin; ++v)
    for (int u = 0; u < width; ++u)
      score[static_cast<std::size_t>(v) * width + u] = fast_score(img, u, v, params.fast_threshold);

  std::vector<Candidate> candidates;
  for (int v = margin; v < height - margin; ++v)
    for (int u = 0; u < width; ++u)
    {
      const float s = score[static_cast<std::size_t>(v) * width + u];
      if (s <= 0.f)
        continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
        {
          if (dx == 0 && dy == 0)
            continue;
          const float o = score[static_cast<std::size_t>(v + dy) * width + img.wrap(u + dx)];
          // Ties go to the earlier pixel in scan order.
          if (o > s || (o == s && (dy < 0 || (dy == 0 && dx < 0))))
          {
            is_max = false;
            break;
          }
        }
      if (is_max)
        candidates.push_back({u, v, s, harris_response(img, u, v, height)});
    }

  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.harris != b.harris)
      return a.harris > b.harris;
    return a.fast_score > b.fast_score;
  });

  const int tiles_u = (width + params.tile_size - 1) / params.tile_size;
  const int tiles_v = (height + params.tile_size - 1) / params.tile_size;
  std::vector<int> tile_count(static_cast<std::size_t>(tiles_u) * tiles_v, 0);

  const std::vector<std::uint8_t> smooth = box_smooth(gray_data, width, height);
  const Gray smoothed(smooth, width, height);
  const auto& pairs = pattern(params.patch_radius);
  const int r = params.patch_radius;

  std::vector<Feature> features;
  for (const Candidate& c : candidates)
  {
    if (static_cast<int>(features.size()) >= params.max_count)
      break;
    int& count = tile_count[static_cast<std::size_t>(c.v / params.tile_size) * tiles_u + c.u / params.tile_size];
    if (count >= params.per_tile)
      continue;
    ++count;

    Feature f;
    f.u = c.u;
    f.v = c.v;
    f.score = c.harris;

    // Intensity centroid over the disk.
    long m10 = 0;
    long m01 = 0;
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx)
      {
        if (dx * dx + dy * dy > r * r)
          continue;
        const int val = img(c.u + dx, c.v + dy);
        m10 += dx * val;
        m01 += dy * val;
      }
    f.angle = static_cast<float>(std::atan2(static_cast<double>(m01), static_cast<double>(m10)));

    const double ca = std::cos(f.angle);
    const double sa = std::sin(f.angle);
    for (int bit = 0; bit < 256; ++bit)
    {
      const PatternPair& p = pairs[static_cast<std::size_t>(bit)];
      const int x1 = static_cast<int>(std::lround(ca * p.x1 - sa * p.y1));
      const int y1 = static_cast<int>(std::lround(sa * p.x1 + ca * p.y1));
      const int x2 = static_cast<int>(std::lround(ca * p.x2 - sa * p.y2));
      const int y2 = static_cast<int>(std::lround(sa * p.x2 + ca * p.y2));
      if (smoothed(c.u + x1, c.v + y1) < smoothed(c.u + x2, c.v + y2))
        f.descriptor[static_cast<std::size_t>(bit / 64)] |= std::uint64_t{1} << (bit % 64);
    }
    features.push_back(f);
  }
  return features;
}

std::vector<Feature> detect_features(const IntensityImage& image, const FeatureParams& params)
{
  if (image.occupied_count() == 0)
    throw InsufficientFeaturesError("image has no occupied pixels");
  auto features = detect_features(feature_image(image), image.width(), image.height(), params);
  if (static_cast<int>(features.size()) < params.min_corners)
    throw InsufficientFeaturesError("only " + std::to_string(features.size()) + " corners detected");
  return features;
}

void lift_features(std::vector<Feature>& features, const IntensityImage& image, const PointFrame& frame)
{
  for (Feature& f : features)
  {
    const std::size_t idx = image.index(f.u, f.v);
    f.has_point = image.occupied(idx);
    if (f.has_point)
      f.point = frame.points[image.source_index(idx)].pos();
  }
}

MatchSet match_features(const std::vector<Feature>& prev, const std::vector<Feature>& curr,
                        const FeatureParams& params)
{
  if (prev.empty() || curr.empty())
    throw InsufficientMatchesError("no features to match");

  struct Best
  {
    int index = -1;
    int first = std::numeric_limits<int>::max();
    int second = std::numeric_limits<int>::max();
  };
  std::vector<Best> prev_best(prev.size());
  std::vector<Best> curr_best(curr.size());
  for (std::size_t i = 0; i < prev.size(); ++i)
    for (std::size_t j = 0; j < curr.size(); ++j)
    {
      const int d = hamming(prev[i].descriptor, curr[j].descriptor);
      auto update = [d](Best& b, int idx) {
        if (d < b.first)
        {
          b.second = b.first;
          b.first = d;
          b.index = idx;
        }
        else if (d < b.second)
          b.second = d;
      };
      update(prev_best[i], static_cast<int>(j));
      update(curr_best[j], static_cast<int>(i));
    }

  MatchSet matches;
  for (std::size_t i = 0; i < prev.size(); ++i)
  {
    const Best& b = prev_best[i];
    if (b.index < 0 || curr_best[static_cast<std::size_t>(b.index)].index != static_cast<int>(i))
      continue;
    if (b.first > params.max_distance)
      continue;
    if (b.second != std::numeric_limits<int>::max() && !(b.first < params.ratio * b.second))
      continue;
    const Feature& p = prev[i];
    const Feature& c = curr[static_cast<std::size_t>(b.index)];
    if (!p.has_point || !c.has_point)
      continue;
    matches.pairs.push_back({static_cast<int>(i), b.index, b.first});
    matches.prev_points.push_back(p.point);
    matches.curr_points.push_back(c.point);
  }
  if (matches.size() < 4)
    throw InsufficientMatchesError("only " + std::to_string(matches.size()) + " 3D matches");
  return matches;
}

}  // namespace dynoscan
