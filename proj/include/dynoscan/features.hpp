#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "dynoscan/frame_model.hpp"

namespace dynoscan {

using Descriptor = std::array<std::uint64_t, 4>;  // 256 bits

int hamming(const Descriptor& a, const Descriptor& b);

/// Oriented FAST corner with a steered binary descriptor.
struct Feature
{
  int u = 0;
  int v = 0;
  float angle = 0.f;  // radians, from the intensity centroid
  float score = 0.f;  // Harris response used for ranking
  Descriptor descriptor{};

  bool has_point = false;  // set by lift_features when the pixel is occupied
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
};

struct FeatureParams
{
  int max_count = 500;
  int tile_size = 32;
  int per_tile = 12;
  int fast_threshold = 12;
  int patch_radius = 10;
  int min_corners = 8;
  double ratio = 0.8;
  int max_distance = 80;
};

/// 8-bit image used for detection: log-compressed intensity, min-max
/// normalized over occupied pixels. The log keeps material contrast
/// independent of the 1/r^2 falloff of the raw signal.
std::vector<std::uint8_t> feature_image(const IntensityImage& image);

/// Detects on a prepared 8-bit image of the given size. Columns wrap.
std::vector<Feature> detect_features(const std::vector<std::uint8_t>& gray, int width, int height,
                                     const FeatureParams& params = {});

/// Throws InsufficientFeaturesError when fewer than params.min_corners corners survive.
std::vector<Feature> detect_features(const IntensityImage& image, const FeatureParams& params = {});

/// Attaches each feature's 3D point through the image's source index.
void lift_features(std::vector<Feature>& features, const IntensityImage& image, const PointFrame& frame);

struct MatchSet
{
  struct Pair
  {
    int prev = 0;  // index into the previous frame's features
    int curr = 0;
    int distance = 0;
  };
  std::vector<Pair> pairs;
  std::vector<Eigen::Vector3d> prev_points;  // X
  std::vector<Eigen::Vector3d> curr_points;  // Y

  std::size_t size() const { return pairs.size(); }
};

/// Mutual nearest neighbours under Hamming distance with a ratio test.
/// Only pairs lifted to 3D on both sides are kept; fewer than 4 throws
/// InsufficientMatchesError.
MatchSet match_features(const std::vector<Feature>& prev, const std::vector<Feature>& curr,
                        const FeatureParams& params = {});

}  // namespace dynoscan
