#include <doctest.h>

#include <cmath>
#include <random>
#include <map>
#include <numeric>
#include <set>

#include <Eigen/Geometry>

#include "dynoscan/errors.hpp"
#include "dynoscan/render.hpp"
#include "dynoscan/simworld.hpp"
#include "support.hpp"

using namespace dynoscan;

namespace {

// Room with a pillar, one walker and one actor that stands still after t = 0.5.
const char* kScene = R"({
  "name": "unit", "duration": 1.0, "seed": 3,
  "sensor": {"width": 256, "height": 16, "beta_up": 0.3, "beta_fov": 0.6, "rate_hz": 10},
  "ego": {"height": 0.8, "waypoints": [[0, 0, 0, 0], [1, 0.5, 0, 0.1]]},
  "planes": [{"name": "floor", "normal": [0, 0, 1], "d": 0, "material": 600},
             {"name": "east", "normal": [1, 0, 0], "d": -10, "material": 800},
             {"name": "west", "normal": [1, 0, 0], "d": 10, "material": 800},
             {"name": "north", "normal": [0, 1, 0], "d": -10, "material": 800},
             {"name": "south", "normal": [0, 1, 0], "d": 10, "material": 800}],
  "boxes": [{"name": "pillar", "min": [3, 3, 0], "max": [3.5, 3.5, 3], "material": 1200}],
  "actors": [{"name": "walker", "material": 9000, "waypoints": [[0, 4, -2], [1, 4, 0]]},
             {"name": "idler", "material": 9000, "waypoints": [[0, -4, 2], [0.5, -4, 3], [1, -4, 3]]}]
})";

}  // namespace

TEST_CASE("ray intersections with boxes and planes")
{
  Box b;
  b.min = {1, -1, -1};
  b.max = {2, 1, 1};
  CHECK(*intersect(b, {0, 0, 0}, {1, 0, 0}) == doctest::Approx(1.0));
  CHECK_FALSE(intersect(b, {0, 0, 0}, {-1, 0, 0}));
  CHECK(*intersect(b, {1.5, 0, 0}, {1, 0, 0}) == doctest::Approx(0.5));  // from inside
  Plane floor;
  CHECK(*intersect(floor, {0, 0, 2}, Eigen::Vector3d(1, 0, -1).normalized()) == doctest::Approx(2 * std::sqrt(2.0)));
  CHECK_FALSE(intersect(floor, {0, 0, 2}, {1, 0, 0}));
  CHECK_FALSE(intersect(floor, {0, 0, 2}, {0, 0, 1}));
}

TEST_CASE("actors follow their waypoints")
{
  const Scene s = parse_scene(kScene);
  const Actor& walker = s.actors[0];
  CHECK(actor_position(walker, 0.5).isApprox(Eigen::Vector2d(4, -1)));
  CHECK(actor_speed(walker, 0.5) == doctest::Approx(2.0));
  CHECK(actor_speed(s.actors[1], 0.75) == doctest::Approx(0.0));
  const Box box = actor_box(walker, 0.5);
  CHECK(box.min.isApprox(Eigen::Vector3d(3.7, -1.3, 0.0)));
  CHECK(box.max.isApprox(Eigen::Vector3d(4.3, -0.7, 1.7)));
  const Pose p = ego_pose(s, 1.0);
  CHECK(p.t.isApprox(Eigen::Vector3d(0.5, 0, 0.8)));
  CHECK(p.R.isApprox(Pose::rotation_z(0.1).R));
}

TEST_CASE("rendered points match noise-free casts and ground truth marks moving actors")
{
  Scene s = parse_scene(kScene);
  s.range_sigma = 0.0;
  s.intensity_sigma = 0.0;
  const Simulator sim(s);
  CHECK(sim.frame_count() == 10);
  for (std::size_t i : {0u, 3u, 7u})
  {
    const SimFrame f = sim.render(i);
    REQUIRE(f.hit_id.size() == f.frame.points.size());
    const double t = s.frame_time(i);
    std::vector<std::uint32_t> expected_gt;
    for (std::size_t k = 0; k < f.frame.points.size(); ++k)
    {
      const Eigen::Vector3d p = f.frame.points[k].pos();
      const Eigen::Vector3d dir = f.world_from_sensor.R * p.normalized();
      const auto hit = sim.cast(f.world_from_sensor.t, dir, t);
      REQUIRE(hit);
      CHECK(hit->range == doctest::Approx(p.norm()).epsilon(1e-5));
      CHECK(hit->primitive == f.hit_id[k]);
      const int id = f.hit_id[k];
      if (id >= sim.first_actor_id() && actor_speed(s.actors[static_cast<std::size_t>(id - sim.first_actor_id())], t) >
                                          kMovingSpeed)
      {
        const auto px = pixel_of(p, s.sensor);
        REQUIRE(px);
        expected_gt.push_back(static_cast<std::uint32_t>(px->v * s.sensor.width + px->u));
      }
    }
    std::sort(expected_gt.begin(), expected_gt.end());
    CHECK(f.gt.idx == expected_gt);
    CHECK_FALSE(f.gt.idx.empty());
  }
}

TEST_CASE("rendering is deterministic per seed")
{
  Scene s = parse_scene(kScene);
  s.range_sigma = 0.01;
  s.intensity_sigma = 1.0;
  const Simulator a(s), b(s);
  CHECK(a.render(4).frame == b.render(4).frame);
  Scene other = s;
  other.seed = 4;
  CHECK_FALSE(Simulator(other).render(4).frame == a.render(4).frame);
}

TEST_CASE("bundled scenes load and validate")
{
  for (const char* name : {"hall_3ped.json", "empty_room.json"})
  {
    const Scene s = load_scene(testing_support::data_dir() / name);
    CHECK(s.frame_count() > 0);
  }
  const Scene empty = load_scene(testing_support::data_dir() / "empty_room.json");
  CHECK(empty.actors.empty());
}

TEST_CASE("invalid scenes are rejected")
{
  CHECK_THROWS_AS(parse_scene("{"), FormatError);
  CHECK_THROWS_AS(parse_scene(R"({"duration": 1})"), ConfigError);
  Scene s = parse_scene(kScene);
  auto expect_bad = [](Scene bad) { CHECK_THROWS_AS(bad.validate(), ConfigError); };
  Scene x = s;
  x.duration = 0.0;
  expect_bad(x);
  x = s;
  x.boxes[0].max.x() = 2.0;
  expect_bad(x);
  x = s;
  x.ego.pop_back();  // trajectory ends before the duration
  expect_bad(x);
  x = s;
  x.actors[0].waypoints[1].t = 0.0;
  expect_bad(x);
  x = s;
  x.range_sigma = -1.0;
  expect_bad(x);
  x = s;
  x.planes.clear();
  x.boxes.clear();
  x.actors.clear();
  expect_bad(x);
  CHECK_THROWS_AS(load_scene("/nonexistent/scene.json"), IoError);
}

TEST_CASE("drift injection")
{
  std::vector<Pose> poses;
  for (int i = 0; i < 50; ++i)
    poses.push_back(Pose::from_rotvec({0, 0, 0.02 * i}, {0.1 * i, 0.05 * i, 0}));
  const auto same = inject_drift(poses, {});
  for (std::size_t i = 0; i < poses.size(); ++i)
    CHECK(same[i].matrix() == poses[i].matrix());
  CHECK_THROWS_AS(inject_drift(poses, {-1.0, 0.0, 0}), ConfigError);
  CHECK(inject_drift(poses, {0.02, 0.0, 9})[0].matrix() == poses[0].matrix());
  const auto a = inject_drift(poses, {0.02, 0.003, 9});
  CHECK(a[10].matrix() == inject_drift(poses, {0.02, 0.003, 9})[10].matrix());

  // Each relative increment differs from the true one by N(0, sigma^2) per axis.
  const double sigma_t = 0.02, sigma_r = 0.2 * std::numbers::pi / 180.0;
  double sum_t = 0.0, sum_r = 0.0;
  std::size_t n = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed)
  {
    const auto drifted = inject_drift(poses, {sigma_t, sigma_r, seed});
    const auto rel_true = relative_poses(poses);
    const auto rel_drift = relative_poses(drifted);
    for (std::size_t i = 1; i < poses.size(); ++i)
    {
      const Pose e = compose(rel_true[i].inverse(), rel_drift[i]);
      sum_t += e.t.squaredNorm();
      sum_r += std::pow(Eigen::AngleAxisd(e.R).angle(), 2);
      ++n;
    }
  }
  CHECK(std::sqrt(sum_t / (3.0 * n)) == doctest::Approx(sigma_t).epsilon(0.05));
  CHECK(std::sqrt(sum_r / (3.0 * n)) == doctest::Approx(sigma_r).epsilon(0.05));
}

TEST_CASE("noise-free casts equal closed-form intersections")
{
  const Scene s = parse_scene(kScene);
  const Simulator sim(s);
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Eigen::Vector3d origin{0.3, -0.2, 0.8};
  for (int trial = 0; trial < 200; ++trial)
  {
    const Eigen::Vector3d dir = Eigen::Vector3d(u(rng), u(rng), u(rng)).normalized();
    // Candidates: floor z = 0, the four walls at +-10, the pillar faces.
    double best = std::numeric_limits<double>::infinity();
    for (int axis = 0; axis < 3; ++axis)
      for (double level : {-10.0, 0.0, 10.0})
      {
        if (axis == 2 && level != 0.0)
          continue;
        if (axis < 2 && level == 0.0)
          continue;
        const double t = (level - origin[axis]) / dir[axis];
        if (t > 0.0)
          best = std::min(best, t);
      }
    const Eigen::Vector3d lo{3, 3, 0}, hi{3.5, 3.5, 3};
    for (int axis = 0; axis < 3; ++axis)
      for (double level : {lo[axis], hi[axis]})
      {
        const double t = (level - origin[axis]) / dir[axis];
        const Eigen::Vector3d p = origin + t * dir;
        bool inside = t > 0.0;
        for (int k = 0; k < 3; ++k)
          if (k != axis)
            inside = inside && p[k] >= lo[k] && p[k] <= hi[k];
        if (inside)
          best = std::min(best, t);
      }
    // At t = 0 actors are at (4, -2) and (-4, 2); skip rays that could reach them.
    const auto hit = sim.cast(origin, dir, 0.0);
    REQUIRE(hit);
    if (hit->primitive >= sim.first_actor_id())
      continue;
    CHECK(std::abs(hit->range - best) <= 1e-9);
  }
}

TEST_CASE("a crossing actor moves across the image at the analytic angular rate")
{
  // Static ego at the origin, one actor crossing 5 m ahead at 1 m/s.
  const char* crossing = R"({
    "duration": 2.0, "seed": 1,
    "sensor": {"width": 1024, "height": 32, "beta_up": 0.3, "beta_fov": 0.6, "rate_hz": 10},
    "ego": {"height": 0.8, "waypoints": [[0, 0, 0, 0], [2, 0, 0, 0]]},
    "planes": [{"normal": [0, 0, 1], "d": 0, "material": 600}],
    "actors": [{"material": 9000, "waypoints": [[0, 5, -1], [2, 5, 1]]}]
  })";
  const Scene s = parse_scene(crossing);
  const Simulator sim(s);
  const int w = s.sensor.width;
  for (std::size_t i = 2; i < 18; i += 3)
  {
    const SimFrame f = sim.render(i);
    REQUIRE_FALSE(f.gt.idx.empty());
    CHECK(blob_count(f.gt, w, s.sensor.height) == 1);
    // Mean column of the blob against the columns whose ray azimuth falls inside the footprint silhouette.
    double mean_u = 0.0;
    for (auto idx : f.gt.idx)
      mean_u += static_cast<double>(idx % static_cast<std::uint32_t>(w));
    mean_u /= static_cast<double>(f.gt.idx.size());
    const double y = -1.0 + s.frame_time(i);
    double lo = std::numbers::pi, hi = -std::numbers::pi;
    for (double cx : {4.7, 5.3})
      for (double cy : {y - 0.3, y + 0.3})
      {
        lo = std::min(lo, std::atan2(cy, cx));
        hi = std::max(hi, std::atan2(cy, cx));
      }
    double sum = 0.0;
    int count = 0;
    for (int col = 0; col < w; ++col)
    {
      const double az = (col + 0.5) / w * 2.0 * std::numbers::pi - std::numbers::pi;
      if (az >= lo && az <= hi)
        sum += col, ++count;
    }
    REQUIRE(count > 0);
    const double expected_u = sum / count;
    CHECK(std::abs(mean_u - expected_u) < 0.5);
  }
}

TEST_CASE("ground-truth poses trace the ego trajectory exactly")
{
  const char* corridor = R"({
    "duration": 4.0, "seed": 1,
    "sensor": {"width": 64, "height": 8, "beta_up": 0.3, "beta_fov": 0.6, "rate_hz": 10},
    "ego": {"height": 0.8, "waypoints": [[0, 0, 0, 0], [4, 2, 0, 0]]},
    "planes": [{"normal": [0, 0, 1], "d": 0, "material": 600}, {"normal": [0, 1, 0], "d": -1.5, "material": 800},
               {"normal": [0, 1, 0], "d": 1.5, "material": 800}]
  })";
  const SimulationResult r = simulate(parse_scene(corridor));
  REQUIRE(r.gt_poses.size() == 40);
  const auto rel = relative_poses(r.gt_poses);
  Pose acc = r.gt_poses[0];
  for (std::size_t i = 1; i < rel.size(); ++i)
  {
    acc = compose(acc, rel[i]);
    const Eigen::Vector3d expected{0.05 * static_cast<double>(i), 0.0, 0.8};
    CHECK((acc.t - expected).norm() < 1e-9);
    CHECK((acc.R - Eigen::Matrix3d::Identity()).norm() < 1e-9);
  }
}

TEST_CASE("drift accumulates as a random walk")
{
  // Identity trajectory: after n steps each translation axis has spread sigma * sqrt(n).
  const std::vector<Pose> poses(300);
  const double sigma_t = 0.02;
  double sum = 0.0;
  const int runs = 200;
  for (int seed = 0; seed < runs; ++seed)
  {
    const auto drifted = inject_drift(poses, {sigma_t, 0.0, static_cast<std::uint64_t>(seed)});
    sum += drifted.back().t.squaredNorm();
  }
  const double per_axis = std::sqrt(sum / (3.0 * runs));
  CHECK(per_axis == doctest::Approx(sigma_t * std::sqrt(299.0)).epsilon(0.1));
  CHECK(per_axis == doctest::Approx(0.35).epsilon(0.1));
}

TEST_CASE("reference scene definition")
{
  const Scene s = load_scene(testing_support::data_dir() / "hall_3ped.json");
  CHECK(s.frame_count() == 300);
  CHECK(s.actors.size() == 3);
  CHECK(s.sensor.width == 1024);
  CHECK(s.sensor.height == 64);

  // Frame 150: one overlay blob per visible moving actor, where actors whose
  // silhouettes touch in the image (one emerging behind another) count once.
  const Simulator sim(s);
  const SimFrame f = sim.render(150);
  const int w = s.sensor.width;
  std::map<int, std::set<std::pair<int, int>>> pixels;
  for (std::size_t k = 0; k < f.hit_id.size(); ++k)
  {
    const int id = f.hit_id[k];
    if (id >= sim.first_actor_id() &&
        actor_speed(s.actors[static_cast<std::size_t>(id - sim.first_actor_id())], s.frame_time(150)) > kMovingSpeed)
    {
      const auto px = pixel_of(f.frame.points[k].pos(), s.sensor);
      pixels[id].insert({px->u, px->v});
    }
  }
  REQUIRE_FALSE(pixels.empty());
  auto touching = [&](const std::set<std::pair<int, int>>& a, const std::set<std::pair<int, int>>& b) {
    for (const auto& [u, v] : a)
      for (int du = -1; du <= 1; ++du)
        for (int dv = -1; dv <= 1; ++dv)
          if (b.count({((u + du) % w + w) % w, v + dv}))
            return true;
    return false;
  };
  std::vector<int> ids;
  for (const auto& [id, px] : pixels)
    ids.push_back(id);
  std::vector<std::size_t> group(ids.size());
  std::iota(group.begin(), group.end(), 0);
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = i + 1; j < ids.size(); ++j)
      if (touching(pixels[ids[i]], pixels[ids[j]]))
        std::replace(group.begin(), group.end(), group[j], group[i]);
  const std::set<std::size_t> groups(group.begin(), group.end());
  CHECK(ids.size() == 3);
  CHECK(blob_count(f.gt, w, s.sensor.height) == groups.size());
}
