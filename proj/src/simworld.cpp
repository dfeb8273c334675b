#include "dynoscan/simworld.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"

#include "dynoscan/errors.hpp"

namespace dynoscan {

namespace {

constexpr std::size_t kMaxPixels = std::size_t{1} << 22;
constexpr std::size_t kMaxFrames = 1'000'000;

double wrap_angle(double a)
{
  a = std::fmod(a + std::numbers::pi, 2.0 * std::numbers::pi);
  if (a < 0)
    a += 2.0 * std::numbers::pi;
  return a - std::numbers::pi;
}

template <typename W>
void check_coverage(const std::vector<W>& wps, double duration, const std::string& what)
{
  if (wps.empty())
    throw ConfigError(what + " has no waypoints");
  for (std::size_t i = 1; i < wps.size(); ++i)
    if (!(wps[i].t > wps[i - 1].t))
      throw ConfigError(what + " waypoint times must increase");
  if (wps.front().t > 0.0 || wps.back().t < duration)
    throw ConfigError(what + " trajectory does not cover [0, duration]");
}

// Index of the segment [i, i+1] containing t, or nullopt outside the trajectory.
template <typename W>
std::optional<std::size_t> segment_of(const std::vector<W>& wps, double t)
{
  if (wps.size() < 2 || t < wps.front().t || t >= wps.back().t)
    return std::nullopt;
  auto it = std::upper_bound(wps.begin(), wps.end(), t, [](double x, const W& w) { return x < w.t; });
  return static_cast<std::size_t>(it - wps.begin()) - 1;
}

Eigen::Vector3d vec3(const nlohmann::json& j, const char* key)
{
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3)
    throw ConfigError(std::string("scene field '") + key + "' must be a 3-vector");
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

}  // namespace

std::size_t Scene::frame_count() const
{
  return static_cast<std::size_t>(std::llround(duration * sensor.rate_hz));
}

void Scene::validate() const
{
  sensor.validate();
  if (!(duration > 0.0))
    throw ConfigError("scene duration must be positive");
  if (boxes.empty() && planes.empty() && actors.empty())
    throw ConfigError("scene is empty");
  if (range_sigma < 0.0 || intensity_sigma < 0.0)
    throw ConfigError("noise sigmas must be non-negative");
  if (sensor.pixel_count() > kMaxPixels || frame_count() > kMaxFrames)
    throw ConfigError("scene exceeds the ray budget");
  for (const auto& b : boxes)
    if (!((b.max - b.min).minCoeff() > 0.0))
      throw ConfigError("box '" + b.name + "' has a non-positive extent");
  for (const auto& p : planes)
    if (!(p.normal.norm() > 0.0))
      throw ConfigError("plane '" + p.name + "' has a zero normal");
  for (const auto& a : actors)
  {
    if (!(a.size.minCoeff() > 0.0))
      throw ConfigError("actor '" + a.name + "' has a non-positive extent");
    check_coverage(a.waypoints, duration, "actor '" + a.name + "'");
  }
  check_coverage(ego, duration, "ego");
}

Scene parse_scene(const std::string& text)
{
  nlohmann::json j;
  try
  {
    j = nlohmann::json::parse(text);
  }
  catch (const nlohmann::json::parse_error& e)
  {
    throw FormatError(std::string("scene is not valid JSON: ") + e.what(), e.byte);
  }

  Scene s;
  try
  {
    s.name = j.value("name", "");
    s.duration = j.at("duration").get<double>();
    s.seed = j.value("seed", std::uint64_t{1});
    if (j.contains("sensor"))
    {
      const auto& js = j["sensor"];
      s.sensor.width = js.value("width", s.sensor.width);
      s.sensor.height = js.value("height", s.sensor.height);
      s.sensor.beta_up = js.value("beta_up", s.sensor.beta_up);
      s.sensor.beta_fov = js.value("beta_fov", s.sensor.beta_fov);
      s.sensor.rate_hz = js.value("rate_hz", s.sensor.rate_hz);
    }
    if (j.contains("noise"))
    {
      s.range_sigma = j["noise"].value("range_sigma", 0.0);
      s.intensity_sigma = j["noise"].value("intensity_sigma", 0.0);
    }
    for (const auto& jb : j.value("boxes", nlohmann::json::array()))
      s.boxes.push_back({vec3(jb, "min"), vec3(jb, "max"), jb.at("material").get<double>(), jb.value("name", "")});
    for (const auto& jp : j.value("planes", nlohmann::json::array()))
      s.planes.push_back({vec3(jp, "normal"), jp.at("d").get<double>(), jp.at("material").get<double>(),
                          jp.value("name", "")});
    for (const auto& ja : j.value("actors", nlohmann::json::array()))
    {
      Actor a;
      a.name = ja.value("name", "");
      if (ja.contains("size"))
        a.size = vec3(ja, "size");
      a.base_z = ja.value("base_z", 0.0);
      a.material = ja.at("material").get<double>();
      for (const auto& w : ja.at("waypoints"))
        a.waypoints.push_back({w.at(0).get<double>(), w.at(1).get<double>(), w.at(2).get<double>()});
      s.actors.push_back(std::move(a));
    }
    const auto& je = j.at("ego");
    s.sensor_height = je.value("height", s.sensor_height);
    for (const auto& w : je.at("waypoints"))
      s.ego.push_back({w.at(0).get<double>(), w.at(1).get<double>(), w.at(2).get<double>(), w.at(3).get<double>()});
  }
  catch (const nlohmann::json::exception& e)
  {
    throw ConfigError(std::string("scene: ") + e.what());
  }
  for (auto& p : s.planes)
  {
    const double n = p.normal.norm();
    if (n > 0.0)
    {
      p.normal /= n;
      p.d /= n;
    }
  }
  s.validate();
  return s;
}

Scene load_scene(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open scene " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scene(buf.str());
}

Eigen::Vector2d actor_position(const Actor& actor, double t)
{
  const auto& w = actor.waypoints;
  if (t <= w.front().t)
    return {w.front().x, w.front().y};
  if (t >= w.back().t)
    return {w.back().x, w.back().y};
  const std::size_t i = *segment_of(w, t);
  const double s = (t - w[i].t) / (w[i + 1].t - w[i].t);
  return {w[i].x + s * (w[i + 1].x - w[i].x), w[i].y + s * (w[i + 1].y - w[i].y)};
}

double actor_speed(const Actor& actor, double t)
{
  const auto seg = segment_of(actor.waypoints, t);
  if (!seg)
    return 0.0;
  const auto& a = actor.waypoints[*seg];
  const auto& b = actor.waypoints[*seg + 1];
  return std::hypot(b.x - a.x, b.y - a.y) / (b.t - a.t);
}

Box actor_box(const Actor& actor, double t)
{
  const Eigen::Vector2d c = actor_position(actor, t);
  Box box;
  box.min = {c.x() - actor.size.x() / 2, c.y() - actor.size.y() / 2, actor.base_z};
  box.max = {c.x() + actor.size.x() / 2, c.y() + actor.size.y() / 2, actor.base_z + actor.size.z()};
  box.material = actor.material;
  box.name = actor.name;
  return box;
}

Pose ego_pose(const Scene& scene, double t)
{
  const auto& w = scene.ego;
  double x, y, yaw;
  if (t <= w.front().t)
    x = w.front().x, y = w.front().y, yaw = w.front().yaw;
  else if (t >= w.back().t)
    x = w.back().x, y = w.back().y, yaw = w.back().yaw;
  else
  {
    const std::size_t i = *segment_of(w, t);
    const double s = (t - w[i].t) / (w[i + 1].t - w[i].t);
    x = w[i].x + s * (w[i + 1].x - w[i].x);
    y = w[i].y + s * (w[i + 1].y - w[i].y);
    yaw = w[i].yaw + s * wrap_angle(w[i + 1].yaw - w[i].yaw);
  }
  Pose p = Pose::rotation_z(yaw);
  p.t = {x, y, scene.sensor_height};
  return p;
}

std::optional<double> intersect(const Box& box, const Eigen::Vector3d& o, const Eigen::Vector3d& dir)
{
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k)
  {
    if (dir[k] == 0.0)
    {
      if (o[k] < box.min[k] || o[k] > box.max[k])
        return std::nullopt;
      continue;
    }
    double a = (box.min[k] - o[k]) / dir[k];
    double b = (box.max[k] - o[k]) / dir[k];
    if (a > b)
      std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  if (t0 > t1 || t1 <= 0.0)
    return std::nullopt;
  // From inside a box the exit face is what the sensor sees.
  return t0 > 0.0 ? t0 : t1;
}

std::optional<double> intersect(const Plane& plane, const Eigen::Vector3d& o, const Eigen::Vector3d& dir)
{
  const double denom = plane.normal.dot(dir);
  if (denom == 0.0)
    return std::nullopt;
  const double t = -(plane.normal.dot(o) + plane.d) / denom;
  if (!(t > 0.0))
    return std::nullopt;
  return t;
}

Simulator::Simulator(Scene scene) : scene_(std::move(scene))
{
  scene_.validate();
}

std::optional<RayHit> Simulator::cast(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, double t) const
{
  std::optional<RayHit> best;
  auto consider = [&](std::optional<double> r, double material, int id) {
    if (r && (!best || *r < best->range))
      best = RayHit{*r, material, id};
  };
  int id = 0;
  for (const auto& p : scene_.planes)
    consider(intersect(p, origin, dir), p.material, id++);
  for (const auto& b : scene_.boxes)
    consider(intersect(b, origin, dir), b.material, id++);
  for (const auto& a : scene_.actors)
    consider(intersect(actor_box(a, t), origin, dir), a.material, id++);
  return best;
}

SimFrame Simulator::render(std::size_t index) const
{
  const SensorModel& s = scene_.sensor;
  const int w = s.width;
  const int h = s.height;
  const double t = scene_.frame_time(index);

  SimFrame out;
  out.index = index;
  out.frame.timestamp = t;
  out.gt.t = t;
  out.world_from_sensor = ego_pose(scene_, t);
  const Eigen::Matrix3d& R = out.world_from_sensor.R;
  const Eigen::Vector3d& origin = out.world_from_sensor.t;

  // All boxes of this instant, with the image columns each one can cover.
  std::vector<Box> boxes = scene_.boxes;
  std::vector<double> actor_speeds;
  for (const auto& a : scene_.actors)
  {
    boxes.push_back(actor_box(a, t));
    actor_speeds.push_back(actor_speed(a, t));
  }
  std::vector<std::vector<int>> column_boxes(static_cast<std::size_t>(w));
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t b = 0; b < boxes.size(); ++b)
  {
    const Box& box = boxes[b];
    const bool surrounds = origin.x() >= box.min.x() - 1e-6 && origin.x() <= box.max.x() + 1e-6 &&
                           origin.y() >= box.min.y() - 1e-6 && origin.y() <= box.max.y() + 1e-6;
    if (surrounds)
    {
      for (auto& c : column_boxes)
        c.push_back(static_cast<int>(b));
      continue;
    }
    const Eigen::Vector3d center_s = R.transpose() * ((box.min + box.max) / 2 - origin);
    const double ref = std::atan2(center_s.y(), center_s.x());
    double lo = 0.0, hi = 0.0;
    for (int corner = 0; corner < 8; ++corner)
    {
      const Eigen::Vector3d c{corner & 1 ? box.max.x() : box.min.x(), corner & 2 ? box.max.y() : box.min.y(),
                              corner & 4 ? box.max.z() : box.min.z()};
      const Eigen::Vector3d cs = R.transpose() * (c - origin);
      const double delta = wrap_angle(std::atan2(cs.y(), cs.x()) - ref);
      lo = std::min(lo, delta);
      hi = std::max(hi, delta);
    }
    const double scale = w / two_pi;
    const long first = static_cast<long>(std::floor((ref + lo + std::numbers::pi) * scale)) - 1;
    const long last = static_cast<long>(std::floor((ref + hi + std::numbers::pi) * scale)) + 1;
    for (long u = first; u <= std::min(last, first + w - 1); ++u)
      column_boxes[static_cast<std::size_t>(((u % w) + w) % w)].push_back(static_cast<int>(b));
  }

  std::seed_seq seq{static_cast<std::uint64_t>(scene_.seed), static_cast<std::uint64_t>(index)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> unit(0.0, 1.0);
  const int planes = static_cast<int>(scene_.planes.size());
  const int first_actor = first_actor_id();

  out.frame.points.reserve(s.pixel_count());
  out.hit_id.reserve(s.pixel_count());
  for (int v = 0; v < h; ++v)
  {
    const double el = s.beta_up - (v + 0.5) / h * s.beta_fov;
    for (int u = 0; u < w; ++u)
    {
      const double az = (u + 0.5) / w * two_pi - std::numbers::pi;
      const Eigen::Vector3d dir_s{std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
      const Eigen::Vector3d dir = R * dir_s;

      double range = std::numeric_limits<double>::infinity();
      double material = 0.0;
      int id = -1;
      for (int p = 0; p < planes; ++p)
        if (auto r = intersect(scene_.planes[static_cast<std::size_t>(p)], origin, dir); r && *r < range)
          range = *r, material = scene_.planes[static_cast<std::size_t>(p)].material, id = p;
      for (int b : column_boxes[static_cast<std::size_t>(u)])
        if (auto r = intersect(boxes[static_cast<std::size_t>(b)], origin, dir); r && *r < range)
          range = *r, material = boxes[static_cast<std::size_t>(b)].material, id = planes + b;
      if (id < 0)
        continue;

      double r = range;
      if (scene_.range_sigma > 0.0)
        r = std::max(1e-3, r + scene_.range_sigma * unit(rng));
      double intensity = material / std::pow(std::max(range, 1.0), 2);
      if (scene_.intensity_sigma > 0.0)
        intensity = std::max(0.0, intensity + scene_.intensity_sigma * unit(rng));

      const Eigen::Vector3d p = dir_s * r;
      out.frame.points.push_back({static_cast<float>(p.x()), static_cast<float>(p.y()), static_cast<float>(p.z()),
                                  static_cast<float>(intensity)});
      out.hit_id.push_back(id);
      if (id >= first_actor && actor_speeds[static_cast<std::size_t>(id - first_actor)] > kMovingSpeed)
        out.gt.idx.push_back(static_cast<std::uint32_t>(v * w + u));
    }
  }
  return out;
}

SimulationResult simulate(const Scene& scene)
{
  Simulator sim(scene);
  SimulationResult out;
  for (std::size_t i = 0; i < sim.frame_count(); ++i)
  {
    SimFrame f = sim.render(i);
    out.frames.push_back(std::move(f.frame));
    out.gt_labels.push_back(std::move(f.gt));
    out.gt_poses.push_back(f.world_from_sensor);
  }
  return out;
}

std::vector<Pose> inject_drift(std::span<const Pose> absolute, const DriftParams& params)
{
  if (params.sigma_t < 0.0 || params.sigma_r < 0.0)
    throw ConfigError("drift sigmas must be non-negative");
  std::vector<Pose> out(absolute.begin(), absolute.end());
  if (absolute.empty() || (params.sigma_t == 0.0 && params.sigma_r == 0.0))
    return out;

  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  const std::vector<Pose> rel = relative_poses(absolute);
  for (std::size_t i = 1; i < absolute.size(); ++i)
  {
    Eigen::Vector3d rot, trans;
    for (int k = 0; k < 3; ++k)
      rot[k] = params.sigma_r * unit(rng);
    for (int k = 0; k < 3; ++k)
      trans[k] = params.sigma_t * unit(rng);
    out[i] = compose(out[i - 1], compose(rel[i], Pose::from_rotvec(rot, trans)));
  }
  return out;
}

}  // namespace dynoscan
