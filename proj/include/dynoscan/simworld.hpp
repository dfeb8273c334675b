#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dynoscan/frame_model.hpp"
#include "dynoscan/pose.hpp"
#include "dynoscan/segmentation.hpp"

namespace dynoscan {

struct Box
{
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();
  double material = 1000.0;
  std::string name;
};

/// Infinite plane n . p + d = 0, hit from either side.
struct Plane
{
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double d = 0.0;
  double material = 1000.0;
  std::string name;
};

struct ActorWaypoint
{
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
};

/// Axis-aligned box whose footprint center follows the waypoints (linear in time).
struct Actor
{
  Eigen::Vector3d size{0.6, 0.6, 1.7};
  double base_z = 0.0;
  double material = 10000.0;
  std::vector<ActorWaypoint> waypoints;
  std::string name;
};

struct EgoWaypoint
{
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
};

struct Scene
{
  std::string name;
  SensorModel sensor;
  double range_sigma = 0.0;
  double intensity_sigma = 0.0;
  double duration = 0.0;  // seconds
  std::uint64_t seed = 1;
  double sensor_height = 0.8;
  std::vector<Box> boxes;
  std::vector<Plane> planes;
  std::vector<Actor> actors;
  std::vector<EgoWaypoint> ego;

  std::size_t frame_count() const;
  double frame_time(std::size_t i) const { return static_cast<double>(i) / sensor.rate_hz; }
  /// Throws ConfigError for empty scenes, non-positive extents, trajectories not
  /// covering [0, duration] or a ray budget overrun.
  void validate() const;
};

Scene load_scene(const std::filesystem::path& path);
Scene parse_scene(const std::string& json);

/// Actor speeds at or below this produce no ground-truth label.
inline constexpr double kMovingSpeed = 0.05;

Eigen::Vector2d actor_position(const Actor& actor, double t);
double actor_speed(const Actor& actor, double t);
Box actor_box(const Actor& actor, double t);
/// world_from_sensor at time t.
Pose ego_pose(const Scene& scene, double t);

struct RayHit
{
  double range = 0.0;
  double material = 0.0;
  int primitive = -1;  // see SimFrame::hit_id
};

/// Nearest intersection with positive distance along a unit direction, or nullopt.
std::optional<double> intersect(const Box& box, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir);
std::optional<double> intersect(const Plane& plane, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir);

struct SimFrame
{
  std::size_t index = 0;
  PointFrame frame;
  DynamicLabel gt;
  Pose world_from_sensor;
  // Per point: plane index p -> p, box index b -> planes + b, actor a -> planes + boxes + a.
  std::vector<std::int32_t> hit_id;
};

/// Renders frames on demand so sequences can be streamed.
class Simulator
{
public:
  explicit Simulator(Scene scene);

  const Scene& scene() const { return scene_; }
  std::size_t frame_count() const { return scene_.frame_count(); }
  SimFrame render(std::size_t index) const;

  /// Noise-free ray cast in world coordinates at time t.
  std::optional<RayHit> cast(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, double t) const;

  int first_box_id() const { return static_cast<int>(scene_.planes.size()); }
  int first_actor_id() const { return first_box_id() + static_cast<int>(scene_.boxes.size()); }

private:
  Scene scene_;
};

struct SimulationResult
{
  std::vector<PointFrame> frames;
  std::vector<DynamicLabel> gt_labels;
  std::vector<Pose> gt_poses;  // world_from_sensor
};

/// Convenience wrapper rendering every frame in memory.
SimulationResult simulate(const Scene& scene);

struct DriftParams
{
  double sigma_t = 0.0;  // meters per frame
  double sigma_r = 0.0;  // radians per frame
  std::uint64_t seed = 0;
};

/// Perturbs every relative transform of an absolute pose sequence with an
/// independent Gaussian increment and re-accumulates from the first pose.
std::vector<Pose> inject_drift(std::span<const Pose> absolute, const DriftParams& params);

}  // namespace dynoscan
