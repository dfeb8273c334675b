#include <doctest.h>

#include "dynoscan/errors.hpp"
#include "dynoscan/pipeline.hpp"
#include "dynoscan/simworld.hpp"
#include "support.hpp"

using namespace dynoscan;

TEST_CASE("a static empty room produces no dynamic labels")
{
  const Scene scene = load_scene(testing_support::data_dir() / "empty_room.json");
  const Simulator sim(scene);
  PipelineConfig config;
  config.sensor = scene.sensor;
  Pipeline pipeline(config);
  std::size_t labeled = 0;
  for (std::size_t i = 0; i < sim.frame_count(); ++i)
  {
    const SimFrame f = sim.render(i);
    const FrameResult r = pipeline.process(f.frame);
    CHECK_FALSE(r.frame_failed);
    labeled += r.label.idx.size();
    CHECK(r.label.t == f.frame.timestamp);
    CHECK(std::is_sorted(r.label.idx.begin(), r.label.idx.end()));
    CHECK(pipeline.window().size() <= static_cast<std::size_t>(config.dynamics.window));
  }
  CHECK(labeled == 0);
}

TEST_CASE("odometry follows the simulated trajectory")
{
  Scene scene = load_scene(testing_support::data_dir() / "hall_3ped.json");
  const Simulator sim(scene);
  PipelineConfig config;
  config.sensor = scene.sensor;
  Pipeline pipeline(config);
  Pose previous = sim.render(0).world_from_sensor;
  for (std::size_t i = 0; i < 20; ++i)
  {
    const SimFrame f = sim.render(i);
    const FrameResult r = pipeline.process(f.frame);
    CHECK_FALSE(r.odometry_failed);
    const Pose truth = compose(f.world_from_sensor.inverse(), previous);
    const Pose error = compose(truth.inverse(), r.motion);
    CHECK(error.t.norm() < 0.05);
    previous = f.world_from_sensor;
  }
}

TEST_CASE("external poses replace feature odometry")
{
  const Scene scene = load_scene(testing_support::data_dir() / "hall_3ped.json");
  const Simulator sim(scene);
  std::vector<TimedPose> poses;
  for (std::size_t i = 0; i < 5; ++i)
    poses.push_back({scene.frame_time(i), sim.render(i).world_from_sensor});
  PipelineConfig config;
  config.sensor = scene.sensor;
  Pipeline pipeline(config, poses);
  for (std::size_t i = 0; i < 5; ++i)
  {
    const FrameResult r = pipeline.process(sim.render(i).frame);
    const Pose expected = compose(poses[i].pose.inverse(), poses[i == 0 ? 0 : i - 1].pose);
    CHECK(r.motion.matrix().isApprox(expected.matrix(), 1e-9));
  }
}

TEST_CASE("non-increasing timestamps fail the frame without stopping the stream")
{
  PipelineConfig config;
  config.sensor.width = 256;
  config.sensor.height = 32;
  Pipeline pipeline(config);
  PointFrame f;
  f.timestamp = 1.0;
  f.points.push_back({5, 0, 0, 100});
  CHECK_FALSE(pipeline.process(f).frame_failed);
  const FrameResult again = pipeline.process(f);
  CHECK(again.frame_failed);
  CHECK(again.label.idx.empty());
  f.timestamp = 1.1;
  CHECK_FALSE(pipeline.process(f).frame_failed);
}
