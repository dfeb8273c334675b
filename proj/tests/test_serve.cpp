#include <doctest.h>

#include <cstring>
#include <thread>

#include "dynoscan/frame_io.hpp"
#include "dynoscan/label_io.hpp"
#include "dynoscan/segmentation.hpp"
#include "dynoscan/serve.hpp"
#include "dynoscan/simworld.hpp"
#include "support.hpp"

// After Eigen: the resolver header pulled in by httplib defines a `_res` macro.
#include <httplib.h>
#include <json.hpp>

using namespace dynoscan;

namespace {

const char* kRoom = R"({
  "name": "serve", "duration": 0.3, "seed": 5,
  "sensor": {"width": 128, "height": 32, "beta_up": 0.3, "beta_fov": 0.6, "rate_hz": 10},
  "ego": {"waypoints": [[0, 0, 0, 0], [0.3, 0, 0, 0]]},
  "planes": [{"normal": [0, 0, 1], "d": 0, "material": 600}],
  "boxes": [{"min": [2, -0.3, 0], "max": [2.6, 0.3, 2], "material": 5000}]
})";

// Owns a server running on a background thread.
struct Running
{
  Running(const std::filesystem::path& frames, const std::filesystem::path& labels, const PipelineConfig& config)
      : server(frames, labels, config)
  {
    port = server.bind("127.0.0.1", 0);
    thread = std::thread([this] { server.run(); });
  }
  ~Running()
  {
    server.stop();
    thread.join();
  }
  httplib::Client client() const
  {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(10, 0);
    return c;
  }

  AnnotationServer server;
  int port = 0;
  std::thread thread;
};

}  // namespace

TEST_CASE("annotation server endpoints")
{
  testing_support::TempDir dir("serve");
  const Scene scene = parse_scene(kRoom);
  const SimulationResult sim = simulate(scene);
  write_frames(sim.frames, dir / "f.dynf");
  PipelineConfig config;
  config.sensor = scene.sensor;
  const auto labels_path = dir / "labels.jsonl";

  {
    Running run(dir / "f.dynf", labels_path, config);
    CHECK(run.server.frame_count() == 3);
    auto c = run.client();

    auto meta = c.Get("/meta");
    REQUIRE(meta);
    CHECK(meta->status == 200);
    const auto j = nlohmann::json::parse(meta->body);
    CHECK(j["frames"] == 3);
    CHECK(j["sensor"]["width"] == 128);
    CHECK(j["grow_eps"].get<double>() == config.grow.eps);

    auto png = c.Get("/frames/1/intensity.png");
    REQUIRE(png);
    CHECK(png->status == 200);
    CHECK(png->body.substr(1, 3) == "PNG");

    auto range = c.Get("/frames/0/range.bin");
    REQUIRE(range);
    REQUIRE(range->body.size() == 128 * 32 * 4);
    const IntensityImage image = project(sim.frames[0], scene.sensor);
    for (std::size_t p = 0; p < image.size(); p += 37)
    {
      float r = 0.f;
      std::memcpy(&r, range->body.data() + 4 * p, 4);
      CHECK(r == doctest::Approx(image.occupied(p) ? image.range(p) : 0.0).epsilon(1e-6));
    }

    auto fg = c.Get("/frames/0/foreground");
    REQUIRE(fg);
    CHECK(nlohmann::json::parse(fg->body)["indices"].is_array());

    // Grow from the box face.
    const int u = 64, v = 16;
    REQUIRE(image.occupied(u, v));
    auto grow = c.Post("/frames/0/grow", R"({"u": 64, "v": 16, "eps": 0.3})", "application/json");
    REQUIRE(grow);
    CHECK(grow->status == 200);
    const auto g = nlohmann::json::parse(grow->body);
    CHECK_FALSE(g["truncated"].get<bool>());
    const auto grown = g["indices"].get<std::vector<std::uint32_t>>();
    CHECK(std::binary_search(grown.begin(), grown.end(), static_cast<std::uint32_t>(v * 128 + u)));
    GrowParams params = config.grow;
    params.eps = 0.3;
    const Pixel seed{u, v};
    const GrowResult direct = region_grow(image, sim.frames[0], std::span(&seed, 1),
                                          estimate_ground_plane(sim.frames[0], config.ground), params,
                                          sim.frames[0].timestamp);
    CHECK(grown == direct.label.idx);

    // Rays above the box see nothing.
    REQUIRE_FALSE(image.occupied(0, 0));
    CHECK(c.Post("/frames/0/grow", R"({"u": 0, "v": 0})", "application/json")->status == 422);

    CHECK(c.Post("/frames/0/grow", "{", "application/json")->status == 400);
    CHECK(c.Post("/frames/0/grow", R"({"u": 1})", "application/json")->status == 400);
    CHECK(c.Post("/frames/0/grow", R"({"u": 500, "v": 1})", "application/json")->status == 400);
    CHECK(c.Post("/frames/0/grow", R"({"u": 1, "v": 1, "eps": -1})", "application/json")->status == 400);
    CHECK(c.Get("/frames/9/intensity.png")->status == 404);
    CHECK(c.Get("/labels/0")->status == 404);
    CHECK(c.Get("/labels/7")->status == 404);

    auto put = c.Put("/labels/2", R"({"idx": [30, 10, 10]})", "application/json");
    REQUIRE(put);
    CHECK(put->status == 200);
    CHECK(parse_json_line(put->body).idx == std::vector<std::uint32_t>{10, 30});
    CHECK(c.Put("/labels/1", R"({"t": 5.0, "idx": []})", "application/json")->status == 400);
    CHECK(c.Put("/labels/1", R"({"idx": [999999]})", "application/json")->status == 400);
    CHECK(c.Put("/labels/1", R"({"idx": "x"})", "application/json")->status == 400);
    CHECK(c.Put("/labels/1", "nope", "application/json")->status == 400);

    auto got = c.Get("/labels/2");
    REQUIRE(got);
    CHECK(got->status == 200);
    CHECK(got->body == put->body);
    CHECK(parse_json_line(got->body) == DynamicLabel{0.2, {10, 30}});

    // An empty label is an explicit negative annotation.
    CHECK(c.Put("/labels/0", R"({"t": 0.0, "idx": []})", "application/json")->status == 200);
    CHECK(c.Get("/labels/0")->status == 200);
  }

  // Stored labels are on disk and come back after a restart.
  const auto stored = read_labels(labels_path);
  REQUIRE(stored.size() == 2);
  CHECK(stored[0].idx.empty());
  CHECK(stored[1].idx == std::vector<std::uint32_t>{10, 30});
  {
    Running run(dir / "f.dynf", labels_path, config);
    auto c = run.client();
    auto got = c.Get("/labels/2");
    REQUIRE(got);
    CHECK(got->status == 200);
    CHECK(parse_json_line(got->body).idx == std::vector<std::uint32_t>{10, 30});
  }
}
