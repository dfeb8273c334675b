// dynoscan command-line front end.

#include <algorithm>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dynoscan/config.hpp"
#include "dynoscan/errors.hpp"
#include "dynoscan/evaluation.hpp"
#include "dynoscan/foreground.hpp"
#include "dynoscan/frame_io.hpp"
#include "dynoscan/label_io.hpp"
#include "dynoscan/pipeline.hpp"
#include "dynoscan/render.hpp"
#include "dynoscan/serve.hpp"
#include "dynoscan/simworld.hpp"

namespace fs = std::filesystem;
using namespace dynoscan;

namespace {

enum Exit
{
  kOk = 0,
  kUsage = 1,
  kData = 2,
  kConfig = 3
};

PipelineConfig make_config(const std::string& path, const std::vector<std::string>& overrides)
{
  if (path.empty())
    return parse_config("", overrides);
  return load_config(path, overrides);
}

std::ofstream open_out(const std::string& path)
{
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw IoError("cannot write " + path);
  return out;
}

void write_text(const fs::path& path, const std::string& text)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << text;
}

std::string frame_name(const char* stem, std::size_t i, const char* ext)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%05zu.%s", stem, i, ext);
  return buf;
}

// Streams frames from DYNF, or loads a CSV whole.
class FrameSource
{
public:
  explicit FrameSource(const fs::path& path)
  {
    if (path.extension() == ".csv")
      csv_ = read_csv_frames(path);
    else
      reader_.emplace(path);
  }
  std::optional<PointFrame> next()
  {
    if (reader_)
      return reader_->next();
    if (pos_ < csv_.size())
      return std::move(csv_[pos_++]);
    return std::nullopt;
  }

private:
  std::optional<FrameReader> reader_;
  std::vector<PointFrame> csv_;
  std::size_t pos_ = 0;
};

struct RunArgs
{
  std::string frames, labels_out, config, odometry_in, odometry_out, tracks_out, verdicts_out, timings_out;
  std::vector<std::string> overrides;
  bool quiet = false;
};

int cmd_run(const RunArgs& a)
{
  const PipelineConfig config = make_config(a.config, a.overrides);
  std::optional<std::vector<TimedPose>> external;
  if (!a.odometry_in.empty())
    external = read_tum(a.odometry_in);
  Pipeline pipeline(config, std::move(external));
  FrameSource source(a.frames);

  std::optional<std::ofstream> odo, tracks, verdicts, timings;
  if (!a.odometry_out.empty())
    odo = open_out(a.odometry_out);
  if (!a.tracks_out.empty())
    tracks = open_out(a.tracks_out);
  if (!a.verdicts_out.empty())
    verdicts = open_out(a.verdicts_out);
  if (!a.timings_out.empty())
  {
    timings = open_out(a.timings_out);
    *timings << "frame,t,project,foreground,odometry,cluster,associate,classify,grow,total\n";
  }

  std::vector<DynamicLabel> labels;
  std::size_t flagged = 0;
  double total_ms = 0.0;
  while (auto frame = source.next())
  {
    const FrameResult r = pipeline.process(*frame);
    labels.push_back(r.label);
    flagged += r.odometry_failed || r.frame_failed;
    total_ms += r.timings.total;
    if (r.frame_failed && !a.quiet)
      std::cerr << "frame " << r.index << ": " << r.frame_error << "\n";
    if (odo)
      *odo << tum_line({r.timestamp, r.odometry}) << "\n";
    if (tracks)
      for (std::size_t c = 0; c < r.cluster_tracks.size(); ++c)
      {
        const auto& p = r.cluster_centroids[c];
        nlohmann::ordered_json j{{"frame", r.index},
                                 {"track_id", r.cluster_tracks[c]},
                                 {"cluster_id", c},
                                 {"centroid", {p.x(), p.y(), p.z()}}};
        *tracks << j.dump() << "\n";
      }
    if (verdicts)
      for (const auto& v : r.verdicts)
      {
        nlohmann::ordered_json j{{"frame", r.index},   {"track_id", v.track_id},
                                 {"class", to_string(v.cls)}, {"f", v.f},
                                 {"f_a", v.f_a},       {"ratio", v.ratio},
                                 {"theta_deg", v.theta * 180.0 / std::numbers::pi}};
        *verdicts << j.dump() << "\n";
      }
    if (timings)
    {
      const auto& t = r.timings;
      char buf[256];
      std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f\n", r.index, r.timestamp,
                    t.project, t.foreground, t.odometry, t.cluster, t.associate, t.classify, t.grow, t.total);
      *timings << buf;
    }
  }
  write_labels(labels, a.labels_out);
  if (!a.quiet)
    std::cerr << labels.size() << " frames, " << flagged << " flagged, mean "
              << (labels.empty() ? 0.0 : total_ms / static_cast<double>(labels.size())) << " ms/frame\n";
  return kOk;
}

struct RenderArgs
{
  std::string frames, labels, out, config;
  std::vector<std::string> overrides;
  std::vector<std::size_t> only;
  bool foreground = false;
};

int cmd_render(const RenderArgs& a)
{
  const PipelineConfig config = make_config(a.config, a.overrides);
  const GaussianKernel kernel = build_kernel(config.kernel_a, config.kernel_b, config.sigma_m, config.sigma_n);
  std::vector<DynamicLabel> labels;
  if (!a.labels.empty())
    labels = read_labels(a.labels);
  fs::create_directories(a.out);

  FrameSource source(a.frames);
  std::size_t i = 0;
  for (; auto frame = source.next(); ++i)
  {
    if (!a.only.empty() && std::find(a.only.begin(), a.only.end(), i) == a.only.end())
      continue;
    const IntensityImage image = project(*frame, config.sensor);
    const int w = image.width();
    const int h = image.height();
    DynamicLabel label{frame->timestamp, {}};
    if (i < labels.size())
      label = labels[i];
    write_text(fs::path(a.out) / frame_name("intensity", i, "pgm"), encode_pgm(normalize_to_8bit(image), w, h));
    write_text(fs::path(a.out) / frame_name("overlay", i, "ppm"), encode_ppm(overlay_rgb(image, label), w, h));
    write_text(fs::path(a.out) / frame_name("dynamic", i, "txt"), dynamic_points_text(image, *frame, label));
    if (a.foreground)
    {
      const ForegroundSet fg = extract_foreground(*frame, image, kernel, config.theta);
      write_text(fs::path(a.out) / frame_name("mask", i, "pgm"), encode_pgm(mask_gray(fg), w, h));
      write_text(fs::path(a.out) / frame_name("diff", i, "pgm"),
                 encode_pgm(difference_gray(difference_image(image, kernel)), w, h));
    }
  }
  return kOk;
}

struct EvalArgs
{
  std::string pred, gt, report, series;
  double max_dt = 0.01;
};

int cmd_eval(const EvalArgs& a)
{
  const auto pred = read_labels(a.pred);
  const auto gt = read_labels(a.gt);
  const SequenceReport report = evaluate_sequence(pred, gt, a.max_dt);
  const std::string json = report_json(report);
  if (!a.report.empty())
    write_text(a.report, json);
  else
    std::cout << json;
  if (!a.series.empty())
    write_text(a.series, series_csv(report));
  return kOk;
}

struct SimArgs
{
  std::string scene, frames, labels, poses, drift_poses;
  double drift_t = 0.0;
  double drift_r_deg = 0.0;
  std::uint64_t drift_seed = 0;
  std::size_t limit = 0;
};

int cmd_simulate(const SimArgs& a)
{
  const Simulator sim(load_scene(a.scene));
  std::size_t n = sim.frame_count();
  if (a.limit > 0)
    n = std::min(n, a.limit);
  std::optional<FrameWriter> writer;
  if (!a.frames.empty())
    writer.emplace(a.frames);
  std::vector<DynamicLabel> labels;
  std::vector<Pose> poses;
  std::vector<double> times;
  for (std::size_t i = 0; i < n; ++i)
  {
    SimFrame f = sim.render(i);
    if (writer)
      writer->write(f.frame);
    labels.push_back(std::move(f.gt));
    poses.push_back(f.world_from_sensor);
    times.push_back(f.frame.timestamp);
  }
  if (writer)
    writer->close();
  if (!a.labels.empty())
    write_labels(labels, a.labels);
  auto dump = [&](const std::string& path, const std::vector<Pose>& ps) {
    std::vector<TimedPose> timed;
    for (std::size_t i = 0; i < ps.size(); ++i)
      timed.push_back({times[i], ps[i]});
    write_tum(timed, path);
  };
  if (!a.poses.empty())
    dump(a.poses, poses);
  if (!a.drift_poses.empty())
    dump(a.drift_poses,
         inject_drift(poses, {a.drift_t, a.drift_r_deg * std::numbers::pi / 180.0, a.drift_seed}));
  return kOk;
}

struct ServeArgs
{
  std::string frames, labels, config, host = "127.0.0.1";
  std::vector<std::string> overrides;
  int port = 8080;
};

AnnotationServer* g_server = nullptr;

int cmd_serve(const ServeArgs& a)
{
  AnnotationServer server(a.frames, a.labels, make_config(a.config, a.overrides));
  const int port = server.bind(a.host, a.port);
  if (port < 0)
    throw IoError("cannot bind " + a.host);
  std::cerr << "serving " << server.frame_count() << " frames on http://" << a.host << ":" << port << "\n";
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server)
      g_server->stop();
  });
  server.run();
  g_server = nullptr;
  return kOk;
}

int cmd_convert(const std::string& in, const std::string& out)
{
  write_labels(read_labels(in), out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Dynamic object detection in streaming LiDAR frames"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Detect dynamic points in a frame sequence");
  run_cmd->add_option("--frames", run.frames, "DYNF or CSV frame file")->required();
  run_cmd->add_option("--labels-out", run.labels_out, "Label output (.jsonl, or .dynl for binary)")->required();
  run_cmd->add_option("--config", run.config, "INI configuration file");
  run_cmd->add_option("--set", run.overrides, "Override section.key=value (repeatable)");
  run_cmd->add_option("--odometry-in", run.odometry_in, "TUM poses replacing feature odometry");
  run_cmd->add_option("--odometry-out", run.odometry_out, "Write accumulated poses as TUM");
  run_cmd->add_option("--tracks-out", run.tracks_out, "Per-frame track assignments (JSON lines)");
  run_cmd->add_option("--verdicts-out", run.verdicts_out, "Per-frame track verdicts (JSON lines)");
  run_cmd->add_option("--timings-out", run.timings_out, "Per-frame stage timings (CSV)");
  run_cmd->add_flag("--quiet", run.quiet, "No summary on stderr");

  RenderArgs render;
  auto* render_cmd = app.add_subcommand("render", "Write intensity, overlay and dynamic-point files");
  render_cmd->add_option("--frames", render.frames, "DYNF or CSV frame file")->required();
  render_cmd->add_option("--labels", render.labels, "Labels to overlay");
  render_cmd->add_option("--out", render.out, "Output directory")->required();
  render_cmd->add_option("--frame", render.only, "Only these frame indices (repeatable)");
  render_cmd->add_flag("--foreground", render.foreground, "Also write the foreground mask and f-h image");
  render_cmd->add_option("--config", render.config, "INI configuration file");
  render_cmd->add_option("--set", render.overrides, "Override section.key=value (repeatable)");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score predicted labels against ground truth");
  eval_cmd->add_option("--pred", eval.pred, "Predicted labels")->required();
  eval_cmd->add_option("--gt", eval.gt, "Ground-truth labels")->required();
  eval_cmd->add_option("--report", eval.report, "Report JSON (stdout when omitted)");
  eval_cmd->add_option("--series", eval.series, "Per-frame metric CSV");
  eval_cmd->add_option("--max-dt", eval.max_dt, "Timestamp pairing tolerance in seconds");

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Render a scene into frames, labels and poses");
  sim_cmd->add_option("--scene", sim.scene, "Scene JSON")->required();
  sim_cmd->add_option("--frames-out", sim.frames, "DYNF output");
  sim_cmd->add_option("--labels-out", sim.labels, "Ground-truth labels");
  sim_cmd->add_option("--poses-out", sim.poses, "Ground-truth TUM poses");
  sim_cmd->add_option("--drift-poses-out", sim.drift_poses, "Drift-injected TUM poses");
  sim_cmd->add_option("--drift-t", sim.drift_t, "Translation random walk per frame [m]");
  sim_cmd->add_option("--drift-r-deg", sim.drift_r_deg, "Rotation random walk per frame [deg]");
  sim_cmd->add_option("--drift-seed", sim.drift_seed, "Drift seed");
  sim_cmd->add_option("--limit", sim.limit, "Render at most this many frames");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP backend for the annotation tool");
  serve_cmd->add_option("--frames", serve.frames, "DYNF frame file")->required();
  serve_cmd->add_option("--labels", serve.labels, "Label store (JSON lines)")->required();
  serve_cmd->add_option("--host", serve.host, "Bind address");
  serve_cmd->add_option("--port", serve.port, "Port (0 picks a free one)");
  serve_cmd->add_option("--config", serve.config, "INI configuration file");
  serve_cmd->add_option("--set", serve.overrides, "Override section.key=value (repeatable)");

  std::string convert_in, convert_out;
  auto* convert_cmd = app.add_subcommand("label-convert", "Convert labels between JSON lines and DYNL");
  convert_cmd->add_option("--in", convert_in, "Input labels")->required();
  convert_cmd->add_option("--out", convert_out, "Output (.dynl binary, otherwise JSON lines)")->required();

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try
  {
    if (*run_cmd)
      return cmd_run(run);
    if (*render_cmd)
      return cmd_render(render);
    if (*eval_cmd)
      return cmd_eval(eval);
    if (*sim_cmd)
      return cmd_simulate(sim);
    if (*serve_cmd)
      return cmd_serve(serve);
    if (*convert_cmd)
      return cmd_convert(convert_in, convert_out);
  }
  catch (const ConfigError& e)
  {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  }
  catch (const std::exception& e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
