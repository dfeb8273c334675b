#include "dynoscan/serve.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <list>
#include <map>
#include <mutex>

#include "httplib.h"
#include "json.hpp"

#include "dynoscan/errors.hpp"
#include "dynoscan/foreground.hpp"
#include "dynoscan/frame_io.hpp"
#include "dynoscan/label_io.hpp"
#include "dynoscan/render.hpp"
#include "dynoscan/segmentation.hpp"

namespace dynoscan {

namespace {

struct FrameData
{
  PointFrame frame;
  IntensityImage image;
  GroundPlane plane;
};

constexpr std::size_t kCacheSize = 8;

}  // namespace

struct AnnotationServer::Impl
{
  std::filesystem::path frames_path;
  std::filesystem::path labels_path;
  PipelineConfig config;
  GaussianKernel kernel;
  std::vector<std::uint64_t> offsets;
  std::vector<double> timestamps;

  std::mutex cache_mutex;
  std::list<std::pair<std::size_t, std::shared_ptr<const FrameData>>> cache;

  std::mutex label_mutex;
  std::map<std::size_t, DynamicLabel> labels;

  httplib::Server server;

  std::shared_ptr<const FrameData> load(std::size_t i)
  {
    {
      std::lock_guard lock(cache_mutex);
      for (auto it = cache.begin(); it != cache.end(); ++it)
        if (it->first == i)
        {
          cache.splice(cache.begin(), cache, it);
          return cache.front().second;
        }
    }
    auto data = std::make_shared<FrameData>();
    data->frame = read_frame_at(frames_path, offsets[i]);
    data->image = project(data->frame, config.sensor);
    data->plane = estimate_ground_plane(data->frame, config.ground);
    std::lock_guard lock(cache_mutex);
    cache.emplace_front(i, data);
    if (cache.size() > kCacheSize)
      cache.pop_back();
    return data;
  }

  std::optional<std::size_t> frame_for_time(double t) const
  {
    const double tolerance = 0.5 / config.sensor.rate_hz;
    auto it = std::lower_bound(timestamps.begin(), timestamps.end(), t);
    std::optional<std::size_t> best;
    double best_dt = tolerance;
    for (auto c : {it, it == timestamps.begin() ? it : std::prev(it)})
      if (c != timestamps.end() && std::abs(*c - t) <= best_dt)
      {
        best_dt = std::abs(*c - t);
        best = static_cast<std::size_t>(c - timestamps.begin());
      }
    return best;
  }

  void persist_locked()
  {
    std::vector<DynamicLabel> out;
    out.reserve(labels.size());
    for (const auto& [i, l] : labels)
      out.push_back(l);
    write_labels_jsonl(out, labels_path);
  }

  void install_routes();
};

namespace {

void send_json(httplib::Response& res, const nlohmann::json& body, int status = 200)
{
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message)
{
  send_json(res, {{"error", message}}, status);
}

std::optional<std::size_t> parse_index(const std::string& text, std::size_t count)
{
  if (text.size() > 12)
    return std::nullopt;
  const auto i = static_cast<std::size_t>(std::stoull(text));
  if (i >= count)
    return std::nullopt;
  return i;
}

}  // namespace

void AnnotationServer::Impl::install_routes()
{
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try
    {
      std::rethrow_exception(ep);
    }
    catch (const std::exception& e)
    {
      send_error(res, 500, e.what());
    }
  });

  // Resolves the frame index of a /frames/{i}/... or /labels/{i} request, answering 404 when invalid.
  auto frame_index = [this](const httplib::Request& req, httplib::Response& res) -> std::optional<std::size_t> {
    auto i = parse_index(req.matches[1], offsets.size());
    if (!i)
      send_error(res, 404, "frame index out of range");
    return i;
  };

  server.Get("/meta", [this](const httplib::Request&, httplib::Response& res) {
    const auto& s = config.sensor;
    send_json(res, {{"sensor",
                     {{"width", s.width},
                      {"height", s.height},
                      {"beta_up", s.beta_up},
                      {"beta_fov", s.beta_fov},
                      {"rate_hz", s.rate_hz}}},
                    {"frames", offsets.size()},
                    {"grow_eps", config.grow.eps}});
  });

  server.Get(R"(/frames/(\d+)/intensity\.png)", [this, frame_index](const httplib::Request& req,
                                                                      httplib::Response& res) {
    auto i = frame_index(req, res);
    if (!i)
      return;
    const auto data = load(*i);
    const auto gray = normalize_to_8bit(data->image);
    res.set_content(encode_png_gray(gray, data->image.width(), data->image.height()), "image/png");
  });

  server.Get(R"(/frames/(\d+)/range\.bin)", [this, frame_index](const httplib::Request& req, httplib::Response& res) {
    auto i = frame_index(req, res);
    if (!i)
      return;
    const auto data = load(*i);
    std::string body(data->image.size() * sizeof(float), '\0');
    for (std::size_t p = 0; p < data->image.size(); ++p)
    {
      const float r = data->image.occupied(p) ? static_cast<float>(data->image.range(p)) : 0.f;
      std::memcpy(body.data() + p * sizeof(float), &r, sizeof(float));
    }
    res.set_content(body, "application/octet-stream");
  });

  server.Get(R"(/frames/(\d+)/foreground)", [this, frame_index](const httplib::Request& req,
                                                                  httplib::Response& res) {
    auto i = frame_index(req, res);
    if (!i)
      return;
    const auto data = load(*i);
    const ForegroundSet fg = extract_foreground(data->frame, data->image, kernel, config.theta);
    std::vector<std::uint32_t> indices;
    for (std::size_t p = 0; p < fg.mask.size(); ++p)
      if (fg.mask[p])
        indices.push_back(static_cast<std::uint32_t>(p));
    send_json(res, {{"indices", indices}});
  });

  server.Post(R"(/frames/(\d+)/grow)", [this, frame_index](const httplib::Request& req, httplib::Response& res) {
    auto i = frame_index(req, res);
    if (!i)
      return;
    nlohmann::json body;
    try
    {
      body = nlohmann::json::parse(req.body);
    }
    catch (const nlohmann::json::parse_error&)
    {
      return send_error(res, 400, "body is not JSON");
    }
    if (!body.is_object() || !body.contains("u") || !body.contains("v") || !body["u"].is_number_integer() ||
        !body["v"].is_number_integer() || (body.contains("eps") && !body["eps"].is_number()))
      return send_error(res, 400, "body needs integer u, v and optional numeric eps");
    const auto data = load(*i);
    const long u = body["u"].get<long>();
    const long v = body["v"].get<long>();
    if (u < 0 || v < 0 || u >= data->image.width() || v >= data->image.height())
      return send_error(res, 400, "pixel outside the image");
    GrowParams params = config.grow;
    if (body.contains("eps"))
      params.eps = body["eps"].get<double>();
    if (!(params.eps > 0.0))
      return send_error(res, 400, "eps must be positive");
    if (!data->image.occupied(static_cast<int>(u), static_cast<int>(v)))
      return send_error(res, 422, "pixel is empty");
    const Pixel seed{static_cast<int>(u), static_cast<int>(v)};
    const GrowResult grown =
      region_grow(data->image, data->frame, std::span(&seed, 1), data->plane, params, data->frame.timestamp);
    send_json(res, {{"indices", grown.label.idx}, {"truncated", grown.truncated}});
  });

  server.Get(R"(/labels/(\d+))", [this, frame_index](const httplib::Request& req, httplib::Response& res) {
    auto i = frame_index(req, res);
    if (!i)
      return;
    std::lock_guard lock(label_mutex);
    auto it = labels.find(*i);
    if (it == labels.end())
      return send_error(res, 404, "frame is not labeled");
    res.set_content(to_json_line(it->second), "application/json");
  });

  server.Put(R"(/labels/(\d+))", [this, frame_index](const httplib::Request& req, httplib::Response& res) {
    auto i = frame_index(req, res);
    if (!i)
      return;
    nlohmann::json body;
    try
    {
      body = nlohmann::json::parse(req.body);
    }
    catch (const nlohmann::json::parse_error&)
    {
      return send_error(res, 400, "body is not JSON");
    }
    if (!body.is_object() || !body.contains("idx") || !body["idx"].is_array() ||
        (body.contains("t") && !body["t"].is_number()))
      return send_error(res, 400, "body needs array idx and optional numeric t");
    DynamicLabel label;
    label.t = timestamps[*i];
    if (body.contains("t"))
    {
      const double t = body["t"].get<double>();
      if (std::abs(t - label.t) > 1e-6)
        return send_error(res, 400, "label timestamp does not match the frame");
      label.t = t;
    }
    const std::size_t pixels = config.sensor.pixel_count();
    for (const auto& v : body["idx"])
    {
      if (!v.is_number_unsigned() || v.get<std::uint64_t>() >= pixels)
        return send_error(res, 400, "label indices must be pixel indices of this sensor");
      label.idx.push_back(v.get<std::uint32_t>());
    }
    normalize(label);
    std::lock_guard lock(label_mutex);
    labels[*i] = label;
    persist_locked();
    res.set_content(to_json_line(label), "application/json");
  });
}

AnnotationServer::AnnotationServer(std::filesystem::path frames, std::filesystem::path labels, PipelineConfig config)
    : impl_(std::make_unique<Impl>())
{
  config.validate();
  impl_->frames_path = std::move(frames);
  impl_->labels_path = std::move(labels);
  impl_->config = std::move(config);
  impl_->kernel = build_kernel(impl_->config.kernel_a, impl_->config.kernel_b, impl_->config.sigma_m,
                               impl_->config.sigma_n);
  impl_->offsets = index_frames(impl_->frames_path);

  std::ifstream in(impl_->frames_path, std::ios::binary);
  for (std::uint64_t off : impl_->offsets)
  {
    double t = 0.0;
    in.seekg(static_cast<std::streamoff>(off));
    in.read(reinterpret_cast<char*>(&t), sizeof(t));
    impl_->timestamps.push_back(t);
  }

  if (std::filesystem::exists(impl_->labels_path))
    for (auto& l : read_labels(impl_->labels_path))
      if (auto i = impl_->frame_for_time(l.t))
        impl_->labels[*i] = std::move(l);

  impl_->install_routes();
}

AnnotationServer::~AnnotationServer()
{
  stop();
}

std::size_t AnnotationServer::frame_count() const
{
  return impl_->offsets.size();
}

int AnnotationServer::bind(const std::string& host, int port)
{
  if (port == 0)
    return impl_->server.bind_to_any_port(host);
  if (!impl_->server.bind_to_port(host, port))
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void AnnotationServer::run()
{
  impl_->server.listen_after_bind();
}

void AnnotationServer::stop()
{
  impl_->server.stop();
}

}  // namespace dynoscan
