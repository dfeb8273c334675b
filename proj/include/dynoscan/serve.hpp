#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "dynoscan/config.hpp"

namespace dynoscan {

/// HTTP backend for the annotation tool.
///
///   GET  /meta                     sensor model, frame count, default grow eps
///   GET  /frames/{i}/intensity.png 8-bit normalized intensity
///   GET  /frames/{i}/range.bin     w*h little-endian f32 ranges, 0 on empty pixels
///   GET  /frames/{i}/foreground    {"indices": [...]} foreground mask pixels
///   POST /frames/{i}/grow          {"u","v","eps"?} -> {"indices": [...], "truncated": bool}
///   GET  /labels/{i}               stored label as one JSON line, 404 when unlabeled
///   PUT  /labels/{i}               {"t"?, "idx"} stored and persisted
///
/// Labels are kept in one JSON-lines file rewritten atomically on every PUT.
class AnnotationServer
{
public:
  AnnotationServer(std::filesystem::path frames, std::filesystem::path labels, PipelineConfig config);
  ~AnnotationServer();

  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  std::size_t frame_count() const;

  /// Binds the listening socket; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); requires a successful bind().
  void run();
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dynoscan
