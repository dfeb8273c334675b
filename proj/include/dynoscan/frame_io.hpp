#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <vector>

#include "dynoscan/frame_model.hpp"

namespace dynoscan {

// Frame file layout (little-endian):
//   "DYNF" u32 version=1
//   per frame: f64 timestamp, u32 count, count x (f32 x, f32 y, f32 z, f32 intensity)

inline constexpr char kFrameMagic[4] = {'D', 'Y', 'N', 'F'};
inline constexpr std::uint32_t kFrameVersion = 1;

/// Streams frames one at a time so long sequences never sit in memory.
class FrameReader
{
public:
  explicit FrameReader(const std::filesystem::path& path);

  /// Next frame, or nullopt at a clean end of file. Throws FormatError on
  /// truncation, naming the frame index and byte offset.
  std::optional<PointFrame> next();

  std::size_t frames_read() const { return frame_index_; }

private:
  std::ifstream in_;
  std::uint64_t offset_ = 0;
  std::size_t frame_index_ = 0;
  std::uint64_t file_size_ = 0;
};

class FrameWriter
{
public:
  explicit FrameWriter(const std::filesystem::path& path);
  void write(const PointFrame& frame);
  void close();

private:
  std::ofstream out_;
};

std::vector<PointFrame> read_frames(const std::filesystem::path& path);
void write_frames(const std::vector<PointFrame>& frames, const std::filesystem::path& path);

/// CSV with header `t,x,y,z,intensity`; consecutive rows with equal t form a frame.
std::vector<PointFrame> read_csv_frames(const std::filesystem::path& path);

/// Dispatches on extension: `.csv` goes through the CSV importer, anything else is DYNF.
std::vector<PointFrame> load_frames(const std::filesystem::path& path);

/// Byte offsets of each frame record in a DYNF file, for random access.
std::vector<std::uint64_t> index_frames(const std::filesystem::path& path);
PointFrame read_frame_at(const std::filesystem::path& path, std::uint64_t offset);

}  // namespace dynoscan
