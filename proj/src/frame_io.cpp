#include "dynoscan/frame_io.hpp"

#include <bit>
#include <cstring>
#include <sstream>
#include <string>

#include "dynoscan/errors.hpp"

static_assert(std::endian::native == std::endian::little, "frame IO assumes a little-endian host");

namespace dynoscan {

namespace {

constexpr std::uint64_t kHeaderBytes = 8;
constexpr std::uint64_t kRecordHeaderBytes = 12;
constexpr std::uint64_t kPointBytes = 16;

template <typename T>
void put(std::ostream& out, T value)
{
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

std::string frame_label(std::size_t index) { return "frame " + std::to_string(index); }

}  // namespace

FrameReader::FrameReader(const std::filesystem::path& path) : in_(path, std::ios::binary)
{
  if (!in_)
    throw IoError("cannot open frame file " + path.string());
  in_.seekg(0, std::ios::end);
  file_size_ = static_cast<std::uint64_t>(in_.tellg());
  in_.seekg(0, std::ios::beg);

  if (file_size_ < kHeaderBytes)
    throw FormatError("frame file too short for header", 0);
  char magic[4];
  std::uint32_t version = 0;
  in_.read(magic, 4);
  in_.read(reinterpret_cast<char*>(&version), 4);
  if (std::memcmp(magic, kFrameMagic, 4) != 0)
    throw FormatError("bad frame file magic", 0);
  if (version != kFrameVersion)
    throw FormatError("unsupported frame file version " + std::to_string(version), 4);
  offset_ = kHeaderBytes;
}

std::optional<PointFrame> FrameReader::next()
{
  if (offset_ == file_size_)
    return std::nullopt;
  if (file_size_ - offset_ < kRecordHeaderBytes)
    throw FormatError("truncated record header in " + frame_label(frame_index_), offset_);

  PointFrame frame;
  std::uint32_t count = 0;
  in_.read(reinterpret_cast<char*>(&frame.timestamp), 8);
  in_.read(reinterpret_cast<char*>(&count), 4);
  const std::uint64_t payload = static_cast<std::uint64_t>(count) * kPointBytes;
  if (file_size_ - offset_ - kRecordHeaderBytes < payload)
    throw FormatError("truncated point data in " + frame_label(frame_index_) + " (declared " +
                        std::to_string(count) + " points)",
                      offset_ + 8);

  frame.points.resize(count);
  static_assert(sizeof(Point3) == kPointBytes);
  in_.read(reinterpret_cast<char*>(frame.points.data()), static_cast<std::streamsize>(payload));
  if (!in_)
    throw FormatError("read failure in " + frame_label(frame_index_), offset_);
  offset_ += kRecordHeaderBytes + payload;
  ++frame_index_;
  return frame;
}

FrameWriter::FrameWriter(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc)
{
  if (!out_)
    throw IoError("cannot write frame file " + path.string());
  out_.write(kFrameMagic, 4);
  put(out_, kFrameVersion);
}

void FrameWriter::write(const PointFrame& frame)
{
  put(out_, frame.timestamp);
  put(out_, static_cast<std::uint32_t>(frame.points.size()));
  out_.write(reinterpret_cast<const char*>(frame.points.data()),
             static_cast<std::streamsize>(frame.points.size() * kPointBytes));
  if (!out_)
    throw IoError("frame write failed");
}

void FrameWriter::close()
{
  out_.close();
  if (out_.fail())
    throw IoError("frame file close failed");
}

std::vector<PointFrame> read_frames(const std::filesystem::path& path)
{
  FrameReader reader(path);
  std::vector<PointFrame> frames;
  while (auto f = reader.next())
    frames.push_back(std::move(*f));
  return frames;
}

void write_frames(const std::vector<PointFrame>& frames, const std::filesystem::path& path)
{
  FrameWriter writer(path);
  for (const auto& f : frames)
    writer.write(f);
  writer.close();
}

std::vector<PointFrame> read_csv_frames(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open csv " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw FormatError("empty csv file", 0);
  if (!line.empty() && line.back() == '\r')
    line.pop_back();
  if (line != "t,x,y,z,intensity")
    throw FormatError("csv header must be t,x,y,z,intensity", 0);

  std::vector<PointFrame> frames;
  std::uint64_t offset = line.size() + 1;
  std::size_t row = 1;
  while (std::getline(in, line))
  {
    ++row;
    const std::uint64_t line_start = offset;
    offset += line.size() + 1;
    if (line.empty() || line == "\r")
      continue;
    std::istringstream ss(line);
    double t = 0;
    double vals[4];
    char comma = 0;
    ss >> t;
    bool ok = static_cast<bool>(ss);
    for (double& v : vals)
    {
      ss >> comma >> v;
      ok = ok && ss && comma == ',';
    }
    if (!ok)
      throw FormatError("malformed csv row " + std::to_string(row), line_start);
    if (frames.empty() || frames.back().timestamp != t)
    {
      if (!frames.empty() && t < frames.back().timestamp)
        throw FormatError("csv timestamps must be non-decreasing (row " + std::to_string(row) + ")",
                          line_start);
      frames.push_back(PointFrame{t, {}});
    }
    frames.back().points.push_back(Point3{static_cast<float>(vals[0]), static_cast<float>(vals[1]),
                                          static_cast<float>(vals[2]), static_cast<float>(vals[3])});
  }
  return frames;
}

std::vector<PointFrame> load_frames(const std::filesystem::path& path)
{
  if (path.extension() == ".csv")
    return read_csv_frames(path);
  return read_frames(path);
}

std::vector<std::uint64_t> index_frames(const std::filesystem::path& path)
{
  FrameReader check(path);  // validates the header
  std::ifstream in(path, std::ios::binary);
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::uint64_t>(in.tellg());
  std::vector<std::uint64_t> offsets;
  std::uint64_t offset = kHeaderBytes;
  while (offset < size)
  {
    if (size - offset < kRecordHeaderBytes)
      throw FormatError("truncated record header in " + frame_label(offsets.size()), offset);
    std::uint32_t count = 0;
    in.seekg(static_cast<std::streamoff>(offset + 8));
    in.read(reinterpret_cast<char*>(&count), 4);
    const std::uint64_t end = offset + kRecordHeaderBytes + count * kPointBytes;
    if (end > size)
      throw FormatError("truncated point data in " + frame_label(offsets.size()), offset + 8);
    offsets.push_back(offset);
    offset = end;
  }
  return offsets;
}

PointFrame read_frame_at(const std::filesystem::path& path, std::uint64_t offset)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open frame file " + path.string());
  in.seekg(static_cast<std::streamoff>(offset));
  PointFrame frame;
  std::uint32_t count = 0;
  in.read(reinterpret_cast<char*>(&frame.timestamp), 8);
  in.read(reinterpret_cast<char*>(&count), 4);
  frame.points.resize(count);
  in.read(reinterpret_cast<char*>(frame.points.data()), static_cast<std::streamsize>(count * kPointBytes));
  if (!in)
    throw FormatError("truncated frame record", offset);
  return frame;
}

}  // namespace dynoscan
