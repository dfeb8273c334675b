#include "dynoscan/label_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "dynoscan/errors.hpp"

namespace dynoscan {

namespace {

constexpr char kLabelMagic[4] = {'D', 'Y', 'N', 'L'};

template <typename T>
void put(std::ostream& out, T value)
{
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

}  // namespace

std::string to_json_line(const DynamicLabel& label)
{
  nlohmann::ordered_json j;
  j["t"] = label.t;
  j["idx"] = label.idx;
  return j.dump();
}

DynamicLabel parse_json_line(const std::string& line)
{
  nlohmann::json j;
  try
  {
    j = nlohmann::json::parse(line);
  }
  catch (const nlohmann::json::parse_error& e)
  {
    throw FormatError(std::string("label line is not JSON: ") + e.what(), e.byte);
  }
  if (!j.is_object() || !j.contains("t") || !j.contains("idx") || !j["t"].is_number() || !j["idx"].is_array())
    throw FormatError("label line needs numeric \"t\" and array \"idx\"");
  DynamicLabel label;
  label.t = j["t"].get<double>();
  for (const auto& v : j["idx"])
  {
    if (!v.is_number_unsigned())
      throw FormatError("label indices must be non-negative integers");
    label.idx.push_back(v.get<std::uint32_t>());
  }
  normalize(label);
  return label;
}

std::vector<DynamicLabel> read_labels_jsonl(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open label file " + path.string());
  std::vector<DynamicLabel> labels;
  std::string line;
  std::uint64_t offset = 0;
  while (std::getline(in, line))
  {
    const std::uint64_t start = offset;
    offset += line.size() + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    try
    {
      labels.push_back(parse_json_line(line));
    }
    catch (const FormatError& e)
    {
      throw FormatError(std::string(e.what()) + " in line " + std::to_string(labels.size() + 1), start);
    }
  }
  return labels;
}

void write_labels_jsonl(const std::vector<DynamicLabel>& labels, const std::filesystem::path& path)
{
  std::string out;
  for (const auto& l : labels)
  {
    out += to_json_line(l);
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<DynamicLabel> read_labels_binary(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open label file " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0);
  char magic[4] = {};
  if (size < 4 || !in.read(magic, 4) || std::memcmp(magic, kLabelMagic, 4) != 0)
    throw FormatError("bad label file magic", 0);

  std::vector<DynamicLabel> labels;
  std::uint64_t offset = 4;
  while (offset < size)
  {
    if (size - offset < 12)
      throw FormatError("truncated label record " + std::to_string(labels.size()), offset);
    DynamicLabel l;
    std::uint32_t count = 0;
    in.read(reinterpret_cast<char*>(&l.t), 8);
    in.read(reinterpret_cast<char*>(&count), 4);
    if (size - offset - 12 < static_cast<std::uint64_t>(count) * 4)
      throw FormatError("truncated label indices in record " + std::to_string(labels.size()), offset + 8);
    l.idx.resize(count);
    in.read(reinterpret_cast<char*>(l.idx.data()), static_cast<std::streamsize>(count) * 4);
    offset += 12 + static_cast<std::uint64_t>(count) * 4;
    labels.push_back(std::move(l));
  }
  return labels;
}

void write_labels_binary(const std::vector<DynamicLabel>& labels, const std::filesystem::path& path)
{
  std::ostringstream out;
  out.write(kLabelMagic, 4);
  for (const auto& l : labels)
  {
    put(out, l.t);
    put(out, static_cast<std::uint32_t>(l.idx.size()));
    out.write(reinterpret_cast<const char*>(l.idx.data()), static_cast<std::streamsize>(l.idx.size() * 4));
  }
  write_file_atomic(path, out.str());
}

std::vector<DynamicLabel> read_labels(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open label file " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() == 4 && std::memcmp(magic, kLabelMagic, 4) == 0)
    return read_labels_binary(path);
  return read_labels_jsonl(path);
}

void write_labels(const std::vector<DynamicLabel>& labels, const std::filesystem::path& path)
{
  const auto ext = path.extension();
  if (ext == ".dynl" || ext == ".bin")
    write_labels_binary(labels, path);
  else
    write_labels_jsonl(labels, path);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents)
{
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw IoError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out)
      throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec)
    throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace dynoscan
