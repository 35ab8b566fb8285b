#include "l2a/tensor.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "l2a/common.hpp"

namespace l2a {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

template <typename T>
void append_le(std::string& out, T value) {
  auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.append(bytes.data(), bytes.size());
}

template <typename T>
T load_le(const char* src) {
  std::array<char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), src, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

std::string header_line(const std::vector<std::size_t>& shape, const char* dtype) {
  nlohmann::ordered_json header;
  header["shape"] = shape;
  header["dtype"] = dtype;
  return header.dump() + "\n";
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

struct RawContainer {
  std::vector<std::size_t> shape;
  std::string dtype;
  std::string payload;
};

RawContainer read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::string bytes = std::move(buffer).str();

  const auto newline = bytes.find('\n');
  if (newline == std::string::npos) throw FormatError("missing header line in '" + path.string() + "'");

  RawContainer raw;
  try {
    const auto header = nlohmann::json::parse(bytes.substr(0, newline));
    if (!header.is_object() || !header.contains("shape") || !header.contains("dtype") ||
        header.size() != 2) {
      throw FormatError("header must hold exactly 'shape' and 'dtype'");
    }
    raw.shape = header.at("shape").get<std::vector<std::size_t>>();
    raw.dtype = header.at("dtype").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed tensor header in '" + path.string() + "': " + e.what());
  }
  raw.payload = bytes.substr(newline + 1);
  return raw;
}

std::size_t element_count(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

void check_payload(const RawContainer& raw, std::size_t elem_size, const std::filesystem::path& path) {
  const std::size_t expected = element_count(raw.shape) * elem_size;
  if (raw.payload.size() < expected) {
    throw FormatError("truncated payload in '" + path.string() + "': expected " + std::to_string(expected) +
                      " bytes, found " + std::to_string(raw.payload.size()));
  }
  if (raw.payload.size() > expected) {
    throw FormatError("trailing bytes after payload in '" + path.string() + "'");
  }
}

int checked_dim(std::size_t d) {
  if (d < 1 || d > (1u << 24)) throw FormatError("tensor dimension out of range");
  return static_cast<int>(d);
}

VideoTensor decode_video(const RawContainer& raw, const std::filesystem::path& path) {
  if (raw.shape.size() != 4) throw FormatError("video tensor must have rank 4");
  check_payload(raw, sizeof(float), path);
  VideoTensor video(checked_dim(raw.shape[0]), checked_dim(raw.shape[1]), checked_dim(raw.shape[2]),
                    checked_dim(raw.shape[3]));
  auto data = video.data();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = load_le<float>(raw.payload.data() + i * sizeof(float));
  video.validate();
  return video;
}

MaskTensor decode_mask(const RawContainer& raw, const std::filesystem::path& path) {
  if (raw.shape.size() != 3) throw FormatError("mask tensor must have rank 3");
  check_payload(raw, 1, path);
  MaskTensor mask(checked_dim(raw.shape[0]), checked_dim(raw.shape[1]), checked_dim(raw.shape[2]));
  auto bits = mask.data();
  std::memcpy(bits.data(), raw.payload.data(), bits.size());
  mask.validate();
  return mask;
}

}  // namespace

VideoTensor::VideoTensor(int frames, int height, int width, int channels, float fill)
    : frames_(frames), height_(height), width_(width), channels_(channels) {
  if (frames < 1 || height < 1 || width < 1 || channels < 1) throw ShapeError("video dimensions must be >= 1");
  data_.assign(static_cast<std::size_t>(frames) * height * width * channels, fill);
}

void VideoTensor::validate() const {
  for (float v : data_) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
      throw DomainError("video value " + std::to_string(v) + " outside [0,1]");
    }
  }
}

MaskTensor::MaskTensor(int frames, int height, int width, std::uint8_t fill)
    : frames_(frames), height_(height), width_(width) {
  if (frames < 1 || height < 1 || width < 1) throw ShapeError("mask dimensions must be >= 1");
  if (fill > 1) throw DomainError("mask fill must be 0 or 1");
  bits_.assign(static_cast<std::size_t>(frames) * height * width, fill);
}

std::size_t MaskTensor::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

void MaskTensor::validate() const {
  for (auto b : bits_) {
    if (b > 1) throw DomainError("mask value " + std::to_string(b) + " is not binary");
  }
}

bool same_grid(const VideoTensor& video, const MaskTensor& mask) {
  return video.frames() == mask.frames() && video.height() == mask.height() && video.width() == mask.width();
}

bool same_shape(const VideoTensor& a, const VideoTensor& b) {
  return a.frames() == b.frames() && a.height() == b.height() && a.width() == b.width() &&
         a.channels() == b.channels();
}

bool same_shape(const MaskTensor& a, const MaskTensor& b) {
  return a.frames() == b.frames() && a.height() == b.height() && a.width() == b.width();
}

void write_tensor(const std::filesystem::path& path, const VideoTensor& video) {
  video.validate();
  std::string bytes = header_line({static_cast<std::size_t>(video.frames()), static_cast<std::size_t>(video.height()),
                                   static_cast<std::size_t>(video.width()), static_cast<std::size_t>(video.channels())},
                                  "f32");
  bytes.reserve(bytes.size() + video.size() * sizeof(float));
  for (float v : video.data()) append_le(bytes, v);
  write_file(path, bytes);
}

void write_tensor(const std::filesystem::path& path, const MaskTensor& mask) {
  mask.validate();
  std::string bytes = header_line({static_cast<std::size_t>(mask.frames()), static_cast<std::size_t>(mask.height()),
                                   static_cast<std::size_t>(mask.width())},
                                  "u8");
  const auto bits = mask.data();
  bytes.append(reinterpret_cast<const char*>(bits.data()), bits.size());
  write_file(path, bytes);
}

AnyTensor read_tensor(const std::filesystem::path& path) {
  const RawContainer raw = read_container(path);
  if (raw.dtype == "f32") return decode_video(raw, path);
  if (raw.dtype == "u8") return decode_mask(raw, path);
  throw FormatError("unsupported dtype '" + raw.dtype + "' in '" + path.string() + "'");
}

VideoTensor read_video(const std::filesystem::path& path) {
  auto any = read_tensor(path);
  if (auto* video = std::get_if<VideoTensor>(&any)) return std::move(*video);
  throw FormatError("'" + path.string() + "' holds a mask, expected a video");
}

MaskTensor read_mask(const std::filesystem::path& path) {
  auto any = read_tensor(path);
  if (auto* mask = std::get_if<MaskTensor>(&any)) return std::move(*mask);
  throw FormatError("'" + path.string() + "' holds a video, expected a mask");
}

void write_param_tensor(const std::filesystem::path& path, const ParamTensor& tensor) {
  if (element_count(tensor.shape) != tensor.values.size()) throw ShapeError("parameter shape does not match values");
  std::string bytes = header_line(tensor.shape, "f64");
  for (double v : tensor.values) {
    if (!std::isfinite(v)) throw DomainError("non-finite parameter value");
    append_le(bytes, v);
  }
  write_file(path, bytes);
}

ParamTensor read_param_tensor(const std::filesystem::path& path) {
  const RawContainer raw = read_container(path);
  if (raw.dtype != "f64") throw FormatError("expected dtype f64 in '" + path.string() + "'");
  check_payload(raw, sizeof(double), path);
  ParamTensor tensor;
  tensor.shape = raw.shape;
  tensor.values.resize(element_count(raw.shape));
  for (std::size_t i = 0; i < tensor.values.size(); ++i) {
    tensor.values[i] = load_le<double>(raw.payload.data() + i * sizeof(double));
  }
  return tensor;
}

}  // namespace l2a
