#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

namespace l2a {

/// T x H x W x C frame stack, row-major, values in [0, 1].
class VideoTensor {
 public:
  VideoTensor() = default;
  VideoTensor(int frames, int height, int width, int channels, float fill = 0.0f);

  int frames() const { return frames_; }
  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }

  std::size_t index(int t, int y, int x, int c) const {
    return ((static_cast<std::size_t>(t) * height_ + y) * width_ + x) * channels_ + c;
  }
  float& at(int t, int y, int x, int c) { return data_[index(t, y, x, c)]; }
  float at(int t, int y, int x, int c) const { return data_[index(t, y, x, c)]; }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  /// Throws DomainError unless every value is finite and inside [0, 1].
  void validate() const;

  bool operator==(const VideoTensor&) const = default;

 private:
  int frames_ = 0;
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// T x H x W binary mask.
class MaskTensor {
 public:
  MaskTensor() = default;
  MaskTensor(int frames, int height, int width, std::uint8_t fill = 0);

  int frames() const { return frames_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return bits_.size(); }

  std::size_t index(int t, int y, int x) const {
    return (static_cast<std::size_t>(t) * height_ + y) * width_ + x;
  }
  std::uint8_t& at(int t, int y, int x) { return bits_[index(t, y, x)]; }
  std::uint8_t at(int t, int y, int x) const { return bits_[index(t, y, x)]; }

  std::span<std::uint8_t> data() { return bits_; }
  std::span<const std::uint8_t> data() const { return bits_; }

  std::size_t count() const;
  void validate() const;

  bool operator==(const MaskTensor&) const = default;

 private:
  int frames_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> bits_;
};

bool same_grid(const VideoTensor& video, const MaskTensor& mask);
bool same_shape(const VideoTensor& a, const VideoTensor& b);
bool same_shape(const MaskTensor& a, const MaskTensor& b);

/// Dense f64 tensor of arbitrary rank, used for model parameters in checkpoints.
struct ParamTensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;
  bool operator==(const ParamTensor&) const = default;
};

using AnyTensor = std::variant<VideoTensor, MaskTensor>;

// Container format: one compact JSON header line {"shape":[...],"dtype":...},
// a newline, then the raw little-endian payload in row-major order.
// Videos are dtype "f32" with shape [T,H,W,C]; masks are "u8" with [T,H,W].
void write_tensor(const std::filesystem::path& path, const VideoTensor& video);
void write_tensor(const std::filesystem::path& path, const MaskTensor& mask);
AnyTensor read_tensor(const std::filesystem::path& path);
VideoTensor read_video(const std::filesystem::path& path);
MaskTensor read_mask(const std::filesystem::path& path);

// Parameter tensors share the container layout with dtype "f64".
void write_param_tensor(const std::filesystem::path& path, const ParamTensor& tensor);
ParamTensor read_param_tensor(const std::filesystem::path& path);

}  // namespace l2a
