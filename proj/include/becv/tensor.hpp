#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace becv {

/// Dense CHW tensor of 32-bit floats (batch is always 1).
class Tensor {
 public:
  Tensor() = default;
  Tensor(int channels, int height, int width, float fill = 0.0f);
  Tensor(int channels, int height, int width, std::vector<float> values);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return values_.size(); }
  std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }
  bool empty() const { return values_.empty(); }

  float& at(int c, int y, int x) { return values_[index(c, y, x)]; }
  float at(int c, int y, int x) const { return values_[index(c, y, x)]; }

  std::span<float> data() { return values_; }
  std::span<const float> data() const { return values_; }
  std::span<float> plane(int c) { return data().subspan(c * plane_size(), plane_size()); }
  std::span<const float> plane(int c) const {
    return data().subspan(c * plane_size(), plane_size());
  }

  bool same_shape(const Tensor& other) const {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }
  std::string shape_string() const;

  bool operator==(const Tensor& other) const = default;

 private:
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<float> values_;
};

/// Two-channel displacement field: channel 0 is dx, channel 1 is dy, in pixels.
/// A flow v attached to a reference r means "sample r at p + v(p)".
class FlowField {
 public:
  FlowField() = default;
  FlowField(int height, int width) : vectors_(2, height, width) {}
  explicit FlowField(Tensor vectors);

  static FlowField constant(int height, int width, float dx, float dy);

  int height() const { return vectors_.height(); }
  int width() const { return vectors_.width(); }
  float& dx(int y, int x) { return vectors_.at(0, y, x); }
  float& dy(int y, int x) { return vectors_.at(1, y, x); }
  float dx(int y, int x) const { return vectors_.at(0, y, x); }
  float dy(int y, int x) const { return vectors_.at(1, y, x); }

  const Tensor& tensor() const { return vectors_; }
  Tensor& tensor() { return vectors_; }

  bool operator==(const FlowField&) const = default;

 private:
  Tensor vectors_{2, 0, 0};
};

/// Convolution weights in OIHW layout. Depthwise kernels store one filter per
/// channel (in_channels == 1 in the layout sense; `groups` equals out_channels).
struct ConvWeights {
  int out_channels = 0;
  int in_channels = 0;
  int kernel = 1;
  std::vector<float> weight;
  std::vector<float> bias;

  static ConvWeights zeros(int out_channels, int in_channels, int kernel);
  float& w(int o, int i, int ky, int kx) {
    return weight[((static_cast<std::size_t>(o) * in_channels + i) * kernel + ky) * kernel + kx];
  }
  float w(int o, int i, int ky, int kx) const {
    return weight[((static_cast<std::size_t>(o) * in_channels + i) * kernel + ky) * kernel + kx];
  }
};

enum class ConvKind { full, pointwise, depthwise };

/// Zero-padded ("same") convolution. Stride 1 keeps spatial dims; stride 2
/// produces ceil(dim / 2). For `depthwise`, weights hold one kernel per channel
/// (in_channels must be 1 and out_channels must equal the input channel count).
Tensor conv2d(const Tensor& input, const ConvWeights& weights, int stride, ConvKind kind);

/// Row-major real matrix.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<float> values;

  Matrix() = default;
  Matrix(int r, int c, float fill = 0.0f)
      : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, fill) {}
  float& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  float at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
};

enum class Axis { rows, cols };

/// Softmax along each row (`Axis::rows`: every row sums to 1) or each column.
/// Max-subtracted for stability.
Matrix softmax(const Matrix& m, Axis axis);

/// Bilinear backward warp: out(p) = feature sampled at p + flow(p), with the
/// sampling position clamped to the image border.
Tensor warp_bilinear(const Tensor& feature, const FlowField& flow);

enum class Resample { down2, up2 };

/// down2: 2x2 average pooling (even dims required). up2: bilinear, half-pixel centers.
Tensor resample(const Tensor& t, Resample factor);

enum class Activation { sigmoid, leaky_relu };

inline constexpr float kLeakySlope = 0.01f;

/// Elementwise activation. Sigmoid output is clamped to the open interval (0, 1)
/// so saturated inputs never produce exactly 0 or 1.
Tensor activate(const Tensor& t, Activation kind);
float sigmoid(float x);

// Channel and elementwise helpers.
Tensor concat_channels(std::span<const Tensor* const> parts);
Tensor slice_channels(const Tensor& t, int begin, int count);
Tensor add(const Tensor& a, const Tensor& b);
Tensor multiply(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& t, float factor);

/// (C*4, H, W) -> (C, 2H, 2W): out(c, 2y+a, 2x+b) = in(4c + 2a + b, y, x).
Tensor pixel_shuffle(const Tensor& t);
/// Inverse of pixel_shuffle.
Tensor pixel_unshuffle(const Tensor& t);

/// Edge-replicating pad / crop used to bring frames to the codec's size grid.
Tensor pad_to(const Tensor& t, int height, int width);
Tensor crop(const Tensor& t, int height, int width);

bool all_finite(const Tensor& t);
float max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace becv
