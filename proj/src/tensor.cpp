#include "becv/tensor.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <sstream>

#include "becv/error.hpp"

namespace becv {

namespace {

std::string dims(int c, int h, int w) {
  std::ostringstream os;
  os << c << "x" << h << "x" << w;
  return os.str();
}

// Output range [lo, hi) of ox for which ix = ox * stride + offset lies in [0, n).
void valid_range(int out_n, int n, int stride, int offset, int& lo, int& hi) {
  lo = 0;
  while (lo < out_n && lo * stride + offset < 0) ++lo;
  hi = out_n;
  while (hi > lo && (hi - 1) * stride + offset >= n) --hi;
}

}  // namespace

Tensor::Tensor(int channels, int height, int width, float fill)
    : channels_(channels),
      height_(height),
      width_(width),
      values_(static_cast<std::size_t>(channels) * height * width, fill) {
  if (channels < 0 || height < 0 || width < 0) throw ShapeError("negative tensor dimension");
}

Tensor::Tensor(int channels, int height, int width, std::vector<float> values)
    : channels_(channels), height_(height), width_(width), values_(std::move(values)) {
  if (values_.size() != static_cast<std::size_t>(channels) * height * width) {
    throw ShapeError("tensor data length " + std::to_string(values_.size()) +
                     " does not match " + dims(channels, height, width));
  }
}

std::string Tensor::shape_string() const { return dims(channels_, height_, width_); }

FlowField::FlowField(Tensor vectors) : vectors_(std::move(vectors)) {
  if (vectors_.channels() != 2) {
    throw ShapeError("flow field needs 2 channels, got " + vectors_.shape_string());
  }
}

FlowField FlowField::constant(int height, int width, float dx, float dy) {
  FlowField f(height, width);
  std::ranges::fill(f.tensor().plane(0), dx);
  std::ranges::fill(f.tensor().plane(1), dy);
  return f;
}

ConvWeights ConvWeights::zeros(int out_channels, int in_channels, int kernel) {
  ConvWeights cw;
  cw.out_channels = out_channels;
  cw.in_channels = in_channels;
  cw.kernel = kernel;
  cw.weight.assign(static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel, 0.0f);
  cw.bias.assign(out_channels, 0.0f);
  return cw;
}

Tensor conv2d(const Tensor& input, const ConvWeights& weights, int stride, ConvKind kind) {
  if (stride != 1 && stride != 2) throw ShapeError("conv2d stride must be 1 or 2");
  const int k = weights.kernel;
  if (k < 1 || k % 2 == 0) throw ShapeError("conv2d kernel must be odd, got " + std::to_string(k));
  if (kind == ConvKind::pointwise && k != 1) throw ShapeError("pointwise conv needs a 1x1 kernel");
  const int C = input.channels();
  const int H = input.height();
  const int W = input.width();
  if (kind == ConvKind::depthwise) {
    if (weights.in_channels != 1 || weights.out_channels != C) {
      throw ShapeError("depthwise weights " + dims(weights.out_channels, weights.in_channels, k) +
                       " do not match input " + input.shape_string());
    }
  } else if (weights.in_channels != C) {
    throw ShapeError("conv weights expect " + std::to_string(weights.in_channels) +
                     " input channels, input is " + input.shape_string());
  }
  if (weights.weight.size() !=
          static_cast<std::size_t>(weights.out_channels) * weights.in_channels * k * k ||
      weights.bias.size() != static_cast<std::size_t>(weights.out_channels)) {
    throw ShapeError("conv weight storage does not match its declared shape");
  }

  const int pad = k / 2;
  const int Ho = (H + 2 * pad - k) / stride + 1;
  const int Wo = (W + 2 * pad - k) / stride + 1;
  Tensor out(weights.out_channels, Ho, Wo);

  auto accumulate = [&](std::span<float> dst, std::span<const float> src, int ky, int kx, float w) {
    int ylo, yhi, xlo, xhi;
    valid_range(Ho, H, stride, ky - pad, ylo, yhi);
    valid_range(Wo, W, stride, kx - pad, xlo, xhi);
    for (int oy = ylo; oy < yhi; ++oy) {
      const float* srow = src.data() + static_cast<std::size_t>(oy * stride + ky - pad) * W;
      float* drow = dst.data() + static_cast<std::size_t>(oy) * Wo;
      if (stride == 1) {
        const float* s = srow + (kx - pad);
        for (int ox = xlo; ox < xhi; ++ox) drow[ox] += w * s[ox];
      } else {
        for (int ox = xlo; ox < xhi; ++ox) drow[ox] += w * srow[ox * 2 + kx - pad];
      }
    }
  };

  for (int o = 0; o < weights.out_channels; ++o) {
    auto dst = out.plane(o);
    std::ranges::fill(dst, weights.bias[o]);
    if (kind == ConvKind::depthwise) {
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          const float w = weights.w(o, 0, ky, kx);
          if (w != 0.0f) accumulate(dst, input.plane(o), ky, kx, w);
        }
      continue;
    }
    for (int i = 0; i < C; ++i) {
      if (k == 1 && stride == 1) {
        const float w = weights.w(o, i, 0, 0);
        if (w == 0.0f) continue;
        auto src = input.plane(i);
        for (std::size_t p = 0; p < dst.size(); ++p) dst[p] += w * src[p];
        continue;
      }
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          const float w = weights.w(o, i, ky, kx);
          if (w != 0.0f) accumulate(dst, input.plane(i), ky, kx, w);
        }
    }
  }
  return out;
}

Matrix softmax(const Matrix& m, Axis axis) {
  Matrix out(m.rows, m.cols);
  const bool rows = axis == Axis::rows;
  const int slices = rows ? m.rows : m.cols;
  const int length = rows ? m.cols : m.rows;
  auto get = [&](int s, int j) { return rows ? m.at(s, j) : m.at(j, s); };
  auto put = [&](int s, int j, float v) {
    if (rows) {
      out.at(s, j) = v;
    } else {
      out.at(j, s) = v;
    }
  };
  for (int s = 0; s < slices; ++s) {
    float peak = -FLT_MAX;
    for (int j = 0; j < length; ++j) peak = std::max(peak, get(s, j));
    double total = 0.0;
    for (int j = 0; j < length; ++j) total += std::exp(static_cast<double>(get(s, j) - peak));
    for (int j = 0; j < length; ++j) {
      put(s, j, static_cast<float>(std::exp(static_cast<double>(get(s, j) - peak)) / total));
    }
  }
  return out;
}

Tensor warp_bilinear(const Tensor& feature, const FlowField& flow) {
  const int H = feature.height();
  const int W = feature.width();
  if (flow.height() != H || flow.width() != W) {
    throw ShapeError("flow " + flow.tensor().shape_string() + " does not match feature " +
                     feature.shape_string());
  }
  Tensor out(feature.channels(), H, W);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const float sx = std::clamp(static_cast<float>(x) + flow.dx(y, x), 0.0f,
                                  static_cast<float>(W - 1));
      const float sy = std::clamp(static_cast<float>(y) + flow.dy(y, x), 0.0f,
                                  static_cast<float>(H - 1));
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const int x1 = std::min(x0 + 1, W - 1);
      const int y1 = std::min(y0 + 1, H - 1);
      const float fx = sx - static_cast<float>(x0);
      const float fy = sy - static_cast<float>(y0);
      for (int c = 0; c < feature.channels(); ++c) {
        const float a = feature.at(c, y0, x0);
        const float b = feature.at(c, y0, x1);
        const float d = feature.at(c, y1, x0);
        const float e = feature.at(c, y1, x1);
        const float top = a + fx * (b - a);
        const float bottom = d + fx * (e - d);
        out.at(c, y, x) = top + fy * (bottom - top);
      }
    }
  }
  return out;
}

Tensor resample(const Tensor& t, Resample factor) {
  const int C = t.channels();
  const int H = t.height();
  const int W = t.width();
  if (factor == Resample::down2) {
    if (H % 2 != 0 || W % 2 != 0) {
      throw ShapeError("down2 needs even dims, got " + t.shape_string());
    }
    Tensor out(C, H / 2, W / 2);
    for (int c = 0; c < C; ++c)
      for (int y = 0; y < H / 2; ++y)
        for (int x = 0; x < W / 2; ++x) {
          const float s = (t.at(c, 2 * y, 2 * x) + t.at(c, 2 * y, 2 * x + 1)) +
                          (t.at(c, 2 * y + 1, 2 * x) + t.at(c, 2 * y + 1, 2 * x + 1));
          out.at(c, y, x) = s * 0.25f;
        }
    return out;
  }
  Tensor out(C, H * 2, W * 2);
  for (int y = 0; y < 2 * H; ++y) {
    const float sy = std::clamp(static_cast<float>(y) * 0.5f - 0.25f, 0.0f,
                                static_cast<float>(H - 1));
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min(y0 + 1, H - 1);
    const float fy = sy - static_cast<float>(y0);
    for (int x = 0; x < 2 * W; ++x) {
      const float sx = std::clamp(static_cast<float>(x) * 0.5f - 0.25f, 0.0f,
                                  static_cast<float>(W - 1));
      const int x0 = static_cast<int>(std::floor(sx));
      const int x1 = std::min(x0 + 1, W - 1);
      const float fx = sx - static_cast<float>(x0);
      for (int c = 0; c < C; ++c) {
        const float a = t.at(c, y0, x0);
        const float b = t.at(c, y0, x1);
        const float d = t.at(c, y1, x0);
        const float e = t.at(c, y1, x1);
        const float top = a + fx * (b - a);
        const float bottom = d + fx * (e - d);
        out.at(c, y, x) = top + fy * (bottom - top);
      }
    }
  }
  return out;
}

float sigmoid(float x) {
  const double s = 1.0 / (1.0 + std::exp(-static_cast<double>(x)));
  return std::clamp(static_cast<float>(s), FLT_MIN, 1.0f - FLT_EPSILON / 2.0f);
}

Tensor activate(const Tensor& t, Activation kind) {
  Tensor out = t;
  for (float& v : out.data()) {
    v = kind == Activation::sigmoid ? sigmoid(v) : (v >= 0.0f ? v : kLeakySlope * v);
  }
  return out;
}

Tensor concat_channels(std::span<const Tensor* const> parts) {
  if (parts.empty()) return {};
  const int H = parts.front()->height();
  const int W = parts.front()->width();
  int C = 0;
  for (const Tensor* p : parts) {
    if (p->height() != H || p->width() != W) {
      throw ShapeError("concat of " + p->shape_string() + " with spatial " + std::to_string(H) +
                       "x" + std::to_string(W));
    }
    C += p->channels();
  }
  std::vector<float> values;
  values.reserve(static_cast<std::size_t>(C) * H * W);
  for (const Tensor* p : parts) values.insert(values.end(), p->data().begin(), p->data().end());
  return Tensor(C, H, W, std::move(values));
}

Tensor slice_channels(const Tensor& t, int begin, int count) {
  if (begin < 0 || count < 0 || begin + count > t.channels()) {
    throw ShapeError("channel slice out of range for " + t.shape_string());
  }
  auto first = t.data().begin() + static_cast<std::ptrdiff_t>(begin * t.plane_size());
  return Tensor(count, t.height(), t.width(),
                std::vector<float>(first, first + static_cast<std::ptrdiff_t>(count * t.plane_size())));
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw ShapeError("add: " + a.shape_string() + " vs " + b.shape_string());
  Tensor out = a;
  auto o = out.data();
  auto s = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += s[i];
  return out;
}

Tensor multiply(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("multiply: " + a.shape_string() + " vs " + b.shape_string());
  }
  Tensor out = a;
  auto o = out.data();
  auto s = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= s[i];
  return out;
}

Tensor scale(const Tensor& t, float factor) {
  Tensor out = t;
  for (float& v : out.data()) v *= factor;
  return out;
}

Tensor pixel_shuffle(const Tensor& t) {
  if (t.channels() % 4 != 0) throw ShapeError("pixel_shuffle needs 4k channels: " + t.shape_string());
  const int C = t.channels() / 4;
  Tensor out(C, t.height() * 2, t.width() * 2);
  for (int c = 0; c < C; ++c)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int y = 0; y < t.height(); ++y)
          for (int x = 0; x < t.width(); ++x)
            out.at(c, 2 * y + a, 2 * x + b) = t.at(4 * c + 2 * a + b, y, x);
  return out;
}

Tensor pixel_unshuffle(const Tensor& t) {
  if (t.height() % 2 != 0 || t.width() % 2 != 0) {
    throw ShapeError("pixel_unshuffle needs even dims: " + t.shape_string());
  }
  Tensor out(t.channels() * 4, t.height() / 2, t.width() / 2);
  for (int c = 0; c < t.channels(); ++c)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int y = 0; y < out.height(); ++y)
          for (int x = 0; x < out.width(); ++x)
            out.at(4 * c + 2 * a + b, y, x) = t.at(c, 2 * y + a, 2 * x + b);
  return out;
}

Tensor pad_to(const Tensor& t, int height, int width) {
  if (height < t.height() || width < t.width()) throw ShapeError("pad_to cannot shrink");
  Tensor out(t.channels(), height, width);
  for (int c = 0; c < t.channels(); ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        out.at(c, y, x) = t.at(c, std::min(y, t.height() - 1), std::min(x, t.width() - 1));
  return out;
}

Tensor crop(const Tensor& t, int height, int width) {
  if (height > t.height() || width > t.width()) throw ShapeError("crop cannot grow");
  Tensor out(t.channels(), height, width);
  for (int c = 0; c < t.channels(); ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) out.at(c, y, x) = t.at(c, y, x);
  return out;
}

bool all_finite(const Tensor& t) {
  return std::ranges::all_of(t.data(), [](float v) { return std::isfinite(v); });
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("max_abs_diff: " + a.shape_string() + " vs " + b.shape_string());
  }
  float m = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace becv
