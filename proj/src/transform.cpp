#include "becv/transform.hpp"

#include <algorithm>
#include <cmath>

#include "becv/error.hpp"
#include "becv/gop.hpp"

namespace becv {

namespace {

Tensor stage_input(const Tensor& y, const Tensor& context) {
  std::array<const Tensor*, 2> parts{&y, &context};
  return concat_channels(parts);
}

Tensor context_or_zero(const ContextGate& gate, int scale, const Tensor& latent, int channels) {
  if (!gate) return Tensor(channels, latent.height(), latent.width());
  Tensor c = gate(scale, latent);
  if (c.channels() != channels || c.height() != latent.height() || c.width() != latent.width()) {
    throw ShapeError("context at scale " + std::to_string(scale) + " is " + c.shape_string() +
                     ", stage expects " + std::to_string(channels) + " channels at " +
                     std::to_string(latent.height()) + "x" + std::to_string(latent.width()));
  }
  return c;
}

}  // namespace

Analysis analyze(const Tensor& frame, const TransformParams& params, const ContextGate& gate) {
  if (frame.channels() != 3 || frame.height() % 8 != 0 || frame.width() % 8 != 0) {
    throw ShapeError("analyze expects 3xHxW with H, W multiples of 8, got " + frame.shape_string());
  }
  Analysis a;
  Tensor y = conv2d(frame, params.input, 1, ConvKind::pointwise);
  for (int l = 0; l < 3; ++l) {
    const int ctx_channels = params.down[l].in_channels - y.channels();
    a.contexts[l] = context_or_zero(gate, l, y, ctx_channels);
    Tensor next = conv2d(stage_input(y, a.contexts[l]), params.down[l], 2, ConvKind::full);
    a.y[l] = std::move(y);
    y = std::move(next);
  }
  a.latent = std::move(y);
  return a;
}

Synthesis synthesize(const Tensor& latent_hat, const TransformParams& params, const ContextGate& gate) {
  Synthesis s;
  Tensor y = pixel_shuffle(conv2d(latent_hat, params.up[2], 1, ConvKind::pointwise));
  for (int l = 2; l >= 0; --l) {
    const int ctx_channels =
        l > 0 ? params.up[l - 1].in_channels - y.channels() : params.down[0].in_channels - y.channels();
    s.contexts[l] = context_or_zero(gate, l, y, ctx_channels);
    if (l > 0) {
      Tensor next = pixel_shuffle(conv2d(stage_input(y, s.contexts[l]), params.up[l - 1], 1, ConvKind::pointwise));
      s.y_hat[l] = std::move(y);
      y = std::move(next);
    } else {
      s.y_hat[0] = std::move(y);
    }
  }
  return s;
}

Tensor extract_feature(const Tensor& feature, int from_scale, const TransformParams& params) {
  if (from_scale < 0 || from_scale > 1) throw Error("feature extraction only runs from scale 0 or 1");
  return conv2d(feature, params.extract[from_scale], 2, ConvKind::full);
}

float effective_step(int qp, double weight) {
  if (qp < 0 || qp >= kQpCount) throw Error("qp must be in 0..3, got " + std::to_string(qp));
  if (!(weight > 0.0)) throw Error("quality weight must be positive");
  const double w_max = *std::ranges::max_element(kQualityWeights);
  return static_cast<float>(kBaseSteps[qp] * (w_max / weight));
}

std::vector<std::int32_t> quantize(const Tensor& y, float step) {
  if (!(step > 0.0f)) throw Error("quantization step must be positive");
  std::vector<std::int32_t> q(y.size());
  auto v = y.data();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const float s = v[i] / step;
    if (!std::isfinite(s)) throw Error("non-finite latent value");
    q[i] = static_cast<std::int32_t>(std::lround(std::clamp(s, -1.0e7f, 1.0e7f)));
  }
  return q;
}

Tensor dequantize(std::span<const std::int32_t> q, int channels, int height, int width, float step) {
  Tensor t(channels, height, width);
  if (q.size() != t.size()) throw ShapeError("symbol count does not match latent shape");
  auto d = t.data();
  for (std::size_t i = 0; i < q.size(); ++i) d[i] = static_cast<float>(q[i]) * step;
  return t;
}

SymbolModel model_symbols(const Tensor* back, const Tensor* fwd, int channels, int height, int width,
                          const EntropyParams& params) {
  if ((back == nullptr) != (fwd == nullptr)) throw Error("prior needs both primary contexts or neither");
  if (back == nullptr) {
    return {Tensor(channels, height, width), Tensor(channels, height, width, params.intra_scale)};
  }
  std::array<const Tensor*, 2> parts{back, fwd};
  const Tensor h =
      activate(conv2d(concat_channels(parts), params.hidden, 2, ConvKind::full), Activation::leaky_relu);
  const Tensor out = conv2d(h, params.head, 1, ConvKind::pointwise);
  if (out.channels() != 2 * channels || out.height() != height || out.width() != width) {
    throw ShapeError("prior produced " + out.shape_string() + " for a latent of " + std::to_string(channels) +
                     "x" + std::to_string(height) + "x" + std::to_string(width));
  }
  SymbolModel m{slice_channels(out, 0, channels), slice_channels(out, channels, channels)};
  for (float& s : m.scale.data()) {
    const double raw = s;
    const double softplus = raw > 20.0 ? raw : std::log1p(std::exp(raw));
    s = static_cast<float>(kMinScale + softplus);
  }
  return m;
}

SymbolModel to_symbol_units(const SymbolModel& model, float step) {
  if (!(step > 0.0f)) throw Error("quantization step must be positive");
  SymbolModel m = model;
  for (float& v : m.mean.data()) v = std::isfinite(v) ? v / step : 0.0f;
  for (float& v : m.scale.data()) v = std::isfinite(v) ? std::clamp(v / step, kMinScale, kMaxScale) : kMaxScale;
  return m;
}

}  // namespace becv
