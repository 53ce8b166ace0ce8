#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "becv/symbol_model.hpp"
#include "becv/tensor.hpp"

namespace becv {

/// Contextual encoder/decoder ladder. Scale l in {0,1,2} carries D^l channels
/// at H/2^l; the latent sits at scale 3 (H/8) with `latent` channels.
struct TransformParams {
  ConvWeights input;                 ///< 1x1, 3 -> D^0
  std::array<ConvWeights, 3> down;   ///< 3x3 stride 2, concat(y^l, C^l) -> D^{l+1} (latent at l = 2)
  std::array<ConvWeights, 3> up;     ///< 1x1 then pixel shuffle; up[2] takes the latent, up[l<2] concat(y-hat^{l+1}, C-hat^{l+1})
  std::array<ConvWeights, 2> extract;  ///< 3x3 stride 2, F^l -> F^{l+1}
};

/// Prior head: predicts per-element mean and scale of the latent from the two
/// primary local contexts at scale 2.
struct EntropyParams {
  ConvWeights hidden;  ///< 3x3 stride 2, 2 D^2 -> D^2
  ConvWeights head;    ///< 1x1, D^2 -> 2 * latent (means, then raw scales)
  float intra_scale = 16.0f;
};

/// Returns the gated context C^l for scale l given the latent at that scale.
/// An empty function means intra coding: every context is zero.
using ContextGate = std::function<Tensor(int scale, const Tensor& latent)>;

struct Analysis {
  std::array<Tensor, 3> y;         ///< y^0..y^2
  std::array<Tensor, 3> contexts;  ///< C^0..C^2 as fed to each stage
  Tensor latent;                   ///< unquantized y^3
};

struct Synthesis {
  std::array<Tensor, 3> y_hat;     ///< y-hat^0..y-hat^2
  std::array<Tensor, 3> contexts;  ///< C-hat^0..C-hat^2
};

Analysis analyze(const Tensor& frame, const TransformParams& params, const ContextGate& gate = {});
Synthesis synthesize(const Tensor& latent_hat, const TransformParams& params, const ContextGate& gate = {});

/// F-hat^1 and F-hat^2 from F-hat^0.
Tensor extract_feature(const Tensor& feature, int from_scale, const TransformParams& params);

inline constexpr std::array<double, 4> kBaseSteps{1.0, 0.6, 0.35, 0.2};
inline constexpr int kQpCount = 4;

/// base_step(qp) * (w_max / w_k).
float effective_step(int qp, double weight);

/// round(y / step), ties away from zero.
std::vector<std::int32_t> quantize(const Tensor& y, float step);
Tensor dequantize(std::span<const std::int32_t> q, int channels, int height, int width, float step);

/// Model over latent values (not symbols). `back`/`fwd` are the primary local
/// contexts at scale 2; intra frames pass nullptr for both.
SymbolModel model_symbols(const Tensor* back, const Tensor* fwd, int channels, int height, int width,
                          const EntropyParams& params);

/// Re-expresses a latent-domain model in units of the quantization step.
SymbolModel to_symbol_units(const SymbolModel& model, float step);

}  // namespace becv
