#pragma once

#include <optional>

#include "becv/tensor.hpp"

namespace becv {

/// 1x1 -> LeakyReLU -> depthwise 3x3 -> LeakyReLU -> 1x1, plus a skip that is
/// the identity or a 1x1 conv when channel counts differ.
struct DWConvBlock {
  ConvWeights in_proj;
  ConvWeights depthwise;
  ConvWeights out_proj;
  std::optional<ConvWeights> skip;

  int in_channels() const { return in_proj.in_channels; }
  int out_channels() const { return out_proj.out_channels; }
};

/// Depthwise 3x3 -> LeakyReLU -> ConvFFN (1x1 -> LeakyReLU -> 1x1), plus skip.
struct DepthConvBlock {
  ConvWeights depthwise;
  ConvWeights ffn_in;
  ConvWeights ffn_out;
  std::optional<ConvWeights> skip;

  int in_channels() const { return depthwise.out_channels; }
  int out_channels() const { return ffn_out.out_channels; }
};

Tensor forward(const DWConvBlock& block, const Tensor& x);
Tensor forward(const DepthConvBlock& block, const Tensor& x);

}  // namespace becv
