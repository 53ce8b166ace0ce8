#include "becv/blocks.hpp"

#include "becv/error.hpp"

namespace becv {

namespace {

Tensor skip_path(const std::optional<ConvWeights>& skip, const Tensor& x, int out_channels) {
  if (skip) return conv2d(x, *skip, 1, ConvKind::pointwise);
  if (x.channels() != out_channels) {
    throw ShapeError("block without skip projection maps " + std::to_string(x.channels()) + " to " +
                     std::to_string(out_channels) + " channels");
  }
  return x;
}

}  // namespace

Tensor forward(const DWConvBlock& block, const Tensor& x) {
  Tensor h = activate(conv2d(x, block.in_proj, 1, ConvKind::pointwise), Activation::leaky_relu);
  h = activate(conv2d(h, block.depthwise, 1, ConvKind::depthwise), Activation::leaky_relu);
  h = conv2d(h, block.out_proj, 1, ConvKind::pointwise);
  return add(skip_path(block.skip, x, block.out_channels()), h);
}

Tensor forward(const DepthConvBlock& block, const Tensor& x) {
  Tensor h = activate(conv2d(x, block.depthwise, 1, ConvKind::depthwise), Activation::leaky_relu);
  h = activate(conv2d(h, block.ffn_in, 1, ConvKind::pointwise), Activation::leaky_relu);
  h = conv2d(h, block.ffn_out, 1, ConvKind::pointwise);
  return add(skip_path(block.skip, x, block.out_channels()), h);
}

}  // namespace becv
