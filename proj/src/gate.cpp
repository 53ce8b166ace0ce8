#include "becv/gate.hpp"

#include <algorithm>

#include "becv/error.hpp"

namespace becv {

const GateBranch& GateParams::branch(int scale, int references) const {
  if (scale < 0 || scale > 2 || references < 0 || references > kMaxReferences ||
      !branches[scale][references]) {
    throw Error("no gate layout for " + std::to_string(references) + " references at scale " +
                std::to_string(scale));
  }
  return *branches[scale][references];
}

GateBranch& GateParams::branch(int scale, int references) {
  return const_cast<GateBranch&>(std::as_const(*this).branch(scale, references));
}

GateOutput gate(const Tensor& latent, const ContextSet& contexts, const GateParams& params) {
  if (contexts.local.size() != contexts.nonlocal.size()) {
    throw Error("context set has " + std::to_string(contexts.local.size()) + " local but " +
                std::to_string(contexts.nonlocal.size()) + " non-local entries");
  }
  for (std::size_t i = 0; i < contexts.local.size(); ++i) {
    if (contexts.local[i].role != contexts.nonlocal[i].role) {
      throw Error("local and non-local contexts are not in the same role order");
    }
  }
  const GateBranch& br = params.branch(contexts.scale, contexts.reference_count());

  std::vector<const Tensor*> ctx;
  for (const auto& e : contexts.local) ctx.push_back(&e.tensor);
  for (const auto& e : contexts.nonlocal) ctx.push_back(&e.tensor);
  for (const Tensor* t : ctx) {
    if (t->height() != latent.height() || t->width() != latent.width()) {
      throw ShapeError("context " + t->shape_string() + " does not match latent " + latent.shape_string());
    }
  }
  const Tensor stacked = concat_channels(ctx);
  std::vector<const Tensor*> cc_in{&latent, &stacked};
  const Tensor cc_input = concat_channels(cc_in);
  if (cc_input.channels() != br.cc.in_channels()) {
    throw ShapeError("gate expects " + std::to_string(br.cc.in_channels()) + " input channels, got " +
                     std::to_string(cc_input.channels()));
  }

  GateOutput out;
  out.mask = activate(forward(br.cc, cc_input), Activation::sigmoid);
  out.reduced = conv2d(stacked, br.dr, 1, ConvKind::pointwise);
  out.gated = multiply(out.mask, out.reduced);
  return out;
}

Tensor reconstruct(const Tensor& feature, const FeatureGenParams& params) {
  Tensor x = conv2d(feature, params.reconstruction, 1, ConvKind::pointwise);
  for (float& v : x.data()) v = std::clamp(v, 0.0f, 1.0f);
  return x;
}

Generated feature_generation(const Tensor& latent, const Tensor& gated, const FeatureGenParams& params) {
  std::vector<const Tensor*> parts{&latent, &gated};
  const Tensor h = forward(params.second, forward(params.first, concat_channels(parts)));
  Generated g;
  g.feature = add(latent, h);
  g.reconstruction = reconstruct(g.feature, params);
  return g;
}

}  // namespace becv
