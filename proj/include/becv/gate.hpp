#pragma once

#include <array>
#include <optional>

#include "becv/blocks.hpp"
#include "becv/context.hpp"

namespace becv {

inline constexpr int kMaxReferences = 4;

/// Gating weights for one (scale, reference count) layout. The CC input is
/// concat(latent, locals, non-locals), so its width depends on how many
/// references the schedule grants; each layout has its own branch.
struct GateBranch {
  DepthConvBlock cc;  ///< conditional-coding branch producing the mask pre-activation
  ConvWeights dr;     ///< pointwise reduction of concat(locals, non-locals)
};

/// Produces the propagated scale-0 feature and the reconstruction.
struct FeatureGenParams {
  DepthConvBlock first;   ///< concat(y-hat^0, C-hat^0) -> D^0
  DepthConvBlock second;  ///< D^0 -> D^0
  ConvWeights reconstruction;  ///< D^0 -> 3
};

struct GateParams {
  /// [scale][reference count]; scale 0 only has the 2-reference layout.
  std::array<std::array<std::optional<GateBranch>, kMaxReferences + 1>, 3> branches;
  FeatureGenParams generation;

  const GateBranch& branch(int scale, int references) const;
  GateBranch& branch(int scale, int references);
};

struct GateOutput {
  Tensor mask;     ///< M, every entry strictly inside (0, 1)
  Tensor reduced;  ///< DR(contexts)
  Tensor gated;    ///< M * DR(contexts)
};

/// M = sigmoid(CC(latent, locals, non-locals)), C = M * DR(locals, non-locals).
GateOutput gate(const Tensor& latent, const ContextSet& contexts, const GateParams& params);

struct Generated {
  Tensor feature;         ///< F-hat^0, propagated to later frames
  Tensor reconstruction;  ///< x-hat, clipped to [0, 1]
};

/// F-hat^0 = y-hat^0 + FG(concat(y-hat^0, C-hat^0)); x-hat = clip(W F-hat^0).
Generated feature_generation(const Tensor& latent, const Tensor& gated, const FeatureGenParams& params);

/// Applies only the reconstruction head (used by intra inspection paths).
Tensor reconstruct(const Tensor& feature, const FeatureGenParams& params);

}  // namespace becv
