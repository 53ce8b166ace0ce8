#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "becv/blocks.hpp"
#include "becv/gop.hpp"
#include "becv/tensor.hpp"

namespace becv {

enum class Side : std::uint8_t { encoder = 0, decoder = 1 };

/// Shared linear-attention layer for one scale: every reference goes through
/// the same DWConv block and key/value projections.
struct AttentionParams {
  ConvWeights query;        ///< 1x1 on the current latent
  DWConvBlock reference;    ///< applied to reference features before K/V
  ConvWeights key;          ///< 1x1
  ConvWeights value;        ///< 1x1
};

struct KeyValue {
  Tensor key;
  Tensor value;
};

Tensor embed_query(const Tensor& source, const AttentionParams& params);
KeyValue embed_reference(const Tensor& feature, const AttentionParams& params);

/// Key-value-first attention: out = SM2(Q) * (SM1(K)^T V), where SM1 normalizes
/// each key channel over spatial positions and SM2 normalizes each query
/// position over channels. Cost is linear in the number of positions.
Tensor attend(const Tensor& query, const KeyValue& kv);

/// Embeds `query_source` once and attends to every reference with the shared
/// parameters.
std::vector<Tensor> linear_attention(const Tensor& query_source, std::span<const Tensor> references,
                                     const AttentionParams& params);

/// One row of the implicit similarity matrix SM2(Q) SM1(K)^T for query position
/// `pos` (row-major y * width + x), computed explicitly. Debug/inspection path.
std::vector<float> similarity_row(const Tensor& query, const Tensor& key, int pos);

struct ContextEntry {
  RefRole role;
  int time;
  Tensor tensor;
};

/// Local (motion-aligned) and non-local (attention) contexts of one frame at one scale.
struct ContextSet {
  int scale = 0;
  Side side = Side::encoder;
  std::vector<ContextEntry> local;
  std::vector<ContextEntry> nonlocal;

  int reference_count() const { return static_cast<int>(local.size()); }
};

/// Extended references only contribute at scales 1 and 2.
inline bool role_active(RefRole role, int scale) { return scale > 0 || !is_extended(role); }

/// Everything the context extractors need about one scheduled reference.
/// `feature` and `kv` are at the scale being processed; `flow` is full resolution
/// (decoded v-hat for primaries, accumulated v-tilde for extended references).
struct ReferenceInput {
  RefRole role;
  int time;
  const Tensor* feature = nullptr;
  const KeyValue* kv = nullptr;
  const FlowField* flow = nullptr;
};

/// Warps each active reference's feature with its flow rescaled to `scale`.
/// Throws if a scheduled reference has no feature or flow.
std::vector<ContextEntry> extract_local(int scale, std::span<const ReferenceInput> refs);

/// Queries from the current latent (y on the encoder side, y-hat on the
/// decoder side); keys/values always come from decoded reference features.
std::vector<ContextEntry> extract_nonlocal(const Tensor& current, int scale,
                                           std::span<const ReferenceInput> refs,
                                           const AttentionParams& params);

/// Optional pointwise refinement applied to accumulated flows.
FlowField refine_flow(const FlowField& flow, const ConvWeights& refine);

}  // namespace becv
