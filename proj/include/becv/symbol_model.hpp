#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "becv/range_coder.hpp"
#include "becv/tensor.hpp"

namespace becv {

/// Per-element discretized Gaussian: the coder models (symbol - round(mean))
/// with a zero-mean table selected by `scale`.
struct SymbolModel {
  Tensor mean;
  Tensor scale;
};

inline constexpr int kEscapeRadius = 64;       ///< residuals beyond this are escape coded
inline constexpr float kMinScale = 0.11f;
inline constexpr float kMaxScale = 64.0f;

/// Precomputed integer tables for a log-spaced ladder of Gaussian scales.
/// Alphabet: residual r in [-64, 64] at index r + 64, escape at index 129.
class GaussianTables {
 public:
  static const GaussianTables& instance();

  int index_for(float scale) const;
  const FrequencyTable& table(int index) const { return tables_[index]; }
  float scale_at(int index) const { return scales_[index]; }
  int count() const { return static_cast<int>(scales_.size()); }

 private:
  GaussianTables();
  std::vector<float> scales_;
  std::vector<FrequencyTable> tables_;
};

/// Entropy-codes integer latents under the model (sizes must match).
std::vector<std::uint8_t> encode_symbols(std::span<const std::int32_t> symbols, const SymbolModel& model);
std::vector<std::int32_t> decode_symbols(std::span<const std::uint8_t> payload, const SymbolModel& model);

/// Writes / reads an escaped magnitude (order-0 exp-Golomb) as equiprobable bits.
void encode_exp_golomb(RangeEncoder& enc, std::uint32_t value);
std::uint32_t decode_exp_golomb(RangeDecoder& dec);

}  // namespace becv
