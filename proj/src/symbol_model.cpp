#include "becv/symbol_model.hpp"

#include <algorithm>
#include <cmath>

#include "becv/error.hpp"

namespace becv {

namespace {

constexpr int kTableCount = 64;
constexpr int kEscapeSymbol = 2 * kEscapeRadius + 1;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::int32_t rounded_mean(float mean) {
  return static_cast<std::int32_t>(std::lround(std::clamp(mean, -1.0e6f, 1.0e6f)));
}

void check_model(const SymbolModel& model, std::size_t n) {
  if (!model.mean.same_shape(model.scale) || model.mean.size() != n) {
    throw ShapeError("symbol model shape " + model.mean.shape_string() + " does not match " +
                     std::to_string(n) + " symbols");
  }
}

}  // namespace

GaussianTables::GaussianTables() {
  const double lo = std::log(kMinScale);
  const double hi = std::log(kMaxScale);
  for (int i = 0; i < kTableCount; ++i) {
    const double sigma = std::exp(lo + (hi - lo) * i / (kTableCount - 1));
    scales_.push_back(static_cast<float>(sigma));
    std::vector<double> weights(kEscapeSymbol + 1);
    double inside = 0.0;
    for (int r = -kEscapeRadius; r <= kEscapeRadius; ++r) {
      const double p = normal_cdf((r + 0.5) / sigma) - normal_cdf((r - 0.5) / sigma);
      weights[r + kEscapeRadius] = p;
      inside += p;
    }
    weights[kEscapeSymbol] = std::max(0.0, 1.0 - inside);
    tables_.push_back(FrequencyTable::from_weights(weights));
  }
}

const GaussianTables& GaussianTables::instance() {
  static const GaussianTables tables;
  return tables;
}

int GaussianTables::index_for(float scale) const {
  // First ladder entry at or above the requested scale, so the model never
  // claims more confidence than asked for.
  const float s = std::clamp(scale, kMinScale, kMaxScale);
  auto it = std::lower_bound(scales_.begin(), scales_.end(), s);
  if (it == scales_.end()) return count() - 1;
  return static_cast<int>(it - scales_.begin());
}

void encode_exp_golomb(RangeEncoder& enc, std::uint32_t value) {
  const std::uint64_t v = static_cast<std::uint64_t>(value) + 1;
  int nbits = 0;
  while ((v >> (nbits + 1)) != 0) ++nbits;
  for (int i = 0; i < nbits; ++i) enc.encode_bits(0, 1);
  enc.encode_bits(1, 1);
  if (nbits > 0) enc.encode_bits(static_cast<std::uint32_t>(v & ((1ull << nbits) - 1)), nbits);
}

std::uint32_t decode_exp_golomb(RangeDecoder& dec) {
  int nbits = 0;
  while (dec.decode_bits(1) == 0) {
    if (++nbits > 31) throw DecodeError("exp-Golomb prefix too long");
  }
  std::uint64_t v = 1ull << nbits;
  if (nbits > 0) v |= dec.decode_bits(nbits);
  return static_cast<std::uint32_t>(v - 1);
}

std::vector<std::uint8_t> encode_symbols(std::span<const std::int32_t> symbols, const SymbolModel& model) {
  check_model(model, symbols.size());
  const auto& tables = GaussianTables::instance();
  RangeEncoder enc;
  auto means = model.mean.data();
  auto scales = model.scale.data();
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const auto& table = tables.table(tables.index_for(scales[i]));
    const std::int64_t r = static_cast<std::int64_t>(symbols[i]) - rounded_mean(means[i]);
    if (r >= -kEscapeRadius && r <= kEscapeRadius) {
      enc.encode(table, static_cast<int>(r + kEscapeRadius));
      continue;
    }
    enc.encode(table, kEscapeSymbol);
    const std::uint64_t magnitude = static_cast<std::uint64_t>(r < 0 ? -r : r) - (kEscapeRadius + 1);
    if (magnitude > 0xFFFFFFFEull) throw Error("latent symbol magnitude too large to code");
    encode_exp_golomb(enc, static_cast<std::uint32_t>(magnitude));
    enc.encode_bits(r < 0 ? 1u : 0u, 1);
  }
  return enc.finish();
}

std::vector<std::int32_t> decode_symbols(std::span<const std::uint8_t> payload, const SymbolModel& model) {
  const std::size_t n = model.mean.size();
  check_model(model, n);
  const auto& tables = GaussianTables::instance();
  RangeDecoder dec(payload);
  std::vector<std::int32_t> out(n);
  auto means = model.mean.data();
  auto scales = model.scale.data();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& table = tables.table(tables.index_for(scales[i]));
    const int s = dec.decode(table);
    std::int64_t r;
    if (s != kEscapeSymbol) {
      r = s - kEscapeRadius;
    } else {
      const std::int64_t magnitude = static_cast<std::int64_t>(decode_exp_golomb(dec)) + kEscapeRadius + 1;
      r = dec.decode_bits(1) ? -magnitude : magnitude;
    }
    const std::int64_t value = r + rounded_mean(means[i]);
    if (value < INT32_MIN || value > INT32_MAX) throw DecodeError("decoded latent out of range");
    out[i] = static_cast<std::int32_t>(value);
  }
  dec.finish();
  return out;
}

}  // namespace becv
