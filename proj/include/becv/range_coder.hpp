#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace becv {

inline constexpr int kProbabilityBits = 16;
inline constexpr std::uint32_t kProbabilityTotal = 1u << kProbabilityBits;

/// Integer symbol distribution with total mass exactly kProbabilityTotal and
/// every symbol's frequency >= 1.
class FrequencyTable {
 public:
  FrequencyTable() = default;

  /// Scales arbitrary non-negative weights (counts or probabilities) to the
  /// coder's integer precision. Zero-weight symbols still receive frequency 1.
  static FrequencyTable from_weights(std::span<const double> weights);

  int size() const { return static_cast<int>(cumulative_.size()) - 1; }
  std::uint32_t frequency(int symbol) const { return cumulative_[symbol + 1] - cumulative_[symbol]; }
  std::uint32_t cumulative(int symbol) const { return cumulative_[symbol]; }
  /// Symbol whose interval contains `target` (target < kProbabilityTotal).
  int find(std::uint32_t target) const;
  /// -log2 of the symbol's modeled probability.
  double cost_bits(int symbol) const;

 private:
  std::vector<std::uint32_t> cumulative_;
};

/// Carry-propagating 32-bit range encoder. The stream ends with a 32-bit
/// checksum of everything coded so the decoder can reject corrupted payloads.
class RangeEncoder {
 public:
  void encode(const FrequencyTable& table, int symbol);
  /// Equiprobable bits, most significant first (nbits <= 32).
  void encode_bits(std::uint32_t value, int nbits);
  /// Appends the checksum, flushes and returns the payload. The encoder is spent afterwards.
  std::vector<std::uint8_t> finish();

 private:
  void shift_low();
  void normalize();
  void mix(std::uint32_t v);

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  std::uint32_t checksum_ = 2166136261u;
  std::vector<std::uint8_t> out_;
};

/// Mirror of RangeEncoder. Every failure (reading past the payload, an
/// impossible code value, checksum mismatch, unread trailing bytes) throws
/// DecodeError.
class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> payload);

  int decode(const FrequencyTable& table);
  std::uint32_t decode_bits(int nbits);
  /// Verifies the checksum and that the payload was consumed exactly.
  void finish();

 private:
  std::uint8_t next_byte();
  void normalize();
  void mix(std::uint32_t v);

  std::span<const std::uint8_t> payload_;
  std::size_t pos_ = 0;
  std::uint32_t code_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint32_t checksum_ = 2166136261u;
};

/// Codes a whole sequence with one static table.
std::vector<std::uint8_t> range_encode(std::span<const int> symbols, const FrequencyTable& table);
std::vector<int> range_decode(std::span<const std::uint8_t> payload, const FrequencyTable& table,
                              std::size_t count);

}  // namespace becv
