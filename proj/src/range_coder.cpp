#include "becv/range_coder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "becv/error.hpp"

namespace becv {

namespace {
constexpr std::uint32_t kTopValue = 1u << 24;
constexpr std::uint32_t kFnvPrime = 16777619u;
}  // namespace

FrequencyTable FrequencyTable::from_weights(std::span<const double> weights) {
  const auto n = static_cast<std::uint32_t>(weights.size());
  if (n == 0 || n > kProbabilityTotal) throw Error("frequency table needs 1..65536 symbols");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("frequency weights must be finite and >= 0");
    sum += w;
  }
  std::vector<std::int64_t> freq(n, 1);
  if (sum > 0.0) {
    const double budget = static_cast<double>(kProbabilityTotal - n);
    for (std::uint32_t i = 0; i < n; ++i) {
      freq[i] += static_cast<std::int64_t>(std::floor(weights[i] / sum * budget));
    }
  }
  std::int64_t total = std::accumulate(freq.begin(), freq.end(), std::int64_t{0});
  // Hand the rounding remainder to the most probable symbol (first one on ties).
  const auto peak = std::ranges::max_element(freq) - freq.begin();
  freq[peak] += static_cast<std::int64_t>(kProbabilityTotal) - total;

  FrequencyTable table;
  table.cumulative_.resize(n + 1, 0);
  for (std::uint32_t i = 0; i < n; ++i) {
    table.cumulative_[i + 1] = table.cumulative_[i] + static_cast<std::uint32_t>(freq[i]);
  }
  return table;
}

int FrequencyTable::find(std::uint32_t target) const {
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  return static_cast<int>(it - cumulative_.begin()) - 1;
}

double FrequencyTable::cost_bits(int symbol) const {
  return -std::log2(static_cast<double>(frequency(symbol)) / kProbabilityTotal);
}

void RangeEncoder::mix(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    checksum_ ^= (v >> (8 * i)) & 0xFFu;
    checksum_ *= kFnvPrime;
  }
}

void RangeEncoder::shift_low() {
  if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const auto carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t temp = cache_;
    do {
      out_.push_back(static_cast<std::uint8_t>(temp + carry));
      temp = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<std::uint8_t>(static_cast<std::uint32_t>(low_) >> 24);
  }
  ++cache_size_;
  low_ = static_cast<std::uint64_t>(static_cast<std::uint32_t>(low_) << 8);
}

void RangeEncoder::normalize() {
  while (range_ < kTopValue) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::encode(const FrequencyTable& table, int symbol) {
  if (symbol < 0 || symbol >= table.size()) throw Error("symbol outside the table alphabet");
  mix(static_cast<std::uint32_t>(symbol));
  const std::uint32_t r = range_ >> kProbabilityBits;
  low_ += static_cast<std::uint64_t>(r) * table.cumulative(symbol);
  range_ = r * table.frequency(symbol);
  normalize();
}

void RangeEncoder::encode_bits(std::uint32_t value, int nbits) {
  mix(value ^ (static_cast<std::uint32_t>(nbits) << 24));
  for (int i = nbits - 1; i >= 0; --i) {
    range_ >>= 1;
    if ((value >> i) & 1u) low_ += range_;
    normalize();
  }
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  const std::uint32_t check = checksum_;
  for (int i = 31; i >= 0; --i) {
    range_ >>= 1;
    if ((check >> i) & 1u) low_ += range_;
    normalize();
  }
  for (int i = 0; i < 5; ++i) shift_low();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> payload) : payload_(payload) {
  for (int i = 0; i < 5; ++i) code_ = (code_ << 8) | next_byte();
}

void RangeDecoder::mix(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    checksum_ ^= (v >> (8 * i)) & 0xFFu;
    checksum_ *= kFnvPrime;
  }
}

std::uint8_t RangeDecoder::next_byte() {
  if (pos_ >= payload_.size()) throw DecodeError("range decoder read past the end of its payload");
  return payload_[pos_++];
}

void RangeDecoder::normalize() {
  while (range_ < kTopValue) {
    range_ <<= 8;
    code_ = (code_ << 8) | next_byte();
  }
}

int RangeDecoder::decode(const FrequencyTable& table) {
  const std::uint32_t r = range_ >> kProbabilityBits;
  const std::uint32_t target = code_ / r;
  if (target >= kProbabilityTotal) throw DecodeError("range decoder hit an impossible code value");
  const int symbol = table.find(target);
  code_ -= r * table.cumulative(symbol);
  range_ = r * table.frequency(symbol);
  normalize();
  mix(static_cast<std::uint32_t>(symbol));
  return symbol;
}

std::uint32_t RangeDecoder::decode_bits(int nbits) {
  std::uint32_t value = 0;
  for (int i = 0; i < nbits; ++i) {
    range_ >>= 1;
    std::uint32_t bit = 0;
    if (code_ >= range_) {
      code_ -= range_;
      bit = 1;
    }
    value = (value << 1) | bit;
    normalize();
  }
  mix(value ^ (static_cast<std::uint32_t>(nbits) << 24));
  return value;
}

void RangeDecoder::finish() {
  std::uint32_t check = 0;
  for (int i = 0; i < 32; ++i) {
    range_ >>= 1;
    std::uint32_t bit = 0;
    if (code_ >= range_) {
      code_ -= range_;
      bit = 1;
    }
    check = (check << 1) | bit;
    normalize();
  }
  if (check != checksum_) throw DecodeError("range decoder checksum mismatch (corrupted payload)");
  if (pos_ != payload_.size()) {
    throw DecodeError("range decoder left " + std::to_string(payload_.size() - pos_) +
                      " unread payload bytes");
  }
}

std::vector<std::uint8_t> range_encode(std::span<const int> symbols, const FrequencyTable& table) {
  RangeEncoder enc;
  for (int s : symbols) enc.encode(table, s);
  return enc.finish();
}

std::vector<int> range_decode(std::span<const std::uint8_t> payload, const FrequencyTable& table,
                              std::size_t count) {
  RangeDecoder dec(payload);
  std::vector<int> out(count);
  for (auto& s : out) s = dec.decode(table);
  dec.finish();
  return out;
}

}  // namespace becv
