#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "becv/gop.hpp"

namespace becv {

inline constexpr std::uint8_t kStreamVersion = 1;

struct StreamHeader {
  int width = 0;   ///< original (unpadded) frame width
  int height = 0;
  int frame_count = 0;
  int intra_period = 0;
  int qp = 0;
  std::uint8_t profile = 0;  ///< ParameterSet::profile_id of the encoder
};

struct FrameChunk {
  FrameKind kind = FrameKind::intra;
  std::vector<std::uint8_t> motion;
  std::vector<std::uint8_t> latent;
};

/// Header plus one chunk per frame, in coding order.
struct Bitstream {
  StreamHeader header;
  std::vector<FrameChunk> chunks;
};

inline constexpr std::size_t kHeaderBytes = 4 + 1 + 2 + 2 + 2 + 2 + 1 + 1;
inline constexpr std::size_t kChunkHeaderBytes = 1 + 4 + 4;

std::vector<std::uint8_t> write_bitstream(const Bitstream& stream);

/// Parses and validates the container. Truncated or inconsistent input throws
/// DecodeError naming the coding-order position and display index.
Bitstream read_bitstream(std::span<const std::uint8_t> bytes);

}  // namespace becv
