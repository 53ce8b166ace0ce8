#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "becv/bitstream.hpp"
#include "becv/cache.hpp"
#include "becv/gate.hpp"
#include "becv/metrics.hpp"
#include "becv/motion.hpp"
#include "becv/params.hpp"

namespace becv {

struct SequenceJob {
  std::vector<Tensor> frames;  ///< 3xHxW in [0, 1], display order
  int intra_period = 8;
  int qp = 0;
  bool use_cache = true;
};

/// Exact motion for frame t toward reference `ref` on the padded grid
/// (height x width). Returning nullopt falls back to block matching.
using MotionOverride = std::function<std::optional<FlowField>(int t, int ref, int height, int width)>;

struct GateObservation {
  int t;
  int scale;
  Side side;
  const GateOutput& output;
};

struct AttentionObservation {
  int t;
  int scale;
  Side side;
  RefRole role;
  int ref;
  const Tensor& query;
  const KeyValue& kv;
};

struct FlowObservation {
  int t;
  RefRole role;
  int ref;
  const FlowField& flow;  ///< decoded (primary) or accumulated and refined (extended)
};

struct Observers {
  std::function<void(const GateObservation&)> on_gate;
  std::function<void(const AttentionObservation&)> on_attention;
  std::function<void(const FlowObservation&)> on_flow;
};

struct EncoderOptions {
  MotionSearch search;
  MotionOverride motion;
  Observers observers;
};

struct EncodeResult {
  std::vector<std::uint8_t> bitstream;
  std::vector<FrameReport> reports;     ///< coding order
  std::vector<Tensor> reconstructions;  ///< display order, original size
  CacheStats cache;
  double seconds = 0.0;
};

struct DecodeResult {
  StreamHeader header;
  std::vector<Tensor> frames;  ///< display order, original size
  CacheStats cache;
  double seconds = 0.0;
};

/// Closed-loop encode: every frame is reconstructed exactly as the decoder
/// will, and those reconstructions feed later frames.
EncodeResult encode_sequence(const SequenceJob& job, const ParameterSet& params, const EncoderOptions& options = {});

/// Throws DecodeError naming the coding position and frame on corrupt input,
/// and Error (before decoding anything) when the stream's profile id differs.
DecodeResult decode_sequence(std::span<const std::uint8_t> bitstream, const ParameterSet& params,
                             bool use_cache = true, const Observers& observers = {});

/// Latent payload bits of `frame` coded as an intra frame with `step`.
std::size_t intra_latent_bits(const Tensor& frame, const ParameterSet& params, float step);

/// Codec working size: dimensions rounded up to multiples of 16.
int padded_dim(int dim);

}  // namespace becv
