#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "becv/tensor.hpp"

namespace becv {

struct MotionSearch {
  int block = 8;  ///< block size in pixels
  int range = 8;  ///< search radius in pixels (window is [-range, range]^2)
};

/// Integer block matching. For each block of `current` picks the displacement
/// v minimizing the SAD between current(p) and reference(p + v) (border-clamped
/// sampling). Ties go to the smallest |dx|+|dy|, then the smallest dy, then dx.
/// The per-block vector is broadcast to every pixel of the block.
FlowField estimate_flow(const Tensor& current, const Tensor& reference, const MotionSearch& search);

/// Motion is carried at quarter-pel precision on a half-resolution grid.
inline constexpr float kMotionPrecision = 4.0f;

struct MotionCode {
  std::vector<std::uint8_t> bytes;
  FlowField back;  ///< reconstructed v-hat for the backward reference
  FlowField fwd;   ///< reconstructed v-hat for the forward reference
};

/// Jointly codes the two flows of a B frame into one chunk: 2x2 average
/// downsampling, quarter-pel rounding, left/above prediction, static
/// geometric prior. Returns the reconstructed fields decode_motion yields.
MotionCode code_motion(const FlowField& back, const FlowField& fwd);
std::pair<FlowField, FlowField> decode_motion(std::span<const std::uint8_t> bytes, int height, int width);

/// Composes r2->r1 (first hop) with r1->t (second hop) into r2->t:
/// out(p) = second(p) + first(p + second(p)), bilinear with border clamping.
FlowField accumulate_flow(const FlowField& first_hop, const FlowField& second_hop);

/// Flow expressed on the grid of scale `scale`: average pooled `scale` times
/// and divided by 2^scale.
FlowField flow_at_scale(const FlowField& flow, int scale);

/// Text grid of "dx,dy" pairs sampled every `step` pixels.
std::string format_flow(const FlowField& flow, int step);

}  // namespace becv
