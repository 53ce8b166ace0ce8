#pragma once

#include <map>
#include <span>
#include <vector>

#include "becv/gop.hpp"
#include "becv/tensor.hpp"

namespace becv {

inline constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE) over [0, 1] samples; identical inputs report kPsnrCap.
double psnr(const Tensor& original, const Tensor& reconstructed);

struct FrameReport {
  int t = 0;
  FrameKind kind = FrameKind::intra;
  int layer = 0;
  std::size_t bits_motion = 0;
  std::size_t bits_latent = 0;
  double psnr = 0.0;
  float step = 0.0f;  ///< effective quantization step

  std::size_t bits() const { return bits_motion + bits_latent; }
};

struct LayerSummary {
  int frames = 0;
  double mean_bits = 0.0;
  double mean_psnr = 0.0;
};

struct SequenceSummary {
  std::vector<double> psnr;  ///< display order
  double mean_psnr = 0.0;
  double bpp = 0.0;
  std::size_t total_bits = 0;
  std::map<int, LayerSummary> layers;  ///< keyed by layer (0 = intra)
};

/// Per-frame PSNR, per-layer means and bits per pixel. Reports may be in any
/// order; each frame must appear exactly once.
SequenceSummary summarize(std::span<const Tensor> original, std::span<const Tensor> reconstructed,
                          std::span<const FrameReport> reports);

}  // namespace becv
