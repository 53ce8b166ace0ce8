#include "becv/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "becv/error.hpp"

namespace becv {

double psnr(const Tensor& original, const Tensor& reconstructed) {
  if (!original.same_shape(reconstructed)) {
    throw ShapeError("psnr: " + original.shape_string() + " vs " + reconstructed.shape_string());
  }
  if (original.empty()) throw Error("psnr of an empty frame");
  auto a = original.data();
  auto b = reconstructed.data();
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

SequenceSummary summarize(std::span<const Tensor> original, std::span<const Tensor> reconstructed,
                          std::span<const FrameReport> reports) {
  if (original.size() != reconstructed.size() || original.size() != reports.size()) {
    throw Error("summarize: " + std::to_string(original.size()) + " originals, " +
                std::to_string(reconstructed.size()) + " reconstructions, " + std::to_string(reports.size()) +
                " reports");
  }
  SequenceSummary s;
  for (std::size_t t = 0; t < original.size(); ++t) s.psnr.push_back(psnr(original[t], reconstructed[t]));
  std::vector<bool> seen(original.size(), false);
  for (const FrameReport& r : reports) {
    if (r.t < 0 || static_cast<std::size_t>(r.t) >= seen.size() || seen[r.t]) {
      throw Error("summarize: report for frame " + std::to_string(r.t) + " is out of range or repeated");
    }
    seen[r.t] = true;
    s.total_bits += r.bits();
    LayerSummary& l = s.layers[r.layer];
    ++l.frames;
    l.mean_bits += static_cast<double>(r.bits());
    l.mean_psnr += s.psnr[r.t];
  }
  for (auto& [layer, l] : s.layers) {
    l.mean_bits /= l.frames;
    l.mean_psnr /= l.frames;
  }
  double sum = 0.0;
  for (double p : s.psnr) sum += p;
  s.mean_psnr = s.psnr.empty() ? 0.0 : sum / static_cast<double>(s.psnr.size());
  if (!original.empty()) {
    const double pixels =
        static_cast<double>(original.size()) * original[0].height() * static_cast<double>(original[0].width());
    s.bpp = static_cast<double>(s.total_bits) / pixels;
  }
  return s;
}

}  // namespace becv
