#pragma once

// Shared fixtures and brute-force oracles for the test suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <becv/context.hpp>
#include <becv/motion.hpp>
#include <becv/tensor.hpp>

namespace test {

inline becv::Tensor random_tensor(std::mt19937_64& rng, int c, int h, int w, float lo = -1.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> dist(lo, hi);
  becv::Tensor t(c, h, w);
  for (float& v : t.data()) v = dist(rng);
  return t;
}

inline becv::ConvWeights random_weights(std::mt19937_64& rng, int out, int in, int k) {
  std::uniform_real_distribution<float> dist(-0.5f, 0.5f);
  becv::ConvWeights cw = becv::ConvWeights::zeros(out, in, k);
  for (float& v : cw.weight) v = dist(rng);
  for (float& v : cw.bias) v = dist(rng);
  return cw;
}

/// Smooth RGB texture sampled at (x - ox, y - oy); values stay inside (0, 1).
inline becv::Tensor texture(int h, int w, double ox = 0.0, double oy = 0.0, double phase = 0.0) {
  becv::Tensor t(3, h, w);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double X = x - ox;
        const double Y = y - oy;
        t.at(c, y, x) = static_cast<float>(0.5 + 0.2 * std::sin(0.31 * X + 0.7 * c + phase) * std::cos(0.23 * Y) +
                                           0.15 * std::sin(0.11 * (X + Y) + c));
      }
  return t;
}

/// Frame t of a sequence translating by (ux, uy) pixels per frame.
inline std::vector<becv::Tensor> translating(int frames, int h, int w, double ux, double uy) {
  std::vector<becv::Tensor> out;
  for (int t = 0; t < frames; ++t) out.push_back(texture(h, w, ux * t, uy * t));
  return out;
}

/// Direct-form zero-padded convolution, one output sample at a time.
inline becv::Tensor naive_conv(const becv::Tensor& in, const becv::ConvWeights& w, int stride, bool depthwise) {
  const int k = w.kernel;
  const int pad = k / 2;
  const int ho = (in.height() + 2 * pad - k) / stride + 1;
  const int wo = (in.width() + 2 * pad - k) / stride + 1;
  becv::Tensor out(w.out_channels, ho, wo);
  for (int o = 0; o < w.out_channels; ++o)
    for (int y = 0; y < ho; ++y)
      for (int x = 0; x < wo; ++x) {
        double acc = w.bias[o];
        for (int i = 0; i < w.in_channels; ++i) {
          const int ic = depthwise ? o : i;
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const int sy = y * stride + ky - pad;
              const int sx = x * stride + kx - pad;
              if (sy < 0 || sx < 0 || sy >= in.height() || sx >= in.width()) continue;
              acc += static_cast<double>(w.w(o, i, ky, kx)) * in.at(ic, sy, sx);
            }
        }
        out.at(o, y, x) = static_cast<float>(acc);
      }
  return out;
}

/// Per-pixel bilinear sample at (sx, sy) with the position clamped to the border.
inline double bilinear_at(const becv::Tensor& t, int c, double sx, double sy) {
  sx = std::clamp(sx, 0.0, static_cast<double>(t.width() - 1));
  sy = std::clamp(sy, 0.0, static_cast<double>(t.height() - 1));
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  const int x1 = std::min(x0 + 1, t.width() - 1);
  const int y1 = std::min(y0 + 1, t.height() - 1);
  const double fx = sx - x0;
  const double fy = sy - y0;
  return (1 - fy) * ((1 - fx) * t.at(c, y0, x0) + fx * t.at(c, y0, x1)) +
         fy * ((1 - fx) * t.at(c, y1, x0) + fx * t.at(c, y1, x1));
}

/// Largest |a - b| over the interior that stays `margin` pixels from every edge.
inline double interior_max_diff(const becv::Tensor& a, const becv::Tensor& b, int margin) {
  double worst = 0.0;
  for (int c = 0; c < a.channels(); ++c)
    for (int y = margin; y < a.height() - margin; ++y)
      for (int x = margin; x < a.width() - margin; ++x)
        worst = std::max(worst, static_cast<double>(std::fabs(a.at(c, y, x) - b.at(c, y, x))));
  return worst;
}

/// Smooth random displacement field: constant offset plus low-frequency waves.
inline becv::FlowField smooth_flow(std::mt19937_64& rng, int h, int w, float amplitude) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double ax = amplitude * u(rng), ay = amplitude * u(rng);
  const double fx = 0.05 + 0.1 * u(rng), fy = 0.05 + 0.1 * u(rng), ph = 6.0 * u(rng);
  const double cx = amplitude * (u(rng) - 0.5), cy = amplitude * (u(rng) - 0.5);
  becv::FlowField f(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      f.dx(y, x) = static_cast<float>(cx + ax * std::sin(fx * x + fy * y + ph));
      f.dy(y, x) = static_cast<float>(cy + ay * std::cos(fy * x - fx * y + ph));
    }
  return f;
}

/// Explicit quadratic path: build the full similarity matrix, then multiply by V.
inline becv::Tensor quadratic_attention(const becv::Tensor& q, const becv::Tensor& k, const becv::Tensor& v) {
  const int n = static_cast<int>(k.plane_size());
  const int nq = static_cast<int>(q.plane_size());
  becv::Matrix qm(nq, q.channels()), km(k.channels(), n);
  for (int c = 0; c < q.channels(); ++c)
    for (int p = 0; p < nq; ++p) qm.at(p, c) = q.data()[c * nq + p];
  for (int c = 0; c < k.channels(); ++c)
    for (int p = 0; p < n; ++p) km.at(c, p) = k.data()[c * n + p];
  const becv::Matrix sq = becv::softmax(qm, becv::Axis::rows);  // over channels per query position
  const becv::Matrix sk = becv::softmax(km, becv::Axis::rows);  // over positions per key channel
  becv::Tensor out(v.channels(), q.height(), q.width());
  for (int p = 0; p < nq; ++p) {
    std::vector<double> sim(n, 0.0);
    for (int m = 0; m < n; ++m)
      for (int c = 0; c < k.channels(); ++c) sim[m] += static_cast<double>(sq.at(p, c)) * sk.at(c, m);
    for (int d = 0; d < v.channels(); ++d) {
      double acc = 0.0;
      for (int m = 0; m < n; ++m) acc += sim[m] * v.data()[d * n + m];
      out.data()[d * nq + p] = static_cast<float>(acc);
    }
  }
  return out;
}

}  // namespace test
