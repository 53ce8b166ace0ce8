#include "becv/motion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <sstream>

#include "becv/error.hpp"
#include "becv/range_coder.hpp"
#include "becv/symbol_model.hpp"

namespace becv {

namespace {

constexpr int kMotionRadius = 64;
constexpr int kMotionEscape = 2 * kMotionRadius + 1;

// Static two-sided geometric prior over quarter-pel prediction residuals.
const FrequencyTable& motion_table() {
  static const FrequencyTable table = [] {
    constexpr double kZero = 0.997;
    constexpr double kDecay = 0.75;
    constexpr double kEscape = 1e-5;
    std::vector<double> w(kMotionEscape + 1);
    const double side = (1.0 - kZero - kEscape) / 2.0;
    w[kMotionRadius] = kZero;
    double tail = 0.0;
    for (int k = 1; k <= kMotionRadius; ++k) tail += (1.0 - kDecay) * std::pow(kDecay, k - 1);
    for (int k = 1; k <= kMotionRadius; ++k) {
      const double p = side * (1.0 - kDecay) * std::pow(kDecay, k - 1) / tail;
      w[kMotionRadius + k] = p;
      w[kMotionRadius - k] = p;
    }
    w[kMotionEscape] = kEscape;
    return FrequencyTable::from_weights(w);
  }();
  return table;
}

double block_sad(const Tensor& cur, const Tensor& ref, int y0, int x0, int y1, int x1, int dy, int dx) {
  const int H = cur.height();
  const int W = cur.width();
  double sad = 0.0;
  for (int c = 0; c < cur.channels(); ++c)
    for (int y = y0; y < y1; ++y) {
      const int ry = std::clamp(y + dy, 0, H - 1);
      for (int x = x0; x < x1; ++x) {
        const int rx = std::clamp(x + dx, 0, W - 1);
        sad += std::abs(static_cast<double>(cur.at(c, y, x)) - ref.at(c, ry, rx));
      }
    }
  return sad;
}

// Quarter-pel integers on the half-resolution grid, plane order: back dx, back dy, fwd dx, fwd dy.
std::vector<int> quantize_planes(const FlowField& back, const FlowField& fwd) {
  std::vector<int> q;
  for (const FlowField* f : {&back, &fwd}) {
    const Tensor half = resample(f->tensor(), Resample::down2);
    for (float v : half.data()) {
      const double scaled = static_cast<double>(v) * kMotionPrecision;
      if (!std::isfinite(scaled) || std::abs(scaled) > 1.0e8) throw Error("flow magnitude out of range");
      q.push_back(static_cast<int>(std::lround(scaled)));
    }
  }
  return q;
}

std::pair<FlowField, FlowField> reconstruct_planes(const std::vector<int>& q, int height, int width) {
  const int hh = height / 2;
  const int hw = width / 2;
  const std::size_t plane = static_cast<std::size_t>(hh) * hw;
  auto field = [&](std::size_t offset) {
    std::vector<float> values(2 * plane);
    for (std::size_t i = 0; i < 2 * plane; ++i) values[i] = static_cast<float>(q[offset + i]) / kMotionPrecision;
    return FlowField(resample(Tensor(2, hh, hw, std::move(values)), Resample::up2));
  };
  return {field(0), field(2 * plane)};
}

// Left neighbour, or the one above for the first column.
int predict(const std::vector<int>& q, std::size_t base, int y, int x, int w) {
  if (x > 0) return q[base + static_cast<std::size_t>(y) * w + x - 1];
  if (y > 0) return q[base + static_cast<std::size_t>(y - 1) * w];
  return 0;
}

void check_even(int height, int width) {
  if (height % 2 != 0 || width % 2 != 0 || height < 2 || width < 2) {
    throw ShapeError("motion coding needs even dims, got " + std::to_string(height) + "x" +
                     std::to_string(width));
  }
}

}  // namespace

FlowField estimate_flow(const Tensor& current, const Tensor& reference, const MotionSearch& search) {
  if (!current.same_shape(reference)) {
    throw ShapeError("estimate_flow: " + current.shape_string() + " vs " + reference.shape_string());
  }
  if (search.block < 1 || search.range < 0) throw Error("invalid motion search parameters");
  const int H = current.height();
  const int W = current.width();
  FlowField flow(H, W);
  for (int by = 0; by < H; by += search.block) {
    for (int bx = 0; bx < W; bx += search.block) {
      const int y1 = std::min(by + search.block, H);
      const int x1 = std::min(bx + search.block, W);
      double best = std::numeric_limits<double>::infinity();
      int best_dx = 0;
      int best_dy = 0;
      for (int dy = -search.range; dy <= search.range; ++dy) {
        for (int dx = -search.range; dx <= search.range; ++dx) {
          const double sad = block_sad(current, reference, by, bx, y1, x1, dy, dx);
          bool take = sad < best;
          if (sad == best) {
            const int cost = std::abs(dx) + std::abs(dy);
            const int best_cost = std::abs(best_dx) + std::abs(best_dy);
            take = cost < best_cost || (cost == best_cost && (dy < best_dy || (dy == best_dy && dx < best_dx)));
          }
          if (take) {
            best = sad;
            best_dx = dx;
            best_dy = dy;
          }
        }
      }
      for (int y = by; y < y1; ++y)
        for (int x = bx; x < x1; ++x) {
          flow.dx(y, x) = static_cast<float>(best_dx);
          flow.dy(y, x) = static_cast<float>(best_dy);
        }
    }
  }
  return flow;
}

MotionCode code_motion(const FlowField& back, const FlowField& fwd) {
  if (back.height() != fwd.height() || back.width() != fwd.width()) {
    throw ShapeError("code_motion: backward and forward flows differ in size");
  }
  const int H = back.height();
  const int W = back.width();
  check_even(H, W);
  const std::vector<int> q = quantize_planes(back, fwd);
  const int hw = W / 2;
  const int hh = H / 2;
  const std::size_t plane = static_cast<std::size_t>(hh) * hw;

  const auto& table = motion_table();
  RangeEncoder enc;
  for (std::size_t p = 0; p < 4; ++p) {
    const std::size_t base = p * plane;
    for (int y = 0; y < hh; ++y)
      for (int x = 0; x < hw; ++x) {
        const std::int64_t r = static_cast<std::int64_t>(q[base + static_cast<std::size_t>(y) * hw + x]) -
                               predict(q, base, y, x, hw);
        if (r >= -kMotionRadius && r <= kMotionRadius) {
          enc.encode(table, static_cast<int>(r + kMotionRadius));
        } else {
          enc.encode(table, kMotionEscape);
          encode_exp_golomb(enc, static_cast<std::uint32_t>((r < 0 ? -r : r) - (kMotionRadius + 1)));
          enc.encode_bits(r < 0 ? 1u : 0u, 1);
        }
      }
  }
  MotionCode code;
  code.bytes = enc.finish();
  auto [b, f] = reconstruct_planes(q, H, W);
  code.back = std::move(b);
  code.fwd = std::move(f);
  return code;
}

std::pair<FlowField, FlowField> decode_motion(std::span<const std::uint8_t> bytes, int height, int width) {
  check_even(height, width);
  const int hw = width / 2;
  const int hh = height / 2;
  const std::size_t plane = static_cast<std::size_t>(hh) * hw;
  std::vector<int> q(4 * plane);
  const auto& table = motion_table();
  RangeDecoder dec(bytes);
  for (std::size_t p = 0; p < 4; ++p) {
    const std::size_t base = p * plane;
    for (int y = 0; y < hh; ++y)
      for (int x = 0; x < hw; ++x) {
        const int s = dec.decode(table);
        std::int64_t r;
        if (s != kMotionEscape) {
          r = s - kMotionRadius;
        } else {
          const std::int64_t m = static_cast<std::int64_t>(decode_exp_golomb(dec)) + kMotionRadius + 1;
          r = dec.decode_bits(1) ? -m : m;
        }
        const std::int64_t v = r + predict(q, base, y, x, hw);
        if (std::abs(v) > (1ll << 30)) throw DecodeError("decoded motion out of range");
        q[base + static_cast<std::size_t>(y) * hw + x] = static_cast<int>(v);
      }
  }
  dec.finish();
  return reconstruct_planes(q, height, width);
}

FlowField accumulate_flow(const FlowField& first_hop, const FlowField& second_hop) {
  if (first_hop.height() != second_hop.height() || first_hop.width() != second_hop.width()) {
    throw ShapeError("accumulate_flow: hop sizes differ");
  }
  return FlowField(add(second_hop.tensor(), warp_bilinear(first_hop.tensor(), second_hop)));
}

FlowField flow_at_scale(const FlowField& flow, int scale) {
  Tensor t = flow.tensor();
  for (int s = 0; s < scale; ++s) t = resample(t, Resample::down2);
  return FlowField(becv::scale(t, 1.0f / static_cast<float>(1 << scale)));
}

std::string format_flow(const FlowField& flow, int step) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  step = std::max(step, 1);
  for (int y = 0; y < flow.height(); y += step) {
    for (int x = 0; x < flow.width(); x += step) {
      os << (x ? " " : "") << flow.dx(y, x) << ',' << flow.dy(y, x);
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace becv
