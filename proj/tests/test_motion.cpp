#include <doctest.h>

#include <algorithm>
#include <tuple>

#include <becv/error.hpp>
#include <becv/motion.hpp>

#include "support.hpp"

using namespace becv;

namespace {

// Exhaustive search with an explicit candidate list sorted by the tie rule.
std::pair<int, int> oracle_block(const Tensor& cur, const Tensor& ref, int by, int bx, int block, int range) {
  std::vector<std::tuple<double, int, int, int>> cands;
  for (int dy = -range; dy <= range; ++dy)
    for (int dx = -range; dx <= range; ++dx) {
      double sad = 0.0;
      for (int c = 0; c < cur.channels(); ++c)
        for (int y = by; y < std::min(by + block, cur.height()); ++y)
          for (int x = bx; x < std::min(bx + block, cur.width()); ++x) {
            const double r = test::bilinear_at(ref, c, x + dx, y + dy);
            sad += std::fabs(cur.at(c, y, x) - r);
          }
      cands.emplace_back(sad, std::abs(dx) + std::abs(dy), dy, dx);
    }
  const auto best = *std::min_element(cands.begin(), cands.end());
  return {std::get<3>(best), std::get<2>(best)};
}

}  // namespace

TEST_SUITE("motion-engine") {
  TEST_CASE("block matching agrees with the exhaustive oracle") {
    std::mt19937_64 rng(5);
    const MotionSearch search{4, 3};
    for (int trial = 0; trial < 6; ++trial) {
      const Tensor ref = test::random_tensor(rng, 3, 12, 14, 0.0f, 1.0f);
      const Tensor cur = trial % 2 == 0 ? warp_bilinear(ref, FlowField::constant(12, 14, 2.0f, -1.0f))
                                        : test::random_tensor(rng, 3, 12, 14, 0.0f, 1.0f);
      const FlowField f = estimate_flow(cur, ref, search);
      for (int by = 0; by < 12; by += 4)
        for (int bx = 0; bx < 14; bx += 4) {
          const auto [dx, dy] = oracle_block(cur, ref, by, bx, 4, 3);
          CHECK(f.dx(by, bx) == static_cast<float>(dx));
          CHECK(f.dy(by, bx) == static_cast<float>(dy));
        }
    }
  }

  TEST_CASE("flat content resolves ties toward zero motion") {
    const Tensor flat(3, 16, 16, 0.5f);
    const FlowField f = estimate_flow(flat, flat, {});
    CHECK(f == FlowField(16, 16));
  }

  TEST_CASE("global translation is recovered in the interior") {
    const Tensor ref = test::texture(32, 32);
    const Tensor cur = test::texture(32, 32, 2.0, 1.0);
    const FlowField f = estimate_flow(cur, ref, {8, 4});
    CHECK(f.dx(12, 12) == -2.0f);
    CHECK(f.dy(12, 12) == -1.0f);
  }

  TEST_CASE("motion coding round trips and quarter-pel constants survive") {
    const FlowField back = FlowField::constant(16, 24, -1.25f, 0.5f);
    const FlowField fwd = FlowField::constant(16, 24, 3.0f, -2.75f);
    const MotionCode code = code_motion(back, fwd);
    CHECK(code.back == back);
    CHECK(code.fwd == fwd);
    auto [b, f] = decode_motion(code.bytes, 16, 24);
    CHECK(b == code.back);
    CHECK(f == code.fwd);
    CHECK(code.bytes.size() < 40);
  }

  TEST_CASE("random flows decode to the encoder's reconstruction") {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 5; ++trial) {
      const FlowField back(test::random_tensor(rng, 2, 10, 14, -40.0f, 40.0f));
      const FlowField fwd = test::smooth_flow(rng, 10, 14, 6.0f);
      const MotionCode code = code_motion(back, fwd);
      auto [b, f] = decode_motion(code.bytes, 10, 14);
      CHECK(b == code.back);
      CHECK(f == code.fwd);
    }
  }

  TEST_CASE("corrupted motion payload is rejected") {
    const MotionCode code = code_motion(FlowField::constant(8, 8, 1.0f, 1.0f), FlowField::constant(8, 8, 0.0f, 0.0f));
    auto bad = code.bytes;
    bad.pop_back();
    CHECK_THROWS_AS(decode_motion(bad, 8, 8), DecodeError);
    CHECK_THROWS_AS(code_motion(FlowField(7, 8), FlowField(7, 8)), ShapeError);
  }

  TEST_CASE("constant translations compose exactly") {
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<int> q(-24, 24);
    for (int trial = 0; trial < 20; ++trial) {
      const float ax = q(rng) / 4.0f, ay = q(rng) / 4.0f, bx = q(rng) / 4.0f, by = q(rng) / 4.0f;
      const FlowField acc = accumulate_flow(FlowField::constant(16, 16, ax, ay), FlowField::constant(16, 16, bx, by));
      CHECK(acc == FlowField::constant(16, 16, ax + bx, ay + by));
    }
  }

  TEST_CASE("accumulated flow matches warping twice") {
    std::mt19937_64 rng(29);
    const Tensor image = test::texture(32, 32, 0.0, 0.0, 1.3);
    for (int trial = 0; trial < 10; ++trial) {
      const FlowField first = test::smooth_flow(rng, 32, 32, 2.0f);
      const FlowField second = test::smooth_flow(rng, 32, 32, 2.0f);
      const Tensor once = warp_bilinear(image, accumulate_flow(first, second));
      const Tensor twice = warp_bilinear(warp_bilinear(image, first), second);
      CHECK(test::interior_max_diff(once, twice, 6) < 5e-2);
    }
  }

  TEST_CASE("flow at coarser scales is pooled and rescaled") {
    const FlowField f = FlowField::constant(16, 16, 4.0f, -2.0f);
    const FlowField s2 = flow_at_scale(f, 2);
    CHECK(s2.height() == 4);
    CHECK(s2 == FlowField::constant(4, 4, 1.0f, -0.5f));
    CHECK(flow_at_scale(f, 0) == f);
  }

  TEST_CASE("flow text grid") {
    const std::string s = format_flow(FlowField::constant(4, 4, 1.0f, -0.5f), 2);
    CHECK(s == "1.00,-0.50 1.00,-0.50\n1.00,-0.50 1.00,-0.50\n");
  }
}
