#include <doctest.h>

#include <becv/error.hpp>
#include <becv/gate.hpp>
#include <becv/params.hpp>

#include "support.hpp"

using namespace becv;

namespace {

ContextSet random_contexts(std::mt19937_64& rng, int scale, int refs, int d, int h, int w) {
  static const RefRole order[] = {RefRole::ext_back, RefRole::back, RefRole::fwd, RefRole::ext_fwd};
  ContextSet set;
  set.scale = scale;
  const int first = refs == 2 ? 1 : 0;
  for (int i = 0; i < refs; ++i) {
    const RefRole role = order[first + i];
    set.local.push_back({role, i, test::random_tensor(rng, d, h, w, -2.0f, 2.0f)});
    set.nonlocal.push_back({role, i, test::random_tensor(rng, d, h, w, -2.0f, 2.0f)});
  }
  return set;
}

// Forces the CC pre-activation to `bias` everywhere by silencing every weight.
GateParams saturated(const ParameterSet& base, float bias) {
  GateParams g = base.gate;
  for (auto& per_scale : g.branches)
    for (auto& slot : per_scale) {
      if (!slot) continue;
      std::ranges::fill(slot->cc.ffn_out.weight, 0.0f);
      std::ranges::fill(slot->cc.ffn_out.bias, 0.0f);
      std::ranges::fill(slot->cc.skip->weight, 0.0f);
      std::ranges::fill(slot->cc.skip->bias, bias);
    }
  return g;
}

}  // namespace

TEST_SUITE("context-gate") {
  TEST_CASE("gate values are strictly inside (0, 1) and never amplify") {
    const ParameterSet p = make_seeded_profile(21);
    std::mt19937_64 rng(83);
    for (int trial = 0; trial < 20; ++trial) {
      const int scale = static_cast<int>(rng() % 3);
      const int refs = scale == 0 ? 2 : 2 + static_cast<int>(rng() % 3);
      const int d = p.config.widths[scale];
      const ContextSet set = random_contexts(rng, scale, refs, d, 4, 5);
      const Tensor latent = test::random_tensor(rng, d, 4, 5, -20.0f, 20.0f);
      const GateOutput g = gate(latent, set, p.gate);
      for (float m : g.mask.data()) {
        CHECK(m > 0.0f);
        CHECK(m < 1.0f);
      }
      for (std::size_t i = 0; i < g.gated.size(); ++i) {
        CHECK(std::fabs(g.gated.data()[i]) <= std::fabs(g.reduced.data()[i]));
        CHECK(g.gated.data()[i] == g.mask.data()[i] * g.reduced.data()[i]);
      }
    }
  }

  TEST_CASE("forced saturation suppresses or passes the reduced contexts") {
    const ParameterSet p = make_seeded_profile(22);
    std::mt19937_64 rng(89);
    const ContextSet set = random_contexts(rng, 1, 4, p.config.widths[1], 6, 6);
    const Tensor latent = test::random_tensor(rng, p.config.widths[1], 6, 6);
    const GateOutput closed = gate(latent, set, saturated(p, -1e4f));
    for (float v : closed.gated.data()) CHECK(std::fabs(v) <= 1e-6f);
    const GateOutput open = gate(latent, set, saturated(p, 1e4f));
    CHECK(max_abs_diff(open.gated, open.reduced) <= 1e-6f);
  }

  TEST_CASE("context layout must match the schedule") {
    const ParameterSet p = make_identity_profile();
    std::mt19937_64 rng(97);
    const int d = p.config.widths[0];
    ContextSet set = random_contexts(rng, 0, 4, d, 4, 4);
    CHECK_THROWS_AS(gate(Tensor(d, 4, 4), set, p.gate), Error);  // 4 references at scale 0
    ContextSet uneven = random_contexts(rng, 1, 2, p.config.widths[1], 4, 4);
    uneven.nonlocal.pop_back();
    CHECK_THROWS_AS(gate(Tensor(p.config.widths[1], 4, 4), uneven, p.gate), Error);
    ContextSet wrong_size = random_contexts(rng, 1, 2, p.config.widths[1], 4, 4);
    CHECK_THROWS_AS(gate(Tensor(p.config.widths[1], 2, 2), wrong_size, p.gate), ShapeError);
  }

  TEST_CASE("identity profile averages the local contexts with an open gate") {
    const ParameterSet p = make_identity_profile();
    std::mt19937_64 rng(101);
    const int d = p.config.widths[0];
    const ContextSet set = random_contexts(rng, 0, 2, d, 4, 4);
    const GateOutput g = gate(Tensor(d, 4, 4), set, p.gate);
    const Tensor avg = scale(add(set.local[0].tensor, set.local[1].tensor), 0.5f);
    CHECK(max_abs_diff(g.gated, avg) <= 1e-5f);
  }

  TEST_CASE("feature generation: zero context and identity FG return the latent") {
    const ParameterSet p = make_identity_profile();
    std::mt19937_64 rng(103);
    const int d = p.config.widths[0];
    const Tensor y = test::random_tensor(rng, d, 8, 8, -10.0f, 10.0f);
    const Generated g = feature_generation(y, Tensor(d, 8, 8), p.gate.generation);
    CHECK(g.feature == y);
    CHECK(g.reconstruction.channels() == 3);
    CHECK(g.reconstruction.height() == 8);
    CHECK(g.reconstruction.width() == 8);
    for (float v : g.reconstruction.data()) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
  }

  TEST_CASE("feature generation output shape under seeded weights") {
    const ParameterSet p = make_seeded_profile(4);
    std::mt19937_64 rng(107);
    const int d = p.config.widths[0];
    const Generated g = feature_generation(test::random_tensor(rng, d, 6, 10), test::random_tensor(rng, d, 6, 10),
                                           p.gate.generation);
    CHECK(g.feature.channels() == d);
    CHECK(g.reconstruction.channels() == 3);
    CHECK(g.reconstruction.height() == 6);
    CHECK(g.reconstruction.width() == 10);
  }
}
