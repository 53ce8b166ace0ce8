#include <doctest.h>

#include <filesystem>

#include <becv/error.hpp>
#include <becv/gate.hpp>
#include <becv/metrics.hpp>
#include <becv/params.hpp>
#include <becv/transform.hpp>

#include "support.hpp"

using namespace becv;

TEST_SUITE("entropy-codec") {
  TEST_CASE("latent is H/8 x W/8 with the configured channel count") {
    const ParameterSet p = make_seeded_profile(1);
    const Analysis a = analyze(test::texture(32, 48), p.transform);
    CHECK(a.latent.channels() == p.config.latent);
    CHECK(a.latent.height() == 4);
    CHECK(a.latent.width() == 6);
    CHECK(a.y[1].height() == 16);
    CHECK(a.y[2].channels() == p.config.widths[2]);
    CHECK_THROWS_AS(analyze(test::texture(30, 32), p.transform), ShapeError);
  }

  TEST_CASE("identity ladder without quantization reconstructs above 50 dB") {
    const ParameterSet p = make_identity_profile();
    std::mt19937_64 rng(3);
    for (const Tensor& x : {test::texture(32, 32), test::random_tensor(rng, 3, 16, 48, 0.0f, 1.0f)}) {
      const Analysis a = analyze(x, p.transform);
      const Synthesis s = synthesize(a.latent, p.transform);
      const Generated g = feature_generation(s.y_hat[0], s.contexts[0], p.gate.generation);
      CHECK(s.y_hat[0].height() == x.height());
      CHECK(psnr(x, g.reconstruction) >= 50.0);
    }
  }

  TEST_CASE("intra mode ignores contexts") {
    const ParameterSet p = make_seeded_profile(2);
    const Tensor x = test::texture(16, 16);
    const Analysis plain = analyze(x, p.transform);
    const Analysis with_zero = analyze(x, p.transform, ContextGate{});
    CHECK(plain.latent == with_zero.latent);
    for (const Tensor& c : plain.contexts)
      for (float v : c.data()) CHECK(v == 0.0f);
  }

  TEST_CASE("gate callback output enters every stage") {
    const ParameterSet p = make_identity_profile();
    const Tensor x = test::texture(16, 16);
    int calls = 0;
    const ContextGate g = [&](int scale, const Tensor& latent) {
      ++calls;
      return Tensor(p.config.widths[scale], latent.height(), latent.width(), 0.25f);
    };
    const Analysis a = analyze(x, p.transform, g);
    CHECK(calls == 3);
    CHECK(a.latent != analyze(x, p.transform).latent);
    const ContextGate bad = [&](int, const Tensor& latent) { return Tensor(1, latent.height(), latent.width()); };
    CHECK_THROWS_AS(analyze(x, p.transform, bad), ShapeError);
  }

  TEST_CASE("effective step follows the qp table and layer weights") {
    CHECK(effective_step(0, 1.4) == doctest::Approx(1.0));
    CHECK(effective_step(3, 1.4) == doctest::Approx(0.2));
    CHECK(effective_step(1, 0.7) == doctest::Approx(1.2));
    CHECK(effective_step(2, 0.5) == doctest::Approx(0.98));
    CHECK(effective_step(0, 0.5) > effective_step(0, 0.7));
    CHECK_THROWS_AS(effective_step(4, 1.4), Error);
    CHECK_THROWS_AS(effective_step(0, 0.0), Error);
  }

  TEST_CASE("quantize rounds half away from zero and dequantize scales back") {
    Tensor y(1, 1, 5);
    const float v[] = {0.49f, 0.5f, -0.5f, 1.26f, -3.9f};
    for (int i = 0; i < 5; ++i) y.at(0, 0, i) = v[i];
    const auto q = quantize(y, 0.5f);
    CHECK(q == std::vector<std::int32_t>{1, 1, -1, 3, -8});
    const Tensor back = dequantize(q, 1, 1, 5, 0.5f);
    CHECK(back.at(0, 0, 3) == 1.5f);
    CHECK_THROWS(quantize(y, 0.0f));
  }

  TEST_CASE("halving the step never shrinks the coded latent") {
    const ParameterSet p = make_identity_profile();
    const Tensor x = test::texture(32, 32, 0.0, 0.0, 0.7);
    const Analysis a = analyze(x, p.transform);
    const SymbolModel model = model_symbols(nullptr, nullptr, a.latent.channels(), a.latent.height(),
                                            a.latent.width(), p.entropy);
    std::size_t previous = 0;
    for (float step : {4.0f, 2.0f, 1.0f, 0.5f, 0.25f, 0.125f}) {
      const std::size_t bytes = encode_symbols(quantize(a.latent, step), to_symbol_units(model, step)).size();
      CHECK(bytes >= previous);
      previous = bytes;
    }
  }

  TEST_CASE("prior: intra is constant, B is a deterministic function of the contexts") {
    const ParameterSet p = make_seeded_profile(5);
    const int L = p.config.latent;
    const SymbolModel intra = model_symbols(nullptr, nullptr, L, 2, 3, p.entropy);
    for (float m : intra.mean.data()) CHECK(m == 0.0f);
    for (float s : intra.scale.data()) CHECK(s == p.entropy.intra_scale);

    const int d = p.config.widths[2];
    const Tensor zero(d, 4, 6);
    const SymbolModel a = model_symbols(&zero, &zero, L, 2, 3, p.entropy);
    const SymbolModel b = model_symbols(&zero, &zero, L, 2, 3, p.entropy);
    CHECK(a.mean == b.mean);
    CHECK(a.scale == b.scale);
    for (float s : a.scale.data()) CHECK(s >= kMinScale);
    CHECK_THROWS(model_symbols(&zero, nullptr, L, 2, 3, p.entropy));
    CHECK_THROWS_AS(model_symbols(&zero, &zero, L, 3, 3, p.entropy), ShapeError);
  }

  TEST_CASE("symbol units divide by the step and clamp") {
    SymbolModel m{Tensor(1, 1, 2, 3.0f), Tensor(1, 1, 2, 0.2f)};
    m.scale.at(0, 0, 1) = 1e6f;
    const SymbolModel s = to_symbol_units(m, 2.0f);
    CHECK(s.mean.at(0, 0, 0) == 1.5f);
    CHECK(s.scale.at(0, 0, 0) == kMinScale);
    CHECK(s.scale.at(0, 0, 1) == kMaxScale);
  }
}

TEST_SUITE("parameters") {
  TEST_CASE("seeded profiles are reproducible and distinct") {
    const auto a = serialize_parameters(make_seeded_profile(42));
    const auto b = serialize_parameters(make_seeded_profile(42));
    const auto c = serialize_parameters(make_seeded_profile(43));
    CHECK(a == b);
    CHECK(a != c);
    CHECK(make_seeded_profile(42).profile_id() == make_seeded_profile(42).profile_id());
    CHECK(make_identity_profile().profile_id() != make_seeded_profile(42).profile_id());
  }

  TEST_CASE("file round trip preserves every tensor") {
    const ParameterSet p = make_seeded_profile(7);
    const auto path = std::filesystem::temp_directory_path() / "becv_params_test.bin";
    save_parameters(p, path);
    const ParameterSet q = load_parameters(path);
    std::filesystem::remove(path);
    CHECK(serialize_parameters(q) == serialize_parameters(p));
    CHECK(q.kind == ProfileKind::seeded);
    CHECK(q.seed == 7u);
    std::size_t count = 0;
    for_each_tensor(q, [&](const std::string& name, const ConvWeights& w) {
      ++count;
      CHECK_FALSE(name.empty());
      CHECK(w.bias.size() == static_cast<std::size_t>(w.out_channels));
    });
    CHECK(count > 50);
  }

  TEST_CASE("malformed parameter files are rejected") {
    auto bytes = serialize_parameters(make_identity_profile());
    auto truncated = bytes;
    truncated.resize(bytes.size() - 3);
    CHECK_THROWS_AS(deserialize_parameters(truncated), DecodeError);
    auto magic = bytes;
    magic[0] = 'X';
    CHECK_THROWS_AS(deserialize_parameters(magic), DecodeError);
    auto trailing = bytes;
    trailing.push_back(1);
    CHECK_THROWS_AS(deserialize_parameters(trailing), DecodeError);
    CHECK_THROWS_AS(load_parameters("/nonexistent/params.bin"), Error);
  }

  TEST_CASE("custom widths build consistent layouts") {
    ModelConfig small;
    small.widths = {8, 12, 16};
    small.latent = 48;
    const ParameterSet p = make_seeded_profile(1, small);
    const Analysis a = analyze(test::texture(16, 16), p.transform);
    CHECK(a.latent.channels() == 48);
    const ParameterSet q = deserialize_parameters(serialize_parameters(p));
    CHECK(q.config.widths == small.widths);
  }
}
