#include "becv/params.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>

#include "becv/error.hpp"

namespace becv {

namespace {

constexpr std::uint8_t kFormatVersion = 1;
constexpr float kGateOpenBias = 20.0f;
constexpr float kPriorScale = 0.45f;

ConvWeights pointwise_identity(int out, int in, float value = 1.0f) {
  ConvWeights cw = ConvWeights::zeros(out, in, 1);
  for (int i = 0; i < std::min(out, in); ++i) cw.w(i, i, 0, 0) = value;
  return cw;
}

ConvWeights depthwise_center(int channels) {
  ConvWeights cw = ConvWeights::zeros(channels, 1, 3);
  for (int c = 0; c < channels; ++c) cw.w(c, 0, 1, 1) = 1.0f;
  return cw;
}

// Residual block whose learned branch is silent: output = skip(x).
DepthConvBlock quiet_block(int in, int hidden, int out, std::optional<ConvWeights> skip) {
  return {ConvWeights::zeros(in, 1, 3), ConvWeights::zeros(hidden, in, 1), ConvWeights::zeros(out, hidden, 1),
          std::move(skip)};
}

// 3x3 stride-2 space-to-depth: output channel 4c + 2a + b reads input channel c
// at offset (a, b) inside each 2x2 cell.
void polyphase(ConvWeights& cw, int channel_offset, float sign) {
  for (int c = 0; 4 * c + 3 < cw.out_channels && c + channel_offset < cw.in_channels; ++c) {
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) cw.w(4 * c + 2 * a + b, c + channel_offset, 1 + a, 1 + b) = sign;
  }
}

ConvWeights average_pool(int out, int in) {
  ConvWeights cw = ConvWeights::zeros(out, in, 3);
  for (int c = 0; c < std::min(out, in); ++c)
    for (int a = 1; a < 3; ++a)
      for (int b = 1; b < 3; ++b) cw.w(c, c, a, b) = 0.25f;
  return cw;
}

GateBranch identity_branch(int width, int references) {
  const int cc_in = (1 + 2 * references) * width;
  ConvWeights skip = ConvWeights::zeros(width, cc_in, 1);
  std::ranges::fill(skip.bias, kGateOpenBias);
  GateBranch br{quiet_block(cc_in, width, width, std::move(skip)), ConvWeights::zeros(width, 2 * references * width, 1)};
  // DR averages the local contexts; non-local channels start silent.
  for (int r = 0; r < references; ++r)
    for (int c = 0; c < width; ++c) br.dr.w(c, r * width + c, 0, 0) = 1.0f / static_cast<float>(references);
  return br;
}

// Portable normal sampler; std::normal_distribution is not reproducible across
// standard libraries.
class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed) : engine_(seed) {}
  double operator()() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  double uniform_open() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

template <typename Set, typename Visit>
void visit_all(Set& p, Visit&& visit) {
  auto block = [&](const std::string& name, auto& b) {
    using B = std::remove_cvref_t<decltype(b)>;
    if constexpr (std::is_same_v<B, DWConvBlock>) {
      visit(name + ".in_proj", b.in_proj);
      visit(name + ".depthwise", b.depthwise);
      visit(name + ".out_proj", b.out_proj);
    } else {
      visit(name + ".depthwise", b.depthwise);
      visit(name + ".ffn_in", b.ffn_in);
      visit(name + ".ffn_out", b.ffn_out);
    }
    if (b.skip) visit(name + ".skip", *b.skip);
  };
  visit("transform.input", p.transform.input);
  for (int l = 0; l < 3; ++l) visit("transform.down" + std::to_string(l), p.transform.down[l]);
  for (int l = 0; l < 3; ++l) visit("transform.up" + std::to_string(l), p.transform.up[l]);
  for (int l = 0; l < 2; ++l) visit("transform.extract" + std::to_string(l), p.transform.extract[l]);
  visit("entropy.hidden", p.entropy.hidden);
  visit("entropy.head", p.entropy.head);
  for (int l = 0; l < 3; ++l) {
    const std::string base = "attention" + std::to_string(l);
    auto& a = p.attention[l];
    visit(base + ".query", a.query);
    block(base + ".reference", a.reference);
    visit(base + ".key", a.key);
    visit(base + ".value", a.value);
  }
  for (int l = 0; l < 3; ++l) {
    for (int n = 0; n <= kMaxReferences; ++n) {
      auto& slot = p.gate.branches[l][n];
      if (!slot) continue;
      const std::string base = "gate" + std::to_string(l) + ".n" + std::to_string(n);
      block(base + ".cc", slot->cc);
      visit(base + ".dr", slot->dr);
    }
  }
  block("fg.first", p.gate.generation.first);
  block("fg.second", p.gate.generation.second);
  visit("fg.reconstruction", p.gate.generation.reconstruction);
  visit("flow_refine", p.flow_refine);
}

class Writer {
 public:
  void u8(std::uint8_t v) { out.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(const std::string& s) { out.insert(out.end(), s.begin(), s.end()); }

  std::vector<std::uint8_t> out;

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string text(std::size_t n) {
    need(n);
    std::string s(in_.begin() + pos_, in_.begin() + pos_ + n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) {
    if (in_.size() - pos_ < n) throw DecodeError("parameter file truncated at byte " + std::to_string(pos_));
  }
  std::uint64_t le(int n) {
    need(n);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

void for_each_tensor(ParameterSet& params, const std::function<void(const std::string&, ConvWeights&)>& visit) {
  visit_all(params, visit);
}

void for_each_tensor(const ParameterSet& params,
                     const std::function<void(const std::string&, const ConvWeights&)>& visit) {
  visit_all(params, visit);
}

ParameterSet make_identity_profile(const ModelConfig& config) {
  const auto& D = config.widths;
  if (std::ranges::any_of(D, [](int d) { return d < 3; }) || config.latent < 4 || !(config.gain > 0.0f)) {
    throw Error("invalid model configuration");
  }
  const float g = config.gain;
  ParameterSet p;
  p.kind = ProfileKind::identity;
  p.config = config;

  auto& tr = p.transform;
  tr.input = pointwise_identity(D[0], 3, g);
  for (int c = 0; c < 3; ++c) tr.input.bias[c] = -0.5f * g;
  const std::array<int, 3> next{D[1], D[2], config.latent};
  for (int l = 0; l < 3; ++l) {
    tr.down[l] = ConvWeights::zeros(next[l], 2 * D[l], 3);
    polyphase(tr.down[l], 0, 1.0f);
  }
  // Only the finest stage is conditional: y^1 = space_to_depth(y^0 - C^0).
  polyphase(tr.down[0], D[0], -1.0f);
  tr.up[2] = pointwise_identity(4 * D[2], config.latent);
  tr.up[1] = pointwise_identity(4 * D[1], 2 * D[2]);
  for (int i = D[2]; i < 2 * D[2]; ++i) tr.up[1].w(i, i, 0, 0) = 0.0f;
  tr.up[0] = pointwise_identity(4 * D[0], 2 * D[1]);
  for (int i = D[1]; i < 2 * D[1]; ++i) tr.up[0].w(i, i, 0, 0) = 0.0f;
  tr.extract[0] = average_pool(D[1], D[0]);
  tr.extract[1] = average_pool(D[2], D[1]);

  p.entropy.hidden = ConvWeights::zeros(D[2], 2 * D[2], 3);
  p.entropy.head = ConvWeights::zeros(2 * config.latent, D[2], 1);
  const float raw = static_cast<float>(std::log(std::expm1(static_cast<double>(kPriorScale - kMinScale))));
  std::fill(p.entropy.head.bias.begin() + config.latent, p.entropy.head.bias.end(), raw);
  p.entropy.intra_scale = 0.5f * g;

  for (int l = 0; l < 3; ++l) {
    auto& a = p.attention[l];
    a.query = pointwise_identity(D[l], D[l]);
    a.reference = {pointwise_identity(D[l], D[l]), depthwise_center(D[l]), ConvWeights::zeros(D[l], D[l], 1),
                   std::nullopt};
    a.key = pointwise_identity(D[l], D[l]);
    a.value = pointwise_identity(D[l], D[l]);
  }

  p.gate.branches[0][2] = identity_branch(D[0], 2);
  for (int l = 1; l < 3; ++l)
    for (int n = 2; n <= kMaxReferences; ++n) p.gate.branches[l][n] = identity_branch(D[l], n);

  auto& fg = p.gate.generation;
  ConvWeights pass_context = ConvWeights::zeros(D[0], 2 * D[0], 1);
  for (int c = 0; c < D[0]; ++c) pass_context.w(c, D[0] + c, 0, 0) = 1.0f;
  fg.first = quiet_block(2 * D[0], D[0], D[0], std::move(pass_context));
  fg.second = quiet_block(D[0], D[0], D[0], std::nullopt);
  fg.reconstruction = pointwise_identity(3, D[0], 1.0f / g);
  std::ranges::fill(fg.reconstruction.bias, 0.5f);

  p.flow_refine = pointwise_identity(2, 2);
  return p;
}

ParameterSet make_seeded_profile(std::uint64_t seed, const ModelConfig& config) {
  ParameterSet p = make_identity_profile(config);
  p.kind = ProfileKind::seeded;
  p.seed = seed;
  Gaussian normal(seed);
  for_each_tensor(p, [&](const std::string& name, ConvWeights& cw) {
    const int fan_in = cw.in_channels * cw.kernel * cw.kernel;
    const double sd = 0.05 / std::sqrt(static_cast<double>(fan_in));
    for (float& w : cw.weight) w += static_cast<float>(sd * normal());
    if (name.starts_with("gate") && name.ends_with(".cc.skip")) {
      for (float& b : cw.bias) b = static_cast<float>(2.0 + 0.5 * normal());
    }
  });
  return p;
}

std::uint8_t ParameterSet::profile_id() const {
  std::uint32_t h = 2166136261u;
  for (std::uint8_t b : serialize_parameters(*this)) h = (h ^ b) * 16777619u;
  return static_cast<std::uint8_t>(h ^ (h >> 8) ^ (h >> 16) ^ (h >> 24));
}

std::vector<std::uint8_t> serialize_parameters(const ParameterSet& params) {
  Writer w;
  w.bytes("BECP");
  w.u8(kFormatVersion);
  w.u8(static_cast<std::uint8_t>(params.kind));
  w.u64(params.seed);
  for (int d : params.config.widths) w.u16(static_cast<std::uint16_t>(d));
  w.u16(static_cast<std::uint16_t>(params.config.latent));
  w.f32(params.config.gain);
  w.f32(params.entropy.intra_scale);
  std::uint32_t count = 0;
  for_each_tensor(params, [&](const std::string&, const ConvWeights&) { ++count; });
  w.u32(count);
  for_each_tensor(params, [&](const std::string& name, const ConvWeights& cw) {
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.bytes(name);
    w.u32(static_cast<std::uint32_t>(cw.out_channels));
    w.u32(static_cast<std::uint32_t>(cw.in_channels));
    w.u32(static_cast<std::uint32_t>(cw.kernel));
    for (float v : cw.weight) w.f32(v);
    for (float v : cw.bias) w.f32(v);
  });
  return std::move(w.out);
}

ParameterSet deserialize_parameters(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.text(4) != "BECP") throw DecodeError("not a parameter file (bad magic)");
  if (const auto v = r.u8(); v != kFormatVersion) {
    throw DecodeError("unsupported parameter file version " + std::to_string(v));
  }
  const auto kind = r.u8();
  if (kind > 1) throw DecodeError("unknown profile kind " + std::to_string(kind));
  const std::uint64_t seed = r.u64();
  ModelConfig config;
  for (int& d : config.widths) d = r.u16();
  config.latent = r.u16();
  config.gain = r.f32();
  const float intra_scale = r.f32();

  ParameterSet p = make_identity_profile(config);
  p.kind = static_cast<ProfileKind>(kind);
  p.seed = seed;
  p.entropy.intra_scale = intra_scale;

  std::uint32_t expected = 0;
  for_each_tensor(p, [&](const std::string&, ConvWeights&) { ++expected; });
  if (const auto count = r.u32(); count != expected) {
    throw DecodeError("parameter file holds " + std::to_string(count) + " tensors, layout needs " +
                      std::to_string(expected));
  }
  for_each_tensor(p, [&](const std::string& name, ConvWeights& cw) {
    const std::string got = r.text(r.u16());
    if (got != name) throw DecodeError("parameter file: expected tensor " + name + ", found " + got);
    const auto out = r.u32();
    const auto in = r.u32();
    const auto k = r.u32();
    if (static_cast<int>(out) != cw.out_channels || static_cast<int>(in) != cw.in_channels ||
        static_cast<int>(k) != cw.kernel) {
      throw DecodeError("parameter file: tensor " + name + " has the wrong shape");
    }
    for (float& v : cw.weight) v = r.f32();
    for (float& v : cw.bias) v = r.f32();
  });
  if (!r.done()) throw DecodeError("parameter file has trailing bytes");
  return p;
}

void save_parameters(const ParameterSet& params, const std::filesystem::path& path) {
  const auto bytes = serialize_parameters(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

ParameterSet load_parameters(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open parameter file " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_parameters(bytes);
}

}  // namespace becv
