#include "becv/pipeline.hpp"

#include <chrono>
#include <memory>

#include "becv/error.hpp"
#include "becv/symbol_model.hpp"

namespace becv {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct FrameState {
  Tensor feature;  // F-hat^0
  Tensor recon;    // x-hat at the padded size
  FlowField back;  // decoded v-hat toward the primaries (B frames only)
  FlowField fwd;
  bool done = false;
};

// Everything a B frame derives from its references before touching its own latent.
struct RefData {
  RefRole role;
  int time;
  FlowField flow;
  const Tensor* base = nullptr;
  std::array<std::shared_ptr<const Tensor>, 3> feature;
  std::array<KeyValue, 3> kv;
};

struct BContext {
  std::vector<RefData> refs;
  std::array<std::vector<ReferenceInput>, 3> inputs;
  std::array<std::vector<ContextEntry>, 3> local;
};

struct Coded {
  std::vector<std::uint8_t> motion;
  std::vector<std::uint8_t> latent;
};

// State machine shared by the encoder and the decoder; the encoder calls
// exactly the reconstruction path the decoder runs.
class SequenceCoder {
 public:
  SequenceCoder(const ParameterSet& params, const GopPlan& plan, Side side, bool use_cache, int height, int width,
                const Observers& observers)
      : p_(params), plan_(plan), side_(side), cache_(use_cache), height_(height), width_(width),
        observers_(observers), frames_(plan.frame_count) {
    cache_.plan(plan, side);
  }

  const FrameState& frame(int t) const { return frames_[t]; }
  const FeatureCache& cache() const { return cache_; }

  float step(int t) const { return effective_step(qp_, quality_weight(plan_, t)); }
  void set_qp(int qp) { qp_ = qp; }

  int latent_channels() const { return p_.config.latent; }
  int latent_height() const { return height_ / 8; }
  int latent_width() const { return width_ / 8; }

  Coded encode_intra(int t, const Tensor& x) {
    const Analysis a = analyze(x, p_.transform);
    const float s = step(t);
    const auto q = quantize(a.latent, s);
    Coded c;
    c.latent = encode_symbols(q, to_symbol_units(intra_model(), s));
    finish_intra(t, q);
    return c;
  }

  void decode_intra(int t, std::span<const std::uint8_t> latent) {
    finish_intra(t, decode_symbols(latent, to_symbol_units(intra_model(), step(t))));
  }

  Coded encode_b(int t, const Tensor& x, const MotionSearch& search, const MotionOverride& override) {
    const FrameSchedule& s = plan_[t];
    auto estimate = [&](int ref) {
      if (override) {
        if (auto f = override(t, ref, height_, width_)) {
          if (f->height() != height_ || f->width() != width_) throw ShapeError("motion override has the wrong size");
          return *f;
        }
      }
      return estimate_flow(x, frames_[ref].recon, search);
    };
    MotionCode mc = code_motion(estimate(s.ref_back), estimate(s.ref_fwd));
    BContext ctx = prepare(t, mc.back, mc.fwd);

    const Analysis a = analyze(x, p_.transform, gate_for(t, ctx, Side::encoder));
    const float st = step(t);
    const auto q = quantize(a.latent, st);
    Coded c;
    c.motion = std::move(mc.bytes);
    c.latent = encode_symbols(q, to_symbol_units(prior(ctx), st));
    finish_b(t, ctx, q, std::move(mc.back), std::move(mc.fwd));
    return c;
  }

  void decode_b(int t, std::span<const std::uint8_t> motion, std::span<const std::uint8_t> latent) {
    auto [back, fwd] = decode_motion(motion, height_, width_);
    BContext ctx = prepare(t, back, fwd);
    const auto q = decode_symbols(latent, to_symbol_units(prior(ctx), step(t)));
    finish_b(t, ctx, q, std::move(back), std::move(fwd));
  }

 private:
  SymbolModel intra_model() const {
    return model_symbols(nullptr, nullptr, latent_channels(), latent_height(), latent_width(), p_.entropy);
  }

  SymbolModel prior(const BContext& ctx) const {
    const Tensor* back = nullptr;
    const Tensor* fwd = nullptr;
    for (const ContextEntry& e : ctx.local[2]) {
      if (e.role == RefRole::back) back = &e.tensor;
      if (e.role == RefRole::fwd) fwd = &e.tensor;
    }
    if (back == nullptr || fwd == nullptr) throw Error("B frame lacks a primary reference context");
    return model_symbols(back, fwd, latent_channels(), latent_height(), latent_width(), p_.entropy);
  }

  Tensor dequantized(std::span<const std::int32_t> q, float s) const {
    return dequantize(q, latent_channels(), latent_height(), latent_width(), s);
  }

  void finish_intra(int t, std::span<const std::int32_t> q) {
    const Synthesis syn = synthesize(dequantized(q, step(t)), p_.transform);
    Generated g = feature_generation(syn.y_hat[0], syn.contexts[0], p_.gate.generation);
    store(t, std::move(g));
  }

  void finish_b(int t, const BContext& ctx, std::span<const std::int32_t> q, FlowField back, FlowField fwd) {
    const Synthesis syn = synthesize(dequantized(q, step(t)), p_.transform, gate_for(t, ctx, Side::decoder));
    Generated g = feature_generation(syn.y_hat[0], syn.contexts[0], p_.gate.generation);
    frames_[t].back = std::move(back);
    frames_[t].fwd = std::move(fwd);
    store(t, std::move(g));
  }

  void store(int t, Generated g) {
    frames_[t].feature = std::move(g.feature);
    frames_[t].recon = std::move(g.reconstruction);
    frames_[t].done = true;
  }

  const FrameState& reference(int t, int ref) const {
    if (!frames_[ref].done) {
      throw Error("frame " + std::to_string(t) + " references frame " + std::to_string(ref) +
                  " before it was decoded");
    }
    return frames_[ref];
  }

  BContext prepare(int t, const FlowField& back, const FlowField& fwd) {
    const FrameSchedule& s = plan_[t];
    BContext ctx;
    for (const Reference& r : s.references()) {
      RefData d{r.role, r.time, {}, &reference(t, r.time).feature, {}, {}};
      switch (r.role) {
        case RefRole::back: d.flow = back; break;
        case RefRole::fwd: d.flow = fwd; break;
        case RefRole::ext_back:
          d.flow = refine_flow(accumulate_flow(reference(t, s.ref_back).back, back), p_.flow_refine);
          break;
        case RefRole::ext_fwd:
          d.flow = refine_flow(accumulate_flow(reference(t, s.ref_fwd).fwd, fwd), p_.flow_refine);
          break;
      }
      if (observers_.on_flow) observers_.on_flow({t, r.role, r.time, d.flow});
      d.feature[1] = cache_.fetch_or_compute({r.time, CacheKind::feature, 1, side_},
                                             [&] { return extract_feature(*d.base, 0, p_.transform); });
      d.feature[2] = cache_.fetch_or_compute({r.time, CacheKind::feature, 2, side_},
                                             [&] { return extract_feature(*d.feature[1], 1, p_.transform); });
      for (int l = 0; l < 3; ++l) {
        if (!role_active(r.role, l)) continue;
        const Tensor& f = l == 0 ? *d.base : *d.feature[l];
        std::optional<KeyValue> fresh;
        auto embed = [&] {
          if (!fresh) fresh = embed_reference(f, p_.attention[l]);
        };
        auto key = cache_.fetch_or_compute({r.time, CacheKind::key, l, side_}, [&] {
          embed();
          return fresh->key;
        });
        auto value = cache_.fetch_or_compute({r.time, CacheKind::value, l, side_}, [&] {
          embed();
          return fresh->value;
        });
        d.kv[l] = {*key, *value};
      }
      ctx.refs.push_back(std::move(d));
    }
    for (int l = 0; l < 3; ++l) {
      for (const RefData& d : ctx.refs) {
        if (!role_active(d.role, l)) continue;
        const Tensor* f = l == 0 ? d.base : d.feature[l].get();
        ctx.inputs[l].push_back({d.role, d.time, f, &d.kv[l], &d.flow});
      }
      ctx.local[l] = extract_local(l, ctx.inputs[l]);
    }
    return ctx;
  }

  ContextGate gate_for(int t, const BContext& ctx, Side side) const {
    return [this, t, &ctx, side](int scale, const Tensor& latent) {
      ContextSet set{scale, side, ctx.local[scale],
                     extract_nonlocal(latent, scale, ctx.inputs[scale], p_.attention[scale])};
      if (observers_.on_attention) {
        const Tensor q = embed_query(latent, p_.attention[scale]);
        for (const ReferenceInput& r : ctx.inputs[scale]) observers_.on_attention({t, scale, side, r.role, r.time, q, *r.kv});
      }
      GateOutput g = gate(latent, set, p_.gate);
      if (observers_.on_gate) observers_.on_gate({t, scale, side, g});
      return std::move(g.gated);
    };
  }

  const ParameterSet& p_;
  const GopPlan& plan_;
  Side side_;
  FeatureCache cache_;
  int height_;
  int width_;
  int qp_ = 0;
  const Observers& observers_;
  std::vector<FrameState> frames_;
};

GopPlan plan_or_throw(int intra_period, int frame_count) {
  try {
    return build_plan(intra_period, frame_count);
  } catch (const std::invalid_argument& e) {
    throw Error(e.what());
  }
}

}  // namespace

int padded_dim(int dim) { return (dim + 15) / 16 * 16; }

EncodeResult encode_sequence(const SequenceJob& job, const ParameterSet& params, const EncoderOptions& options) {
  const auto start = Clock::now();
  if (job.frames.empty()) throw Error("cannot encode an empty sequence");
  const Tensor& first = job.frames.front();
  for (const Tensor& f : job.frames) {
    if (f.channels() != 3 || !f.same_shape(first)) {
      throw ShapeError("all frames must be 3x" + std::to_string(first.height()) + "x" +
                       std::to_string(first.width()) + ", got " + f.shape_string());
    }
  }
  if (first.height() < 1 || first.width() < 1 || first.height() > 0xFFFF || first.width() > 0xFFFF ||
      job.frames.size() > 0xFFFF) {
    throw Error("sequence dimensions do not fit the bitstream header");
  }
  if (job.qp < 0 || job.qp >= kQpCount) throw Error("qp must be in 0..3, got " + std::to_string(job.qp));
  const GopPlan plan = plan_or_throw(job.intra_period, static_cast<int>(job.frames.size()));

  const int H = first.height();
  const int W = first.width();
  const int Hp = padded_dim(H);
  const int Wp = padded_dim(W);
  SequenceCoder coder(params, plan, Side::encoder, job.use_cache, Hp, Wp, options.observers);
  coder.set_qp(job.qp);

  Bitstream stream;
  stream.header = {W, H, plan.frame_count, plan.intra_period, job.qp, params.profile_id()};
  EncodeResult result;
  for (int t : plan.coding_order) {
    const FrameSchedule& s = plan[t];
    const Tensor x = pad_to(job.frames[t], Hp, Wp);
    Coded c = s.kind == FrameKind::intra ? coder.encode_intra(t, x)
                                         : coder.encode_b(t, x, options.search, options.motion);
    FrameReport r;
    r.t = t;
    r.kind = s.kind;
    r.layer = s.layer;
    r.bits_motion = c.motion.size() * 8;
    r.bits_latent = c.latent.size() * 8;
    r.step = coder.step(t);
    r.psnr = psnr(job.frames[t], crop(coder.frame(t).recon, H, W));
    result.reports.push_back(r);
    stream.chunks.push_back({s.kind, std::move(c.motion), std::move(c.latent)});
  }
  result.bitstream = write_bitstream(stream);
  for (int t = 0; t < plan.frame_count; ++t) result.reconstructions.push_back(crop(coder.frame(t).recon, H, W));
  result.cache = coder.cache().stats();
  result.seconds = since(start);
  return result;
}

DecodeResult decode_sequence(std::span<const std::uint8_t> bitstream, const ParameterSet& params, bool use_cache,
                             const Observers& observers) {
  const auto start = Clock::now();
  const Bitstream stream = read_bitstream(bitstream);
  const StreamHeader& h = stream.header;
  if (h.profile != params.profile_id()) {
    throw Error("bitstream was produced with profile id " + std::to_string(h.profile) +
                ", parameter file has " + std::to_string(params.profile_id()));
  }
  if (h.qp >= kQpCount) throw DecodeError("bitstream qp " + std::to_string(h.qp) + " is out of range");
  const GopPlan plan = plan_or_throw(h.intra_period, h.frame_count);
  const int Hp = padded_dim(h.height);
  const int Wp = padded_dim(h.width);
  SequenceCoder coder(params, plan, Side::decoder, use_cache, Hp, Wp, observers);
  coder.set_qp(h.qp);

  for (std::size_t k = 0; k < stream.chunks.size(); ++k) {
    const int t = plan.coding_order[k];
    const FrameChunk& c = stream.chunks[k];
    try {
      if (c.kind == FrameKind::intra) {
        coder.decode_intra(t, c.latent);
      } else {
        coder.decode_b(t, c.motion, c.latent);
      }
    } catch (const Error& e) {
      throw DecodeError("coding position " + std::to_string(k) + " (frame " + std::to_string(t) + "): " + e.what());
    }
  }
  DecodeResult result;
  result.header = h;
  for (int t = 0; t < plan.frame_count; ++t) result.frames.push_back(crop(coder.frame(t).recon, h.height, h.width));
  result.cache = coder.cache().stats();
  result.seconds = since(start);
  return result;
}

std::size_t intra_latent_bits(const Tensor& frame, const ParameterSet& params, float step) {
  if (frame.channels() != 3) throw ShapeError("intra_latent_bits expects an RGB frame");
  const Tensor x = pad_to(frame, padded_dim(frame.height()), padded_dim(frame.width()));
  const Analysis a = analyze(x, params.transform);
  const SymbolModel m = model_symbols(nullptr, nullptr, a.latent.channels(), a.latent.height(), a.latent.width(),
                                      params.entropy);
  return encode_symbols(quantize(a.latent, step), to_symbol_units(m, step)).size() * 8;
}

}  // namespace becv
