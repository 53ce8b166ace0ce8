// becv: encode, decode and inspect raw RGB sequences.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <becv/error.hpp>
#include <becv/pipeline.hpp>
#include <becv/video_io.hpp>

using namespace becv;

namespace {

struct VideoArgs {
  std::string path;
  int width = 0;
  int height = 0;
  int frames = 0;
};

void add_video(CLI::App* app, VideoArgs& v, const std::string& flag = "-i,--input") {
  app->add_option(flag, v.path, "raw planar 8-bit RGB file")->required()->check(CLI::ExistingFile);
  app->add_option("-W,--width", v.width, "frame width")->required()->check(CLI::PositiveNumber);
  app->add_option("-H,--height", v.height, "frame height")->required()->check(CLI::PositiveNumber);
  app->add_option("-n,--frames", v.frames, "frame count")->required()->check(CLI::PositiveNumber);
}

ParameterSet load_profile(const std::string& path) {
  return path.empty() ? make_identity_profile() : load_parameters(path);
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void print_cache(const char* side, const CacheStats& s) {
  std::printf("%s cache: %zu hits, %zu misses, %zu stores, %zu evictions, peak %zu entries\n", side, s.hits, s.misses,
              s.stores, s.evictions, s.peak_entries);
}

const char* kind_name(FrameKind k) { return k == FrameKind::intra ? "I" : "B"; }

// Text grid of one attention row: one character per key position, darker is stronger.
void print_grid(const std::vector<float>& row, int height, int width) {
  static const char ramp[] = " .:-=+*#%@";
  float peak = 0.0f;
  for (float v : row) peak = std::max(peak, v);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const float v = peak > 0.0f ? row[y * width + x] / peak : 0.0f;
      std::putchar(ramp[std::min(9, static_cast<int>(v * 9.999f))]);
    }
    std::putchar('\n');
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bidirectional learned video codec"};
  app.require_subcommand(1);

  // genparams
  auto* gen = app.add_subcommand("genparams", "write a parameter file");
  std::string gen_kind = "seeded", gen_out;
  std::uint64_t gen_seed = 1;
  gen->add_option("--profile", gen_kind, "identity or seeded")->check(CLI::IsMember({"identity", "seeded"}));
  gen->add_option("--seed", gen_seed, "seed for the seeded profile");
  gen->add_option("-o,--output", gen_out)->required();

  // encode
  auto* enc = app.add_subcommand("encode", "encode a raw sequence");
  VideoArgs enc_video;
  add_video(enc, enc_video);
  std::string enc_out, enc_params;
  int enc_ip = 8, enc_qp = 0;
  bool enc_no_cache = false, enc_report = false;
  enc->add_option("-o,--output", enc_out)->required();
  enc->add_option("-p,--params", enc_params, "parameter file (identity profile if omitted)");
  enc->add_option("--ip", enc_ip, "intra period (power of two)");
  enc->add_option("--qp", enc_qp, "quality index 0..3")->check(CLI::Range(0, 3));
  enc->add_flag("--no-cache", enc_no_cache, "recompute reference features");
  enc->add_flag("--report", enc_report, "print per-frame bits and PSNR");

  // decode
  auto* dec = app.add_subcommand("decode", "decode a bitstream to raw RGB");
  std::string dec_in, dec_out, dec_params;
  bool dec_no_cache = false;
  dec->add_option("-i,--input", dec_in)->required()->check(CLI::ExistingFile);
  dec->add_option("-o,--output", dec_out)->required();
  dec->add_option("-p,--params", dec_params, "parameter file (identity profile if omitted)");
  dec->add_flag("--no-cache", dec_no_cache, "recompute reference features");

  // metrics
  auto* met = app.add_subcommand("metrics", "PSNR between two raw sequences");
  VideoArgs met_video;
  std::string met_other;
  add_video(met, met_video, "-r,--reference");
  met->add_option("-d,--distorted", met_other)->required()->check(CLI::ExistingFile);

  // inspect
  auto* ins = app.add_subcommand("inspect", "print internal state");
  ins->require_subcommand(1);
  auto* ins_plan = ins->add_subcommand("plan", "coding order and references");
  int plan_ip = 8, plan_n = 9;
  ins_plan->add_option("--ip", plan_ip);
  ins_plan->add_option("-n,--frames", plan_n);

  auto* ins_flow = ins->add_subcommand("flow", "block-matching flow between two frames");
  VideoArgs flow_video;
  int flow_t = 1, flow_ref = 0, flow_step = 8;
  add_video(ins_flow, flow_video);
  ins_flow->add_option("-t", flow_t, "current frame");
  ins_flow->add_option("--ref", flow_ref, "reference frame");
  ins_flow->add_option("--step", flow_step, "grid spacing in pixels");

  auto* ins_attn = ins->add_subcommand("attention", "similarity row of one query position");
  VideoArgs attn_video;
  std::string attn_params;
  int attn_t = 1, attn_scale = 2, attn_pos = 0, attn_ip = 8;
  add_video(ins_attn, attn_video);
  ins_attn->add_option("-p,--params", attn_params);
  ins_attn->add_option("-t", attn_t, "B frame to inspect");
  ins_attn->add_option("--scale", attn_scale)->check(CLI::Range(0, 2));
  ins_attn->add_option("--pos", attn_pos, "query position (row-major)");
  ins_attn->add_option("--ip", attn_ip);

  auto* ins_gate = ins->add_subcommand("gate", "per-channel mean gate value");
  VideoArgs gate_video;
  std::string gate_params;
  int gate_t = 1, gate_ip = 8;
  add_video(ins_gate, gate_video);
  ins_gate->add_option("-p,--params", gate_params);
  ins_gate->add_option("-t", gate_t, "B frame to inspect");
  ins_gate->add_option("--ip", gate_ip);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const ParameterSet p = gen_kind == "identity" ? make_identity_profile() : make_seeded_profile(gen_seed);
      save_parameters(p, gen_out);
      std::printf("wrote %s profile (id %u) to %s\n", gen_kind.c_str(), p.profile_id(), gen_out.c_str());
    } else if (enc->parsed()) {
      const ParameterSet p = load_profile(enc_params);
      SequenceJob job{read_raw_rgb(enc_video.path, enc_video.width, enc_video.height, enc_video.frames), enc_ip,
                      enc_qp, !enc_no_cache};
      const EncodeResult r = encode_sequence(job, p);
      write_file(enc_out, r.bitstream);
      const SequenceSummary s = summarize(job.frames, r.reconstructions, r.reports);
      if (enc_report) {
        for (const FrameReport& f : r.reports) {
          std::printf("t=%d %s layer=%d step=%.3f motion=%zu latent=%zu psnr=%.2f\n", f.t, kind_name(f.kind), f.layer,
                      f.step, f.bits_motion, f.bits_latent, f.psnr);
        }
        for (const auto& [layer, l] : s.layers) {
          std::printf("layer %d: %d frames, %.0f bits/frame, %.2f dB\n", layer, l.frames, l.mean_bits, l.mean_psnr);
        }
      }
      std::printf("%zu bytes, %.4f bpp, mean PSNR %.2f dB, %.2f s\n", r.bitstream.size(), s.bpp, s.mean_psnr,
                  r.seconds);
      print_cache("encoder", r.cache);
    } else if (dec->parsed()) {
      const ParameterSet p = load_profile(dec_params);
      const DecodeResult r = decode_sequence(read_file(dec_in), p, !dec_no_cache);
      write_raw_rgb(dec_out, r.frames);
      std::printf("decoded %d frames of %dx%d in %.2f s\n", r.header.frame_count, r.header.width, r.header.height,
                  r.seconds);
      print_cache("decoder", r.cache);
    } else if (met->parsed()) {
      const auto a = read_raw_rgb(met_video.path, met_video.width, met_video.height, met_video.frames);
      const auto b = read_raw_rgb(met_other, met_video.width, met_video.height, met_video.frames);
      double sum = 0.0;
      for (std::size_t t = 0; t < a.size(); ++t) {
        const double v = psnr(a[t], b[t]);
        sum += v;
        std::printf("t=%zu psnr=%.2f\n", t, v);
      }
      std::printf("mean PSNR %.2f dB\n", sum / static_cast<double>(a.size()));
    } else if (ins_plan->parsed()) {
      std::cout << format_plan(build_plan(plan_ip, plan_n));
    } else if (ins_flow->parsed()) {
      const auto v = read_raw_rgb(flow_video.path, flow_video.width, flow_video.height, flow_video.frames);
      const FlowField f = estimate_flow(v.at(flow_t), v.at(flow_ref), {});
      std::cout << format_flow(f, flow_step);
    } else if (ins_attn->parsed()) {
      const ParameterSet p = load_profile(attn_params);
      SequenceJob job{read_raw_rgb(attn_video.path, attn_video.width, attn_video.height, attn_video.frames), attn_ip,
                      0, true};
      EncoderOptions opt;
      bool shown = false;
      opt.observers.on_attention = [&](const AttentionObservation& o) {
        if (o.t != attn_t || o.scale != attn_scale || o.side != Side::encoder) return;
        const int n = o.query.height() * o.query.width();
        if (attn_pos < 0 || attn_pos >= n) throw Error("query position outside 0.." + std::to_string(n - 1));
        std::printf("frame %d scale %d %s ref %d, query %d of %dx%d\n", o.t, o.scale, role_name(o.role), o.ref,
                    attn_pos, o.query.height(), o.query.width());
        print_grid(similarity_row(o.query, o.kv.key, attn_pos), o.kv.key.height(), o.kv.key.width());
        shown = true;
      };
      encode_sequence(job, p, opt);
      if (!shown) throw Error("frame " + std::to_string(attn_t) + " has no attention at scale " +
                              std::to_string(attn_scale) + " (is it a B frame?)");
    } else if (ins_gate->parsed()) {
      const ParameterSet p = load_profile(gate_params);
      SequenceJob job{read_raw_rgb(gate_video.path, gate_video.width, gate_video.height, gate_video.frames), gate_ip,
                      0, true};
      EncoderOptions opt;
      bool shown = false;
      opt.observers.on_gate = [&](const GateObservation& o) {
        if (o.t != gate_t || o.side != Side::decoder) return;
        std::printf("frame %d scale %d:", o.t, o.scale);
        for (int c = 0; c < o.output.mask.channels(); ++c) {
          double sum = 0.0;
          for (float v : o.output.mask.plane(c)) sum += v;
          std::printf(" %.3f", sum / static_cast<double>(o.output.mask.plane_size()));
        }
        std::printf("\n");
        shown = true;
      };
      encode_sequence(job, p, opt);
      if (!shown) throw Error("frame " + std::to_string(gate_t) + " is not a B frame");
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
