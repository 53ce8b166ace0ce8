#include "becv/bitstream.hpp"

#include <string>

#include "becv/error.hpp"

namespace becv {

namespace {

void put(std::vector<std::uint8_t>& out, std::uint64_t v, int n) {
  for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get(std::span<const std::uint8_t> in, std::size_t pos, int n) {
  std::uint32_t v = 0;
  for (int i = 0; i < n; ++i) v |= static_cast<std::uint32_t>(in[pos + i]) << (8 * i);
  return v;
}

void check_range(const char* what, int v, int lo, int hi) {
  if (v < lo || v > hi) {
    throw Error(std::string("bitstream ") + what + " " + std::to_string(v) + " outside [" + std::to_string(lo) +
                ", " + std::to_string(hi) + "]");
  }
}

}  // namespace

std::vector<std::uint8_t> write_bitstream(const Bitstream& stream) {
  const StreamHeader& h = stream.header;
  check_range("width", h.width, 1, 0xFFFF);
  check_range("height", h.height, 1, 0xFFFF);
  check_range("frame count", h.frame_count, 1, 0xFFFF);
  check_range("intra period", h.intra_period, 2, 0xFFFF);
  check_range("qp", h.qp, 0, 255);
  if (stream.chunks.size() != static_cast<std::size_t>(h.frame_count)) {
    throw Error("bitstream has " + std::to_string(stream.chunks.size()) + " chunks for " +
                std::to_string(h.frame_count) + " frames");
  }
  std::vector<std::uint8_t> out{'B', 'E', 'C', 'V', kStreamVersion};
  put(out, h.width, 2);
  put(out, h.height, 2);
  put(out, h.frame_count, 2);
  put(out, h.intra_period, 2);
  put(out, h.qp, 1);
  put(out, h.profile, 1);
  for (const FrameChunk& c : stream.chunks) {
    out.push_back(static_cast<std::uint8_t>(c.kind));
    put(out, c.motion.size(), 4);
    put(out, c.latent.size(), 4);
    out.insert(out.end(), c.motion.begin(), c.motion.end());
    out.insert(out.end(), c.latent.begin(), c.latent.end());
  }
  return out;
}

Bitstream read_bitstream(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) throw DecodeError("bitstream shorter than its header");
  if (bytes[0] != 'B' || bytes[1] != 'E' || bytes[2] != 'C' || bytes[3] != 'V') {
    throw DecodeError("not a BECV bitstream (bad magic)");
  }
  if (bytes[4] != kStreamVersion) throw DecodeError("unsupported bitstream version " + std::to_string(bytes[4]));
  Bitstream s;
  StreamHeader& h = s.header;
  h.width = static_cast<int>(get(bytes, 5, 2));
  h.height = static_cast<int>(get(bytes, 7, 2));
  h.frame_count = static_cast<int>(get(bytes, 9, 2));
  h.intra_period = static_cast<int>(get(bytes, 11, 2));
  h.qp = bytes[13];
  h.profile = bytes[14];
  if (h.width == 0 || h.height == 0 || h.frame_count == 0) throw DecodeError("bitstream header has zero dimensions");

  GopPlan plan;
  try {
    plan = build_plan(h.intra_period, h.frame_count);
  } catch (const std::invalid_argument& e) {
    throw DecodeError(std::string("bitstream header: ") + e.what());
  }

  std::size_t pos = kHeaderBytes;
  for (int k = 0; k < h.frame_count; ++k) {
    const int t = plan.coding_order[k];
    auto where = [&] {
      return " at coding position " + std::to_string(k) + " (frame " + std::to_string(t) + ")";
    };
    if (bytes.size() - pos < kChunkHeaderBytes) throw DecodeError("stream truncated in chunk header" + where());
    FrameChunk c;
    const std::uint8_t kind = bytes[pos];
    if (kind != static_cast<std::uint8_t>(plan[t].kind)) {
      throw DecodeError("chunk kind " + std::to_string(kind) + " does not match the plan" + where());
    }
    c.kind = static_cast<FrameKind>(kind);
    const std::size_t motion_len = get(bytes, pos + 1, 4);
    const std::size_t latent_len = get(bytes, pos + 5, 4);
    pos += kChunkHeaderBytes;
    if (c.kind == FrameKind::intra && motion_len != 0) throw DecodeError("intra chunk carries motion" + where());
    if (bytes.size() - pos < motion_len || bytes.size() - pos - motion_len < latent_len) {
      throw DecodeError("stream truncated in chunk payload" + where());
    }
    c.motion.assign(bytes.begin() + pos, bytes.begin() + pos + motion_len);
    pos += motion_len;
    c.latent.assign(bytes.begin() + pos, bytes.begin() + pos + latent_len);
    pos += latent_len;
    s.chunks.push_back(std::move(c));
  }
  if (pos != bytes.size()) throw DecodeError("bitstream has " + std::to_string(bytes.size() - pos) + " trailing bytes");
  return s;
}

}  // namespace becv
