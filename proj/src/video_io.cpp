#include "becv/video_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "becv/error.hpp"

namespace becv {

std::vector<std::uint8_t> to_bytes(const Tensor& frame) {
  std::vector<std::uint8_t> out(frame.size());
  auto v = frame.data();
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::lround(std::clamp(v[i], 0.0f, 1.0f) * 255.0f));
  }
  return out;
}

Tensor from_bytes(std::span<const std::uint8_t> bytes, int width, int height) {
  Tensor t(3, height, width);
  if (bytes.size() != t.size()) throw ShapeError("raw frame has the wrong byte count");
  auto d = t.data();
  for (std::size_t i = 0; i < bytes.size(); ++i) d[i] = static_cast<float>(bytes[i]) / 255.0f;
  return t;
}

std::vector<Tensor> read_raw_rgb(const std::filesystem::path& path, int width, int height, int frames) {
  if (width <= 0 || height <= 0 || frames <= 0) throw Error("raw video dimensions must be positive");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  const std::size_t frame_bytes = static_cast<std::size_t>(3) * width * height;
  std::vector<std::uint8_t> buf(frame_bytes);
  std::vector<Tensor> out;
  for (int f = 0; f < frames; ++f) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(frame_bytes));
    if (static_cast<std::size_t>(in.gcount()) != frame_bytes) {
      throw Error(path.string() + " holds fewer than " + std::to_string(frames) + " frames of " +
                  std::to_string(width) + "x" + std::to_string(height));
    }
    out.push_back(from_bytes(buf, width, height));
  }
  return out;
}

void write_raw_rgb(const std::filesystem::path& path, std::span<const Tensor> frames) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (const Tensor& f : frames) {
    if (f.channels() != 3) throw ShapeError("raw output needs 3-channel frames");
    const auto bytes = to_bytes(f);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace becv
