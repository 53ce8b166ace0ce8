#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "becv/tensor.hpp"

namespace becv {

// Raw video: planar 8-bit RGB, frame-major, no header.

std::vector<Tensor> read_raw_rgb(const std::filesystem::path& path, int width, int height, int frames);
void write_raw_rgb(const std::filesystem::path& path, std::span<const Tensor> frames);

/// [0,1] float -> 8-bit, rounded and clamped.
std::vector<std::uint8_t> to_bytes(const Tensor& frame);
Tensor from_bytes(std::span<const std::uint8_t> bytes, int width, int height);

}  // namespace becv
