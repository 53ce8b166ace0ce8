#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "becv/context.hpp"
#include "becv/gate.hpp"
#include "becv/transform.hpp"

namespace becv {

struct ModelConfig {
  std::array<int, 3> widths{32, 48, 64};  ///< D^0..D^2
  int latent = 192;
  float gain = 32.0f;  ///< pixel -> feature scale of the input projection
};

enum class ProfileKind : std::uint8_t { identity = 0, seeded = 1 };

/// Every weight of the codec. Encoder and decoder read the same set.
struct ParameterSet {
  ProfileKind kind = ProfileKind::identity;
  std::uint64_t seed = 0;
  ModelConfig config;

  TransformParams transform;
  EntropyParams entropy;
  std::array<AttentionParams, 3> attention;
  GateParams gate;
  ConvWeights flow_refine;  ///< 1x1, 2 -> 2, applied to accumulated flows

  /// One-byte fingerprint of all weights, written into every bitstream.
  std::uint8_t profile_id() const;
};

/// Near-identity weights: the ladder is a lossless space-to-depth, B frames
/// code the input minus the averaged motion-aligned primaries, and the gate is
/// saturated open.
ParameterSet make_identity_profile(const ModelConfig& config = {});

/// Identity profile plus seeded Gaussian perturbation of every tensor.
ParameterSet make_seeded_profile(std::uint64_t seed, const ModelConfig& config = {});

/// Visits every weight tensor with a stable dotted name, in file order.
void for_each_tensor(ParameterSet& params, const std::function<void(const std::string&, ConvWeights&)>& visit);
void for_each_tensor(const ParameterSet& params,
                     const std::function<void(const std::string&, const ConvWeights&)>& visit);

std::vector<std::uint8_t> serialize_parameters(const ParameterSet& params);
ParameterSet deserialize_parameters(std::span<const std::uint8_t> bytes);

void save_parameters(const ParameterSet& params, const std::filesystem::path& path);
ParameterSet load_parameters(const std::filesystem::path& path);

}  // namespace becv
