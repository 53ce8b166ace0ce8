#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "becv/context.hpp"
#include "becv/gop.hpp"
#include "becv/tensor.hpp"

namespace becv {

enum class CacheKind : std::uint8_t { feature = 0, key = 1, value = 2 };

struct CacheKey {
  int time = 0;
  CacheKind kind = CacheKind::feature;
  int scale = 0;
  Side side = Side::encoder;

  auto operator<=>(const CacheKey&) const = default;
};

struct CacheStats {
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t stores = 0;
  std::size_t evictions = 0;
  std::size_t peak_entries = 0;

  std::size_t lookups() const { return hits + misses; }
};

/// For each display index, how many later frames (in coding order) reference
/// it in any role.
std::vector<int> plan_lifetimes(const GopPlan& plan);

/// Exact use count of every cacheable key of a plan for one side. Features are
/// cached at scales 1 and 2; keys and values at every scale where the
/// referencing role is active.
std::map<CacheKey, int> plan_key_uses(const GopPlan& plan, Side side);

/// Plan-driven store of per-reference features and attention embeddings.
/// Each fetch consumes one planned use; an entry is dropped after its last use.
class FeatureCache {
 public:
  using Producer = std::function<Tensor()>;

  explicit FeatureCache(bool enabled = true) : enabled_(enabled) {}

  /// Replaces all planned counts (live entries are discarded).
  void plan(const GopPlan& plan, Side side);
  void set_uses(const CacheKey& key, int uses);

  /// Returns the stored tensor or runs `producer`. If the producer throws,
  /// nothing is stored and no use is consumed.
  std::shared_ptr<const Tensor> fetch_or_compute(const CacheKey& key, const Producer& producer);

  bool enabled() const { return enabled_; }
  const CacheStats& stats() const { return stats_; }
  std::size_t live_entries() const { return entries_.size(); }
  int remaining_uses(const CacheKey& key) const;

 private:
  bool enabled_;
  std::map<CacheKey, int> uses_;
  std::map<CacheKey, std::shared_ptr<const Tensor>> entries_;
  CacheStats stats_;
};

}  // namespace becv
