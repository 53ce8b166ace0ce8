#include "becv/cache.hpp"

#include <algorithm>

namespace becv {

std::vector<int> plan_lifetimes(const GopPlan& plan) {
  std::vector<int> uses(plan.frame_count, 0);
  for (int t : plan.coding_order) {
    for (const Reference& r : plan[t].references()) ++uses[r.time];
  }
  return uses;
}

std::map<CacheKey, int> plan_key_uses(const GopPlan& plan, Side side) {
  std::map<CacheKey, int> uses;
  for (int t : plan.coding_order) {
    for (const Reference& r : plan[t].references()) {
      for (int scale = 0; scale < 3; ++scale) {
        if (!role_active(r.role, scale)) continue;
        if (scale > 0) ++uses[{r.time, CacheKind::feature, scale, side}];
        ++uses[{r.time, CacheKind::key, scale, side}];
        ++uses[{r.time, CacheKind::value, scale, side}];
      }
    }
  }
  return uses;
}

void FeatureCache::plan(const GopPlan& plan, Side side) {
  uses_ = plan_key_uses(plan, side);
  entries_.clear();
}

void FeatureCache::set_uses(const CacheKey& key, int uses) { uses_[key] = uses; }

int FeatureCache::remaining_uses(const CacheKey& key) const {
  auto it = uses_.find(key);
  return it == uses_.end() ? 0 : it->second;
}

std::shared_ptr<const Tensor> FeatureCache::fetch_or_compute(const CacheKey& key, const Producer& producer) {
  if (!enabled_) {
    ++stats_.misses;
    return std::make_shared<const Tensor>(producer());
  }
  if (auto it = entries_.find(key); it != entries_.end()) {
    ++stats_.hits;
    auto value = it->second;
    if (--uses_[key] <= 0) {
      entries_.erase(it);
      ++stats_.evictions;
    }
    return value;
  }
  ++stats_.misses;
  auto value = std::make_shared<const Tensor>(producer());
  auto use = uses_.find(key);
  if (use != uses_.end() && use->second > 0 && --use->second > 0) {
    entries_.emplace(key, value);
    ++stats_.stores;
    stats_.peak_entries = std::max(stats_.peak_entries, entries_.size());
  }
  return value;
}

}  // namespace becv
