#include "becv/gop.hpp"

#include <algorithm>
#include <deque>
#include <sstream>
#include <stdexcept>

namespace becv {

const char* role_name(RefRole role) {
  switch (role) {
    case RefRole::ext_back: return "ext_back";
    case RefRole::back: return "back";
    case RefRole::fwd: return "fwd";
    case RefRole::ext_fwd: return "ext_fwd";
  }
  return "?";
}

std::vector<Reference> FrameSchedule::references() const {
  std::vector<Reference> refs;
  if (kind == FrameKind::intra) return refs;
  if (ext_back) refs.push_back({RefRole::ext_back, *ext_back});
  refs.push_back({RefRole::back, ref_back});
  refs.push_back({RefRole::fwd, ref_fwd});
  if (ext_fwd) refs.push_back({RefRole::ext_fwd, *ext_fwd});
  return refs;
}

int GopPlan::max_layer() const {
  int m = 0;
  for (const auto& s : schedules) m = std::max(m, s.layer);
  return m;
}

GopPlan build_plan(int intra_period, int frame_count) {
  if (intra_period < 2 || (intra_period & (intra_period - 1)) != 0) {
    throw std::invalid_argument("intra period must be a power of two >= 2, got " +
                                std::to_string(intra_period));
  }
  if (frame_count < 1) throw std::invalid_argument("frame count must be >= 1");

  GopPlan plan;
  plan.intra_period = intra_period;
  plan.frame_count = frame_count;
  plan.quality_weights = kQualityWeights;
  plan.schedules.resize(frame_count);
  for (int t = 0; t < frame_count; ++t) plan.schedules[t].t = t;

  plan.coding_order.push_back(0);
  for (int start = 0; start + 1 < frame_count; start += intra_period) {
    const int end = start + intra_period;
    const bool has_anchor = end < frame_count;
    if (has_anchor) plan.coding_order.push_back(end);

    struct Span {
      int lo, hi, layer;
    };
    // Breadth-first over dyadic spans gives midpoint order, lower index first among peers.
    std::deque<Span> queue{{start, end, 1}};
    while (!queue.empty()) {
      const Span s = queue.front();
      queue.pop_front();
      if (s.hi - s.lo < 2) continue;
      const int mid = (s.lo + s.hi) / 2;
      if (mid < frame_count) {
        FrameSchedule& fs = plan.schedules[mid];
        fs.kind = FrameKind::bidirectional;
        fs.layer = s.layer;
        fs.interval = (s.hi - s.lo) / 2;
        fs.ref_back = s.lo;
        fs.fwd_is_proxy = s.hi >= frame_count;
        fs.ref_fwd = fs.fwd_is_proxy ? start : s.hi;
        plan.coding_order.push_back(mid);
      }
      queue.push_back({s.lo, mid, s.layer + 1});
      queue.push_back({mid, s.hi, s.layer + 1});
    }
  }

  // Extended references reuse the primary reference's own decoded motion.
  for (auto& fs : plan.schedules) {
    if (fs.kind != FrameKind::bidirectional) continue;
    const auto& back = plan.schedules[fs.ref_back];
    if (back.kind == FrameKind::bidirectional) fs.ext_back = back.ref_back;
    const auto& fwd = plan.schedules[fs.ref_fwd];
    if (fwd.kind == FrameKind::bidirectional) fs.ext_fwd = fwd.ref_fwd;
  }
  return plan;
}

double quality_weight(const GopPlan& plan, int t) {
  if (t < 0 || t >= plan.frame_count) throw std::out_of_range("frame index out of range");
  const auto& w = plan.quality_weights;
  const auto& fs = plan.schedules[t];
  if (fs.kind == FrameKind::intra) return *std::ranges::max_element(w);
  const std::size_t k = std::min<std::size_t>(fs.layer, w.size());
  return w[k - 1];
}

PlanReport validate_plan(const GopPlan& plan) {
  auto fail = [](int frame, std::string msg) { return PlanReport{false, frame, std::move(msg)}; };
  const int n = plan.frame_count;
  if (n < 1) return fail(-1, "empty plan");
  if (static_cast<int>(plan.schedules.size()) != n) return fail(-1, "schedule count mismatch");
  if (static_cast<int>(plan.coding_order.size()) != n) return fail(-1, "coding order length mismatch");

  std::vector<int> position(n, -1);
  for (int i = 0; i < n; ++i) {
    const int t = plan.coding_order[i];
    if (t < 0 || t >= n) return fail(t, "coding order holds out-of-range index");
    if (position[t] != -1) return fail(t, "frame appears twice in coding order");
    position[t] = i;
  }

  for (int i = 0; i < n; ++i) {
    const int t = plan.coding_order[i];
    const FrameSchedule& fs = plan.schedules[t];
    if (fs.t != t) return fail(t, "schedule index mismatch");
    const bool intra_slot = t % plan.intra_period == 0;
    if (intra_slot != (fs.kind == FrameKind::intra)) return fail(t, "frame kind does not match intra period");
    if (fs.kind == FrameKind::intra) {
      if (fs.layer != 0 || fs.interval != 0 || fs.ext_back || fs.ext_fwd) {
        return fail(t, "intra frame carries B-frame fields");
      }
      continue;
    }
    if (fs.layer < 1 || fs.interval < 1) return fail(t, "B frame needs layer >= 1 and interval >= 1");
    if (fs.ref_back != t - fs.interval || fs.ref_back < 0) return fail(t, "back reference is not t - i_t");
    if (fs.fwd_is_proxy) {
      const bool anchor_missing = t + fs.interval >= n;
      const int prev_intra = t - t % plan.intra_period;
      if (!anchor_missing || fs.ref_fwd != prev_intra) {
        return fail(t, "proxy forward reference must be the previous intra frame");
      }
    } else if (fs.ref_fwd != t + fs.interval || fs.ref_fwd >= n) {
      return fail(t, "forward reference is not t + i_t");
    }
    for (const Reference& r : fs.references()) {
      if (r.time < 0 || r.time >= n) return fail(t, "reference out of range");
      if (position[r.time] >= i) {
        return fail(t, std::string(role_name(r.role)) + " reference " + std::to_string(r.time) +
                           " is not decoded before frame " + std::to_string(t));
      }
    }
    const auto& back = plan.schedules[fs.ref_back];
    const auto& fwd = plan.schedules[fs.ref_fwd];
    const bool want_back = back.kind == FrameKind::bidirectional;
    const bool want_fwd = fwd.kind == FrameKind::bidirectional;
    if (want_back != fs.ext_back.has_value() || want_fwd != fs.ext_fwd.has_value()) {
      return fail(t, "extended references must exist exactly when the primary is a B frame");
    }
    if (fs.ext_back && (*fs.ext_back != back.ref_back || plan.schedules[*fs.ext_back].layer >= fs.layer)) {
      return fail(t, "extended back reference inconsistent");
    }
    if (fs.ext_fwd && (*fs.ext_fwd != fwd.ref_fwd || plan.schedules[*fs.ext_fwd].layer >= fs.layer)) {
      return fail(t, "extended forward reference inconsistent");
    }
  }
  return {};
}

std::string format_plan(const GopPlan& plan) {
  std::ostringstream os;
  for (int t : plan.coding_order) {
    const auto& fs = plan.schedules[t];
    os << t << ' ' << (fs.kind == FrameKind::intra ? 'I' : 'B') << ' ' << fs.layer << ' '
       << fs.interval << " refs=[";
    bool first = true;
    for (const Reference& r : fs.references()) {
      os << (first ? "" : ",") << r.time;
      first = false;
    }
    os << ']';
    if (fs.fwd_is_proxy) os << " proxy";
    os << '\n';
  }
  return os.str();
}

}  // namespace becv
