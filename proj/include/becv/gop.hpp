#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace becv {

enum class FrameKind : std::uint8_t { intra = 0, bidirectional = 1 };

/// Where a reference sits relative to the frame being coded. The enumerator
/// order is also the channel order of every context concatenation.
enum class RefRole : std::uint8_t { ext_back = 0, back = 1, fwd = 2, ext_fwd = 3 };

const char* role_name(RefRole role);
inline bool is_extended(RefRole role) { return role == RefRole::ext_back || role == RefRole::ext_fwd; }

struct Reference {
  RefRole role;
  int time;
};

struct FrameSchedule {
  int t = 0;
  FrameKind kind = FrameKind::intra;
  int layer = 0;     ///< 0 for intra, 1.. for B layers
  int interval = 0;  ///< i_t; 0 for intra
  int ref_back = -1;
  int ref_fwd = -1;
  bool fwd_is_proxy = false;  ///< forward anchor missing; previous intra substituted
  std::optional<int> ext_back;
  std::optional<int> ext_fwd;

  /// References in role order (ext_back, back, fwd, ext_fwd), absent ones skipped.
  std::vector<Reference> references() const;
};

/// Hierarchical random-access coding plan for one sequence.
struct GopPlan {
  int intra_period = 0;
  int frame_count = 0;
  std::vector<int> coding_order;           ///< display indices in coding order
  std::vector<FrameSchedule> schedules;    ///< indexed by display index
  std::vector<double> quality_weights;     ///< w_k for B layers 1..5

  const FrameSchedule& operator[](int t) const { return schedules.at(t); }
  int max_layer() const;
};

/// Default hierarchical quality weights, one per B layer starting at layer 1.
inline const std::vector<double> kQualityWeights{1.4, 1.4, 0.7, 0.5, 0.5};

/// Builds the dyadic plan. Throws std::invalid_argument when intra_period is
/// not a power of two >= 2 or frame_count < 1.
GopPlan build_plan(int intra_period, int frame_count);

/// w_k for the frame's layer; intra frames get the largest weight and layers
/// past the end of the list reuse its last entry.
double quality_weight(const GopPlan& plan, int t);

struct PlanReport {
  bool ok = true;
  int frame = -1;  ///< display index of the first violation
  std::string message;
};

/// Checks permutation, topological order and reference bounds. Never throws.
PlanReport validate_plan(const GopPlan& plan);

/// One line per frame in coding order: `t kind layer i_t refs=[...]`.
std::string format_plan(const GopPlan& plan);

}  // namespace becv
