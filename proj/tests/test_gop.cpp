#include <doctest.h>

#include <algorithm>
#include <bit>
#include <set>

#include <becv/gop.hpp>

using namespace becv;

namespace {

std::set<int> sources(const FrameSchedule& fs) {
  std::set<int> s;
  for (const Reference& r : fs.references()) s.insert(r.time);
  return s;
}

// Closed-form dyadic schedule: i_t is the lowest set bit of t mod IP.
void check_closed_form(const GopPlan& plan) {
  const int ip = plan.intra_period;
  const int depth = std::countr_zero(static_cast<unsigned>(ip));
  for (int t = 0; t < plan.frame_count; ++t) {
    const FrameSchedule& fs = plan[t];
    const int m = t % ip;
    if (m == 0) {
      CHECK(fs.kind == FrameKind::intra);
      continue;
    }
    const int interval = m & -m;
    CHECK(fs.interval == interval);
    CHECK(fs.layer == depth - std::countr_zero(static_cast<unsigned>(m)));
    CHECK(fs.ref_back == t - interval);
    if (t + interval < plan.frame_count) {
      CHECK(fs.ref_fwd == t + interval);
      CHECK_FALSE(fs.fwd_is_proxy);
    } else {
      CHECK(fs.ref_fwd == t - m);
      CHECK(fs.fwd_is_proxy);
    }
  }
}

}  // namespace

TEST_SUITE("gop-scheduler") {
  TEST_CASE("IP 8, N 9 coding order and reference sets") {
    const GopPlan plan = build_plan(8, 9);
    CHECK(plan.coding_order == std::vector<int>{0, 8, 4, 2, 6, 1, 3, 5, 7});
    CHECK(sources(plan[3]) == std::set<int>{0, 2, 4, 8});
    CHECK(sources(plan[4]) == std::set<int>{0, 8});
    CHECK(sources(plan[2]) == std::set<int>{0, 4, 8});
    CHECK(plan[1].references().size() == 3);
    CHECK(plan[3].interval == 1);
    CHECK(plan[3].layer == 3);
    CHECK(plan[4].layer == 1);
    CHECK(plan.max_layer() == 3);
  }

  TEST_CASE("references come in role order") {
    const GopPlan plan = build_plan(8, 9);
    const auto refs = plan[3].references();
    REQUIRE(refs.size() == 4);
    CHECK(refs[0].role == RefRole::ext_back);
    CHECK(refs[0].time == 0);
    CHECK(refs[1].role == RefRole::back);
    CHECK(refs[2].role == RefRole::fwd);
    CHECK(refs[3].role == RefRole::ext_fwd);
    CHECK(refs[3].time == 8);
  }

  TEST_CASE("every supported configuration validates and matches the closed form") {
    for (int ip : {2, 4, 8, 16, 32, 64}) {
      for (int n = 1; n <= 130; ++n) {
        const GopPlan plan = build_plan(ip, n);
        const PlanReport r = validate_plan(plan);
        INFO("ip=" << ip << " n=" << n << " " << r.message);
        REQUIRE(r.ok);
        check_closed_form(plan);
      }
    }
  }

  TEST_CASE("partial final GOP substitutes the previous intra frame") {
    const GopPlan plan = build_plan(8, 12);
    CHECK(plan[10].ref_back == 8);
    CHECK(plan[10].ref_fwd == 8);
    CHECK(plan[10].fwd_is_proxy);
    CHECK(plan[9].ref_fwd == 10);
    CHECK_FALSE(plan[9].fwd_is_proxy);
    CHECK(plan[11].fwd_is_proxy);
    CHECK(plan[11].ref_fwd == 8);
  }

  TEST_CASE("single frame is one intra") {
    const GopPlan plan = build_plan(8, 1);
    CHECK(plan.coding_order == std::vector<int>{0});
    CHECK(plan[0].kind == FrameKind::intra);
  }

  TEST_CASE("invalid arguments throw") {
    CHECK_THROWS_AS(build_plan(6, 9), std::invalid_argument);
    CHECK_THROWS_AS(build_plan(1, 9), std::invalid_argument);
    CHECK_THROWS_AS(build_plan(8, 0), std::invalid_argument);
  }

  TEST_CASE("validation catches corrupted plans") {
    GopPlan swapped = build_plan(8, 9);
    std::swap(swapped.coding_order[2], swapped.coding_order[5]);  // frame 1 before frame 4
    const PlanReport r = validate_plan(swapped);
    CHECK_FALSE(r.ok);
    CHECK(r.frame == 1);

    GopPlan dup = build_plan(8, 9);
    dup.coding_order[3] = 4;
    CHECK_FALSE(validate_plan(dup).ok);

    GopPlan wrong_ext = build_plan(8, 9);
    wrong_ext.schedules[3].ext_back = 8;
    CHECK_FALSE(validate_plan(wrong_ext).ok);

    GopPlan wrong_proxy = build_plan(8, 12);
    wrong_proxy.schedules[10].ref_fwd = 0;
    CHECK_FALSE(validate_plan(wrong_proxy).ok);
  }

  TEST_CASE("quality weights by layer") {
    const GopPlan plan = build_plan(64, 65);
    CHECK(quality_weight(plan, 0) == 1.4);
    CHECK(quality_weight(plan, 32) == 1.4);
    CHECK(quality_weight(plan, 16) == 1.4);
    CHECK(quality_weight(plan, 8) == 0.7);
    CHECK(quality_weight(plan, 1) == 0.5);
    CHECK(plan[1].layer == 6);
  }

  TEST_CASE("plan text lists frames in coding order") {
    const std::string text = format_plan(build_plan(8, 10));
    CHECK(text.rfind("0 I 0 0 refs=[]\n8 I 0 0 refs=[]\n", 0) == 0);
    CHECK(text.find("3 B 3 1 refs=[0,2,4,8]\n") != std::string::npos);
    CHECK(text.find("9 B 3 1 refs=[8,8] proxy\n") != std::string::npos);
  }
}
