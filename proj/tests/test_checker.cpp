#include <gtest/gtest.h>

#include <algorithm>

#include "place3d/checker.hpp"
#include "support/designs.hpp"
#include "support/oracles.hpp"
#include "support/pipeline.hpp"

using namespace place3d;

namespace {

class CheckerTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    design_ = new Design(fixture::small_synthetic(250, 2, 0.3, 4));
    legal_ = new Solution(fixture::legalized(*design_));
  }
  static void TearDownTestSuite() {
    delete design_;
    delete legal_;
  }

  static bool mentions(const CheckReport& r, const std::string& what) {
    return std::any_of(r.violations.begin(), r.violations.end(),
                       [&](const std::string& v) { return v.find(what) != std::string::npos; });
  }

  // Index of the first standard cell on the given die.
  int cell_on(Die die) const {
    for (std::size_t i = 0; i < legal_->placements.size(); ++i)
      if (!design_->instances[i].macro && legal_->placements[i].die == die) return static_cast<int>(i);
    return -1;
  }

  static Design* design_;
  static Solution* legal_;
};

Design* CheckerTest::design_ = nullptr;
Solution* CheckerTest::legal_ = nullptr;

}  // namespace

TEST_F(CheckerTest, PipelineOutputPasses) {
  const CheckReport r = check_solution(*design_, *legal_);
  EXPECT_TRUE(r.pass);
  EXPECT_TRUE(r.violations.empty());
  EXPECT_DOUBLE_EQ(r.score.raw, oracle::raw_score(*design_, *legal_));
}

TEST_F(CheckerTest, OverlapIsReported) {
  Solution s = *legal_;
  const int a = cell_on(Die::Bottom);
  int b = -1;
  for (std::size_t i = a + 1; i < s.placements.size(); ++i)
    if (!design_->instances[i].macro && s.placements[i].die == Die::Bottom) {
      b = static_cast<int>(i);
      break;
    }
  ASSERT_GE(b, 0);
  s.placements[b].x = s.placements[a].x;
  s.placements[b].y = s.placements[a].y;
  const CheckReport r = check_solution(*design_, s);
  EXPECT_FALSE(r.pass);
  EXPECT_TRUE(mentions(r, "overlap"));
  EXPECT_TRUE(mentions(r, design_->instances[a].name));
}

TEST_F(CheckerTest, MissingHbtIsReported) {
  Solution s = *legal_;
  ASSERT_FALSE(s.hbts.empty());
  s.hbts.pop_back();
  const CheckReport r = check_solution(*design_, s);
  EXPECT_FALSE(r.pass);
  EXPECT_TRUE(mentions(r, "has 0 HBTs"));
}

TEST_F(CheckerTest, HbtOnSameDieNetIsReported) {
  Solution s = *legal_;
  std::vector<bool> has(design_->nets.size(), false);
  for (const HbtPlacement& h : s.hbts) has[h.net] = true;
  const auto it = std::find(has.begin(), has.end(), false);
  ASSERT_NE(it, has.end());
  s.hbts.push_back({static_cast<int>(it - has.begin()), 1, 1});
  const CheckReport r = check_solution(*design_, s);
  EXPECT_FALSE(r.pass);
  EXPECT_TRUE(mentions(r, "non-crossing"));
}

TEST_F(CheckerTest, GeometryViolations) {
  const int c = cell_on(Die::Top);
  Solution off_row = *legal_;
  off_row.placements[c].y += 1;
  EXPECT_TRUE(mentions(check_solution(*design_, off_row), "off row"));

  Solution outside = *legal_;
  outside.placements[c].x = design_->die.width;
  EXPECT_TRUE(mentions(check_solution(*design_, outside), "outside die"));

  Solution rotated = *legal_;
  rotated.placements[c].rot = Rotation::R90;
  EXPECT_TRUE(mentions(check_solution(*design_, rotated), "rotated standard cell"));
}

TEST_F(CheckerTest, HbtSpacingIsReported) {
  Solution s = *legal_;
  ASSERT_GE(s.hbts.size(), 2u);
  s.hbts[1].x = s.hbts[0].x + 1;
  s.hbts[1].y = s.hbts[0].y;
  EXPECT_TRUE(mentions(check_solution(*design_, s), "HBT spacing"));
}

TEST(Checker, UtilizationLimit) {
  fixture::Builder b(20, 10, 10, 10, 0.5);
  const int k = b.kind("U", 10, 10, {{0, 0}});
  b.inst(k);
  b.inst(k);
  const Design d = b.build();
  Solution s;
  s.placements = {{Die::Top, 0, 0, Rotation::R0}, {Die::Top, 10, 0, Rotation::R0}};
  const CheckReport r = check_solution(d, s);
  EXPECT_FALSE(r.pass);
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_NE(r.violations[0].find("utilization"), std::string::npos);
}
