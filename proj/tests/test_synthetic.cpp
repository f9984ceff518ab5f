#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "place3d/gp.hpp"
#include "place3d/synthetic.hpp"

using namespace place3d;

namespace {

std::string text_of(const Design& d) {
  std::ostringstream os;
  write_design(d, os);
  return os.str();
}

}  // namespace

TEST(Synthetic, SameSeedSameBytes) {
  SyntheticSpec spec;
  spec.cells = 500;
  spec.macros = 3;
  EXPECT_EQ(text_of(generate_synthetic(spec)), text_of(generate_synthetic(spec)));
  SyntheticSpec other = spec;
  other.seed = 2;
  EXPECT_NE(text_of(generate_synthetic(spec)), text_of(generate_synthetic(other)));
}

TEST(Synthetic, ShapeOfTheDesign) {
  SyntheticSpec spec;
  spec.cells = 800;
  spec.macros = 4;
  spec.macro_area_ratio = 0.35;
  const Design d = generate_synthetic(spec);
  EXPECT_EQ(d.instances.size(), 804u);
  EXPECT_EQ(d.macros().size(), 4u);
  EXPECT_NEAR(d.macro_area_ratio(), 0.35, 0.02);
  EXPECT_EQ(d.die.row_height[die_index(Die::Top)], 33.0);
  EXPECT_EQ(d.die.row_height[die_index(Die::Bottom)], 48.0);
  // Rows tile the die on both technologies.
  EXPECT_EQ(std::fmod(d.die.height, 33.0), 0.0);
  EXPECT_EQ(std::fmod(d.die.height, 48.0), 0.0);
  for (const Net& n : d.nets) EXPECT_GE(n.pins.size(), 2u);
  // Text round trip preserves everything.
  std::istringstream in(text_of(d));
  EXPECT_EQ(text_of(parse_design(in)), text_of(d));
}

TEST(Synthetic, MacroRatioSelectsFlow) {
  SyntheticSpec spec;
  spec.cells = 2000;
  spec.macros = 4;
  spec.macro_area_ratio = 0.88;
  const Design heavy = generate_synthetic(spec);
  EXPECT_NEAR(heavy.macro_area_ratio(), 0.88, 0.02);
  EXPECT_EQ(select_flow(heavy), FlowPath::Gp2dMulti);
  spec.macro_area_ratio = 0.36;
  const Design light = generate_synthetic(spec);
  EXPECT_NEAR(light.macro_area_ratio(), 0.36, 0.02);
  EXPECT_EQ(select_flow(light), FlowPath::Gp3d);
}

TEST(Synthetic, InfeasibleSpecs) {
  SyntheticSpec spec;
  spec.macro_area_ratio = 1.6;
  EXPECT_THROW(generate_synthetic(spec), InfeasibleError);
  spec.macro_area_ratio = 0.9;
  spec.macros = 1;
  EXPECT_THROW(generate_synthetic(spec), InfeasibleError);
  spec.macros = 0;
  spec.macro_area_ratio = 0.2;
  EXPECT_THROW(generate_synthetic(spec), InfeasibleError);
  spec.cells = 1;
  spec.macro_area_ratio = 0.0;
  EXPECT_THROW(generate_synthetic(spec), InfeasibleError);
}
