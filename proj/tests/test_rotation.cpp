#include <gtest/gtest.h>

#include <random>

#include "place3d/rotation.hpp"
#include "support/designs.hpp"

using namespace place3d;

namespace {

RotationProblem random_problem(std::mt19937_64& rng, int macros, int nets) {
  std::uniform_real_distribution<double> pos(0, 100), off(-10, 10);
  RotationProblem p;
  for (int m = 0; m < macros; ++m) {
    p.macros.push_back(m);
    p.centers.push_back({pos(rng), pos(rng)});
  }
  for (int n = 0; n < nets; ++n) {
    RotationNet net;
    const int fixed = std::uniform_int_distribution<int>(0, 3)(rng);
    for (int f = 0; f < fixed; ++f) net.fixed.push_back({pos(rng), pos(rng)});
    const int mp = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int k = 0; k < mp; ++k) net.macro_pins.emplace_back(int(rng() % macros), Point{off(rng), off(rng)});
    p.nets.push_back(net);
  }
  return p;
}

}  // namespace

TEST(RotationCode, DecodeTable) {
  EXPECT_EQ(decode_rotation(0, 0), Rotation::R0);
  EXPECT_EQ(decode_rotation(0, 1), Rotation::R90);
  EXPECT_EQ(decode_rotation(1, 1), Rotation::R180);
  EXPECT_EQ(decode_rotation(1, 0), Rotation::R270);
  for (Rotation r : {Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270}) {
    auto [a, b] = encode_rotation(r);
    EXPECT_EQ(decode_rotation(a, b), r);
  }
}

TEST(RotationCode, RotatedPins) {
  EXPECT_EQ(rotated_pin({0, 0}, {2, 0}, 1, 1), (Point{-2, 0}));
  EXPECT_EQ(rotated_pin({0, 0}, {3, 5}, 0, 1), (Point{-5, 3}));
  EXPECT_EQ(rotated_pin({1, 1}, {3, 5}, 0, 0), (Point{4, 6}));
  EXPECT_EQ(rotated_pin({0, 0}, {3, 5}, 1, 0), rotate_offset({3, 5}, Rotation::R270));
}

TEST(RotationSolve, SinglePinPullsToHalfTurn) {
  RotationProblem p;
  p.macros = {0};
  p.centers = {{0, 0}};
  p.nets.push_back({{{-3, 0}}, {{0, {2, 0}}}});
  const std::vector<Rotation> each[4] = {{Rotation::R0}, {Rotation::R90}, {Rotation::R180}, {Rotation::R270}};
  EXPECT_EQ(rotation_objective(p, each[0]), 5.0);
  EXPECT_EQ(rotation_objective(p, each[1]), 5.0);
  EXPECT_EQ(rotation_objective(p, each[2]), 1.0);
  EXPECT_EQ(rotation_objective(p, each[3]), 5.0);
  const RotationSolution s = solve_rotation_exact(p);
  EXPECT_EQ(s.assign[0], Rotation::R180);
  EXPECT_EQ(s.objective, 1.0);
  EXPECT_EQ(solve_rotation_branch_and_bound(p).assign[0], Rotation::R180);
}

TEST(RotationSolve, SymmetricPinsKeepIdentity) {
  RotationProblem p;
  p.macros = {0, 1};
  p.centers = {{10, 10}, {40, 25}};
  p.nets.push_back({{{20, 3}}, {{0, {2, 1}}, {0, {-2, -1}}}});
  p.nets.push_back({{}, {{1, {4, 0}}, {1, {-4, 0}}, {1, {0, 3}}, {1, {0, -3}}}});
  const RotationSolution e = solve_rotation_enumerate(p), b = solve_rotation_branch_and_bound(p);
  EXPECT_EQ(e.assign, (std::vector<Rotation>{Rotation::R0, Rotation::R0}));
  EXPECT_EQ(b.assign, e.assign);
}

TEST(RotationSolve, BranchAndBoundMatchesEnumeration) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 30; ++t) {
    const RotationProblem p = random_problem(rng, 3, 6);
    const RotationSolution e = solve_rotation_enumerate(p), b = solve_rotation_branch_and_bound(p);
    EXPECT_TRUE(b.optimal);
    EXPECT_EQ(b.assign, e.assign);
    EXPECT_DOUBLE_EQ(b.objective, e.objective);
  }
}

TEST(RotationProblemBuild, NoMacrosIsEmpty) {
  const Design d = fixture::two_cliques(3);
  PlacementState s;
  s.resize(d.instances.size());
  s.depth = 8;
  const RotationProblem p = build_rotation_problem(d, s);
  EXPECT_TRUE(p.macros.empty());
  EXPECT_TRUE(p.nets.empty());
  EXPECT_EQ(solve_rotation_exact(p).objective, p.constant);
}

TEST(RotationProblemBuild, ObjectiveMatchesStateWirelength) {
  // One macro and one cell on the same die: the objective at the identity is
  // the net's plain HPWL.
  fixture::Builder b(100, 100, 10, 10);
  const int mk = b.kind("M", 20, 10, {{6, 2}});
  const int ck = b.kind("C", 4, 10, {{1, 0}});
  const int m = b.inst(mk, true), c = b.inst(ck);
  b.net({{m, 0}, {c, 0}});
  const Design d = b.build();
  PlacementState s;
  s.resize(2);
  s.depth = 8;
  s.x = {50, 20};
  s.y = {50, 30};
  s.z = {2, 2};
  const RotationProblem p = build_rotation_problem(d, s);
  ASSERT_EQ(p.macros.size(), 1u);
  const std::vector<Rotation> id{Rotation::R0};
  EXPECT_DOUBLE_EQ(rotation_objective(p, id), (56 - 21) + (52 - 30));
}

TEST(ApplyRotation, GroupLawAndFootprint) {
  fixture::Builder b(100, 100, 10, 10);
  const int mk = b.kind("M", 4, 2, {{1, 0}});
  const int ck = b.kind("C", 2, 10, {{0, 0}});
  const int m = b.inst(mk, true), c = b.inst(ck);
  const Design d = b.build();
  PlacementState s;
  s.resize(2);
  const std::vector<int> ids{m};
  PlacementState once = s, twice = s;
  apply_rotation(d, once, ids, std::vector<Rotation>{Rotation::R180});
  apply_rotation(d, twice, ids, std::vector<Rotation>{Rotation::R90});
  apply_rotation(d, twice, ids, std::vector<Rotation>{Rotation::R90});
  EXPECT_EQ(once.rot, twice.rot);
  PlacementState same = s;
  apply_rotation(d, same, ids, std::vector<Rotation>{Rotation::R0});
  EXPECT_EQ(same.rot, s.rot);
  EXPECT_EQ(d.width(m, Die::Top, Rotation::R90), 2.0);
  EXPECT_EQ(d.height(m, Die::Top, Rotation::R90), 4.0);
  EXPECT_EQ(d.pin_offset({m, 0}, Die::Top, Rotation::R90), (Point{0, 1}));
  const std::vector<int> cell{c};
  EXPECT_THROW(apply_rotation(d, s, cell, std::vector<Rotation>{Rotation::R90}), std::invalid_argument);
}
