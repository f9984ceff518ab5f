#pragma once

#include <span>
#include <utility>
#include <vector>

#include "place3d/model.hpp"

namespace place3d {

/// Rotation from the binary pair (r, r'): (0,0)=0, (0,1)=90, (1,1)=180, (1,0)=270.
Rotation decode_rotation(int r, int rp);
std::pair<int, int> encode_rotation(Rotation rot);

/// Pin position of a macro at `center` with offset `o` under (r, r').
Point rotated_pin(Point center, Point o, int r, int rp);

struct RotationNet {
  std::vector<Point> fixed;                     // cell pins and the HBT
  std::vector<std::pair<int, Point>> macro_pins;  // (macro slot, offset)
};

/// Macro rotation problem over the macro nets. A crossing net contributes its
/// two partial nets, each with the HBT as a fixed pin.
struct RotationProblem {
  std::vector<int> macros;     // instance ids, one per slot
  std::vector<Point> centers;  // per slot
  std::vector<RotationNet> nets;
  double constant = 0.0;  // spans of partial nets without macro pins
};

/// HBTs of crossing nets sit at their optimal-region centers. Offsets are
/// taken in each macro's current orientation.
RotationProblem build_rotation_problem(const Design& design, const PlacementState& state);

/// Objective of an assignment: constant + sum of bounding-box half perimeters.
double rotation_objective(const RotationProblem& p, std::span<const Rotation> assign);

struct RotationSolution {
  std::vector<Rotation> assign;
  double objective = 0.0;
  long long nodes = 0;
  bool optimal = true;
};

/// All 4^m assignments in lexicographic (r, r') order; first minimum wins.
RotationSolution solve_rotation_enumerate(const RotationProblem& p);
/// Depth-first branch and bound with per-net interval bounds. Returns the
/// same assignment as enumeration; `optimal` is false only if `node_limit`
/// was hit.
RotationSolution solve_rotation_branch_and_bound(const RotationProblem& p, long long node_limit = 50'000'000);
/// Enumeration for up to 4^8 assignments, branch and bound beyond.
RotationSolution solve_rotation_exact(const RotationProblem& p);

/// Composes `assign[k]` onto instance `insts[k]`. Throws for standard cells.
void apply_rotation(const Design& design, PlacementState& state, std::span<const int> insts,
                    std::span<const Rotation> assign);

}  // namespace place3d
