#include "place3d/rotation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "place3d/wirelength.hpp"

namespace place3d {

Rotation decode_rotation(int r, int rp) {
  if (!r && !rp) return Rotation::R0;
  if (!r && rp) return Rotation::R90;
  if (r && rp) return Rotation::R180;
  return Rotation::R270;
}

std::pair<int, int> encode_rotation(Rotation rot) {
  switch (rot) {
    case Rotation::R0: return {0, 0};
    case Rotation::R90: return {0, 1};
    case Rotation::R180: return {1, 1};
    case Rotation::R270: return {1, 0};
  }
  return {0, 0};
}

Point rotated_pin(Point c, Point o, int r, int rp) {
  return {c.x + (1 - r - rp) * o.x + (r - rp) * o.y, c.y + (rp - r) * o.x + (1 - r - rp) * o.y};
}

namespace {

// Branching order of one macro's four values in lexicographic (r, r') order.
constexpr int kLex[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};

int lex_index(Rotation rot) {
  auto [r, rp] = encode_rotation(rot);
  return 2 * r + rp;
}

struct Compiled {
  struct Pin {
    int slot;
    Point pos[4];  // by lexicographic index
  };
  struct CNet {
    Interval fx, fy;
    std::vector<Pin> pins;
  };
  std::vector<CNet> nets;
  double constant = 0.0;
  int slots = 0;

  explicit Compiled(const RotationProblem& p) : constant(p.constant), slots(static_cast<int>(p.macros.size())) {
    for (const RotationNet& rn : p.nets) {
      CNet cn;
      for (Point q : rn.fixed) cn.fx.add(q.x), cn.fy.add(q.y);
      for (auto [slot, off] : rn.macro_pins) {
        Pin pin{slot, {}};
        for (int c = 0; c < 4; ++c) pin.pos[c] = rotated_pin(p.centers[slot], off, kLex[c][0], kLex[c][1]);
        cn.pins.push_back(pin);
      }
      nets.push_back(std::move(cn));
    }
  }

  double eval(std::span<const int> choice) const {
    double total = constant;
    for (const CNet& n : nets) {
      Interval x = n.fx, y = n.fy;
      for (const Pin& p : n.pins) {
        x.add(p.pos[choice[p.slot]].x);
        y.add(p.pos[choice[p.slot]].y);
      }
      total += x.span() + y.span();
    }
    return total;
  }

  static double extension(const Interval& iv, double v) {
    if (iv.empty()) return 0.0;
    return std::max(0.0, iv.lo - v) + std::max(0.0, v - iv.hi);
  }

  // Slots [0, depth) assigned.
  double lower_bound(std::span<const int> choice, int depth) const {
    double total = constant;
    for (const CNet& n : nets) {
      Interval x = n.fx, y = n.fy;
      for (const Pin& p : n.pins) {
        if (p.slot >= depth) continue;
        x.add(p.pos[choice[p.slot]].x);
        y.add(p.pos[choice[p.slot]].y);
      }
      double ex = 0.0, ey = 0.0;
      for (const Pin& p : n.pins) {
        if (p.slot < depth) continue;
        double bx = std::numeric_limits<double>::infinity(), by = bx;
        for (int c = 0; c < 4; ++c) {
          bx = std::min(bx, extension(x, p.pos[c].x));
          by = std::min(by, extension(y, p.pos[c].y));
        }
        ex = std::max(ex, bx);
        ey = std::max(ey, by);
      }
      total += x.span() + ex + y.span() + ey;
    }
    return total;
  }
};

RotationSolution finish(std::span<const int> choice, double obj, long long nodes, bool optimal) {
  RotationSolution s;
  for (int c : choice) s.assign.push_back(decode_rotation(kLex[c][0], kLex[c][1]));
  s.objective = obj;
  s.nodes = nodes;
  s.optimal = optimal;
  return s;
}

}  // namespace

RotationProblem build_rotation_problem(const Design& design, const PlacementState& state) {
  RotationProblem p;
  std::vector<int> slot(design.instances.size(), -1);
  for (int m : design.macros()) {
    slot[m] = static_cast<int>(p.macros.size());
    p.macros.push_back(m);
    p.centers.push_back({state.x[m], state.y[m]});
  }
  const Partition delta = derive_partition(state);
  for (int e : design.macro_nets()) {
    const Net& net = design.nets[e];
    RotationNet part[2];
    Box box[2];
    for (const PinRef& pr : net.pins) {
      const int d = delta[pr.inst];
      const Point o = design.pin_offset(pr, die_from_bit(d), state.rot[pr.inst]);
      const Point at{state.x[pr.inst] + o.x, state.y[pr.inst] + o.y};
      box[d].add(at);
      if (slot[pr.inst] >= 0) {
        part[d].macro_pins.emplace_back(slot[pr.inst], o);
      } else {
        part[d].fixed.push_back(at);
      }
    }
    if (crossing_indicator(net, delta) == 1) {
      const Box r = optimal_region(box[1], box[0]);
      const Point t{r.x.center(), r.y.center()};
      part[0].fixed.push_back(t);
      part[1].fixed.push_back(t);
    }
    for (RotationNet& rn : part) {
      if (rn.macro_pins.empty()) {
        Box b;
        for (Point q : rn.fixed) b.add(q);
        p.constant += b.x.span() + b.y.span();
      } else {
        p.nets.push_back(std::move(rn));
      }
    }
  }
  return p;
}

double rotation_objective(const RotationProblem& p, std::span<const Rotation> assign) {
  Compiled c(p);
  std::vector<int> choice(assign.size());
  for (std::size_t k = 0; k < assign.size(); ++k) choice[k] = lex_index(assign[k]);
  return c.eval(choice);
}

RotationSolution solve_rotation_enumerate(const RotationProblem& p) {
  Compiled c(p);
  const int m = c.slots;
  std::vector<int> choice(m, 0), best(m, 0);
  double best_obj = c.eval(choice);
  long long nodes = 1;
  while (true) {
    int k = m - 1;
    while (k >= 0 && choice[k] == 3) choice[k--] = 0;
    if (k < 0) break;
    ++choice[k];
    ++nodes;
    const double v = c.eval(choice);
    if (v < best_obj) best_obj = v, best = choice;
  }
  return finish(best, best_obj, nodes, true);
}

RotationSolution solve_rotation_branch_and_bound(const RotationProblem& p, long long node_limit) {
  Compiled c(p);
  const int m = c.slots;
  std::vector<int> choice(m, 0), best(m, 0);
  double best_obj = c.eval(best);
  long long nodes = 0;
  bool complete = true;

  auto recurse = [&](auto&& self, int depth) -> void {
    if (!complete) return;
    if (depth == m) {
      const double v = c.eval(choice);
      if (v < best_obj) best_obj = v, best = choice;
      return;
    }
    for (int v = 0; v < 4; ++v) {
      if (++nodes > node_limit) {
        complete = false;
        return;
      }
      choice[depth] = v;
      const double lb = c.lower_bound(choice, depth + 1);
      if (lb >= best_obj + 1e-9 * (1.0 + std::abs(best_obj))) continue;
      self(self, depth + 1);
    }
    choice[depth] = 0;
  };
  recurse(recurse, 0);
  return finish(best, best_obj, nodes, complete);
}

RotationSolution solve_rotation_exact(const RotationProblem& p) {
  if (p.macros.size() <= 8) return solve_rotation_enumerate(p);
  return solve_rotation_branch_and_bound(p);
}

void apply_rotation(const Design& design, PlacementState& state, std::span<const int> insts,
                    std::span<const Rotation> assign) {
  for (std::size_t k = 0; k < insts.size(); ++k) {
    if (!design.instances[insts[k]].macro)
      throw std::invalid_argument("cannot rotate standard cell '" + design.instances[insts[k]].name + "'");
  }
  for (std::size_t k = 0; k < insts.size(); ++k) state.rot[insts[k]] = compose(state.rot[insts[k]], assign[k]);
}

}  // namespace place3d
