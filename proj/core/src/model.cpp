#include "place3d/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace place3d {

const char* die_name(Die d) { return d == Die::Top ? "top" : "bottom"; }

int rotation_degrees(Rotation r) { return 90 * static_cast<int>(r); }

Rotation rotation_from_degrees(int degrees) {
  int d = ((degrees % 360) + 360) % 360;
  if (d % 90 != 0) throw std::invalid_argument("rotation must be a multiple of 90 degrees");
  return static_cast<Rotation>(d / 90);
}

Rotation compose(Rotation a, Rotation b) {
  return static_cast<Rotation>((static_cast<int>(a) + static_cast<int>(b)) % 4);
}

const char* rotation_name(Rotation r) {
  switch (r) {
    case Rotation::R0: return "R0";
    case Rotation::R90: return "R90";
    case Rotation::R180: return "R180";
    case Rotation::R270: return "R270";
  }
  return "R0";
}

bool parse_rotation(std::string_view text, Rotation& out) {
  for (int i = 0; i < 4; ++i) {
    auto r = static_cast<Rotation>(i);
    if (text == rotation_name(r)) {
      out = r;
      return true;
    }
  }
  return false;
}

Point rotate_offset(Point o, Rotation r) {
  switch (r) {
    case Rotation::R0: return o;
    case Rotation::R90: return {-o.y, o.x};
    case Rotation::R180: return {-o.x, -o.y};
    case Rotation::R270: return {o.y, -o.x};
  }
  return o;
}

namespace {
std::string with_line(int line, const std::string& what) {
  std::ostringstream os;
  os << "line " << line << ": " << what;
  return os.str();
}
bool swaps_axes(Rotation r) { return r == Rotation::R90 || r == Rotation::R270; }
}  // namespace

ParseError::ParseError(int line, const std::string& what)
    : std::runtime_error(with_line(line, what)), line_(line) {}

int TechProfile::find_kind(const std::string& name) const {
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    if (kinds[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

void Design::finalize() {
  if (!(die.width > 0.0) || !(die.height > 0.0)) throw std::invalid_argument("die size must be positive");
  for (int d = 0; d < 2; ++d) {
    if (!(die.row_height[d] > 0.0)) throw std::invalid_argument("row height must be positive");
    if (!(die.site_width[d] > 0.0)) throw std::invalid_argument("site width must be positive");
    if (!(die.max_util[d] > 0.0) || die.max_util[d] > 1.0)
      throw std::invalid_argument("max utilization must lie in (0, 1]");
  }
  if (!(hbt.size > 0.0) || hbt.spacing < 0.0 || hbt.cost < 0.0)
    throw std::invalid_argument("HBT spec requires size > 0, spacing >= 0, cost >= 0");

  const auto& top = tech[die_index(Die::Top)];
  const auto& bot = tech[die_index(Die::Bottom)];
  if (top.kinds.size() != bot.kinds.size())
    throw std::invalid_argument("top and bottom technology define different cell kinds");
  for (std::size_t k = 0; k < top.kinds.size(); ++k) {
    const CellKind& a = top.kinds[k];
    const CellKind& b = bot.kinds[k];
    if (a.name != b.name || a.pins.size() != b.pins.size())
      throw std::invalid_argument("cell kind '" + a.name + "' differs between technologies");
    for (const CellKind* ck : {&a, &b}) {
      if (!(ck->width > 0.0) || !(ck->height > 0.0))
        throw std::invalid_argument("cell kind '" + ck->name + "' has a non-positive dimension");
      for (const PinShape& p : ck->pins) {
        if (std::abs(p.offset.x) > 0.5 * ck->width + 1e-9 || std::abs(p.offset.y) > 0.5 * ck->height + 1e-9)
          throw std::invalid_argument("pin " + ck->name + "/" + p.name + " lies outside its cell");
      }
    }
    for (std::size_t p = 0; p < a.pins.size(); ++p) {
      if (a.pins[p].name != b.pins[p].name)
        throw std::invalid_argument("pin lists of '" + a.name + "' differ between technologies");
    }
  }

  inst_index_.clear();
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const Instance& inst = instances[i];
    if (inst.kind < 0 || inst.kind >= static_cast<int>(top.kinds.size()))
      throw std::invalid_argument("instance '" + inst.name + "' has no cell kind");
    if (!inst_index_.emplace(inst.name, static_cast<int>(i)).second)
      throw std::invalid_argument("duplicate instance '" + inst.name + "'");
  }

  net_index_.clear();
  inst_nets_.assign(instances.size(), {});
  inst_pin_count_.assign(instances.size(), 0);
  for (std::size_t n = 0; n < nets.size(); ++n) {
    const Net& net = nets[n];
    if (net.pins.empty()) throw std::invalid_argument("net '" + net.name + "' has no pins");
    if (!net_index_.emplace(net.name, static_cast<int>(n)).second)
      throw std::invalid_argument("duplicate net '" + net.name + "'");
    for (const PinRef& p : net.pins) {
      if (p.inst < 0 || p.inst >= static_cast<int>(instances.size()))
        throw std::invalid_argument("net '" + net.name + "' references an unknown instance");
      const CellKind& ck = top.kinds[instances[p.inst].kind];
      if (p.pin < 0 || p.pin >= static_cast<int>(ck.pins.size()))
        throw std::invalid_argument("net '" + net.name + "' references an unknown pin");
      auto& lst = inst_nets_[p.inst];
      if (lst.empty() || lst.back() != static_cast<int>(n)) lst.push_back(static_cast<int>(n));
      ++inst_pin_count_[p.inst];
    }
  }

  macros_.clear();
  double macro_area = 0.0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (!instances[i].macro) continue;
    macros_.push_back(static_cast<int>(i));
    const CellKind& ck = bot.kinds[instances[i].kind];
    macro_area += ck.width * ck.height;
  }
  macro_area_ratio_ = macro_area / die.area();

  macro_nets_.clear();
  for (std::size_t n = 0; n < nets.size(); ++n) {
    for (const PinRef& p : nets[n].pins) {
      if (instances[p.inst].macro) {
        macro_nets_.push_back(static_cast<int>(n));
        break;
      }
    }
  }
}

int Design::find_instance(const std::string& name) const {
  auto it = inst_index_.find(name);
  return it == inst_index_.end() ? -1 : it->second;
}

int Design::find_net(const std::string& name) const {
  auto it = net_index_.find(name);
  return it == net_index_.end() ? -1 : it->second;
}

double Design::width(int inst, Die d, Rotation r) const {
  const CellKind& ck = kind(inst, d);
  return swaps_axes(r) ? ck.height : ck.width;
}

double Design::height(int inst, Die d, Rotation r) const {
  const CellKind& ck = kind(inst, d);
  return swaps_axes(r) ? ck.width : ck.height;
}

Point Design::pin_offset(PinRef p, Die d, Rotation r) const {
  return rotate_offset(kind(p.inst, d).pins[p.pin].offset, r);
}

void PlacementState::resize(std::size_t n) {
  x.resize(n, 0.0);
  y.resize(n, 0.0);
  z.resize(n, 0.0);
  rot.resize(n, Rotation::R0);
}

std::uint8_t partition_bit(double z, double depth) { return (z - 0.5 * depth) > 0.0 ? 1 : 0; }

Partition derive_partition(const PlacementState& state) {
  Partition delta(state.z.size());
  for (std::size_t i = 0; i < state.z.size(); ++i) delta[i] = partition_bit(state.z[i], state.depth);
  return delta;
}

int crossing_indicator(const Net& net, std::span<const std::uint8_t> delta) {
  std::uint8_t lo = 1, hi = 0;
  for (const PinRef& p : net.pins) {
    lo = std::min(lo, delta[p.inst]);
    hi = std::max(hi, delta[p.inst]);
  }
  return hi > lo ? 1 : 0;
}

Partition Solution::partition() const {
  Partition delta(placements.size());
  for (std::size_t i = 0; i < placements.size(); ++i) delta[i] = static_cast<std::uint8_t>(die_index(placements[i].die));
  return delta;
}

Point pin_location(const Design& design, const Solution& sol, PinRef p) {
  const PlacedInstance& pi = sol.placements[p.inst];
  const double w = design.width(p.inst, pi.die, pi.rot);
  const double h = design.height(p.inst, pi.die, pi.rot);
  const Point off = design.pin_offset(p, pi.die, pi.rot);
  return {pi.x + 0.5 * w + off.x, pi.y + 0.5 * h + off.y};
}

double round_half_up(double v) { return std::floor(v + 0.5); }

}  // namespace place3d
