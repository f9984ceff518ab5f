#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace place3d {

/// Die tag. The numeric value is the partition bit: 1 = top, 0 = bottom.
enum class Die : std::uint8_t { Bottom = 0, Top = 1 };

constexpr int die_index(Die d) { return static_cast<int>(d); }
constexpr Die die_from_bit(std::uint8_t bit) { return bit ? Die::Top : Die::Bottom; }
const char* die_name(Die d);

/// Counter-clockwise macro rotation.
enum class Rotation : std::uint8_t { R0 = 0, R90 = 1, R180 = 2, R270 = 3 };

int rotation_degrees(Rotation r);
Rotation rotation_from_degrees(int degrees);
Rotation compose(Rotation a, Rotation b);
const char* rotation_name(Rotation r);
bool parse_rotation(std::string_view text, Rotation& out);

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Rotates an offset about the origin, counter-clockwise.
Point rotate_offset(Point offset, Rotation r);

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ScoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PinShape {
  std::string name;
  Point offset;  // relative to the instance center
};

struct CellKind {
  std::string name;
  double width = 0.0;
  double height = 0.0;
  std::vector<PinShape> pins;
};

/// Cell library for one die's technology node.
struct TechProfile {
  std::vector<CellKind> kinds;

  int find_kind(const std::string& name) const;
};

struct DieSpec {
  double width = 0.0;
  double height = 0.0;
  std::array<double, 2> row_height{0.0, 0.0};  // indexed by die_index
  std::array<double, 2> site_width{1.0, 1.0};
  std::array<double, 2> max_util{1.0, 1.0};

  double area() const { return width * height; }
};

struct HbtSpec {
  double size = 0.0;     // square side w'
  double spacing = 0.0;  // s'
  double cost = 0.0;     // beta
  double pitch() const { return size + spacing; }
};

struct Instance {
  std::string name;
  int kind = -1;
  bool macro = false;
};

struct PinRef {
  int inst = -1;
  int pin = -1;  // index into the kind's pin list
};

struct Net {
  std::string name;
  std::vector<PinRef> pins;
};

/// Immutable netlist plus technology and die data. Build through
/// `parse_design` or fill the public fields and call `finalize()`.
class Design {
 public:
  DieSpec die;
  HbtSpec hbt;
  std::array<TechProfile, 2> tech;  // indexed by die_index
  std::vector<Instance> instances;
  std::vector<Net> nets;

  /// Validates cross references and computes the derived tables.
  void finalize();

  const std::vector<int>& macros() const { return macros_; }
  const std::vector<int>& macro_nets() const { return macro_nets_; }
  const std::vector<int>& nets_of(int inst) const { return inst_nets_[inst]; }
  int pin_count(int inst) const { return inst_pin_count_[inst]; }
  double macro_area_ratio() const { return macro_area_ratio_; }
  int find_instance(const std::string& name) const;
  int find_net(const std::string& name) const;

  const CellKind& kind(int inst, Die d) const { return tech[die_index(d)].kinds[instances[inst].kind]; }
  /// Footprint after rotation.
  double width(int inst, Die d, Rotation r = Rotation::R0) const;
  double height(int inst, Die d, Rotation r = Rotation::R0) const;
  Point pin_offset(PinRef p, Die d, Rotation r = Rotation::R0) const;

 private:
  std::vector<int> macros_;
  std::vector<int> macro_nets_;
  std::vector<std::vector<int>> inst_nets_;
  std::vector<int> inst_pin_count_;
  std::unordered_map<std::string, int> inst_index_;
  std::unordered_map<std::string, int> net_index_;
  double macro_area_ratio_ = 0.0;
};

/// Continuous placement used during global placement. Coordinates are
/// instance centers; z is the depth coordinate inside [0, depth].
struct PlacementState {
  std::vector<double> x, y, z;
  std::vector<Rotation> rot;
  std::vector<double> filler_x, filler_y, filler_z;
  double depth = 0.0;

  std::size_t size() const { return x.size(); }
  void resize(std::size_t n);
};

using Partition = std::vector<std::uint8_t>;

/// delta_i = 1 iff z_i - depth/2 > 0. The exact midplane maps to the bottom die.
Partition derive_partition(const PlacementState& state);
std::uint8_t partition_bit(double z, double depth);

/// 1 iff the net has instances on both dies.
int crossing_indicator(const Net& net, std::span<const std::uint8_t> delta);

struct PlacedInstance {
  Die die = Die::Bottom;
  double x = 0.0;  // lower-left corner
  double y = 0.0;
  Rotation rot = Rotation::R0;
  friend bool operator==(const PlacedInstance&, const PlacedInstance&) = default;
};

struct HbtPlacement {
  int net = -1;
  double x = 0.0;  // center
  double y = 0.0;
  friend bool operator==(const HbtPlacement&, const HbtPlacement&) = default;
};

struct Solution {
  std::vector<PlacedInstance> placements;  // indexed by instance
  std::vector<HbtPlacement> hbts;
  friend bool operator==(const Solution&, const Solution&) = default;

  Partition partition() const;
};

/// Pin location in a legal solution.
Point pin_location(const Design& design, const Solution& sol, PinRef p);

struct Score {
  double hpwl = 0.0;
  long long hbt_count = 0;
  double raw = 0.0;
  bool exact = false;  // computed in exact integer arithmetic
};

/// D2D HPWL plus beta per HBT. With `allow_missing_hbts`, a crossing net
/// without an HBT is scored with its HBT at the optimal-region center and an
/// HBT on a non-crossing net is ignored; otherwise both raise ScoreError.
Score evaluate_score(const Design& design, const Solution& sol, bool allow_missing_hbts = false);

Design parse_design(std::istream& in);
Design parse_design_file(const std::string& path);
void write_design(const Design& design, std::ostream& out);

void write_solution(const Design& design, const Solution& sol, std::ostream& out);
Solution read_solution(const Design& design, std::istream& in);
Solution read_solution_file(const Design& design, const std::string& path);

/// Half-up rounding used for every emitted coordinate.
double round_half_up(double v);

}  // namespace place3d
