#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "place3d/model.hpp"

namespace place3d {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == '#') break;
    if (c == ' ' || c == '\t' || c == '\r') {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

double to_double(const std::string& s, int line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError(line, "expected a number, got '" + s + "'");
  return v;
}

long long to_int(const std::string& s, int line) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 0)
    throw ParseError(line, "expected a non-negative integer, got '" + s + "'");
  return v;
}

bool to_flag(const std::string& s, int line) {
  if (s == "1" || s == "true" || s == "TRUE") return true;
  if (s == "0" || s == "false" || s == "FALSE") return false;
  throw ParseError(line, "expected a 0/1 flag, got '" + s + "'");
}

// Utilization may be written as a fraction or as a percentage.
double to_util(const std::string& s, int line) {
  double v = to_double(s, line);
  if (v > 1.0) v /= 100.0;
  if (!(v > 0.0) || v > 1.0) throw ParseError(line, "utilization out of range");
  return v;
}

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void expect_args(const std::vector<std::string>& t, std::size_t n, int line) {
  if (t.size() != n + 1) throw ParseError(line, "'" + t[0] + "' expects " + std::to_string(n) + " argument(s)");
}

struct RawKind {
  CellKind kind;
  int line = 0;
};

struct RawInst {
  std::string name, kind;
  bool macro = false;
  int line = 0;
};

struct RawPin {
  std::string inst, pin;
  int line = 0;
};

struct RawNet {
  std::string name;
  std::vector<RawPin> pins;
  int line = 0;
};

}  // namespace

Design parse_design(std::istream& in) {
  Design d;
  std::array<std::vector<RawKind>, 2> kinds;
  std::array<bool, 2> have_tech{false, false};
  std::vector<RawInst> insts;
  std::vector<RawNet> nets;
  bool have_die = false, have_hbt = false;
  std::array<bool, 2> have_rh{false, false};

  int tech = -1;           // die currently receiving Cell lines
  int pins_left = 0;       // pins still expected by the current Cell or Net
  bool in_net = false;
  int open_line = 0;

  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    auto t = tokenize(line);
    if (t.empty()) continue;
    const std::string& key = t[0];

    if (pins_left > 0) {
      if (key != "Pin") throw ParseError(ln, "expected 'Pin', got '" + key + "'");
      if (in_net) {
        expect_args(t, 1, ln);
        auto slash = t[1].find('/');
        if (slash == std::string::npos || slash == 0 || slash + 1 == t[1].size())
          throw ParseError(ln, "net pin must be written inst/pin");
        nets.back().pins.push_back({t[1].substr(0, slash), t[1].substr(slash + 1), ln});
      } else {
        expect_args(t, 3, ln);
        kinds[tech].back().kind.pins.push_back({t[1], {to_double(t[2], ln), to_double(t[3], ln)}});
      }
      --pins_left;
      continue;
    }
    if (key == "Pin") throw ParseError(ln, "unexpected 'Pin'");

    if (key == "Cell") {
      if (tech < 0) throw ParseError(ln, "'Cell' outside a technology block");
      expect_args(t, 4, ln);
      RawKind rk;
      rk.kind.name = t[1];
      rk.kind.width = to_double(t[2], ln);
      rk.kind.height = to_double(t[3], ln);
      rk.line = ln;
      if (!(rk.kind.width > 0.0) || !(rk.kind.height > 0.0))
        throw ParseError(ln, "cell '" + t[1] + "' has a non-positive dimension");
      pins_left = static_cast<int>(to_int(t[4], ln));
      in_net = false;
      open_line = ln;
      kinds[tech].push_back(std::move(rk));
      continue;
    }
    tech = -1;

    if (key == "DieSize") {
      expect_args(t, 2, ln);
      d.die.width = to_double(t[1], ln);
      d.die.height = to_double(t[2], ln);
      if (!(d.die.width > 0.0) || !(d.die.height > 0.0)) throw ParseError(ln, "die size must be positive");
      have_die = true;
    } else if (key == "TopDieMaxUtil" || key == "BottomDieMaxUtil") {
      expect_args(t, 1, ln);
      d.die.max_util[die_index(key[0] == 'T' ? Die::Top : Die::Bottom)] = to_util(t[1], ln);
    } else if (key == "TopDieRowHeight" || key == "BottomDieRowHeight") {
      expect_args(t, 1, ln);
      int di = die_index(key[0] == 'T' ? Die::Top : Die::Bottom);
      d.die.row_height[di] = to_double(t[1], ln);
      if (!(d.die.row_height[di] > 0.0)) throw ParseError(ln, "row height must be positive");
      have_rh[di] = true;
    } else if (key == "TopDieSiteWidth" || key == "BottomDieSiteWidth") {
      expect_args(t, 1, ln);
      int di = die_index(key[0] == 'T' ? Die::Top : Die::Bottom);
      d.die.site_width[di] = to_double(t[1], ln);
      if (!(d.die.site_width[di] > 0.0)) throw ParseError(ln, "site width must be positive");
    } else if (key == "TopDieTech" || key == "BottomDieTech") {
      expect_args(t, 0, ln);
      tech = die_index(key[0] == 'T' ? Die::Top : Die::Bottom);
      if (have_tech[tech]) throw ParseError(ln, "duplicate '" + key + "'");
      have_tech[tech] = true;
    } else if (key == "Inst") {
      expect_args(t, 3, ln);
      insts.push_back({t[1], t[2], to_flag(t[3], ln), ln});
    } else if (key == "Net") {
      expect_args(t, 2, ln);
      nets.push_back({t[1], {}, ln});
      pins_left = static_cast<int>(to_int(t[2], ln));
      if (pins_left == 0) throw ParseError(ln, "net '" + t[1] + "' has no pins");
      in_net = true;
      open_line = ln;
    } else if (key == "HBT") {
      expect_args(t, 3, ln);
      d.hbt.size = to_double(t[1], ln);
      d.hbt.spacing = to_double(t[2], ln);
      d.hbt.cost = to_double(t[3], ln);
      if (!(d.hbt.size > 0.0) || d.hbt.spacing < 0.0 || d.hbt.cost < 0.0)
        throw ParseError(ln, "HBT requires size > 0, spacing >= 0, cost >= 0");
      have_hbt = true;
    } else {
      throw ParseError(ln, "unknown keyword '" + key + "'");
    }
  }
  if (pins_left > 0) throw ParseError(open_line, "missing 'Pin' lines");
  if (!have_die) throw ParseError(ln, "missing 'DieSize'");
  if (!have_rh[0] || !have_rh[1]) throw ParseError(ln, "missing row height");
  if (!have_hbt) throw ParseError(ln, "missing 'HBT'");
  if (!have_tech[0] || !have_tech[1]) throw ParseError(ln, "missing technology block");

  // Align the bottom profile to the top profile's kind and pin order.
  auto& top = kinds[die_index(Die::Top)];
  auto& bot = kinds[die_index(Die::Bottom)];
  std::unordered_map<std::string, int> bot_index;
  for (std::size_t k = 0; k < bot.size(); ++k) {
    if (!bot_index.emplace(bot[k].kind.name, static_cast<int>(k)).second)
      throw ParseError(bot[k].line, "duplicate cell '" + bot[k].kind.name + "'");
  }
  if (bot.size() != top.size()) {
    int line_no = top.size() > bot.size() ? top.back().line : bot.back().line;
    throw ParseError(line_no, "technology blocks define different cells");
  }
  std::unordered_map<std::string, int> kind_index;
  for (std::size_t k = 0; k < top.size(); ++k) {
    const RawKind& a = top[k];
    if (!kind_index.emplace(a.kind.name, static_cast<int>(k)).second)
      throw ParseError(a.line, "duplicate cell '" + a.kind.name + "'");
    auto it = bot_index.find(a.kind.name);
    if (it == bot_index.end()) throw ParseError(a.line, "cell '" + a.kind.name + "' missing from bottom technology");
    const RawKind& b = bot[it->second];
    if (b.kind.pins.size() != a.kind.pins.size()) throw ParseError(b.line, "pin count of '" + a.kind.name + "' differs");
    CellKind aligned = b.kind;
    for (std::size_t p = 0; p < a.kind.pins.size(); ++p) {
      const std::string& name = a.kind.pins[p].name;
      for (std::size_t q = p + 1; q < a.kind.pins.size(); ++q) {
        if (a.kind.pins[q].name == name) throw ParseError(a.line, "duplicate pin '" + name + "'");
      }
      bool found = false;
      for (const PinShape& ps : b.kind.pins) {
        if (ps.name == name) {
          aligned.pins[p] = ps;
          found = true;
          break;
        }
      }
      if (!found) throw ParseError(b.line, "pin '" + name + "' of '" + a.kind.name + "' missing from bottom technology");
    }
    d.tech[die_index(Die::Top)].kinds.push_back(a.kind);
    d.tech[die_index(Die::Bottom)].kinds.push_back(std::move(aligned));
  }

  std::unordered_map<std::string, int> inst_index;
  for (const RawInst& ri : insts) {
    auto it = kind_index.find(ri.kind);
    if (it == kind_index.end()) throw ParseError(ri.line, "unknown cell '" + ri.kind + "'");
    if (!inst_index.emplace(ri.name, static_cast<int>(d.instances.size())).second)
      throw ParseError(ri.line, "duplicate instance '" + ri.name + "'");
    d.instances.push_back({ri.name, it->second, ri.macro});
  }
  std::unordered_map<std::string, int> net_names;
  for (const RawNet& rn : nets) {
    if (!net_names.emplace(rn.name, 0).second) throw ParseError(rn.line, "duplicate net '" + rn.name + "'");
    Net net;
    net.name = rn.name;
    for (const RawPin& rp : rn.pins) {
      auto it = inst_index.find(rp.inst);
      if (it == inst_index.end()) throw ParseError(rp.line, "unknown instance '" + rp.inst + "'");
      const CellKind& ck = d.tech[0].kinds[d.instances[it->second].kind];
      int pin = -1;
      for (std::size_t p = 0; p < ck.pins.size(); ++p) {
        if (ck.pins[p].name == rp.pin) pin = static_cast<int>(p);
      }
      if (pin < 0) throw ParseError(rp.line, "unknown pin '" + rp.inst + "/" + rp.pin + "'");
      net.pins.push_back({it->second, pin});
    }
    d.nets.push_back(std::move(net));
  }
  try {
    d.finalize();
  } catch (const std::invalid_argument& e) {
    throw ParseError(ln, e.what());
  }
  return d;
}

Design parse_design_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_design(in);
}

void write_design(const Design& d, std::ostream& out) {
  const int T = die_index(Die::Top), B = die_index(Die::Bottom);
  out << "DieSize " << fmt(d.die.width) << ' ' << fmt(d.die.height) << '\n';
  out << "TopDieMaxUtil " << fmt(d.die.max_util[T]) << '\n';
  out << "BottomDieMaxUtil " << fmt(d.die.max_util[B]) << '\n';
  out << "TopDieRowHeight " << fmt(d.die.row_height[T]) << '\n';
  out << "BottomDieRowHeight " << fmt(d.die.row_height[B]) << '\n';
  out << "TopDieSiteWidth " << fmt(d.die.site_width[T]) << '\n';
  out << "BottomDieSiteWidth " << fmt(d.die.site_width[B]) << '\n';
  for (int di : {T, B}) {
    out << (di == T ? "TopDieTech" : "BottomDieTech") << '\n';
    for (const CellKind& ck : d.tech[di].kinds) {
      out << "Cell " << ck.name << ' ' << fmt(ck.width) << ' ' << fmt(ck.height) << ' ' << ck.pins.size() << '\n';
      for (const PinShape& p : ck.pins) out << "Pin " << p.name << ' ' << fmt(p.offset.x) << ' ' << fmt(p.offset.y) << '\n';
    }
  }
  for (const Instance& inst : d.instances)
    out << "Inst " << inst.name << ' ' << d.tech[T].kinds[inst.kind].name << ' ' << (inst.macro ? 1 : 0) << '\n';
  for (const Net& net : d.nets) {
    out << "Net " << net.name << ' ' << net.pins.size() << '\n';
    for (const PinRef& p : net.pins)
      out << "Pin " << d.instances[p.inst].name << '/' << d.tech[T].kinds[d.instances[p.inst].kind].pins[p.pin].name << '\n';
  }
  out << "HBT " << fmt(d.hbt.size) << ' ' << fmt(d.hbt.spacing) << ' ' << fmt(d.hbt.cost) << '\n';
}

void write_solution(const Design& d, const Solution& sol, std::ostream& out) {
  for (Die die : {Die::Top, Die::Bottom}) {
    std::size_t n = 0;
    for (const PlacedInstance& p : sol.placements) n += p.die == die;
    out << (die == Die::Top ? "TopDiePlacement " : "BottomDiePlacement ") << n << '\n';
    for (std::size_t i = 0; i < sol.placements.size(); ++i) {
      const PlacedInstance& p = sol.placements[i];
      if (p.die != die) continue;
      out << "Inst " << d.instances[i].name << ' ' << fmt(round_half_up(p.x)) << ' ' << fmt(round_half_up(p.y)) << ' '
          << rotation_name(p.rot) << '\n';
    }
  }
  out << "NumHBTs " << sol.hbts.size() << '\n';
  for (const HbtPlacement& h : sol.hbts)
    out << "HBT " << d.nets[h.net].name << ' ' << fmt(round_half_up(h.x)) << ' ' << fmt(round_half_up(h.y)) << '\n';
}

Solution read_solution(const Design& d, std::istream& in) {
  Solution sol;
  sol.placements.resize(d.instances.size());
  std::vector<bool> seen(d.instances.size(), false);
  int left = 0;
  Die die = Die::Bottom;
  bool in_hbts = false;
  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    auto t = tokenize(line);
    if (t.empty()) continue;
    const std::string& key = t[0];
    if (key == "TopDiePlacement" || key == "BottomDiePlacement" || key == "NumHBTs") {
      if (left > 0) throw ParseError(ln, "section ended early");
      expect_args(t, 1, ln);
      left = static_cast<int>(to_int(t[1], ln));
      in_hbts = key == "NumHBTs";
      die = key[0] == 'T' ? Die::Top : Die::Bottom;
    } else if (key == "Inst") {
      if (left == 0 || in_hbts) throw ParseError(ln, "unexpected 'Inst'");
      expect_args(t, 4, ln);
      int i = d.find_instance(t[1]);
      if (i < 0) throw ParseError(ln, "unknown instance '" + t[1] + "'");
      if (seen[i]) throw ParseError(ln, "instance '" + t[1] + "' placed twice");
      seen[i] = true;
      Rotation r;
      if (!parse_rotation(t[4], r)) throw ParseError(ln, "bad rotation '" + t[4] + "'");
      sol.placements[i] = {die, to_double(t[2], ln), to_double(t[3], ln), r};
      --left;
    } else if (key == "HBT") {
      if (left == 0 || !in_hbts) throw ParseError(ln, "unexpected 'HBT'");
      expect_args(t, 3, ln);
      int n = d.find_net(t[1]);
      if (n < 0) throw ParseError(ln, "unknown net '" + t[1] + "'");
      sol.hbts.push_back({n, to_double(t[2], ln), to_double(t[3], ln)});
      --left;
    } else {
      throw ParseError(ln, "unknown keyword '" + key + "'");
    }
  }
  if (left > 0) throw ParseError(ln, "unexpected end of file");
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw ParseError(ln, "instance '" + d.instances[i].name + "' not placed");
  }
  return sol;
}

Solution read_solution_file(const Design& d, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_solution(d, in);
}

}  // namespace place3d
