#include "place3d/flow.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <fstream>
#include <json.hpp>
#include <unordered_map>

#include "place3d/checker.hpp"
#include "place3d/dp.hpp"
#include "place3d/legalize.hpp"
#include "place3d/rotation.hpp"

namespace place3d {

namespace {

using Clock = std::chrono::steady_clock;

template <class F>
decltype(auto) run_stage(FlowReport& rep, const char* name, F&& f) {
  struct Timer {
    FlowReport& rep;
    const char* name;
    Clock::time_point t0 = Clock::now();
    ~Timer() { rep.stages.push_back({name, std::chrono::duration<double>(Clock::now() - t0).count()}); }
  } timer{rep, name};
  spdlog::info("stage {}", name);
  try {
    return f();
  } catch (const InfeasibleError& e) {
    throw InfeasibleError(std::string(name) + ": " + e.what());
  } catch (const ScoreError& e) {
    throw ScoreError(std::string(name) + ": " + e.what());
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(name) + ": " + e.what());
  }
}

const char* path_name(FlowPath p) { return p == FlowPath::Gp3d ? "3d" : "2d"; }

}  // namespace

Score continuous_score(const Design& design, const PlacementState& state, const std::vector<HbtPlacement>& hbts) {
  const Partition delta = derive_partition(state);
  Solution sol;
  sol.placements.resize(design.instances.size());
  for (std::size_t i = 0; i < design.instances.size(); ++i) {
    const Die die = die_from_bit(delta[i]);
    const int id = static_cast<int>(i);
    sol.placements[i] = {die, state.x[i] - 0.5 * design.width(id, die, state.rot[i]),
                         state.y[i] - 0.5 * design.height(id, die, state.rot[i]), state.rot[i]};
  }
  sol.hbts = hbts;
  return evaluate_score(design, sol);
}

FlowResult run_flow(const Design& design, const FlowConfig& config) {
  FlowResult out;
  FlowReport& rep = out.report;

  GpResult gp1 = run_stage(rep, "global_placement", [&] { return run_gp3d(design, PlacementState{}, config.gp); });
  PlacementState state = gp1.state;
  rep.diverged = gp1.diverged;
  rep.history = gp1.history;

  rep.rotation_skipped = config.skip_rotation;
  if (!config.skip_rotation && !design.macros().empty()) {
    run_stage(rep, "rotation", [&] {
      const std::vector<HbtPlacement> hbts = insert_hbts(design, state);
      rep.rotation_score_before = continuous_score(design, state, hbts).raw;
      const RotationProblem prob = build_rotation_problem(design, state);
      const RotationSolution rs = solve_rotation_exact(prob);
      apply_rotation(design, state, prob.macros, rs.assign);
      rep.rotation_score_after = continuous_score(design, state, hbts).raw;
      rep.rotation_optimal = rs.optimal;
      spdlog::info("rotation: {} macros, score {:.6g} -> {:.6g}", prob.macros.size(), rep.rotation_score_before,
                   rep.rotation_score_after);
    });
  }

  rep.path = config.flow == FlowChoice::Auto ? select_flow(design)
             : config.flow == FlowChoice::Force3d ? FlowPath::Gp3d
                                                  : FlowPath::Gp2dMulti;
  spdlog::info("flow path: {} (macro area ratio {:.3f})", path_name(rep.path), design.macro_area_ratio());
  GpResult gp2 = run_stage(rep, rep.path == FlowPath::Gp3d ? "global_placement_3d" : "global_placement_2d", [&] {
    GpConfig warm = config.gp;
    if (rep.path == FlowPath::Gp2dMulti) {
      if (gp1.lambda_initial > 0.0) warm.lambda_scale *= gp1.lambda / gp1.lambda_initial;
      // The 2D path keeps the partition, so make it packable and balanced first.
      PlacementState fixed = state;
      round_depth(fixed);
      balance_utilization(design, fixed);
      return run_gp2d_multi(design, fixed, warm);
    }
    warm.lambda_init = gp1.lambda;
    return run_gp3d(design, state, warm);
  });
  state = gp2.state;
  rep.diverged = rep.diverged || gp2.diverged;
  for (IterRecord r : gp2.history) {
    r.iter += gp1.iterations;
    rep.history.push_back(r);
  }
  rep.gp_iterations = gp1.iterations + gp2.iterations;
  rep.overflow = gp2.overflow;
  rep.macro_overflow = gp2.macro_overflow;

  out.solution = run_stage(rep, "legalization", [&] {
    round_depth(state);
    balance_utilization(design, state);
    std::vector<HbtPlacement> hbts = insert_hbts(design, state);
    if (rep.path == FlowPath::Gp2dMulti) {
      std::unordered_map<int, Point> placed;
      for (std::size_t h = 0; h < gp2.hbt_nets.size(); ++h) placed[gp2.hbt_nets[h]] = gp2.hbt_pos[h];
      for (HbtPlacement& h : hbts) {
        auto it = placed.find(h.net);
        if (it != placed.end()) h.x = it->second.x, h.y = it->second.y;
      }
    }
    return legalize(design, state, std::move(hbts));
  });
  rep.legal_score = evaluate_score(design, out.solution).raw;

  run_stage(rep, "detailed_placement", [&] {
    detailed_place(design, out.solution, config.dp_passes);
    refine_with_hbt_remap(design, out.solution);
  });

  const CheckReport check = run_stage(rep, "check", [&] { return check_solution(design, out.solution); });
  rep.check_pass = check.pass;
  rep.violations = check.violations;
  const Score s = evaluate_score(design, out.solution);
  rep.hpwl = s.hpwl;
  rep.hbt_count = s.hbt_count;
  rep.raw_score = s.raw;
  spdlog::info("final: hpwl {:.6g}, {} HBTs, score {:.6g}, legal {}", s.hpwl, s.hbt_count, s.raw, check.pass);

  if (!config.iteration_csv.empty()) {
    std::ofstream csv(config.iteration_csv);
    if (!csv) throw std::runtime_error("cannot write " + config.iteration_csv);
    write_iteration_csv_header(csv);
    for (const IterRecord& r : rep.history) write_iteration_csv(csv, r);
  }
  return out;
}

std::string report_json(const FlowReport& r) {
  nlohmann::ordered_json j;
  j["hpwl"] = r.hpwl;
  j["hbt_count"] = r.hbt_count;
  j["raw_score"] = r.raw_score;
  j["final_overflow"] = r.overflow;
  j["final_macro_overflow"] = r.macro_overflow;
  j["flow"] = path_name(r.path);
  j["rotation_skipped"] = r.rotation_skipped;
  if (!r.rotation_skipped) {
    j["rotation"] = {{"score_before", r.rotation_score_before},
                     {"score_after", r.rotation_score_after},
                     {"optimal", r.rotation_optimal}};
  }
  j["legalized_score"] = r.legal_score;
  j["gp_iterations"] = r.gp_iterations;
  j["divergence_fallback"] = r.diverged;
  j["legal"] = r.check_pass;
  j["violations"] = r.violations;
  nlohmann::ordered_json rt = nlohmann::ordered_json::object();
  double total = 0.0;
  for (const StageTime& st : r.stages) {
    rt[st.name] = st.seconds;
    total += st.seconds;
  }
  rt["total"] = total;
  j["runtime_seconds"] = rt;
  return j.dump(2);
}

}  // namespace place3d
