#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "place3d/checker.hpp"
#include "place3d/flow.hpp"
#include "place3d/synthetic.hpp"

namespace {

enum Exit { kOk = 0, kError = 1, kParse = 2, kInfeasible = 3, kDiverged = 4 };

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("place3d");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* lvl = std::getenv("PLACER3D_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));
}

void print_check(const place3d::CheckReport& rep) {
  std::cout << (rep.pass ? "PASS" : "FAIL") << "\n";
  for (const std::string& v : rep.violations) std::cout << "  " << v << "\n";
  std::cout << "hpwl " << rep.score.hpwl << "\nhbts " << rep.score.hbt_count << "\nraw_score " << rep.score.raw
            << "\n";
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Die-to-die 3D mixed-size analytical placer"};
  app.require_subcommand(0, 1);

  std::string input, out, report, iter_csv, flow = "auto";
  place3d::FlowConfig cfg;
  bool check = false;
  app.add_option("--input", input, "Design file")->check(CLI::ExistingFile);
  app.add_option("--out", out, "Solution file to write");
  app.add_option("--report", report, "JSON report (default: <out>.report.json)");
  app.add_option("--iter-csv", iter_csv, "Iteration log (default: <out>.iter.csv)");
  app.add_option("--seed", cfg.gp.seed, "Random seed");
  app.add_option("--threads", cfg.gp.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--nz", cfg.gp.nz, "Bins along the depth axis")->check(CLI::PositiveNumber);
  app.add_option("--stop-overflow", cfg.gp.stop_overflow, "Global placement stopping overflow")
      ->check(CLI::Range(0.0, 1.0));
  app.add_flag("--skip-rotation", cfg.skip_rotation, "Skip the macro rotation stage");
  app.add_option("--flow", flow, "Second placement stage")->check(CLI::IsMember({"auto", "3d", "2d"}));
  app.add_option("--dump-fields", cfg.gp.dump_fields, "Prefix for density/potential/field dumps");
  app.add_flag("--check", check, "Re-read and check the written solution");

  auto* gen = app.add_subcommand("gen-synthetic", "Write a synthetic design");
  place3d::SyntheticSpec spec;
  std::string gen_out;
  gen->add_option("--cells", spec.cells, "Standard cells")->required();
  gen->add_option("--macros", spec.macros, "Macros");
  gen->add_option("--macro-ratio", spec.macro_area_ratio, "Macro area over die area");
  gen->add_option("--seed", spec.seed, "Random seed");
  gen->add_option("--nets-per-cell", spec.nets_per_cell, "Nets per standard cell");
  gen->add_option("--out", gen_out, "Design file to write")->required();

  auto* chk = app.add_subcommand("check", "Check a solution against a design");
  std::string chk_design, chk_solution;
  chk->add_option("--input", chk_design, "Design file")->required()->check(CLI::ExistingFile);
  chk->add_option("--solution", chk_solution, "Solution file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const place3d::Design d = place3d::generate_synthetic(spec);
      std::ofstream os(gen_out);
      if (!os) throw std::runtime_error("cannot write " + gen_out);
      place3d::write_design(d, os);
      spdlog::info("wrote {} ({} instances, {} nets, macro area ratio {:.3f})", gen_out, d.instances.size(),
                   d.nets.size(), d.macro_area_ratio());
      return kOk;
    }
    if (*chk) {
      const place3d::Design d = place3d::parse_design_file(chk_design);
      const place3d::Solution s = place3d::read_solution_file(d, chk_solution);
      const place3d::CheckReport rep = place3d::check_solution(d, s);
      print_check(rep);
      return rep.pass ? kOk : kError;
    }
    if (input.empty() || out.empty()) {
      std::cerr << "--input and --out are required\n" << app.help();
      return kError;
    }
    cfg.flow = flow == "3d" ? place3d::FlowChoice::Force3d
               : flow == "2d" ? place3d::FlowChoice::Force2d
                              : place3d::FlowChoice::Auto;
    cfg.iteration_csv = iter_csv.empty() ? out + ".iter.csv" : iter_csv;
    if (report.empty()) report = out + ".report.json";

    const place3d::Design d = place3d::parse_design_file(input);
    const place3d::FlowResult res = place3d::run_flow(d, cfg);
    {
      std::ofstream os(out);
      if (!os) throw std::runtime_error("cannot write " + out);
      place3d::write_solution(d, res.solution, os);
    }
    write_file(report, place3d::report_json(res.report) + "\n");
    spdlog::info("wrote {} and {}", out, report);
    if (check) {
      const place3d::CheckReport rep = place3d::check_solution(d, place3d::read_solution_file(d, out));
      print_check(rep);
      if (!rep.pass) return kError;
    }
    return res.report.diverged ? kDiverged : kOk;
  } catch (const place3d::ParseError& e) {
    spdlog::error("parse error: {}", e.what());
    return kParse;
  } catch (const place3d::InfeasibleError& e) {
    spdlog::error("infeasible: {}", e.what());
    return kInfeasible;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kError;
  }
}
