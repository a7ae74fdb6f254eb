// conley-switch: Morse graphs, attractor lattices, and certified trapping
// regions for planar switching systems.
//
// Exit codes: 0 success, 1 a certificate failed, 2 unusable input (parse or
// validation error, rejected collar width), 3 black wall.

#include <CLI11.hpp>

#include <cstdint>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "csw/field.hpp"
#include "csw/io.hpp"
#include "csw/order.hpp"
#include "csw/rational.hpp"
#include "csw/stg.hpp"
#include "csw/system.hpp"
#include "csw/tiles.hpp"

namespace {

using namespace csw;

constexpr int kVerifyFailed = 1;
constexpr int kBadInput = 2;
constexpr int kBlackWall = 3;

struct Fatal {
  int code;
};

[[noreturn]] void fail(int code, const std::string& msg) {
  std::cerr << "conley-switch: " << msg << "\n";
  throw Fatal{code};
}

std::string dstr(double x) {
  std::ostringstream os;
  os << std::setprecision(9) << x;
  return os.str();
}

SpecFile load_or_fail(const std::string& path) {
  auto r = load_spec(path);
  if (auto* v = std::get_if<Violation>(&r))
    fail(kBadInput, "[" + v->code + "] " + v->detail);
  return std::get<SpecFile>(std::move(r));
}

SwitchingSystem system_or_fail(const SpecFile& spec) {
  auto r = SwitchingSystem::validate(spec.raw);
  if (auto* vs = std::get_if<std::vector<Violation>>(&r)) {
    for (const auto& v : *vs)
      std::cerr << "error [" << v.code << "] " << v.detail << "\n";
    throw Fatal{kBadInput};
  }
  return std::get<SwitchingSystem>(std::move(r));
}

std::optional<SystemConstants> constants_of(const SwitchingSystem& sys) {
  auto r = derived_constants(sys);
  if (auto* c = std::get_if<SystemConstants>(&r)) return *c;
  return std::nullopt;
}

// When there is no certified bound (single row or column), fall back to a
// tenth of the smallest cell width so rendering still works.
Rat fallback_delta(const SwitchingSystem& sys) {
  Rat w = sys.xline(1) - sys.xline(0);
  for (int k = 0; k <= sys.nx(); ++k)
    w = std::min(w, sys.xline(k + 1) - sys.xline(k));
  for (int k = 0; k <= sys.ny(); ++k)
    w = std::min(w, sys.yline(k + 1) - sys.yline(k));
  return w / 10;
}

struct DeltaPick {
  Rat value;
  std::vector<std::string> warnings;
};

DeltaPick pick_delta(const SwitchingSystem& sys,
                     const std::optional<SystemConstants>& cons,
                     const std::string& flag, const RunSettings& settings,
                     bool allow_unsafe) {
  DeltaPick p;
  std::optional<Rat> req;
  if (!flag.empty()) {
    auto r = parse_rational(flag);
    if (!r) fail(kBadInput, "--delta: '" + flag + "' is not a rational");
    req = *r;
  } else if (settings.delta) {
    req = settings.delta;
  }
  if (!req) {
    if (cons) {
      p.value = rational_below(0.9 * cons->delta_star, 12);
    } else {
      p.value = fallback_delta(sys);
      p.warnings.push_back(
          "no certified collar bound for a single-row or single-column "
          "system; defaulting to a tenth of the smallest cell width");
    }
    return p;
  }
  if (*req <= 0)
    fail(kBadInput, "delta must be positive, got " + format_rational(*req));
  if (cons && to_double(*req) >= cons->delta_star) {
    // The tile builder attaches its own warning for this case.
    if (!allow_unsafe)
      fail(kBadInput,
           "delta = " + format_rational(*req) +
               " is not below the certified bound delta* = " +
               dstr(cons->delta_star) + "; use --allow-unsafe-delta to try anyway");
  }
  p.value = *req;
  return p;
}

TileComplex tiles_or_fail(const SwitchingSystem& sys, const Rat& delta,
                          std::vector<std::string>& warnings) {
  auto r = build_tiles(sys, delta);
  if (auto* v = std::get_if<Violation>(&r))
    fail(kBadInput, "[" + v->code + "] " + v->detail);
  auto t = std::get<TileComplex>(std::move(r));
  if (t.delta_warning) warnings.push_back(*t.delta_warning);
  return t;
}

RegionLattice lattice_or_fail(const TransitionGraph& stg,
                              const TileComplex& tiles) {
  auto r = region_lattice(stg, tiles);
  if (auto* v = std::get_if<Violation>(&r))
    fail(v->code == "BlackVertexPresent" ? kBlackWall : kBadInput,
         "[" + v->code + "] " + v->detail);
  return std::get<RegionLattice>(std::move(r));
}

void no_black_or_fail(const TransitionGraph& stg) {
  if (auto b = assert_no_black(stg))
    fail(kBlackWall,
         "[BlackVertexPresent] " + face_name(b->vertex) + ": " + b->witness);
}

Json base_report(const char* kind, const SpecFile& spec) {
  Json rep;
  rep["schema"] = kSchema;
  rep["kind"] = kind;
  rep["version"] = kToolVersion;
  rep["input"] = spec_json(spec);
  return rep;
}

Json constants_or_null(const std::optional<SystemConstants>& cons) {
  if (cons) return constants_json(*cons);
  return nullptr;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

// ---------------------------------------------------------------------------

int cmd_validate(const std::string& path) {
  SpecFile spec = load_or_fail(path);
  SwitchingSystem sys = system_or_fail(spec);

  std::cout << "cells: " << sys.cols() << " x " << sys.rows() << ", gamma = ("
            << format_rational(sys.gamma()[0]) << ", "
            << format_rational(sys.gamma()[1]) << "), bbox = ("
            << format_rational(sys.bbox()[0]) << ", "
            << format_rational(sys.bbox()[1])
            << (sys.bbox_explicit() ? ")" : ") [derived]") << "\n";
  auto thresholds = [](const char* axis, const std::vector<Threshold>& ts) {
    std::cout << axis << " thresholds:";
    if (ts.empty()) std::cout << " none";
    for (const auto& t : ts)
      std::cout << " " << format_rational(t.value) << " (tag " << t.tag << ")";
    std::cout << "\n";
  };
  thresholds("x", sys.xi());
  thresholds("y", sys.eta());
  std::cout << "cell types, top row first:\n";
  for (int j = sys.rows() - 1; j >= 0; --j) {
    std::cout << " ";
    for (int i = 0; i < sys.cols(); ++i)
      std::cout << " " << std::setw(2) << std::left
                << cell_type_name(sys.cell_type(i, j));
    std::cout << "\n";
  }
  auto cv = derived_constants(sys);
  if (auto* c = std::get_if<SystemConstants>(&cv)) {
    std::cout << "mu = " << format_rational(c->mu)
              << "\nlambda = " << format_rational(c->half_width)
              << "\nrho = " << format_rational(c->rho)
              << "\ngamma_bar = " << format_rational(c->gamma_bar)
              << "\ndelta* = " << dstr(c->delta_star) << " (linear "
              << dstr(c->delta_star_linear) << ", sqrt "
              << dstr(c->delta_star_sqrt) << ")\n";
  } else {
    std::cout << "constants unavailable: "
              << std::get<Violation>(cv).detail << "\n";
  }
  no_black_or_fail(build_stg(sys));
  std::cout << "ok\n";
  return 0;
}

int cmd_analyze(const std::string& path, bool as_json,
                const std::string& dot_path) {
  SpecFile spec = load_or_fail(path);
  SwitchingSystem sys = system_or_fail(spec);
  auto stg = build_stg(sys);
  no_black_or_fail(stg);
  auto g = Digraph::of(stg);
  auto mg = morse_graph(g);
  auto av = attractor_lattice(g, mg);
  if (auto* v = std::get_if<Violation>(&av))
    fail(kBadInput, "[" + v->code + "] " + v->detail);
  const auto& att = std::get<AttractorLattice>(av);

  if (!dot_path.empty()) write_file(dot_path, morse_graph_dot(stg, mg));

  if (as_json) {
    Json rep = base_report("analysis", spec);
    rep["constants"] = constants_or_null(constants_of(sys));
    rep["system"] = system_json(sys);
    rep["stg"] = stg_json(stg);
    rep["morse"] = morse_json(stg, mg);
    rep["lattice"] = lattice_json(stg, att);
    std::cout << rep.dump(2) << "\n";
    return 0;
  }

  std::size_t edges = 0;
  for (const auto& o : stg.out) edges += o.size();
  std::cout << "stg: " << stg.verts.size() << " faces, " << edges
            << " transitions\n";
  std::cout << "morse sets: " << mg.sets.size() << "\n";
  for (std::size_t k = 0; k < mg.sets.size(); ++k) {
    std::cout << "  M" << k << " = {";
    for (std::size_t t = 0; t < mg.sets[k].size(); ++t)
      std::cout << (t ? ", " : "") << face_name(stg.verts[mg.sets[k][t]]);
    std::cout << "}\n";
  }
  for (const auto& [lo, hi] : mg.order.covers)
    std::cout << "  M" << hi << " > M" << lo << "\n";
  std::cout << "attractors: " << att.attractors.size() << "\n";
  for (std::size_t k = 0; k < att.attractors.size(); ++k)
    std::cout << "  A" << k << ": " << att.attractors[k].count() << " faces\n";
  return 0;
}

int cmd_regions(const std::string& path, const std::string& delta_flag,
                bool as_json, const std::string& svg_path, bool allow_unsafe) {
  SpecFile spec = load_or_fail(path);
  SwitchingSystem sys = system_or_fail(spec);
  auto cons = constants_of(sys);
  DeltaPick pick =
      pick_delta(sys, cons, delta_flag, spec.settings, allow_unsafe);
  auto stg = build_stg(sys);
  auto tiles = tiles_or_fail(sys, pick.value, pick.warnings);
  auto rl = lattice_or_fail(stg, tiles);

  if (!svg_path.empty()) write_file(svg_path, render_svg(tiles, rl));
  print_warnings(pick.warnings);

  if (as_json) {
    Json rep = base_report("regions", spec);
    rep["constants"] = constants_or_null(cons);
    rep["delta"] = format_rational(pick.value);
    rep["warnings"] = pick.warnings;
    rep["regions"] = regions_json(tiles, rl);
    std::cout << rep.dump(2) << "\n";
    return 0;
  }

  std::cout << "delta = " << format_rational(pick.value) << " ("
            << dstr(to_double(pick.value)) << ")\n";
  for (std::size_t k = 0; k < rl.regions.size(); ++k) {
    const auto& inv = rl.regions[k].inventory;
    if (inv.empty()) {
      std::cout << "region " << k << ": empty\n";
      continue;
    }
    int cells = 0, walls = 0, points = 0, narrow = 0, wide = 0;
    for (const auto& e : inv) switch (e.kind) {
        case Element::Kind::Cell2: ++cells; break;
        case Element::Kind::Wall1: ++walls; break;
        case Element::Kind::Point0: ++points; break;
        case Element::Kind::ChipNarrow: ++narrow; break;
        case Element::Kind::ChipWide: ++wide; break;
      }
    std::cout << "region " << k << ": " << cells << " cells, " << walls
              << " walls, " << points << " points, " << narrow + wide
              << " chips (" << wide << " wide)\n ";
    for (const auto& e : inv) std::cout << " " << element_name(e);
    std::cout << "\n";
  }
  return 0;
}

struct VerifyFlags {
  std::string delta;
  int samples = 100, trajectories = 1000;
  std::uint64_t seed = 1;
  double dt = 1e-3, horizon = 50.0, perturb = 0.01;
  bool samples_set = false, trajectories_set = false, seed_set = false,
       dt_set = false, horizon_set = false, perturb_set = false;
  bool as_json = false, allow_unsafe = false;
};

int cmd_verify(const std::string& path, const VerifyFlags& vf) {
  SpecFile spec = load_or_fail(path);
  SwitchingSystem sys = system_or_fail(spec);
  auto cons = constants_of(sys);
  DeltaPick pick =
      pick_delta(sys, cons, vf.delta, spec.settings, vf.allow_unsafe);
  auto stg = build_stg(sys);
  auto tiles = tiles_or_fail(sys, pick.value, pick.warnings);
  auto rl = lattice_or_fail(stg, tiles);

  RunSettings s = spec.settings;
  if (vf.samples_set) s.samples_per_edge = vf.samples;
  if (vf.trajectories_set) s.trajectories = vf.trajectories;
  if (vf.seed_set) s.seed = vf.seed;
  if (vf.dt_set) s.dt = vf.dt;
  if (vf.horizon_set) s.horizon = vf.horizon;

  auto fsv = make_fdelta(sys, pick.value);
  if (auto* v = std::get_if<Violation>(&fsv))
    fail(kBadInput, "[" + v->code + "] " + v->detail);
  const auto& fs = std::get<FieldSampler>(fsv);

  VerifyOptions opt;
  opt.samples_per_edge = s.samples_per_edge;
  opt.trajectories = s.trajectories;
  opt.dt = s.dt;
  opt.horizon = s.horizon;
  opt.seed = s.seed;
  if (vf.perturb_set) opt.perturb_eps = vf.perturb;

  VerificationReport vr = run_verification(fs, tiles, rl, opt);

  print_warnings(pick.warnings);

  if (vf.as_json) {
    Json rep = base_report("verification", spec);
    rep["constants"] = constants_or_null(cons);
    rep["delta"] = format_rational(pick.value);
    rep["warnings"] = pick.warnings;
    rep["verification"] = verification_json(vr);
    std::cout << rep.dump(2) << "\n";
    return vr.pass ? 0 : kVerifyFailed;
  }

  std::cout << "delta = " << format_rational(pick.value) << " ("
            << dstr(to_double(pick.value)) << ")\n";
  for (const auto& rv : vr.regions) {
    std::cout << "region " << rv.lattice_index << ": transversality "
              << (rv.transversality.pass ? "ok" : "FAILED");
    if (rv.transversality.worst_margin)
      std::cout << " (worst margin " << dstr(*rv.transversality.worst_margin)
                << ")";
    if (!rv.chips.empty()) {
      int good = 0;
      for (const auto& c : rv.chips) good += c.pass;
      std::cout << "; chips " << good << "/" << rv.chips.size()
                << (good == static_cast<int>(rv.chips.size()) ? " ok"
                                                              : " FAILED");
    }
    std::cout << "; invariance "
              << (rv.invariance.pass ? "ok" : "FAILED") << " ("
              << rv.invariance.escapes << " escapes)";
    if (rv.perturbation)
      std::cout << "; perturbation eps=" << dstr(rv.perturbation->epsilon)
                << (rv.perturbation->pass_at_epsilon ? " ok" : " FAILED");
    std::cout << "\n";
    if (rv.transversality.failure)
      std::cout << "  " << rv.transversality.failure->detail << "\n";
    if (rv.invariance.failure)
      std::cout << "  " << rv.invariance.failure->detail << "\n";
  }
  std::cout << "localization: "
            << (vr.localization.pass ? "ok" : "FAILED") << " ("
            << vr.localization.order_violations << " order violations)\n";
  if (vr.localization.failure)
    std::cout << "  " << vr.localization.failure->detail << "\n";
  std::cout << (vr.pass ? "PASS" : "FAIL") << "\n";
  return vr.pass ? 0 : kVerifyFailed;
}

int cmd_render(const std::string& path, const std::string& out,
               const std::string& delta_flag, bool allow_unsafe) {
  SpecFile spec = load_or_fail(path);
  SwitchingSystem sys = system_or_fail(spec);
  auto cons = constants_of(sys);
  DeltaPick pick =
      pick_delta(sys, cons, delta_flag, spec.settings, allow_unsafe);
  auto stg = build_stg(sys);
  auto tiles = tiles_or_fail(sys, pick.value, pick.warnings);
  auto rl = lattice_or_fail(stg, tiles);
  print_warnings(pick.warnings);
  write_file(out, render_svg(tiles, rl));
  std::cout << "wrote " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Morse graphs, attractor lattices, and certified trapping regions "
      "for planar switching systems"};
  app.require_subcommand(1);

  std::string spec_path, delta_flag, dot_path, svg_path, out_path;
  bool as_json = false, allow_unsafe = false;
  VerifyFlags vf;

  auto* c_validate = app.add_subcommand(
      "validate", "check a system file and report its derived constants");
  c_validate->add_option("spec", spec_path, "system file (JSON)")->required();

  auto* c_analyze = app.add_subcommand(
      "analyze", "state transition graph, Morse sets, attractor lattice");
  c_analyze->add_option("spec", spec_path, "system file (JSON)")->required();
  c_analyze->add_flag("--json", as_json, "emit a JSON report on stdout");
  c_analyze->add_option("--dot", dot_path, "write the Morse graph as DOT");

  auto* c_regions = app.add_subcommand(
      "regions", "build the trapping-region stack for the attractor lattice");
  c_regions->add_option("spec", spec_path, "system file (JSON)")->required();
  c_regions->add_option("--delta", delta_flag, "collar half-width (rational)");
  c_regions->add_flag("--json", as_json, "emit a JSON report on stdout");
  c_regions->add_option("--svg", svg_path, "write the region stack as SVG");
  c_regions->add_flag("--allow-unsafe-delta", allow_unsafe,
                      "accept a collar width at or above the certified bound");

  auto* c_verify = app.add_subcommand(
      "verify", "certify every region against the continuous relaxation");
  c_verify->add_option("spec", spec_path, "system file (JSON)")->required();
  c_verify->add_option("--delta", vf.delta, "collar half-width (rational)");
  auto* o_samples = c_verify->add_option("--samples", vf.samples,
                                         "boundary samples per edge");
  auto* o_traj = c_verify->add_option("--trajectories", vf.trajectories,
                                      "random trajectories per check");
  auto* o_seed = c_verify->add_option("--seed", vf.seed, "base RNG seed");
  auto* o_dt = c_verify->add_option("--dt", vf.dt, "integrator step");
  auto* o_horizon =
      c_verify->add_option("--horizon", vf.horizon, "integration horizon");
  auto* o_perturb = c_verify->add_option(
      "--perturb", vf.perturb,
      "also recheck invariance under a bump of this sup-norm");
  c_verify->add_flag("--json", vf.as_json, "emit a JSON report on stdout");
  c_verify->add_flag("--allow-unsafe-delta", vf.allow_unsafe,
                     "accept a collar width at or above the certified bound");

  auto* c_render =
      app.add_subcommand("render", "draw the region stack as SVG");
  c_render->add_option("spec", spec_path, "system file (JSON)")->required();
  c_render->add_option("-o,--output", out_path, "output SVG path")->required();
  c_render->add_option("--delta", delta_flag, "collar half-width (rational)");
  c_render->add_flag("--allow-unsafe-delta", allow_unsafe,
                     "accept a collar width at or above the certified bound");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_validate->parsed()) return cmd_validate(spec_path);
    if (c_analyze->parsed()) return cmd_analyze(spec_path, as_json, dot_path);
    if (c_regions->parsed())
      return cmd_regions(spec_path, delta_flag, as_json, svg_path,
                         allow_unsafe);
    if (c_verify->parsed()) {
      vf.samples_set = o_samples->count() > 0;
      vf.trajectories_set = o_traj->count() > 0;
      vf.seed_set = o_seed->count() > 0;
      vf.dt_set = o_dt->count() > 0;
      vf.horizon_set = o_horizon->count() > 0;
      vf.perturb_set = o_perturb->count() > 0;
      return cmd_verify(spec_path, vf);
    }
    if (c_render->parsed())
      return cmd_render(spec_path, out_path, delta_flag, allow_unsafe);
  } catch (const Fatal& f) {
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "conley-switch: " << e.what() << "\n";
    return kBadInput;
  }
  return 0;
}
