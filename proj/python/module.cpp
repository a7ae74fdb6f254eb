// Python face of the library: every entry point takes the system as JSON
// text and hands back plain dicts (converted through the json module), so
// the bindings stay a thin shell over the same report blocks the CLI emits.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <variant>

#include "csw/field.hpp"
#include "csw/io.hpp"
#include "csw/order.hpp"
#include "csw/rational.hpp"
#include "csw/stg.hpp"
#include "csw/system.hpp"
#include "csw/tiles.hpp"

namespace py = pybind11;
using namespace csw;

namespace {

[[noreturn]] void raise(const Violation& v) {
  throw py::value_error("[" + v.code + "] " + v.detail);
}

py::object to_py(const Json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

SpecFile parse_or_raise(const std::string& text) {
  auto r = parse_spec(text);
  if (auto* v = std::get_if<Violation>(&r)) raise(*v);
  return std::get<SpecFile>(std::move(r));
}

SwitchingSystem system_or_raise(const SpecFile& spec) {
  auto r = SwitchingSystem::validate(spec.raw);
  if (auto* vs = std::get_if<std::vector<Violation>>(&r)) {
    std::string msg;
    for (const auto& v : *vs) {
      if (!msg.empty()) msg += "; ";
      msg += "[" + v.code + "] " + v.detail;
    }
    throw py::value_error(msg);
  }
  return std::get<SwitchingSystem>(std::move(r));
}

Rat fallback_delta(const SwitchingSystem& sys) {
  Rat w = sys.xline(1) - sys.xline(0);
  for (int k = 0; k <= sys.nx(); ++k)
    w = std::min(w, sys.xline(k + 1) - sys.xline(k));
  for (int k = 0; k <= sys.ny(); ++k)
    w = std::min(w, sys.yline(k + 1) - sys.yline(k));
  return w / 10;
}

Rat choose_delta(const SwitchingSystem& sys, const SpecFile& spec,
                 const std::optional<std::string>& delta) {
  if (delta) {
    auto r = parse_rational(*delta);
    if (!r) throw py::value_error("delta: '" + *delta + "' is not a rational");
    return *r;
  }
  if (spec.settings.delta) return *spec.settings.delta;
  auto cv = derived_constants(sys);
  if (auto* c = std::get_if<SystemConstants>(&cv))
    return rational_below(0.9 * c->delta_star, 12);
  return fallback_delta(sys);
}

struct Built {
  SwitchingSystem sys;
  TransitionGraph stg;
  Rat delta;
  TileComplex tiles;
  RegionLattice rl;

  Built(const SpecFile& spec, const std::optional<std::string>& delta_arg)
      : sys(system_or_raise(spec)),
        stg(build_stg(sys)),
        delta(choose_delta(sys, spec, delta_arg)),
        tiles([&] {
          auto r = build_tiles(sys, delta);
          if (auto* v = std::get_if<Violation>(&r)) raise(*v);
          return std::get<TileComplex>(std::move(r));
        }()),
        rl([&] {
          auto r = region_lattice(stg, tiles);
          if (auto* v = std::get_if<Violation>(&r)) raise(*v);
          return std::get<RegionLattice>(std::move(r));
        }()) {}
};

Json constants_or_null(const SwitchingSystem& sys) {
  auto r = derived_constants(sys);
  if (auto* c = std::get_if<SystemConstants>(&r)) return constants_json(*c);
  return nullptr;
}

py::object do_validate(const std::string& text) {
  Json out;
  auto pr = parse_spec(text);
  if (auto* v = std::get_if<Violation>(&pr)) {
    out["ok"] = false;
    out["violations"] = violations_json({*v});
    return to_py(out);
  }
  const auto& spec = std::get<SpecFile>(pr);
  auto vr = SwitchingSystem::validate(spec.raw);
  if (auto* vs = std::get_if<std::vector<Violation>>(&vr)) {
    out["ok"] = false;
    out["violations"] = violations_json(*vs);
    return to_py(out);
  }
  const auto& sys = std::get<SwitchingSystem>(vr);
  out["ok"] = true;
  out["violations"] = Json::array();
  out["cells"] = {sys.cols(), sys.rows()};
  Json types = Json::array();
  for (int j = 0; j < sys.rows(); ++j) {
    Json row = Json::array();
    for (int i = 0; i < sys.cols(); ++i)
      row.push_back(cell_type_name(sys.cell_type(i, j)));
    types.push_back(row);
  }
  out["types"] = types;
  out["constants"] = constants_or_null(sys);
  if (auto b = assert_no_black(build_stg(sys))) {
    out["ok"] = false;
    out["violations"].push_back(
        {{"code", "BlackVertexPresent"},
         {"detail", face_name(b->vertex) + ": " + b->witness}});
  }
  return to_py(out);
}

py::object do_analyze(const std::string& text) {
  SpecFile spec = parse_or_raise(text);
  SwitchingSystem sys = system_or_raise(spec);
  auto stg = build_stg(sys);
  if (auto b = assert_no_black(stg))
    raise({"BlackVertexPresent", face_name(b->vertex) + ": " + b->witness});
  auto g = Digraph::of(stg);
  auto mg = morse_graph(g);
  auto av = attractor_lattice(g, mg);
  if (auto* v = std::get_if<Violation>(&av)) raise(*v);
  Json out;
  out["schema"] = kSchema;
  out["kind"] = "analysis";
  out["version"] = kToolVersion;
  out["input"] = spec_json(spec);
  out["constants"] = constants_or_null(sys);
  out["system"] = system_json(sys);
  out["stg"] = stg_json(stg);
  out["morse"] = morse_json(stg, mg);
  out["lattice"] = lattice_json(stg, std::get<AttractorLattice>(av));
  return to_py(out);
}

py::object do_regions(const std::string& text,
                      const std::optional<std::string>& delta) {
  SpecFile spec = parse_or_raise(text);
  Built b(spec, delta);
  Json out;
  out["schema"] = kSchema;
  out["kind"] = "regions";
  out["version"] = kToolVersion;
  out["input"] = spec_json(spec);
  out["constants"] = constants_or_null(b.sys);
  out["delta"] = format_rational(b.delta);
  out["warnings"] = b.tiles.delta_warning
                        ? Json::array({*b.tiles.delta_warning})
                        : Json::array();
  out["regions"] = regions_json(b.tiles, b.rl);
  return to_py(out);
}

py::object do_verify(const std::string& text,
                     const std::optional<std::string>& delta,
                     std::optional<int> samples,
                     std::optional<int> trajectories,
                     std::optional<std::uint64_t> seed,
                     std::optional<double> dt, std::optional<double> horizon,
                     std::optional<double> perturb) {
  SpecFile spec = parse_or_raise(text);
  Built b(spec, delta);
  auto fsv = make_fdelta(b.sys, b.delta);
  if (auto* v = std::get_if<Violation>(&fsv)) raise(*v);
  VerifyOptions opt;
  opt.samples_per_edge = samples.value_or(spec.settings.samples_per_edge);
  opt.trajectories = trajectories.value_or(spec.settings.trajectories);
  opt.seed = seed.value_or(spec.settings.seed);
  opt.dt = dt.value_or(spec.settings.dt);
  opt.horizon = horizon.value_or(spec.settings.horizon);
  opt.perturb_eps = perturb;
  auto vr =
      run_verification(std::get<FieldSampler>(fsv), b.tiles, b.rl, opt);
  Json out;
  out["schema"] = kSchema;
  out["kind"] = "verification";
  out["version"] = kToolVersion;
  out["input"] = spec_json(spec);
  out["constants"] = constants_or_null(b.sys);
  out["delta"] = format_rational(b.delta);
  out["verification"] = verification_json(vr);
  return to_py(out);
}

std::string do_render(const std::string& text,
                      const std::optional<std::string>& delta) {
  SpecFile spec = parse_or_raise(text);
  Built b(spec, delta);
  return render_svg(b.tiles, b.rl);
}

std::string do_dot(const std::string& text) {
  SpecFile spec = parse_or_raise(text);
  SwitchingSystem sys = system_or_raise(spec);
  auto stg = build_stg(sys);
  auto mg = morse_graph(Digraph::of(stg));
  return morse_graph_dot(stg, mg);
}

}  // namespace

PYBIND11_MODULE(conley_switch, m) {
  m.doc() =
      "Morse graphs, attractor lattices, and certified trapping regions "
      "for planar switching systems";
  m.def("version", [] { return std::string(kToolVersion); });
  m.def("validate", &do_validate, py::arg("text"),
        "Validate a system description; returns {ok, violations, cells, "
        "types, constants}.");
  m.def("analyze", &do_analyze, py::arg("text"),
        "Transition graph, Morse decomposition, and attractor lattice.");
  m.def("regions", &do_regions, py::arg("text"),
        py::arg("delta") = std::nullopt,
        "Trapping-region stack at the given (or default) collar width.");
  m.def("verify", &do_verify, py::arg("text"), py::arg("delta") = std::nullopt,
        py::arg("samples") = std::nullopt,
        py::arg("trajectories") = std::nullopt, py::arg("seed") = std::nullopt,
        py::arg("dt") = std::nullopt, py::arg("horizon") = std::nullopt,
        py::arg("perturb") = std::nullopt,
        "Certify every region: transversality, chip bounds, invariance, "
        "localization.");
  m.def("render_svg", &do_render, py::arg("text"),
        py::arg("delta") = std::nullopt, "Region stack as an SVG string.");
  m.def("morse_dot", &do_dot, py::arg("text"),
        "Morse graph in DOT form.");
}
