#include "csw/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace csw {

namespace {

// Internal carrier for structural spec-file problems; converted to a
// ParseError Violation at the boundary.
struct BadSpec {
  std::string msg;
};

std::string line_col(const std::string& text, std::size_t byte) {
  int line = 1;
  std::size_t last = 0;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k)
    if (text[k] == '\n') {
      ++line;
      last = k + 1;
    }
  std::size_t col = (byte > text.size() ? text.size() : byte) - last + 1;
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

void reject_unknown(const Json& obj, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw BadSpec{path + ": unknown key \"" + item.key() + "\""};
  }
}

Rat want_rational(const Json& v, const std::string& path) {
  if (!v.is_string())
    throw BadSpec{path + ": expected a rational as a decimal string"};
  auto r = parse_rational(v.get<std::string>());
  if (!r)
    throw BadSpec{path + ": not a rational: \"" + v.get<std::string>() + "\""};
  return *r;
}

long long want_int(const Json& v, const std::string& path) {
  if (!v.is_number_integer())
    throw BadSpec{path + ": expected an integer"};
  return v.get<long long>();
}

double want_pos_number(const Json& v, const std::string& path) {
  if (!v.is_number())
    throw BadSpec{path + ": expected a number"};
  double d = v.get<double>();
  if (!(d > 0)) throw BadSpec{path + ": must be positive"};
  return d;
}

std::array<Rat, 2> want_pair(const Json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2)
    throw BadSpec{path + ": expected an array of two rational strings"};
  return {want_rational(v[0], path + "[0]"), want_rational(v[1], path + "[1]")};
}

std::vector<Threshold> want_thresholds(const Json& v, const std::string& path) {
  if (!v.is_array()) throw BadSpec{path + ": expected an array"};
  std::vector<Threshold> out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    std::string at = path + "[" + std::to_string(k) + "]";
    const Json& t = v[k];
    if (!t.is_object()) throw BadSpec{at + ": expected {value, tag}"};
    reject_unknown(t, at, {"value", "tag"});
    if (!t.contains("value") || !t.contains("tag"))
      throw BadSpec{at + ": expected {value, tag}"};
    long long tag = want_int(t["tag"], at + ".tag");
    if (tag != 1 && tag != 2) throw BadSpec{at + ".tag: must be 1 or 2"};
    out.push_back({want_rational(t["value"], at + ".value"), (int)tag});
  }
  return out;
}

// "i,j" with both parts plain nonnegative integers.
std::optional<std::pair<int, int>> cell_key(const std::string& s) {
  auto comma = s.find(',');
  if (comma == std::string::npos) return std::nullopt;
  auto digits = [](const std::string& p) {
    return !p.empty() && p.find_first_not_of("0123456789") == std::string::npos;
  };
  std::string a = s.substr(0, comma), b = s.substr(comma + 1);
  if (!digits(a) || !digits(b)) return std::nullopt;
  if (a.size() > 4 || b.size() > 4) return std::nullopt;
  return std::pair<int, int>{std::stoi(a), std::stoi(b)};
}

}  // namespace

std::variant<SpecFile, Violation> parse_spec(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::string why = e.what();
    // Keep only the human part of the library message.
    auto cut = why.find("] ");
    if (cut != std::string::npos) why = why.substr(cut + 2);
    return Violation{"ParseError", line_col(text, e.byte) + ": " + why};
  }

  try {
    if (!j.is_object()) throw BadSpec{"$: expected an object"};
    reject_unknown(j, "$",
                   {"schema", "gamma", "xi", "eta", "lambda", "bbox", "delta",
                    "seed", "dt", "horizon", "trajectories", "samples"});
    if (!j.contains("schema") || !j["schema"].is_string() ||
        j["schema"].get<std::string>() != kSchema)
      throw BadSpec{std::string("$.schema: expected \"") + kSchema + "\""};
    if (!j.contains("gamma")) throw BadSpec{"$.gamma: missing"};
    if (!j.contains("lambda")) throw BadSpec{"$.lambda: missing"};

    SpecFile out;
    out.raw.gamma = want_pair(j["gamma"], "$.gamma");
    if (j.contains("xi")) out.raw.xi = want_thresholds(j["xi"], "$.xi");
    if (j.contains("eta")) out.raw.eta = want_thresholds(j["eta"], "$.eta");

    const Json& lam = j["lambda"];
    if (!lam.is_object())
      throw BadSpec{"$.lambda: expected an object keyed \"i,j\""};
    for (const auto& item : lam.items()) {
      auto ij = cell_key(item.key());
      if (!ij)
        throw BadSpec{"$.lambda: bad cell key \"" + item.key() +
                      "\" (want \"i,j\")"};
      out.raw.lambda[*ij] =
          want_pair(item.value(), "$.lambda[\"" + item.key() + "\"]");
    }

    if (j.contains("bbox")) out.raw.bbox = want_pair(j["bbox"], "$.bbox");
    if (j.contains("delta")) {
      Rat d = want_rational(j["delta"], "$.delta");
      if (!(d > 0)) throw BadSpec{"$.delta: must be positive"};
      out.settings.delta = d;
    }
    if (j.contains("seed")) {
      long long s = want_int(j["seed"], "$.seed");
      if (s < 0) throw BadSpec{"$.seed: must be nonnegative"};
      out.settings.seed = (std::uint64_t)s;
    }
    if (j.contains("dt")) out.settings.dt = want_pos_number(j["dt"], "$.dt");
    if (j.contains("horizon"))
      out.settings.horizon = want_pos_number(j["horizon"], "$.horizon");
    if (j.contains("trajectories")) {
      long long n = want_int(j["trajectories"], "$.trajectories");
      if (n < 1) throw BadSpec{"$.trajectories: must be at least 1"};
      out.settings.trajectories = (int)n;
    }
    if (j.contains("samples")) {
      long long n = want_int(j["samples"], "$.samples");
      if (n < 2) throw BadSpec{"$.samples: must be at least 2"};
      out.settings.samples_per_edge = (int)n;
    }
    return out;
  } catch (const BadSpec& b) {
    return Violation{"ParseError", b.msg};
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

std::variant<SpecFile, Violation> load_spec(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    return Violation{"ParseError", e.what()};
  }
  return parse_spec(text);
}

Json spec_json(const SpecFile& spec) {
  Json j;
  j["schema"] = kSchema;
  j["gamma"] = {format_rational(spec.raw.gamma[0]),
                format_rational(spec.raw.gamma[1])};
  auto thr = [](const std::vector<Threshold>& ts) {
    Json a = Json::array();
    for (const auto& t : ts)
      a.push_back({{"value", format_rational(t.value)}, {"tag", t.tag}});
    return a;
  };
  j["xi"] = thr(spec.raw.xi);
  j["eta"] = thr(spec.raw.eta);
  Json lam = Json::object();
  for (const auto& [ij, v] : spec.raw.lambda)
    lam[std::to_string(ij.first) + "," + std::to_string(ij.second)] = {
        format_rational(v[0]), format_rational(v[1])};
  j["lambda"] = lam;
  if (spec.raw.bbox)
    j["bbox"] = {format_rational((*spec.raw.bbox)[0]),
                 format_rational((*spec.raw.bbox)[1])};
  if (spec.settings.delta)
    j["delta"] = format_rational(*spec.settings.delta);
  j["seed"] = spec.settings.seed;
  j["dt"] = spec.settings.dt;
  j["horizon"] = spec.settings.horizon;
  j["trajectories"] = spec.settings.trajectories;
  j["samples"] = spec.settings.samples_per_edge;
  return j;
}

std::string dump_spec(const SpecFile& spec) {
  return spec_json(spec).dump(2) + "\n";
}

std::string morse_graph_dot(const TransitionGraph& stg, const MorseGraph& mg) {
  std::ostringstream os;
  os << "digraph morse_graph {\n"
     << "  rankdir=TB;\n"
     << "  node [shape=box, fontname=\"Courier\"];\n";
  for (std::size_t k = 0; k < mg.sets.size(); ++k) {
    os << "  m" << k << " [label=\"M" << k;
    for (int v : mg.sets[k]) os << "\\n" << face_name(stg.verts[v]);
    os << "\"];\n";
  }
  // Flow direction: from the covering (higher) set down to the one it covers.
  for (const auto& [lo, hi] : mg.order.covers)
    os << "  m" << hi << " -> m" << lo << ";\n";
  os << "}\n";
  return os.str();
}

Json violations_json(const std::vector<Violation>& vs) {
  Json a = Json::array();
  for (const auto& v : vs) a.push_back({{"code", v.code}, {"detail", v.detail}});
  return a;
}

Json constants_json(const SystemConstants& c) {
  Json j;
  j["mu"] = format_rational(c.mu);
  j["half_width"] = format_rational(c.half_width);
  j["rho"] = format_rational(c.rho);
  j["gamma_bar"] = format_rational(c.gamma_bar);
  j["delta_star"] = c.delta_star;
  j["delta_star_linear"] = c.delta_star_linear;
  j["delta_star_sqrt"] = c.delta_star_sqrt;
  return j;
}

Json system_json(const SwitchingSystem& sys) {
  Json j;
  j["gamma"] = {format_rational(sys.gamma()[0]),
                format_rational(sys.gamma()[1])};
  auto thr = [](const std::vector<Threshold>& ts) {
    Json a = Json::array();
    for (const auto& t : ts)
      a.push_back({{"value", format_rational(t.value)}, {"tag", t.tag}});
    return a;
  };
  j["xi"] = thr(sys.xi());
  j["eta"] = thr(sys.eta());
  j["bbox"] = {format_rational(sys.bbox()[0]), format_rational(sys.bbox()[1])};
  j["bbox_explicit"] = sys.bbox_explicit();
  Json cells = Json::array();
  for (int jj = 0; jj < sys.rows(); ++jj)
    for (int i = 0; i < sys.cols(); ++i) {
      auto f = sys.focal(i, jj);
      cells.push_back({{"i", i},
                       {"j", jj},
                       {"lambda",
                        {format_rational(sys.lambda(i, jj)[0]),
                         format_rational(sys.lambda(i, jj)[1])}},
                       {"focal", {format_rational(f[0]), format_rational(f[1])}},
                       {"type", cell_type_name(sys.cell_type(i, jj))}});
    }
  j["cells"] = cells;
  return j;
}

Json stg_json(const TransitionGraph& stg) {
  Json j;
  Json vs = Json::array();
  for (std::size_t k = 0; k < stg.verts.size(); ++k)
    vs.push_back({{"id", k},
                  {"face", face_name(stg.verts[k])},
                  {"color", vertex_color_name(stg.color[k])}});
  j["vertices"] = vs;
  Json es = Json::array();
  std::size_t m = 0;
  for (std::size_t v = 0; v < stg.out.size(); ++v)
    for (int w : stg.out[v]) {
      es.push_back({v, (std::size_t)w});
      ++m;
    }
  j["edges"] = es;
  j["vertex_count"] = stg.verts.size();
  j["edge_count"] = m;
  return j;
}

Json morse_json(const TransitionGraph& stg, const MorseGraph& mg) {
  Json j;
  Json sets = Json::array();
  for (std::size_t k = 0; k < mg.sets.size(); ++k) {
    Json faces = Json::array();
    for (int v : mg.sets[k]) faces.push_back(face_name(stg.verts[v]));
    sets.push_back({{"index", k}, {"faces", faces}});
  }
  j["sets"] = sets;
  Json covers = Json::array();
  for (const auto& [lo, hi] : mg.order.covers) covers.push_back({lo, hi});
  j["covers"] = covers;
  return j;
}

Json lattice_json(const TransitionGraph& stg, const AttractorLattice& att) {
  Json j;
  Json as = Json::array();
  for (std::size_t k = 0; k < att.attractors.size(); ++k) {
    Json faces = Json::array();
    const Bits& b = att.attractors[k];
    for (std::size_t v = b.find_first(); v != Bits::npos; v = b.find_next(v))
      faces.push_back(face_name(stg.verts[v]));
    Json down = Json::array();
    for (int m = 0; m < 64; ++m)
      if (att.downsets[k] >> m & 1) down.push_back(m);
    as.push_back({{"index", k},
                  {"vertex_count", b.count()},
                  {"faces", faces},
                  {"morse_down_set", down}});
  }
  j["attractors"] = as;
  Json covers = Json::array();
  for (const auto& [lo, hi] : att.lat.cover_pairs()) covers.push_back({lo, hi});
  j["covers"] = covers;
  j["bottom"] = att.lat.bottom;
  j["top"] = att.lat.top;
  auto ji = join_irreducibles(att.lat);
  if (auto* irr = std::get_if<JoinIrreducibles>(&ji)) {
    j["join_irreducibles"] = {{"elements", irr->elements},
                              {"pred", irr->pred}};
  } else {
    j["join_irreducibles"] = {
        {"error", violations_json({std::get<Violation>(ji)})[0]}};
  }
  return j;
}

namespace {

Json rect_json(const Rect& r) {
  return Json{{"x", {format_rational(r.x0), format_rational(r.x1)}},
              {"y", {format_rational(r.y0), format_rational(r.y1)}}};
}

Json point_json(const Pt& p) {
  return Json{format_rational(p.x), format_rational(p.y)};
}

Json element_json(const TileComplex& tiles, const Element& e) {
  Json j;
  j["name"] = element_name(e);
  switch (e.kind) {
    case Element::Kind::Cell2:
      j["rect"] = rect_json(tiles.cell_tile(e.ci, e.cj));
      break;
    case Element::Kind::Wall1:
      j["rect"] = rect_json(tiles.wall_tile(e.wall));
      break;
    case Element::Kind::Point0:
      j["rect"] = rect_json(tiles.point_tile(e.pi, e.pj));
      break;
    case Element::Kind::ChipNarrow:
    case Element::Kind::ChipWide: {
      auto c = make_chip(tiles, e.kind == Element::Kind::ChipWide, e.ci, e.cj,
                         e.wall, e.pi, e.pj);
      if (auto* chip = std::get_if<Chip>(&c)) {
        Json vs = Json::array();
        for (const auto& p : chip->verts) vs.push_back(point_json(p));
        j["verts"] = vs;
      }
      break;
    }
  }
  return j;
}

}  // namespace

Json regions_json(const TileComplex& tiles, const RegionLattice& rl) {
  Json j;
  j["delta"] = format_rational(tiles.delta());
  Json rs = Json::array();
  for (std::size_t k = 0; k < rl.regions.size(); ++k) {
    const Region& r = rl.regions[k];
    Json inv = Json::array();
    for (const auto& e : r.inventory) inv.push_back(element_json(tiles, e));
    Json loops = Json::array();
    for (const auto& loop : r.boundary) {
      Json pts = Json::array();
      Json ext = Json::array();
      for (const auto& e : loop.edges) {
        pts.push_back(point_json(e.a));
        ext.push_back(e.exterior);
      }
      loops.push_back({{"points", pts}, {"exterior", ext}});
    }
    rs.push_back({{"index", k},
                  {"attractor_vertex_count", rl.att.attractors[k].count()},
                  {"inventory", inv},
                  {"boundary", loops}});
  }
  j["regions"] = rs;
  return j;
}

Json verification_json(const VerificationReport& vr) {
  Json j;
  j["delta"] = vr.delta;
  j["samples_per_edge"] = vr.samples_per_edge;
  j["trajectories"] = vr.trajectories;
  j["dt"] = vr.dt;
  j["horizon"] = vr.horizon;
  j["seed"] = vr.seed;

  auto viol = [](const std::optional<Violation>& v) -> Json {
    if (!v) return nullptr;
    return Json{{"code", v->code}, {"detail", v->detail}};
  };

  Json regions = Json::array();
  for (const auto& r : vr.regions) {
    Json t;
    t["samples_per_edge"] = r.transversality.samples_per_edge;
    if (r.transversality.worst_margin)
      t["worst_margin"] = *r.transversality.worst_margin;
    else
      t["worst_margin"] = nullptr;
    Json edges = Json::array();
    for (const auto& e : r.transversality.edges)
      edges.push_back({{"loop", e.loop},
                       {"edge", e.edge},
                       {"worst", e.worst},
                       {"at", {e.at[0], e.at[1]}}});
    t["edges"] = edges;
    t["pass"] = r.transversality.pass;
    t["failure"] = viol(r.transversality.failure);

    Json chips = Json::array();
    for (const auto& c : r.chips)
      chips.push_back({{"wide", c.wide},
                       {"K", {c.K0, c.K1}},
                       {"L", {c.L0, c.L1}},
                       {"M", c.M},
                       {"delta_bound", c.delta_bound},
                       {"delta_used", c.delta_used},
                       {"min_T", c.min_T},
                       {"pass", c.pass}});

    Json inv;
    inv["runs"] = r.invariance.runs;
    inv["escapes"] = r.invariance.escapes;
    inv["near_misses"] = r.invariance.near_misses;
    inv["max_excursion"] = r.invariance.max_excursion;
    inv["pass"] = r.invariance.pass;
    inv["failure"] = viol(r.invariance.failure);

    Json entry;
    entry["lattice_index"] = r.lattice_index;
    entry["transversality"] = t;
    entry["chips"] = chips;
    entry["invariance"] = inv;
    if (r.perturbation)
      entry["perturbation"] = {
          {"epsilon", r.perturbation->epsilon},
          {"pass_at_epsilon", r.perturbation->pass_at_epsilon},
          {"largest_passing", r.perturbation->largest_passing},
          {"seed", r.perturbation->seed}};
    regions.push_back(entry);
  }
  j["regions"] = regions;

  Json loc;
  Json nodes = Json::array();
  for (const auto& n : vr.localization.nodes)
    nodes.push_back({{"lattice_index", n.lattice_index},
                     {"runs", n.runs},
                     {"stayed", n.stayed},
                     {"descended", n.descended},
                     {"lost", n.lost}});
  loc["nodes"] = nodes;
  loc["order_violations"] = vr.localization.order_violations;
  loc["complement_runs"] = vr.localization.complement_runs;
  loc["complement_descents"] = vr.localization.complement_descents;
  loc["top_complement_area"] = vr.localization.top_complement_area;
  loc["pass"] = vr.localization.pass;
  loc["failure"] = viol(vr.localization.failure);
  j["localization"] = loc;

  j["pass"] = vr.pass;
  return j;
}

namespace {

std::string fixed12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12f", v);
  std::string s = buf;
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

// Exact decimal when the denominator allows one, else 12 fixed digits
// (still far inside the 1e-9 agreement contract with the JSON output).
std::string svg_num(const Rat& r) {
  std::string s = format_rational(r);
  if (s.find('/') == std::string::npos) return s;
  return fixed12(to_double(r));
}

const char* kPalette[] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759",
                          "#b07aa1", "#76b7b2", "#edc949", "#ff9da7",
                          "#9c755f", "#bab0ab"};

}  // namespace

std::string render_svg(const TileComplex& tiles, const RegionLattice& rl) {
  const auto& sys = tiles.system();
  double bx = to_double(sys.bbox()[0]), by = to_double(sys.bbox()[1]);
  double scale = 720.0 / std::max(bx, by);
  double margin = 40.0;
  int W = (int)std::ceil(2 * margin + scale * bx);
  int H = (int)std::ceil(2 * margin + scale * by);

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
     << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"#ffffff\"/>\n";
  os << "<text x=\"8\" y=\"16\" font-family=\"sans-serif\" font-size=\"12\">"
     << "regions at delta = " << format_rational(tiles.delta()) << "</text>\n";

  // All geometry below is in model coordinates; this one transform maps
  // them to the canvas (y flipped so the origin sits bottom-left).
  char tf[128];
  std::snprintf(tf, sizeof tf,
                "translate(%.6f,%.6f) scale(%.9f,%.9f)", margin, H - margin,
                scale, -scale);
  os << "<g transform=\"" << tf << "\">\n";

  std::string grid_w = fixed12(1.0 / scale), bold_w = fixed12(2.0 / scale);

  os << "  <g id=\"grid\" stroke=\"#b0b0b0\" stroke-width=\"" << grid_w
     << "\">\n";
  for (int k = 0; k <= sys.nx() + 1; ++k)
    os << "    <line x1=\"" << svg_num(sys.xline(k)) << "\" y1=\"0\" x2=\""
       << svg_num(sys.xline(k)) << "\" y2=\"" << svg_num(sys.bbox()[1])
       << "\"/>\n";
  for (int k = 0; k <= sys.ny() + 1; ++k)
    os << "    <line x1=\"0\" y1=\"" << svg_num(sys.yline(k)) << "\" x2=\""
       << svg_num(sys.bbox()[0]) << "\" y2=\"" << svg_num(sys.yline(k))
       << "\"/>\n";
  os << "  </g>\n";

  // One layer per lattice element, drawn top-down so the small (deep)
  // regions end up painted over the large ones.
  for (int k = (int)rl.regions.size() - 1; k >= 0; --k) {
    const Region& r = rl.regions[k];
    const char* color = kPalette[k % 10];
    os << "  <g id=\"region-" << k << "\" class=\"region\">\n";
    os << "    <title>region " << k << ": " << r.inventory.size()
       << " elements</title>\n";
    for (const auto& e : r.inventory) {
      if (e.kind == Element::Kind::ChipNarrow ||
          e.kind == Element::Kind::ChipWide) {
        auto c = make_chip(tiles, e.kind == Element::Kind::ChipWide, e.ci,
                           e.cj, e.wall, e.pi, e.pj);
        if (auto* chip = std::get_if<Chip>(&c)) {
          os << "    <polygon points=\"";
          for (const auto& p : chip->verts)
            os << svg_num(p.x) << "," << svg_num(p.y) << " ";
          os << "\" fill=\"" << color << "\" fill-opacity=\"0.55\"/>\n";
        }
        continue;
      }
      Rect rect = e.kind == Element::Kind::Cell2 ? tiles.cell_tile(e.ci, e.cj)
                  : e.kind == Element::Kind::Wall1 ? tiles.wall_tile(e.wall)
                                                   : tiles.point_tile(e.pi, e.pj);
      os << "    <rect x=\"" << svg_num(rect.x0) << "\" y=\""
         << svg_num(rect.y0) << "\" width=\"" << svg_num(rect.x1 - rect.x0)
         << "\" height=\"" << svg_num(rect.y1 - rect.y0) << "\" fill=\""
         << color << "\" fill-opacity=\"0.35\"/>\n";
    }
    for (const auto& loop : r.boundary) {
      if (loop.edges.empty()) continue;
      os << "    <path d=\"";
      for (std::size_t e = 0; e < loop.edges.size(); ++e)
        os << (e == 0 ? "M " : "L ") << svg_num(loop.edges[e].a.x) << " "
           << svg_num(loop.edges[e].a.y) << " ";
      os << "Z\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
         << bold_w << "\"/>\n";
    }
    os << "  </g>\n";
  }

  os << "</g>\n</svg>\n";
  return os.str();
}

}  // namespace csw
