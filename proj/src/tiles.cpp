#include "csw/tiles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace csw {

namespace {

std::string cellpair(int i, int j) {
  return "(" + std::to_string(i) + "," + std::to_string(j) + ")";
}

}  // namespace

std::string element_name(const Element& e) {
  switch (e.kind) {
    case Element::Kind::Cell2: return "G2" + cellpair(e.ci, e.cj);
    case Element::Kind::Wall1: return "G1(" + face_name(e.wall) + ")";
    case Element::Kind::Point0: return "G0" + cellpair(e.pi, e.pj);
    case Element::Kind::ChipNarrow:
    case Element::Kind::ChipWide:
      return std::string(e.kind == Element::Kind::ChipWide ? "Cw(" : "Cn(") +
             cellpair(e.ci, e.cj) + ";" + face_name(e.wall) + ";" +
             cellpair(e.pi, e.pj) + ")";
  }
  return "?";
}

Rect TileComplex::cell_tile(int i, int j) const {
  const auto& s = *sys_;
  Rect r;
  r.open_x0 = i == 0;
  r.open_y0 = j == 0;
  r.x0 = i == 0 ? Rat(0) : s.xline(i) + delta_;
  r.x1 = i == s.nx() ? s.bbox()[0] : s.xline(i + 1) - delta_;
  r.y0 = j == 0 ? Rat(0) : s.yline(j) + delta_;
  r.y1 = j == s.ny() ? s.bbox()[1] : s.yline(j + 1) - delta_;
  return r;
}

bool TileComplex::wall_has_tile(const FaceId& v) const {
  if (v.kind == FaceId::Kind::WallX)
    return v.i >= 1 && v.i <= sys_->nx() && v.j >= 0 && v.j <= sys_->ny();
  if (v.kind == FaceId::Kind::WallY)
    return v.j >= 1 && v.j <= sys_->ny() && v.i >= 0 && v.i <= sys_->nx();
  return false;
}

Rect TileComplex::wall_tile(const FaceId& v) const {
  const auto& s = *sys_;
  Rect r;
  if (v.kind == FaceId::Kind::WallX) {
    r.x0 = s.xline(v.i) - delta_;
    r.x1 = s.xline(v.i) + delta_;
    r.open_y0 = v.j == 0;
    r.y0 = v.j == 0 ? Rat(0) : s.yline(v.j) + delta_;
    r.y1 = v.j == s.ny() ? s.bbox()[1] : s.yline(v.j + 1) - delta_;
  } else {
    r.y0 = s.yline(v.j) - delta_;
    r.y1 = s.yline(v.j) + delta_;
    r.open_x0 = v.i == 0;
    r.x0 = v.i == 0 ? Rat(0) : s.xline(v.i) + delta_;
    r.x1 = v.i == s.nx() ? s.bbox()[0] : s.xline(v.i + 1) - delta_;
  }
  return r;
}

Rect TileComplex::point_tile(int i, int j) const {
  const auto& s = *sys_;
  return {s.xline(i) - delta_, s.xline(i) + delta_, s.yline(j) - delta_,
          s.yline(j) + delta_};
}

std::vector<FaceId> TileComplex::interior_walls() const {
  std::vector<FaceId> out;
  for (int i = 1; i <= sys_->nx(); ++i)
    for (int j = 0; j <= sys_->ny(); ++j)
      out.push_back({FaceId::Kind::WallX, i, j});
  for (int i = 0; i <= sys_->nx(); ++i)
    for (int j = 1; j <= sys_->ny(); ++j)
      out.push_back({FaceId::Kind::WallY, i, j});
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<int, int>> TileComplex::interior_grid_points() const {
  std::vector<std::pair<int, int>> out;
  for (int i = 1; i <= sys_->nx(); ++i)
    for (int j = 1; j <= sys_->ny(); ++j) out.emplace_back(i, j);
  return out;
}

std::variant<TileComplex, Violation> build_tiles(const SwitchingSystem& sys,
                                                 const Rat& delta) {
  if (!(delta > 0))
    return Violation{"ParseError", "delta must be positive, got " +
                                       format_rational(delta)};

  // Half the minimal bounded cell extent, the hard geometric ceiling.
  std::optional<Rat> lam;
  auto feed = [&](const Rat& width) {
    Rat half = width / 2;
    if (!lam || half < *lam) lam = half;
  };
  for (int i = 0; i < sys.nx(); ++i) feed(sys.xline(i + 1) - sys.xline(i));
  for (int j = 0; j < sys.ny(); ++j) feed(sys.yline(j + 1) - sys.yline(j));

  if (lam && !(delta < *lam))
    return Violation{"DeltaTooLarge",
                     "delta = " + format_rational(delta) +
                         " must stay below half the minimal cell width " +
                         format_rational(*lam)};

  TileComplex tiles(&sys, delta, lam);
  auto cons = derived_constants(sys);
  if (auto* c = std::get_if<SystemConstants>(&cons)) {
    if (!(to_double(delta) < c->delta_star))
      tiles.delta_warning = "delta exceeds the certified bound delta* = " +
                            std::to_string(c->delta_star) +
                            "; boundary estimates are not guaranteed";
  } else if (lam) {
    tiles.delta_warning = "delta* unavailable (" +
                          std::get<Violation>(cons).code +
                          "); accepted delta below the geometric ceiling";
  }
  return tiles;
}

std::variant<Chip, Violation> make_chip(const TileComplex& tiles, bool wide,
                                        int ci, int cj, const FaceId& wall,
                                        int pi, int pj) {
  const auto& sys = tiles.system();
  auto fail = [&](const std::string& why) {
    return Violation{"InvalidIncidence", why};
  };
  if (ci < 0 || ci > sys.nx() || cj < 0 || cj > sys.ny())
    return fail("cell " + cellpair(ci, cj) + " out of range");
  if (pi < 1 || pi > sys.nx() || pj < 1 || pj > sys.ny())
    return fail("grid point " + cellpair(pi, pj) + " is not interior");
  if (!tiles.half_width()) return fail("no bounded cells: chips undefined");

  // The wall must bound the cell and have the grid point as an endpoint.
  Rat dx, dy, nx, ny;  // wall direction away from pi, normal toward the cell
  if (wall.kind == FaceId::Kind::WallX) {
    if (wall.j != cj || (wall.i != ci && wall.i != ci + 1))
      return fail(face_name(wall) + " is not a face of cell " +
                  cellpair(ci, cj));
    if (pi != wall.i || (pj != wall.j && pj != wall.j + 1))
      return fail(cellpair(pi, pj) + " is not an endpoint of " +
                  face_name(wall));
    dx = 0;
    dy = pj == wall.j ? 1 : -1;
    nx = ci == wall.i ? 1 : -1;
    ny = 0;
  } else if (wall.kind == FaceId::Kind::WallY) {
    if (wall.i != ci || (wall.j != cj && wall.j != cj + 1))
      return fail(face_name(wall) + " is not a face of cell " +
                  cellpair(ci, cj));
    if (pj != wall.j || (pi != wall.i && pi != wall.i + 1))
      return fail(cellpair(pi, pj) + " is not an endpoint of " +
                  face_name(wall));
    dy = 0;
    dx = pi == wall.i ? 1 : -1;
    ny = cj == wall.j ? 1 : -1;
    nx = 0;
  } else {
    return fail("chips attach to walls only");
  }

  const Rat& d = tiles.delta();
  const Rat& lam = *tiles.half_width();
  Rat px = sys.xline(pi), py = sys.yline(pj);
  auto at = [&](const Rat& u, const Rat& v) {
    return Pt{px + u * dx + v * nx, py + u * dy + v * ny};
  };
  Chip c;
  c.wide = wide;
  c.ci = ci;
  c.cj = cj;
  c.wall = wall;
  c.pi = pi;
  c.pj = pj;
  c.verts = {at(d, wide ? -d : Rat(0)), at(d, d), at(lam, d)};
  return c;
}

ElementaryDomain elementary_domain(const TileComplex& tiles, int i, int j) {
  const auto& s = tiles.system();
  const Rat& d = tiles.delta();
  ElementaryDomain e;
  e.i = i;
  e.j = j;
  e.x0 = (i == 0 ? Rat(0) : s.xline(i - 1)) + d;
  e.x1 = i >= s.nx() ? s.bbox()[0] : s.xline(i + 2) - d;
  e.y0 = (j == 0 ? Rat(0) : s.yline(j - 1)) + d;
  e.y1 = j >= s.ny() ? s.bbox()[1] : s.yline(j + 2) - d;
  return e;
}

std::vector<std::vector<Pt>> inventory_polygons(const TileComplex& tiles,
                                                const std::set<Element>& inv) {
  std::vector<std::vector<Pt>> polys;
  auto push_rect = [&](const Rect& r) {
    polys.push_back(
        {{r.x0, r.y0}, {r.x1, r.y0}, {r.x1, r.y1}, {r.x0, r.y1}});
  };
  for (const auto& e : inv) {
    switch (e.kind) {
      case Element::Kind::Cell2: push_rect(tiles.cell_tile(e.ci, e.cj)); break;
      case Element::Kind::Wall1: push_rect(tiles.wall_tile(e.wall)); break;
      case Element::Kind::Point0:
        push_rect(tiles.point_tile(e.pi, e.pj));
        break;
      case Element::Kind::ChipNarrow:
      case Element::Kind::ChipWide: {
        auto c = std::get<Chip>(make_chip(tiles,
                                          e.kind == Element::Kind::ChipWide,
                                          e.ci, e.cj, e.wall, e.pi, e.pj));
        std::vector<Pt> tri(c.verts.begin(), c.verts.end());
        Rat area2 = (tri[1].x - tri[0].x) * (tri[2].y - tri[0].y) -
                    (tri[2].x - tri[0].x) * (tri[1].y - tri[0].y);
        if (area2 < 0) std::swap(tri[1], tri[2]);
        polys.push_back(std::move(tri));
        break;
      }
    }
  }
  return polys;
}

namespace {

// A line supporting a segment: vertical x=c, else y = m*x + c.
struct LineId {
  int kind;  // 0 vertical, 1 otherwise
  Rat m, c;
  std::strong_ordering operator<=>(const LineId&) const = default;
};

LineId line_of(const Pt& a, const Pt& b) {
  if (a.x == b.x) return {0, Rat(0), a.x};
  Rat m = (b.y - a.y) / (b.x - a.x);
  return {1, m, a.y - m * a.x};
}

Rat param_of(const LineId& l, const Pt& p) { return l.kind == 0 ? p.y : p.x; }

Pt point_at(const LineId& l, const Rat& t) {
  if (l.kind == 0) return {l.c, t};
  return {t, l.m * t + l.c};
}

struct DirSeg {
  Pt a, b;
};

double angle_of(const Pt& a, const Pt& b) {
  return std::atan2(to_double(b.y - a.y), to_double(b.x - a.x));
}

}  // namespace

std::variant<std::vector<BoundaryLoop>, Violation> region_boundary(
    const TileComplex& tiles, const std::set<Element>& inv) {
  // Cancel coincident edges with opposite sides of the interior; what is
  // left, taken with interior on the left, is the union boundary.
  std::map<LineId, std::vector<std::tuple<Rat, Rat, int>>> lines;
  for (const auto& poly : inventory_polygons(tiles, inv)) {
    size_t n = poly.size();
    for (size_t k = 0; k < n; ++k) {
      const Pt& a = poly[k];
      const Pt& b = poly[(k + 1) % n];
      LineId l = line_of(a, b);
      Rat s = param_of(l, a), t = param_of(l, b);
      if (s < t)
        lines[l].emplace_back(s, t, +1);
      else
        lines[l].emplace_back(t, s, -1);
    }
  }

  std::vector<DirSeg> segs;
  for (auto& [line, spans] : lines) {
    std::vector<std::pair<Rat, int>> events;
    for (auto& [lo, hi, sgn] : spans) {
      events.emplace_back(lo, sgn);
      events.emplace_back(hi, -sgn);
    }
    std::sort(events.begin(), events.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    int depth = 0;
    for (size_t k = 0; k < events.size();) {
      size_t k2 = k;
      while (k2 < events.size() && events[k2].first == events[k].first)
        depth += events[k2++].second;
      if (k2 == events.size()) break;
      const Rat& lo = events[k].first;
      const Rat& hi = events[k2].first;
      if (depth > 1 || depth < -1)
        return Violation{"DegenerateGeometry",
                         "inventory overlaps along a boundary line"};
      if (depth == 1) segs.push_back({point_at(line, lo), point_at(line, hi)});
      if (depth == -1) segs.push_back({point_at(line, hi), point_at(line, lo)});
      k = k2;
    }
  }

  // Stitch directed segments into loops; at a pinch vertex take the
  // sharpest left turn so every loop stays simple.
  std::map<Pt, std::vector<size_t>> by_start;
  for (size_t k = 0; k < segs.size(); ++k) by_start[segs[k].a].push_back(k);
  std::vector<bool> used(segs.size(), false);

  std::vector<BoundaryLoop> loops;
  const auto& bb = tiles.system().bbox();
  for (size_t start = 0; start < segs.size(); ++start) {
    if (used[start]) continue;
    std::vector<DirSeg> path;
    size_t cur = start;
    while (true) {
      used[cur] = true;
      path.push_back(segs[cur]);
      if (segs[cur].b == segs[start].a) break;
      auto it = by_start.find(segs[cur].b);
      if (it == by_start.end())
        return Violation{"DegenerateGeometry",
                         "open boundary chain: inventory is inconsistent"};
      double in_dir = angle_of(segs[cur].a, segs[cur].b);
      size_t best = segs.size();
      double best_turn = -10;
      for (size_t cand : it->second) {
        if (used[cand]) continue;
        double turn = angle_of(segs[cand].a, segs[cand].b) - in_dir;
        while (turn > M_PI) turn -= 2 * M_PI;
        while (turn <= -M_PI) turn += 2 * M_PI;
        if (turn > best_turn) {
          best_turn = turn;
          best = cand;
        }
      }
      if (best == segs.size())
        return Violation{"DegenerateGeometry",
                         "open boundary chain: inventory is inconsistent"};
      cur = best;
    }

    // Merge runs of collinear edges, including across the seam.
    std::vector<DirSeg> merged;
    for (const auto& e : path) {
      if (!merged.empty()) {
        const auto& p = merged.back();
        Rat cross = (p.b.x - p.a.x) * (e.b.y - e.a.y) -
                    (p.b.y - p.a.y) * (e.b.x - e.a.x);
        if (cross == 0 && p.b == e.a) {
          merged.back().b = e.b;
          continue;
        }
      }
      merged.push_back(e);
    }
    if (merged.size() >= 2) {
      const auto& f = merged.front();
      const auto& l = merged.back();
      Rat cross = (l.b.x - l.a.x) * (f.b.y - f.a.y) -
                  (l.b.y - l.a.y) * (f.b.x - f.a.x);
      if (cross == 0 && l.b == f.a) {
        merged.front().a = l.a;
        merged.pop_back();
      }
    }

    BoundaryLoop loop;
    for (const auto& e : merged) {
      BoundaryEdge be;
      be.a = e.a;
      be.b = e.b;
      double dx = to_double(e.b.x - e.a.x), dy = to_double(e.b.y - e.a.y);
      double len = std::hypot(dx, dy);
      be.nx = dy / len;
      be.ny = -dx / len;
      be.exterior = (e.a.x == 0 && e.b.x == 0) || (e.a.y == 0 && e.b.y == 0) ||
                    (e.a.x == bb[0] && e.b.x == bb[0]) ||
                    (e.a.y == bb[1] && e.b.y == bb[1]);
      loop.edges.push_back(be);
    }
    loops.push_back(std::move(loop));
  }
  return loops;
}

namespace {

// Bookkeeping shared by the six construction rules on one system.
struct RuleState {
  const TransitionGraph& stg;
  const SwitchingSystem& sys;
  const TileComplex& tiles;
  const Bits& n0;
  std::set<Element> inv;
  bool changed = false;

  bool has(const Element& e) const { return inv.count(e) != 0; }
  void add(const Element& e) { changed |= inv.insert(e).second; }

  bool in_n0(const FaceId& f) const {
    int idx = stg.at(f);
    return idx >= 0 && n0.test(static_cast<size_t>(idx));
  }
  bool entrance(int ci, int cj, const FaceId& v) const {
    return face_role(sys, ci, cj, v) == FaceRole::Entrance;
  }

  // Cells meeting the elementary domain (i,j).
  std::vector<std::pair<int, int>> domain_cells(int i, int j) const {
    std::vector<std::pair<int, int>> out;
    for (int a = i - 1; a <= i; ++a)
      for (int b = j - 1; b <= j; ++b)
        if (a >= 0 && a <= sys.nx() && b >= 0 && b <= sys.ny())
          out.emplace_back(a, b);
    return out;
  }

  // Interior walls meeting the elementary domain (i,j).
  std::vector<FaceId> domain_walls(int i, int j) const {
    std::vector<FaceId> out;
    if (i >= 1 && i <= sys.nx())
      for (int b = j - 1; b <= j; ++b)
        if (b >= 0 && b <= sys.ny())
          out.push_back({FaceId::Kind::WallX, i, b});
    if (j >= 1 && j <= sys.ny())
      for (int a = i - 1; a <= i; ++a)
        if (a >= 0 && a <= sys.nx())
          out.push_back({FaceId::Kind::WallY, a, j});
    return out;
  }

  // The two walls of cell (a,b) meeting the grid point (i,j).
  std::array<FaceId, 2> pi_walls(int a, int b, int i, int j) const {
    return {FaceId{FaceId::Kind::WallX, i, b},
            FaceId{FaceId::Kind::WallY, a, j}};
  }

  void rule0(int i, int j) {
    for (auto [a, b] : domain_cells(i, j)) {
      if (sys.cell_type(a, b) != CellType::A) continue;
      if (in_n0({FaceId::Kind::CellPoint, a, b})) add(Element::cell2(a, b));
    }
  }

  void rule1(int i, int j) {
    for (const auto& u : domain_walls(i, j)) {
      int idx = stg.at(u);
      if (idx < 0 || stg.color[idx] != VertexColor::Transparent) continue;
      if (!n0.test(static_cast<size_t>(idx))) continue;
      for (const auto& c : stg.incident[idx]) add(Element::cell2(c.i, c.j));
      add(Element::wall1(u));
    }
  }

  // Quadrant cells around the interior grid point (i,j).
  std::array<std::pair<int, int>, 4> quadrants(int i, int j) const {
    return {{{i - 1, j - 1}, {i, j - 1}, {i - 1, j}, {i, j}}};
  }

  void rule2(int i, int j) {
    if (has(Element::point0(i, j))) return;
    for (auto [a, b] : quadrants(i, j)) {
      auto [vw, hw] = pi_walls(a, b, i, j);
      std::pair<int, int> across_v{a == i ? i - 1 : i, b};
      std::pair<int, int> across_h{a, b == j ? j - 1 : j};
      if (!has(Element::cell2(a, b)) ||
          !has(Element::cell2(across_v.first, across_v.second)) ||
          !has(Element::cell2(across_h.first, across_h.second)))
        continue;
      if (!has(Element::wall1(vw)) || !has(Element::wall1(hw))) continue;
      if (!entrance(a, b, vw) || !entrance(a, b, hw)) {
        add(Element::point0(i, j));
        return;
      }
    }
  }

  void rule3(int i, int j) {
    if (!has(Element::point0(i, j))) return;
    for (auto [a, b] : quadrants(i, j)) {
      if (!has(Element::cell2(a, b))) continue;
      auto walls = pi_walls(a, b, i, j);
      if (!has(Element::wall1(walls[0])) && !has(Element::wall1(walls[1])))
        continue;
      if (!entrance(a, b, walls[0]) || !entrance(a, b, walls[1])) continue;
      for (const auto& v : walls)
        add(Element::chip(false, a, b, v, i, j));
    }
  }

  void rule4(int i, int j) {
    if (!has(Element::point0(i, j))) return;
    for (auto [a, b] : quadrants(i, j)) {
      if (has(Element::cell2(a, b))) continue;
      auto walls = pi_walls(a, b, i, j);
      for (int k = 0; k < 2; ++k) {
        const FaceId& v_ab = walls[k];
        const FaceId& v_ag = walls[1 - k];
        if (!entrance(a, b, v_ab)) continue;
        // The chip lands in the neighbor cell across the other wall.
        int ga = v_ag.kind == FaceId::Kind::WallX ? (a == i ? i - 1 : i) : a;
        int gb = v_ag.kind == FaceId::Kind::WallY ? (b == j ? j - 1 : j) : b;
        add(Element::chip(true, ga, gb, v_ag, i, j));
      }
    }
  }

  void rule5(int i, int j) {
    if (!has(Element::point0(i, j))) return;
    auto quads = quadrants(i, j);
    auto all_entrance = [&](int a, int b) {
      auto walls = pi_walls(a, b, i, j);
      return entrance(a, b, walls[0]) && entrance(a, b, walls[1]);
    };
    for (size_t x = 0; x < 4; ++x)
      for (size_t y = x + 1; y < 4; ++y) {
        auto [ax, bx] = quads[x];
        auto [ay, by] = quads[y];
        if (std::abs(ax - ay) + std::abs(bx - by) != 1) continue;  // diagonal
        FaceId shared = ax != ay ? FaceId{FaceId::Kind::WallX, i, bx}
                                 : FaceId{FaceId::Kind::WallY, ax, j};
        if (!has(Element::cell2(ax, bx)) || !has(Element::cell2(ay, by)))
          continue;
        if (all_entrance(ax, bx) && all_entrance(ay, by))
          add(Element::wall1(shared));
      }
  }
};

void subsume_chips(std::set<Element>& inv) {
  for (auto it = inv.begin(); it != inv.end();) {
    bool drop = false;
    if (it->kind == Element::Kind::ChipNarrow ||
        it->kind == Element::Kind::ChipWide) {
      if (inv.count(Element::wall1(it->wall))) drop = true;
      if (!drop && it->kind == Element::Kind::ChipNarrow) {
        Element wide = *it;
        wide.kind = Element::Kind::ChipWide;
        drop = inv.count(wide) != 0;
      }
    }
    it = drop ? inv.erase(it) : std::next(it);
  }
}

}  // namespace

std::variant<Region, Violation> build_region(const TransitionGraph& stg,
                                             const TileComplex& tiles,
                                             const Bits& n,
                                             std::vector<std::string>* log) {
  if (auto diag = assert_no_black(stg))
    return Violation{"BlackVertexPresent",
                     face_name(diag->vertex) + ": " + diag->witness};

  Digraph g = Digraph::of(stg);
  auto corev = forward_invariant_core(g, n);
  if (auto* v = std::get_if<Violation>(&corev)) return *v;
  const Bits& n0 = std::get<Bits>(corev);

  const auto& sys = tiles.system();
  RuleState st{stg, sys, tiles, n0, {}, false};

  // The two rules that read the vertex set have static hypotheses; after
  // one pass over them the 2-tile inventory is final, which rule 4's
  // negative condition relies on.
  for (int i = 0; i <= sys.nx(); ++i)
    for (int j = 0; j <= sys.ny(); ++j) {
      st.rule0(i, j);
      st.rule1(i, j);
    }

  bool logged_axis = false;
  do {
    st.changed = false;
    for (int rule = 2; rule <= 5; ++rule)
      for (int i = 0; i <= sys.nx(); ++i)
        for (int j = 0; j <= sys.ny(); ++j) {
          if (i == 0 || j == 0) {
            // No interior grid point: the point-anchored rules are vacuous.
            if (log && !logged_axis && rule == 2) {
              log->push_back("rules 2-5 skipped on axis-adjacent domains");
              logged_axis = true;
            }
            continue;
          }
          switch (rule) {
            case 2: st.rule2(i, j); break;
            case 3: st.rule3(i, j); break;
            case 4: st.rule4(i, j); break;
            case 5: st.rule5(i, j); break;
          }
        }
  } while (st.changed);

  subsume_chips(st.inv);

  Region region;
  region.vertices = n;
  region.inventory = std::move(st.inv);
  auto loops = region_boundary(tiles, region.inventory);
  if (auto* v = std::get_if<Violation>(&loops)) return *v;
  region.boundary = std::move(std::get<std::vector<BoundaryLoop>>(loops));
  return region;
}

bool inventory_covers(const std::set<Element>& whole,
                      const std::set<Element>& part) {
  for (const auto& e : part) {
    if (whole.count(e)) continue;
    if (e.kind == Element::Kind::ChipNarrow ||
        e.kind == Element::Kind::ChipWide) {
      if (whole.count(Element::wall1(e.wall))) continue;
      if (e.kind == Element::Kind::ChipNarrow) {
        Element wide = e;
        wide.kind = Element::Kind::ChipWide;
        if (whole.count(wide)) continue;
      }
    }
    return false;
  }
  return true;
}

std::variant<RegionLattice, Violation> region_lattice(
    const TransitionGraph& stg, const TileComplex& tiles) {
  Digraph g = Digraph::of(stg);
  auto mg = morse_graph(g);
  auto attv = attractor_lattice(g, mg);
  if (auto* v = std::get_if<Violation>(&attv)) return *v;

  RegionLattice out{std::move(std::get<AttractorLattice>(attv)), {}};
  for (const auto& a : out.att.attractors) {
    auto rv = build_region(stg, tiles, a);
    if (auto* v = std::get_if<Violation>(&rv)) return *v;
    out.regions.push_back(std::move(std::get<Region>(rv)));
  }

  // The lattice laws, checked on the inventories themselves.
  int n = static_cast<int>(out.regions.size());
  for (int x = 0; x < n; ++x)
    for (int y = x; y < n; ++y) {
      const auto& ix = out.regions[x].inventory;
      const auto& iy = out.regions[y].inventory;
      std::set<Element> uni = ix;
      uni.insert(iy.begin(), iy.end());
      if (out.regions[out.att.lat.join(x, y)].inventory != uni)
        return Violation{"LatticePropertyViolation",
                         "join of attractors " + std::to_string(x) + "," +
                             std::to_string(y) +
                             " is not the union of inventories"};
      const auto& im = out.regions[out.att.lat.meet(x, y)].inventory;
      if (!inventory_covers(ix, im) || !inventory_covers(iy, im))
        return Violation{"LatticePropertyViolation",
                         "meet of attractors " + std::to_string(x) + "," +
                             std::to_string(y) +
                             " is not contained in the intersection"};
    }
  return out;
}

}  // namespace csw
