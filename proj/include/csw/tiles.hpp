#pragma once

#include <compare>
#include <optional>
#include <set>
#include <variant>

#include "csw/order.hpp"
#include "csw/stg.hpp"
#include "csw/system.hpp"

namespace csw {

struct Pt {
  Rat x, y;
  // Explicit category so the default falls back to < and == (the exact
  // rationals have no three-way comparison of their own).
  std::strong_ordering operator<=>(const Pt&) const = default;
};

// Axis-aligned tile rectangle.  Sides flagged open are half-open toward the
// axes on boundary tiles; the geometry below always works with the closure.
struct Rect {
  Rat x0, x1, y0, y1;
  bool open_x0 = false, open_y0 = false;
};

// One inventory entry of a region: a tile of some dimension or a chip.
// Unused id fields stay at -1 so default comparison gives a canonical order.
struct Element {
  enum class Kind { Cell2, Wall1, Point0, ChipNarrow, ChipWide };
  Kind kind;
  int ci = -1, cj = -1;  // cell, for Cell2 and chips
  FaceId wall{FaceId::Kind::WallX, -1, -1};
  int pi = -1, pj = -1;  // grid point, for Point0 and chips

  auto operator<=>(const Element&) const = default;

  static Element cell2(int i, int j) {
    return {Kind::Cell2, i, j, {FaceId::Kind::WallX, -1, -1}, -1, -1};
  }
  static Element wall1(const FaceId& v) {
    return {Kind::Wall1, -1, -1, v, -1, -1};
  }
  static Element point0(int i, int j) {
    return {Kind::Point0, -1, -1, {FaceId::Kind::WallX, -1, -1}, i, j};
  }
  static Element chip(bool wide, int ci, int cj, const FaceId& v, int pi,
                      int pj) {
    return {wide ? Kind::ChipWide : Kind::ChipNarrow, ci, cj, v, pi, pj};
  }
};

std::string element_name(const Element& e);

// The tile complex for one system at one inset delta: cell tiles shrunk off
// the threshold lines, wall collars of width 2*delta along interior walls,
// and squares of side 2*delta at the interior grid points.
class TileComplex {
 public:
  TileComplex(const SwitchingSystem* sys, Rat delta, std::optional<Rat> lam)
      : sys_(sys), delta_(std::move(delta)), lam_(std::move(lam)) {}

  const SwitchingSystem& system() const { return *sys_; }
  const Rat& delta() const { return delta_; }
  // Half of the minimal bounded cell extent; chips scale with it.
  const std::optional<Rat>& half_width() const { return lam_; }

  std::optional<std::string> delta_warning;  // set when delta >= delta*

  Rect cell_tile(int i, int j) const;
  bool wall_has_tile(const FaceId& v) const;  // interior walls only
  Rect wall_tile(const FaceId& v) const;
  Rect point_tile(int i, int j) const;  // interior grid points only

  std::vector<FaceId> interior_walls() const;
  std::vector<std::pair<int, int>> interior_grid_points() const;

 private:
  const SwitchingSystem* sys_;
  Rat delta_;
  std::optional<Rat> lam_;
};

std::variant<TileComplex, Violation> build_tiles(const SwitchingSystem& sys,
                                                 const Rat& delta);

// A chip: right triangle glued into a wall collar at a grid point, carrying
// the (cell, wall, grid point) triple that names it.  verts[0] sits on the
// wall, verts[1] is the right-angle corner, verts[2] the far hypotenuse end.
struct Chip {
  bool wide = false;
  int ci = -1, cj = -1;
  FaceId wall{FaceId::Kind::WallX, -1, -1};
  int pi = -1, pj = -1;
  std::array<Pt, 3> verts;
};

std::variant<Chip, Violation> make_chip(const TileComplex& tiles, bool wide,
                                        int ci, int cj, const FaceId& wall,
                                        int pi, int pj);

// Open rectangle around grid line crossing (i,j); the upper bounds clamp to
// the bbox on the outermost rows/columns.
struct ElementaryDomain {
  int i, j;
  Rat x0, x1, y0, y1;
};

ElementaryDomain elementary_domain(const TileComplex& tiles, int i, int j);

// One directed boundary edge: interior of the region on the left, so the
// outward normal is the right-hand normal.  Exterior edges lie on the axes
// or the bbox frame and face no dynamics.
struct BoundaryEdge {
  Pt a, b;
  double nx = 0, ny = 0;
  bool exterior = false;
};

struct BoundaryLoop {
  std::vector<BoundaryEdge> edges;
};

struct Region {
  Bits vertices;  // the defining forward-invariant vertex set
  std::set<Element> inventory;
  std::vector<BoundaryLoop> boundary;
};

// Closed polygons (counterclockwise) realizing an inventory.
std::vector<std::vector<Pt>> inventory_polygons(const TileComplex& tiles,
                                                const std::set<Element>& inv);

std::variant<std::vector<BoundaryLoop>, Violation> region_boundary(
    const TileComplex& tiles, const std::set<Element>& inv);

// Applies the construction rules over all elementary domains to the least
// fixed point, then drops chips shadowed by wider ones or by a full wall
// collar.  `log`, when given, records skipped configurations.
std::variant<Region, Violation> build_region(const TransitionGraph& stg,
                                             const TileComplex& tiles,
                                             const Bits& n,
                                             std::vector<std::string>* log =
                                                 nullptr);

// Whether every element of `part` is covered pointwise by the union of
// `whole` (chips may be covered by their wide version or the wall collar).
bool inventory_covers(const std::set<Element>& whole,
                      const std::set<Element>& part);

struct RegionLattice {
  AttractorLattice att;
  std::vector<Region> regions;  // aligned with att.attractors
};

// Regions for the whole attractor lattice, with the join/meet laws checked
// against the inventories (join = exact union, meet = pointwise inclusion).
std::variant<RegionLattice, Violation> region_lattice(
    const TransitionGraph& stg, const TileComplex& tiles);

}  // namespace csw
