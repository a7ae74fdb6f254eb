#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "csw/system.hpp"

namespace csw {

enum class FaceRole { Entrance, Absorbing };
enum class VertexColor { Minimal, Transparent, Black, White };

const char* vertex_color_name(VertexColor c);

// A face of some cell, doubling as a vertex of the transition graph.
//   WallX(i,j): vertical wall on grid line i (0..nx+1), between y-lines j,j+1.
//   WallY(i,j): horizontal wall on grid line j (0..ny+1), between x-lines i,i+1.
//   CellPoint(i,j): the distinguished absorbing point of an attracting cell.
struct FaceId {
  enum Kind { WallX = 0, WallY = 1, CellPoint = 2 };
  Kind kind;
  int i, j;
  auto operator<=>(const FaceId&) const = default;
};

std::string face_name(const FaceId& f);

struct CellRef {
  int i, j;
  FaceRole role;
};

struct TransitionGraph {
  const SwitchingSystem* sys = nullptr;
  std::vector<FaceId> verts;  // sorted by (kind, i, j)
  std::map<FaceId, int> index;
  std::vector<std::vector<int>> out, in;       // sorted adjacency
  std::vector<std::vector<CellRef>> incident;  // cells sharing each face
  std::vector<VertexColor> color;

  // -1 when the face is not a vertex (e.g. the CellPoint of a
  // non-attracting cell), so callers can probe without catching.
  int at(const FaceId& f) const {
    auto it = index.find(f);
    return it == index.end() ? -1 : it->second;
  }
};

// The four walls of a cell, plus its CellPoint when the cell is attracting.
std::vector<FaceId> faces_of(const SwitchingSystem& sys, int i, int j);

// Role of a face relative to one of its incident cells, by comparing the
// focal point against the wall's grid line.  CellPoints are absorbing.
FaceRole face_role(const SwitchingSystem& sys, int i, int j, const FaceId& f);

// Complete bipartite entrance -> absorbing edges of one cell, plus the
// CellPoint self-edge when present.
std::vector<std::pair<FaceId, FaceId>> cell_graph(const SwitchingSystem& sys,
                                                  int i, int j);

TransitionGraph build_stg(const SwitchingSystem& sys);

struct BlackDiagnostic {
  FaceId vertex;
  std::string witness;  // the straddling inequality, with an remediation hint
};

// Empty when the graph is usable; a black wall makes every region
// construction downstream unsound and is reported as a hard error.
std::optional<BlackDiagnostic> assert_no_black(const TransitionGraph& stg);

}  // namespace csw
