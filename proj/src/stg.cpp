#include "csw/stg.hpp"

#include <algorithm>
#include <sstream>

namespace csw {

const char* vertex_color_name(VertexColor c) {
  switch (c) {
    case VertexColor::Minimal: return "minimal";
    case VertexColor::Transparent: return "transparent";
    case VertexColor::Black: return "black";
    case VertexColor::White: return "white";
  }
  return "?";
}

std::string face_name(const FaceId& f) {
  std::ostringstream os;
  switch (f.kind) {
    case FaceId::WallX: os << "vx(" << f.i << "," << f.j << ")"; break;
    case FaceId::WallY: os << "vy(" << f.i << "," << f.j << ")"; break;
    case FaceId::CellPoint: os << "w(" << f.i << "," << f.j << ")"; break;
  }
  return os.str();
}

std::vector<FaceId> faces_of(const SwitchingSystem& sys, int i, int j) {
  std::vector<FaceId> out;
  out.push_back({FaceId::WallX, i, j});      // west
  out.push_back({FaceId::WallX, i + 1, j});  // east
  out.push_back({FaceId::WallY, i, j});      // south
  out.push_back({FaceId::WallY, i, j + 1});  // north
  if (sys.cell_type(i, j) == CellType::A)
    out.push_back({FaceId::CellPoint, i, j});
  return out;
}

FaceRole face_role(const SwitchingSystem& sys, int i, int j, const FaceId& f) {
  if (f.kind == FaceId::CellPoint) return FaceRole::Absorbing;
  auto phi = sys.focal(i, j);
  if (f.kind == FaceId::WallX) {
    Rat line = sys.xline(f.i);
    // West wall of the cell: flow enters when the focal point pulls east.
    if (f.i == i) return phi[0] > line ? FaceRole::Entrance : FaceRole::Absorbing;
    return phi[0] < line ? FaceRole::Entrance : FaceRole::Absorbing;
  }
  Rat line = sys.yline(f.j);
  if (f.j == j) return phi[1] > line ? FaceRole::Entrance : FaceRole::Absorbing;
  return phi[1] < line ? FaceRole::Entrance : FaceRole::Absorbing;
}

std::vector<std::pair<FaceId, FaceId>> cell_graph(const SwitchingSystem& sys,
                                                  int i, int j) {
  std::vector<FaceId> ent, abs;
  for (const auto& f : faces_of(sys, i, j))
    (face_role(sys, i, j, f) == FaceRole::Entrance ? ent : abs).push_back(f);
  std::vector<std::pair<FaceId, FaceId>> edges;
  for (const auto& e : ent)
    for (const auto& a : abs) edges.emplace_back(e, a);
  if (sys.cell_type(i, j) == CellType::A) {
    FaceId w{FaceId::CellPoint, i, j};
    edges.emplace_back(w, w);
  }
  return edges;
}

TransitionGraph build_stg(const SwitchingSystem& sys) {
  TransitionGraph g;
  g.sys = &sys;

  for (int j = 0; j < sys.rows(); ++j)
    for (int i = 0; i < sys.cols(); ++i)
      for (const auto& f : faces_of(sys, i, j))
        if (!g.index.count(f)) {
          g.index.emplace(f, 0);
        }
  // std::map iteration gives the canonical (kind, i, j) order.
  for (auto& [f, idx] : g.index) {
    idx = static_cast<int>(g.verts.size());
    g.verts.push_back(f);
  }

  const int n = static_cast<int>(g.verts.size());
  g.out.assign(n, {});
  g.in.assign(n, {});
  g.incident.assign(n, {});
  g.color.assign(n, VertexColor::White);

  for (int j = 0; j < sys.rows(); ++j)
    for (int i = 0; i < sys.cols(); ++i) {
      for (const auto& f : faces_of(sys, i, j))
        g.incident[g.at(f)].push_back({i, j, face_role(sys, i, j, f)});
      for (const auto& [u, v] : cell_graph(sys, i, j))
        g.out[g.at(u)].push_back(g.at(v));
    }
  for (int u = 0; u < n; ++u) {
    auto& adj = g.out[u];
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    for (int v : adj) g.in[v].push_back(u);
  }
  for (int v = 0; v < n; ++v) std::sort(g.in[v].begin(), g.in[v].end());

  for (int u = 0; u < n; ++u) {
    const auto& inc = g.incident[u];
    if (g.verts[u].kind == FaceId::CellPoint) {
      g.color[u] = VertexColor::Minimal;
      continue;
    }
    bool any_abs = false, any_ent = false;
    for (const auto& c : inc) {
      (c.role == FaceRole::Absorbing ? any_abs : any_ent) = true;
    }
    if (inc.size() == 1) {
      // Domain-boundary wall: source when entered, black when a focal point
      // beyond the bbox pushes flow out of the computational domain.
      g.color[u] = any_ent ? VertexColor::White : VertexColor::Black;
    } else {
      if (any_abs && any_ent) g.color[u] = VertexColor::Transparent;
      else if (any_abs) g.color[u] = VertexColor::Black;
      else g.color[u] = VertexColor::White;
    }
  }
  return g;
}

std::optional<BlackDiagnostic> assert_no_black(const TransitionGraph& stg) {
  const auto& sys = *stg.sys;
  for (size_t u = 0; u < stg.verts.size(); ++u) {
    if (stg.color[u] != VertexColor::Black) continue;
    const FaceId f = stg.verts[u];
    std::ostringstream os;
    if (stg.incident[u].size() == 2) {
      // Interior wall absorbing on both sides: the switching component
      // straddles the threshold in the repelling order.
      const auto& lo = stg.incident[u][0];  // west/south cell
      const auto& hi = stg.incident[u][1];
      int c = f.kind == FaceId::WallX ? 0 : 1;
      Rat line = f.kind == FaceId::WallX ? sys.xline(f.i) : sys.yline(f.j);
      os << "lambda_" << c + 1 << "(" << lo.i << "," << lo.j << ") = "
         << format_rational(sys.lambda(lo.i, lo.j)[c]) << " > gamma_" << c + 1
         << "*threshold = " << format_rational(sys.gamma()[c] * line)
         << " > lambda_" << c + 1 << "(" << hi.i << "," << hi.j << ") = "
         << format_rational(sys.lambda(hi.i, hi.j)[c])
         << "; consider splitting the self-regulating species into two nodes";
    } else {
      os << "wall " << face_name(f)
         << " on the bbox is absorbing: a focal point lies outside the "
            "computational box; enlarge bbox";
    }
    return BlackDiagnostic{f, os.str()};
  }
  return std::nullopt;
}

}  // namespace csw
