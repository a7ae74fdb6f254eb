#include "csw/field.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <thread>

namespace csw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Band of one coordinate: the cell gap it falls in, or the wall collar
// around grid line `wall` (1-based) with local coordinate u in [0,1].
struct Band {
  int cell = 0;
  int wall = 0;  // 0: not in a collar
  double u = 0;
};

Band band_of(const std::vector<double>& lines, double delta, double x) {
  Band b;
  int c = static_cast<int>(
      std::upper_bound(lines.begin(), lines.end(), x) - lines.begin());
  if (c > 0 && x <= lines[c - 1] + delta) {
    b.wall = c;
    b.u = (x - (lines[c - 1] - delta)) / (2 * delta);
  } else if (c < static_cast<int>(lines.size()) && x >= lines[c] - delta) {
    b.wall = c + 1;
    b.u = (x - (lines[c] - delta)) / (2 * delta);
  } else {
    b.cell = c;
  }
  b.u = std::clamp(b.u, 0.0, 1.0);
  return b;
}

}  // namespace

FieldSampler::FieldSampler(const SwitchingSystem& sys, double delta)
    : sys_(&sys), delta_(delta) {
  gamma_ = {to_double(sys.gamma()[0]), to_double(sys.gamma()[1])};
  bbox_ = {to_double(sys.bbox()[0]), to_double(sys.bbox()[1])};
  for (const auto& th : sys.xi()) xs_.push_back(to_double(th.value));
  for (const auto& th : sys.eta()) ys_.push_back(to_double(th.value));
  lam_.resize(sys.cell_count());
  for (int j = 0; j < sys.rows(); ++j)
    for (int i = 0; i < sys.cols(); ++i)
      lam_[sys.cell_index(i, j)] = {to_double(sys.lambda(i, j)[0]),
                                    to_double(sys.lambda(i, j)[1])};
  auto gap = [&](int i0, int j0, int i1, int j1) {
    const auto &a = lam_[sys.cell_index(i0, j0)],
               &b = lam_[sys.cell_index(i1, j1)];
    max_gap_ = std::max(
        {max_gap_, std::abs(a[0] - b[0]), std::abs(a[1] - b[1])});
  };
  for (int i = 1; i <= sys.nx(); ++i)
    for (int j = 0; j < sys.rows(); ++j) gap(i - 1, j, i, j);
  for (int j = 1; j <= sys.ny(); ++j)
    for (int i = 0; i < sys.cols(); ++i) gap(i, j - 1, i, j);
}

Vec2 FieldSampler::f(const Vec2& x) const {
  Band bx = band_of(xs_, delta_, x[0]);
  Band by = band_of(ys_, delta_, x[1]);
  auto lam = [&](int i, int j) -> const std::array<double, 2>& {
    return lam_[sys_->cell_index(i, j)];
  };
  if (!bx.wall && !by.wall) {
    return lam(bx.cell, by.cell);
  }
  if (bx.wall && !by.wall) {
    const auto &a = lam(bx.wall - 1, by.cell), &b = lam(bx.wall, by.cell);
    return {a[0] + bx.u * (b[0] - a[0]), a[1] + bx.u * (b[1] - a[1])};
  }
  if (!bx.wall && by.wall) {
    const auto &a = lam(bx.cell, by.wall - 1), &b = lam(bx.cell, by.wall);
    return {a[0] + by.u * (b[0] - a[0]), a[1] + by.u * (b[1] - a[1])};
  }
  const auto &ll = lam(bx.wall - 1, by.wall - 1), &lr = lam(bx.wall, by.wall - 1),
             &ul = lam(bx.wall - 1, by.wall), &ur = lam(bx.wall, by.wall);
  double u = bx.u, v = by.u;
  Vec2 out;
  for (int c = 0; c < 2; ++c)
    out[c] = (1 - u) * (1 - v) * ll[c] + u * (1 - v) * lr[c] +
             (1 - u) * v * ul[c] + u * v * ur[c];
  return out;
}

Vec2 FieldSampler::V(const Vec2& x) const {
  Vec2 v = f(x);
  v[0] -= gamma_[0] * x[0];
  v[1] -= gamma_[1] * x[1];
  if (bump_.eps > 0) {
    const auto& c = bump_.coef;
    v[0] += bump_.eps * std::sin(c[0] * x[0] + c[1]) *
            std::cos(c[2] * x[1] + c[3]);
    v[1] += bump_.eps * std::cos(c[4] * x[0] + c[5]) *
            std::sin(c[6] * x[1] + c[7]);
  }
  return v;
}

FieldSampler FieldSampler::with_bump(double eps, std::uint64_t seed) const {
  FieldSampler out = *this;
  out.bump_.eps = eps;
  std::mt19937_64 rng(mix64(seed));
  std::uniform_real_distribution<double> freq(1.0, 6.0), phase(0.0, 6.283185307179586);
  for (int k = 0; k < 8; k += 2) {
    out.bump_.coef[k] = freq(rng);
    out.bump_.coef[k + 1] = phase(rng);
  }
  return out;
}

std::variant<FieldSampler, Violation> make_fdelta(const SwitchingSystem& sys,
                                                  const Rat& delta) {
  // Reuse the tile builder's admissibility rules so the sampler and the
  // geometry can never disagree about delta.
  auto tiles = build_tiles(sys, delta);
  if (auto* v = std::get_if<Violation>(&tiles)) return *v;
  return FieldSampler(sys, to_double(delta));
}

std::variant<Vec2, Violation> vector_field(const FieldSampler& fs,
                                           const Vec2& x) {
  if (!(x[0] > 0 && x[1] > 0 && x[0] <= fs.bbox()[0] && x[1] <= fs.bbox()[1]))
    return Violation{"OutOfDomain",
                     "point (" + fmt(x[0]) + "," + fmt(x[1]) +
                         ") outside the truncated quadrant"};
  return fs.V(x);
}

namespace {

Vec2 rk4_step(const FieldSampler& fs, const Vec2& x, double dt) {
  Vec2 k1 = fs.V(x);
  Vec2 x2{x[0] + 0.5 * dt * k1[0], x[1] + 0.5 * dt * k1[1]};
  Vec2 k2 = fs.V(x2);
  Vec2 x3{x[0] + 0.5 * dt * k2[0], x[1] + 0.5 * dt * k2[1]};
  Vec2 k3 = fs.V(x3);
  Vec2 x4{x[0] + dt * k3[0], x[1] + dt * k3[1]};
  Vec2 k4 = fs.V(x4);
  return {x[0] + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
          x[1] + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])};
}

bool in_domain(const FieldSampler& fs, const Vec2& x) {
  return x[0] > 0 && x[1] > 0 && x[0] <= fs.bbox()[0] && x[1] <= fs.bbox()[1];
}

// Streaming integration: fn(step, state) after every step; returns false
// from fn to stop early.
template <class Fn>
void walk(const FieldSampler& fs, Vec2 x, double dt, double horizon, Fn fn) {
  auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  for (std::size_t s = 1; s <= steps; ++s) {
    x = rk4_step(fs, x, dt);
    if (!fn(s, x)) return;
  }
}

}  // namespace

Trajectory integrate(const FieldSampler& fs, Vec2 x0, double dt,
                     double horizon) {
  Trajectory t;
  t.x0 = x0;
  t.dt = dt;
  t.horizon = horizon;
  auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  t.states.reserve(steps + 1);
  t.states.push_back(x0);
  walk(fs, x0, dt, horizon, [&](std::size_t s, const Vec2& x) {
    t.states.push_back(x);
    if (!t.exit_step && !in_domain(fs, x)) t.exit_step = s;
    return true;
  });
  return t;
}

// ---------------------------------------------------------------------------
// Region geometry

RegionGeometry::RegionGeometry(const TileComplex& tiles, const Region& region) {
  const auto& sys = tiles.system();
  for (const auto& th : sys.xi()) xs_.push_back(to_double(th.value));
  for (const auto& th : sys.eta()) ys_.push_back(to_double(th.value));
  delta_ = to_double(tiles.delta());
  cols_ = sys.cols();
  rows_ = sys.rows();
  // Partition-piece ids: cells, x-collars, y-collars, point squares.
  int n_cells = cols_ * rows_;
  int n_wx = sys.nx() * rows_;
  int n_wy = sys.ny() * cols_;
  mask_.assign(n_cells + n_wx + n_wy + sys.nx() * sys.ny(), false);
  auto wx_id = [&](int i, int j) { return n_cells + (i - 1) * rows_ + j; };
  auto wy_id = [&](int i, int j) { return n_cells + n_wx + (j - 1) * cols_ + i; };
  auto pt_id = [&](int i, int j) {
    return n_cells + n_wx + n_wy + (j - 1) * static_cast<int>(xs_.size()) +
           (i - 1);
  };
  for (const auto& e : region.inventory) {
    switch (e.kind) {
      case Element::Kind::Cell2:
        mask_[e.cj * cols_ + e.ci] = true;
        break;
      case Element::Kind::Wall1:
        if (e.wall.kind == FaceId::Kind::WallX)
          mask_[wx_id(e.wall.i, e.wall.j)] = true;
        else
          mask_[wy_id(e.wall.i, e.wall.j)] = true;
        break;
      case Element::Kind::Point0:
        mask_[pt_id(e.pi, e.pj)] = true;
        break;
      default:
        break;  // chips handled by the polygon fallback
    }
  }
  for (const auto& poly : inventory_polygons(tiles, region.inventory)) {
    std::vector<Vec2> p;
    for (const auto& q : poly) p.push_back({to_double(q.x), to_double(q.y)});
    double a2 = 0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const auto &u = p[k], &v = p[(k + 1) % p.size()];
      a2 += u[0] * v[1] - v[0] * u[1];
    }
    area_ += a2 / 2;
    acc_area_.push_back(area_);
    polys_.push_back(std::move(p));
  }
}

int RegionGeometry::tile_id(const Vec2& x) const {
  Band bx = band_of(xs_, delta_, x[0]);
  Band by = band_of(ys_, delta_, x[1]);
  int n_cells = cols_ * rows_;
  int n_wx = static_cast<int>(xs_.size()) * rows_;
  int n_wy = static_cast<int>(ys_.size()) * cols_;
  if (!bx.wall && !by.wall) return by.cell * cols_ + bx.cell;
  if (bx.wall && !by.wall) return n_cells + (bx.wall - 1) * rows_ + by.cell;
  if (!bx.wall && by.wall)
    return n_cells + n_wx + (by.wall - 1) * cols_ + bx.cell;
  return n_cells + n_wx + n_wy +
         (by.wall - 1) * static_cast<int>(xs_.size()) + (bx.wall - 1);
}

bool RegionGeometry::contains(const Vec2& x) const {
  if (polys_.empty()) return false;
  if (mask_[tile_id(x)]) return true;
  // Fallback for chips and for points sitting exactly on tile seams.
  for (const auto& p : polys_) {
    bool in = true;
    for (std::size_t k = 0; k < p.size() && in; ++k) {
      const auto &a = p[k], &b = p[(k + 1) % p.size()];
      double cross = (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]);
      if (cross < -1e-12) in = false;
    }
    if (in) return true;
  }
  return false;
}

double RegionGeometry::distance(const Vec2& x) const {
  if (contains(x)) return 0;
  double best = kInf;
  for (const auto& p : polys_)
    for (std::size_t k = 0; k < p.size(); ++k) {
      const auto &a = p[k], &b = p[(k + 1) % p.size()];
      double ex = b[0] - a[0], ey = b[1] - a[1];
      double t = ((x[0] - a[0]) * ex + (x[1] - a[1]) * ey) /
                 (ex * ex + ey * ey);
      t = std::clamp(t, 0.0, 1.0);
      best = std::min(best, std::hypot(x[0] - a[0] - t * ex,
                                       x[1] - a[1] - t * ey));
    }
  return best;
}

Vec2 RegionGeometry::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double pick = uni(rng) * area_;
  std::size_t idx =
      std::lower_bound(acc_area_.begin(), acc_area_.end(), pick) -
      acc_area_.begin();
  idx = std::min(idx, polys_.size() - 1);
  const auto& p = polys_[idx];
  double u = uni(rng), v = uni(rng);
  if (p.size() == 3) {
    if (u + v > 1) {
      u = 1 - u;
      v = 1 - v;
    }
    return {p[0][0] + u * (p[1][0] - p[0][0]) + v * (p[2][0] - p[0][0]),
            p[0][1] + u * (p[1][1] - p[0][1]) + v * (p[2][1] - p[0][1])};
  }
  return {p[0][0] + u * (p[1][0] - p[0][0]) + v * (p[3][0] - p[0][0]),
          p[0][1] + u * (p[1][1] - p[0][1]) + v * (p[3][1] - p[0][1])};
}

// ---------------------------------------------------------------------------
// Transversality

TransversalityReport check_transversality(const FieldSampler& fs,
                                          const Region& region,
                                          int samples_per_edge) {
  TransversalityReport rep;
  rep.samples_per_edge = samples_per_edge;
  const double inset = 1e-7;
  for (std::size_t li = 0; li < region.boundary.size(); ++li) {
    const auto& loop = region.boundary[li];
    for (std::size_t ei = 0; ei < loop.edges.size(); ++ei) {
      const auto& e = loop.edges[ei];
      if (e.exterior) continue;
      Vec2 a{to_double(e.a.x), to_double(e.a.y)};
      Vec2 b{to_double(e.b.x), to_double(e.b.y)};
      EdgeCheck ec{li, ei, -kInf, a};
      int n = std::max(samples_per_edge, 2);
      for (int m = 0; m < n; ++m) {
        double s = inset + (1 - 2 * inset) * m / (n - 1);
        Vec2 p{a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])};
        Vec2 v = fs.V(p);
        double dot = v[0] * e.nx + v[1] * e.ny;
        if (dot > ec.worst) {
          ec.worst = dot;
          ec.at = p;
        }
      }
      if (!rep.worst_margin || ec.worst > *rep.worst_margin)
        rep.worst_margin = ec.worst;
      if (ec.worst >= 0 && !rep.failure) {
        rep.pass = false;
        rep.failure = Violation{
            "TransversalityFail",
            "loop " + std::to_string(li) + " edge " + std::to_string(ei) +
                " at (" + fmt(ec.at[0]) + "," + fmt(ec.at[1]) +
                "): V.n = " + fmt(ec.worst) + " >= 0"};
      }
      rep.edges.push_back(ec);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Chip quadratic

ChipQuadratic chip_quadratic_frame(double g_along, double g_normal, double a,
                                   double disp_along, double disp_normal,
                                   bool wide, double delta_used, int grid) {
  ChipQuadratic q;
  q.wide = wide;
  q.delta_used = delta_used;
  double g1 = g_along, g2 = g_normal, A = disp_along, B = disp_normal;
  if (!wide) {
    q.K0 = g1;
    q.K1 = g2 - g1;
    q.L0 = -g1 * A - g2 * B;
    q.L1 = (g1 - g2) * (a / 2);
  } else {
    q.K0 = 2 * g1 - g2;
    q.K1 = -2 * (g1 - g2);
    q.L0 = (a / 2) * g2 - 2 * g1 * A - g2 * B;
    q.L1 = (g1 - g2) * a;
  }
  q.M = (a / 2) * g2 * B;
  q.delta_bound = kInf;
  q.min_T = kInf;
  for (int i = 0; i < grid; ++i) {
    double t = static_cast<double>(i) / (grid - 1);
    double K = q.K0 + q.K1 * t, L = q.L0 + q.L1 * t;
    double bound = kInf;
    if (K > 0) {
      double D = L * L - 4 * K * q.M;
      if (D >= 0 && L < 0) bound = (-L - std::sqrt(D)) / (2 * K);
    } else if (K == 0) {
      if (L < 0) bound = -q.M / L;
    } else {
      // Opens downward with M > 0: one root each side of zero; the
      // positive one limits delta.
      double D = L * L - 4 * K * q.M;
      bound = (-L - std::sqrt(D)) / (2 * K);
    }
    q.delta_bound = std::min(q.delta_bound, bound);
    q.min_T = std::min(q.min_T,
                       K * delta_used * delta_used + L * delta_used + q.M);
  }
  q.pass = q.min_T > 0;
  return q;
}

std::variant<ChipQuadratic, Violation> chip_quadratic(const TileComplex& tiles,
                                                      const Chip& chip) {
  const auto& sys = tiles.system();
  auto cres = derived_constants(sys);
  if (auto* v = std::get_if<Violation>(&cres)) return *v;
  const auto& sc = std::get<SystemConstants>(cres);

  bool horizontal = chip.wall.kind == FaceId::Kind::WallY;  // runs along x
  int d_axis = horizontal ? 0 : 1, n_axis = 1 - d_axis;
  int d_sign, n_sign, oi = chip.ci, oj = chip.cj;
  if (horizontal) {
    d_sign = chip.pi == chip.wall.i ? 1 : -1;
    n_sign = chip.cj == chip.wall.j ? 1 : -1;
    oj = chip.cj == chip.wall.j ? chip.wall.j - 1 : chip.wall.j;
  } else {
    d_sign = chip.pj == chip.wall.j ? 1 : -1;
    n_sign = chip.ci == chip.wall.i ? 1 : -1;
    oi = chip.ci == chip.wall.i ? chip.wall.i - 1 : chip.wall.i;
  }
  auto rel = [&](int ci, int cj, int axis) {
    Rat foc = sys.focal(ci, cj)[axis];
    Rat lo = axis == 0 ? sys.cell_xlo(ci) : sys.cell_ylo(cj);
    Rat hi = axis == 0 ? sys.cell_xhi(ci) : sys.cell_yhi(cj);
    return foc < lo ? -1 : foc > hi ? 1 : 0;
  };
  int kd = rel(chip.ci, chip.cj, d_axis) * d_sign;
  int kn = rel(chip.ci, chip.cj, n_axis) * n_sign;
  int od = rel(oi, oj, d_axis) * d_sign;
  int on = rel(oi, oj, n_axis) * n_sign;
  // The chip's own cell must not drain toward the wall or back toward the
  // grid point; the cell across the wall must feed through it, pointing
  // back for a narrow chip and not back for a wide one.
  bool ok = kd >= 0 && kn >= 0 && on > 0 && (chip.wide ? od >= 0 : od < 0);
  if (!ok)
    return Violation{
        "HypothesesNotMet",
        std::string(chip.wide ? "wide" : "narrow") + " chip at cell (" +
            std::to_string(chip.ci) + "," + std::to_string(chip.cj) +
            ") has incident types " +
            cell_type_name(sys.cell_type(chip.ci, chip.cj)) + "/" +
            cell_type_name(sys.cell_type(oi, oj))};

  double g_along = to_double(sys.gamma()[d_axis]);
  double g_normal = to_double(sys.gamma()[n_axis]);
  double lam = to_double(*tiles.half_width());
  return chip_quadratic_frame(g_along, g_normal, 2 * lam, to_double(sc.rho),
                              to_double(sc.mu), chip.wide,
                              to_double(tiles.delta()));
}

// ---------------------------------------------------------------------------
// Parallel helpers

int worker_count() {
  if (const char* env = std::getenv("CONLEY_SWITCH_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return std::min(n, 64);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(std::min(hw, 16u)) : 4;
}

void parallel_for(int n, const std::function<void(int)>& fn) {
  int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// Forward invariance

namespace {

struct RunResult {
  bool escaped = false;
  std::size_t step = 0;
  double excursion = 0;
  bool near_miss = false;
};

RunResult run_invariance(const FieldSampler& fs, const RegionGeometry& geo,
                         std::uint64_t seed, int index, double dt,
                         double horizon) {
  RunResult r;
  std::mt19937_64 rng(mix64(seed ^ mix64(index + 1)));
  Vec2 x0 = geo.sample(rng);
  walk(fs, x0, dt, horizon, [&](std::size_t s, const Vec2& x) {
    double d = geo.distance(x);
    if (d > 0) {
      r.excursion = std::max(r.excursion, d);
      Vec2 v = fs.V(x);
      double slack = 1e-9 + 10 * dt * std::hypot(v[0], v[1]);
      if (d > slack) {
        r.escaped = true;
        r.step = s;
        return false;
      }
      r.near_miss = true;
    }
    return true;
  });
  return r;
}

}  // namespace

InvarianceReport check_forward_invariance(const FieldSampler& fs,
                                          const TileComplex& tiles,
                                          const Region& region, int n_traj,
                                          double dt, double horizon,
                                          std::uint64_t seed) {
  InvarianceReport rep;
  rep.runs = n_traj;
  rep.dt = dt;
  rep.horizon = horizon;
  rep.seed = seed;
  RegionGeometry geo(tiles, region);
  if (geo.empty()) {
    rep.runs = 0;
    return rep;
  }
  std::vector<RunResult> results(n_traj);
  parallel_for(n_traj, [&](int i) {
    results[i] = run_invariance(fs, geo, seed, i, dt, horizon);
  });
  for (int i = 0; i < n_traj; ++i) {
    const auto& r = results[i];
    rep.max_excursion = std::max(rep.max_excursion, r.excursion);
    if (r.near_miss) ++rep.near_misses;
    if (r.escaped) {
      ++rep.escapes;
      if (!rep.failure) {
        rep.pass = false;
        rep.failure = Violation{
            "InvarianceViolation",
            "trajectory " + std::to_string(i) + " escaped at step " +
                std::to_string(r.step) + " (distance " + fmt(r.excursion) +
                ")"};
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Morse-set localization

LocalizationReport localize_morse_sets(const FieldSampler& fs,
                                       const TileComplex& tiles,
                                       const RegionLattice& rl, int runs,
                                       double dt, double horizon,
                                       std::uint64_t seed) {
  LocalizationReport rep;
  rep.seed = seed;
  std::vector<RegionGeometry> geo;
  geo.reserve(rl.regions.size());
  for (const auto& r : rl.regions) geo.emplace_back(tiles, r);

  auto ji = join_irreducibles(rl.att.lat);
  if (auto* v = std::get_if<Violation>(&ji)) {
    rep.pass = false;
    rep.failure = *v;
    return rep;
  }
  const auto& irr = std::get<JoinIrreducibles>(ji);

  int R = static_cast<int>(rl.regions.size());
  struct Run {
    int node;         // index into irr.elements, or -1 for complement runs
    Vec2 x0;
    int outcome = 0;  // 0 stayed, 1 descended, 2 lost
    bool order_violation = false;
  };
  std::vector<Run> plan;
  std::uint64_t salt = 0;
  for (std::size_t k = 0; k < irr.elements.size(); ++k) {
    int e = irr.elements[k], p = irr.pred[k];
    if (geo[e].empty()) continue;
    for (int i = 0; i < runs; ++i) {
      std::mt19937_64 rng(mix64(seed ^ mix64(++salt)));
      Vec2 x0;
      bool found = false;
      for (int tries = 0; tries < 10000 && !found; ++tries) {
        x0 = geo[e].sample(rng);
        found = !geo[p].contains(x0);
      }
      if (found) plan.push_back({static_cast<int>(k), x0});
    }
  }
  double bx = to_double(tiles.system().bbox()[0]);
  double by = to_double(tiles.system().bbox()[1]);
  int top = rl.att.lat.top;
  rep.top_complement_area = bx * by - geo[top].area();
  if (rep.top_complement_area > 1e-9) {
    for (int i = 0; i < runs; ++i) {
      std::mt19937_64 rng(mix64(seed ^ mix64(++salt) ^ 0xabcdefull));
      std::uniform_real_distribution<double> ux(1e-9, bx), uy(1e-9, by);
      Vec2 x0;
      bool found = false;
      for (int tries = 0; tries < 10000 && !found; ++tries) {
        x0 = {ux(rng), uy(rng)};
        found = !geo[top].contains(x0);
      }
      if (found) plan.push_back({-1, x0});
    }
  }

  parallel_for(static_cast<int>(plan.size()), [&](int pi) {
    Run& run = plan[pi];
    std::vector<char> entered(R, 0);
    for (int r = 0; r < R; ++r) entered[r] = geo[r].contains(run.x0);
    Vec2 terminal = run.x0;
    walk(fs, run.x0, dt, horizon, [&](std::size_t, const Vec2& x) {
      terminal = x;
      Vec2 v = fs.V(x);
      double slack = 1e-9 + 10 * dt * std::hypot(v[0], v[1]);
      for (int r = 0; r < R; ++r) {
        if (!entered[r]) {
          if (geo[r].contains(x)) entered[r] = 1;
        } else if (!geo[r].contains(x) && geo[r].distance(x) > slack) {
          run.order_violation = true;
          return false;
        }
      }
      return true;
    });
    if (run.node >= 0) {
      int e = irr.elements[run.node], p = irr.pred[run.node];
      if (geo[p].contains(terminal))
        run.outcome = 1;
      else if (geo[e].contains(terminal))
        run.outcome = 0;
      else
        run.outcome = 2;
    } else {
      run.outcome = geo[top].contains(terminal) ? 1 : 0;
    }
  });

  rep.nodes.resize(irr.elements.size());
  for (std::size_t k = 0; k < irr.elements.size(); ++k)
    rep.nodes[k].lattice_index = irr.elements[k];
  for (std::size_t pi = 0; pi < plan.size(); ++pi) {
    const Run& run = plan[pi];
    if (run.order_violation) {
      ++rep.order_violations;
      if (!rep.failure) {
        rep.pass = false;
        rep.failure = Violation{
            "OrderViolation", "trajectory " + std::to_string(pi) +
                                  " left a region it had entered"};
      }
    }
    if (run.node >= 0) {
      auto& node = rep.nodes[run.node];
      ++node.runs;
      if (run.outcome == 0) ++node.stayed;
      if (run.outcome == 1) ++node.descended;
      if (run.outcome == 2) {
        ++node.lost;
        rep.pass = false;
        if (!rep.failure)
          rep.failure = Violation{"OrderViolation",
                                  "trajectory " + std::to_string(pi) +
                                      " ended outside its starting region"};
      }
    } else {
      ++rep.complement_runs;
      if (run.outcome == 1) ++rep.complement_descents;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Perturbation

VerificationReport run_verification(const FieldSampler& fs,
                                    const TileComplex& tiles,
                                    const RegionLattice& rl,
                                    const VerifyOptions& opt) {
  VerificationReport rep;
  rep.delta = fs.delta();
  rep.samples_per_edge = opt.samples_per_edge;
  rep.trajectories = opt.trajectories;
  rep.dt = opt.dt;
  rep.horizon = opt.horizon;
  rep.seed = opt.seed;
  for (std::size_t k = 0; k < rl.regions.size(); ++k) {
    const auto& region = rl.regions[k];
    if (region.inventory.empty()) continue;
    RegionVerification rv;
    rv.lattice_index = static_cast<int>(k);
    rv.transversality = check_transversality(fs, region, opt.samples_per_edge);
    if (!rv.transversality.pass) rep.pass = false;
    for (const auto& e : region.inventory) {
      bool wide = e.kind == Element::Kind::ChipWide;
      if (!wide && e.kind != Element::Kind::ChipNarrow) continue;
      auto cv = make_chip(tiles, wide, e.ci, e.cj, e.wall, e.pi, e.pj);
      if (std::holds_alternative<Violation>(cv)) {
        rv.chips.push_back(ChipQuadratic{});  // pass=false placeholder
        rep.pass = false;
        continue;
      }
      auto qv = chip_quadratic(tiles, std::get<Chip>(cv));
      if (auto* q = std::get_if<ChipQuadratic>(&qv)) {
        rv.chips.push_back(*q);
        if (!q->pass) rep.pass = false;
      } else {
        rv.chips.push_back(ChipQuadratic{});
        rep.pass = false;
      }
    }
    // Per-region salt keeps the trajectory streams decorrelated without
    // giving up determinism.
    std::uint64_t rseed = mix64(opt.seed ^ mix64(k + 1));
    rv.invariance = check_forward_invariance(fs, tiles, region,
                                             opt.trajectories, opt.dt,
                                             opt.horizon, rseed);
    if (!rv.invariance.pass) rep.pass = false;
    if (opt.perturb_eps) {
      rv.perturbation = perturb_and_recheck(fs, tiles, region,
                                            *opt.perturb_eps,
                                            opt.trajectories, opt.dt,
                                            opt.horizon, rseed);
      if (!rv.perturbation->pass_at_epsilon) rep.pass = false;
    }
    rep.regions.push_back(std::move(rv));
  }
  rep.localization = localize_morse_sets(fs, tiles, rl, opt.trajectories,
                                         opt.dt, opt.horizon, opt.seed);
  if (!rep.localization.pass) rep.pass = false;
  return rep;
}

PerturbationReport perturb_and_recheck(const FieldSampler& fs,
                                       const TileComplex& tiles,
                                       const Region& region, double epsilon,
                                       int runs, double dt, double horizon,
                                       std::uint64_t seed) {
  PerturbationReport rep;
  rep.epsilon = epsilon;
  rep.seed = seed;
  auto passes = [&](double eps) {
    FieldSampler bumped = eps > 0 ? fs.with_bump(eps, seed) : fs;
    return check_forward_invariance(bumped, tiles, region, runs, dt, horizon,
                                    seed)
        .pass;
  };
  rep.pass_at_epsilon = passes(epsilon);

  // Bracket then bisect the threshold sup-norm.
  double lo = 0, hi = std::max(epsilon, 0.25);
  int doublings = 0;
  while (passes(hi) && doublings < 8) {
    lo = hi;
    hi *= 2;
    ++doublings;
  }
  if (doublings == 8) {
    rep.largest_passing = lo;  // never failed up to the cap
    return rep;
  }
  for (int it = 0; it < rep.bisection_iters; ++it) {
    double mid = (lo + hi) / 2;
    (passes(mid) ? lo : hi) = mid;
  }
  rep.largest_passing = lo;
  return rep;
}

}  // namespace csw
