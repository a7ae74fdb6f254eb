#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <map>
#include <random>

#include "csw/field.hpp"
#include "testers.hpp"

using namespace csw;

namespace {

FieldSampler sampler_of(const SwitchingSystem& sys, const Rat& delta) {
  auto res = make_fdelta(sys, delta);
  auto* fs = std::get_if<FieldSampler>(&res);
  REQUIRE(fs);
  return *fs;
}

TileComplex tiles_of(const SwitchingSystem& sys, const Rat& delta) {
  auto res = build_tiles(sys, delta);
  auto* t = std::get_if<TileComplex>(&res);
  REQUIRE(t);
  return *t;
}

Region region_of(const TransitionGraph& stg, const TileComplex& t,
                 std::initializer_list<FaceId> faces) {
  Bits n(stg.verts.size());
  for (const auto& f : faces) n.set(stg.at(f));
  auto res = build_region(stg, t, n);
  auto* r = std::get_if<Region>(&res);
  REQUIRE(r);
  return *r;
}

// 2x2 bistable grid whose upper-right cell supports a narrow chip at the
// grid point: the cell below it drains up and back toward the point.
RawSystem chip_friendly_raw() {
  RawSystem raw;
  raw.gamma = {Rat(1), Rat(1)};
  raw.xi = {{Rat(1), 2}};
  raw.eta = {{Rat(1), 1}};
  raw.lambda[{0, 0}] = {Rat(1, 2), Rat(1, 2)};
  raw.lambda[{1, 0}] = {Rat(1, 2), Rat(3, 2)};
  raw.lambda[{0, 1}] = {Rat(3, 2), Rat(1, 2)};
  raw.lambda[{1, 1}] = {Rat(3, 2), Rat(3, 2)};
  return raw;
}

}  // namespace

TEST_CASE("sampler reproduces the cell, collar, and corner values") {
  auto sys = testers::toggle();
  auto fs = sampler_of(sys, Rat(1, 50));

  auto at = [&](double x, double y) { return fs.f({x, y}); };
  CHECK(at(2.0, 0.5)[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(at(2.0, 0.5)[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(at(1.0, 0.5)[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(at(1.0, 0.5)[1] == doctest::Approx(1.25).epsilon(1e-12));
  CHECK(at(1.0, 1.0)[0] == doctest::Approx(1.25).epsilon(1e-12));
  CHECK(at(1.0, 1.0)[1] == doctest::Approx(1.25).epsilon(1e-12));

  auto v = fs.V({2.0, 0.5});
  CHECK(v[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(0.0).epsilon(1e-12));
  v = fs.V({1.5, 0.5});
  CHECK(v[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(0.0).epsilon(1e-12));
  v = fs.V({1.0, 0.5});
  CHECK(v[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("domain and delta guards") {
  auto sys = testers::toggle();
  auto bad = make_fdelta(sys, Rat(1, 2));
  auto* v = std::get_if<Violation>(&bad);
  REQUIRE(v);
  CHECK(v->code == "DeltaTooLarge");

  auto fs = sampler_of(sys, Rat(1, 50));
  auto out = vector_field(fs, {5.0, 1.0});
  REQUIRE(std::get_if<Violation>(&out));
  CHECK(std::get_if<Violation>(&out)->code == "OutOfDomain");
  auto out2 = vector_field(fs, {-1.0, 1.0});
  REQUIRE(std::get_if<Violation>(&out2));
  auto ok = vector_field(fs, {1.0, 1.0});
  REQUIRE(std::get_if<Vec2>(&ok));
}

TEST_CASE("the sampler stays inside the local value envelope") {
  std::mt19937 rng(67);
  for (int trial = 0; trial < 4; ++trial) {
    auto sys = testers::random_system(rng);
    double delta = 0.01;
    auto fs = sampler_of(sys, Rat(1, 100));
    double bx = to_double(sys.bbox()[0]), by = to_double(sys.bbox()[1]);
    std::uniform_real_distribution<double> ux(1e-6, bx), uy(1e-6, by);
    for (int k = 0; k < 25000; ++k) {
      Vec2 x{ux(rng), uy(rng)};
      Vec2 fx = fs.f(x);
      // Envelope over all cells within collar reach of the point.
      double lo0 = 1e300, hi0 = -1e300, lo1 = 1e300, hi1 = -1e300;
      for (int i = 0; i < sys.cols(); ++i)
        for (int j = 0; j < sys.rows(); ++j) {
          double x0 = to_double(sys.cell_xlo(i)) - delta;
          double x1 = to_double(sys.cell_xhi(i)) + delta;
          double y0 = to_double(sys.cell_ylo(j)) - delta;
          double y1 = to_double(sys.cell_yhi(j)) + delta;
          if (x[0] < x0 || x[0] > x1 || x[1] < y0 || x[1] > y1) continue;
          double l0 = to_double(sys.lambda(i, j)[0]);
          double l1 = to_double(sys.lambda(i, j)[1]);
          lo0 = std::min(lo0, l0);
          hi0 = std::max(hi0, l0);
          lo1 = std::min(lo1, l1);
          hi1 = std::max(hi1, l1);
        }
      CHECK(fx[0] >= lo0 - 1e-9);
      CHECK(fx[0] <= hi0 + 1e-9);
      CHECK(fx[1] >= lo1 - 1e-9);
      CHECK(fx[1] <= hi1 + 1e-9);
    }
  }
}

TEST_CASE("sampled difference quotients respect the Lipschitz constant") {
  auto sys = testers::toggle();
  auto fs = sampler_of(sys, Rat(1, 50));
  CHECK(fs.lipschitz() == doctest::Approx(1.5 / 0.04));
  std::mt19937 rng(71);
  std::uniform_real_distribution<double> u(0.05, 3.95), ang(0, 6.2832);
  for (int k = 0; k < 20000; ++k) {
    Vec2 x{u(rng), u(rng)};
    double a = ang(rng), h = 1e-3;
    Vec2 y{x[0] + h * std::cos(a), x[1] + h * std::sin(a)};
    Vec2 fx = fs.f(x), fy = fs.f(y);
    double df = std::hypot(fx[0] - fy[0], fx[1] - fy[1]);
    CHECK(df <= fs.lipschitz() * h * (1 + 1e-9) + 1e-12);
  }
}

TEST_CASE("trajectories settle onto the attracting focal point") {
  auto sys = testers::toggle();
  auto fs = sampler_of(sys, Rat(1, 50));
  auto t = integrate(fs, {1.5, 0.5}, 1e-3, 20.0);
  CHECK(!t.exit_step);
  const auto& xT = t.states.back();
  CHECK(std::hypot(xT[0] - 2.0, xT[1] - 0.5) < 1e-6);

  auto still = integrate(fs, {2.0, 0.5}, 1e-3, 5.0);
  const auto& xS = still.states.back();
  CHECK(std::hypot(xS[0] - 2.0, xS[1] - 0.5) < 1e-12);
}

TEST_CASE("the feedback loop cycles through all four cells in order") {
  auto sys = testers::negfb();
  auto fs = sampler_of(sys, Rat(1, 50));
  auto t = integrate(fs, {1.5, 1.5}, 1e-3, 50.0);
  CHECK(!t.exit_step);
  // Classify every step: the orbit spirals into a focus near the grid
  // point, where quadrant flips come faster than any coarse stride.
  std::vector<std::pair<int, int>> seq;
  for (const auto& s : t.states) {
    std::pair<int, int> cell{s[0] >= 1.0, s[1] >= 1.0};
    if (seq.empty() || seq.back() != cell) seq.push_back(cell);
  }
  REQUIRE(seq.size() >= 37);  // at least nine full turns
  std::map<std::pair<int, int>, std::pair<int, int>> succ{
      {{1, 1}, {0, 1}}, {{0, 1}, {0, 0}}, {{0, 0}, {1, 0}}, {{1, 0}, {1, 1}}};
  // Check the macroscopic turns only: once the spiral around the interior
  // focus shrinks below the focus's offset from the grid point, single
  // quadrants legitimately drop out of the rotation.
  for (std::size_t k = 0; k + 1 < 37; ++k)
    CHECK(succ.at(seq[k]) == seq[k + 1]);
  std::set<std::pair<int, int>> visited(seq.begin(), seq.end());
  CHECK(visited.size() == 4);
}

TEST_CASE("integrator error falls fourth-order with the step") {
  auto sys = testers::valid(testers::single_cell_raw());
  auto fs = sampler_of(sys, Rat(1, 100));
  Vec2 x0{0.3, 1.7};
  double T = 1.0;
  auto exact = [&](double t, double a) { return 1.0 + (a - 1.0) * std::exp(-t); };
  auto err = [&](double dt) {
    auto tr = integrate(fs, x0, dt, T);
    const auto& xT = tr.states.back();
    return std::hypot(xT[0] - exact(T, x0[0]), xT[1] - exact(T, x0[1]));
  };
  double e1 = err(0.1), e2 = err(0.05);
  CHECK(e1 / e2 > 12.0);
  CHECK(e1 / e2 < 20.0);
}

TEST_CASE("bumped fields can push a trajectory off the quadrant") {
  auto sys = testers::toggle();
  auto fs = sampler_of(sys, Rat(1, 50)).with_bump(50.0, 7);
  auto t = integrate(fs, {3.9, 3.9}, 1e-3, 50.0);
  CHECK(t.exit_step);
}

TEST_CASE("chip quadratic coefficients and certified range") {
  auto q = chip_quadratic_frame(1.0, 1.0, 1.0, 2.0, 0.5, false, 0.02);
  CHECK(q.K0 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(q.K1 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(q.L0 == doctest::Approx(-2.5).epsilon(1e-12));
  CHECK(q.L1 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(q.M == doctest::Approx(0.25).epsilon(1e-12));
  double root = (2.5 - std::sqrt(5.25)) / 2;  // 0.10435607...
  CHECK(q.delta_bound == doctest::Approx(root).epsilon(1e-12));
  CHECK(q.min_T == doctest::Approx(0.0004 - 0.05 + 0.25).epsilon(1e-12));
  CHECK(q.pass);

  // Equal decay rates keep the wide-chip leading coefficient constant.
  auto w = chip_quadratic_frame(1.0, 1.0, 1.0, 2.0, 0.5, true, 0.02);
  CHECK(w.K0 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w.K1 == doctest::Approx(0.0).epsilon(1e-12));

  // A strongly lopsided normal rate flips K negative on part of the
  // hypotenuse; the certified range stays positive and sharp.
  auto k = chip_quadratic_frame(1.0, 4.0, 1.0, 0.5, 0.5, true, 0.01);
  CHECK(k.K0 + k.K1 * 0.0 < 0);
  CHECK(k.delta_bound > 0);
  CHECK(k.pass);
  auto above = chip_quadratic_frame(1.0, 4.0, 1.0, 0.5, 0.5, true,
                                    k.delta_bound * 1.5);
  CHECK(!above.pass);
}

TEST_CASE("chip certification demands the right incident cell types") {
  auto sys = testers::valid(chip_friendly_raw());
  auto t = tiles_of(sys, Rat(1, 50));
  FaceId wall{FaceId::Kind::WallY, 1, 1};
  auto chip = std::get<Chip>(make_chip(t, false, 1, 1, wall, 1, 1));
  auto res = chip_quadratic(t, chip);
  auto* q = std::get_if<ChipQuadratic>(&res);
  REQUIRE(q);
  // gamma = (1,1), a = 1, envelope displacements (rho, mu) = (1.5, 0.5);
  // rho reaches 1.5 because the axis x=0 counts as a cell edge for the
  // left column.  So L = -2, M = 0.25, smaller root (2 - sqrt(3))/2.
  CHECK(q->L0 == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(q->M == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(q->delta_bound ==
        doctest::Approx((2.0 - std::sqrt(3.0)) / 2).epsilon(1e-12));
  CHECK(q->pass);

  // The same triple as a wide chip needs the lower cell to not point back
  // toward the grid point, which this system violates.
  auto wide = std::get<Chip>(make_chip(t, true, 1, 1, wall, 1, 1));
  auto wres = chip_quadratic(t, wide);
  auto* v = std::get_if<Violation>(&wres);
  REQUIRE(v);
  CHECK(v->code == "HypothesesNotMet");

  // And the toggle's south-west facing cell fails outright.
  auto tog = testers::toggle();
  auto tt = tiles_of(tog, Rat(1, 50));
  auto tchip = std::get<Chip>(make_chip(tt, false, 1, 1, wall, 1, 1));
  auto tres = chip_quadratic(tt, tchip);
  REQUIRE(std::get_if<Violation>(&tres));
}

TEST_CASE("toggle region edges are sampled strictly inward") {
  auto sys = testers::toggle();
  auto stg = build_stg(sys);
  auto t = tiles_of(sys, Rat(1, 50));
  auto fs = sampler_of(sys, Rat(1, 50));
  auto r = region_of(stg, t, {{FaceId::Kind::CellPoint, 1, 0}});
  auto rep = check_transversality(fs, r, 100);
  CHECK(rep.pass);
  REQUIRE(rep.edges.size() == 2);  // the bbox and axis edges are exterior
  REQUIRE(rep.worst_margin);
  CHECK(*rep.worst_margin == doctest::Approx(-0.48).epsilon(1e-9));
  for (const auto& e : rep.edges) {
    bool left = std::abs(e.worst + 0.98) < 1e-9;
    bool top = std::abs(e.worst + 0.48) < 1e-9;
    CHECK((left || top));
  }
}

TEST_CASE("feedback region has no interior edge to certify") {
  auto sys = testers::negfb();
  auto stg = build_stg(sys);
  auto t = tiles_of(sys, Rat(1, 50));
  auto fs = sampler_of(sys, Rat(1, 50));
  auto rl = std::get<RegionLattice>(region_lattice(stg, t));
  auto rep = check_transversality(fs, rl.regions[1], 100);
  CHECK(rep.pass);
  CHECK(rep.edges.empty());
  CHECK(!rep.worst_margin);
}

TEST_CASE("forward invariance holds and the check detects corruption") {
  auto sys = testers::negfb();
  auto stg = build_stg(sys);
  auto t = tiles_of(sys, Rat(1, 50));
  auto fs = sampler_of(sys, Rat(1, 50));
  auto rl = std::get<RegionLattice>(region_lattice(stg, t));
  auto rep = check_forward_invariance(fs, t, rl.regions[1], 200, 1e-3, 10.0, 42);
  CHECK(rep.pass);
  CHECK(rep.escapes == 0);

  Region broken = rl.regions[1];
  broken.inventory.erase(Element::wall1({FaceId::Kind::WallX, 1, 1}));
  auto bad = check_forward_invariance(fs, t, broken, 200, 1e-3, 10.0, 42);
  CHECK(!bad.pass);
  CHECK(bad.escapes > 0);
  REQUIRE(bad.failure);
  CHECK(bad.failure->code == "InvarianceViolation");
}

TEST_CASE("toggle basin tails stay put and outsiders settle") {
  auto sys = testers::toggle();
  auto stg = build_stg(sys);
  auto t = tiles_of(sys, Rat(1, 50));
  auto fs = sampler_of(sys, Rat(1, 50));
  auto rl = std::get<RegionLattice>(region_lattice(stg, t));
  auto rep = localize_morse_sets(fs, t, rl, 100, 1e-3, 20.0, 11);
  CHECK(rep.pass);
  CHECK(rep.order_violations == 0);
  REQUIRE(rep.nodes.size() == 2);
  for (const auto& node : rep.nodes) {
    CHECK(node.runs == 100);
    CHECK(node.stayed == 100);
    CHECK(node.descended == 0);
    CHECK(node.lost == 0);
  }
  CHECK(rep.top_complement_area ==
        doctest::Approx(16.0 - 2 * (2.98 * 0.98)).epsilon(1e-9));
  CHECK(rep.complement_runs == 100);
  CHECK(rep.complement_descents == 100);
}

TEST_CASE("single-node systems localize trivially") {
  auto sys = testers::negfb();
  auto stg = build_stg(sys);
  auto t = tiles_of(sys, Rat(1, 50));
  auto fs = sampler_of(sys, Rat(1, 50));
  auto rl = std::get<RegionLattice>(region_lattice(stg, t));
  auto rep = localize_morse_sets(fs, t, rl, 60, 1e-3, 10.0, 13);
  CHECK(rep.pass);
  REQUIRE(rep.nodes.size() == 1);
  CHECK(rep.nodes[0].stayed == 60);
  CHECK(rep.complement_runs == 0);
  CHECK(rep.top_complement_area == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("perturbations below the inward margin keep the block trapped") {
  auto sys = testers::toggle();
  auto stg = build_stg(sys);
  auto t = tiles_of(sys, Rat(1, 50));
  auto fs = sampler_of(sys, Rat(1, 50));
  auto r = region_of(stg, t, {{FaceId::Kind::CellPoint, 1, 0}});

  auto base = perturb_and_recheck(fs, t, r, 0.0, 50, 1e-3, 10.0, 5);
  CHECK(base.pass_at_epsilon);
  auto rep = perturb_and_recheck(fs, t, r, 0.1, 50, 1e-3, 10.0, 5);
  CHECK(rep.pass_at_epsilon);
  CHECK(rep.largest_passing >= 0.1);
}

TEST_CASE("worker count respects the thread cap and results agree") {
  auto sys = testers::negfb();
  auto stg = build_stg(sys);
  auto t = tiles_of(sys, Rat(1, 50));
  auto fs = sampler_of(sys, Rat(1, 50));
  auto rl = std::get<RegionLattice>(region_lattice(stg, t));

  setenv("CONLEY_SWITCH_THREADS", "1", 1);
  CHECK(worker_count() == 1);
  auto serial = check_forward_invariance(fs, t, rl.regions[1], 64, 1e-3, 5.0, 9);
  setenv("CONLEY_SWITCH_THREADS", "4", 1);
  CHECK(worker_count() == 4);
  auto parallel = check_forward_invariance(fs, t, rl.regions[1], 64, 1e-3, 5.0, 9);
  unsetenv("CONLEY_SWITCH_THREADS");

  CHECK(serial.escapes == parallel.escapes);
  CHECK(serial.near_misses == parallel.near_misses);
  CHECK(serial.max_excursion == parallel.max_excursion);
}
