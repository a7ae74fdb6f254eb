#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "csw/order.hpp"
#include "csw/system.hpp"
#include "csw/tiles.hpp"

namespace csw {

using Vec2 = std::array<double, 2>;

// Seeded smooth perturbation, sup-norm bounded by eps: each component is
// eps * sin(w x + p) * cos(w' y + p').
struct Bump {
  double eps = 0;
  std::array<double, 8> coef{};  // w1,p1,w2,p2 for component 1, then 2
};

// Concrete continuous nonlinearity for one system at one collar width:
// constant on the shrunk cell tiles, linear across wall collars in the
// switching component, bilinear on the grid-point squares.  Everything is
// flattened to doubles once so evaluation is branchy arithmetic only.
class FieldSampler {
 public:
  FieldSampler(const SwitchingSystem& sys, double delta);

  const SwitchingSystem& system() const { return *sys_; }
  double delta() const { return delta_; }
  const char* scheme() const { return "linear-bilinear"; }

  Vec2 f(const Vec2& x) const;  // the interpolated nonlinearity
  Vec2 V(const Vec2& x) const;  // -Gamma x + f(x) + bump

  // Largest switching-component gap across any wall, over the collar width:
  // a Lipschitz constant for f.
  double lipschitz() const { return max_gap_ / (2 * delta_); }

  FieldSampler with_bump(double eps, std::uint64_t seed) const;
  const Bump& bump() const { return bump_; }

  const std::array<double, 2>& bbox() const { return bbox_; }

 private:
  const SwitchingSystem* sys_;
  double delta_;
  std::array<double, 2> gamma_, bbox_;
  std::vector<double> xs_, ys_;                 // interior thresholds
  std::vector<std::array<double, 2>> lam_;      // by cell index
  double max_gap_ = 0;
  Bump bump_;
};

std::variant<FieldSampler, Violation> make_fdelta(const SwitchingSystem& sys,
                                                  const Rat& delta);

// Checked evaluation on (0, bbox]^2; OutOfDomain elsewhere.
std::variant<Vec2, Violation> vector_field(const FieldSampler& fs,
                                           const Vec2& x);

struct Trajectory {
  Vec2 x0{};
  double dt = 0, horizon = 0;
  std::vector<Vec2> states;            // states[0] == x0
  std::optional<std::size_t> exit_step;  // first step outside (0,bbox]^2
};

// Fixed-step RK4; no clamping, no event detection (the field is
// continuous).  Records every step.
Trajectory integrate(const FieldSampler& fs, Vec2 x0, double dt,
                     double horizon);

// Double-precision realization of a region's inventory for containment and
// distance queries plus area-weighted sampling.
class RegionGeometry {
 public:
  RegionGeometry(const TileComplex& tiles, const Region& region);

  bool empty() const { return polys_.empty(); }
  double area() const { return area_; }
  bool contains(const Vec2& x) const;
  double distance(const Vec2& x) const;  // 0 inside the closed union
  Vec2 sample(std::mt19937_64& rng) const;

 private:
  int tile_id(const Vec2& x) const;  // partition piece under the point

  std::vector<std::vector<Vec2>> polys_;  // counterclockwise, convex
  std::vector<double> acc_area_;          // cumulative, for sampling
  double area_ = 0;
  // Fast path: tile-occupancy mask over the partition pieces, so a
  // containment query is one band lookup; polygons cover the chips and
  // seam points.
  std::vector<double> xs_, ys_;
  double delta_ = 0;
  int cols_ = 0, rows_ = 0;
  std::vector<char> mask_;
};

struct EdgeCheck {
  std::size_t loop = 0, edge = 0;
  double worst = 0;  // max over samples of V.n; negative means inward
  Vec2 at{};         // where the worst margin was seen
};

struct TransversalityReport {
  int samples_per_edge = 0;
  std::vector<EdgeCheck> edges;         // interior edges only
  std::optional<double> worst_margin;   // empty when no interior edge
  bool pass = true;
  std::optional<Violation> failure;     // TransversalityFail
};

// Samples V.n along every interior boundary edge (endpoints inset by a
// hair); inward flow means a strictly negative product everywhere.
TransversalityReport check_transversality(const FieldSampler& fs,
                                          const Region& region,
                                          int samples_per_edge);

// The hypotenuse inner product as a quadratic in the collar width:
// T(t,d) = K(t) d^2 + L(t) d + M with K, L affine in the hypotenuse
// parameter t.  Computed against the worst-case focal envelope, so a
// positive verdict covers every admissible field realization.
struct ChipQuadratic {
  bool wide = false;
  double K0 = 0, K1 = 0;  // K(t) = K0 + K1 t
  double L0 = 0, L1 = 0;
  double M = 0;
  double delta_bound = 0;  // min over t of the certified positive range
  double delta_used = 0;
  double min_T = 0;        // min over the t-grid of T(t, delta_used)
  bool pass = false;       // min_T > 0
};

// Coefficients and bound in chip-local frame data: decay rates along the
// wall and along its normal, hypotenuse run a, worst-case focal envelope
// displacements from the grid point.
ChipQuadratic chip_quadratic_frame(double g_along, double g_normal, double a,
                                   double disp_along, double disp_normal,
                                   bool wide, double delta_used,
                                   int grid = 101);

// Frame-normalizes a concrete chip and certifies its quadratic.  The
// incident cell types must match the transversality hypotheses, else
// HypothesesNotMet.
std::variant<ChipQuadratic, Violation> chip_quadratic(const TileComplex& tiles,
                                                      const Chip& chip);

struct InvarianceReport {
  int runs = 0;
  double dt = 0, horizon = 0;
  std::uint64_t seed = 0;
  int escapes = 0;
  int near_misses = 0;      // left the union but within slack
  double max_excursion = 0; // largest distance from the union seen
  bool pass = true;
  std::optional<Violation> failure;  // InvarianceViolation
};

// Integrates seeded random starts inside the region and checks that no
// sample point leaves the closed union by more than the numerical slack
// (1e-9 absolute plus a dt-order term scaled by the local speed).
InvarianceReport check_forward_invariance(const FieldSampler& fs,
                                          const TileComplex& tiles,
                                          const Region& region, int n_traj,
                                          double dt, double horizon,
                                          std::uint64_t seed);

struct NodeLocalization {
  int lattice_index = 0;  // the join-irreducible attractor
  int runs = 0, stayed = 0, descended = 0, lost = 0;
};

struct LocalizationReport {
  std::vector<NodeLocalization> nodes;
  int order_violations = 0;   // a trajectory left a region it had entered
  int complement_runs = 0;    // starts outside the top region
  int complement_descents = 0;
  double top_complement_area = 0;
  std::uint64_t seed = 0;
  bool pass = true;
  std::optional<Violation> failure;  // OrderViolation
};

// Empirical Morse-set localization: tails started in the difference between
// a join-irreducible region and its predecessor stay there or descend, the
// set of regions containing the state only grows along a trajectory, and
// the complement of the top region is reported as the candidate locus of
// any extremal recurrence (no nonemptiness claim).
LocalizationReport localize_morse_sets(const FieldSampler& fs,
                                       const TileComplex& tiles,
                                       const RegionLattice& rl, int runs,
                                       double dt, double horizon,
                                       std::uint64_t seed);

struct PerturbationReport {
  double epsilon = 0;
  bool pass_at_epsilon = true;
  double largest_passing = 0;  // bisection estimate
  int bisection_iters = 8;
  std::uint64_t seed = 0;
};

// Invariance under a seeded trigonometric bump of sup-norm epsilon, plus a
// bisection estimate of the largest sup-norm that still passes.
PerturbationReport perturb_and_recheck(const FieldSampler& fs,
                                       const TileComplex& tiles,
                                       const Region& region, double epsilon,
                                       int runs, double dt, double horizon,
                                       std::uint64_t seed);

// Worker pool size: CONLEY_SWITCH_THREADS when set, else the hardware
// count.  parallel_for runs fn(0..n-1) across workers; callers must write
// disjoint slots so the result is schedule-independent.
int worker_count();
void parallel_for(int n, const std::function<void(int)>& fn);

struct RegionVerification {
  int lattice_index = 0;
  TransversalityReport transversality;
  std::vector<ChipQuadratic> chips;
  InvarianceReport invariance;
  std::optional<PerturbationReport> perturbation;
};

struct VerificationReport {
  double delta = 0;
  int samples_per_edge = 0;
  int trajectories = 0;
  double dt = 0, horizon = 0;
  std::uint64_t seed = 0;
  std::vector<RegionVerification> regions;
  LocalizationReport localization;
  bool pass = true;
};

struct VerifyOptions {
  int samples_per_edge = 100;
  int trajectories = 1000;
  double dt = 1e-3;
  double horizon = 50.0;
  std::uint64_t seed = 1;
  std::optional<double> perturb_eps;  // off unless requested
};

// Full certificate run over every nonempty region of the lattice:
// transversality, chip quadratics, forward invariance, then Morse-set
// localization across the lattice.  Deterministic for fixed options.
VerificationReport run_verification(const FieldSampler& fs,
                                    const TileComplex& tiles,
                                    const RegionLattice& rl,
                                    const VerifyOptions& opt);

}  // namespace csw
