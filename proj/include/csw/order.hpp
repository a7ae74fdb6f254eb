#pragma once

#include <boost/dynamic_bitset.hpp>
#include <cstdint>
#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "csw/stg.hpp"

namespace csw {

using Bits = boost::dynamic_bitset<>;

struct Digraph {
  int n = 0;
  std::vector<std::vector<int>> out;

  static Digraph of(const TransitionGraph& stg) {
    return Digraph{static_cast<int>(stg.verts.size()), stg.out};
  }
};

// Strongly connected components, emitted in reverse topological order of the
// condensation (every component precedes the ones that can reach it).
// Deterministic for a fixed vertex order; members sorted ascending.
std::vector<std::vector<int>> strongly_connected_components(const Digraph& g);

// Forward closure of a vertex set.
Bits reachable_from(const Digraph& g, const Bits& seeds);

struct Poset {
  int n = 0;
  std::vector<Bits> below;  // below[p] = {q : q <= p}, includes p
  std::vector<Bits> above;
  std::vector<std::pair<int, int>> covers;  // (lower, upper), sorted

  bool leq(int a, int b) const { return below[b].test(a); }

  // Build from strict relations a < b; fails (nullopt) on a cycle.
  static std::optional<Poset> from_less_pairs(
      int n, const std::vector<std::pair<int, int>>& less);
};

bool poset_isomorphic(const Poset& a, const Poset& b);

// Finite lattice over an explicit order; join/meet resolved as unique
// least-upper/greatest-lower bounds (tables cached for small lattices).
// `payload`, when nonempty, carries each element as a bitmask over some base
// set with join = union and meet = intersection.
struct FiniteLattice {
  int n = 0;
  std::vector<Bits> below, above;
  std::vector<std::uint64_t> payload;
  int bottom = -1, top = -1;
  std::vector<int> join_tab, meet_tab;  // n*n, empty when n too large

  bool leq(int a, int b) const { return below[b].test(a); }
  int join(int a, int b) const;
  int meet(int a, int b) const;
  std::vector<std::pair<int, int>> cover_pairs() const;

  // Verifies every pair has a unique lub and glb; nullopt otherwise.
  static std::optional<FiniteLattice> from_below(std::vector<Bits> below,
                                                 std::vector<std::uint64_t> payload = {});

  // First triple (a,b,c) with a∧(b∨c) != (a∧b)∨(a∧c), if any.
  std::optional<std::array<int, 3>> distributivity_violation() const;
};

// All down-sets of a poset ordered by inclusion; sorted by (size, mask).
// Guard: |P| <= 20, else TooLarge.
std::variant<FiniteLattice, Violation> down_set_lattice(const Poset& p);

struct JoinIrreducibles {
  std::vector<int> elements;  // lattice indices with exactly one cover below
  std::vector<int> pred;      // that unique covering predecessor
  Poset order;                // induced order on `elements`
};

// Requires a distributive lattice; the violating triple is reported in the
// violation detail as "a;b;c".
std::variant<JoinIrreducibles, Violation> join_irreducibles(
    const FiniteLattice& l);

struct MorseGraph {
  std::vector<std::vector<int>> sets;  // recurrent components, sorted members
  Poset order;                         // q <= p iff set p reaches set q
};

// Strongly connected components with at least one edge (self-loops count).
std::vector<std::vector<int>> morse_decomposition(const Digraph& g);
MorseGraph morse_graph(const Digraph& g);

struct AttractorLattice {
  std::vector<Bits> attractors;          // canonical order: (size, bits)
  std::vector<std::uint64_t> downsets;   // corresponding Morse down-sets
  FiniteLattice lat;                     // ordered by inclusion
  int find(const Bits& a) const;         // -1 when absent
};

// Att(F) generated by the forward closures of the Morse sets under union;
// guard: at most 20 Morse nodes.
std::variant<AttractorLattice, Violation> attractor_lattice(
    const Digraph& g, const MorseGraph& mg);

// Largest attractor inside the intersection: prune vertices whose image
// leaves the set, then vertices with no preimage inside, to a fixed point.
Bits meet_attractor(const Digraph& g, const Bits& a, const Bits& b);

// Subset of N with a preimage inside N; N must be forward invariant.
std::variant<Bits, Violation> forward_invariant_core(const Digraph& g,
                                                     const Bits& n);

}  // namespace csw
