#include "csw/order.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <sstream>

namespace csw {

std::vector<std::vector<int>> strongly_connected_components(const Digraph& g) {
  // Iterative Tarjan; components complete in reverse topological order.
  std::vector<int> low(g.n, -1), num(g.n, -1), stk;
  std::vector<bool> on(g.n, false);
  std::vector<std::vector<int>> comps;
  int counter = 0;

  struct Frame {
    int v;
    size_t next;
  };
  for (int root = 0; root < g.n; ++root) {
    if (num[root] != -1) continue;
    std::vector<Frame> call{{root, 0}};
    num[root] = low[root] = counter++;
    stk.push_back(root);
    on[root] = true;
    while (!call.empty()) {
      Frame& f = call.back();
      if (f.next < g.out[f.v].size()) {
        int w = g.out[f.v][f.next++];
        if (num[w] == -1) {
          num[w] = low[w] = counter++;
          stk.push_back(w);
          on[w] = true;
          call.push_back({w, 0});
        } else if (on[w]) {
          low[f.v] = std::min(low[f.v], num[w]);
        }
      } else {
        int v = f.v;
        call.pop_back();
        if (!call.empty())
          low[call.back().v] = std::min(low[call.back().v], low[v]);
        if (low[v] == num[v]) {
          std::vector<int> comp;
          int w;
          do {
            w = stk.back();
            stk.pop_back();
            on[w] = false;
            comp.push_back(w);
          } while (w != v);
          std::sort(comp.begin(), comp.end());
          comps.push_back(std::move(comp));
        }
      }
    }
  }
  return comps;
}

Bits reachable_from(const Digraph& g, const Bits& seeds) {
  Bits seen = seeds;
  std::vector<int> work;
  for (int v = 0; v < g.n; ++v)
    if (seeds.test(v)) work.push_back(v);
  while (!work.empty()) {
    int v = work.back();
    work.pop_back();
    for (int w : g.out[v])
      if (!seen.test(w)) {
        seen.set(w);
        work.push_back(w);
      }
  }
  return seen;
}

std::optional<Poset> Poset::from_less_pairs(
    int n, const std::vector<std::pair<int, int>>& less) {
  std::vector<std::vector<int>> up(n);
  for (auto [a, b] : less) up[a].push_back(b);

  Poset p;
  p.n = n;
  p.below.assign(n, Bits(n));
  p.above.assign(n, Bits(n));

  // above[a] = forward closure in the "less-than" digraph.
  for (int a = 0; a < n; ++a) {
    Bits seen(n);
    std::vector<int> work{a};
    while (!work.empty()) {
      int v = work.back();
      work.pop_back();
      for (int w : up[v])
        if (!seen.test(w)) {
          seen.set(w);
          work.push_back(w);
        }
    }
    if (seen.test(a)) return std::nullopt;  // cycle
    seen.set(a);
    p.above[a] = seen;
  }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (p.above[a].test(b)) p.below[b].set(a);

  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      if (a == b || !p.above[a].test(b)) continue;
      // cover iff nothing sits strictly between
      Bits between = p.above[a] & p.below[b];
      if (between.count() == 2) p.covers.emplace_back(a, b);
    }
  std::sort(p.covers.begin(), p.covers.end());
  return p;
}

namespace {

// Iterated degree-signature refinement; returns a label per element.
std::vector<std::uint64_t> poset_signatures(const Poset& p) {
  std::vector<std::uint64_t> sig(p.n);
  for (int v = 0; v < p.n; ++v)
    sig[v] = (p.below[v].count() << 20) ^ p.above[v].count();
  for (int round = 0; round < p.n; ++round) {
    std::vector<std::uint64_t> next(p.n);
    for (int v = 0; v < p.n; ++v) {
      std::vector<std::uint64_t> lo, hi;
      for (int u = 0; u < p.n; ++u) {
        if (u == v) continue;
        if (p.below[v].test(u)) lo.push_back(sig[u]);
        if (p.above[v].test(u)) hi.push_back(sig[u]);
      }
      std::sort(lo.begin(), lo.end());
      std::sort(hi.begin(), hi.end());
      std::uint64_t h = sig[v];
      for (auto x : lo) h = h * 1000003 + x;
      h = h * 998244353 + 17;
      for (auto x : hi) h = h * 1000003 + x;
      next[v] = h;
    }
    if (next == sig) break;
    sig = next;
  }
  return sig;
}

bool extend_match(const Poset& a, const Poset& b,
                  const std::vector<std::vector<int>>& candidates,
                  std::vector<int>& match, std::vector<bool>& used, size_t v) {
  if (v == match.size()) return true;
  for (int w : candidates[v]) {
    if (used[w]) continue;
    bool ok = true;
    for (size_t u = 0; u < v && ok; ++u) {
      if (a.leq(static_cast<int>(u), static_cast<int>(v)) !=
          b.leq(match[u], w))
        ok = false;
      if (a.leq(static_cast<int>(v), static_cast<int>(u)) !=
          b.leq(w, match[u]))
        ok = false;
    }
    if (!ok) continue;
    match[v] = w;
    used[w] = true;
    if (extend_match(a, b, candidates, match, used, v + 1)) return true;
    used[w] = false;
  }
  return false;
}

}  // namespace

bool poset_isomorphic(const Poset& a, const Poset& b) {
  if (a.n != b.n) return false;
  auto sa = poset_signatures(a), sb = poset_signatures(b);
  {
    auto ca = sa, cb = sb;
    std::sort(ca.begin(), ca.end());
    std::sort(cb.begin(), cb.end());
    if (ca != cb) return false;
  }
  std::vector<std::vector<int>> candidates(a.n);
  for (int v = 0; v < a.n; ++v)
    for (int w = 0; w < b.n; ++w)
      if (sa[v] == sb[w]) candidates[v].push_back(w);
  std::vector<int> match(a.n, -1);
  std::vector<bool> used(b.n, false);
  return extend_match(a, b, candidates, match, used, 0);
}

int FiniteLattice::join(int a, int b) const {
  if (!join_tab.empty()) return join_tab[static_cast<size_t>(a) * n + b];
  Bits ub = above[a] & above[b];
  int best = -1;
  for (int c = 0; c < n; ++c)
    if (ub.test(c) && (best == -1 || leq(c, best))) best = c;
  return best;
}

int FiniteLattice::meet(int a, int b) const {
  if (!meet_tab.empty()) return meet_tab[static_cast<size_t>(a) * n + b];
  Bits lb = below[a] & below[b];
  int best = -1;
  for (int c = 0; c < n; ++c)
    if (lb.test(c) && (best == -1 || leq(best, c))) best = c;
  return best;
}

std::vector<std::pair<int, int>> FiniteLattice::cover_pairs() const {
  std::vector<std::pair<int, int>> covers;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      if (a == b || !leq(a, b)) continue;
      if ((above[a] & below[b]).count() == 2) covers.emplace_back(a, b);
    }
  std::sort(covers.begin(), covers.end());
  return covers;
}

std::optional<FiniteLattice> FiniteLattice::from_below(
    std::vector<Bits> below, std::vector<std::uint64_t> payload) {
  FiniteLattice l;
  l.n = static_cast<int>(below.size());
  l.below = std::move(below);
  l.payload = std::move(payload);
  l.above.assign(l.n, Bits(l.n));
  for (int a = 0; a < l.n; ++a)
    for (int b = 0; b < l.n; ++b)
      if (l.below[b].test(a)) l.above[a].set(b);

  for (int c = 0; c < l.n; ++c) {
    if (l.above[c].count() == static_cast<size_t>(l.n)) l.bottom = c;
    if (l.below[c].count() == static_cast<size_t>(l.n)) l.top = c;
  }
  if (l.bottom < 0 || l.top < 0) return std::nullopt;

  bool small = l.n <= 1024;
  if (small) {
    l.join_tab.assign(static_cast<size_t>(l.n) * l.n, -1);
    l.meet_tab.assign(static_cast<size_t>(l.n) * l.n, -1);
  }
  for (int a = 0; a < l.n; ++a)
    for (int b = a; b < l.n; ++b) {
      Bits ub = l.above[a] & l.above[b];
      Bits lb = l.below[a] & l.below[b];
      int lub = -1, glb = -1;
      for (int c = 0; c < l.n; ++c) {
        if (ub.test(c) && (lub == -1 || l.leq(c, lub))) lub = c;
        if (lb.test(c) && (glb == -1 || l.leq(glb, c))) glb = c;
      }
      // lub must dominate every upper bound candidate; otherwise no unique
      // least element exists and this order is not a lattice.
      if (lub == -1 || glb == -1) return std::nullopt;
      for (int c = 0; c < l.n; ++c) {
        if (ub.test(c) && !l.leq(lub, c)) return std::nullopt;
        if (lb.test(c) && !l.leq(c, glb)) return std::nullopt;
      }
      if (small) {
        l.join_tab[static_cast<size_t>(a) * l.n + b] = lub;
        l.join_tab[static_cast<size_t>(b) * l.n + a] = lub;
        l.meet_tab[static_cast<size_t>(a) * l.n + b] = glb;
        l.meet_tab[static_cast<size_t>(b) * l.n + a] = glb;
      }
    }
  return l;
}

std::optional<std::array<int, 3>> FiniteLattice::distributivity_violation()
    const {
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        if (meet(a, join(b, c)) != join(meet(a, b), meet(a, c)))
          return std::array<int, 3>{a, b, c};
  return std::nullopt;
}

std::variant<FiniteLattice, Violation> down_set_lattice(const Poset& p) {
  if (p.n > 20)
    return Violation{"TooLarge",
                     "down-set enumeration limited to posets with 20 elements"};
  std::vector<std::uint64_t> belowmask(p.n, 0);
  for (int v = 0; v < p.n; ++v)
    for (int u = 0; u < p.n; ++u)
      if (p.below[v].test(u)) belowmask[v] |= std::uint64_t(1) << u;

  std::vector<std::uint64_t> downs;
  const std::uint64_t limit = std::uint64_t(1) << p.n;
  for (std::uint64_t mask = 0; mask < limit; ++mask) {
    bool closed = true;
    for (int v = 0; v < p.n && closed; ++v)
      if (mask >> v & 1)
        if ((belowmask[v] & ~mask) != 0) closed = false;
    if (closed) downs.push_back(mask);
  }
  std::sort(downs.begin(), downs.end(), [](std::uint64_t a, std::uint64_t b) {
    auto ca = std::popcount(a), cb = std::popcount(b);
    return ca != cb ? ca < cb : a < b;
  });

  int m = static_cast<int>(downs.size());
  std::vector<Bits> below(m, Bits(m));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      if ((downs[a] & ~downs[b]) == 0) below[b].set(a);
  auto lat = FiniteLattice::from_below(std::move(below), std::move(downs));
  if (!lat)
    return Violation{"TooLarge", "down-set family failed lattice closure"};
  return std::move(*lat);
}

std::variant<JoinIrreducibles, Violation> join_irreducibles(
    const FiniteLattice& l) {
  if (auto bad = l.distributivity_violation()) {
    std::ostringstream os;
    os << "elements " << (*bad)[0] << ";" << (*bad)[1] << ";" << (*bad)[2]
       << " violate distributivity";
    return Violation{"NotDistributive", os.str()};
  }
  auto covers = l.cover_pairs();
  std::vector<std::vector<int>> preds(l.n);
  for (auto [lo, hi] : covers) preds[hi].push_back(lo);

  JoinIrreducibles ji;
  for (int v = 0; v < l.n; ++v)
    if (preds[v].size() == 1) {
      ji.elements.push_back(v);
      ji.pred.push_back(preds[v][0]);
    }
  std::vector<std::pair<int, int>> less;
  for (size_t a = 0; a < ji.elements.size(); ++a)
    for (size_t b = 0; b < ji.elements.size(); ++b)
      if (a != b && l.leq(ji.elements[a], ji.elements[b]))
        less.emplace_back(static_cast<int>(a), static_cast<int>(b));
  ji.order = *Poset::from_less_pairs(static_cast<int>(ji.elements.size()), less);
  return ji;
}

std::vector<std::vector<int>> morse_decomposition(const Digraph& g) {
  auto comps = strongly_connected_components(g);
  std::vector<std::vector<int>> morse;
  for (auto& c : comps) {
    bool internal_edge = false;
    if (c.size() > 1) {
      internal_edge = true;
    } else {
      int v = c[0];
      internal_edge =
          std::find(g.out[v].begin(), g.out[v].end(), v) != g.out[v].end();
    }
    if (internal_edge) morse.push_back(std::move(c));
  }
  return morse;
}

MorseGraph morse_graph(const Digraph& g) {
  MorseGraph mg;
  mg.sets = morse_decomposition(g);
  int m = static_cast<int>(mg.sets.size());

  std::vector<Bits> reach(m);
  for (int k = 0; k < m; ++k) {
    Bits seed(g.n);
    for (int v : mg.sets[k]) seed.set(v);
    reach[k] = reachable_from(g, seed);
  }
  std::vector<std::pair<int, int>> less;
  for (int p = 0; p < m; ++p)
    for (int q = 0; q < m; ++q) {
      if (p == q) continue;
      // q below p when p's set reaches q's set (downstream is smaller)
      if (reach[p].test(mg.sets[q][0])) less.emplace_back(q, p);
    }
  mg.order = *Poset::from_less_pairs(m, less);
  return mg;
}

int AttractorLattice::find(const Bits& a) const {
  for (size_t k = 0; k < attractors.size(); ++k)
    if (attractors[k] == a) return static_cast<int>(k);
  return -1;
}

std::variant<AttractorLattice, Violation> attractor_lattice(
    const Digraph& g, const MorseGraph& mg) {
  int m = static_cast<int>(mg.sets.size());
  if (m > 20)
    return Violation{"TooLarge",
                     "attractor lattice limited to 20 Morse nodes"};

  std::vector<Bits> closure(m);
  for (int k = 0; k < m; ++k) {
    Bits seed(g.n);
    for (int v : mg.sets[k]) seed.set(v);
    closure[k] = reachable_from(g, seed);
  }

  std::vector<std::uint64_t> downmask(m, 0);
  for (int v = 0; v < m; ++v)
    for (int u = 0; u < m; ++u)
      if (mg.order.below[v].test(u)) downmask[v] |= std::uint64_t(1) << u;

  // Enumerate down-sets of the Morse poset; each yields an attractor.
  std::vector<std::uint64_t> downs;
  const std::uint64_t limit = std::uint64_t(1) << m;
  for (std::uint64_t mask = 0; mask < limit; ++mask) {
    bool closed = true;
    for (int v = 0; v < m && closed; ++v)
      if (mask >> v & 1)
        if ((downmask[v] & ~mask) != 0) closed = false;
    if (closed) downs.push_back(mask);
  }

  std::map<std::vector<bool>, std::pair<Bits, std::uint64_t>> dedup;
  for (auto mask : downs) {
    Bits a(g.n);
    for (int k = 0; k < m; ++k)
      if (mask >> k & 1) a |= closure[k];
    std::vector<bool> key(g.n);
    for (int v = 0; v < g.n; ++v) key[v] = a.test(v);
    dedup.emplace(std::move(key), std::make_pair(a, mask));
  }

  AttractorLattice al;
  for (auto& [key, val] : dedup) {
    al.attractors.push_back(val.first);
    al.downsets.push_back(val.second);
  }
  // canonical order: size, then set bits compared low-to-high
  std::vector<size_t> idx(al.attractors.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](size_t x, size_t y) {
    const Bits &a = al.attractors[x], &b = al.attractors[y];
    if (a.count() != b.count()) return a.count() < b.count();
    for (int v = 0; v < g.n; ++v)
      if (a.test(v) != b.test(v)) return b.test(v);
    return false;
  });
  std::vector<Bits> A;
  std::vector<std::uint64_t> D;
  for (size_t k : idx) {
    A.push_back(al.attractors[k]);
    D.push_back(al.downsets[k]);
  }
  al.attractors = std::move(A);
  al.downsets = std::move(D);

  int count = static_cast<int>(al.attractors.size());
  std::vector<Bits> below(count, Bits(count));
  for (int a = 0; a < count; ++a)
    for (int b = 0; b < count; ++b)
      if (al.attractors[a].is_subset_of(al.attractors[b])) below[b].set(a);
  auto lat = FiniteLattice::from_below(std::move(below), al.downsets);
  if (!lat)
    return Violation{"LatticePropertyViolation",
                     "attractor family is not a lattice"};
  al.lat = std::move(*lat);
  return al;
}

Bits meet_attractor(const Digraph& g, const Bits& a, const Bits& b) {
  Bits s = a & b;
  bool changed = true;
  while (changed) {  // drop vertices whose image leaves the set
    changed = false;
    for (int v = 0; v < g.n; ++v)
      if (s.test(v))
        for (int w : g.out[v])
          if (!s.test(w)) {
            s.reset(v);
            changed = true;
            break;
          }
  }
  // drop vertices with no preimage inside (cannot lie in any attractor)
  std::vector<std::vector<int>> in(g.n);
  for (int v = 0; v < g.n; ++v)
    for (int w : g.out[v]) in[w].push_back(v);
  changed = true;
  while (changed) {
    changed = false;
    for (int v = 0; v < g.n; ++v) {
      if (!s.test(v)) continue;
      bool fed = false;
      for (int u : in[v])
        if (s.test(u)) {
          fed = true;
          break;
        }
      if (!fed) {
        s.reset(v);
        changed = true;
      }
    }
  }
  return s;
}

std::variant<Bits, Violation> forward_invariant_core(const Digraph& g,
                                                     const Bits& n) {
  for (int v = 0; v < g.n; ++v)
    if (n.test(v))
      for (int w : g.out[v])
        if (!n.test(w))
          return Violation{"NotForwardInvariant",
                           "vertex " + std::to_string(v) +
                               " maps outside the set (to " +
                               std::to_string(w) + ")"};
  Bits core(g.n);
  for (int v = 0; v < g.n; ++v)
    if (n.test(v))
      for (int u = 0; u < g.n; ++u)
        if (n.test(u) &&
            std::find(g.out[u].begin(), g.out[u].end(), v) != g.out[u].end()) {
          core.set(v);
          break;
        }
  return core;
}

}  // namespace csw
