#include "csw/system.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace csw {

const char* cell_type_name(CellType t) {
  switch (t) {
    case CellType::A: return "A";
    case CellType::N: return "N";
    case CellType::NE: return "NE";
    case CellType::E: return "E";
    case CellType::SE: return "SE";
    case CellType::S: return "S";
    case CellType::SW: return "SW";
    case CellType::W: return "W";
    case CellType::NW: return "NW";
  }
  return "?";
}

Rat SwitchingSystem::xline(int k) const {
  if (k == 0) return Rat(0);
  if (k <= nx()) return xi_[k - 1].value;
  return bbox_[0];
}

Rat SwitchingSystem::yline(int k) const {
  if (k == 0) return Rat(0);
  if (k <= ny()) return eta_[k - 1].value;
  return bbox_[1];
}

const std::array<Rat, 2>& SwitchingSystem::lambda(int i, int j) const {
  return lambda_[cell_index(i, j)];
}

std::array<Rat, 2> SwitchingSystem::focal(int i, int j) const {
  const auto& l = lambda(i, j);
  return {l[0] / gamma_[0], l[1] / gamma_[1]};
}

CellType SwitchingSystem::cell_type(int i, int j) const {
  auto phi = focal(i, j);
  // -1 west/south of the cell, 0 inside, +1 east/north.  The unbounded side
  // of a boundary cell never loses: focal points are finite.
  auto side = [](const Rat& p, const Rat& lo, const Rat& hi,
                 bool unbounded_hi) {
    if (p < lo) return -1;
    if (!unbounded_hi && p > hi) return 1;
    return 0;
  };
  int sx = side(phi[0], cell_xlo(i), i == nx() ? Rat(0) : xi_[i].value, i == nx());
  int sy = side(phi[1], cell_ylo(j), j == ny() ? Rat(0) : eta_[j].value, j == ny());
  if (sx == 0 && sy == 0) return CellType::A;
  if (sx == 0) return sy > 0 ? CellType::N : CellType::S;
  if (sy == 0) return sx > 0 ? CellType::E : CellType::W;
  if (sx > 0) return sy > 0 ? CellType::NE : CellType::SE;
  return sy > 0 ? CellType::NW : CellType::SW;
}

namespace {

std::string rs(const Rat& r) { return format_rational(r); }

void check_thresholds(const std::vector<Threshold>& list, const char* axis,
                      std::vector<Violation>& out) {
  Rat prev(0);
  for (size_t k = 0; k < list.size(); ++k) {
    if (!(list[k].value > prev)) {
      std::ostringstream os;
      os << axis << " threshold " << k + 1 << " = " << rs(list[k].value)
         << " does not exceed its predecessor " << rs(prev);
      out.push_back({"NonMonotoneThresholds", os.str()});
    }
    if (list[k].tag != 1 && list[k].tag != 2) {
      std::ostringstream os;
      os << axis << " threshold " << k + 1 << " has tag " << list[k].tag
         << "; expected 1 or 2";
      out.push_back({"ParseError", os.str()});
    }
    prev = list[k].value;
  }
}

}  // namespace

std::variant<SwitchingSystem, std::vector<Violation>> SwitchingSystem::validate(
    const RawSystem& raw) {
  std::vector<Violation> bad;

  const int I = static_cast<int>(raw.xi.size());
  const int J = static_cast<int>(raw.eta.size());
  if (I > 32 || J > 32)
    bad.push_back({"TooLarge", "grid limited to 32 thresholds per axis"});

  for (int c = 0; c < 2; ++c)
    if (!(raw.gamma[c] > 0))
      bad.push_back({"NonPositiveRate",
                     std::string("gamma_") + char('1' + c) + " = " +
                         rs(raw.gamma[c]) + " must be positive"});

  check_thresholds(raw.xi, "x", bad);
  check_thresholds(raw.eta, "y", bad);

  // Lambda table must cover each cell exactly once.
  const int cols = I + 1, rows = J + 1;
  std::vector<std::array<Rat, 2>> lam(static_cast<size_t>(cols) * rows);
  std::vector<bool> seen(lam.size(), false);
  for (const auto& [key, val] : raw.lambda) {
    auto [i, j] = key;
    if (i < 0 || i >= cols || j < 0 || j >= rows) {
      std::ostringstream os;
      os << "lambda entry (" << i << "," << j << ") outside the " << cols
         << "x" << rows << " cell grid";
      bad.push_back({"ParseError", os.str()});
      continue;
    }
    size_t idx = static_cast<size_t>(j) * cols + i;
    seen[idx] = true;
    lam[idx] = val;
    for (int c = 0; c < 2; ++c)
      if (!(val[c] > 0)) {
        std::ostringstream os;
        os << "lambda_" << c + 1 << "(" << i << "," << j << ") = " << rs(val[c])
           << " must be positive";
        bad.push_back({"NonPositiveRate", os.str()});
      }
  }
  for (int j = 0; j < rows; ++j)
    for (int i = 0; i < cols; ++i)
      if (!seen[static_cast<size_t>(j) * cols + i]) {
        std::ostringstream os;
        os << "lambda entry (" << i << "," << j << ") missing";
        bad.push_back({"ParseError", os.str()});
      }
  if (!bad.empty()) return bad;

  // Tag constraints: across a threshold only the tagged component switches.
  for (int i = 1; i <= I; ++i) {
    int keep = raw.xi[i - 1].tag == 1 ? 1 : 0;  // component held constant
    for (int j = 0; j < rows; ++j) {
      const auto& west = lam[static_cast<size_t>(j) * cols + (i - 1)];
      const auto& east = lam[static_cast<size_t>(j) * cols + i];
      if (west[keep] != east[keep]) {
        std::ostringstream os;
        os << "lambda_" << keep + 1 << " differs across x-threshold " << i
           << " (tag " << raw.xi[i - 1].tag << ") between cells (" << i - 1
           << "," << j << ") and (" << i << "," << j << "): " << rs(west[keep])
           << " vs " << rs(east[keep]);
        bad.push_back({"TagConstraintViolated", os.str()});
      }
    }
  }
  for (int j = 1; j <= J; ++j) {
    int keep = raw.eta[j - 1].tag == 1 ? 1 : 0;
    for (int i = 0; i < cols; ++i) {
      const auto& south = lam[static_cast<size_t>(j - 1) * cols + i];
      const auto& north = lam[static_cast<size_t>(j) * cols + i];
      if (south[keep] != north[keep]) {
        std::ostringstream os;
        os << "lambda_" << keep + 1 << " differs across y-threshold " << j
           << " (tag " << raw.eta[j - 1].tag << ") between cells (" << i << ","
           << j - 1 << ") and (" << i << "," << j << "): " << rs(south[keep])
           << " vs " << rs(north[keep]);
        bad.push_back({"TagConstraintViolated", os.str()});
      }
    }
  }

  // Lambda vectors pairwise distinct.
  {
    std::map<std::pair<Rat, Rat>, std::pair<int, int>> first;
    for (int j = 0; j < rows; ++j)
      for (int i = 0; i < cols; ++i) {
        const auto& v = lam[static_cast<size_t>(j) * cols + i];
        auto key = std::make_pair(v[0], v[1]);
        auto [it, fresh] = first.emplace(key, std::make_pair(i, j));
        if (!fresh) {
          std::ostringstream os;
          os << "cells (" << it->second.first << "," << it->second.second
             << ") and (" << i << "," << j << ") share lambda = ("
             << rs(v[0]) << "," << rs(v[1]) << ")";
          bad.push_back({"DuplicateLambda", os.str()});
        }
      }
  }

  // Focal components must avoid every threshold (ties would make face roles
  // ambiguous); the bbox line acts as the stand-in for the infinite side.
  std::array<Rat, 2> maxphi{Rat(0), Rat(0)};
  for (int j = 0; j < rows; ++j)
    for (int i = 0; i < cols; ++i) {
      const auto& l = lam[static_cast<size_t>(j) * cols + i];
      for (int c = 0; c < 2; ++c) {
        Rat phi = l[c] / raw.gamma[c];
        maxphi[c] = std::max(maxphi[c], phi);
        const auto& axis = c == 0 ? raw.xi : raw.eta;
        for (size_t k = 0; k < axis.size(); ++k)
          if (phi == axis[k].value) {
            std::ostringstream os;
            os << "focal component " << c + 1 << " of cell (" << i << "," << j
               << ") equals threshold " << rs(axis[k].value);
            bad.push_back({"FocalOnThreshold", os.str()});
          }
      }
    }

  std::array<Rat, 2> bbox;
  if (raw.bbox) {
    bbox = *raw.bbox;
    for (int c = 0; c < 2; ++c) {
      Rat last = c == 0 ? (I ? raw.xi.back().value : Rat(0))
                        : (J ? raw.eta.back().value : Rat(0));
      if (!(bbox[c] > last)) {
        std::ostringstream os;
        os << "bbox_" << c + 1 << " = " << rs(bbox[c])
           << " must exceed the last finite threshold " << rs(last);
        bad.push_back({"NonMonotoneThresholds", os.str()});
      }
      for (int j = 0; j < rows && raw.bbox; ++j)
        for (int i = 0; i < cols; ++i)
          if (lam[static_cast<size_t>(j) * cols + i][c] / raw.gamma[c] ==
              bbox[c]) {
            std::ostringstream os;
            os << "focal component " << c + 1 << " of cell (" << i << "," << j
               << ") sits exactly on bbox_" << c + 1;
            bad.push_back({"FocalOnThreshold", os.str()});
          }
    }
  } else {
    bbox = {2 * maxphi[0], 2 * maxphi[1]};
    for (int c = 0; c < 2; ++c) {
      Rat last = c == 0 ? (I ? raw.xi.back().value : Rat(0))
                        : (J ? raw.eta.back().value : Rat(0));
      // Degenerate but possible: all focal points below the last threshold.
      if (!(bbox[c] > last)) bbox[c] = 2 * last;
    }
  }

  if (!bad.empty()) return bad;

  SwitchingSystem sys;
  sys.gamma_ = raw.gamma;
  sys.xi_ = raw.xi;
  sys.eta_ = raw.eta;
  sys.lambda_ = std::move(lam);
  sys.bbox_ = bbox;
  sys.bbox_explicit_ = raw.bbox.has_value();
  return sys;
}

std::variant<SystemConstants, Violation> derived_constants(
    const SwitchingSystem& sys) {
  if (sys.nx() == 0 || sys.ny() == 0)
    return Violation{"NoFiniteThreshold",
                     "collar constants need at least one finite threshold on "
                     "each axis; this system has none on " +
                         std::string(sys.nx() == 0 ? "x" : "y")};

  SystemConstants c;

  // Half of the minimal cell width over both axes (bounded cells only).
  std::optional<Rat> minw;
  auto feed_width = [&](const Rat& w) {
    if (!minw || w < *minw) minw = w;
  };
  for (int i = 1; i <= sys.nx(); ++i) feed_width(sys.xline(i) - sys.xline(i - 1));
  for (int j = 1; j <= sys.ny(); ++j) feed_width(sys.yline(j) - sys.yline(j - 1));
  c.half_width = *minw / 2;

  // mu: least distance from any focal component to any finite threshold
  // (0 included); rho: largest displacement from a focal point to a finite
  // threshold bounding its own cell.
  std::optional<Rat> mu, rho;
  for (int j = 0; j < sys.rows(); ++j)
    for (int i = 0; i < sys.cols(); ++i) {
      auto phi = sys.focal(i, j);
      for (int k = 0; k <= sys.nx(); ++k) {
        Rat d = abs(phi[0] - sys.xline(k));
        if (!mu || d < *mu) mu = d;
      }
      for (int k = 0; k <= sys.ny(); ++k) {
        Rat d = abs(phi[1] - sys.yline(k));
        if (!mu || d < *mu) mu = d;
      }
      auto feed_rho = [&](const Rat& d) {
        if (!rho || d > *rho) rho = d;
      };
      feed_rho(abs(phi[0] - sys.cell_xlo(i)));
      if (i < sys.nx()) feed_rho(abs(phi[0] - sys.xline(i + 1)));
      feed_rho(abs(phi[1] - sys.cell_ylo(j)));
      if (j < sys.ny()) feed_rho(abs(phi[1] - sys.yline(j + 1)));
    }
  c.mu = *mu;
  c.rho = *rho;

  const Rat& g1 = sys.gamma()[0];
  const Rat& g2 = sys.gamma()[1];
  c.gamma_bar = std::min(g1 / g2, g2 / g1);

  double lam = to_double(c.half_width);
  double product = to_double(c.half_width * c.mu * c.gamma_bar);
  c.delta_star_linear =
      product / (std::sqrt(2.0) * (2 * lam + 3 * to_double(c.rho)));
  c.delta_star_sqrt = std::sqrt(product / 32.0);
  c.delta_star = std::min(c.delta_star_linear, c.delta_star_sqrt);
  return c;
}

}  // namespace csw
