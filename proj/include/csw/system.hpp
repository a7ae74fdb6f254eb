#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "csw/rational.hpp"

namespace csw {

// A threshold on one axis together with the index (1 or 2) of the
// nonlinearity component that switches across it.
struct Threshold {
  Rat value;
  int tag = 1;
};

// Unvalidated description of a switching system, as read from a file or
// assembled programmatically.  Cell (i,j) lives between x-thresholds i,i+1
// and y-thresholds j,j+1; column I and row J are unbounded and get
// truncated at bbox.
struct RawSystem {
  std::array<Rat, 2> gamma{Rat(1), Rat(1)};
  std::vector<Threshold> xi;   // interior x-thresholds, expected ascending
  std::vector<Threshold> eta;  // interior y-thresholds
  std::map<std::pair<int, int>, std::array<Rat, 2>> lambda;
  std::optional<std::array<Rat, 2>> bbox;  // default: 2 * max focal point
};

enum class CellType { A, N, NE, E, SE, S, SW, W, NW };

const char* cell_type_name(CellType t);

struct Violation {
  std::string code;    // e.g. "NonMonotoneThresholds"
  std::string detail;  // human-readable specifics
};

class SwitchingSystem {
 public:
  // Grid shape: nx() interior x-thresholds, nx()+1 columns of cells.
  int nx() const { return static_cast<int>(xi_.size()); }
  int ny() const { return static_cast<int>(eta_.size()); }
  int cols() const { return nx() + 1; }
  int rows() const { return ny() + 1; }
  int cell_count() const { return cols() * rows(); }
  int cell_index(int i, int j) const { return j * cols() + i; }

  const std::array<Rat, 2>& gamma() const { return gamma_; }
  const std::vector<Threshold>& xi() const { return xi_; }
  const std::vector<Threshold>& eta() const { return eta_; }
  const std::array<Rat, 2>& bbox() const { return bbox_; }
  bool bbox_explicit() const { return bbox_explicit_; }

  // Vertical grid line k = 0..nx()+1: 0, xi_1, ..., xi_I, bbox_x.
  Rat xline(int k) const;
  Rat yline(int k) const;

  const std::array<Rat, 2>& lambda(int i, int j) const;
  std::array<Rat, 2> focal(int i, int j) const;  // Lambda / gamma, exact
  CellType cell_type(int i, int j) const;

  // Cell extent under bbox truncation: [xlo,xhi]x[ylo,yhi] closures.
  Rat cell_xlo(int i) const { return xline(i); }
  Rat cell_xhi(int i) const { return xline(i + 1); }
  Rat cell_ylo(int j) const { return yline(j); }
  Rat cell_yhi(int j) const { return yline(j + 1); }

  static std::variant<SwitchingSystem, std::vector<Violation>> validate(
      const RawSystem& raw);

 private:
  std::array<Rat, 2> gamma_;
  std::vector<Threshold> xi_, eta_;
  std::vector<std::array<Rat, 2>> lambda_;  // indexed by cell_index
  std::array<Rat, 2> bbox_;
  bool bbox_explicit_ = false;
};

// The delta-machinery constants.  All but delta_star are exact; delta_star
// involves square roots and is reported as a double together with both
// terms of the min.
struct SystemConstants {
  Rat mu;          // least distance from any focal component to any threshold
  Rat half_width;  // half the minimal cell width
  Rat rho;         // largest focal displacement to a finite own-cell threshold
  Rat gamma_bar;   // min(g1/g2, g2/g1)
  double delta_star;
  double delta_star_linear;  // first term of the min
  double delta_star_sqrt;    // second term
};

// Requires at least one finite threshold on each axis; otherwise returns the
// NoFiniteThreshold violation (the system is a single row/column and the
// collar machinery is undefined).
std::variant<SystemConstants, Violation> derived_constants(
    const SwitchingSystem& sys);

}  // namespace csw
