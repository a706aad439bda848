#pragma once

#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace gridstate {

enum class TrigFn { Sin, Cos };

// Product of decision variables with repetition: vars {3,3,7} is x3^2 * x7.
// Kept sorted; degree is vars.size().
struct Monomial {
  double coeff = 0.0;
  std::vector<int> vars;
};

// coeff * prod(factors) * fn(sum_j angle_j * x_j + angle_offset).
// An empty angle list is folded into a plain monomial on insertion.
struct TrigTerm {
  double coeff = 0.0;
  std::vector<int> factors;
  TrigFn fn = TrigFn::Cos;
  std::vector<std::pair<int, double>> angle;
  double angle_offset = 0.0;
};

// Scalar expression over a real variable vector:
//   constant + sum of monomials + sum of trig-product terms.
// This covers every constraint row in the project: network rows are affine
// (rectangular current), quadratic (rectangular power), or trigonometric
// (polar power); mapping rows are polynomial up to degree 4 after clearing
// denominators; residual rows are affine or quadratic.
class Expression {
 public:
  double constant = 0.0;
  std::vector<Monomial> monomials;
  std::vector<TrigTerm> trig;

  void add_constant(double c) { constant += c; }
  void add_linear(int var, double coeff);
  void add_quadratic(int a, int b, double coeff);
  void add_monomial(double coeff, std::vector<int> vars);
  void add_trig(double coeff, std::vector<int> factors, TrigFn fn,
                std::vector<std::pair<int, double>> angle,
                double angle_offset = 0.0);

  // Combine like terms and drop exact zeros. Builders call this once a row
  // is complete so identical rows compare equal structurally.
  void merge_terms();

  int poly_degree() const;
  bool has_trig() const { return !trig.empty(); }
  bool affine() const { return trig.empty() && poly_degree() <= 1; }
  bool quadratic_or_less() const { return trig.empty() && poly_degree() <= 2; }

  double eval(std::span<const double> x) const;

  // Sparse gradient with unique, sorted variable indices.
  std::vector<std::pair<int, double>> gradient(std::span<const double> x) const;

  // Accumulate scale * d(expr)/dx into out (unsorted, duplicates allowed).
  void accumulate_gradient(std::span<const double> x, double scale,
                           std::vector<std::pair<int, double>>& out) const;

  // Accumulate scale * d2(expr)/dx2 lower triangle (row >= col) as triplets.
  void accumulate_hessian(std::span<const double> x, double scale,
                          std::vector<std::tuple<int, int, double>>& out) const;

  // Sorted unique variables the expression reads (the declared sparsity).
  std::vector<int> support() const;
};

// Non-smooth |.| contribution: scale * |inner(x)|. Only the WLAV criterion
// produces one; the embedded solvers reject rows carrying it.
struct AbsPart {
  double scale = 0.0;
  Expression inner;
};

// Constraint group tags follow the problem outline: Residual rows define the
// criterion, Network rows are Ohm/Kirchhoff physics, Mapping rows couple
// measured coordinates into the formulation space, Bound rows are optional
// operational inequalities.
enum class RowTag { Residual, Network, Mapping, Bound };

enum class Rel { Eq, Le };  // expr == 0 or expr <= 0

char tag_letter(RowTag tag);

struct ConstraintRow {
  RowTag tag = RowTag::Network;
  Rel rel = Rel::Eq;
  Expression expr;
  std::optional<AbsPart> abs_part;
  std::string label;
  int meas_index = -1;

  bool smooth() const { return !abs_part.has_value(); }
  double value(std::span<const double> x) const;
};

struct ConstraintSet {
  std::vector<ConstraintRow> rows;

  void append(ConstraintSet other);
  std::size_t size() const { return rows.size(); }
};

}  // namespace gridstate
