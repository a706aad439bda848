#include "gridstate/expr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace gridstate {

namespace {

// (variable, multiplicity) runs of a sorted index list.
std::vector<std::pair<int, int>> group_runs(const std::vector<int>& vars) {
  std::vector<std::pair<int, int>> runs;
  for (int v : vars) {
    if (!runs.empty() && runs.back().first == v) {
      ++runs.back().second;
    } else {
      runs.emplace_back(v, 1);
    }
  }
  return runs;
}

double ipow(double base, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

// Value of prod(v^m) over runs, skipping one run (partial product helper).
double product_skipping(std::span<const double> x,
                        const std::vector<std::pair<int, int>>& runs,
                        int skip_a, int drop_a, int skip_b, int drop_b) {
  double p = 1.0;
  for (int i = 0; i < static_cast<int>(runs.size()); ++i) {
    int m = runs[i].second;
    if (i == skip_a) m -= drop_a;
    if (i == skip_b) m -= drop_b;
    if (m < 0) return 0.0;
    p *= ipow(x[static_cast<std::size_t>(runs[i].first)], m);
  }
  return p;
}

double trig_eval(TrigFn fn, double a) {
  return fn == TrigFn::Sin ? std::sin(a) : std::cos(a);
}

// First derivative of sin/cos w.r.t. the angle.
double trig_prime(TrigFn fn, double a) {
  return fn == TrigFn::Sin ? std::cos(a) : -std::sin(a);
}

double angle_value(const TrigTerm& t, std::span<const double> x) {
  double a = t.angle_offset;
  for (auto& [v, c] : t.angle) a += c * x[static_cast<std::size_t>(v)];
  return a;
}

}  // namespace

void Expression::add_linear(int var, double coeff) {
  add_monomial(coeff, {var});
}

void Expression::add_quadratic(int a, int b, double coeff) {
  add_monomial(coeff, {a, b});
}

void Expression::add_monomial(double coeff, std::vector<int> vars) {
  if (coeff == 0.0) return;
  if (vars.empty()) {
    constant += coeff;
    return;
  }
  std::sort(vars.begin(), vars.end());
  monomials.push_back(Monomial{coeff, std::move(vars)});
}

void Expression::add_trig(double coeff, std::vector<int> factors, TrigFn fn,
                          std::vector<std::pair<int, double>> angle,
                          double angle_offset) {
  if (coeff == 0.0) return;
  std::sort(angle.begin(), angle.end());
  std::vector<std::pair<int, double>> merged_angle;
  for (auto& [v, c] : angle) {
    if (!merged_angle.empty() && merged_angle.back().first == v)
      merged_angle.back().second += c;
    else
      merged_angle.emplace_back(v, c);
  }
  angle = std::move(merged_angle);
  angle.erase(std::remove_if(angle.begin(), angle.end(),
                             [](auto& p) { return p.second == 0.0; }),
              angle.end());
  if (angle.empty()) {
    // Constant angle: fold fn(offset) into a monomial.
    add_monomial(coeff * trig_eval(fn, angle_offset), std::move(factors));
    return;
  }
  std::sort(factors.begin(), factors.end());
  std::sort(angle.begin(), angle.end());
  trig.push_back(TrigTerm{coeff, std::move(factors), fn, std::move(angle),
                          angle_offset});
}

void Expression::merge_terms() {
  std::sort(monomials.begin(), monomials.end(),
            [](const Monomial& a, const Monomial& b) { return a.vars < b.vars; });
  std::vector<Monomial> merged;
  for (auto& m : monomials) {
    if (!merged.empty() && merged.back().vars == m.vars) {
      merged.back().coeff += m.coeff;
    } else {
      merged.push_back(std::move(m));
    }
  }
  merged.erase(std::remove_if(merged.begin(), merged.end(),
                              [](const Monomial& m) { return m.coeff == 0.0; }),
               merged.end());
  monomials = std::move(merged);

  auto trig_key = [](const TrigTerm& t) {
    return std::tie(t.factors, t.fn, t.angle, t.angle_offset);
  };
  std::sort(trig.begin(), trig.end(), [&](const TrigTerm& a, const TrigTerm& b) {
    return trig_key(a) < trig_key(b);
  });
  std::vector<TrigTerm> tm;
  for (auto& t : trig) {
    if (!tm.empty() && trig_key(tm.back()) == trig_key(t)) {
      tm.back().coeff += t.coeff;
    } else {
      tm.push_back(std::move(t));
    }
  }
  tm.erase(std::remove_if(tm.begin(), tm.end(),
                          [](const TrigTerm& t) { return t.coeff == 0.0; }),
           tm.end());
  trig = std::move(tm);
}

int Expression::poly_degree() const {
  std::size_t d = 0;
  for (const auto& m : monomials) d = std::max(d, m.vars.size());
  for (const auto& t : trig) d = std::max(d, t.factors.size() + 1);
  return static_cast<int>(d);
}

double Expression::eval(std::span<const double> x) const {
  double v = constant;
  for (const auto& m : monomials) {
    double p = m.coeff;
    for (int var : m.vars) p *= x[static_cast<std::size_t>(var)];
    v += p;
  }
  for (const auto& t : trig) {
    double p = t.coeff;
    for (int var : t.factors) p *= x[static_cast<std::size_t>(var)];
    v += p * trig_eval(t.fn, angle_value(t, x));
  }
  return v;
}

void Expression::accumulate_gradient(
    std::span<const double> x, double scale,
    std::vector<std::pair<int, double>>& out) const {
  for (const auto& m : monomials) {
    auto runs = group_runs(m.vars);
    for (int i = 0; i < static_cast<int>(runs.size()); ++i) {
      auto [v, mult] = runs[i];
      double g = m.coeff * mult * ipow(x[static_cast<std::size_t>(v)], mult - 1) *
                 product_skipping(x, runs, i, runs[i].second, -1, 0);
      out.emplace_back(v, scale * g);
    }
  }
  for (const auto& t : trig) {
    auto runs = group_runs(t.factors);
    double a = angle_value(t, x);
    double tv = trig_eval(t.fn, a);
    double tp = trig_prime(t.fn, a);
    double fprod = product_skipping(x, runs, -1, 0, -1, 0);
    for (int i = 0; i < static_cast<int>(runs.size()); ++i) {
      auto [v, mult] = runs[i];
      double dF = mult * ipow(x[static_cast<std::size_t>(v)], mult - 1) *
                  product_skipping(x, runs, i, runs[i].second, -1, 0);
      out.emplace_back(v, scale * t.coeff * dF * tv);
    }
    for (auto& [v, c] : t.angle) {
      out.emplace_back(v, scale * t.coeff * fprod * tp * c);
    }
  }
}

std::vector<std::pair<int, double>> Expression::gradient(
    std::span<const double> x) const {
  std::vector<std::pair<int, double>> g;
  accumulate_gradient(x, 1.0, g);
  std::sort(g.begin(), g.end(),
            [](auto& a, auto& b) { return a.first < b.first; });
  std::vector<std::pair<int, double>> merged;
  for (auto& [v, c] : g) {
    if (!merged.empty() && merged.back().first == v) {
      merged.back().second += c;
    } else {
      merged.emplace_back(v, c);
    }
  }
  return merged;
}

void Expression::accumulate_hessian(
    std::span<const double> x, double scale,
    std::vector<std::tuple<int, int, double>>& out) const {
  auto emit = [&](int i, int j, double v) {
    if (v == 0.0) return;
    if (i < j) std::swap(i, j);
    out.emplace_back(i, j, scale * v);
  };

  for (const auto& m : monomials) {
    auto runs = group_runs(m.vars);
    int n = static_cast<int>(runs.size());
    for (int i = 0; i < n; ++i) {
      auto [vi, mi] = runs[i];
      double xi = x[static_cast<std::size_t>(vi)];
      if (mi >= 2) {
        double h = m.coeff * mi * (mi - 1) * ipow(xi, mi - 2) *
                   product_skipping(x, runs, i, runs[i].second, -1, 0);
        emit(vi, vi, h);
      }
      for (int j = i + 1; j < n; ++j) {
        auto [vj, mj] = runs[j];
        double h = m.coeff * mi * mj * ipow(xi, mi - 1) *
                   ipow(x[static_cast<std::size_t>(vj)], mj - 1) *
                   product_skipping(x, runs, i, runs[i].second, j, runs[j].second);
        emit(vi, vj, h);
      }
    }
  }

  for (const auto& t : trig) {
    auto runs = group_runs(t.factors);
    int n = static_cast<int>(runs.size());
    double a = angle_value(t, x);
    double tv = trig_eval(t.fn, a);
    double tp = trig_prime(t.fn, a);
    double fprod = product_skipping(x, runs, -1, 0, -1, 0);

    auto dF = [&](int i) {
      auto [v, mult] = runs[static_cast<std::size_t>(i)];
      return mult * ipow(x[static_cast<std::size_t>(v)], mult - 1) *
             product_skipping(x, runs, i, runs[static_cast<std::size_t>(i)].second,
                              -1, 0);
    };

    // factor-factor block
    for (int i = 0; i < n; ++i) {
      auto [vi, mi] = runs[i];
      double xi = x[static_cast<std::size_t>(vi)];
      if (mi >= 2) {
        double d2 = mi * (mi - 1) * ipow(xi, mi - 2) *
                    product_skipping(x, runs, i, runs[i].second, -1, 0);
        emit(vi, vi, t.coeff * d2 * tv);
      }
      for (int j = i + 1; j < n; ++j) {
        auto [vj, mj] = runs[j];
        double d2 = mi * mj * ipow(xi, mi - 1) *
                    ipow(x[static_cast<std::size_t>(vj)], mj - 1) *
                    product_skipping(x, runs, i, runs[i].second, j, runs[j].second);
        emit(vi, vj, t.coeff * d2 * tv);
      }
    }
    // factor-angle block; a variable on both sides lands on the diagonal,
    // where the symmetric cross term counts twice
    for (int i = 0; i < n; ++i) {
      double dFi = dF(i);
      for (auto& [va, ca] : t.angle) {
        double mult = (runs[i].first == va) ? 2.0 : 1.0;
        emit(runs[i].first, va, mult * t.coeff * dFi * tp * ca);
      }
    }
    // angle-angle block: second derivative of fn is -fn
    for (std::size_t i = 0; i < t.angle.size(); ++i) {
      for (std::size_t j = i; j < t.angle.size(); ++j) {
        double h = -t.coeff * fprod * tv * t.angle[i].second * t.angle[j].second;
        emit(t.angle[i].first, t.angle[j].first, h);
      }
    }
  }
}

std::vector<int> Expression::support() const {
  std::vector<int> s;
  for (const auto& m : monomials) s.insert(s.end(), m.vars.begin(), m.vars.end());
  for (const auto& t : trig) {
    s.insert(s.end(), t.factors.begin(), t.factors.end());
    for (auto& [v, c] : t.angle) s.push_back(v);
  }
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

char tag_letter(RowTag tag) {
  switch (tag) {
    case RowTag::Residual: return 'f';
    case RowTag::Network: return 'h';
    case RowTag::Mapping: return 'g';
    case RowTag::Bound: return 'k';
  }
  return '?';
}

double ConstraintRow::value(std::span<const double> x) const {
  double v = expr.eval(x);
  if (abs_part) v += abs_part->scale * std::abs(abs_part->inner.eval(x));
  return v;
}

void ConstraintSet::append(ConstraintSet other) {
  rows.insert(rows.end(), std::make_move_iterator(other.rows.begin()),
              std::make_move_iterator(other.rows.end()));
}

}  // namespace gridstate
