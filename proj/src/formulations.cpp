#include "gridstate/formulations.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace gridstate {

namespace {

double nominal_angle(const Bus& bus, std::size_t phase_pos) {
  if (bus.is_reference && phase_pos < bus.reference_angles.size())
    return bus.reference_angles[phase_pos];
  return default_reference_angles(bus.phases)[phase_pos];
}

// Complex-valued affine function of the real variable vector. Products of two
// of these expand into the quadratic monomials of the rectangular power rows.
struct ComplexLin {
  cx c0{0.0, 0.0};
  std::vector<std::pair<int, cx>> terms;

  static ComplexLin rect(int re_var, int im_var) {
    ComplexLin l;
    l.terms = {{re_var, cx(1.0, 0.0)}, {im_var, cx(0.0, 1.0)}};
    return l;
  }

  ComplexLin conjugated() const {
    ComplexLin l;
    l.c0 = std::conj(c0);
    for (auto& [v, c] : terms) l.terms.emplace_back(v, std::conj(c));
    return l;
  }

  ComplexLin scaled(cx s) const {
    ComplexLin l;
    l.c0 = s * c0;
    for (auto& [v, c] : terms) l.terms.emplace_back(v, s * c);
    return l;
  }

  ComplexLin& operator+=(const ComplexLin& o) {
    c0 += o.c0;
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    return *this;
  }

  ComplexLin minus(const ComplexLin& o) const {
    ComplexLin l = *this;
    l += o.scaled(cx(-1.0, 0.0));
    return l;
  }
};

double part(cx z, bool imag) { return imag ? z.imag() : z.real(); }

void add_affine(Expression& ex, const ComplexLin& l, bool imag, double scale) {
  ex.add_constant(scale * part(l.c0, imag));
  for (auto& [v, c] : l.terms) ex.add_linear(v, scale * part(c, imag));
}

void add_product(Expression& ex, const ComplexLin& a, const ComplexLin& b,
                 bool imag, double scale) {
  ex.add_constant(scale * part(a.c0 * b.c0, imag));
  for (auto& [v, c] : a.terms) ex.add_linear(v, scale * part(c * b.c0, imag));
  for (auto& [v, c] : b.terms) ex.add_linear(v, scale * part(a.c0 * c, imag));
  for (auto& [va, ca] : a.terms)
    for (auto& [vb, cb] : b.terms)
      ex.add_quadratic(va, vb, scale * part(ca * cb, imag));
}

// scale * (Re|Im)(k * Vm_a Vm_b e^{j(va_a - va_b)}) as trig-product terms.
void add_polar_product(Expression& ex, bool imag, double scale, cx k, int vm_a,
                       int va_a, int vm_b, int va_b) {
  std::vector<std::pair<int, double>> angle{{va_a, 1.0}, {va_b, -1.0}};
  if (!imag) {
    ex.add_trig(scale * k.real(), {vm_a, vm_b}, TrigFn::Cos, angle);
    ex.add_trig(-scale * k.imag(), {vm_a, vm_b}, TrigFn::Sin, angle);
  } else {
    ex.add_trig(scale * k.real(), {vm_a, vm_b}, TrigFn::Sin, angle);
    ex.add_trig(scale * k.imag(), {vm_a, vm_b}, TrigFn::Cos, angle);
  }
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

std::string to_string(FormulationKind k) {
  switch (k) {
    case FormulationKind::ACP: return "ACP";
    case FormulationKind::ACR: return "ACR";
    case FormulationKind::IVR: return "IVR";
    case FormulationKind::LD3F: return "LD3F";
  }
  return "?";
}

std::string eq_model_name(FormulationKind k) {
  switch (k) {
    case FormulationKind::ACP: return "rACP";
    case FormulationKind::ACR: return "rACR";
    case FormulationKind::IVR: return "rIVR";
    case FormulationKind::LD3F: return "LD3F";
  }
  return "?";
}

FormulationKind formulation_from_string(const std::string& s) {
  std::string t = lower(s);
  if (t == "acp" || t == "racp") return FormulationKind::ACP;
  if (t == "acr" || t == "racr") return FormulationKind::ACR;
  if (t == "ivr" || t == "rivr") return FormulationKind::IVR;
  if (t == "ld3f" || t == "lindist3flow") return FormulationKind::LD3F;
  throw Error("unknown formulation \"" + s +
              "\" (want rACP, rACR, rIVR or LD3F)");
}

int VariableSpace::add(const std::string& name, double init, double lb,
                       double ub) {
  if (index_.count(name)) throw Error("duplicate variable \"" + name + "\"");
  int idx = static_cast<int>(vars_.size());
  vars_.push_back(VarInfo{name, init, lb, ub});
  index_[name] = idx;
  return idx;
}

int VariableSpace::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown variable \"" + name + "\"");
  return it->second;
}

int VariableSpace::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

void VariableSpace::tighten_lower(int i, double lb) {
  auto& v = vars_[static_cast<std::size_t>(i)];
  v.lb = std::max(v.lb, lb);
  if (v.init < v.lb) v.init = v.lb;
}

void VariableSpace::tighten_upper(int i, double ub) {
  auto& v = vars_[static_cast<std::size_t>(i)];
  v.ub = std::min(v.ub, ub);
  if (v.init > v.ub) v.init = v.ub;
}

std::vector<double> VariableSpace::initial_point() const {
  std::vector<double> x;
  x.reserve(vars_.size());
  for (const auto& v : vars_) x.push_back(v.init);
  return x;
}

std::string comp_prefix(TargetKind kind) {
  switch (kind) {
    case TargetKind::Bus: return "bus";
    case TargetKind::BranchFrom: return "from";
    case TargetKind::BranchTo: return "to";
    case TargetKind::Load: return "load";
    case TargetKind::Generator: return "gen";
  }
  return "?";
}

std::string var_name(const std::string& prefix, const std::string& element,
                     int phase) {
  return prefix + ":" + element + ":" + std::to_string(phase);
}

const char* native_prefix(FormulationKind kind, Quantity q) {
  switch (kind) {
    case FormulationKind::ACP:
      if (q == Quantity::Vm) return "vm";
      if (q == Quantity::Va) return "va";
      if (q == Quantity::P) return "p";
      if (q == Quantity::Q) return "q";
      return nullptr;
    case FormulationKind::ACR:
      if (q == Quantity::Vre) return "vr";
      if (q == Quantity::Vim) return "vi";
      if (q == Quantity::P) return "p";
      if (q == Quantity::Q) return "q";
      return nullptr;
    case FormulationKind::IVR:
      if (q == Quantity::Vre) return "vr";
      if (q == Quantity::Vim) return "vi";
      if (q == Quantity::Ire) return "ir";
      if (q == Quantity::Iim) return "ii";
      return nullptr;
    case FormulationKind::LD3F:
      if (q == Quantity::W) return "w";
      if (q == Quantity::P) return "p";
      if (q == Quantity::Q) return "q";
      return nullptr;
  }
  return nullptr;
}

std::string native_variable_name(FormulationKind kind,
                                 const MeasurementTarget& target, Quantity q) {
  const char* prefix = native_prefix(kind, q);
  if (!prefix) return {};
  if (target.kind == TargetKind::Bus)
    return var_name(prefix, target.element, target.phase);
  return var_name(prefix, comp_prefix(target.kind) + ":" + target.element,
                  target.phase);
}

VariableSpace variables_of(FormulationKind kind, const Network& network) {
  VariableSpace space(kind);
  for (const auto& bus : network.buses) {
    for (std::size_t i = 0; i < bus.phases.size(); ++i) {
      int ph = bus.phases[i];
      space.note_bus_phase(bus.id, ph);
      double ang = nominal_angle(bus, i);
      switch (kind) {
        case FormulationKind::ACP:
          space.add(var_name("vm", bus.id, ph), 1.0);
          space.add(var_name("va", bus.id, ph), ang);
          break;
        case FormulationKind::ACR:
        case FormulationKind::IVR:
          space.add(var_name("vr", bus.id, ph), std::cos(ang));
          space.add(var_name("vi", bus.id, ph), std::sin(ang));
          break;
        case FormulationKind::LD3F:
          space.add(var_name("w", bus.id, ph), 1.0);
          break;
      }
    }
  }
  auto add_component = [&](TargetKind tk, const std::string& id,
                           const std::vector<int>& phases) {
    std::string base = comp_prefix(tk) + ":" + id;
    for (int ph : phases) {
      if (kind == FormulationKind::IVR) {
        space.add(var_name("ir", base, ph), 0.0);
        space.add(var_name("ii", base, ph), 0.0);
      } else {
        space.add(var_name("p", base, ph), 0.0);
        space.add(var_name("q", base, ph), 0.0);
      }
    }
  };
  for (const auto& br : network.branches) {
    add_component(TargetKind::BranchFrom, br.id, br.phases);
    add_component(TargetKind::BranchTo, br.id, br.phases);
  }
  for (const auto& l : network.loads) add_component(TargetKind::Load, l.id, l.phases);
  for (const auto& g : network.generators)
    add_component(TargetKind::Generator, g.id, g.phases);
  return space;
}

namespace {

struct RowBuilder {
  const Network& network;
  const VariableSpace& space;
  FormulationKind kind;
  ConstraintSet set;

  int var(const std::string& prefix, const std::string& element, int ph) const {
    return space.index_of(var_name(prefix, element, ph));
  }
  int comp_var(const std::string& prefix, TargetKind tk, const std::string& id,
               int ph) const {
    return var(prefix, comp_prefix(tk) + ":" + id, ph);
  }

  ComplexLin bus_voltage(const std::string& bus, int ph) const {
    return ComplexLin::rect(var("vr", bus, ph), var("vi", bus, ph));
  }

  void push(RowTag tag, Rel rel, Expression ex, std::string label) {
    ex.merge_terms();
    ConstraintRow row;
    row.tag = tag;
    row.rel = rel;
    row.expr = std::move(ex);
    row.label = std::move(label);
    set.rows.push_back(std::move(row));
  }

  // ---- IVR ------------------------------------------------------------
  void ivr_branch_rows(const Branch& br) {
    CMat y = series_admittance(br);
    const Bus& fb = network.bus(br.from_bus);
    const Bus& tb = network.bus(br.to_bus);
    for (int end = 0; end < 2; ++end) {
      const Bus& a = end == 0 ? fb : tb;
      const Bus& b = end == 0 ? tb : fb;
      const CMat& ysh = end == 0 ? br.ysh_from : br.ysh_to;
      TargetKind tk = end == 0 ? TargetKind::BranchFrom : TargetKind::BranchTo;
      for (std::size_t i = 0; i < br.phases.size(); ++i) {
        ComplexLin total;
        for (std::size_t q = 0; q < br.phases.size(); ++q) {
          auto yiq = y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q));
          auto siq =
              ysh(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q));
          ComplexLin ua = bus_voltage(a.id, br.phases[q]);
          ComplexLin ub = bus_voltage(b.id, br.phases[q]);
          total += ua.minus(ub).scaled(yiq);
          total += ua.scaled(siq);
        }
        std::string tag = comp_prefix(tk) + ":" + br.id;
        for (int imag = 0; imag < 2; ++imag) {
          Expression ex;
          ex.add_linear(comp_var(imag ? "ii" : "ir", tk, br.id, br.phases[i]),
                        1.0);
          add_affine(ex, total, imag != 0, -1.0);
          push(RowTag::Network, Rel::Eq, std::move(ex),
               "ohm:" + tag + ":" + std::to_string(br.phases[i]) +
                   (imag ? ":im" : ":re"));
        }
      }
    }
  }

  // ---- ACR / ACP branch flow -----------------------------------------
  void ac_branch_rows(const Branch& br) {
    CMat y = series_admittance(br);
    const Bus& fb = network.bus(br.from_bus);
    const Bus& tb = network.bus(br.to_bus);
    for (int end = 0; end < 2; ++end) {
      const Bus& a = end == 0 ? fb : tb;
      const Bus& b = end == 0 ? tb : fb;
      const CMat& ysh = end == 0 ? br.ysh_from : br.ysh_to;
      TargetKind tk = end == 0 ? TargetKind::BranchFrom : TargetKind::BranchTo;
      for (std::size_t i = 0; i < br.phases.size(); ++i) {
        int php = br.phases[i];
        for (int imag = 0; imag < 2; ++imag) {
          Expression ex;
          ex.add_linear(comp_var(imag ? "q" : "p", tk, br.id, php), 1.0);
          for (std::size_t q = 0; q < br.phases.size(); ++q) {
            int phq = br.phases[q];
            cx yc = std::conj(
                y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q)));
            cx sc = std::conj(
                ysh(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q)));
            if (kind == FormulationKind::ACR) {
              ComplexLin uap = bus_voltage(a.id, php);
              ComplexLin uaq = bus_voltage(a.id, phq).conjugated();
              ComplexLin ubq = bus_voltage(b.id, phq).conjugated();
              // S_p = sum_q U_ap conj(U_aq - U_bq) conj(y_iq)
              //     + sum_q U_ap conj(U_aq) conj(ysh_iq)
              add_product(ex, uap, uaq.minus(ubq).scaled(yc), imag != 0, -1.0);
              add_product(ex, uap, uaq.scaled(sc), imag != 0, -1.0);
            } else {
              int vm_ap = var("vm", a.id, php), va_ap = var("va", a.id, php);
              int vm_aq = var("vm", a.id, phq), va_aq = var("va", a.id, phq);
              int vm_bq = var("vm", b.id, phq), va_bq = var("va", b.id, phq);
              add_polar_product(ex, imag != 0, -1.0, yc + sc, vm_ap, va_ap,
                                vm_aq, va_aq);
              add_polar_product(ex, imag != 0, 1.0, yc, vm_ap, va_ap, vm_bq,
                                va_bq);
            }
          }
          push(RowTag::Network, Rel::Eq, std::move(ex),
               "flow:" + comp_prefix(tk) + ":" + br.id + ":" +
                   std::to_string(php) + (imag ? ":q" : ":p"));
        }
      }
    }
  }

  // ---- LD3F -----------------------------------------------------------
  void ld3f_branch_rows(const Branch& br) {
    Eigen::MatrixXd mp, mq;
    lindist3flow_matrices(br, mp, mq);
    for (std::size_t i = 0; i < br.phases.size(); ++i) {
      int php = br.phases[i];
      Expression drop;
      drop.add_linear(var("w", br.to_bus, php), 1.0);
      drop.add_linear(var("w", br.from_bus, php), -1.0);
      for (std::size_t q = 0; q < br.phases.size(); ++q) {
        drop.add_linear(
            comp_var("p", TargetKind::BranchFrom, br.id, br.phases[q]),
            mp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q)));
        drop.add_linear(
            comp_var("q", TargetKind::BranchFrom, br.id, br.phases[q]),
            mq(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q)));
      }
      push(RowTag::Network, Rel::Eq, std::move(drop),
           "drop:" + br.id + ":" + std::to_string(php));

      // series section treated lossless
      Expression cp, cq;
      cp.add_linear(comp_var("p", TargetKind::BranchFrom, br.id, php), 1.0);
      cp.add_linear(comp_var("p", TargetKind::BranchTo, br.id, php), 1.0);
      cq.add_linear(comp_var("q", TargetKind::BranchFrom, br.id, php), 1.0);
      cq.add_linear(comp_var("q", TargetKind::BranchTo, br.id, php), 1.0);
      push(RowTag::Network, Rel::Eq, std::move(cp),
           "cons:" + br.id + ":" + std::to_string(php) + ":p");
      push(RowTag::Network, Rel::Eq, std::move(cq),
           "cons:" + br.id + ":" + std::to_string(php) + ":q");
    }
  }

  // Linear-in-W shunt draw for LD3F: S_p = sum_q gamma_pq conj(Y_pq) w_q.
  void ld3f_shunt_draw(Expression& ex, bool imag, const std::string& bus,
                       const std::vector<int>& phases, const CMat& ymat,
                       int php, double scale) {
    auto it = std::find(phases.begin(), phases.end(), php);
    if (it == phases.end()) return;
    auto i = static_cast<std::size_t>(it - phases.begin());
    for (std::size_t q = 0; q < phases.size(); ++q) {
      cx g = std::polar(1.0, -2.0 * kPi / 3.0 *
                                 static_cast<double>(php - phases[q]));
      cx coeff = g * std::conj(ymat(static_cast<Eigen::Index>(i),
                                    static_cast<Eigen::Index>(q)));
      ex.add_linear(var("w", bus, phases[q]), scale * part(coeff, imag));
    }
  }

  void balance_rows() {
    for (const auto& bus : network.buses) {
      // The reference bus supplies the feeder; its balance is implicit.
      if (bus.is_reference) continue;
      for (int php : bus.phases) {
        for (int imag = 0; imag < 2; ++imag) {
          Expression ex;
          const char* re_pref = kind == FormulationKind::IVR ? "ir" : "p";
          const char* im_pref = kind == FormulationKind::IVR ? "ii" : "q";
          const char* pref = imag ? im_pref : re_pref;

          for (const auto& g : network.generators)
            if (g.bus == bus.id &&
                std::count(g.phases.begin(), g.phases.end(), php))
              ex.add_linear(comp_var(pref, TargetKind::Generator, g.id, php),
                            1.0);
          for (const auto& l : network.loads)
            if (l.bus == bus.id &&
                std::count(l.phases.begin(), l.phases.end(), php))
              ex.add_linear(comp_var(pref, TargetKind::Load, l.id, php), -1.0);

          for (const auto& s : network.shunts) {
            if (s.bus != bus.id) continue;
            auto it = std::find(s.phases.begin(), s.phases.end(), php);
            if (it == s.phases.end()) continue;
            auto i = static_cast<std::size_t>(it - s.phases.begin());
            if (kind == FormulationKind::IVR) {
              // current draw (Ys U)_p
              ComplexLin draw;
              for (std::size_t q = 0; q < s.phases.size(); ++q)
                draw += bus_voltage(bus.id, s.phases[q])
                            .scaled(s.ys(static_cast<Eigen::Index>(i),
                                         static_cast<Eigen::Index>(q)));
              add_affine(ex, draw, imag != 0, -1.0);
            } else if (kind == FormulationKind::LD3F) {
              ld3f_shunt_draw(ex, imag != 0, bus.id, s.phases, s.ys, php, -1.0);
            } else if (kind == FormulationKind::ACR) {
              // power draw U_p conj(sum_q Ys_pq U_q)
              ComplexLin up = bus_voltage(bus.id, php);
              for (std::size_t q = 0; q < s.phases.size(); ++q) {
                cx yc = std::conj(s.ys(static_cast<Eigen::Index>(i),
                                       static_cast<Eigen::Index>(q)));
                add_product(ex, up,
                            bus_voltage(bus.id, s.phases[q]).conjugated()
                                .scaled(yc),
                            imag != 0, -1.0);
              }
            } else {
              for (std::size_t q = 0; q < s.phases.size(); ++q) {
                cx yc = std::conj(s.ys(static_cast<Eigen::Index>(i),
                                       static_cast<Eigen::Index>(q)));
                add_polar_product(ex, imag != 0, -1.0, yc,
                                  var("vm", bus.id, php), var("va", bus.id, php),
                                  var("vm", bus.id, s.phases[q]),
                                  var("va", bus.id, s.phases[q]));
              }
            }
          }

          for (const auto& br : network.branches) {
            for (int end = 0; end < 2; ++end) {
              const std::string& end_bus = end == 0 ? br.from_bus : br.to_bus;
              if (end_bus != bus.id) continue;
              if (!std::count(br.phases.begin(), br.phases.end(), php))
                continue;
              TargetKind tk =
                  end == 0 ? TargetKind::BranchFrom : TargetKind::BranchTo;
              ex.add_linear(comp_var(pref, tk, br.id, php), -1.0);
              if (kind == FormulationKind::LD3F) {
                const CMat& ysh = end == 0 ? br.ysh_from : br.ysh_to;
                ld3f_shunt_draw(ex, imag != 0, bus.id, br.phases, ysh, php,
                                -1.0);
              }
            }
          }

          const char* suffix =
              kind == FormulationKind::IVR ? (imag ? ":im" : ":re")
                                           : (imag ? ":q" : ":p");
          push(RowTag::Network, Rel::Eq, std::move(ex),
               "balance:" + bus.id + ":" + std::to_string(php) + suffix);
        }
      }
    }
  }
};

}  // namespace

void lindist3flow_matrices(const Branch& branch, Eigen::MatrixXd& mp,
                           Eigen::MatrixXd& mq) {
  auto n = static_cast<Eigen::Index>(branch.phases.size());
  mp.resize(n, n);
  mq.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index q = 0; q < n; ++q) {
      int dp = branch.phases[static_cast<std::size_t>(i)] -
               branch.phases[static_cast<std::size_t>(q)];
      cx gamma = std::polar(1.0, -2.0 * kPi / 3.0 * static_cast<double>(dp));
      cx m = branch.z(i, q) * std::conj(gamma);
      mp(i, q) = 2.0 * m.real();
      mq(i, q) = 2.0 * m.imag();
    }
  }
}

ConstraintSet build_ohm_kirchhoff(FormulationKind kind, const Network& network,
                                  const VariableSpace& space) {
  RowBuilder b{network, space, kind, {}};
  for (const auto& br : network.branches) {
    switch (kind) {
      case FormulationKind::IVR: b.ivr_branch_rows(br); break;
      case FormulationKind::ACR:
      case FormulationKind::ACP: b.ac_branch_rows(br); break;
      case FormulationKind::LD3F: b.ld3f_branch_rows(br); break;
    }
  }
  b.balance_rows();
  return std::move(b.set);
}

ConstraintSet fix_reference(FormulationKind kind, const Network& network,
                            const VariableSpace& space) {
  ConstraintSet set;
  if (kind == FormulationKind::LD3F) return set;
  const Bus& ref = network.reference_bus();
  for (std::size_t i = 0; i < ref.phases.size(); ++i) {
    int ph = ref.phases[i];
    double theta = ref.reference_angles[i];
    if (kind == FormulationKind::ACP) {
      Expression ex;
      ex.add_linear(space.index_of(var_name("va", ref.id, ph)), 1.0);
      ex.add_constant(-theta);
      ConstraintRow row;
      row.tag = RowTag::Network;
      row.expr = std::move(ex);
      row.label = "refpin:" + ref.id + ":" + std::to_string(ph);
      set.rows.push_back(std::move(row));
    } else {
      int vr = space.index_of(var_name("vr", ref.id, ph));
      int vi = space.index_of(var_name("vi", ref.id, ph));
      Expression pin;
      pin.add_linear(vi, std::cos(theta));
      pin.add_linear(vr, -std::sin(theta));
      ConstraintRow prow;
      prow.tag = RowTag::Network;
      prow.expr = std::move(pin);
      prow.label = "refpin:" + ref.id + ":" + std::to_string(ph);
      set.rows.push_back(std::move(prow));

      Expression half;  // keep the phasor in the measured half-plane
      half.add_linear(vr, -std::cos(theta));
      half.add_linear(vi, -std::sin(theta));
      ConstraintRow hrow;
      hrow.tag = RowTag::Bound;
      hrow.rel = Rel::Le;
      hrow.expr = std::move(half);
      hrow.label = "refsign:" + ref.id + ":" + std::to_string(ph);
      set.rows.push_back(std::move(hrow));
    }
  }
  return set;
}

ConstraintSet build_bounds(const VariableSpace& space, const BoundSpec& spec) {
  ConstraintSet set;
  if (spec.empty()) return set;
  if (spec.vm_min && spec.vm_max && !(*spec.vm_min < *spec.vm_max))
    throw InvalidBound("voltage bounds must satisfy lower < upper");
  if (spec.vm_min && *spec.vm_min < 0.0)
    throw InvalidBound("voltage magnitude lower bound must be nonnegative");

  for (const auto& [bus, ph] : space.bus_phases()) {
    auto push = [&](Expression ex, const std::string& label) {
      ex.merge_terms();
      ConstraintRow row;
      row.tag = RowTag::Bound;
      row.rel = Rel::Le;
      row.expr = std::move(ex);
      row.label = label + ":" + bus + ":" + std::to_string(ph);
      set.rows.push_back(std::move(row));
    };
    switch (space.kind()) {
      case FormulationKind::ACP: {
        int vm = space.index_of(var_name("vm", bus, ph));
        if (spec.vm_min) {
          Expression lo;
          lo.add_constant(*spec.vm_min);
          lo.add_linear(vm, -1.0);
          push(std::move(lo), "vmin");
        }
        if (spec.vm_max) {
          Expression hi;
          hi.add_linear(vm, 1.0);
          hi.add_constant(-*spec.vm_max);
          push(std::move(hi), "vmax");
        }
        break;
      }
      case FormulationKind::ACR:
      case FormulationKind::IVR: {
        int vr = space.index_of(var_name("vr", bus, ph));
        int vi = space.index_of(var_name("vi", bus, ph));
        if (spec.vm_min) {
          Expression lo;
          lo.add_constant(*spec.vm_min * *spec.vm_min);
          lo.add_quadratic(vr, vr, -1.0);
          lo.add_quadratic(vi, vi, -1.0);
          push(std::move(lo), "vmin");
        }
        if (spec.vm_max) {
          Expression hi;
          hi.add_quadratic(vr, vr, 1.0);
          hi.add_quadratic(vi, vi, 1.0);
          hi.add_constant(-*spec.vm_max * *spec.vm_max);
          push(std::move(hi), "vmax");
        }
        break;
      }
      case FormulationKind::LD3F: {
        int w = space.index_of(var_name("w", bus, ph));
        if (spec.vm_min) {
          Expression lo;
          lo.add_constant(*spec.vm_min * *spec.vm_min);
          lo.add_linear(w, -1.0);
          push(std::move(lo), "vmin");
        }
        if (spec.vm_max) {
          Expression hi;
          hi.add_linear(w, 1.0);
          hi.add_constant(-*spec.vm_max * *spec.vm_max);
          push(std::move(hi), "vmax");
        }
        break;
      }
    }
  }
  return set;
}

}  // namespace gridstate
