#pragma once

#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gridstate/expr.hpp"
#include "gridstate/measurements.hpp"
#include "gridstate/netmodel.hpp"

namespace gridstate {

// ACP: polar voltage + power flows; ACR: rectangular voltage + power flows;
// IVR: rectangular voltage + rectangular currents (linear network rows);
// LD3F: squared voltage magnitude + power flows (linearized network rows).
enum class FormulationKind { ACP, ACR, IVR, LD3F };

std::string to_string(FormulationKind k);
// Accepts the result-file vocabulary (rACP/rACR/rIVR/LD3F), case-insensitive.
FormulationKind formulation_from_string(const std::string& s);
std::string eq_model_name(FormulationKind k);  // rACP, rACR, rIVR, LD3F

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct VarInfo {
  std::string name;
  double init = 0.0;
  double lb = -kInf;
  double ub = kInf;
};

// Name-indexed variable vector descriptor. Ordering is bus-major voltages
// first, then branch-end / load / generator variables, then whatever the
// problem assembly appends (auxiliaries, residuals).
class VariableSpace {
 public:
  explicit VariableSpace(FormulationKind kind) : kind_(kind) {}

  int add(const std::string& name, double init, double lb = -kInf,
          double ub = kInf);
  int index_of(const std::string& name) const;  // throws Error
  int find(const std::string& name) const;      // -1 when absent
  std::size_t size() const { return vars_.size(); }
  const VarInfo& info(int i) const { return vars_[static_cast<std::size_t>(i)]; }
  const std::string& name(int i) const { return info(i).name; }
  FormulationKind kind() const { return kind_; }

  void set_init(int i, double v) { vars_[static_cast<std::size_t>(i)].init = v; }
  void tighten_lower(int i, double lb);
  void tighten_upper(int i, double ub);

  std::vector<double> initial_point() const;

  // Bus-phases in construction order (used by bound rows and error metrics).
  const std::vector<std::pair<std::string, int>>& bus_phases() const {
    return bus_phases_;
  }
  void note_bus_phase(const std::string& bus, int phase) {
    bus_phases_.emplace_back(bus, phase);
  }

 private:
  FormulationKind kind_;
  std::vector<VarInfo> vars_;
  std::unordered_map<std::string, int> index_;
  std::vector<std::pair<std::string, int>> bus_phases_;
};

// Component prefix used inside variable names: from/to/load/gen.
std::string comp_prefix(TargetKind kind);

// Variable-name builders shared across modules.
std::string var_name(const std::string& prefix, const std::string& element,
                     int phase);

// Native variable prefix for a quantity under a formulation, or nullptr when
// the quantity needs a mapping constraint (or is not provided at all).
const char* native_prefix(FormulationKind kind, Quantity q);

// Full native variable name for a measurement target, empty when not native.
std::string native_variable_name(FormulationKind kind,
                                 const MeasurementTarget& target, Quantity q);

// The formulation's native variables over the network.
VariableSpace variables_of(FormulationKind kind, const Network& network);

// Ohm's and Kirchhoff's laws as equality rows in the formulation space.
ConstraintSet build_ohm_kirchhoff(FormulationKind kind, const Network& network,
                                  const VariableSpace& space);

// Pin the reference bus angles. Polar: direct; rectangular: a cross row plus
// a half-plane selector; LD3F: nothing to pin.
ConstraintSet fix_reference(FormulationKind kind, const Network& network,
                            const VariableSpace& space);

struct BoundSpec {
  std::optional<double> vm_min;
  std::optional<double> vm_max;

  bool empty() const { return !vm_min && !vm_max; }
};

// Optional voltage-magnitude box constraints on every bus-phase, expressed in
// the formulation's own coordinates.
ConstraintSet build_bounds(const VariableSpace& space, const BoundSpec& spec);

// LinDist3Flow sensitivity matrices for a branch: MP = 2 Re(Z o conj(gamma)),
// MQ = 2 Im(Z o conj(gamma)) with gamma_pq = alpha^(p-q), alpha = e^(-j2pi/3).
void lindist3flow_matrices(const Branch& branch, Eigen::MatrixXd& mp,
                           Eigen::MatrixXd& mq);

}  // namespace gridstate
