#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridstate/errors.hpp"

namespace gridstate {

using cx = std::complex<double>;
using CMat = Eigen::MatrixXcd;

// Default reference angles for phases a/b/c.
inline constexpr double kPi = 3.14159265358979323846;
std::vector<double> default_reference_angles(const std::vector<int>& phases);

struct Bus {
  std::string id;
  std::vector<int> phases;  // sorted subset of {0,1,2}
  bool is_reference = false;
  std::vector<double> reference_angles;  // parallel to phases, reference only

  int phase_pos(int phase) const;  // -1 when the phase is absent
};

// Multi-conductor pi-section line: series impedance plus one shunt admittance
// block at each end, all |phases| x |phases| and potentially asymmetric.
struct Branch {
  std::string id;
  std::string from_bus;
  std::string to_bus;
  std::vector<int> phases;
  CMat z;
  CMat ysh_from;
  CMat ysh_to;
};

struct Load {
  std::string id;
  std::string bus;
  std::vector<int> phases;
  std::vector<cx> setpoint;  // per-phase apparent power draw, pu
};

struct Generator {
  std::string id;
  std::string bus;
  std::vector<int> phases;
  std::vector<cx> setpoint;  // per-phase apparent power injection, pu
};

struct Shunt {
  std::string id;
  std::string bus;
  std::vector<int> phases;
  CMat ys;
};

// Value-semantics network; treat as immutable once built and share freely.
struct Network {
  double base_power = 1.0;    // VA
  double base_voltage = 1.0;  // V, line-to-neutral
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Load> loads;
  std::vector<Generator> generators;
  std::vector<Shunt> shunts;

  const Bus* find_bus(const std::string& id) const;
  const Bus& bus(const std::string& id) const;           // throws InvalidNetwork
  const Branch& branch(const std::string& id) const;     // throws InvalidNetwork
  const Bus& reference_bus() const;                      // throws InvalidNetwork
  // First branch incident to the reference bus (the feeder head).
  const Branch& slack_branch() const;
  bool slack_branch_leaves_reference() const;  // from_bus == reference
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate(const Network& network);

// Y = Z^-1. Throws SingularImpedance when the condition estimate exceeds 1e12.
CMat series_admittance(const Branch& branch);

// Rescale an SI-valued network into the per-unit system (and back). The
// round trip is an identity.
Network per_unit_normalize(const Network& network, double base_power,
                           double base_voltage);
Network per_unit_denormalize(const Network& network);

// JSON persistence, schema "gridstate-net-1". Canonical key order makes
// save(load(f)) byte-identical.
Network load_network(const std::string& path);
void save_network(const Network& network, const std::string& path);
Network network_from_json_text(const std::string& text);
std::string network_to_json_text(const Network& network);

struct FeederSpec {
  enum class PhasePolicy { Mixed, SinglePhase, ThreePhase, Balanced };

  // Per-unit series self impedance range for a branch segment.
  double r_min = 0.002;
  double r_max = 0.015;
  double x_over_r = 0.75;
  double mutual_ratio = 0.25;  // off-diagonal coupling relative to self
  // Per-phase load draw range, pu.
  double p_min = 0.002;
  double p_max = 0.015;
  double q_over_p = 0.35;
  double load_scale = 1.0;
  PhasePolicy policy = PhasePolicy::Mixed;
  double shunt_b = 0.0;  // per-end shunt susceptance, 0 disables
};

// Deterministic synthetic radial feeder: bus 1 is the three-phase reference,
// every other bus carries one load. Mixed policy cycles phases a,b,c and puts
// a three-phase load on every fourth bus.
Network synth_radial_feeder(int n_bus, std::uint64_t seed,
                            const FeederSpec& spec = {});

}  // namespace gridstate
