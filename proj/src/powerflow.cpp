#include "gridstate/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include <Eigen/Dense>

namespace gridstate {

namespace {

using VecC = Eigen::VectorXcd;

constexpr int kMaxSweeps = 500;
constexpr double kSweepTol = 1e-12;
constexpr int kMaxNewton = 60;
constexpr double kNewtonTol = 1e-12;

struct BusState {
  const Bus* bus;
  VecC u;  // per phase, parallel to bus->phases
};

// Nominal balanced phasors at magnitude 1.
VecC nominal_voltage(const Bus& bus) {
  auto angles = bus.is_reference ? bus.reference_angles
                                 : default_reference_angles(bus.phases);
  VecC u(static_cast<Eigen::Index>(bus.phases.size()));
  for (std::size_t i = 0; i < bus.phases.size(); ++i)
    u(static_cast<Eigen::Index>(i)) = std::polar(1.0, angles[i]);
  return u;
}

// Select the branch-phase subvector of a bus voltage.
VecC restrict_to(const VecC& u, const Bus& bus, const std::vector<int>& phases) {
  VecC r(static_cast<Eigen::Index>(phases.size()));
  for (std::size_t i = 0; i < phases.size(); ++i)
    r(static_cast<Eigen::Index>(i)) =
        u(static_cast<Eigen::Index>(bus.phase_pos(phases[i])));
  return r;
}

bool is_radial(const Network& network) {
  if (network.branches.size() + 1 != network.buses.size()) return false;
  return validate(network).ok();
}

// Constant-power draw current conj(S / U) per element phase, accumulated
// into the bus vector with the given sign.
void add_injection_current(VecC& acc, const Bus& bus,
                           const std::vector<int>& phases,
                           const std::vector<cx>& setpoint, const VecC& u,
                           double sign) {
  for (std::size_t i = 0; i < phases.size(); ++i) {
    int pos = bus.phase_pos(phases[i]);
    cx up = u(pos);
    if (std::abs(up) < 1e-9) continue;  // collapsed voltage; let Newton fail
    acc(pos) += sign * std::conj(setpoint[i] / up);
  }
}

PFSolution package_solution(const Network& network,
                            const std::map<std::string, VecC>& volt,
                            int iterations) {
  PFSolution sol;
  sol.iterations = iterations;
  for (const auto& bus : network.buses) {
    const VecC& u = volt.at(bus.id);
    for (std::size_t i = 0; i < bus.phases.size(); ++i)
      sol.voltage[{TargetKind::Bus, bus.id, bus.phases[i]}] =
          u(static_cast<Eigen::Index>(i));
  }
  for (const auto& br : network.branches) {
    const Bus& fb = network.bus(br.from_bus);
    const Bus& tb = network.bus(br.to_bus);
    VecC uf = restrict_to(volt.at(fb.id), fb, br.phases);
    VecC ut = restrict_to(volt.at(tb.id), tb, br.phases);
    CMat y = series_admittance(br);
    VecC ifrom = y * (uf - ut) + br.ysh_from * uf;
    VecC ito = y * (ut - uf) + br.ysh_to * ut;
    for (std::size_t i = 0; i < br.phases.size(); ++i) {
      auto k = static_cast<Eigen::Index>(i);
      sol.current[{TargetKind::BranchFrom, br.id, br.phases[i]}] = ifrom(k);
      sol.current[{TargetKind::BranchTo, br.id, br.phases[i]}] = ito(k);
      sol.power[{TargetKind::BranchFrom, br.id, br.phases[i]}] =
          uf(k) * std::conj(ifrom(k));
      sol.power[{TargetKind::BranchTo, br.id, br.phases[i]}] =
          ut(k) * std::conj(ito(k));
    }
  }
  auto fill_elements = [&](const auto& elements, TargetKind kind) {
    for (const auto& e : elements) {
      const Bus& bus = network.bus(e.bus);
      const VecC& u = volt.at(bus.id);
      for (std::size_t i = 0; i < e.phases.size(); ++i) {
        cx up = u(bus.phase_pos(e.phases[i]));
        cx inj = std::conj(e.setpoint[i] / up);
        sol.current[{kind, e.id, e.phases[i]}] = inj;
        sol.power[{kind, e.id, e.phases[i]}] = e.setpoint[i];
      }
    }
  };
  fill_elements(network.loads, TargetKind::Load);
  fill_elements(network.generators, TargetKind::Generator);

  // Residual of the current balance at every bus (quality figure).
  double worst = 0.0;
  for (const auto& bus : network.buses) {
    if (bus.is_reference) continue;
    VecC acc = VecC::Zero(static_cast<Eigen::Index>(bus.phases.size()));
    for (const auto& br : network.branches) {
      if (br.from_bus != bus.id && br.to_bus != bus.id) continue;
      for (std::size_t i = 0; i < br.phases.size(); ++i) {
        TargetKind end = br.from_bus == bus.id ? TargetKind::BranchFrom
                                               : TargetKind::BranchTo;
        acc(bus.phase_pos(br.phases[i])) +=
            sol.current.at({end, br.id, br.phases[i]});
      }
    }
    for (const auto& s : network.shunts) {
      if (s.bus != bus.id) continue;
      VecC us = restrict_to(volt.at(bus.id), bus, s.phases);
      VecC is = s.ys * us;
      for (std::size_t i = 0; i < s.phases.size(); ++i)
        acc(bus.phase_pos(s.phases[i])) += is(static_cast<Eigen::Index>(i));
    }
    for (const auto& l : network.loads)
      if (l.bus == bus.id)
        add_injection_current(acc, bus, l.phases, l.setpoint, volt.at(bus.id),
                              1.0);
    for (const auto& g : network.generators)
      if (g.bus == bus.id)
        add_injection_current(acc, bus, g.phases, g.setpoint, volt.at(bus.id),
                              -1.0);
    worst = std::max(worst, acc.cwiseAbs().maxCoeff());
  }
  sol.max_mismatch = worst;
  return sol;
}

PFSolution sweep_powerflow(const Network& network) {
  const Bus& ref = network.reference_bus();

  // Root the tree at the reference bus.
  std::map<std::string, std::vector<const Branch*>> incident;
  for (const auto& br : network.branches) {
    incident[br.from_bus].push_back(&br);
    incident[br.to_bus].push_back(&br);
  }
  struct TreeNode {
    const Bus* bus;
    const Branch* parent_branch = nullptr;  // towards the root
    std::string parent;
  };
  std::map<std::string, TreeNode> nodes;
  std::vector<std::string> order;  // root first
  nodes[ref.id] = TreeNode{&ref};
  order.push_back(ref.id);
  for (std::size_t head = 0; head < order.size(); ++head) {
    const std::string& cur = order[head];
    for (const Branch* br : incident[cur]) {
      const std::string& other = br->from_bus == cur ? br->to_bus : br->from_bus;
      if (nodes.count(other)) continue;
      nodes[other] = TreeNode{&network.bus(other), br, cur};
      order.push_back(other);
    }
  }

  std::map<std::string, VecC> volt;
  for (const auto& bus : network.buses) volt[bus.id] = nominal_voltage(bus);
  std::map<std::string, CMat> series_y;
  for (const auto& br : network.branches) series_y[br.id] = series_admittance(br);

  // Series current in tree direction (parent -> child), keyed by child bus.
  std::map<std::string, VecC> tree_current;

  int sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    // Backward: accumulate demanded current from the leaves up.
    std::map<std::string, VecC> demand;  // per bus, bus-phase indexed
    for (const auto& bus : network.buses)
      demand[bus.id] =
          VecC::Zero(static_cast<Eigen::Index>(bus.phases.size()));
    for (const auto& l : network.loads)
      add_injection_current(demand[l.bus], network.bus(l.bus), l.phases,
                            l.setpoint, volt[l.bus], 1.0);
    for (const auto& g : network.generators)
      add_injection_current(demand[g.bus], network.bus(g.bus), g.phases,
                            g.setpoint, volt[g.bus], -1.0);
    for (const auto& s : network.shunts) {
      const Bus& bus = network.bus(s.bus);
      VecC us = restrict_to(volt[s.bus], bus, s.phases);
      VecC is = s.ys * us;
      for (std::size_t i = 0; i < s.phases.size(); ++i)
        demand[s.bus](bus.phase_pos(s.phases[i])) +=
            is(static_cast<Eigen::Index>(i));
    }

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const TreeNode& node = nodes[*it];
      if (!node.parent_branch) continue;
      const Branch& br = *node.parent_branch;
      const Bus& child = *node.bus;
      const Bus& parent = network.bus(node.parent);
      bool stored_forward = br.to_bus == child.id;
      const CMat& ysh_child = stored_forward ? br.ysh_to : br.ysh_from;
      const CMat& ysh_parent = stored_forward ? br.ysh_from : br.ysh_to;

      VecC uc = restrict_to(volt[child.id], child, br.phases);
      VecC up = restrict_to(volt[parent.id], parent, br.phases);
      VecC i_tree(static_cast<Eigen::Index>(br.phases.size()));
      for (std::size_t i = 0; i < br.phases.size(); ++i)
        i_tree(static_cast<Eigen::Index>(i)) =
            demand[child.id](child.phase_pos(br.phases[i]));
      i_tree += ysh_child * uc;  // near-end pi section at the child
      tree_current[child.id] = i_tree;

      // Parent supplies the series current plus its own pi section.
      VecC parent_draw = i_tree + ysh_parent * up;
      for (std::size_t i = 0; i < br.phases.size(); ++i)
        demand[parent.id](parent.phase_pos(br.phases[i])) +=
            parent_draw(static_cast<Eigen::Index>(i));
    }

    // Forward: drop voltages down the tree.
    double delta = 0.0;
    for (const std::string& id : order) {
      const TreeNode& node = nodes[id];
      if (!node.parent_branch) continue;
      const Branch& br = *node.parent_branch;
      const Bus& child = *node.bus;
      const Bus& parent = network.bus(node.parent);
      VecC up = restrict_to(volt[parent.id], parent, br.phases);
      VecC u_new = up - br.z * tree_current[child.id];
      for (std::size_t i = 0; i < br.phases.size(); ++i) {
        auto pos = static_cast<Eigen::Index>(child.phase_pos(br.phases[i]));
        delta = std::max(delta, std::abs(volt[child.id](pos) -
                                         u_new(static_cast<Eigen::Index>(i))));
        volt[child.id](pos) = u_new(static_cast<Eigen::Index>(i));
      }
    }
    if (delta < kSweepTol) break;
  }
  if (sweep >= kMaxSweeps)
    throw NoConvergence(
        "power flow sweep did not converge; loading may be infeasible");
  return package_solution(network, volt, sweep + 1);
}

PFSolution newton_powerflow(const Network& network) {
  const Bus& ref = network.reference_bus();

  // Real-valued unknown layout: (re, im) per non-reference bus-phase.
  std::map<std::pair<std::string, int>, int> slot;  // bus-phase -> pair index
  std::vector<std::pair<const Bus*, int>> rev;
  for (const auto& bus : network.buses) {
    if (bus.is_reference) continue;
    for (int ph : bus.phases) {
      slot[{bus.id, ph}] = static_cast<int>(rev.size());
      rev.emplace_back(&bus, ph);
    }
  }
  int n = static_cast<int>(rev.size());

  std::map<std::string, VecC> volt;
  for (const auto& bus : network.buses) volt[bus.id] = nominal_voltage(bus);

  auto bus_voltage = [&](const std::string& id, int ph) -> cx& {
    const Bus& bus = network.bus(id);
    return volt[id](bus.phase_pos(ph));
  };

  // Complex bus admittance including branch pi sections and bus shunts.
  std::map<std::pair<std::pair<std::string, int>, std::pair<std::string, int>>,
           cx>
      ybus;
  auto add_y = [&](const std::string& bi, int pi, const std::string& bj,
                   int pj, cx y) {
    if (y == cx(0.0, 0.0)) return;
    ybus[{{bi, pi}, {bj, pj}}] += y;
  };
  for (const auto& br : network.branches) {
    CMat y = series_admittance(br);
    for (std::size_t a = 0; a < br.phases.size(); ++a) {
      for (std::size_t b = 0; b < br.phases.size(); ++b) {
        auto ai = static_cast<Eigen::Index>(a);
        auto bi = static_cast<Eigen::Index>(b);
        add_y(br.from_bus, br.phases[a], br.from_bus, br.phases[b],
              y(ai, bi) + br.ysh_from(ai, bi));
        add_y(br.from_bus, br.phases[a], br.to_bus, br.phases[b], -y(ai, bi));
        add_y(br.to_bus, br.phases[a], br.to_bus, br.phases[b],
              y(ai, bi) + br.ysh_to(ai, bi));
        add_y(br.to_bus, br.phases[a], br.from_bus, br.phases[b], -y(ai, bi));
      }
    }
  }
  for (const auto& s : network.shunts) {
    for (std::size_t a = 0; a < s.phases.size(); ++a)
      for (std::size_t b = 0; b < s.phases.size(); ++b)
        add_y(s.bus, s.phases[a], s.bus, s.phases[b],
              s.ys(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
  }

  int iter = 0;
  for (; iter < kMaxNewton; ++iter) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(2 * n);
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2 * n, 2 * n);

    // Linear network part.
    for (const auto& [key, y] : ybus) {
      auto it = slot.find(key.first);
      if (it == slot.end()) continue;  // reference row eliminated
      int row = it->second;
      cx uj = bus_voltage(key.second.first, key.second.second);
      cx contrib = y * uj;
      f(2 * row) += contrib.real();
      f(2 * row + 1) += contrib.imag();
      auto jt = slot.find(key.second);
      if (jt != slot.end()) {
        int col = jt->second;
        jac(2 * row, 2 * col) += y.real();
        jac(2 * row, 2 * col + 1) += -y.imag();
        jac(2 * row + 1, 2 * col) += y.imag();
        jac(2 * row + 1, 2 * col + 1) += y.real();
      }
    }

    // Constant-power elements.
    auto add_elements = [&](const auto& elements, double sign) {
      for (const auto& e : elements) {
        for (std::size_t i = 0; i < e.phases.size(); ++i) {
          auto it = slot.find({e.bus, e.phases[i]});
          if (it == slot.end()) continue;  // element on the slack bus
          int row = it->second;
          cx u = bus_voltage(e.bus, e.phases[i]);
          double uu = std::norm(u);
          double p = e.setpoint[i].real(), q = e.setpoint[i].imag();
          double ur = u.real(), ui = u.imag();
          double ire = (p * ur + q * ui) / uu;
          double iim = (p * ui - q * ur) / uu;
          f(2 * row) += sign * ire;
          f(2 * row + 1) += sign * iim;
          double d = uu * uu;
          jac(2 * row, 2 * row) += sign * (p / uu - (p * ur + q * ui) * 2 * ur / d);
          jac(2 * row, 2 * row + 1) +=
              sign * (q / uu - (p * ur + q * ui) * 2 * ui / d);
          jac(2 * row + 1, 2 * row) +=
              sign * (-q / uu - (p * ui - q * ur) * 2 * ur / d);
          jac(2 * row + 1, 2 * row + 1) +=
              sign * (p / uu - (p * ui - q * ur) * 2 * ui / d);
        }
      }
    };
    add_elements(network.loads, 1.0);
    add_elements(network.generators, -1.0);

    double resid = f.cwiseAbs().maxCoeff();
    if (resid < kNewtonTol) break;

    Eigen::VectorXd dx = jac.partialPivLu().solve(-f);
    for (int i = 0; i < n; ++i) {
      cx& u = bus_voltage(rev[static_cast<std::size_t>(i)].first->id,
                          rev[static_cast<std::size_t>(i)].second);
      u += cx(dx(2 * i), dx(2 * i + 1));
    }
  }
  if (iter >= kMaxNewton)
    throw NoConvergence("Newton power flow did not converge");
  return package_solution(network, volt, iter);
}

}  // namespace

cx PFSolution::voltage_at(const std::string& bus, int phase) const {
  auto it = voltage.find({TargetKind::Bus, bus, phase});
  if (it == voltage.end())
    throw MissingTruth("no voltage for bus \"" + bus + "\" phase " +
                       std::to_string(phase));
  return it->second;
}

PFSolution solve_powerflow(const Network& network) {
  auto report = validate(network);
  if (!report.ok())
    throw InvalidNetwork("power flow on invalid network: " +
                         report.violations.front());
  if (is_radial(network)) return sweep_powerflow(network);
  return newton_powerflow(network);
}

PFSolution solve_powerflow_newton(const Network& network) {
  return newton_powerflow(network);
}

}  // namespace gridstate
