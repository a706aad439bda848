#include "gridstate/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gridstate/rng.hpp"

namespace gridstate {

namespace {

using nlohmann::json;

json matrix_to_json(const CMat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

CMat matrix_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError("expected matrix array at " + where);
  auto n = j.size();
  CMat m(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    if (!j[r].is_array() || j[r].size() != n)
      throw SchemaError("matrix at " + where + " is not square");
    for (std::size_t c = 0; c < n; ++c) {
      const auto& e = j[r][c];
      if (!e.is_array() || e.size() != 2)
        throw SchemaError("matrix entry at " + where + " is not [re, im]");
      m(r, c) = cx(e[0].get<double>(), e[1].get<double>());
    }
  }
  return m;
}

json phasors_to_json(const std::vector<cx>& v) {
  json a = json::array();
  for (const cx& z : v) a.push_back(json::array({z.real(), z.imag()}));
  return a;
}

std::vector<cx> phasors_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError("expected [re, im] list at " + where);
  std::vector<cx> v;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2)
      throw SchemaError("entry at " + where + " is not [re, im]");
    v.emplace_back(e[0].get<double>(), e[1].get<double>());
  }
  return v;
}

const json& require(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end())
    throw SchemaError("missing required key \"" + std::string(key) + "\" in " +
                      where);
  return *it;
}

bool subset(const std::vector<int>& a, const std::vector<int>& b) {
  return std::all_of(a.begin(), a.end(), [&](int p) {
    return std::find(b.begin(), b.end(), p) != b.end();
  });
}

}  // namespace

std::vector<double> default_reference_angles(const std::vector<int>& phases) {
  static const double table[3] = {0.0, -2.0 * kPi / 3.0, 2.0 * kPi / 3.0};
  std::vector<double> a;
  a.reserve(phases.size());
  for (int p : phases) a.push_back(table[p]);
  return a;
}

int Bus::phase_pos(int phase) const {
  auto it = std::find(phases.begin(), phases.end(), phase);
  return it == phases.end() ? -1 : static_cast<int>(it - phases.begin());
}

const Bus* Network::find_bus(const std::string& id) const {
  for (const auto& b : buses)
    if (b.id == id) return &b;
  return nullptr;
}

const Bus& Network::bus(const std::string& id) const {
  const Bus* b = find_bus(id);
  if (!b) throw InvalidNetwork("unknown bus \"" + id + "\"");
  return *b;
}

const Branch& Network::branch(const std::string& id) const {
  for (const auto& br : branches)
    if (br.id == id) return br;
  throw InvalidNetwork("unknown branch \"" + id + "\"");
}

const Bus& Network::reference_bus() const {
  for (const auto& b : buses)
    if (b.is_reference) return b;
  throw InvalidNetwork("network has no reference bus");
}

const Branch& Network::slack_branch() const {
  const Bus& ref = reference_bus();
  for (const auto& br : branches)
    if (br.from_bus == ref.id || br.to_bus == ref.id) return br;
  throw InvalidNetwork("no branch incident to the reference bus");
}

bool Network::slack_branch_leaves_reference() const {
  return slack_branch().from_bus == reference_bus().id;
}

ValidationReport validate(const Network& network) {
  ValidationReport report;
  auto flag = [&](const std::string& msg) { report.violations.push_back(msg); };

  std::map<std::string, const Bus*> by_id;
  int n_ref = 0;
  for (const auto& b : network.buses) {
    if (by_id.count(b.id)) flag("duplicate bus id \"" + b.id + "\"");
    by_id[b.id] = &b;
    if (b.phases.empty()) flag("bus \"" + b.id + "\" has no phases");
    for (int p : b.phases)
      if (p < 0 || p > 2) flag("bus \"" + b.id + "\" has invalid phase index");
    if (b.is_reference) {
      ++n_ref;
      if (b.phases.size() != 3)
        flag("reference bus \"" + b.id + "\" must carry all three phases");
      if (b.reference_angles.size() != b.phases.size())
        flag("reference bus \"" + b.id + "\" angle count mismatch");
    } else if (!b.reference_angles.empty()) {
      flag("non-reference bus \"" + b.id + "\" carries reference angles");
    }
  }
  if (n_ref == 0) flag("no reference bus");
  if (n_ref > 1) flag("more than one reference bus");

  for (const auto& br : network.branches) {
    const Bus* fb = network.find_bus(br.from_bus);
    const Bus* tb = network.find_bus(br.to_bus);
    if (!fb) flag("branch \"" + br.id + "\" from-bus does not exist");
    if (!tb) flag("branch \"" + br.id + "\" to-bus does not exist");
    auto n = static_cast<Eigen::Index>(br.phases.size());
    if (br.phases.empty()) flag("branch \"" + br.id + "\" has no phases");
    if (fb && !subset(br.phases, fb->phases))
      flag("branch \"" + br.id + "\" phases not a subset of from-bus phases");
    if (tb && !subset(br.phases, tb->phases))
      flag("branch \"" + br.id + "\" phases not a subset of to-bus phases");
    if (br.z.rows() != n || br.z.cols() != n)
      flag("branch \"" + br.id + "\" impedance dimension mismatch");
    if (br.ysh_from.rows() != n || br.ysh_from.cols() != n ||
        br.ysh_to.rows() != n || br.ysh_to.cols() != n)
      flag("branch \"" + br.id + "\" shunt admittance dimension mismatch");
    if (br.z.rows() == n && br.z.cols() == n) {
      Eigen::FullPivLU<CMat> lu(br.z);
      if (!lu.isInvertible() || lu.rcond() < 1e-12)
        flag("branch \"" + br.id + "\" series impedance not invertible");
    }
  }

  // Connectivity of the branch graph over all buses.
  if (!network.buses.empty()) {
    std::map<std::string, int> idx;
    for (const auto& b : network.buses)
      idx[b.id] = static_cast<int>(idx.size());
    std::vector<std::vector<int>> adj(network.buses.size());
    for (const auto& br : network.branches) {
      auto f = idx.find(br.from_bus);
      auto t = idx.find(br.to_bus);
      if (f == idx.end() || t == idx.end()) continue;
      adj[f->second].push_back(t->second);
      adj[t->second].push_back(f->second);
    }
    std::vector<char> seen(network.buses.size(), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    std::size_t visited = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v : adj[u])
        if (!seen[v]) {
          seen[v] = 1;
          ++visited;
          stack.push_back(v);
        }
    }
    if (visited != network.buses.size()) flag("branch graph is not connected");
  }

  auto check_element = [&](const std::string& kind, const std::string& id,
                           const std::string& bus_id,
                           const std::vector<int>& phases) -> const Bus* {
    const Bus* b = network.find_bus(bus_id);
    if (!b) {
      flag(kind + " \"" + id + "\" references unknown bus \"" + bus_id + "\"");
      return nullptr;
    }
    if (!subset(phases, b->phases))
      flag(kind + " \"" + id + "\" phases not a subset of its bus phases");
    if (phases.empty()) flag(kind + " \"" + id + "\" has no phases");
    return b;
  };

  for (const auto& l : network.loads) {
    check_element("load", l.id, l.bus, l.phases);
    if (l.setpoint.size() != l.phases.size())
      flag("load \"" + l.id + "\" setpoint dimension mismatch");
  }
  for (const auto& g : network.generators) {
    check_element("generator", g.id, g.bus, g.phases);
    if (g.setpoint.size() != g.phases.size())
      flag("generator \"" + g.id + "\" setpoint dimension mismatch");
  }
  for (const auto& s : network.shunts) {
    check_element("shunt", s.id, s.bus, s.phases);
    auto n = static_cast<Eigen::Index>(s.phases.size());
    if (s.ys.rows() != n || s.ys.cols() != n)
      flag("shunt \"" + s.id + "\" admittance dimension mismatch");
  }

  return report;
}

CMat series_admittance(const Branch& branch) {
  Eigen::FullPivLU<CMat> lu(branch.z);
  if (!lu.isInvertible() || lu.rcond() < 1e-12 || !std::isfinite(lu.rcond()))
    throw SingularImpedance("branch \"" + branch.id +
                            "\": series impedance is numerically singular");
  return lu.inverse();
}

Network per_unit_normalize(const Network& network, double base_power,
                           double base_voltage) {
  if (!(base_power > 0.0) || !(base_voltage > 0.0))
    throw InvalidBase("per-unit bases must be strictly positive");
  double zb = base_voltage * base_voltage / base_power;
  Network out = network;
  out.base_power = base_power;
  out.base_voltage = base_voltage;
  for (auto& br : out.branches) {
    br.z /= zb;
    br.ysh_from *= zb;
    br.ysh_to *= zb;
  }
  for (auto& s : out.shunts) s.ys *= zb;
  for (auto& l : out.loads)
    for (auto& s : l.setpoint) s /= base_power;
  for (auto& g : out.generators)
    for (auto& s : g.setpoint) s /= base_power;
  return out;
}

Network per_unit_denormalize(const Network& network) {
  if (!(network.base_power > 0.0) || !(network.base_voltage > 0.0))
    throw InvalidBase("network carries non-positive bases");
  double zb = network.base_voltage * network.base_voltage / network.base_power;
  Network out = network;
  out.base_power = 1.0;
  out.base_voltage = 1.0;
  for (auto& br : out.branches) {
    br.z *= zb;
    br.ysh_from /= zb;
    br.ysh_to /= zb;
  }
  for (auto& s : out.shunts) s.ys /= zb;
  for (auto& l : out.loads)
    for (auto& s : l.setpoint) s *= network.base_power;
  for (auto& g : out.generators)
    for (auto& s : g.setpoint) s *= network.base_power;
  return out;
}

std::string network_to_json_text(const Network& network) {
  json j;
  j["schema"] = "gridstate-net-1";
  j["base_power_va"] = network.base_power;
  j["base_voltage_v"] = network.base_voltage;
  j["buses"] = json::array();
  for (const auto& b : network.buses) {
    json jb;
    jb["id"] = b.id;
    jb["phases"] = b.phases;
    jb["is_reference"] = b.is_reference;
    if (b.is_reference) jb["reference_angles"] = b.reference_angles;
    j["buses"].push_back(std::move(jb));
  }
  j["branches"] = json::array();
  for (const auto& br : network.branches) {
    json jb;
    jb["id"] = br.id;
    jb["from_bus"] = br.from_bus;
    jb["to_bus"] = br.to_bus;
    jb["phases"] = br.phases;
    jb["z"] = matrix_to_json(br.z);
    jb["ysh_from"] = matrix_to_json(br.ysh_from);
    jb["ysh_to"] = matrix_to_json(br.ysh_to);
    j["branches"].push_back(std::move(jb));
  }
  j["loads"] = json::array();
  for (const auto& l : network.loads) {
    json jl;
    jl["id"] = l.id;
    jl["bus"] = l.bus;
    jl["phases"] = l.phases;
    jl["setpoint"] = phasors_to_json(l.setpoint);
    j["loads"].push_back(std::move(jl));
  }
  j["generators"] = json::array();
  for (const auto& g : network.generators) {
    json jg;
    jg["id"] = g.id;
    jg["bus"] = g.bus;
    jg["phases"] = g.phases;
    jg["setpoint"] = phasors_to_json(g.setpoint);
    j["generators"].push_back(std::move(jg));
  }
  j["shunts"] = json::array();
  for (const auto& s : network.shunts) {
    json js;
    js["id"] = s.id;
    js["bus"] = s.bus;
    js["phases"] = s.phases;
    js["ys"] = matrix_to_json(s.ys);
    j["shunts"].push_back(std::move(js));
  }
  return j.dump(2) + "\n";
}

Network network_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("network JSON parse error: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("network file is not a JSON object");
  if (require(j, "schema", "top level").get<std::string>() != "gridstate-net-1")
    throw SchemaError("unsupported schema tag (want \"gridstate-net-1\")");

  Network n;
  try {
    n.base_power = require(j, "base_power_va", "top level").get<double>();
    n.base_voltage = require(j, "base_voltage_v", "top level").get<double>();
    for (const auto& jb : require(j, "buses", "top level")) {
      Bus b;
      b.id = require(jb, "id", "bus").get<std::string>();
      b.phases = require(jb, "phases", "bus " + b.id).get<std::vector<int>>();
      b.is_reference = require(jb, "is_reference", "bus " + b.id).get<bool>();
      if (b.is_reference) {
        if (jb.contains("reference_angles"))
          b.reference_angles =
              jb["reference_angles"].get<std::vector<double>>();
        else
          b.reference_angles = default_reference_angles(b.phases);
      }
      n.buses.push_back(std::move(b));
    }
    for (const auto& jb : require(j, "branches", "top level")) {
      Branch br;
      br.id = require(jb, "id", "branch").get<std::string>();
      br.from_bus = require(jb, "from_bus", "branch " + br.id).get<std::string>();
      br.to_bus = require(jb, "to_bus", "branch " + br.id).get<std::string>();
      br.phases = require(jb, "phases", "branch " + br.id).get<std::vector<int>>();
      br.z = matrix_from_json(require(jb, "z", "branch " + br.id),
                              "branch " + br.id + " z");
      br.ysh_from = matrix_from_json(require(jb, "ysh_from", "branch " + br.id),
                                     "branch " + br.id + " ysh_from");
      br.ysh_to = matrix_from_json(require(jb, "ysh_to", "branch " + br.id),
                                   "branch " + br.id + " ysh_to");
      n.branches.push_back(std::move(br));
    }
    for (const auto& jl : require(j, "loads", "top level")) {
      Load l;
      l.id = require(jl, "id", "load").get<std::string>();
      l.bus = require(jl, "bus", "load " + l.id).get<std::string>();
      l.phases = require(jl, "phases", "load " + l.id).get<std::vector<int>>();
      l.setpoint = phasors_from_json(require(jl, "setpoint", "load " + l.id),
                                     "load " + l.id + " setpoint");
      n.loads.push_back(std::move(l));
    }
    for (const auto& jg : require(j, "generators", "top level")) {
      Generator g;
      g.id = require(jg, "id", "generator").get<std::string>();
      g.bus = require(jg, "bus", "generator " + g.id).get<std::string>();
      g.phases =
          require(jg, "phases", "generator " + g.id).get<std::vector<int>>();
      g.setpoint =
          phasors_from_json(require(jg, "setpoint", "generator " + g.id),
                            "generator " + g.id + " setpoint");
      n.generators.push_back(std::move(g));
    }
    for (const auto& js : require(j, "shunts", "top level")) {
      Shunt s;
      s.id = require(js, "id", "shunt").get<std::string>();
      s.bus = require(js, "bus", "shunt " + s.id).get<std::string>();
      s.phases = require(js, "phases", "shunt " + s.id).get<std::vector<int>>();
      s.ys = matrix_from_json(require(js, "ys", "shunt " + s.id),
                              "shunt " + s.id + " ys");
      n.shunts.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("network JSON field error: ") + e.what());
  }
  return n;
}

Network load_network(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open network file \"" + path + "\"");
  std::ostringstream ss;
  ss << in.rdbuf();
  return network_from_json_text(ss.str());
}

void save_network(const Network& network, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write network file \"" + path + "\"");
  out << network_to_json_text(network);
}

Network synth_radial_feeder(int n_bus, std::uint64_t seed,
                            const FeederSpec& spec) {
  if (n_bus < 2) throw Error("synth_radial_feeder: n_bus must be >= 2");
  Rng rng(seed);
  Network n;
  n.base_power = 1.0;
  n.base_voltage = 1.0;

  std::vector<int> all_phases{0, 1, 2};
  for (int i = 1; i <= n_bus; ++i) {
    Bus b;
    b.id = "bus" + std::to_string(i);
    b.phases = all_phases;
    if (i == 1) {
      b.is_reference = true;
      b.reference_angles = default_reference_angles(b.phases);
    }
    n.buses.push_back(std::move(b));
  }

  bool balanced = spec.policy == FeederSpec::PhasePolicy::Balanced;
  for (int i = 2; i <= n_bus; ++i) {
    int parent = (i == 2) ? 1 : rng.uniform_int(1, i - 1);
    double r = rng.uniform(spec.r_min, spec.r_max);
    cx self(r, r * spec.x_over_r);
    cx mutual = spec.mutual_ratio * self;

    Branch br;
    br.id = "br" + std::to_string(i);
    br.from_bus = "bus" + std::to_string(parent);
    br.to_bus = "bus" + std::to_string(i);
    br.phases = all_phases;
    br.z = CMat::Constant(3, 3, mutual);
    if (!balanced) {
      // mild deterministic asymmetry in the coupling
      for (int rI = 0; rI < 3; ++rI)
        for (int cI = 0; cI < 3; ++cI)
          if (rI != cI) br.z(rI, cI) *= 1.0 + 0.1 * rng.uniform(-1.0, 1.0);
    }
    br.z.diagonal().setConstant(self);
    br.ysh_from = CMat::Zero(3, 3);
    br.ysh_to = CMat::Zero(3, 3);
    if (spec.shunt_b > 0.0) {
      br.ysh_from.diagonal().setConstant(cx(0.0, spec.shunt_b / 2.0));
      br.ysh_to.diagonal().setConstant(cx(0.0, spec.shunt_b / 2.0));
    }
    n.branches.push_back(std::move(br));

    Load l;
    l.id = "ld" + std::to_string(i);
    l.bus = "bus" + std::to_string(i);
    int k = i - 2;
    switch (spec.policy) {
      case FeederSpec::PhasePolicy::SinglePhase:
        l.phases = {k % 3};
        break;
      case FeederSpec::PhasePolicy::ThreePhase:
      case FeederSpec::PhasePolicy::Balanced:
        l.phases = all_phases;
        break;
      case FeederSpec::PhasePolicy::Mixed:
        if (k % 4 == 3)
          l.phases = all_phases;
        else
          l.phases = {k % 3};
        break;
    }
    if (balanced) {
      double p = spec.load_scale * rng.uniform(spec.p_min, spec.p_max);
      l.setpoint.assign(3, cx(p, p * spec.q_over_p));
    } else {
      for (std::size_t ph = 0; ph < l.phases.size(); ++ph) {
        double p = spec.load_scale * rng.uniform(spec.p_min, spec.p_max);
        l.setpoint.emplace_back(p, p * spec.q_over_p);
      }
    }
    n.loads.push_back(std::move(l));
  }
  return n;
}

}  // namespace gridstate
