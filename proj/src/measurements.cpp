#include "gridstate/measurements.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "gridstate/rng.hpp"

namespace gridstate {

std::string to_string(TargetKind kind) {
  switch (kind) {
    case TargetKind::Bus: return "bus";
    case TargetKind::BranchFrom: return "branch_from";
    case TargetKind::BranchTo: return "branch_to";
    case TargetKind::Load: return "load";
    case TargetKind::Generator: return "generator";
  }
  return "?";
}

TargetKind target_kind_from_string(const std::string& s) {
  if (s == "bus") return TargetKind::Bus;
  if (s == "branch_from") return TargetKind::BranchFrom;
  if (s == "branch_to") return TargetKind::BranchTo;
  if (s == "load") return TargetKind::Load;
  if (s == "generator") return TargetKind::Generator;
  throw ParseError("unknown target kind \"" + s + "\"");
}

std::string to_string(Quantity q) {
  switch (q) {
    case Quantity::Vm: return "vm";
    case Quantity::Va: return "va";
    case Quantity::Vre: return "vre";
    case Quantity::Vim: return "vim";
    case Quantity::W: return "w";
    case Quantity::P: return "p";
    case Quantity::Q: return "q";
    case Quantity::Im: return "im";
    case Quantity::Ia: return "ia";
    case Quantity::Ire: return "ire";
    case Quantity::Iim: return "iim";
  }
  return "?";
}

Quantity quantity_from_string(const std::string& s) {
  if (s == "vm") return Quantity::Vm;
  if (s == "va") return Quantity::Va;
  if (s == "vre") return Quantity::Vre;
  if (s == "vim") return Quantity::Vim;
  if (s == "w") return Quantity::W;
  if (s == "p") return Quantity::P;
  if (s == "q") return Quantity::Q;
  if (s == "im") return Quantity::Im;
  if (s == "ia") return Quantity::Ia;
  if (s == "ire") return Quantity::Ire;
  if (s == "iim") return Quantity::Iim;
  throw ParseError("unknown quantity \"" + s + "\"");
}

bool is_voltage_quantity(Quantity q) {
  switch (q) {
    case Quantity::Vm:
    case Quantity::Va:
    case Quantity::Vre:
    case Quantity::Vim:
    case Quantity::W:
      return true;
    default:
      return false;
  }
}

bool is_angle_quantity(Quantity q) {
  return q == Quantity::Va || q == Quantity::Ia;
}

double sigma_from_accuracy(double max_error_fraction) {
  if (!(max_error_fraction > 0.0))
    throw InvalidAccuracy("accuracy class must be positive");
  return max_error_fraction / 3.0;
}

namespace {

const Branch* find_slack_branch(const Network& network, const Bus& ref) {
  for (const auto& br : network.branches)
    if (br.from_bus == ref.id || br.to_bus == ref.id) return &br;
  return nullptr;
}

struct PlanBuilder {
  DevicePlan plan;
  std::set<std::pair<MeasurementTarget, Quantity>> seen;

  void add(MeasurementTarget target, Quantity q, double accuracy) {
    if (!seen.emplace(target, q).second) return;
    plan.entries.push_back(DeviceEntry{std::move(target), q, accuracy});
  }
};

// Feeder-head entries, one per slack-branch phase: voltage at the reference
// bus and flow/current on the branch end that touches it.
void add_substation(PlanBuilder& b, const Network& network, bool phasor) {
  const Bus& ref = network.reference_bus();
  const Branch* slack = find_slack_branch(network, ref);
  const std::vector<int>& phases = slack ? slack->phases : ref.phases;
  for (int ph : phases) {
    MeasurementTarget vbus{TargetKind::Bus, ref.id, ph};
    if (phasor) {
      b.add(vbus, Quantity::Vre, kSubstationAccuracy);
      b.add({TargetKind::Bus, ref.id, ph}, Quantity::Vim, kSubstationAccuracy);
    } else {
      b.add(vbus, Quantity::Vm, kSubstationAccuracy);
    }
    if (!slack) continue;
    TargetKind end = slack->from_bus == ref.id ? TargetKind::BranchFrom
                                               : TargetKind::BranchTo;
    MeasurementTarget flow{end, slack->id, ph};
    if (phasor) {
      b.add(flow, Quantity::Ire, kSubstationAccuracy);
      b.add({end, slack->id, ph}, Quantity::Iim, kSubstationAccuracy);
    } else {
      b.add(flow, Quantity::P, kSubstationAccuracy);
      b.add({end, slack->id, ph}, Quantity::Q, kSubstationAccuracy);
    }
  }
}

}  // namespace

DevicePlan smart_meter_plan(const Network& network) {
  PlanBuilder b;
  for (const auto& load : network.loads) {
    for (int ph : load.phases) {
      b.add({TargetKind::Bus, load.bus, ph}, Quantity::Vm, kMeterAccuracy);
      b.add({TargetKind::Load, load.id, ph}, Quantity::P, kMeterAccuracy);
      b.add({TargetKind::Load, load.id, ph}, Quantity::Q, kMeterAccuracy);
    }
  }
  add_substation(b, network, /*phasor=*/false);
  return std::move(b.plan);
}

DevicePlan pmu_plan(const Network& network) {
  PlanBuilder b;
  for (const auto& load : network.loads) {
    for (int ph : load.phases) {
      b.add({TargetKind::Bus, load.bus, ph}, Quantity::Vre, kMeterAccuracy);
      b.add({TargetKind::Bus, load.bus, ph}, Quantity::Vim, kMeterAccuracy);
      b.add({TargetKind::Load, load.id, ph}, Quantity::Ire, kMeterAccuracy);
      b.add({TargetKind::Load, load.id, ph}, Quantity::Iim, kMeterAccuracy);
    }
  }
  add_substation(b, network, /*phasor=*/true);
  return std::move(b.plan);
}

namespace {

double truth_value(const PFSolution& truth, const MeasurementTarget& target,
                   Quantity q) {
  if (is_voltage_quantity(q)) {
    auto it = truth.voltage.find(target);
    if (it == truth.voltage.end())
      throw MissingTruth("no voltage in power-flow solution for bus \"" +
                         target.element + "\" phase " +
                         std::to_string(target.phase));
    cx u = it->second;
    switch (q) {
      case Quantity::Vm: return std::abs(u);
      case Quantity::Va: return std::arg(u);
      case Quantity::Vre: return u.real();
      case Quantity::Vim: return u.imag();
      case Quantity::W: return std::norm(u);
      default: break;
    }
  }
  const auto& table = (q == Quantity::P || q == Quantity::Q) ? truth.power
                                                             : truth.current;
  auto it = table.find(target);
  if (it == table.end())
    throw MissingTruth("no " + to_string(q) +
                       " truth for target " + to_string(target.kind) + " \"" +
                       target.element + "\" phase " +
                       std::to_string(target.phase));
  cx v = it->second;
  switch (q) {
    case Quantity::P: return v.real();
    case Quantity::Q: return v.imag();
    case Quantity::Im: return std::abs(v);
    case Quantity::Ia: return std::arg(v);
    case Quantity::Ire: return v.real();
    case Quantity::Iim: return v.imag();
    default: break;
  }
  throw MissingTruth("unsupported quantity for truth lookup");
}

}  // namespace

std::vector<Measurement> simulate_measurements(const PFSolution& truth,
                                               const DevicePlan& plan,
                                               std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Measurement> out;
  out.reserve(plan.entries.size());
  for (const auto& entry : plan.entries) {
    double sigma = sigma_from_accuracy(entry.accuracy);
    double z = truth_value(truth, entry.target, entry.quantity) +
               rng.gaussian(sigma);
    out.push_back(Measurement{entry.target, entry.quantity, z, sigma});
  }
  return out;
}

std::vector<Measurement> drop_measurements(const Network& network,
                                           const std::vector<Measurement>& set,
                                           int keep_loads, std::uint64_t seed) {
  // Metered loads, canonical order.
  std::set<std::string> metered_set;
  for (const auto& m : set)
    if (m.target.kind == TargetKind::Load) metered_set.insert(m.target.element);
  std::vector<std::string> metered(metered_set.begin(), metered_set.end());

  if (keep_loads < 0) keep_loads = 0;
  if (keep_loads > static_cast<int>(metered.size()))
    keep_loads = static_cast<int>(metered.size());

  Rng rng(seed);
  for (int i = static_cast<int>(metered.size()) - 1; i > 0; --i) {
    int j = rng.uniform_int(0, i);
    std::swap(metered[static_cast<std::size_t>(i)],
              metered[static_cast<std::size_t>(j)]);
  }
  std::set<std::string> kept(metered.begin(), metered.begin() + keep_loads);

  // Bus-phases owned by metered loads, and by the kept subset.
  std::set<std::pair<std::string, int>> metered_busph, kept_busph;
  for (const auto& load : network.loads) {
    if (!metered_set.count(load.id)) continue;
    for (int ph : load.phases) {
      metered_busph.emplace(load.bus, ph);
      if (kept.count(load.id)) kept_busph.emplace(load.bus, ph);
    }
  }

  const Bus& ref = network.reference_bus();
  const Branch* slack = find_slack_branch(network, ref);

  std::vector<Measurement> out;
  for (const auto& m : set) {
    const auto& t = m.target;
    bool keep = true;
    if (t.kind == TargetKind::Load) {
      keep = kept.count(t.element) > 0;
    } else if (t.kind == TargetKind::Bus) {
      if (t.element == ref.id) {
        keep = true;  // substation voltage
      } else if (metered_busph.count({t.element, t.phase})) {
        keep = kept_busph.count({t.element, t.phase}) > 0;
      }
    } else if (t.kind == TargetKind::BranchFrom ||
               t.kind == TargetKind::BranchTo) {
      keep = true;  // feeder head or other line meters
      (void)slack;
    }
    if (keep) out.push_back(m);
  }
  return out;
}

void save_measurements_csv(const std::vector<Measurement>& set,
                           const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write measurement file \"" + path + "\"");
  out << "target_kind,element_id,phase,quantity,value,sigma,unit\n";
  char buf[64];
  for (const auto& m : set) {
    out << to_string(m.target.kind) << ',' << m.target.element << ','
        << m.target.phase << ',' << to_string(m.quantity) << ',';
    std::snprintf(buf, sizeof buf, "%.17g", m.value);
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", m.sigma);
    out << buf << ',' << (is_angle_quantity(m.quantity) ? "rad" : "pu")
        << '\n';
  }
}

std::vector<Measurement> load_measurements_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open measurement file \"" + path + "\"");
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("measurement file \"" + path + "\" is empty");
  auto strip = [](std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    return s;
  };
  if (strip(line) != "target_kind,element_id,phase,quantity,value,sigma,unit")
    throw ParseError("measurement file \"" + path + "\": bad header row");

  std::vector<Measurement> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip(line);
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() != 7)
      throw ParseError("measurement file \"" + path + "\" line " +
                       std::to_string(lineno) + ": expected 7 columns");
    Measurement m;
    m.target.kind = target_kind_from_string(cols[0]);
    m.target.element = cols[1];
    try {
      m.target.phase = std::stoi(cols[2]);
      m.value = std::stod(cols[4]);
      m.sigma = std::stod(cols[5]);
    } catch (const std::exception&) {
      throw ParseError("measurement file \"" + path + "\" line " +
                       std::to_string(lineno) + ": bad numeric field");
    }
    m.quantity = quantity_from_string(cols[3]);
    const std::string& unit = cols[6];
    if (unit == "deg") {
      if (!is_angle_quantity(m.quantity))
        throw ParseError("measurement file \"" + path + "\" line " +
                         std::to_string(lineno) +
                         ": unit deg on a non-angle quantity");
      m.value *= kPi / 180.0;
      m.sigma *= kPi / 180.0;
    } else if (unit != "pu" && unit != "rad") {
      throw ParseError("measurement file \"" + path + "\" line " +
                       std::to_string(lineno) + ": unknown unit \"" + unit +
                       "\"");
    }
    if (!(m.sigma > 0.0))
      throw ParseError("measurement file \"" + path + "\" line " +
                       std::to_string(lineno) + ": sigma must be positive");
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace gridstate
