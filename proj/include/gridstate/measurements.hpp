#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gridstate/netmodel.hpp"
#include "gridstate/powerflow.hpp"
#include "gridstate/target.hpp"

namespace gridstate {

// The eleven measurable quantities: voltage magnitude/angle/rectangular
// parts, lifted squared magnitude, active/reactive power, current
// magnitude/angle/rectangular parts.
enum class Quantity { Vm, Va, Vre, Vim, W, P, Q, Im, Ia, Ire, Iim };

std::string to_string(Quantity q);
Quantity quantity_from_string(const std::string& s);
bool is_voltage_quantity(Quantity q);  // targets a bus
bool is_angle_quantity(Quantity q);    // value in radians

struct Measurement {
  MeasurementTarget target;
  Quantity quantity = Quantity::Vm;
  double value = 0.0;  // pu, or rad for angles
  double sigma = 0.0;  // same units, > 0
};

// A planned meter: where it sits, what it reads, and its accuracy class
// (maximum error as a fraction; sigma is one third of it).
struct DeviceEntry {
  MeasurementTarget target;
  Quantity quantity = Quantity::Vm;
  double accuracy = 0.0;
};

struct DevicePlan {
  std::vector<DeviceEntry> entries;
};

inline constexpr double kMeterAccuracy = 0.005;       // 0.5% class devices
inline constexpr double kSubstationAccuracy = 0.001;  // 0.1% feeder head

double sigma_from_accuracy(double max_error_fraction);

// Every customer gets |U|, P, Q meters on its phases; the feeder head gets
// |U| at the reference bus plus P, Q on the slack-branch end, one entry per
// slack-branch phase, at substation accuracy.
DevicePlan smart_meter_plan(const Network& network);

// Phasor devices replace every meter: rectangular voltage at the bus and
// rectangular current at the component, so all entries live natively in the
// rectangular current-voltage space.
DevicePlan pmu_plan(const Network& network);

// z = true value + eta, eta ~ N(0, sigma^2); pure in (truth, plan, seed).
std::vector<Measurement> simulate_measurements(const PFSolution& truth,
                                               const DevicePlan& plan,
                                               std::uint64_t seed);

// Remove every measurement belonging to all but keep_loads randomly chosen
// loads; feeder-head measurements always survive. The same seed yields nested
// kept sets across keep levels.
std::vector<Measurement> drop_measurements(const Network& network,
                                           const std::vector<Measurement>& set,
                                           int keep_loads, std::uint64_t seed);

// CSV round trip: target_kind,element_id,phase,quantity,value,sigma,unit.
void save_measurements_csv(const std::vector<Measurement>& set,
                           const std::string& path);
std::vector<Measurement> load_measurements_csv(const std::string& path);

}  // namespace gridstate
