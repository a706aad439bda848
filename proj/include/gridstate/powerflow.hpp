#pragma once

#include <map>

#include "gridstate/netmodel.hpp"
#include "gridstate/target.hpp"

namespace gridstate {

// Exact multi-phase power-flow solution used as ground truth. Voltages are
// complex per bus-phase; currents/powers per component-phase. Branch-end
// quantities are measured out of the bus into the branch; load entries are
// positive draws, generator entries positive injections.
struct PFSolution {
  std::map<MeasurementTarget, cx> voltage;  // TargetKind::Bus entries
  std::map<MeasurementTarget, cx> current;  // component entries
  std::map<MeasurementTarget, cx> power;    // component entries
  int iterations = 0;
  double max_mismatch = 0.0;

  cx voltage_at(const std::string& bus, int phase) const;
};

// Radial networks: backward current aggregation / forward voltage update
// until the voltage change is below 1e-12. Meshed networks fall back to a
// rectangular Newton solve of the current-balance equations. Throws
// NoConvergence after the sweep/iteration cap.
PFSolution solve_powerflow(const Network& network);

// Newton path, usable on any topology (exposed for cross-checking).
PFSolution solve_powerflow_newton(const Network& network);

}  // namespace gridstate
