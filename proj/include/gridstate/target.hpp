#pragma once

#include <string>
#include <tuple>

namespace gridstate {

// What a meter points at: a bus (voltage family) or a component -- one end of
// a branch, a load, or a generator (power/current family).
enum class TargetKind { Bus, BranchFrom, BranchTo, Load, Generator };

struct MeasurementTarget {
  TargetKind kind = TargetKind::Bus;
  std::string element;
  int phase = 0;

  friend bool operator==(const MeasurementTarget&,
                         const MeasurementTarget&) = default;
  friend auto operator<=>(const MeasurementTarget& a,
                          const MeasurementTarget& b) {
    return std::tie(a.kind, a.element, a.phase) <=>
           std::tie(b.kind, b.element, b.phase);
  }
};

std::string to_string(TargetKind kind);
TargetKind target_kind_from_string(const std::string& s);

}  // namespace gridstate
