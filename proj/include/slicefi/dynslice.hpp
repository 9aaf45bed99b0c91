#pragma once

// Clock-cycle-long dynamic slices and the critical fault list derived from
// them. A fault is critical when some in-slice statement that reads the
// faulty register executes while the upset value is still held.

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "slicefi/deps.hpp"
#include "slicefi/hdl.hpp"
#include "slicefi/sim.hpp"
#include "slicefi/types.hpp"

namespace slicefi::dynslice {

using hdl::StmtId;

class SliceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DynamicSliceSet {
  std::string observation_point;
  std::vector<std::vector<StmtId>> per_cycle;  // sorted, one entry per cycle

  std::uint32_t length() const { return static_cast<std::uint32_t>(per_cycle.size()); }
};

/// per_cycle[t] = static members intersected with coverage.per_cycle[t].
/// Throws SliceError if the coverage mentions ids outside `design_size`.
DynamicSliceSet dynamic_slices(const deps::StaticSlice& slice, const sim::CoverageTrace& coverage,
                               std::size_t design_size);

struct CriticalFaultTarget {
  std::string reg;
  std::uint32_t bit = 0;
  std::uint32_t cycle = 0;
  std::uint32_t first_consumer_cycle = 0;

  FaultDescriptor descriptor() const { return {reg, bit, cycle}; }
  friend bool operator==(const CriticalFaultTarget&, const CriticalFaultTarget&) = default;
};

/// Critical (register, bit, cycle) targets for injection cycles in `window`.
///
/// For register r upset in cycle t, the upset value is held from t through
/// w, the first cycle >= t in which a statement defining r executes (or the
/// last cycle of the trace). (r, b, t) is critical iff a statement of the
/// observation point's static slice that reads r executes somewhere in
/// [t, w]. A register that is itself the observation point is read in
/// every cycle. All bits of a register share one verdict.
///
/// Throws SliceError if `window` is empty or extends past the trace.
std::vector<CriticalFaultTarget> critical_fault_list(const DynamicSliceSet& slices, const hdl::Design& design,
                                                     const deps::DependencyGraph& graph, CycleWindow window);

/// Every (register, bit, cycle) of the design for cycles in `window`, sorted.
std::vector<FaultDescriptor> fault_universe(const hdl::Design& design, CycleWindow window);

/// The entries of `universe` that are not critical, sorted.
std::vector<FaultDescriptor> collapse_report(const std::vector<FaultDescriptor>& universe,
                                             const std::vector<CriticalFaultTarget>& critical);

/// Merges critical lists for several observation points: one entry per
/// descriptor, keeping the earliest consumer cycle.
std::vector<CriticalFaultTarget> merge_critical(const std::vector<std::vector<CriticalFaultTarget>>& lists);

void write_critical_csv(std::ostream& out, const std::vector<CriticalFaultTarget>& targets);
void write_collapsed_csv(std::ostream& out, const std::vector<FaultDescriptor>& collapsed);

}  // namespace slicefi::dynslice
