#pragma once

// Cycle-accurate two-phase interpreter for elaborated designs.
//
// Each cycle t:
//   1. if a fault targets cycle t, the named register bit is inverted; this is
//      the register value latched by the preceding clock edge (or by reset
//      for t = 0), so the upset is what cycle t's logic reads;
//   2. combinational statements settle in dependence order and the
//      observation points are sampled;
//   3. clocked processes run against the settled values and compute the next
//      register values, which are all committed together at the edge.
// Executed statements and taken branch arms are recorded per cycle.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "slicefi/hdl.hpp"
#include "slicefi/types.hpp"

namespace slicefi::sim {

using hdl::SignalId;
using hdl::StmtId;

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input values per cycle. `rows[t][k]` drives `inputs[k]` in cycle t.
struct Stimulus {
  std::vector<SignalId> inputs;
  std::vector<std::vector<std::uint64_t>> rows;

  std::uint32_t length() const { return static_cast<std::uint32_t>(rows.size()); }

  /// Throws SimulationError unless every cycle drives every input port of
  /// `design` with a value that fits its width.
  void validate(const hdl::Design& design) const;
};

/// Builds a stimulus from per-input columns; all columns must have equal length.
Stimulus make_stimulus(const hdl::Design& design, const std::map<std::string, std::vector<std::uint64_t>>& columns);

/// CSV: header of input port names (an optional leading `cycle` column is
/// ignored), then one row per cycle of binary literals of exact port width.
Stimulus parse_stimulus_csv(const hdl::Design& design, std::istream& in);
Stimulus load_stimulus(const hdl::Design& design, const std::string& path);
void write_stimulus_csv(std::ostream& out, const hdl::Design& design, const Stimulus& stimulus);

struct ObservationTrace {
  std::vector<std::string> points;
  std::vector<std::uint32_t> widths;
  std::vector<std::vector<std::uint64_t>> per_cycle;  // [cycle][point]

  friend bool operator==(const ObservationTrace&, const ObservationTrace&) = default;
};

struct CoverageTrace {
  std::vector<std::vector<StmtId>> per_cycle;  // sorted ids per cycle
  /// (branch head, arm index) taken per cycle, sorted.
  std::vector<std::vector<std::pair<StmtId, std::uint32_t>>> arms_per_cycle;

  std::uint32_t length() const { return static_cast<std::uint32_t>(per_cycle.size()); }
  friend bool operator==(const CoverageTrace&, const CoverageTrace&) = default;
};

struct SimResult {
  ObservationTrace observations;
  CoverageTrace coverage;
};

/// Resolves and validates observation point names. Throws hdl::UnknownSignal.
std::vector<SignalId> resolve_points(const hdl::Design& design, const std::vector<std::string>& points);

/// Step-wise simulation instance. Owns all mutable state; instances are
/// independent of each other.
class Simulation {
 public:
  Simulation(const hdl::Design& design, const Stimulus& stimulus, std::optional<FaultDescriptor> fault = std::nullopt,
             bool record_coverage = true);

  std::uint32_t cycle() const { return cycle_; }
  bool done() const { return cycle_ >= stimulus_->length(); }

  /// Settles the current cycle and stages the next register values.
  void evaluate();
  /// Commits staged register values and moves to the next cycle.
  void clock_edge();

  std::uint64_t value(SignalId signal) const { return values_[signal]; }
  const std::vector<StmtId>& executed() const { return executed_; }
  const std::vector<std::pair<StmtId, std::uint32_t>>& taken_arms() const { return taken_; }

 private:
  std::uint64_t eval(hdl::ExprId id) const;
  std::uint32_t select_arm(const hdl::Statement& branch, std::uint64_t cond) const;
  void run_clocked(StmtId id);

  const hdl::Design* design_;
  const Stimulus* stimulus_;
  std::optional<FaultDescriptor> fault_;
  std::optional<SignalId> fault_reg_;
  bool record_;
  std::uint32_t cycle_ = 0;
  std::vector<std::uint64_t> values_;
  std::vector<std::uint64_t> next_;
  std::vector<std::uint8_t> active_;
  std::vector<std::uint32_t> arm_;
  std::vector<StmtId> executed_;
  std::vector<std::pair<StmtId, std::uint32_t>> taken_;
  std::vector<SignalId> registers_;
};

/// Runs the whole stimulus. With `fault` absent this is the golden run.
SimResult simulate(const hdl::Design& design, const Stimulus& stimulus, const std::vector<std::string>& observation_points,
                   const std::optional<FaultDescriptor>& fault = std::nullopt);

/// Throws SimulationError if `fault` does not name a register bit and cycle
/// within the design and stimulus.
void validate_fault(const hdl::Design& design, const Stimulus& stimulus, const FaultDescriptor& fault);

struct CoverageSummary {
  std::vector<std::uint64_t> hits;  // per statement id
  std::uint32_t covered_statements = 0;
  std::uint32_t total_statements = 0;
  double block_coverage = 0.0;  // percent
  std::uint32_t taken_arms = 0;
  std::uint32_t total_arms = 0;
  double branch_coverage = 0.0;  // percent
  std::vector<std::pair<StmtId, std::uint32_t>> untaken_arms;
};

CoverageSummary coverage_summary(const CoverageTrace& trace, const hdl::Design& design);

/// CSV: `cycle` column plus one column per observation point, binary values.
void write_trace_csv(std::ostream& out, const ObservationTrace& trace);

std::string to_binary(std::uint64_t value, std::uint32_t width);

}  // namespace slicefi::sim
