#pragma once

// Fault list generation, single-fault injection runs and the parallel
// campaign runner.

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "slicefi/deps.hpp"
#include "slicefi/dynslice.hpp"
#include "slicefi/hdl.hpp"
#include "slicefi/sim.hpp"
#include "slicefi/types.hpp"

namespace slicefi::fault {

using Seconds = std::chrono::duration<double>;

class CampaignError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Outcome { Detected, Undetected, UndetectedCollapsed };

std::string_view to_string(Outcome outcome);

struct FaultVerdict {
  FaultDescriptor fault;
  Outcome outcome = Outcome::Undetected;
  std::optional<std::uint32_t> first_divergence_cycle;
  Seconds sim_time{0};
};

struct CampaignMode {
  enum class Kind { Exhaustive, StaticSlice, DynamicSlice, RandomSample };
  Kind kind = Kind::Exhaustive;
  std::uint64_t count = 0;  // RandomSample
  std::uint64_t seed = 0;   // RandomSample

  static CampaignMode exhaustive() { return {Kind::Exhaustive}; }
  static CampaignMode static_slice() { return {Kind::StaticSlice}; }
  static CampaignMode dynamic_slice() { return {Kind::DynamicSlice}; }
  static CampaignMode random_sample(std::uint64_t count, std::uint64_t seed) {
    return {Kind::RandomSample, count, seed};
  }

  friend bool operator==(const CampaignMode&, const CampaignMode&) = default;
};

/// "exhaustive", "static_slice", "dynamic_slice", "random_sample".
std::string_view to_string(CampaignMode::Kind kind);
/// Parses the names above; random_sample takes count and seed separately.
std::optional<CampaignMode::Kind> parse_mode(std::string_view name);

/// Slicing products a mode may need. Static slices are required by
/// static_slice mode, dynamic slices and the graph by dynamic_slice mode.
struct SliceArtifacts {
  const deps::DependencyGraph* graph = nullptr;
  std::vector<deps::StaticSlice> static_slices;
  std::vector<dynslice::DynamicSliceSet> dynamic_slices;
};

struct FaultList {
  std::vector<FaultDescriptor> inject;  // sorted, unique
  std::vector<dynslice::CriticalFaultTarget> critical;  // dynamic_slice mode
  std::vector<FaultVerdict> collapsed;  // dynamic_slice mode, sorted
  std::size_t universe_size = 0;
};

FaultList generate_fault_list(const hdl::Design& design, const CampaignMode& mode, const SliceArtifacts& artifacts,
                              CycleWindow window, const std::vector<std::string>& observation_points);

/// One faulty run compared cycle by cycle against `golden`.
FaultVerdict inject_and_classify(const hdl::Design& design, const sim::Stimulus& stimulus,
                                 const sim::ObservationTrace& golden, const FaultDescriptor& fault,
                                 const std::vector<std::string>& observation_points);

struct TimingProfile {
  Seconds golden_time{0};
  Seconds analysis_time{0};
  std::vector<std::pair<FaultDescriptor, Seconds>> per_fault_times;
  Seconds total_cpu_time{0};  // golden run plus every faulty run
};

struct CampaignRequest {
  const hdl::Design* design = nullptr;
  const sim::Stimulus* stimulus = nullptr;
  std::vector<std::string> observation_points;
  CampaignMode mode;
  std::optional<CycleWindow> window;  // whole stimulus when absent
  unsigned parallelism = 1;
  /// Overrides the dependency graph built from the design.
  const deps::DependencyGraph* graph = nullptr;
};

struct CampaignResult {
  CampaignMode mode;
  CycleWindow window;
  sim::SimResult golden;
  std::vector<deps::StaticSlice> static_slices;
  std::vector<dynslice::DynamicSliceSet> dynamic_slices;
  FaultList fault_list;
  std::vector<FaultVerdict> verdicts;  // injected and collapsed, sorted by fault
  TimingProfile timing;
  std::size_t faulty_runs = 0;

  std::vector<FaultDescriptor> detected() const;
  std::size_t count(Outcome outcome) const;
};

/// Golden run, slicing, fault list generation, then one faulty run per
/// injected descriptor on `parallelism` workers.
CampaignResult run_campaign(const CampaignRequest& request);

void write_verdicts_csv(std::ostream& out, const std::vector<FaultVerdict>& verdicts);
void write_verdicts_json(std::ostream& out, const std::vector<FaultVerdict>& verdicts);
void write_timing_json(std::ostream& out, const TimingProfile& timing);

}  // namespace slicefi::fault
