#pragma once

// End-to-end pipeline, report metrics and campaign comparison.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "slicefi/fault.hpp"
#include "slicefi/types.hpp"

namespace slicefi::campaign {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode : int { kOk = 0, kParseError = 2, kConfigError = 3, kSimulationError = 4, kInternalError = 5 };

/// Maps an exception thrown by the pipeline to its exit code.
int exit_code_for(const std::exception& e);

/// A percentage rounded half-up to a fixed number of decimals.
struct Percentage {
  double value = 0.0;
  int decimals = 2;
  std::string text;  // e.g. "66.788"
};

/// 100 * detected / total. Throws std::domain_error if total is 0 or
/// detected > total.
Percentage fault_coverage(std::uint64_t detected, std::uint64_t total, int decimals = 3);
/// 100 * (baseline - pruned) / baseline. Throws std::domain_error if the
/// baseline is 0 or smaller than pruned.
Percentage reduction_percentage(std::uint64_t baseline_total, std::uint64_t pruned_total, int decimals = 2);
/// 100 * (baseline - pruned) / baseline. Throws std::domain_error unless
/// both times are positive.
Percentage time_saving_percentage(double baseline_time, double pruned_time, int decimals = 2);

struct CampaignConfig {
  std::filesystem::path design;
  std::filesystem::path stimulus;
  std::vector<std::string> observation_points;
  fault::CampaignMode mode = fault::CampaignMode::dynamic_slice();
  std::optional<fault::CampaignMode> baseline;
  std::optional<CycleWindow> window;
  unsigned parallelism = 1;
  std::filesystem::path output_dir = "slicefi-out";
  bool write_json = true;
  bool write_csv = true;

  /// Throws ConfigError on missing paths, no observation points or zero
  /// parallelism.
  void validate() const;
};

/// Reads a JSON config. Relative paths resolve against the config's folder.
CampaignConfig load_config(const std::filesystem::path& path);
CampaignConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
fault::CampaignMode mode_from_json(const nlohmann::json& j);

struct ModeSummary {
  fault::CampaignMode mode;
  std::uint64_t detected = 0;
  std::uint64_t undetected = 0;
  std::uint64_t collapsed = 0;
  std::uint64_t total_injected = 0;
  std::uint64_t universe = 0;
  std::optional<Percentage> fault_coverage;  // detected / injected
  std::optional<Percentage> fault_coverage_with_collapsed;  // detected / (injected + collapsed)
  double total_cpu_time = 0.0;  // seconds, wall-clock derived
  std::vector<FaultDescriptor> detected_faults;
};

ModeSummary summarize(const fault::CampaignResult& result);

struct CampaignReport {
  std::string design;
  std::uint32_t stimulus_cycles = 0;
  std::vector<std::string> observation_points;
  CycleWindow window;
  std::optional<ModeSummary> baseline;
  ModeSummary primary;
  std::optional<Percentage> reduction_vs_baseline;
  std::optional<Percentage> time_saving_vs_baseline;
  std::optional<bool> detected_equivalent_to_baseline;
};

CampaignReport make_report(const hdl::Design& design, const fault::CampaignResult& primary,
                           const fault::CampaignResult* baseline);

/// Keys holding wall-clock measurements; everything else is deterministic.
const std::vector<std::string>& wall_clock_keys();

nlohmann::ordered_json report_to_json(const CampaignReport& report);
CampaignReport report_from_json(const nlohmann::json& j);
CampaignReport load_report(const std::filesystem::path& path);
void write_report_csv(std::ostream& out, const CampaignReport& report);

struct PipelineOutcome {
  CampaignReport report;
  fault::CampaignResult primary;
  std::optional<fault::CampaignResult> baseline;
  std::vector<std::filesystem::path> artifacts;
};

/// parse -> slice -> golden run and coverage -> dynamic slices -> fault list
/// -> injection -> report, writing every intermediate product to
/// config.output_dir.
PipelineOutcome run_pipeline(const CampaignConfig& config);

struct Comparison {
  bool equivalent = false;
  std::vector<FaultDescriptor> only_in_a;  // detected by a, missed by b
  std::vector<FaultDescriptor> only_in_b;
  std::int64_t injected_delta = 0;  // b - a
  std::int64_t detected_delta = 0;
  double coverage_delta = 0.0;   // percentage points, b - a
  double cpu_time_delta = 0.0;   // seconds, b - a
  std::optional<Percentage> reduction;    // of b relative to a
  std::optional<Percentage> time_saving;  // of b relative to a
};

/// Compares the primary campaigns of two reports. Throws ConfigError if
/// they do not share design, stimulus length, observation points and window.
Comparison compare_campaigns(const CampaignReport& a, const CampaignReport& b);
nlohmann::ordered_json comparison_to_json(const Comparison& c);

}  // namespace slicefi::campaign
