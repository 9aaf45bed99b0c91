// slicefi: command line front end.
//
//   slicefi parse    DESIGN
//   slicefi slice    DESIGN --observe SIG...
//   slicefi simulate DESIGN --stimulus CSV --observe SIG... [--fault REG:BIT:CYCLE]
//   slicefi campaign --config FILE [overrides]
//   slicefi compare  REPORT_A REPORT_B [--require-equivalent]

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "slicefi/campaign.hpp"
#include "slicefi/deps.hpp"
#include "slicefi/hdl.hpp"
#include "slicefi/sim.hpp"

namespace {

using namespace slicefi;
namespace fs = std::filesystem;

hdl::Design read_design(const std::string& path) {
  if (!fs::exists(path)) throw campaign::ConfigError("design file '" + path + "' not found");
  return hdl::load_design(path);
}

std::uint32_t parse_uint(const std::string& text, const char* what) {
  std::size_t used = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) throw campaign::ConfigError(std::string("bad ") + what + " '" + text + "'");
  return static_cast<std::uint32_t>(v);
}

FaultDescriptor parse_fault(const std::string& text) {
  const auto a = text.rfind(':');
  const auto b = a == std::string::npos ? a : text.rfind(':', a - 1);
  if (a == std::string::npos || b == std::string::npos || b == 0) {
    throw campaign::ConfigError("fault must be REGISTER:BIT:CYCLE, got '" + text + "'");
  }
  return {text.substr(0, b), parse_uint(text.substr(b + 1, a - b - 1), "bit"), parse_uint(text.substr(a + 1), "cycle")};
}

CycleWindow parse_window(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw campaign::ConfigError("window must be BEGIN:END, got '" + text + "'");
  return {parse_uint(text.substr(0, colon), "window begin"), parse_uint(text.substr(colon + 1), "window end")};
}

fault::CampaignMode parse_mode_flag(const std::string& name, std::optional<std::uint64_t> count,
                                    std::optional<std::uint64_t> seed) {
  auto kind = fault::parse_mode(name);
  if (!kind) throw campaign::ConfigError("unknown campaign mode '" + name + "'");
  if (*kind == fault::CampaignMode::Kind::RandomSample) {
    if (!count) throw campaign::ConfigError("random_sample needs --count");
    return fault::CampaignMode::random_sample(*count, seed.value_or(0));
  }
  return fault::CampaignMode{*kind};
}

void print_summary(std::ostream& out, const char* role, const campaign::ModeSummary& s) {
  out << role << ' ' << fault::to_string(s.mode.kind) << ": injected " << s.total_injected << ", detected "
      << s.detected << ", undetected " << s.undetected << ", collapsed " << s.collapsed << ", coverage "
      << (s.fault_coverage ? s.fault_coverage->text + "%" : std::string("n/a")) << '\n';
}

int run_parse(const std::string& path) {
  if (!fs::exists(path)) throw campaign::ConfigError("design file '" + path + "' not found");
  const hdl::SourceUnit source = hdl::SourceUnit::from_file(path);
  auto result = hdl::parse(source);
  if (auto* diags = std::get_if<std::vector<hdl::Diagnostic>>(&result)) {
    for (const auto& d : *diags) std::cerr << hdl::format_diagnostic(source, d) << '\n';
    return campaign::kParseError;
  }
  std::cout << hdl::format_statement_table(std::get<hdl::Design>(result));
  return campaign::kOk;
}

int run_slice(const std::string& path, const std::vector<std::string>& points) {
  const auto design = read_design(path);
  const auto graph = deps::build_graph(design);
  for (const auto& point : points) {
    const auto slice = deps::static_slice(graph, design, point);
    std::cout << deps::format_slice(slice, design);
  }
  return campaign::kOk;
}

int run_simulate(const std::string& path, const std::string& stimulus_path, const std::vector<std::string>& points,
                 const std::optional<std::string>& fault_text, const std::optional<std::string>& coverage_path) {
  const auto design = read_design(path);
  if (!fs::exists(stimulus_path)) throw campaign::ConfigError("stimulus file '" + stimulus_path + "' not found");
  const auto stimulus = sim::load_stimulus(design, stimulus_path);
  std::optional<FaultDescriptor> fault;
  if (fault_text) {
    fault = parse_fault(*fault_text);
    sim::validate_fault(design, stimulus, *fault);
  }
  const auto result = sim::simulate(design, stimulus, points, fault);
  sim::write_trace_csv(std::cout, result.observations);
  if (coverage_path) {
    std::ofstream out(*coverage_path);
    if (!out) throw campaign::ConfigError("cannot write '" + *coverage_path + "'");
    const auto summary = sim::coverage_summary(result.coverage, design);
    nlohmann::ordered_json j;
    j["cycles"] = result.coverage.length();
    j["per_cycle"] = result.coverage.per_cycle;
    j["hits"] = summary.hits;
    j["block_coverage"] = summary.block_coverage;
    j["branch_coverage"] = summary.branch_coverage;
    j["untaken_arms"] = summary.untaken_arms;
    out << j.dump(2) << '\n';
  }
  return campaign::kOk;
}

struct CampaignFlags {
  std::string config;
  std::optional<std::string> mode, baseline, out, window;
  std::optional<std::uint64_t> count, seed;
  std::optional<unsigned> jobs;
  std::vector<std::string> observe;
};

int run_campaign_cmd(const CampaignFlags& f) {
  auto config = campaign::load_config(f.config);
  if (f.mode) config.mode = parse_mode_flag(*f.mode, f.count, f.seed);
  if (f.baseline) config.baseline = parse_mode_flag(*f.baseline, f.count, f.seed);
  if (f.out) config.output_dir = *f.out;
  if (f.window) config.window = parse_window(*f.window);
  if (f.jobs) config.parallelism = *f.jobs;
  if (!f.observe.empty()) config.observation_points = f.observe;

  const auto outcome = campaign::run_pipeline(config);
  const auto& r = outcome.report;
  std::cout << "design " << r.design << ", " << r.stimulus_cycles << " cycles, window [" << r.window.begin << ", "
            << r.window.end << ")\n";
  if (r.baseline) print_summary(std::cout, "baseline", *r.baseline);
  print_summary(std::cout, "primary ", r.primary);
  if (r.reduction_vs_baseline) std::cout << "reduction vs baseline: " << r.reduction_vs_baseline->text << "%\n";
  if (r.time_saving_vs_baseline) std::cout << "time saving vs baseline: " << r.time_saving_vs_baseline->text << "%\n";
  if (r.detected_equivalent_to_baseline) {
    std::cout << "detected set equal to baseline: " << (*r.detected_equivalent_to_baseline ? "yes" : "no") << '\n';
  }
  std::cout << "artifacts in " << config.output_dir.string() << '\n';
  return campaign::kOk;
}

int run_compare(const std::string& a, const std::string& b, bool require_equivalent) {
  const auto c = campaign::compare_campaigns(campaign::load_report(a), campaign::load_report(b));
  std::cout << campaign::comparison_to_json(c).dump(2) << '\n';
  return require_equivalent && !c.equivalent ? 1 : campaign::kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Slicing-based register fault injection for mini-HDL designs"};
  app.require_subcommand(1);

  std::string design_path;
  auto* parse_cmd = app.add_subcommand("parse", "Parse a design and print its statement table");
  parse_cmd->add_option("design", design_path, "Design file (.mhdl)")->required();

  std::vector<std::string> points;
  auto* slice_cmd = app.add_subcommand("slice", "Print static slices for observation points");
  slice_cmd->add_option("design", design_path, "Design file (.mhdl)")->required();
  slice_cmd->add_option("-o,--observe", points, "Observation signal(s)")->required();

  std::string stimulus_path;
  std::optional<std::string> fault_text, coverage_path;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate and print the observation trace as CSV");
  sim_cmd->add_option("design", design_path, "Design file (.mhdl)")->required();
  sim_cmd->add_option("-s,--stimulus", stimulus_path, "Stimulus CSV")->required();
  sim_cmd->add_option("-o,--observe", points, "Observation signal(s)")->required();
  sim_cmd->add_option("--fault", fault_text, "Inject REGISTER:BIT:CYCLE");
  sim_cmd->add_option("--coverage", coverage_path, "Write per-cycle coverage JSON here");

  CampaignFlags flags;
  auto* camp_cmd = app.add_subcommand("campaign", "Run the full fault injection pipeline");
  camp_cmd->add_option("-c,--config", flags.config, "Campaign config (JSON)")->required();
  camp_cmd->add_option("--mode", flags.mode, "exhaustive | static_slice | dynamic_slice | random_sample");
  camp_cmd->add_option("--baseline", flags.baseline, "Baseline mode run for comparison");
  camp_cmd->add_option("--count", flags.count, "random_sample size");
  camp_cmd->add_option("--seed", flags.seed, "random_sample seed");
  camp_cmd->add_option("-j,--jobs", flags.jobs, "Worker threads");
  camp_cmd->add_option("--out", flags.out, "Output directory");
  camp_cmd->add_option("--window", flags.window, "Injection cycles BEGIN:END (end exclusive)");
  camp_cmd->add_option("-o,--observe", flags.observe, "Override observation points");

  std::string report_a, report_b;
  bool require_equivalent = false;
  auto* cmp_cmd = app.add_subcommand("compare", "Compare the detected sets of two report.json files");
  cmp_cmd->add_option("report_a", report_a, "Reference report")->required();
  cmp_cmd->add_option("report_b", report_b, "Candidate report")->required();
  cmp_cmd->add_flag("--require-equivalent", require_equivalent, "Exit 1 unless detected sets match");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : campaign::kConfigError;
  }

  try {
    if (*parse_cmd) return run_parse(design_path);
    if (*slice_cmd) return run_slice(design_path, points);
    if (*sim_cmd) return run_simulate(design_path, stimulus_path, points, fault_text, coverage_path);
    if (*camp_cmd) return run_campaign_cmd(flags);
    if (*cmp_cmd) return run_compare(report_a, report_b, require_equivalent);
  } catch (const hdl::ParseFailure& e) {
    std::cerr << e.what() << '\n';
    return campaign::kParseError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return campaign::exit_code_for(e);
  }
  return campaign::kInternalError;
}
