#include "slicefi/campaign.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "slicefi/deps.hpp"
#include "slicefi/dynslice.hpp"
#include "slicefi/hdl.hpp"
#include "slicefi/sim.hpp"

namespace slicefi::campaign {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

long long pow10(int decimals) {
  long long p = 1;
  for (int i = 0; i < decimals; ++i) p *= 10;
  return p;
}

Percentage from_scaled(long long scaled, int decimals) {
  Percentage p;
  p.decimals = decimals;
  const long long unit = pow10(decimals);
  const bool negative = scaled < 0;
  const long long mag = negative ? -scaled : scaled;
  std::string text = std::to_string(mag / unit);
  if (decimals > 0) {
    std::string frac = std::to_string(mag % unit);
    text += "." + std::string(static_cast<std::size_t>(decimals) - frac.size(), '0') + frac;
  }
  p.text = negative ? "-" + text : text;
  p.value = static_cast<double>(scaled) / static_cast<double>(unit);
  return p;
}

// Exact half-up rounding of 100 * num / den.
Percentage ratio_percentage(std::uint64_t num, std::uint64_t den, int decimals) {
  const unsigned __int128 scaled_num = static_cast<unsigned __int128>(num) * 100u * static_cast<unsigned long long>(pow10(decimals));
  const unsigned __int128 q = (2 * scaled_num + den) / (2 * static_cast<unsigned __int128>(den));
  return from_scaled(static_cast<long long>(q), decimals);
}

void check_decimals(int decimals) {
  if (decimals < 0 || decimals > 9) throw std::domain_error("decimals must be between 0 and 9");
}

void write_file(const fs::path& path, std::vector<fs::path>& artifacts, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  body(out);
  artifacts.push_back(path);
}

ordered_json mode_to_json(const fault::CampaignMode& mode) {
  if (mode.kind != fault::CampaignMode::Kind::RandomSample) return std::string(fault::to_string(mode.kind));
  return ordered_json{{"kind", "random_sample"}, {"count", mode.count}, {"seed", mode.seed}};
}

ordered_json fault_to_json(const FaultDescriptor& f) {
  return ordered_json{{"register", f.reg}, {"bit", f.bit}, {"cycle", f.cycle}};
}

ordered_json percentage_json(const std::optional<Percentage>& p) {
  if (!p) return nullptr;
  return p->value;
}

std::optional<Percentage> percentage_from(const json& j, int decimals) {
  if (j.is_null()) return std::nullopt;
  return from_scaled(std::llround(j.get<double>() * static_cast<double>(pow10(decimals))), decimals);
}

ordered_json summary_to_json(const ModeSummary& s) {
  ordered_json j;
  j["mode"] = mode_to_json(s.mode);
  j["detected"] = s.detected;
  j["undetected"] = s.undetected;
  j["collapsed"] = s.collapsed;
  j["total_injected"] = s.total_injected;
  j["universe"] = s.universe;
  j["fault_coverage"] = percentage_json(s.fault_coverage);
  j["fault_coverage_with_collapsed"] = percentage_json(s.fault_coverage_with_collapsed);
  j["total_cpu_time"] = s.total_cpu_time;
  ordered_json faults = ordered_json::array();
  for (const auto& f : s.detected_faults) faults.push_back(fault_to_json(f));
  j["detected_faults"] = std::move(faults);
  return j;
}

ModeSummary summary_from_json(const json& j) {
  ModeSummary s;
  s.mode = mode_from_json(j.at("mode"));
  s.detected = j.at("detected").get<std::uint64_t>();
  s.undetected = j.at("undetected").get<std::uint64_t>();
  s.collapsed = j.at("collapsed").get<std::uint64_t>();
  s.total_injected = j.at("total_injected").get<std::uint64_t>();
  s.universe = j.at("universe").get<std::uint64_t>();
  s.fault_coverage = percentage_from(j.at("fault_coverage"), 3);
  s.fault_coverage_with_collapsed = percentage_from(j.at("fault_coverage_with_collapsed"), 3);
  s.total_cpu_time = j.value("total_cpu_time", 0.0);
  for (const auto& f : j.at("detected_faults")) {
    s.detected_faults.push_back(
        {f.at("register").get<std::string>(), f.at("bit").get<std::uint32_t>(), f.at("cycle").get<std::uint32_t>()});
  }
  return s;
}

std::string mode_label(const fault::CampaignMode& mode) { return std::string(fault::to_string(mode.kind)); }

void write_mode_artifacts(const fs::path& dir, const hdl::Design& design, const fault::CampaignResult& result,
                          const CampaignConfig& config, std::vector<fs::path>& artifacts) {
  const std::string label = mode_label(result.mode);
  if (result.mode.kind == fault::CampaignMode::Kind::DynamicSlice) {
    write_file(dir / "critical_faults.csv", artifacts,
               [&](std::ostream& o) { dynslice::write_critical_csv(o, result.fault_list.critical); });
    std::vector<FaultDescriptor> collapsed;
    for (const auto& v : result.fault_list.collapsed) collapsed.push_back(v.fault);
    write_file(dir / "collapsed_faults.csv", artifacts,
               [&](std::ostream& o) { dynslice::write_collapsed_csv(o, collapsed); });
  }
  if (config.write_csv) {
    write_file(dir / ("verdicts_" + label + ".csv"), artifacts,
               [&](std::ostream& o) { fault::write_verdicts_csv(o, result.verdicts); });
  }
  if (config.write_json) {
    write_file(dir / ("verdicts_" + label + ".json"), artifacts,
               [&](std::ostream& o) { fault::write_verdicts_json(o, result.verdicts); });
  }
  write_file(dir / ("timing_" + label + ".json"), artifacts,
             [&](std::ostream& o) { fault::write_timing_json(o, result.timing); });
  (void)design;
}

void write_analysis_artifacts(const fs::path& dir, const hdl::Design& design, const fault::CampaignResult& result,
                              std::vector<fs::path>& artifacts) {
  write_file(dir / "statements.tsv", artifacts, [&](std::ostream& o) { o << hdl::format_statement_table(design); });
  for (const auto& slice : result.static_slices) {
    write_file(dir / ("slice_" + slice.observation_point + ".txt"), artifacts,
               [&](std::ostream& o) { o << deps::format_slice(slice, design); });
  }
  write_file(dir / "golden_trace.csv", artifacts,
             [&](std::ostream& o) { sim::write_trace_csv(o, result.golden.observations); });

  const auto summary = sim::coverage_summary(result.golden.coverage, design);
  ordered_json cov;
  cov["cycles"] = result.golden.coverage.length();
  cov["per_cycle"] = result.golden.coverage.per_cycle;
  cov["hits"] = summary.hits;
  cov["block_coverage"] = summary.block_coverage;
  cov["branch_coverage"] = summary.branch_coverage;
  cov["untaken_arms"] = summary.untaken_arms;
  write_file(dir / "coverage.json", artifacts, [&](std::ostream& o) { o << cov.dump(2) << '\n'; });

  ordered_json dyn = ordered_json::array();
  for (std::size_t i = 0; i < result.dynamic_slices.size(); ++i) {
    dyn.push_back({{"observation_point", result.dynamic_slices[i].observation_point},
                   {"static_members", result.static_slices[i].members},
                   {"per_cycle", result.dynamic_slices[i].per_cycle}});
  }
  write_file(dir / "dynamic_slices.json", artifacts, [&](std::ostream& o) { o << dyn.dump(2) << '\n'; });
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const hdl::ParseFailure*>(&e)) return kParseError;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const hdl::UnknownSignal*>(&e) ||
      dynamic_cast<const fault::CampaignError*>(&e) || dynamic_cast<const dynslice::SliceError*>(&e)) {
    return kConfigError;
  }
  if (dynamic_cast<const sim::SimulationError*>(&e)) return kSimulationError;
  return kInternalError;
}

Percentage fault_coverage(std::uint64_t detected, std::uint64_t total, int decimals) {
  check_decimals(decimals);
  if (total == 0) throw std::domain_error("fault coverage of an empty campaign");
  if (detected > total) throw std::domain_error("more detected faults than injected");
  return ratio_percentage(detected, total, decimals);
}

Percentage reduction_percentage(std::uint64_t baseline_total, std::uint64_t pruned_total, int decimals) {
  check_decimals(decimals);
  if (baseline_total == 0) throw std::domain_error("reduction against an empty baseline");
  if (pruned_total > baseline_total) throw std::domain_error("pruned campaign is larger than its baseline");
  return ratio_percentage(baseline_total - pruned_total, baseline_total, decimals);
}

Percentage time_saving_percentage(double baseline_time, double pruned_time, int decimals) {
  check_decimals(decimals);
  if (!(baseline_time > 0.0) || !(pruned_time > 0.0)) throw std::domain_error("time saving needs positive times");
  const long double x = 100.0L * (static_cast<long double>(baseline_time) - pruned_time) / baseline_time;
  const long double scaled = x * static_cast<long double>(pow10(decimals));
  // Half-up, away from zero; the epsilon absorbs binary representation error
  // of decimal inputs such as 1197.1.
  const long double mag = std::floor(std::fabs(scaled) + 0.5L + 1e-9L);
  return from_scaled(static_cast<long long>(scaled < 0 ? -mag : mag), decimals);
}

void CampaignConfig::validate() const {
  if (design.empty() || !fs::exists(design)) throw ConfigError("design file '" + design.string() + "' not found");
  if (stimulus.empty() || !fs::exists(stimulus)) {
    throw ConfigError("stimulus file '" + stimulus.string() + "' not found");
  }
  if (observation_points.empty()) throw ConfigError("at least one observation point is required");
  if (parallelism < 1) throw ConfigError("parallelism must be at least 1");
  if (window && window->size() == 0) throw ConfigError("injection window is empty");
}

fault::CampaignMode mode_from_json(const json& j) {
  if (j.is_string()) {
    auto kind = fault::parse_mode(j.get<std::string>());
    if (!kind) throw ConfigError("unknown campaign mode '" + j.get<std::string>() + "'");
    if (*kind == fault::CampaignMode::Kind::RandomSample) throw ConfigError("random_sample needs count and seed");
    return fault::CampaignMode{*kind};
  }
  if (j.is_object()) {
    auto kind = fault::parse_mode(j.at("kind").get<std::string>());
    if (!kind) throw ConfigError("unknown campaign mode '" + j.at("kind").get<std::string>() + "'");
    fault::CampaignMode mode{*kind};
    if (*kind == fault::CampaignMode::Kind::RandomSample) {
      mode.count = j.at("count").get<std::uint64_t>();
      mode.seed = j.value("seed", std::uint64_t{0});
    }
    return mode;
  }
  throw ConfigError("campaign mode must be a string or an object");
}

CampaignConfig config_from_json(const json& j, const fs::path& base_dir) {
  try {
    CampaignConfig c;
    auto resolve = [&](const std::string& p) {
      fs::path path(p);
      return path.is_absolute() ? path : base_dir / path;
    };
    c.design = resolve(j.at("design").get<std::string>());
    c.stimulus = resolve(j.at("stimulus").get<std::string>());
    c.observation_points = j.at("observation_points").get<std::vector<std::string>>();
    if (j.contains("mode")) c.mode = mode_from_json(j.at("mode"));
    if (j.contains("baseline") && !j.at("baseline").is_null()) c.baseline = mode_from_json(j.at("baseline"));
    if (j.contains("window") && !j.at("window").is_null()) {
      auto w = j.at("window").get<std::vector<std::uint32_t>>();
      if (w.size() != 2) throw ConfigError("window must be [begin, end]");
      c.window = CycleWindow{w[0], w[1]};
    }
    if (j.contains("parallelism")) {
      auto p = j.at("parallelism").get<long long>();
      if (p < 1) throw ConfigError("parallelism must be at least 1");
      c.parallelism = static_cast<unsigned>(p);
    }
    if (j.contains("output_dir")) c.output_dir = resolve(j.at("output_dir").get<std::string>());
    if (j.contains("formats")) {
      auto formats = j.at("formats").get<std::vector<std::string>>();
      c.write_json = std::find(formats.begin(), formats.end(), "json") != formats.end();
      c.write_csv = std::find(formats.begin(), formats.end(), "csv") != formats.end();
    }
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

CampaignConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

ModeSummary summarize(const fault::CampaignResult& result) {
  ModeSummary s;
  s.mode = result.mode;
  s.detected = result.count(fault::Outcome::Detected);
  s.undetected = result.count(fault::Outcome::Undetected);
  s.collapsed = result.count(fault::Outcome::UndetectedCollapsed);
  s.total_injected = s.detected + s.undetected;
  s.universe = result.fault_list.universe_size;
  if (s.total_injected > 0) s.fault_coverage = fault_coverage(s.detected, s.total_injected);
  if (s.total_injected + s.collapsed > 0) {
    s.fault_coverage_with_collapsed = fault_coverage(s.detected, s.total_injected + s.collapsed);
  }
  s.total_cpu_time = result.timing.total_cpu_time.count();
  s.detected_faults = result.detected();
  return s;
}

CampaignReport make_report(const hdl::Design& design, const fault::CampaignResult& primary,
                           const fault::CampaignResult* baseline) {
  CampaignReport r;
  r.design = design.name;
  r.stimulus_cycles = primary.golden.coverage.length();
  r.observation_points = primary.golden.observations.points;
  r.window = primary.window;
  r.primary = summarize(primary);
  if (baseline) {
    r.baseline = summarize(*baseline);
    if (r.baseline->total_injected > 0 && r.primary.total_injected <= r.baseline->total_injected) {
      r.reduction_vs_baseline = reduction_percentage(r.baseline->total_injected, r.primary.total_injected);
    }
    if (r.baseline->total_cpu_time > 0 && r.primary.total_cpu_time > 0) {
      r.time_saving_vs_baseline = time_saving_percentage(r.baseline->total_cpu_time, r.primary.total_cpu_time);
    }
    r.detected_equivalent_to_baseline = r.baseline->detected_faults == r.primary.detected_faults;
  }
  return r;
}

const std::vector<std::string>& wall_clock_keys() {
  static const std::vector<std::string> keys = {"total_cpu_time", "time_saving_vs_baseline"};
  return keys;
}

ordered_json report_to_json(const CampaignReport& r) {
  ordered_json j;
  j["design"] = r.design;
  j["stimulus_cycles"] = r.stimulus_cycles;
  j["observation_points"] = r.observation_points;
  j["window"] = {r.window.begin, r.window.end};
  j["baseline"] = r.baseline ? summary_to_json(*r.baseline) : ordered_json(nullptr);
  j["primary"] = summary_to_json(r.primary);
  j["reduction_vs_baseline"] = percentage_json(r.reduction_vs_baseline);
  j["time_saving_vs_baseline"] = percentage_json(r.time_saving_vs_baseline);
  j["detected_equivalent_to_baseline"] =
      r.detected_equivalent_to_baseline ? ordered_json(*r.detected_equivalent_to_baseline) : ordered_json(nullptr);
  return j;
}

CampaignReport report_from_json(const json& j) {
  try {
    CampaignReport r;
    r.design = j.at("design").get<std::string>();
    r.stimulus_cycles = j.at("stimulus_cycles").get<std::uint32_t>();
    r.observation_points = j.at("observation_points").get<std::vector<std::string>>();
    auto w = j.at("window").get<std::vector<std::uint32_t>>();
    if (w.size() != 2) throw ConfigError("report window must be [begin, end]");
    r.window = {w[0], w[1]};
    if (!j.at("baseline").is_null()) r.baseline = summary_from_json(j.at("baseline"));
    r.primary = summary_from_json(j.at("primary"));
    r.reduction_vs_baseline = percentage_from(j.at("reduction_vs_baseline"), 2);
    r.time_saving_vs_baseline = percentage_from(j.at("time_saving_vs_baseline"), 2);
    if (!j.at("detected_equivalent_to_baseline").is_null()) {
      r.detected_equivalent_to_baseline = j.at("detected_equivalent_to_baseline").get<bool>();
    }
    return r;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid report: ") + e.what());
  }
}

CampaignReport load_report(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open report '" + path.string() + "'");
  try {
    return report_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw ConfigError("report '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_report_csv(std::ostream& out, const CampaignReport& r) {
  out << "role,mode,detected,undetected,collapsed,total_injected,universe,fault_coverage,"
         "fault_coverage_with_collapsed,total_cpu_time\n";
  auto row = [&](const char* role, const ModeSummary& s) {
    out << role << ',' << mode_label(s.mode) << ',' << s.detected << ',' << s.undetected << ',' << s.collapsed << ','
        << s.total_injected << ',' << s.universe << ',' << (s.fault_coverage ? s.fault_coverage->text : "") << ','
        << (s.fault_coverage_with_collapsed ? s.fault_coverage_with_collapsed->text : "") << ',' << s.total_cpu_time
        << '\n';
  };
  if (r.baseline) row("baseline", *r.baseline);
  row("primary", r.primary);
}

PipelineOutcome run_pipeline(const CampaignConfig& config) {
  config.validate();
  const hdl::Design design = hdl::load_design(config.design.string());
  const sim::Stimulus stimulus = sim::load_stimulus(design, config.stimulus.string());
  for (const auto& point : config.observation_points) {
    if (!design.find_signal(point)) throw ConfigError("unknown observation point '" + point + "'");
  }
  if (config.window && config.window->end > stimulus.length()) {
    throw ConfigError("injection window ends at cycle " + std::to_string(config.window->end) +
                      " but the stimulus has " + std::to_string(stimulus.length()) + " cycles");
  }

  fault::CampaignRequest request;
  request.design = &design;
  request.stimulus = &stimulus;
  request.observation_points = config.observation_points;
  request.window = config.window;
  request.parallelism = config.parallelism;

  PipelineOutcome outcome;
  if (config.baseline) {
    request.mode = *config.baseline;
    outcome.baseline = fault::run_campaign(request);
  }
  request.mode = config.mode;
  outcome.primary = fault::run_campaign(request);
  outcome.report = make_report(design, outcome.primary, outcome.baseline ? &*outcome.baseline : nullptr);

  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + config.output_dir.string() + "': " + ec.message());
  write_analysis_artifacts(config.output_dir, design, outcome.primary, outcome.artifacts);
  if (outcome.baseline) write_mode_artifacts(config.output_dir, design, *outcome.baseline, config, outcome.artifacts);
  write_mode_artifacts(config.output_dir, design, outcome.primary, config, outcome.artifacts);
  if (config.write_json) {
    write_file(config.output_dir / "report.json", outcome.artifacts,
               [&](std::ostream& o) { o << report_to_json(outcome.report).dump(2) << '\n'; });
  }
  if (config.write_csv) {
    write_file(config.output_dir / "report.csv", outcome.artifacts,
               [&](std::ostream& o) { write_report_csv(o, outcome.report); });
  }
  return outcome;
}

Comparison compare_campaigns(const CampaignReport& a, const CampaignReport& b) {
  if (a.design != b.design || a.stimulus_cycles != b.stimulus_cycles ||
      a.observation_points != b.observation_points || a.window != b.window) {
    throw ConfigError("campaigns do not share design, stimulus, observation points and window");
  }
  Comparison c;
  auto da = a.primary.detected_faults;
  auto db = b.primary.detected_faults;
  std::sort(da.begin(), da.end());
  std::sort(db.begin(), db.end());
  std::set_difference(da.begin(), da.end(), db.begin(), db.end(), std::back_inserter(c.only_in_a));
  std::set_difference(db.begin(), db.end(), da.begin(), da.end(), std::back_inserter(c.only_in_b));
  c.equivalent = c.only_in_a.empty() && c.only_in_b.empty();
  c.injected_delta = static_cast<std::int64_t>(b.primary.total_injected) - static_cast<std::int64_t>(a.primary.total_injected);
  c.detected_delta = static_cast<std::int64_t>(b.primary.detected) - static_cast<std::int64_t>(a.primary.detected);
  if (a.primary.fault_coverage && b.primary.fault_coverage) {
    c.coverage_delta = b.primary.fault_coverage->value - a.primary.fault_coverage->value;
  }
  c.cpu_time_delta = b.primary.total_cpu_time - a.primary.total_cpu_time;
  if (a.primary.total_injected > 0 && b.primary.total_injected <= a.primary.total_injected) {
    c.reduction = reduction_percentage(a.primary.total_injected, b.primary.total_injected);
  }
  if (a.primary.total_cpu_time > 0 && b.primary.total_cpu_time > 0) {
    c.time_saving = time_saving_percentage(a.primary.total_cpu_time, b.primary.total_cpu_time);
  }
  return c;
}

ordered_json comparison_to_json(const Comparison& c) {
  ordered_json j;
  j["equivalent"] = c.equivalent;
  ordered_json a = ordered_json::array(), b = ordered_json::array();
  for (const auto& f : c.only_in_a) a.push_back(fault_to_json(f));
  for (const auto& f : c.only_in_b) b.push_back(fault_to_json(f));
  j["detected_only_in_a"] = std::move(a);
  j["detected_only_in_b"] = std::move(b);
  j["injected_delta"] = c.injected_delta;
  j["detected_delta"] = c.detected_delta;
  j["coverage_delta"] = c.coverage_delta;
  j["cpu_time_delta"] = c.cpu_time_delta;
  j["reduction"] = percentage_json(c.reduction);
  j["time_saving"] = percentage_json(c.time_saving);
  return j;
}

}  // namespace slicefi::campaign
