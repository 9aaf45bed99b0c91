#include "slicefi/fault.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <ostream>
#include <random>
#include <set>
#include <thread>

#include "json.hpp"

namespace slicefi::fault {

namespace {

using Clock = std::chrono::steady_clock;

const deps::StaticSlice& find_static(const SliceArtifacts& artifacts, const std::string& point) {
  for (const auto& s : artifacts.static_slices) {
    if (s.observation_point == point) return s;
  }
  throw CampaignError("static_slice mode needs the static slice for '" + point + "'");
}

const dynslice::DynamicSliceSet& find_dynamic(const SliceArtifacts& artifacts, const std::string& point) {
  for (const auto& s : artifacts.dynamic_slices) {
    if (s.observation_point == point) return s;
  }
  throw CampaignError("dynamic_slice mode needs the dynamic slices for '" + point + "'");
}

std::vector<FaultDescriptor> sample(const std::vector<FaultDescriptor>& universe, std::uint64_t count,
                                    std::uint64_t seed) {
  std::vector<std::size_t> index(universe.size());
  for (std::size_t i = 0; i < index.size(); ++i) index[i] = i;
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first `count` slots end up a uniform sample.
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, index.size() - 1);
    std::swap(index[i], index[pick(rng)]);
  }
  std::vector<FaultDescriptor> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(universe[index[i]]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::Detected: return "detected";
    case Outcome::Undetected: return "undetected";
    case Outcome::UndetectedCollapsed: return "undetected_collapsed";
  }
  return "?";
}

std::string_view to_string(CampaignMode::Kind kind) {
  switch (kind) {
    case CampaignMode::Kind::Exhaustive: return "exhaustive";
    case CampaignMode::Kind::StaticSlice: return "static_slice";
    case CampaignMode::Kind::DynamicSlice: return "dynamic_slice";
    case CampaignMode::Kind::RandomSample: return "random_sample";
  }
  return "?";
}

std::optional<CampaignMode::Kind> parse_mode(std::string_view name) {
  for (auto kind : {CampaignMode::Kind::Exhaustive, CampaignMode::Kind::StaticSlice, CampaignMode::Kind::DynamicSlice,
                    CampaignMode::Kind::RandomSample}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

FaultList generate_fault_list(const hdl::Design& design, const CampaignMode& mode, const SliceArtifacts& artifacts,
                              CycleWindow window, const std::vector<std::string>& observation_points) {
  if (window.size() == 0) throw CampaignError("empty injection window");
  FaultList out;
  const auto universe = dynslice::fault_universe(design, window);
  out.universe_size = universe.size();

  switch (mode.kind) {
    case CampaignMode::Kind::Exhaustive:
      out.inject = universe;
      break;
    case CampaignMode::Kind::StaticSlice: {
      std::set<std::string> regs;
      for (const auto& point : observation_points) {
        for (auto& r : deps::slice_registers(find_static(artifacts, point), design)) regs.insert(r);
      }
      for (const auto& f : universe) {
        if (regs.count(f.reg)) out.inject.push_back(f);
      }
      break;
    }
    case CampaignMode::Kind::DynamicSlice: {
      if (!artifacts.graph) throw CampaignError("dynamic_slice mode needs the dependency graph");
      std::vector<std::vector<dynslice::CriticalFaultTarget>> lists;
      for (const auto& point : observation_points) {
        lists.push_back(dynslice::critical_fault_list(find_dynamic(artifacts, point), design, *artifacts.graph, window));
      }
      out.critical = dynslice::merge_critical(lists);
      for (const auto& c : out.critical) out.inject.push_back(c.descriptor());
      for (auto& f : dynslice::collapse_report(universe, out.critical)) {
        out.collapsed.push_back(FaultVerdict{std::move(f), Outcome::UndetectedCollapsed, std::nullopt, Seconds{0}});
      }
      break;
    }
    case CampaignMode::Kind::RandomSample:
      if (mode.count > universe.size()) {
        throw CampaignError("random sample of " + std::to_string(mode.count) + " exceeds the " +
                            std::to_string(universe.size()) + " possible faults");
      }
      out.inject = sample(universe, mode.count, mode.seed);
      break;
  }
  return out;
}

FaultVerdict inject_and_classify(const hdl::Design& design, const sim::Stimulus& stimulus,
                                 const sim::ObservationTrace& golden, const FaultDescriptor& fault,
                                 const std::vector<std::string>& observation_points) {
  if (golden.points != observation_points || golden.per_cycle.size() != stimulus.length()) {
    throw CampaignError("golden trace does not match the stimulus and observation points");
  }
  const auto ids = sim::resolve_points(design, observation_points);
  sim::validate_fault(design, stimulus, fault);

  const auto start = Clock::now();
  FaultVerdict verdict{fault, Outcome::Undetected, std::nullopt, Seconds{0}};
  sim::Simulation run(design, stimulus, fault, /*record_coverage=*/false);
  while (!run.done()) {
    run.evaluate();
    const std::uint32_t t = run.cycle();
    if (t >= fault.cycle) {
      for (std::size_t k = 0; k < ids.size(); ++k) {
        if (run.value(ids[k]) != golden.per_cycle[t][k]) {
          verdict.outcome = Outcome::Detected;
          verdict.first_divergence_cycle = t;
          break;
        }
      }
      if (verdict.first_divergence_cycle) break;
    }
    run.clock_edge();
  }
  verdict.sim_time = Clock::now() - start;
  return verdict;
}

std::vector<FaultDescriptor> CampaignResult::detected() const {
  std::vector<FaultDescriptor> out;
  for (const auto& v : verdicts) {
    if (v.outcome == Outcome::Detected) out.push_back(v.fault);
  }
  return out;
}

std::size_t CampaignResult::count(Outcome outcome) const {
  return static_cast<std::size_t>(
      std::count_if(verdicts.begin(), verdicts.end(), [&](const auto& v) { return v.outcome == outcome; }));
}

CampaignResult run_campaign(const CampaignRequest& request) {
  if (!request.design || !request.stimulus) throw CampaignError("campaign needs a design and a stimulus");
  if (request.observation_points.empty()) throw CampaignError("campaign needs at least one observation point");
  if (request.parallelism < 1) throw CampaignError("parallelism must be at least 1");
  const hdl::Design& design = *request.design;
  const sim::Stimulus& stimulus = *request.stimulus;

  CampaignResult result;
  result.mode = request.mode;
  result.window = request.window.value_or(CycleWindow{0, stimulus.length()});
  if (result.window.size() == 0) throw CampaignError("empty injection window");
  if (result.window.end > stimulus.length()) {
    throw CampaignError("injection window ends at cycle " + std::to_string(result.window.end) +
                        " but the stimulus has " + std::to_string(stimulus.length()) + " cycles");
  }

  auto start = Clock::now();
  result.golden = sim::simulate(design, stimulus, request.observation_points);
  result.timing.golden_time = Clock::now() - start;

  start = Clock::now();
  const deps::DependencyGraph built = request.graph ? deps::DependencyGraph{} : deps::build_graph(design);
  const deps::DependencyGraph& graph = request.graph ? *request.graph : built;
  for (const auto& point : request.observation_points) {
    result.static_slices.push_back(deps::static_slice(graph, design, point));
    result.dynamic_slices.push_back(
        dynslice::dynamic_slices(result.static_slices.back(), result.golden.coverage, design.statements.size()));
  }
  SliceArtifacts artifacts{&graph, result.static_slices, result.dynamic_slices};
  result.fault_list = generate_fault_list(design, request.mode, artifacts, result.window, request.observation_points);
  result.timing.analysis_time = Clock::now() - start;

  // Work queue: each worker claims the next descriptor index and owns its
  // simulator; results land in the slot of their index.
  const auto& todo = result.fault_list.inject;
  std::vector<FaultVerdict> injected(todo.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < todo.size(); i = next.fetch_add(1)) {
      try {
        injected[i] = inject_and_classify(design, stimulus, result.golden.observations, todo[i],
                                          request.observation_points);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const auto workers = static_cast<unsigned>(std::min<std::size_t>(request.parallelism, todo.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  result.faulty_runs = injected.size();

  result.verdicts = std::move(injected);
  result.verdicts.insert(result.verdicts.end(), result.fault_list.collapsed.begin(), result.fault_list.collapsed.end());
  std::sort(result.verdicts.begin(), result.verdicts.end(),
            [](const auto& a, const auto& b) { return a.fault < b.fault; });

  result.timing.total_cpu_time = result.timing.golden_time;
  for (const auto& v : result.verdicts) {
    if (v.outcome == Outcome::UndetectedCollapsed) continue;
    result.timing.per_fault_times.emplace_back(v.fault, v.sim_time);
    result.timing.total_cpu_time += v.sim_time;
  }
  return result;
}

void write_verdicts_csv(std::ostream& out, const std::vector<FaultVerdict>& verdicts) {
  out << "register,bit,cycle,outcome,first_divergence_cycle,sim_time\n";
  for (const auto& v : verdicts) {
    out << v.fault.reg << ',' << v.fault.bit << ',' << v.fault.cycle << ',' << to_string(v.outcome) << ',';
    if (v.first_divergence_cycle) out << *v.first_divergence_cycle;
    out << ',' << v.sim_time.count() << '\n';
  }
}

void write_verdicts_json(std::ostream& out, const std::vector<FaultVerdict>& verdicts) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& v : verdicts) {
    nlohmann::ordered_json j;
    j["register"] = v.fault.reg;
    j["bit"] = v.fault.bit;
    j["cycle"] = v.fault.cycle;
    j["outcome"] = std::string(to_string(v.outcome));
    j["first_divergence_cycle"] = v.first_divergence_cycle ? nlohmann::ordered_json(*v.first_divergence_cycle) : nullptr;
    j["sim_time"] = v.sim_time.count();
    arr.push_back(std::move(j));
  }
  out << arr.dump(2) << '\n';
}

void write_timing_json(std::ostream& out, const TimingProfile& timing) {
  nlohmann::ordered_json j;
  j["golden_time"] = timing.golden_time.count();
  j["analysis_time"] = timing.analysis_time.count();
  nlohmann::ordered_json per = nlohmann::ordered_json::array();
  for (const auto& [f, t] : timing.per_fault_times) {
    per.push_back({{"register", f.reg}, {"bit", f.bit}, {"cycle", f.cycle}, {"time", t.count()}});
  }
  j["per_fault_times"] = std::move(per);
  j["total_cpu_time"] = timing.total_cpu_time.count();
  out << j.dump(2) << '\n';
}

}  // namespace slicefi::fault
