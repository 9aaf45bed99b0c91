#include "slicefi/dynslice.hpp"

#include <algorithm>
#include <map>
#include <ostream>

namespace slicefi::dynslice {

DynamicSliceSet dynamic_slices(const deps::StaticSlice& slice, const sim::CoverageTrace& coverage,
                               std::size_t design_size) {
  DynamicSliceSet out;
  out.observation_point = slice.observation_point;
  out.per_cycle.reserve(coverage.per_cycle.size());
  for (const auto& executed : coverage.per_cycle) {
    if (!executed.empty() && executed.back() >= design_size) {
      throw SliceError("coverage trace does not belong to this design");
    }
    std::vector<StmtId> cycle;
    std::set_intersection(slice.members.begin(), slice.members.end(), executed.begin(), executed.end(),
                          std::back_inserter(cycle));
    out.per_cycle.push_back(std::move(cycle));
  }
  return out;
}

std::vector<CriticalFaultTarget> critical_fault_list(const DynamicSliceSet& slices, const hdl::Design& design,
                                                     const deps::DependencyGraph& graph, CycleWindow window) {
  const std::uint32_t length = slices.length();
  if (window.size() == 0) throw SliceError("empty injection window");
  if (window.end > length) {
    throw SliceError("injection window ends at cycle " + std::to_string(window.end) + " but the trace has " +
                     std::to_string(length) + " cycles");
  }
  if (graph.size() != design.statements.size()) throw SliceError("dependency graph does not belong to this design");

  const deps::StaticSlice slice = deps::static_slice(graph, design, slices.observation_point);
  const auto observed = design.find_signal(slices.observation_point);

  std::vector<CriticalFaultTarget> out;
  for (const auto& name : deps::slice_registers(slice, design)) {
    const hdl::SignalId reg = *design.find_signal(name);
    const auto defs = design.definitions_of(reg);
    auto is_def = [&](StmtId s) { return std::binary_search(defs.begin(), defs.end(), s); };

    // Statements whose data edges reach a definition of reg read it.
    std::vector<bool> reads(design.statements.size(), false);
    for (StmtId u = 0; u < graph.size(); ++u) {
      if (!graph.contains(u) || !slice.contains(u)) continue;
      for (StmtId d : graph.data[u]) {
        if (is_def(d)) reads[u] = true;
      }
    }
    const bool observed_directly = observed && *observed == reg;

    std::vector<bool> consumed(length, false), written(length, false);
    for (std::uint32_t c = 0; c < length; ++c) {
      consumed[c] = observed_directly;
      for (StmtId s : slices.per_cycle[c]) {
        if (reads[s]) consumed[c] = true;
        if (is_def(s)) written[c] = true;
      }
    }

    const std::uint32_t width = design.signal(reg).width;
    for (std::uint32_t t = window.begin; t < window.end; ++t) {
      std::optional<std::uint32_t> first;
      for (std::uint32_t c = t; c < length; ++c) {
        if (consumed[c]) {
          first = c;
          break;
        }
        if (written[c]) break;
      }
      if (!first) continue;
      for (std::uint32_t b = 0; b < width; ++b) out.push_back({name, b, t, *first});
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.descriptor() < b.descriptor(); });
  return out;
}

std::vector<FaultDescriptor> fault_universe(const hdl::Design& design, CycleWindow window) {
  std::vector<FaultDescriptor> out;
  for (hdl::SignalId r : design.registers()) {
    const auto& sig = design.signal(r);
    for (std::uint32_t b = 0; b < sig.width; ++b) {
      for (std::uint32_t t = window.begin; t < window.end; ++t) out.push_back({sig.name, b, t});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<FaultDescriptor> collapse_report(const std::vector<FaultDescriptor>& universe,
                                             const std::vector<CriticalFaultTarget>& critical) {
  std::vector<FaultDescriptor> keep;
  keep.reserve(critical.size());
  for (const auto& c : critical) keep.push_back(c.descriptor());
  std::sort(keep.begin(), keep.end());
  auto sorted_universe = universe;
  std::sort(sorted_universe.begin(), sorted_universe.end());
  std::vector<FaultDescriptor> out;
  std::set_difference(sorted_universe.begin(), sorted_universe.end(), keep.begin(), keep.end(), std::back_inserter(out));
  return out;
}

std::vector<CriticalFaultTarget> merge_critical(const std::vector<std::vector<CriticalFaultTarget>>& lists) {
  std::map<FaultDescriptor, std::uint32_t> merged;
  for (const auto& list : lists) {
    for (const auto& t : list) {
      auto [it, inserted] = merged.emplace(t.descriptor(), t.first_consumer_cycle);
      if (!inserted) it->second = std::min(it->second, t.first_consumer_cycle);
    }
  }
  std::vector<CriticalFaultTarget> out;
  out.reserve(merged.size());
  for (const auto& [f, first] : merged) out.push_back({f.reg, f.bit, f.cycle, first});
  return out;
}

void write_critical_csv(std::ostream& out, const std::vector<CriticalFaultTarget>& targets) {
  out << "register,bit,cycle,first_consumer_cycle\n";
  for (const auto& t : targets) out << t.reg << ',' << t.bit << ',' << t.cycle << ',' << t.first_consumer_cycle << '\n';
}

void write_collapsed_csv(std::ostream& out, const std::vector<FaultDescriptor>& collapsed) {
  out << "register,bit,cycle,first_consumer_cycle,verdict\n";
  for (const auto& f : collapsed) out << f.reg << ',' << f.bit << ',' << f.cycle << ",,undetected_collapsed\n";
}

}  // namespace slicefi::dynslice
