#include "slicefi/deps.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace slicefi::deps {

namespace {

void sort_unique(std::vector<StmtId>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

std::vector<std::pair<StmtId, StmtId>> DependencyGraph::data_edges() const {
  std::vector<std::pair<StmtId, StmtId>> out;
  for (StmtId u = 0; u < data.size(); ++u) {
    for (StmtId d : data[u]) out.emplace_back(u, d);
  }
  return out;
}

std::vector<std::pair<StmtId, StmtId>> DependencyGraph::control_edges() const {
  std::vector<std::pair<StmtId, StmtId>> out;
  for (StmtId u = 0; u < control.size(); ++u) {
    for (StmtId b : control[u]) out.emplace_back(u, b);
  }
  return out;
}

bool DependencyGraph::remove_data_edge(StmtId user, StmtId def) {
  if (user >= data.size()) return false;
  auto& edges = data[user];
  auto it = std::find(edges.begin(), edges.end(), def);
  if (it == edges.end()) return false;
  edges.erase(it);
  return true;
}

DependencyGraph build_graph(const hdl::Design& design) {
  const std::size_t n = design.statements.size();
  DependencyGraph g;
  g.data.resize(n);
  g.control.resize(n);
  g.present.assign(n, true);

  std::vector<std::vector<StmtId>> defs(design.signals.size());
  for (const auto& s : design.statements) {
    if (s.defines) defs[*s.defines].push_back(s.id);
  }
  for (const auto& s : design.statements) {
    for (hdl::SignalId u : s.uses) {
      g.data[s.id].insert(g.data[s.id].end(), defs[u].begin(), defs[u].end());
    }
    sort_unique(g.data[s.id]);
    for (auto p = s.control_parent; p; p = design.statements[*p].control_parent) g.control[s.id].push_back(*p);
    sort_unique(g.control[s.id]);
  }
  return g;
}

DependencyGraph restrict(const DependencyGraph& graph, const std::vector<StmtId>& members) {
  DependencyGraph out;
  out.data.resize(graph.size());
  out.control.resize(graph.size());
  out.present.assign(graph.size(), false);
  for (StmtId m : members) {
    if (graph.contains(m)) out.present[m] = true;
  }
  for (StmtId u = 0; u < graph.size(); ++u) {
    if (!out.present[u]) continue;
    for (StmtId d : graph.data[u]) {
      if (out.present[d]) out.data[u].push_back(d);
    }
    for (StmtId b : graph.control[u]) {
      if (out.present[b]) out.control[u].push_back(b);
    }
  }
  return out;
}

bool StaticSlice::contains(StmtId s) const { return std::binary_search(members.begin(), members.end(), s); }

StaticSlice static_slice(const DependencyGraph& graph, const hdl::Design& design, std::string_view observation_point) {
  auto signal = design.find_signal(observation_point);
  if (!signal) throw UnknownSignal(std::string(observation_point));

  std::vector<bool> in_slice(graph.size(), false);
  std::vector<StmtId> work;
  for (StmtId d : design.definitions_of(*signal)) {
    if (graph.contains(d) && !in_slice[d]) {
      in_slice[d] = true;
      work.push_back(d);
    }
  }
  while (!work.empty()) {
    StmtId s = work.back();
    work.pop_back();
    auto visit = [&](StmtId p) {
      if (!in_slice[p]) {
        in_slice[p] = true;
        work.push_back(p);
      }
    };
    for (StmtId d : graph.data[s]) visit(d);
    for (StmtId b : graph.control[s]) visit(b);
  }

  StaticSlice slice;
  slice.observation_point = std::string(observation_point);
  for (StmtId s = 0; s < in_slice.size(); ++s) {
    if (in_slice[s]) slice.members.push_back(s);
  }
  return slice;
}

std::vector<std::string> slice_registers(const StaticSlice& slice, const hdl::Design& design) {
  std::set<std::string> regs;
  for (StmtId s : slice.members) {
    const auto& st = design.statement(s);
    if (st.kind == hdl::StmtKind::SeqAssign && st.defines) regs.insert(design.signal(*st.defines).name);
  }
  return {regs.begin(), regs.end()};
}

std::string format_slice(const StaticSlice& slice, const hdl::Design& design) {
  std::ostringstream out;
  out << "static slice on " << slice.observation_point << ": " << slice.members.size() << " of "
      << design.statements.size() << " statements\n";
  for (StmtId s : slice.members) {
    const auto& st = design.statement(s);
    out << "  " << s << '\t' << hdl::to_string(st.kind) << '\t'
        << (st.defines ? design.signal(*st.defines).name : std::string("-")) << '\t' << st.span.begin.line << ':'
        << st.span.begin.column << '-' << st.span.end.line << ':' << st.span.end.column << '\n';
  }
  out << "registers:";
  for (const auto& r : slice_registers(slice, design)) out << ' ' << r;
  out << '\n';
  return out.str();
}

}  // namespace slicefi::deps
