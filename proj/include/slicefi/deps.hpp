#pragma once

// Statement-level dependence graph and backward static slicing.

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "slicefi/hdl.hpp"

namespace slicefi::deps {

using hdl::StmtId;

using hdl::UnknownSignal;

/// Adjacency form of the dependence relation. `data[u]` lists every
/// statement defining a signal that u reads; `control[u]` lists every branch
/// head on u's control-parent chain. Both lists are sorted and unique.
struct DependencyGraph {
  std::vector<std::vector<StmtId>> data;
  std::vector<std::vector<StmtId>> control;
  /// Statements present in the graph. A restricted graph (see restrict())
  /// drops nodes; edges only ever connect present nodes.
  std::vector<bool> present;

  std::size_t size() const { return data.size(); }
  bool contains(StmtId s) const { return s < present.size() && present[s]; }

  std::vector<std::pair<StmtId, StmtId>> data_edges() const;
  std::vector<std::pair<StmtId, StmtId>> control_edges() const;

  /// Removes one data edge; returns whether it existed. Used to build
  /// deliberately broken graphs for mutation testing.
  bool remove_data_edge(StmtId user, StmtId def);

  friend bool operator==(const DependencyGraph&, const DependencyGraph&) = default;
};

DependencyGraph build_graph(const hdl::Design& design);

/// Induced subgraph on `members`.
DependencyGraph restrict(const DependencyGraph& graph, const std::vector<StmtId>& members);

struct StaticSlice {
  std::string observation_point;
  std::vector<StmtId> members;  // sorted

  bool contains(StmtId s) const;
};

/// Backward closure over data and control edges from every present
/// definition of `observation_point`. Throws UnknownSignal.
StaticSlice static_slice(const DependencyGraph& graph, const hdl::Design& design, std::string_view observation_point);

/// Registers with a defining statement in the slice, sorted by name.
std::vector<std::string> slice_registers(const StaticSlice& slice, const hdl::Design& design);

/// Text dump of the members with their source spans.
std::string format_slice(const StaticSlice& slice, const hdl::Design& design);

}  // namespace slicefi::deps
