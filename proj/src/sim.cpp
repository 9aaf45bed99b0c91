#include "slicefi/sim.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace slicefi::sim {

namespace {

std::uint64_t mask(std::uint32_t width) { return width >= 64 ? ~0ULL : ((1ULL << width) - 1); }

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string to_binary(std::uint64_t value, std::uint32_t width) {
  std::string out(width, '0');
  for (std::uint32_t i = 0; i < width; ++i) {
    if ((value >> i) & 1ULL) out[width - 1 - i] = '1';
  }
  return out;
}

void Stimulus::validate(const hdl::Design& design) const {
  auto expected = design.inputs();
  auto have = inputs;
  std::sort(have.begin(), have.end());
  if (have != expected) throw SimulationError("stimulus must drive exactly the input ports of '" + design.name + "'");
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (rows[t].size() != inputs.size()) {
      throw SimulationError("stimulus cycle " + std::to_string(t) + " does not drive every input");
    }
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      const auto& sig = design.signal(inputs[k]);
      if ((rows[t][k] & ~mask(sig.width)) != 0) {
        throw SimulationError("stimulus value for '" + sig.name + "' in cycle " + std::to_string(t) +
                              " exceeds width " + std::to_string(sig.width));
      }
    }
  }
}

Stimulus make_stimulus(const hdl::Design& design, const std::map<std::string, std::vector<std::uint64_t>>& columns) {
  Stimulus stim;
  std::size_t length = 0;
  bool first = true;
  for (const auto& [name, values] : columns) {
    auto id = design.find_signal(name);
    if (!id || design.signal(*id).kind != hdl::SignalKind::Input) {
      throw SimulationError("'" + name + "' is not an input port");
    }
    if (!first && values.size() != length) throw SimulationError("stimulus columns have different lengths");
    length = values.size();
    first = false;
    stim.inputs.push_back(*id);
  }
  stim.rows.assign(length, {});
  for (std::size_t t = 0; t < length; ++t) {
    for (const auto& [name, values] : columns) stim.rows[t].push_back(values[t]);
  }
  stim.validate(design);
  return stim;
}

Stimulus parse_stimulus_csv(const hdl::Design& design, std::istream& in) {
  Stimulus stim;
  std::string line;
  std::vector<std::string> header;
  bool have_header = false;
  bool skip_first = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto cells = split_csv(line);
    if (!have_header) {
      have_header = true;
      header = cells;
      if (!header.empty() && header[0] == "cycle") {
        skip_first = true;
        header.erase(header.begin());
      }
      for (const auto& name : header) {
        auto id = design.find_signal(name);
        if (!id || design.signal(*id).kind != hdl::SignalKind::Input) {
          throw SimulationError("stimulus column '" + name + "' is not an input port");
        }
        stim.inputs.push_back(*id);
      }
      continue;
    }
    if (skip_first && !cells.empty()) cells.erase(cells.begin());
    if (cells.size() != header.size()) {
      throw SimulationError("stimulus line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                            " values, expected " + std::to_string(header.size()));
    }
    std::vector<std::uint64_t> row;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const auto& sig = design.signal(stim.inputs[k]);
      const std::string& cell = cells[k];
      if (cell.size() != sig.width || cell.find_first_not_of("01") != std::string::npos) {
        throw SimulationError("stimulus line " + std::to_string(line_no) + ": '" + cell + "' is not a " +
                              std::to_string(sig.width) + "-bit binary value for '" + sig.name + "'");
      }
      std::uint64_t v = 0;
      for (char c : cell) v = (v << 1) | static_cast<std::uint64_t>(c - '0');
      row.push_back(v);
    }
    stim.rows.push_back(std::move(row));
  }
  if (!have_header) throw SimulationError("stimulus has no header row");
  stim.validate(design);
  return stim;
}

Stimulus load_stimulus(const hdl::Design& design, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SimulationError("cannot open stimulus '" + path + "'");
  return parse_stimulus_csv(design, in);
}

void write_stimulus_csv(std::ostream& out, const hdl::Design& design, const Stimulus& stimulus) {
  for (std::size_t k = 0; k < stimulus.inputs.size(); ++k) {
    out << (k ? "," : "") << design.signal(stimulus.inputs[k]).name;
  }
  out << '\n';
  for (const auto& row : stimulus.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      out << (k ? "," : "") << to_binary(row[k], design.signal(stimulus.inputs[k]).width);
    }
    out << '\n';
  }
}

std::vector<SignalId> resolve_points(const hdl::Design& design, const std::vector<std::string>& points) {
  std::vector<SignalId> ids;
  for (const auto& p : points) {
    auto id = design.find_signal(p);
    if (!id) throw hdl::UnknownSignal(p);
    ids.push_back(*id);
  }
  return ids;
}

void validate_fault(const hdl::Design& design, const Stimulus& stimulus, const FaultDescriptor& fault) {
  auto id = design.find_signal(fault.reg);
  if (!id || design.signal(*id).kind != hdl::SignalKind::Register) {
    throw SimulationError("fault target '" + fault.reg + "' is not a register");
  }
  if (fault.bit >= design.signal(*id).width) {
    throw SimulationError("fault bit " + std::to_string(fault.bit) + " out of range for '" + fault.reg + "'");
  }
  if (fault.cycle >= stimulus.length()) {
    throw SimulationError("fault cycle " + std::to_string(fault.cycle) + " is beyond the stimulus");
  }
}

Simulation::Simulation(const hdl::Design& design, const Stimulus& stimulus, std::optional<FaultDescriptor> fault,
                       bool record_coverage)
    : design_(&design), stimulus_(&stimulus), fault_(std::move(fault)), record_(record_coverage) {
  values_.assign(design.signals.size(), 0);
  active_.assign(design.statements.size(), 0);
  arm_.assign(design.statements.size(), 0);
  registers_ = design.registers();
  for (SignalId r : registers_) values_[r] = design.signal(r).reset_value;
  next_ = values_;
  if (fault_) fault_reg_ = design.find_signal(fault_->reg);
}

std::uint64_t Simulation::eval(hdl::ExprId id) const {
  const hdl::Expr& e = design_->exprs[id];
  switch (e.op) {
    case hdl::ExprOp::Const: return e.value;
    case hdl::ExprOp::Ref: return values_[e.signal];
    case hdl::ExprOp::Not: return ~eval(e.operands[0]) & mask(e.width);
    case hdl::ExprOp::And: return eval(e.operands[0]) & eval(e.operands[1]);
    case hdl::ExprOp::Or: return eval(e.operands[0]) | eval(e.operands[1]);
    case hdl::ExprOp::Xor: return eval(e.operands[0]) ^ eval(e.operands[1]);
    case hdl::ExprOp::Eq: return eval(e.operands[0]) == eval(e.operands[1]) ? 1 : 0;
    case hdl::ExprOp::Ne: return eval(e.operands[0]) != eval(e.operands[1]) ? 1 : 0;
    case hdl::ExprOp::Index:
    case hdl::ExprOp::Slice: return (eval(e.operands[0]) >> e.lo) & mask(e.width);
    case hdl::ExprOp::Concat: {
      std::uint64_t acc = 0;
      for (hdl::ExprId k : e.operands) {
        const std::uint32_t w = design_->exprs[k].width;
        acc = (w >= 64 ? 0 : acc << w) | eval(k);
      }
      return acc;
    }
    case hdl::ExprOp::Mux: return eval(e.operands[0]) ? eval(e.operands[1]) : eval(e.operands[2]);
  }
  return 0;
}

std::uint32_t Simulation::select_arm(const hdl::Statement& branch, std::uint64_t cond) const {
  if (branch.branch_kind == hdl::BranchKind::If) return cond ? 0 : 1;
  std::uint32_t fallback = 0;
  for (std::uint32_t a = 0; a < branch.arms.size(); ++a) {
    const auto& arm = branch.arms[a];
    if (arm.is_default) {
      fallback = a;
      continue;
    }
    if (std::find(arm.labels.begin(), arm.labels.end(), cond) != arm.labels.end()) return a;
  }
  return fallback;
}

void Simulation::run_clocked(StmtId id) {
  const hdl::Statement& st = design_->statements[id];
  if (record_) executed_.push_back(id);
  if (st.kind == hdl::StmtKind::SeqAssign) {
    next_[*st.defines] = eval(st.expr);
    return;
  }
  const std::uint32_t arm = select_arm(st, eval(st.expr));
  if (record_) taken_.emplace_back(id, arm);
  for (StmtId child : st.arms[arm].body) run_clocked(child);
}

void Simulation::evaluate() {
  if (done()) throw SimulationError("simulation already reached the end of the stimulus");
  if (fault_reg_ && fault_->cycle == cycle_) values_[*fault_reg_] ^= 1ULL << fault_->bit;

  const auto& row = stimulus_->rows[cycle_];
  for (std::size_t k = 0; k < stimulus_->inputs.size(); ++k) values_[stimulus_->inputs[k]] = row[k];

  executed_.clear();
  taken_.clear();
  for (StmtId id : design_->comb_order) {
    const hdl::Statement& st = design_->statements[id];
    bool on_path = true;
    if (st.control_parent) on_path = active_[*st.control_parent] && arm_[*st.control_parent] == st.parent_arm;
    active_[id] = on_path;
    if (st.kind == hdl::StmtKind::Branch) {
      if (!on_path) continue;
      arm_[id] = select_arm(st, eval(st.expr));
      if (record_) {
        executed_.push_back(id);
        taken_.emplace_back(id, arm_[id]);
      }
    } else {
      // A combinational assignment that does not execute drives zero.
      values_[*st.defines] = on_path ? eval(st.expr) : 0;
      if (on_path && record_) executed_.push_back(id);
    }
  }

  for (SignalId r : registers_) next_[r] = values_[r];
  for (const auto& proc : design_->processes) {
    if (proc.kind != hdl::ProcessKind::Clocked) continue;
    for (StmtId id : proc.top_level) run_clocked(id);
  }
  if (design_->reset && values_[*design_->reset]) {
    for (SignalId r : registers_) next_[r] = design_->signal(r).reset_value;
  }
  if (record_) {
    std::sort(executed_.begin(), executed_.end());
    std::sort(taken_.begin(), taken_.end());
  }
}

void Simulation::clock_edge() {
  for (SignalId r : registers_) values_[r] = next_[r];
  ++cycle_;
}

SimResult simulate(const hdl::Design& design, const Stimulus& stimulus, const std::vector<std::string>& observation_points,
                   const std::optional<FaultDescriptor>& fault) {
  auto ids = resolve_points(design, observation_points);
  stimulus.validate(design);
  if (fault) validate_fault(design, stimulus, *fault);

  SimResult result;
  result.observations.points = observation_points;
  for (SignalId id : ids) result.observations.widths.push_back(design.signal(id).width);

  Simulation sim(design, stimulus, fault);
  while (!sim.done()) {
    sim.evaluate();
    std::vector<std::uint64_t> sample;
    sample.reserve(ids.size());
    for (SignalId id : ids) sample.push_back(sim.value(id));
    result.observations.per_cycle.push_back(std::move(sample));
    result.coverage.per_cycle.push_back(sim.executed());
    result.coverage.arms_per_cycle.push_back(sim.taken_arms());
    sim.clock_edge();
  }
  return result;
}

CoverageSummary coverage_summary(const CoverageTrace& trace, const hdl::Design& design) {
  CoverageSummary sum;
  sum.hits.assign(design.statements.size(), 0);
  for (const auto& cycle : trace.per_cycle) {
    for (StmtId s : cycle) ++sum.hits.at(s);
  }
  sum.total_statements = static_cast<std::uint32_t>(design.statements.size());
  sum.covered_statements =
      static_cast<std::uint32_t>(std::count_if(sum.hits.begin(), sum.hits.end(), [](auto h) { return h > 0; }));
  sum.block_coverage = sum.total_statements ? 100.0 * sum.covered_statements / sum.total_statements : 100.0;

  std::vector<std::pair<StmtId, std::uint32_t>> seen;
  for (const auto& cycle : trace.arms_per_cycle) seen.insert(seen.end(), cycle.begin(), cycle.end());
  std::sort(seen.begin(), seen.end());
  seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
  for (const auto& st : design.statements) {
    if (st.kind != hdl::StmtKind::Branch) continue;
    for (std::uint32_t a = 0; a < st.arms.size(); ++a) {
      ++sum.total_arms;
      if (std::binary_search(seen.begin(), seen.end(), std::make_pair(st.id, a))) {
        ++sum.taken_arms;
      } else {
        sum.untaken_arms.emplace_back(st.id, a);
      }
    }
  }
  sum.branch_coverage = sum.total_arms ? 100.0 * sum.taken_arms / sum.total_arms : 100.0;
  return sum;
}

void write_trace_csv(std::ostream& out, const ObservationTrace& trace) {
  out << "cycle";
  for (const auto& p : trace.points) out << ',' << p;
  out << '\n';
  for (std::size_t t = 0; t < trace.per_cycle.size(); ++t) {
    out << t;
    for (std::size_t k = 0; k < trace.per_cycle[t].size(); ++k) out << ',' << to_binary(trace.per_cycle[t][k], trace.widths[k]);
    out << '\n';
  }
}

}  // namespace slicefi::sim
