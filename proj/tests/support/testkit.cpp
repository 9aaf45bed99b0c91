#include "testkit.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace slicefi::testkit {

using hdl::Design;
using hdl::ExprOp;
using hdl::SignalId;
using hdl::SignalKind;
using hdl::StmtId;
using hdl::StmtKind;

std::string fixture_path(const std::string& name) { return std::string(SLICEFI_FIXTURE_DIR) + "/" + name; }

hdl::Design load_fixture(const std::string& name) { return hdl::load_design(fixture_path(name)); }

sim::Stimulus load_fixture_stimulus(const hdl::Design& design, const std::string& name) {
  return sim::load_stimulus(design, fixture_path(name));
}

hdl::Design parse_text(const std::string& text) { return hdl::parse_or_throw(hdl::SourceUnit("<test>", text)); }

// ---------------------------------------------------------------------------
// random designs

namespace {

struct Sig {
  std::string name;
  unsigned width;
};
using Pool = std::vector<Sig>;

class Generator {
 public:
  Generator(std::mt19937_64& rng, const GenOptions& opt) : rng_(rng), opt_(opt) {}

  std::string run() {
    const unsigned n_in = pick(1, opt_.max_inputs);
    const unsigned n_reg = pick(1, opt_.max_registers);
    const unsigned n_wire = pick(1, opt_.max_wires);
    const unsigned n_out = pick(1, opt_.max_outputs);

    std::ostringstream decls, body;
    decls << "design gen;\n";
    if (opt_.with_reset && coin(0.5)) decls << "  in rst : 1;\n";
    for (unsigned i = 0; i < n_in; ++i) {
      inputs_.push_back({"i" + std::to_string(i), width()});
      decls << "  in " << inputs_.back().name << " : " << inputs_.back().width << ";\n";
    }
    for (unsigned i = 0; i < n_reg; ++i) {
      regs_.push_back({"r" + std::to_string(i), width()});
      decls << "  reg " << regs_.back().name << " : " << regs_.back().width << " = "
            << literal(regs_.back().width, value(regs_.back().width)) << ";\n";
    }
    for (unsigned i = 0; i < n_wire; ++i) wires_.push_back({"w" + std::to_string(i), width()});

    // Wires are defined in index order and only read lower-indexed wires,
    // so the combinational part is acyclic by construction.
    for (unsigned j = 0; j < n_wire;) {
      Pool pool = inputs_;
      pool.insert(pool.end(), regs_.begin(), regs_.end());
      pool.insert(pool.end(), wires_.begin(), wires_.begin() + j);
      const Sig& w = wires_[j];
      switch (pick(0, 3)) {
        case 0:
          decls << "  wire " << w.name << " : " << w.width << " = " << expr(w.width, pool, opt_.max_depth) << ";\n";
          ++j;
          break;
        case 1:
          decls << "  wire " << w.name << " : " << w.width << ";\n";
          body << "  assign " << w.name << " = " << expr(w.width, pool, opt_.max_depth) << ";\n";
          ++j;
          break;
        case 2: {
          decls << "  wire " << w.name << " : " << w.width << ";\n";
          body << "  comb {\n    if (" << expr(1, pool, 1) << ") {\n      " << w.name << " = "
               << expr(w.width, pool, opt_.max_depth) << ";\n    }";
          if (j + 1 < n_wire && coin(0.5)) {
            const Sig& v = wires_[j + 1];
            decls << "  wire " << v.name << " : " << v.width << ";\n";
            body << " else {\n      " << v.name << " = " << expr(v.width, pool, opt_.max_depth) << ";\n    }";
            ++j;
          }
          body << "\n  }\n";
          ++j;
          break;
        }
        default: {
          decls << "  wire " << w.name << " : " << w.width << ";\n";
          const unsigned k = pick(1, 2);
          body << "  comb {\n    case (" << expr(k, pool, 1) << ") {\n      " << literal(k, value(k)) << ": "
               << w.name << " = " << expr(w.width, pool, opt_.max_depth) << ";\n    }\n  }\n";
          ++j;
          break;
        }
      }
    }

    Pool all = inputs_;
    all.insert(all.end(), regs_.begin(), regs_.end());
    all.insert(all.end(), wires_.begin(), wires_.end());

    // Registers are split over one or two clocked processes.
    std::vector<std::vector<Sig>> groups(n_reg > 1 && coin(0.5) ? 2 : 1);
    for (unsigned i = 0; i < n_reg; ++i) groups[i == 0 ? 0 : pick(0, static_cast<unsigned>(groups.size()) - 1)].push_back(regs_[i]);
    for (auto& group : groups) {
      if (group.empty()) continue;
      std::set<std::string> assigned;
      body << "  always {\n";
      seq_block(body, group, all, opt_.max_depth, 4, assigned);
      for (const auto& r : group) {
        if (assigned.count(r.name)) continue;
        if (coin(0.5)) {
          body << "    if (" << expr(1, all, 1) << ") {\n      " << r.name << " <= " << expr(r.width, all, 1)
               << ";\n    }\n";
        } else {
          body << "    " << r.name << " <= " << expr(r.width, all, 1) << ";\n";
        }
      }
      body << "  }\n";
    }

    for (unsigned i = 0; i < n_out; ++i) {
      const Sig o{"o" + std::to_string(i), width()};
      if (coin(0.7)) {
        decls << "  out " << o.name << " : " << o.width << " = " << expr(o.width, all, opt_.max_depth) << ";\n";
      } else {
        decls << "  out " << o.name << " : " << o.width << ";\n";
        body << "  comb {\n    if (" << expr(1, all, 1) << ") {\n      " << o.name << " = "
             << expr(o.width, all, opt_.max_depth) << ";\n    }\n  }\n";
      }
    }
    return decls.str() + body.str() + "end\n";
  }

 private:
  unsigned pick(unsigned lo, unsigned hi) { return std::uniform_int_distribution<unsigned>(lo, hi)(rng_); }
  bool coin(double p) { return std::bernoulli_distribution(p)(rng_); }
  unsigned width() { return pick(1, opt_.max_width); }
  std::uint64_t value(unsigned w) { return std::uniform_int_distribution<std::uint64_t>(0, (1ull << w) - 1)(rng_); }

  static std::string literal(unsigned w, std::uint64_t v) {
    std::string bits;
    for (unsigned b = w; b-- > 0;) bits += ((v >> b) & 1) ? '1' : '0';
    return std::to_string(w) + "'b" + bits;
  }

  std::string leaf(unsigned w, const Pool& pool) {
    std::vector<const Sig*> exact, wider;
    for (const auto& s : pool) {
      if (s.width == w) exact.push_back(&s);
      if (s.width > w) wider.push_back(&s);
    }
    const unsigned roll = pick(0, 9);
    if (!exact.empty() && roll < 6) return exact[pick(0, static_cast<unsigned>(exact.size()) - 1)]->name;
    if (!wider.empty() && roll < 8) {
      const Sig& s = *wider[pick(0, static_cast<unsigned>(wider.size()) - 1)];
      const unsigned lo = pick(0, s.width - w);
      if (w == 1) return s.name + "[" + std::to_string(lo) + "]";
      return s.name + "[" + std::to_string(lo + w - 1) + ":" + std::to_string(lo) + "]";
    }
    return literal(w, value(w));
  }

  std::string expr(unsigned w, const Pool& pool, unsigned depth) {
    if (depth == 0) return leaf(w, pool);
    switch (pick(0, 8)) {
      case 0:
      case 1: return leaf(w, pool);
      case 2: return "~(" + expr(w, pool, depth - 1) + ")";
      case 3: return "(" + expr(w, pool, depth - 1) + " & " + expr(w, pool, depth - 1) + ")";
      case 4: return "(" + expr(w, pool, depth - 1) + " | " + expr(w, pool, depth - 1) + ")";
      case 5: return "(" + expr(w, pool, depth - 1) + " ^ " + expr(w, pool, depth - 1) + ")";
      case 6:
        if (w == 1) {
          const unsigned k = width();
          return "((" + expr(k, pool, depth - 1) + ") " + (coin(0.5) ? "==" : "!=") + " (" +
                 expr(k, pool, depth - 1) + "))";
        } else {
          const unsigned a = pick(1, w - 1);
          return "{" + expr(a, pool, depth - 1) + ", " + expr(w - a, pool, depth - 1) + "}";
        }
      default:
        return "((" + expr(1, pool, depth - 1) + ") ? " + expr(w, pool, depth - 1) + " : " +
               expr(w, pool, depth - 1) + ")";
    }
  }

  void seq_block(std::ostringstream& out, const std::vector<Sig>& regs, const Pool& pool, unsigned depth,
                 unsigned indent, std::set<std::string>& assigned) {
    const std::string pad(indent, ' ');
    const unsigned n = pick(1, 3);
    for (unsigned i = 0; i < n; ++i) {
      const unsigned roll = depth == 0 ? 0 : pick(0, 3);
      if (roll <= 1) {
        const Sig& r = regs[pick(0, static_cast<unsigned>(regs.size()) - 1)];
        out << pad << r.name << " <= " << expr(r.width, pool, opt_.max_depth) << ";\n";
        assigned.insert(r.name);
      } else if (roll == 2) {
        out << pad << "if (" << expr(1, pool, 1) << ") {\n";
        seq_block(out, regs, pool, depth - 1, indent + 2, assigned);
        out << pad << "}";
        if (coin(0.5)) {
          out << " else {\n";
          seq_block(out, regs, pool, depth - 1, indent + 2, assigned);
          out << pad << "}";
        }
        out << "\n";
      } else {
        const unsigned k = pick(1, 2);
        std::vector<std::uint64_t> labels;
        for (std::uint64_t v = 0; v < (1ull << k); ++v) labels.push_back(v);
        std::shuffle(labels.begin(), labels.end(), rng_);
        const unsigned arms = pick(1, std::min<unsigned>(3, static_cast<unsigned>(labels.size())));
        out << pad << "case (" << expr(k, pool, 1) << ") {\n";
        std::size_t next = 0;
        for (unsigned a = 0; a < arms && next < labels.size(); ++a) {
          out << pad << "  " << literal(k, labels[next++]);
          if (next < labels.size() && coin(0.3)) out << ", " << literal(k, labels[next++]);
          out << ": {\n";
          seq_block(out, regs, pool, depth - 1, indent + 4, assigned);
          out << pad << "  }\n";
        }
        if (next < labels.size() && coin(0.5)) {
          out << pad << "  default: {\n";
          seq_block(out, regs, pool, depth - 1, indent + 4, assigned);
          out << pad << "  }\n";
        }
        out << pad << "}\n";
      }
    }
  }

  std::mt19937_64& rng_;
  GenOptions opt_;
  Pool inputs_, regs_, wires_;
};

std::string insert_before_end(const std::string& source, const std::string& text) {
  const auto pos = source.rfind("end");
  return source.substr(0, pos) + text + source.substr(pos);
}

std::string literal_of(unsigned w, std::uint64_t v) {
  std::string bits;
  for (unsigned b = w; b-- > 0;) bits += ((v >> b) & 1) ? '1' : '0';
  return std::to_string(w) + "'b" + bits;
}

}  // namespace

std::string random_design_source(std::mt19937_64& rng, const GenOptions& options) {
  return Generator(rng, options).run();
}

sim::Stimulus random_stimulus(const hdl::Design& design, std::uint32_t cycles, std::mt19937_64& rng) {
  std::map<std::string, std::vector<std::uint64_t>> columns;
  for (SignalId in : design.inputs()) {
    const auto& sig = design.signal(in);
    auto& col = columns[sig.name];
    for (std::uint32_t t = 0; t < cycles; ++t) {
      if (design.reset && *design.reset == in) {
        col.push_back(t == 0 || std::bernoulli_distribution(0.05)(rng) ? 1 : 0);
      } else {
        col.push_back(std::uniform_int_distribution<std::uint64_t>(0, (1ull << sig.width) - 1)(rng));
      }
    }
  }
  return sim::make_stimulus(design, columns);
}

std::vector<Mutation> invalid_mutations(const std::string& valid, const hdl::Design& design) {
  using K = hdl::DiagnosticKind;
  const auto& in0 = design.signal(design.inputs().front());
  const hdl::Signal* reg0 = nullptr;
  for (SignalId r : design.registers()) {
    if (!reg0) reg0 = &design.signal(r);
  }
  const hdl::Signal* wire0 = nullptr;
  for (SignalId w : design.wires()) {
    if (!wire0) wire0 = &design.signal(w);
  }

  std::vector<Mutation> out;
  auto add = [&](std::string name, K kind, std::string text) {
    out.push_back({std::move(name), kind, insert_before_end(valid, text)});
  };
  add("duplicate declaration", K::DuplicateDeclaration, "  in " + in0.name + " : 1;\n");
  add("undeclared signal", K::UndeclaredSignal, "  out zz_o : 1 = zz_nowhere;\n");
  add("assignment width", K::WidthMismatch, "  out zz_o : 2 = 1'b0;\n");
  add("operand width", K::WidthMismatch, "  out zz_o : 1 = 1'b0 & 2'b00;\n");
  add("condition width", K::WidthMismatch, "  wire zz_x : 1;\n  comb {\n    if (2'b01) {\n      zz_x = 1'b1;\n    }\n  }\n");
  add("reset value width", K::WidthMismatch, "  reg zz_r : 2 = 1'b0;\n  always {\n    zz_r <= 2'b01;\n  }\n");
  add("declared width out of range", K::WidthMismatch, "  in zz_wide : 65;\n");
  add("undriven wire", K::UndrivenSignal, "  wire zz_w : 1;\n");
  add("unassigned register", K::UndrivenSignal, "  reg zz_r : 1 = 1'b0;\n");
  add("wire cycle", K::CombinationalCycle, "  wire zz_a : 1 = zz_b;\n  wire zz_b : 1 = zz_a;\n");
  add("self-guarded wire", K::CombinationalCycle,
      "  wire zz_c : 1;\n  comb {\n    if (zz_c == 1'b0) {\n      zz_c = 1'b1;\n    }\n  }\n");
  add("input assigned", K::IllegalAssignment, "  assign " + in0.name + " = " + literal_of(in0.width, 0) + ";\n");
  add("lexical", K::Lexical, "  $\n");
  add("missing semicolon", K::Syntax, "  out zz_o : 1 = 1'b0\n");
  add("missing end", K::Syntax, "");
  out.back().source = valid.substr(0, valid.rfind("end"));
  if (reg0) {
    add("register in comb", K::RegisterOutsideClocked, "  comb {\n    " + reg0->name + " = " + literal_of(reg0->width, 0) + ";\n  }\n");
    add("register in two processes", K::MultipleDrivers,
        "  always {\n    " + reg0->name + " <= " + literal_of(reg0->width, 0) + ";\n  }\n");
  }
  if (wire0) {
    add("second wire driver", K::MultipleDrivers, "  assign " + wire0->name + " = " + literal_of(wire0->width, 0) + ";\n");
    add("wire in always", K::IllegalAssignment, "  always {\n    " + wire0->name + " <= " + literal_of(wire0->width, 0) + ";\n  }\n");
  }
  return out;
}

// ---------------------------------------------------------------------------
// reference slicing

std::vector<StmtId> reference_slice(const hdl::Design& design, const std::string& point) {
  const auto target = design.find_signal(point);
  if (!target) throw hdl::UnknownSignal(point);
  std::vector<bool> in(design.statements.size(), false);
  for (const auto& s : design.statements) {
    if (s.defines == target) in[s.id] = true;
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& s : design.statements) {
      if (!in[s.id]) continue;
      if (s.control_parent && !in[*s.control_parent]) {
        in[*s.control_parent] = true;
        changed = true;
      }
      for (const auto& d : design.statements) {
        if (in[d.id] || !d.defines) continue;
        if (std::find(s.uses.begin(), s.uses.end(), *d.defines) != s.uses.end()) {
          in[d.id] = true;
          changed = true;
        }
      }
    }
  }
  std::vector<StmtId> out;
  for (StmtId i = 0; i < in.size(); ++i) {
    if (in[i]) out.push_back(i);
  }
  return out;
}

std::set<std::string> reference_slice_registers(const hdl::Design& design, const std::vector<StmtId>& members) {
  std::set<std::string> out;
  for (StmtId id : members) {
    const auto& s = design.statement(id);
    if (s.kind == StmtKind::SeqAssign) out.insert(design.signal(*s.defines).name);
  }
  return out;
}

// ---------------------------------------------------------------------------
// reference interpreter

namespace {

class RefSim {
 public:
  RefSim(const Design& d) : d_(d), vals_(d.signals.size(), 0) {}

  std::uint64_t eval(hdl::ExprId id) const {
    const auto& e = d_.exprs[id];
    const std::uint64_t m = e.width >= 64 ? ~0ull : ((1ull << e.width) - 1);
    auto op = [&](std::size_t k) { return eval(e.operands[k]); };
    switch (e.op) {
      case ExprOp::Const: return e.value & m;
      case ExprOp::Ref: return vals_[e.signal] & m;
      case ExprOp::Not: return ~op(0) & m;
      case ExprOp::And: return op(0) & op(1);
      case ExprOp::Or: return op(0) | op(1);
      case ExprOp::Xor: return op(0) ^ op(1);
      case ExprOp::Eq: return op(0) == op(1) ? 1 : 0;
      case ExprOp::Ne: return op(0) != op(1) ? 1 : 0;
      case ExprOp::Index:
      case ExprOp::Slice: return (op(0) >> e.lo) & m;
      case ExprOp::Concat: {
        std::uint64_t v = 0;
        for (auto o : e.operands) v = (v << d_.exprs[o].width) | eval(o);
        return v & m;
      }
      case ExprOp::Mux: return op(0) ? op(1) : op(2);
    }
    throw std::logic_error("bad expression");
  }

  // Runs statement `id`; writes go to `sink`.
  void exec(StmtId id, std::vector<std::uint64_t>& sink, std::vector<StmtId>& executed) const {
    const auto& s = d_.statement(id);
    executed.push_back(id);
    if (s.kind != StmtKind::Branch) {
      sink[*s.defines] = eval(s.expr);
      return;
    }
    const std::uint64_t v = eval(s.expr);
    std::size_t chosen = s.arms.size();
    if (s.branch_kind == hdl::BranchKind::If) {
      chosen = v ? 0 : 1;
    } else {
      for (std::size_t a = 0; a < s.arms.size() && chosen == s.arms.size(); ++a) {
        if (std::find(s.arms[a].labels.begin(), s.arms[a].labels.end(), v) != s.arms[a].labels.end()) chosen = a;
      }
      if (chosen == s.arms.size()) {
        for (std::size_t a = 0; a < s.arms.size(); ++a) {
          if (s.arms[a].is_default) chosen = a;
        }
      }
    }
    if (chosen < s.arms.size()) {
      for (StmtId c : s.arms[chosen].body) exec(c, sink, executed);
    }
  }

  const Design& d_;
  std::vector<std::uint64_t> vals_;
};

}  // namespace

RefTrace reference_simulate(const hdl::Design& design, const sim::Stimulus& stimulus,
                            const std::vector<std::string>& points, const std::optional<FaultDescriptor>& fault) {
  RefSim sim(design);
  std::vector<SignalId> obs;
  for (const auto& p : points) obs.push_back(*design.find_signal(p));
  std::vector<bool> comb_driven(design.signals.size(), false);
  for (const auto& s : design.statements) {
    if (s.kind == StmtKind::CombAssign) comb_driven[*s.defines] = true;
  }
  for (SignalId r : design.registers()) sim.vals_[r] = design.signal(r).reset_value;

  RefTrace trace;
  for (std::uint32_t t = 0; t < stimulus.length(); ++t) {
    if (fault && fault->cycle == t) sim.vals_[*design.find_signal(fault->reg)] ^= 1ull << fault->bit;
    for (std::size_t k = 0; k < stimulus.inputs.size(); ++k) sim.vals_[stimulus.inputs[k]] = stimulus.rows[t][k];

    // Settle: every comb-driven signal defaults to 0 unless its assignment
    // runs; repeat until nothing changes.
    std::vector<StmtId> executed;
    for (std::size_t iter = 0; iter <= design.statements.size() + 1; ++iter) {
      std::vector<std::uint64_t> next = sim.vals_;
      for (SignalId s = 0; s < next.size(); ++s) {
        if (comb_driven[s]) next[s] = 0;
      }
      executed.clear();
      for (const auto& p : design.processes) {
        if (p.kind != hdl::ProcessKind::Combinational) continue;
        for (StmtId id : p.top_level) sim.exec(id, next, executed);
      }
      const bool stable = next == sim.vals_;
      sim.vals_ = std::move(next);
      if (stable) break;
    }
    std::vector<std::uint64_t> row;
    for (SignalId s : obs) row.push_back(sim.vals_[s]);
    trace.observations.push_back(std::move(row));

    std::vector<std::uint64_t> next = sim.vals_;
    for (const auto& p : design.processes) {
      if (p.kind != hdl::ProcessKind::Clocked) continue;
      for (StmtId id : p.top_level) sim.exec(id, next, executed);
    }
    if (design.reset && sim.vals_[*design.reset]) {
      for (SignalId r : design.registers()) next[r] = design.signal(r).reset_value;
    }
    std::sort(executed.begin(), executed.end());
    trace.executed.push_back(std::move(executed));
    for (SignalId r : design.registers()) sim.vals_[r] = next[r];
  }
  return trace;
}

std::vector<FaultDescriptor> all_faults(const hdl::Design& design, CycleWindow window) {
  std::vector<FaultDescriptor> out;
  for (SignalId r : design.registers()) {
    for (std::uint32_t b = 0; b < design.signal(r).width; ++b) {
      for (std::uint32_t t = window.begin; t < window.end; ++t) out.push_back({design.signal(r).name, b, t});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::set<FaultDescriptor> brute_force_detected(const hdl::Design& design, const sim::Stimulus& stimulus,
                                               const std::vector<std::string>& points, CycleWindow window) {
  const auto golden = reference_simulate(design, stimulus, points);
  std::set<FaultDescriptor> out;
  for (const auto& f : all_faults(design, window)) {
    const auto run = reference_simulate(design, stimulus, points, f);
    for (std::uint32_t t = f.cycle; t < stimulus.length(); ++t) {
      if (run.observations[t] != golden.observations[t]) {
        out.insert(f);
        break;
      }
    }
  }
  return out;
}

}  // namespace slicefi::testkit
