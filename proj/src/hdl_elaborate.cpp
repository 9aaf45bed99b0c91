#include <algorithm>
#include <functional>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_map>

#include "hdl_ast.hpp"

namespace slicefi::hdl::detail {

namespace {

std::string_view kind_name(SignalKind kind) {
  switch (kind) {
    case SignalKind::Input: return "input";
    case SignalKind::Output: return "output";
    case SignalKind::Register: return "register";
    case SignalKind::Wire: return "wire";
  }
  return "signal";
}

std::string_view op_name(ExprOp op) {
  switch (op) {
    case ExprOp::And: return "&";
    case ExprOp::Or: return "|";
    case ExprOp::Xor: return "^";
    case ExprOp::Eq: return "==";
    case ExprOp::Ne: return "!=";
    default: return "?";
  }
}

std::uint64_t mask(std::uint32_t width) { return width >= 64 ? ~0ULL : ((1ULL << width) - 1); }

class Elaborator {
 public:
  Elaborator(const SourceUnit& src, const AstDesign& ast) : src_(src), ast_(ast) {}

  std::variant<Design, std::vector<Diagnostic>> run() {
    design_.name = ast_.name;
    declare_signals();
    collect_statements();
    check_drivers();
    check_reset();
    if (!diags_.empty()) return std::move(diags_);
    if (!order_combinational()) return std::move(diags_);
    type_check();
    if (!diags_.empty()) return std::move(diags_);
    return std::move(design_);
  }

 private:
  void report(DiagnosticKind kind, std::size_t begin, std::size_t end, std::string message) {
    diags_.push_back(Diagnostic{kind, src_.span(begin, end), std::move(message)});
  }

  std::optional<SignalId> lookup(const std::string& name) const {
    auto it = names_.find(name);
    if (it == names_.end()) return std::nullopt;
    return it->second;
  }

  // -- declarations ---------------------------------------------------------

  void declare_signals() {
    for (const auto& item : ast_.items) {
      const auto* decl = std::get_if<AstDecl>(&item);
      if (!decl) continue;
      if (names_.count(decl->name)) {
        const Signal& prev = design_.signals[names_.at(decl->name)];
        report(DiagnosticKind::DuplicateDeclaration, decl->begin, decl->end,
               "'" + decl->name + "' is already declared as " + std::string(kind_name(prev.kind)) + " at line " +
                   std::to_string(prev.span.begin.line));
        continue;
      }
      Signal sig;
      sig.name = decl->name;
      sig.kind = decl->kind;
      sig.span = src_.span(decl->begin, decl->end);
      sig.width = decl->width.value_or(0);
      if (decl->width && (*decl->width < 1 || *decl->width > kMaxWidth)) {
        report(DiagnosticKind::WidthMismatch, decl->begin, decl->end,
               "width of '" + decl->name + "' must be between 1 and " + std::to_string(kMaxWidth));
        sig.width = 1;
      }
      if (decl->reset) {
        if (decl->reset->width != sig.width) {
          report(DiagnosticKind::WidthMismatch, decl->reset->begin, decl->reset->end,
                 "reset value of '" + decl->name + "' has width " + std::to_string(decl->reset->width) +
                     ", register has width " + std::to_string(sig.width));
        } else {
          sig.reset_value = decl->reset->value;
        }
      }
      names_.emplace(sig.name, static_cast<SignalId>(design_.signals.size()));
      design_.signals.push_back(std::move(sig));
    }
  }

  // -- statements -----------------------------------------------------------

  void collect_statements() {
    for (const auto& item : ast_.items) {
      const auto* proc = std::get_if<AstProcess>(&item);
      if (!proc) continue;
      Process p;
      p.id = static_cast<ProcessId>(design_.processes.size());
      p.kind = proc->kind;
      design_.processes.push_back(p);
      for (const auto& st : proc->body) {
        StmtId id = add_statement(st, p.id, std::nullopt, 0);
        design_.processes[p.id].top_level.push_back(id);
      }
    }
  }

  void collect_refs(const AstExpr& e, std::set<SignalId>& out) {
    if (e.op == ExprOp::Ref) {
      if (auto id = lookup(e.name)) {
        out.insert(*id);
      } else {
        report(DiagnosticKind::UndeclaredSignal, e.begin, e.end, "undeclared signal '" + e.name + "'");
      }
    }
    for (const auto& child : e.operands) collect_refs(child, out);
  }

  StmtId add_statement(const AstStmt& st, ProcessId proc, std::optional<StmtId> parent, std::uint32_t arm) {
    const ProcessKind pkind = design_.processes[proc].kind;
    auto id = static_cast<StmtId>(design_.statements.size());
    Statement s;
    s.id = id;
    s.process = proc;
    s.control_parent = parent;
    s.parent_arm = arm;
    s.span = src_.span(st.begin, st.end);

    std::set<SignalId> uses;
    collect_refs(st.expr, uses);
    s.uses.assign(uses.begin(), uses.end());

    if (st.kind == AstStmt::Kind::Assign) {
      s.kind = pkind == ProcessKind::Clocked ? StmtKind::SeqAssign : StmtKind::CombAssign;
      resolve_target(st, s);
    } else {
      s.kind = StmtKind::Branch;
      s.branch_kind = st.kind == AstStmt::Kind::If ? BranchKind::If : BranchKind::Case;
    }
    design_.statements.push_back(std::move(s));
    stmt_ast_.push_back(&st);
    design_.processes[proc].body.push_back(id);

    if (st.kind != AstStmt::Kind::Assign) {
      std::vector<Arm> arms;
      bool has_default = false;
      for (std::uint32_t a = 0; a < st.arms.size(); ++a) {
        const AstArm& src_arm = st.arms[a];
        Arm out;
        out.is_default = src_arm.is_default;
        out.implicit = st.kind == AstStmt::Kind::If && a == 1 && !st.has_else;
        has_default = has_default || src_arm.is_default;
        for (const auto& child : src_arm.body) out.body.push_back(add_statement(child, proc, id, a));
        arms.push_back(std::move(out));
      }
      if (st.kind == AstStmt::Kind::Case && !has_default) {
        Arm implicit_default;
        implicit_default.is_default = true;
        implicit_default.implicit = true;
        arms.push_back(std::move(implicit_default));
      }
      design_.statements[id].arms = std::move(arms);
    }
    return id;
  }

  void resolve_target(const AstStmt& st, Statement& s) {
    auto target = lookup(st.target);
    if (!target) {
      report(DiagnosticKind::UndeclaredSignal, st.target_begin, st.target_end, "undeclared signal '" + st.target + "'");
      return;
    }
    const Signal& sig = design_.signals[*target];
    const bool clocked = s.kind == StmtKind::SeqAssign;
    if (sig.kind == SignalKind::Input) {
      report(DiagnosticKind::IllegalAssignment, st.begin, st.end, "input '" + sig.name + "' cannot be assigned");
      return;
    }
    if (sig.kind == SignalKind::Register && !clocked) {
      report(DiagnosticKind::RegisterOutsideClocked, st.begin, st.end,
             "register '" + sig.name + "' is assigned outside a clocked process");
      return;
    }
    if (sig.kind != SignalKind::Register && clocked) {
      report(DiagnosticKind::IllegalAssignment, st.begin, st.end,
             std::string(kind_name(sig.kind)) + " '" + sig.name + "' cannot be assigned in a clocked process");
      return;
    }
    s.defines = *target;
  }

  void check_drivers() {
    std::vector<std::vector<StmtId>> drivers(design_.signals.size());
    for (const auto& s : design_.statements) {
      if (s.defines) drivers[*s.defines].push_back(s.id);
    }
    for (SignalId sig = 0; sig < design_.signals.size(); ++sig) {
      const Signal& signal = design_.signals[sig];
      const auto& defs = drivers[sig];
      switch (signal.kind) {
        case SignalKind::Input: break;
        case SignalKind::Wire:
        case SignalKind::Output:
          if (defs.empty()) {
            report(DiagnosticKind::UndrivenSignal, signal.span.begin_offset, signal.span.end_offset,
                   std::string(kind_name(signal.kind)) + " '" + signal.name + "' has no driver");
          }
          for (std::size_t i = 1; i < defs.size(); ++i) {
            const Statement& extra = design_.statements[defs[i]];
            report(DiagnosticKind::MultipleDrivers, extra.span.begin_offset, extra.span.end_offset,
                   "'" + signal.name + "' is driven by statements " + std::to_string(defs[0]) + " and " +
                       std::to_string(defs[i]));
          }
          break;
        case SignalKind::Register: {
          if (defs.empty()) {
            report(DiagnosticKind::UndrivenSignal, signal.span.begin_offset, signal.span.end_offset,
                   "register '" + signal.name + "' is never assigned in a clocked process");
          }
          for (StmtId d : defs) {
            const Statement& st = design_.statements[d];
            if (st.process != design_.statements[defs[0]].process) {
              report(DiagnosticKind::MultipleDrivers, st.span.begin_offset, st.span.end_offset,
                     "register '" + signal.name + "' is assigned from more than one clocked process");
              break;
            }
          }
          break;
        }
      }
    }
  }

  void check_reset() {
    auto rst = lookup("rst");
    if (!rst) return;
    const Signal& sig = design_.signals[*rst];
    if (sig.kind != SignalKind::Input || sig.width != 1) {
      report(DiagnosticKind::IllegalAssignment, sig.span.begin_offset, sig.span.end_offset,
             "'rst' is reserved for the 1-bit synchronous reset input");
      return;
    }
    design_.reset = *rst;
  }

  // -- combinational ordering ---------------------------------------------------

  bool is_comb(const Statement& s) const {
    return design_.processes[s.process].kind == ProcessKind::Combinational;
  }

  std::vector<StmtId> comb_dependencies(const Statement& s, const std::vector<std::optional<StmtId>>& comb_def) const {
    std::vector<StmtId> deps;
    for (SignalId u : s.uses) {
      if (comb_def[u]) deps.push_back(*comb_def[u]);
    }
    if (s.control_parent) deps.push_back(*s.control_parent);
    std::sort(deps.begin(), deps.end());
    deps.erase(std::unique(deps.begin(), deps.end()), deps.end());
    return deps;
  }

  bool order_combinational() {
    const auto& stmts = design_.statements;
    std::vector<std::optional<StmtId>> comb_def(design_.signals.size());
    for (const auto& s : stmts) {
      if (s.defines && is_comb(s)) comb_def[*s.defines] = s.id;
    }
    std::vector<std::vector<StmtId>> deps(stmts.size());
    std::vector<StmtId> comb;
    for (const auto& s : stmts) {
      if (!is_comb(s)) continue;
      comb.push_back(s.id);
      deps[s.id] = comb_dependencies(s, comb_def);
    }

    // Tarjan's SCC over the combinational dependence relation.
    std::vector<int> index(stmts.size(), -1), low(stmts.size(), 0);
    std::vector<bool> on_stack(stmts.size(), false);
    std::vector<StmtId> stack;
    int counter = 0;
    std::vector<std::vector<StmtId>> cycles;
    std::function<void(StmtId)> connect = [&](StmtId v) {
      index[v] = low[v] = counter++;
      stack.push_back(v);
      on_stack[v] = true;
      for (StmtId w : deps[v]) {
        if (index[w] < 0) {
          connect(w);
          low[v] = std::min(low[v], low[w]);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
      }
      if (low[v] == index[v]) {
        std::vector<StmtId> scc;
        StmtId w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          scc.push_back(w);
        } while (w != v);
        bool self_loop = std::find(deps[v].begin(), deps[v].end(), v) != deps[v].end();
        if (scc.size() > 1 || self_loop) {
          std::sort(scc.begin(), scc.end());
          cycles.push_back(std::move(scc));
        }
      }
    };
    for (StmtId s : comb) {
      if (index[s] < 0) connect(s);
    }
    std::sort(cycles.begin(), cycles.end());
    for (const auto& scc : cycles) {
      std::ostringstream msg;
      msg << "combinational cycle through statements ";
      for (std::size_t i = 0; i < scc.size(); ++i) {
        const Statement& s = stmts[scc[i]];
        if (i) msg << (i + 1 == scc.size() ? " and " : ", ");
        msg << s.id;
        if (s.defines) msg << " (" << design_.signals[*s.defines].name << ")";
        else msg << " (branch)";
      }
      const Statement& first = stmts[scc.front()];
      report(DiagnosticKind::CombinationalCycle, first.span.begin_offset, first.span.end_offset, msg.str());
    }
    if (!cycles.empty()) return false;

    // Kahn's algorithm, smallest id first so the order is deterministic.
    std::vector<std::size_t> pending(stmts.size(), 0);
    std::vector<std::vector<StmtId>> users(stmts.size());
    for (StmtId s : comb) {
      pending[s] = deps[s].size();
      for (StmtId d : deps[s]) users[d].push_back(s);
    }
    std::priority_queue<StmtId, std::vector<StmtId>, std::greater<>> ready;
    for (StmtId s : comb) {
      if (pending[s] == 0) ready.push(s);
    }
    while (!ready.empty()) {
      StmtId s = ready.top();
      ready.pop();
      design_.comb_order.push_back(s);
      for (StmtId u : users[s]) {
        if (--pending[u] == 0) ready.push(u);
      }
    }
    return true;
  }

  // -- widths and expression lowering ---------------------------------------

  void type_check() {
    for (StmtId id : design_.comb_order) check_statement(id);
    for (const auto& s : design_.statements) {
      if (!is_comb(s)) check_statement(s.id);
    }
  }

  void check_statement(StmtId id) {
    const AstStmt& st = *stmt_ast_[id];
    auto expr = lower(st.expr);
    if (!expr) return;
    Statement& s = design_.statements[id];
    s.expr = *expr;
    const std::uint32_t width = design_.exprs[*expr].width;
    if (s.kind != StmtKind::Branch) {
      Signal& target = design_.signals[*s.defines];
      if (target.width == 0) {
        target.width = width;  // inferred from the driver
      } else if (target.width != width) {
        report(DiagnosticKind::WidthMismatch, st.begin, st.end,
               "assignment to '" + target.name + "' (width " + std::to_string(target.width) +
                   ") from expression of width " + std::to_string(width));
      }
      return;
    }
    if (s.branch_kind == BranchKind::If) {
      if (width != 1) {
        report(DiagnosticKind::WidthMismatch, st.expr.begin, st.expr.end,
               "if condition must have width 1, found width " + std::to_string(width));
      }
      return;
    }
    for (std::size_t a = 0; a < st.arms.size(); ++a) {
      for (const auto& label : st.arms[a].labels) {
        if (label.width != width) {
          report(DiagnosticKind::WidthMismatch, label.begin, label.end,
                 "case label width " + std::to_string(label.width) + " does not match selector width " +
                     std::to_string(width));
        } else {
          s.arms[a].labels.push_back(label.value);
        }
      }
    }
  }

  std::optional<ExprId> push(Expr e) {
    design_.exprs.push_back(std::move(e));
    return static_cast<ExprId>(design_.exprs.size() - 1);
  }

  std::uint32_t width_of(ExprId id) const { return design_.exprs[id].width; }

  std::optional<ExprId> lower(const AstExpr& e) {
    Expr out;
    out.op = e.op;
    switch (e.op) {
      case ExprOp::Const:
        out.width = e.width;
        out.value = e.value & mask(e.width);
        return push(out);
      case ExprOp::Ref: {
        auto sig = lookup(e.name);
        if (!sig) return std::nullopt;
        if (design_.signals[*sig].width == 0) return std::nullopt;  // driver failed to type-check
        out.signal = *sig;
        out.width = design_.signals[*sig].width;
        return push(out);
      }
      default: break;
    }

    std::vector<ExprId> kids;
    for (const auto& child : e.operands) {
      auto k = lower(child);
      if (!k) return std::nullopt;
      kids.push_back(*k);
    }
    out.operands = kids;
    auto mismatch = [&](const std::string& what) {
      report(DiagnosticKind::WidthMismatch, e.begin, e.end, what);
      return std::nullopt;
    };
    switch (e.op) {
      case ExprOp::Not:
        out.width = width_of(kids[0]);
        break;
      case ExprOp::And:
      case ExprOp::Or:
      case ExprOp::Xor:
      case ExprOp::Eq:
      case ExprOp::Ne:
        if (width_of(kids[0]) != width_of(kids[1])) {
          return mismatch("operands of '" + std::string(op_name(e.op)) + "' have widths " +
                          std::to_string(width_of(kids[0])) + " and " + std::to_string(width_of(kids[1])));
        }
        out.width = (e.op == ExprOp::Eq || e.op == ExprOp::Ne) ? 1 : width_of(kids[0]);
        break;
      case ExprOp::Index:
      case ExprOp::Slice:
        if (e.hi < e.lo) return mismatch("slice [" + std::to_string(e.hi) + ":" + std::to_string(e.lo) + "] is reversed");
        if (e.hi >= width_of(kids[0])) {
          return mismatch("index " + std::to_string(e.hi) + " out of range for width " +
                          std::to_string(width_of(kids[0])));
        }
        out.hi = e.hi;
        out.lo = e.lo;
        out.width = e.hi - e.lo + 1;
        break;
      case ExprOp::Concat: {
        std::uint32_t total = 0;
        for (ExprId k : kids) total += width_of(k);
        if (total > kMaxWidth) return mismatch("concatenation is wider than 64 bits");
        out.width = total;
        break;
      }
      case ExprOp::Mux:
        if (width_of(kids[0]) != 1) {
          return mismatch("'?' condition must have width 1, found width " + std::to_string(width_of(kids[0])));
        }
        if (width_of(kids[1]) != width_of(kids[2])) {
          return mismatch("'?' arms have widths " + std::to_string(width_of(kids[1])) + " and " +
                          std::to_string(width_of(kids[2])));
        }
        out.width = width_of(kids[1]);
        break;
      default: break;
    }
    return push(out);
  }

  const SourceUnit& src_;
  const AstDesign& ast_;
  Design design_;
  std::vector<Diagnostic> diags_;
  std::unordered_map<std::string, SignalId> names_;
  std::vector<const AstStmt*> stmt_ast_;
};

}  // namespace

std::variant<Design, std::vector<Diagnostic>> elaborate(const SourceUnit& source, const AstDesign& ast) {
  return Elaborator(source, ast).run();
}

}  // namespace slicefi::hdl::detail
