#pragma once

// Mini-HDL frontend: lexing, parsing and elaboration into a statement-level
// design IR. Statement identifiers are dense (0..N-1), assigned in textual
// order, and are the unit every slice and coverage set is expressed in.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace slicefi::hdl {

using SignalId = std::uint32_t;
using StmtId = std::uint32_t;
using ExprId = std::uint32_t;
using ProcessId = std::uint32_t;

/// Widest signal the IR can hold; values live in a single 64-bit word.
inline constexpr std::uint32_t kMaxWidth = 64;

struct SourcePos {
  std::uint32_t line = 1;
  std::uint32_t column = 1;

  friend bool operator==(const SourcePos&, const SourcePos&) = default;
};

/// Half-open character range [begin, end) in line/column form, plus the
/// byte offsets it was derived from.
struct SourceSpan {
  SourcePos begin;
  SourcePos end;
  std::size_t begin_offset = 0;
  std::size_t end_offset = 0;

  friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

class SourceUnit {
 public:
  SourceUnit(std::string path, std::string text);

  /// Reads a file from disk. Throws std::runtime_error if it cannot be opened.
  static SourceUnit from_file(const std::string& path);

  const std::string& path() const { return path_; }
  const std::string& text() const { return text_; }

  /// Maps any offset in [0, text().size()] to its line and column.
  SourcePos position(std::size_t offset) const;
  SourceSpan span(std::size_t begin, std::size_t end) const;

 private:
  std::string path_;
  std::string text_;
  std::vector<std::size_t> line_starts_;
};

enum class SignalKind { Input, Output, Register, Wire };

struct Signal {
  std::string name;
  SignalKind kind = SignalKind::Wire;
  std::uint32_t width = 1;
  std::uint64_t reset_value = 0;  // registers only
  SourceSpan span;
};

enum class ExprOp { Const, Ref, Not, And, Or, Xor, Eq, Ne, Index, Slice, Concat, Mux };

/// Expression node stored in Design::exprs. Operands index the same arena.
/// Concat operands are listed most-significant first.
struct Expr {
  ExprOp op = ExprOp::Const;
  std::uint32_t width = 1;
  std::uint64_t value = 0;  // Const
  SignalId signal = 0;      // Ref
  std::uint32_t hi = 0;     // Index (hi == lo) and Slice
  std::uint32_t lo = 0;
  std::vector<ExprId> operands;
};

enum class StmtKind { CombAssign, SeqAssign, Branch };
enum class BranchKind { If, Case };

/// One arm of a branch. For `if`, arm 0 is the then-arm and arm 1 the
/// else-arm (present even when the source has no else). A case without an
/// explicit default gets a trailing empty implicit default arm.
struct Arm {
  std::vector<std::uint64_t> labels;  // case only
  bool is_default = false;
  bool implicit = false;
  std::vector<StmtId> body;  // directly contained statements, in order
};

struct Statement {
  StmtId id = 0;
  StmtKind kind = StmtKind::CombAssign;
  std::optional<SignalId> defines;  // assignments only
  std::vector<SignalId> uses;       // sorted, unique
  std::optional<StmtId> control_parent;
  std::uint32_t parent_arm = 0;  // arm of control_parent holding this statement
  ProcessId process = 0;
  SourceSpan span;
  ExprId expr = 0;  // right-hand side, or branch condition / case selector

  BranchKind branch_kind = BranchKind::If;  // Branch only
  std::vector<Arm> arms;                    // Branch only
};

enum class ProcessKind { Clocked, Combinational };

struct Process {
  ProcessId id = 0;
  ProcessKind kind = ProcessKind::Clocked;
  std::vector<StmtId> body;       // every statement of the process, by id
  std::vector<StmtId> top_level;  // statements with no control parent
};

struct Design {
  std::string name;
  std::vector<Signal> signals;
  std::vector<Statement> statements;
  std::vector<Process> processes;
  std::vector<Expr> exprs;
  /// Combinational statements (assignments and branch heads) in an order
  /// where every statement follows the statements it depends on.
  std::vector<StmtId> comb_order;
  /// Input named `rst` when present: synchronous active-high reset.
  std::optional<SignalId> reset;

  std::optional<SignalId> find_signal(std::string_view name) const;
  const Signal& signal(SignalId id) const { return signals.at(id); }
  const Statement& statement(StmtId id) const { return statements.at(id); }

  std::vector<SignalId> signals_of_kind(SignalKind kind) const;
  std::vector<SignalId> inputs() const { return signals_of_kind(SignalKind::Input); }
  std::vector<SignalId> outputs() const { return signals_of_kind(SignalKind::Output); }
  std::vector<SignalId> registers() const { return signals_of_kind(SignalKind::Register); }
  std::vector<SignalId> wires() const { return signals_of_kind(SignalKind::Wire); }

  /// Statements whose `defines` is `signal`, ascending.
  std::vector<StmtId> definitions_of(SignalId signal) const;
};

enum class DiagnosticKind {
  Lexical,
  Syntax,
  DuplicateDeclaration,
  UndeclaredSignal,
  WidthMismatch,
  MultipleDrivers,
  UndrivenSignal,
  CombinationalCycle,
  RegisterOutsideClocked,
  IllegalAssignment,
};

std::string_view to_string(DiagnosticKind kind);

struct Diagnostic {
  DiagnosticKind kind = DiagnosticKind::Syntax;
  SourceSpan span;
  std::string message;
};

std::string format_diagnostic(const SourceUnit& source, const Diagnostic& diag);

using ParseResult = std::variant<Design, std::vector<Diagnostic>>;

ParseResult parse(const SourceUnit& source);

/// Thrown by load_design when the frontend rejects its input.
class ParseFailure : public std::runtime_error {
 public:
  ParseFailure(std::string what, std::vector<Diagnostic> diagnostics)
      : std::runtime_error(std::move(what)), diagnostics_(std::move(diagnostics)) {}
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

/// Parses `source`, throwing ParseFailure with rendered diagnostics on error.
Design parse_or_throw(const SourceUnit& source);
Design load_design(const std::string& path);

/// A signal name that the design does not declare.
class UnknownSignal : public std::invalid_argument {
 public:
  explicit UnknownSignal(const std::string& name)
      : std::invalid_argument("unknown signal '" + name + "'"), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

// -- statement table ---------------------------------------------------------

struct StatementRow {
  StmtId id = 0;
  StmtKind kind = StmtKind::CombAssign;
  std::optional<std::string> defines;
  std::vector<std::string> uses;
  std::optional<StmtId> control_parent;
  SourceSpan span;
};

std::string_view to_string(StmtKind kind);

std::vector<StatementRow> statement_table(const Design& design);
std::string format_statement_table(const Design& design);

}  // namespace slicefi::hdl
