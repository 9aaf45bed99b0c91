#include "slicefi/hdl.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "hdl_ast.hpp"

namespace slicefi::hdl {

SourceUnit::SourceUnit(std::string path, std::string text) : path_(std::move(path)), text_(std::move(text)) {
  line_starts_.push_back(0);
  for (std::size_t i = 0; i < text_.size(); ++i) {
    if (text_[i] == '\n') line_starts_.push_back(i + 1);
  }
}

SourceUnit SourceUnit::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return SourceUnit(path, buf.str());
}

SourcePos SourceUnit::position(std::size_t offset) const {
  offset = std::min(offset, text_.size());
  auto it = std::upper_bound(line_starts_.begin(), line_starts_.end(), offset);
  auto line = static_cast<std::size_t>(it - line_starts_.begin());
  std::size_t column = offset - line_starts_[line - 1] + 1;
  return SourcePos{static_cast<std::uint32_t>(line), static_cast<std::uint32_t>(column)};
}

SourceSpan SourceUnit::span(std::size_t begin, std::size_t end) const {
  return SourceSpan{position(begin), position(end), begin, end};
}

std::optional<SignalId> Design::find_signal(std::string_view name) const {
  for (SignalId i = 0; i < signals.size(); ++i) {
    if (signals[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<SignalId> Design::signals_of_kind(SignalKind kind) const {
  std::vector<SignalId> out;
  for (SignalId i = 0; i < signals.size(); ++i) {
    if (signals[i].kind == kind) out.push_back(i);
  }
  return out;
}

std::vector<StmtId> Design::definitions_of(SignalId signal) const {
  std::vector<StmtId> out;
  for (const auto& s : statements) {
    if (s.defines && *s.defines == signal) out.push_back(s.id);
  }
  return out;
}

std::string_view to_string(DiagnosticKind kind) {
  switch (kind) {
    case DiagnosticKind::Lexical: return "lexical error";
    case DiagnosticKind::Syntax: return "syntax error";
    case DiagnosticKind::DuplicateDeclaration: return "duplicate declaration";
    case DiagnosticKind::UndeclaredSignal: return "undeclared signal";
    case DiagnosticKind::WidthMismatch: return "width mismatch";
    case DiagnosticKind::MultipleDrivers: return "multiple drivers";
    case DiagnosticKind::UndrivenSignal: return "undriven signal";
    case DiagnosticKind::CombinationalCycle: return "combinational cycle";
    case DiagnosticKind::RegisterOutsideClocked: return "register assigned outside clocked process";
    case DiagnosticKind::IllegalAssignment: return "illegal assignment";
  }
  return "error";
}

std::string_view to_string(StmtKind kind) {
  switch (kind) {
    case StmtKind::CombAssign: return "comb_assign";
    case StmtKind::SeqAssign: return "seq_assign";
    case StmtKind::Branch: return "branch";
  }
  return "?";
}

std::string format_diagnostic(const SourceUnit& source, const Diagnostic& diag) {
  std::ostringstream out;
  out << source.path() << ':' << diag.span.begin.line << ':' << diag.span.begin.column << ": " << to_string(diag.kind)
      << ": " << diag.message;
  return out.str();
}

ParseResult parse(const SourceUnit& source) {
  auto ast = detail::parse_ast(source);
  if (auto* diag = std::get_if<Diagnostic>(&ast)) return std::vector<Diagnostic>{*diag};
  return detail::elaborate(source, std::get<detail::AstDesign>(ast));
}

Design parse_or_throw(const SourceUnit& source) {
  auto result = parse(source);
  if (auto* diags = std::get_if<std::vector<Diagnostic>>(&result)) {
    std::string what;
    for (const auto& d : *diags) what += format_diagnostic(source, d) + "\n";
    throw ParseFailure(what, *diags);
  }
  return std::get<Design>(std::move(result));
}

Design load_design(const std::string& path) { return parse_or_throw(SourceUnit::from_file(path)); }

std::vector<StatementRow> statement_table(const Design& design) {
  std::vector<StatementRow> rows;
  rows.reserve(design.statements.size());
  for (const auto& s : design.statements) {
    StatementRow row;
    row.id = s.id;
    row.kind = s.kind;
    if (s.defines) row.defines = design.signals[*s.defines].name;
    for (SignalId u : s.uses) row.uses.push_back(design.signals[u].name);
    std::sort(row.uses.begin(), row.uses.end());
    row.control_parent = s.control_parent;
    row.span = s.span;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_statement_table(const Design& design) {
  std::ostringstream out;
  out << "id\tkind\tdefines\tuses\tcontrol_parent\tspan\n";
  for (const auto& row : statement_table(design)) {
    out << row.id << '\t' << to_string(row.kind) << '\t' << row.defines.value_or("-") << '\t';
    if (row.uses.empty()) out << '-';
    for (std::size_t i = 0; i < row.uses.size(); ++i) out << (i ? "," : "") << row.uses[i];
    out << '\t';
    if (row.control_parent) out << *row.control_parent;
    else out << '-';
    out << '\t' << row.span.begin.line << ':' << row.span.begin.column << '-' << row.span.end.line << ':'
        << row.span.end.column << '\n';
  }
  return out.str();
}

}  // namespace slicefi::hdl
