#pragma once

// Unresolved syntax tree produced by the parser and consumed by elaboration.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "slicefi/hdl.hpp"

namespace slicefi::hdl::detail {

struct AstExpr {
  ExprOp op = ExprOp::Const;
  std::string name;          // Ref
  std::uint32_t width = 0;   // Const
  std::uint64_t value = 0;   // Const
  std::uint32_t hi = 0;      // Index / Slice
  std::uint32_t lo = 0;
  std::vector<AstExpr> operands;
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct AstStmt;

struct AstArm {
  std::vector<AstExpr> labels;
  bool is_default = false;
  std::vector<AstStmt> body;
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct AstStmt {
  enum class Kind { Assign, If, Case };
  Kind kind = Kind::Assign;
  std::string target;  // Assign
  std::size_t target_begin = 0;
  std::size_t target_end = 0;
  AstExpr expr;  // rhs, if condition, or case selector
  std::vector<AstArm> arms;
  bool has_else = false;
  std::size_t begin = 0;  // statement head span
  std::size_t end = 0;
};

struct AstDecl {
  SignalKind kind = SignalKind::Wire;
  std::string name;
  std::optional<std::uint32_t> width;
  std::optional<AstExpr> reset;  // registers
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct AstProcess {
  ProcessKind kind = ProcessKind::Clocked;
  std::vector<AstStmt> body;
  std::size_t begin = 0;
  std::size_t end = 0;
};

using AstItem = std::variant<AstDecl, AstProcess>;

struct AstDesign {
  std::string name;
  std::vector<AstItem> items;
};

std::variant<AstDesign, Diagnostic> parse_ast(const SourceUnit& source);

std::variant<Design, std::vector<Diagnostic>> elaborate(const SourceUnit& source, const AstDesign& ast);

}  // namespace slicefi::hdl::detail
