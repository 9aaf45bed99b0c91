#include <string>
#include <utility>

#include "hdl_ast.hpp"
#include "hdl_lexer.hpp"

namespace slicefi::hdl::detail {

namespace {

struct SyntaxError {
  Diagnostic diag;
};

class Parser {
 public:
  Parser(const SourceUnit& source, std::vector<Token> tokens) : src_(source), toks_(std::move(tokens)) {}

  AstDesign design() {
    AstDesign out;
    expect(Tok::KwDesign);
    out.name = expect(Tok::Ident).text;
    expect(Tok::Semi);
    while (!at(Tok::KwEnd)) {
      if (at(Tok::Eof)) error(peek(), "expected 'end' before end of file");
      item(out.items);
    }
    expect(Tok::KwEnd);
    if (!at(Tok::Eof)) error(peek(), std::string("unexpected ") + describe(peek().kind) + " after 'end'");
    return out;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  bool at(Tok kind) const { return peek().kind == kind; }
  const Token& advance() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool accept(Tok kind) {
    if (!at(kind)) return false;
    advance();
    return true;
  }
  std::size_t last_end() const { return pos_ == 0 ? 0 : toks_[pos_ - 1].end; }

  [[noreturn]] void error(const Token& at_tok, std::string message) {
    throw SyntaxError{Diagnostic{DiagnosticKind::Syntax, src_.span(at_tok.begin, std::max(at_tok.end, at_tok.begin + 1)),
                                 std::move(message)}};
  }

  const Token& expect(Tok kind) {
    if (!at(kind)) {
      error(peek(), std::string("expected ") + describe(kind) + ", found " + describe(peek().kind));
    }
    return advance();
  }

  std::uint32_t width_spec() {
    const Token& n = expect(Tok::Number);
    return static_cast<std::uint32_t>(n.value);
  }

  void item(std::vector<AstItem>& items) {
    const Token& head = peek();
    switch (head.kind) {
      case Tok::KwIn:
      case Tok::KwOut:
      case Tok::KwWire: {
        advance();
        AstDecl decl;
        decl.kind = head.kind == Tok::KwIn ? SignalKind::Input
                    : head.kind == Tok::KwOut ? SignalKind::Output
                                              : SignalKind::Wire;
        decl.begin = head.begin;
        decl.name = expect(Tok::Ident).text;
        std::size_t name_begin = toks_[pos_ - 1].begin;
        std::size_t name_end = toks_[pos_ - 1].end;
        if (accept(Tok::Colon)) {
          decl.width = width_spec();
        } else if (decl.kind != SignalKind::Wire) {
          error(peek(), "port declarations need an explicit width");
        }
        std::optional<AstExpr> init;
        if (decl.kind != SignalKind::Input && accept(Tok::Assign)) init = expr();
        expect(Tok::Semi);
        decl.end = last_end();
        if (!init && !decl.width) error(toks_[pos_ - 1], "wire '" + decl.name + "' needs a width or a driver");
        items.emplace_back(decl);
        if (init) {
          AstProcess proc;
          proc.kind = ProcessKind::Combinational;
          proc.begin = decl.begin;
          proc.end = decl.end;
          AstStmt st;
          st.kind = AstStmt::Kind::Assign;
          st.target = decl.name;
          st.target_begin = name_begin;
          st.target_end = name_end;
          st.expr = std::move(*init);
          st.begin = decl.begin;
          st.end = decl.end;
          proc.body.push_back(std::move(st));
          items.emplace_back(std::move(proc));
        }
        return;
      }
      case Tok::KwReg: {
        advance();
        AstDecl decl;
        decl.kind = SignalKind::Register;
        decl.begin = head.begin;
        decl.name = expect(Tok::Ident).text;
        expect(Tok::Colon);
        decl.width = width_spec();
        if (accept(Tok::Assign)) {
          if (!at(Tok::Literal)) error(peek(), "register reset value must be a sized literal");
          decl.reset = primary();
        }
        expect(Tok::Semi);
        decl.end = last_end();
        items.emplace_back(std::move(decl));
        return;
      }
      case Tok::KwAssign: {
        advance();
        AstProcess proc;
        proc.kind = ProcessKind::Combinational;
        proc.begin = head.begin;
        AstStmt st;
        st.kind = AstStmt::Kind::Assign;
        const Token& target = expect(Tok::Ident);
        st.target = target.text;
        st.target_begin = target.begin;
        st.target_end = target.end;
        expect(Tok::Assign);
        st.expr = expr();
        expect(Tok::Semi);
        st.begin = head.begin;
        st.end = last_end();
        proc.end = st.end;
        proc.body.push_back(std::move(st));
        items.emplace_back(std::move(proc));
        return;
      }
      case Tok::KwAlways:
      case Tok::KwComb: {
        advance();
        AstProcess proc;
        proc.kind = head.kind == Tok::KwAlways ? ProcessKind::Clocked : ProcessKind::Combinational;
        proc.begin = head.begin;
        expect(Tok::LBrace);
        while (!at(Tok::RBrace)) proc.body.push_back(statement(proc.kind));
        expect(Tok::RBrace);
        proc.end = last_end();
        items.emplace_back(std::move(proc));
        return;
      }
      default:
        error(head, std::string("expected a declaration, 'assign', 'always' or 'comb', found ") + describe(head.kind));
    }
  }

  std::vector<AstStmt> block(ProcessKind kind) {
    std::vector<AstStmt> body;
    if (accept(Tok::LBrace)) {
      while (!at(Tok::RBrace)) {
        if (at(Tok::Eof)) error(peek(), "unterminated block");
        body.push_back(statement(kind));
      }
      expect(Tok::RBrace);
    } else {
      body.push_back(statement(kind));
    }
    return body;
  }

  AstStmt statement(ProcessKind kind) {
    const Token& head = peek();
    AstStmt st;
    st.begin = head.begin;
    if (head.kind == Tok::KwIf) {
      advance();
      st.kind = AstStmt::Kind::If;
      expect(Tok::LParen);
      st.expr = expr();
      expect(Tok::RParen);
      st.end = last_end();
      AstArm then_arm;
      then_arm.body = block(kind);
      AstArm else_arm;
      if (accept(Tok::KwElse)) {
        st.has_else = true;
        else_arm.body = at(Tok::KwIf) ? std::vector<AstStmt>{statement(kind)} : block(kind);
      }
      st.arms.push_back(std::move(then_arm));
      st.arms.push_back(std::move(else_arm));
      return st;
    }
    if (head.kind == Tok::KwCase) {
      advance();
      st.kind = AstStmt::Kind::Case;
      expect(Tok::LParen);
      st.expr = expr();
      expect(Tok::RParen);
      st.end = last_end();
      expect(Tok::LBrace);
      bool seen_default = false;
      while (!at(Tok::RBrace)) {
        AstArm arm;
        arm.begin = peek().begin;
        if (at(Tok::KwDefault)) {
          if (seen_default) error(peek(), "case has more than one default arm");
          advance();
          arm.is_default = true;
          seen_default = true;
        } else {
          do {
            if (!at(Tok::Literal)) error(peek(), "case labels must be sized literals");
            arm.labels.push_back(primary());
          } while (accept(Tok::Comma));
        }
        expect(Tok::Colon);
        arm.body = block(kind);
        arm.end = last_end();
        st.arms.push_back(std::move(arm));
      }
      expect(Tok::RBrace);
      return st;
    }
    if (head.kind == Tok::Ident) {
      st.kind = AstStmt::Kind::Assign;
      const Token& target = advance();
      st.target = target.text;
      st.target_begin = target.begin;
      st.target_end = target.end;
      if (kind == ProcessKind::Clocked) {
        if (at(Tok::Assign)) error(peek(), "clocked processes use non-blocking '<=' assignments");
        expect(Tok::NonBlock);
      } else {
        if (at(Tok::NonBlock)) error(peek(), "combinational processes use '=' assignments");
        expect(Tok::Assign);
      }
      st.expr = expr();
      expect(Tok::Semi);
      st.end = last_end();
      return st;
    }
    error(head, std::string("expected a statement, found ") + describe(head.kind));
  }

  // expression grammar, loosest binding first
  AstExpr expr() {
    AstExpr cond = or_expr();
    if (!accept(Tok::Question)) return cond;
    AstExpr a = expr();
    expect(Tok::Colon);
    AstExpr b = expr();
    AstExpr out;
    out.op = ExprOp::Mux;
    out.begin = cond.begin;
    out.end = b.end;
    out.operands = {std::move(cond), std::move(a), std::move(b)};
    return out;
  }

  template <typename Next>
  AstExpr left_assoc(Tok tok, ExprOp op, Next next) {
    AstExpr lhs = (this->*next)();
    while (accept(tok)) {
      AstExpr rhs = (this->*next)();
      AstExpr node;
      node.op = op;
      node.begin = lhs.begin;
      node.end = rhs.end;
      node.operands = {std::move(lhs), std::move(rhs)};
      lhs = std::move(node);
    }
    return lhs;
  }

  AstExpr or_expr() { return left_assoc(Tok::Pipe, ExprOp::Or, &Parser::xor_expr); }
  AstExpr xor_expr() { return left_assoc(Tok::Caret, ExprOp::Xor, &Parser::and_expr); }
  AstExpr and_expr() { return left_assoc(Tok::Amp, ExprOp::And, &Parser::eq_expr); }

  AstExpr eq_expr() {
    AstExpr lhs = unary();
    if (at(Tok::EqEq) || at(Tok::NotEq)) {
      ExprOp op = advance().kind == Tok::EqEq ? ExprOp::Eq : ExprOp::Ne;
      AstExpr rhs = unary();
      AstExpr node;
      node.op = op;
      node.begin = lhs.begin;
      node.end = rhs.end;
      node.operands = {std::move(lhs), std::move(rhs)};
      return node;
    }
    return lhs;
  }

  AstExpr unary() {
    if (at(Tok::Tilde)) {
      std::size_t begin = advance().begin;
      AstExpr inner = unary();
      AstExpr node;
      node.op = ExprOp::Not;
      node.begin = begin;
      node.end = inner.end;
      node.operands = {std::move(inner)};
      return node;
    }
    return postfix();
  }

  AstExpr postfix() {
    AstExpr base = primary();
    while (accept(Tok::LBracket)) {
      AstExpr node;
      node.begin = base.begin;
      node.hi = static_cast<std::uint32_t>(expect(Tok::Number).value);
      node.lo = node.hi;
      node.op = ExprOp::Index;
      if (accept(Tok::Colon)) {
        node.lo = static_cast<std::uint32_t>(expect(Tok::Number).value);
        node.op = ExprOp::Slice;
      }
      expect(Tok::RBracket);
      node.end = last_end();
      node.operands = {std::move(base)};
      base = std::move(node);
    }
    return base;
  }

  AstExpr primary() {
    const Token& t = peek();
    AstExpr node;
    node.begin = t.begin;
    switch (t.kind) {
      case Tok::Ident:
        advance();
        node.op = ExprOp::Ref;
        node.name = t.text;
        node.end = t.end;
        return node;
      case Tok::Literal:
        advance();
        node.op = ExprOp::Const;
        node.width = t.width;
        node.value = t.value;
        node.end = t.end;
        return node;
      case Tok::LParen: {
        advance();
        AstExpr inner = expr();
        expect(Tok::RParen);
        inner.begin = t.begin;
        inner.end = last_end();
        return inner;
      }
      case Tok::LBrace: {
        advance();
        node.op = ExprOp::Concat;
        do {
          node.operands.push_back(expr());
        } while (accept(Tok::Comma));
        expect(Tok::RBrace);
        node.end = last_end();
        return node;
      }
      case Tok::Number:
        error(t, "constants in expressions must be sized literals such as 1'b0");
      default:
        error(t, std::string("expected an expression, found ") + describe(t.kind));
    }
  }

  const SourceUnit& src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

std::variant<AstDesign, Diagnostic> parse_ast(const SourceUnit& source) {
  auto lexed = lex(source);
  if (auto* diag = std::get_if<Diagnostic>(&lexed)) return *diag;
  try {
    return Parser(source, std::move(std::get<std::vector<Token>>(lexed))).design();
  } catch (SyntaxError& e) {
    return std::move(e.diag);
  }
}

}  // namespace slicefi::hdl::detail
