#include "hdl_lexer.hpp"

#include <cctype>
#include <limits>
#include <unordered_map>
#include <variant>

namespace slicefi::hdl::detail {

namespace {

const std::unordered_map<std::string, Tok>& keywords() {
  static const std::unordered_map<std::string, Tok> table = {
      {"design", Tok::KwDesign}, {"end", Tok::KwEnd},       {"in", Tok::KwIn},
      {"out", Tok::KwOut},       {"reg", Tok::KwReg},       {"wire", Tok::KwWire},
      {"assign", Tok::KwAssign}, {"always", Tok::KwAlways}, {"comb", Tok::KwComb},
      {"if", Tok::KwIf},         {"else", Tok::KwElse},     {"case", Tok::KwCase},
      {"default", Tok::KwDefault},
  };
  return table;
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

int digit_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

class Lexer {
 public:
  explicit Lexer(const SourceUnit& source) : src_(source), text_(source.text()) {}

  std::variant<std::vector<Token>, Diagnostic> run() {
    std::vector<Token> out;
    while (true) {
      skip_trivia();
      if (error_) return *error_;
      if (pos_ >= text_.size()) {
        out.push_back(Token{Tok::Eof, "", pos_, pos_});
        return out;
      }
      auto tok = next();
      if (error_) return *error_;
      out.push_back(std::move(*tok));
    }
  }

 private:
  void fail(std::size_t begin, std::size_t end, std::string message) {
    if (!error_) error_ = Diagnostic{DiagnosticKind::Lexical, src_.span(begin, end), std::move(message)};
  }

  void skip_trivia() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '*') {
        std::size_t start = pos_;
        auto close = text_.find("*/", pos_ + 2);
        if (close == std::string::npos) {
          fail(start, text_.size(), "unterminated block comment");
          pos_ = text_.size();
          return;
        }
        pos_ = close + 2;
      } else {
        return;
      }
    }
  }

  std::optional<Token> next() {
    std::size_t start = pos_;
    char c = text_[pos_];
    if (is_ident_start(c)) {
      while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
      std::string word = text_.substr(start, pos_ - start);
      auto kw = keywords().find(word);
      Tok kind = kw == keywords().end() ? Tok::Ident : kw->second;
      return Token{kind, std::move(word), start, pos_};
    }
    if (std::isdigit(static_cast<unsigned char>(c))) return number(start);

    auto punct = [&](Tok kind, std::size_t len) {
      pos_ += len;
      return Token{kind, text_.substr(start, len), start, pos_};
    };
    char n = pos_ + 1 < text_.size() ? text_[pos_ + 1] : '\0';
    switch (c) {
      case ';': return punct(Tok::Semi, 1);
      case ':': return punct(Tok::Colon, 1);
      case ',': return punct(Tok::Comma, 1);
      case '~': return punct(Tok::Tilde, 1);
      case '&': return punct(Tok::Amp, 1);
      case '|': return punct(Tok::Pipe, 1);
      case '^': return punct(Tok::Caret, 1);
      case '?': return punct(Tok::Question, 1);
      case '(': return punct(Tok::LParen, 1);
      case ')': return punct(Tok::RParen, 1);
      case '{': return punct(Tok::LBrace, 1);
      case '}': return punct(Tok::RBrace, 1);
      case '[': return punct(Tok::LBracket, 1);
      case ']': return punct(Tok::RBracket, 1);
      case '=': return n == '=' ? punct(Tok::EqEq, 2) : punct(Tok::Assign, 1);
      case '<':
        if (n == '=') return punct(Tok::NonBlock, 2);
        break;
      case '!':
        if (n == '=') return punct(Tok::NotEq, 2);
        break;
      default: break;
    }
    fail(start, start + 1, std::string("unexpected character '") + c + "'");
    return std::nullopt;
  }

  std::optional<Token> number(std::size_t start) {
    std::uint64_t value = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      value = value * 10 + static_cast<std::uint64_t>(text_[pos_] - '0');
      if (value > 1'000'000) {
        fail(start, pos_ + 1, "number too large");
        return std::nullopt;
      }
      ++pos_;
    }
    if (pos_ >= text_.size() || text_[pos_] != '\'') {
      return Token{Tok::Number, text_.substr(start, pos_ - start), start, pos_, value};
    }

    // sized literal: <width>'<base><digits>
    ++pos_;
    if (value < 1 || value > kMaxWidth) {
      fail(start, pos_, "literal width must be between 1 and 64");
      return std::nullopt;
    }
    auto width = static_cast<std::uint32_t>(value);
    if (pos_ >= text_.size()) {
      fail(start, pos_, "missing literal base");
      return std::nullopt;
    }
    char base_char = static_cast<char>(std::tolower(static_cast<unsigned char>(text_[pos_])));
    int base = base_char == 'b' ? 2 : base_char == 'h' ? 16 : base_char == 'd' ? 10 : 0;
    if (base == 0) {
      fail(start, pos_ + 1, "literal base must be b, h or d");
      return std::nullopt;
    }
    ++pos_;
    unsigned __int128 acc = 0;
    std::size_t digits = 0;
    while (pos_ < text_.size() && (is_ident_char(text_[pos_]))) {
      char d = text_[pos_];
      if (d != '_') {
        int dv = digit_value(d);
        if (dv < 0 || dv >= base) {
          fail(start, pos_ + 1, std::string("invalid digit '") + d + "' in literal");
          return std::nullopt;
        }
        acc = acc * static_cast<unsigned>(base) + static_cast<unsigned>(dv);
        if (acc > (static_cast<unsigned __int128>(1) << 64)) {
          fail(start, pos_ + 1, "literal value does not fit in 64 bits");
          return std::nullopt;
        }
        ++digits;
      }
      ++pos_;
    }
    if (digits == 0) {
      fail(start, pos_, "literal has no digits");
      return std::nullopt;
    }
    if (width < 64 && acc >= (static_cast<unsigned __int128>(1) << width)) {
      fail(start, pos_, "literal value does not fit in " + std::to_string(width) + " bits");
      return std::nullopt;
    }
    if (acc > std::numeric_limits<std::uint64_t>::max()) {
      fail(start, pos_, "literal value does not fit in 64 bits");
      return std::nullopt;
    }
    Token tok{Tok::Literal, text_.substr(start, pos_ - start), start, pos_, static_cast<std::uint64_t>(acc)};
    tok.width = width;
    return tok;
  }

  const SourceUnit& src_;
  const std::string& text_;
  std::size_t pos_ = 0;
  std::optional<Diagnostic> error_;
};

}  // namespace

const char* describe(Tok kind) {
  switch (kind) {
    case Tok::Ident: return "identifier";
    case Tok::Number: return "number";
    case Tok::Literal: return "sized literal";
    case Tok::KwDesign: return "'design'";
    case Tok::KwEnd: return "'end'";
    case Tok::KwIn: return "'in'";
    case Tok::KwOut: return "'out'";
    case Tok::KwReg: return "'reg'";
    case Tok::KwWire: return "'wire'";
    case Tok::KwAssign: return "'assign'";
    case Tok::KwAlways: return "'always'";
    case Tok::KwComb: return "'comb'";
    case Tok::KwIf: return "'if'";
    case Tok::KwElse: return "'else'";
    case Tok::KwCase: return "'case'";
    case Tok::KwDefault: return "'default'";
    case Tok::Semi: return "';'";
    case Tok::Colon: return "':'";
    case Tok::Comma: return "','";
    case Tok::Assign: return "'='";
    case Tok::NonBlock: return "'<='";
    case Tok::EqEq: return "'=='";
    case Tok::NotEq: return "'!='";
    case Tok::Tilde: return "'~'";
    case Tok::Amp: return "'&'";
    case Tok::Pipe: return "'|'";
    case Tok::Caret: return "'^'";
    case Tok::Question: return "'?'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::Eof: return "end of file";
  }
  return "token";
}

std::variant<std::vector<Token>, Diagnostic> lex(const SourceUnit& source) { return Lexer(source).run(); }

}  // namespace slicefi::hdl::detail
