#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slicefi/hdl.hpp"

namespace slicefi::hdl::detail {

enum class Tok {
  Ident,
  Number,   // unsized decimal (widths, indices)
  Literal,  // sized literal such as 4'b1010
  // keywords
  KwDesign,
  KwEnd,
  KwIn,
  KwOut,
  KwReg,
  KwWire,
  KwAssign,
  KwAlways,
  KwComb,
  KwIf,
  KwElse,
  KwCase,
  KwDefault,
  // punctuation
  Semi,
  Colon,
  Comma,
  Assign,     // =
  NonBlock,   // <=
  EqEq,       // ==
  NotEq,      // !=
  Tilde,
  Amp,
  Pipe,
  Caret,
  Question,
  LParen,
  RParen,
  LBrace,
  RBrace,
  LBracket,
  RBracket,
  Eof,
};

struct Token {
  Tok kind = Tok::Eof;
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::uint64_t value = 0;  // Number / Literal
  std::uint32_t width = 0;  // Literal
};

const char* describe(Tok kind);

/// Tokenizes `source`. On the first lexical error returns the diagnostic
/// instead of a token list.
std::variant<std::vector<Token>, Diagnostic> lex(const SourceUnit& source);

}  // namespace slicefi::hdl::detail
