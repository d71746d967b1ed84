#include "prophecy/core/parser.hpp"

#include <array>
#include <cctype>
#include <limits>

namespace prophecy::core {

namespace {

enum class Tok { ident, integer, colon, assign, plus, minus, star, lparen, rparen, eq, le, newline, end };

struct Token {
  Tok kind;
  std::string text;
  int line;
  int column;
};

constexpr std::array<std::string_view, 11> kKeywords = {"skip", "if",  "then", "goto", "halt", "done",
                                                        "true", "false", "not", "and", "or"};

bool is_keyword(std::string_view s) {
  for (auto k : kKeywords) {
    if (k == s) return true;
  }
  return false;
}

[[noreturn]] void syntax_error(const std::string& msg, int line, int column) {
  throw ProgramError(ProgramError::Kind::syntax, msg, line, column);
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto push = [&](Tok k, std::string s, int c) { out.push_back(Token{k, std::move(s), line, c}); };
  while (i < text.size()) {
    const char ch = text[i];
    if (ch == '\n') {
      push(Tok::newline, "\n", col);
      ++line;
      col = 1;
      ++i;
      continue;
    }
    if (ch == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
      continue;
    }
    if (ch == ' ' || ch == '\t' || ch == '\r') {
      ++i;
      ++col;
      continue;
    }
    const int start = col;
    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      std::size_t j = i;
      while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
      push(Tok::ident, std::string(text.substr(i, j - i)), start);
      col += static_cast<int>(j - i);
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(ch))) {
      std::size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      push(Tok::integer, std::string(text.substr(i, j - i)), start);
      col += static_cast<int>(j - i);
      i = j;
      continue;
    }
    auto two = text.substr(i, 2);
    if (two == ":=") {
      push(Tok::assign, ":=", start);
      i += 2;
      col += 2;
      continue;
    }
    if (two == "<=") {
      push(Tok::le, "<=", start);
      i += 2;
      col += 2;
      continue;
    }
    Tok k;
    switch (ch) {
      case ':': k = Tok::colon; break;
      case '+': k = Tok::plus; break;
      case '-': k = Tok::minus; break;
      case '*': k = Tok::star; break;
      case '(': k = Tok::lparen; break;
      case ')': k = Tok::rparen; break;
      case '=': k = Tok::eq; break;
      default:
        syntax_error(std::string("unexpected character '") + ch + "'", line, col);
    }
    push(k, std::string(1, ch), start);
    ++i;
    ++col;
  }
  out.push_back(Token{Tok::end, "", line, col});
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  std::vector<LabeledCommand> program() {
    std::vector<LabeledCommand> cmds;
    for (;;) {
      while (peek().kind == Tok::newline) ++pos_;
      if (peek().kind == Tok::end) break;
      cmds.push_back(labeled());
      if (peek().kind != Tok::newline && peek().kind != Tok::end) fail("expected end of line");
    }
    return cmds;
  }

  AExp whole_aexp() {
    AExp e = aexp();
    expect_end();
    return e;
  }

  BExp whole_bexp() {
    BExp b = bexp();
    expect_end();
    return b;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  bool at_keyword(std::string_view kw) const { return peek().kind == Tok::ident && peek().text == kw; }

  [[noreturn]] void fail(const std::string& msg) const {
    const auto& t = peek();
    syntax_error(msg + (t.kind == Tok::end       ? " at end of input"
                        : t.kind == Tok::newline ? " at end of line"
                                                 : ", found '" + t.text + "'"),
                 t.line, t.column);
  }

  void expect(Tok k, const char* what) {
    if (peek().kind != k) fail(std::string("expected ") + what);
    ++pos_;
  }

  void expect_end() {
    while (peek().kind == Tok::newline) ++pos_;
    if (peek().kind != Tok::end) fail("unexpected trailing input");
  }

  std::string name(const char* what) {
    if (peek().kind != Tok::ident || is_keyword(peek().text)) fail(std::string("expected ") + what);
    return toks_[pos_++].text;
  }

  LabeledCommand labeled() {
    const int line = peek().line;
    Label l{name("label")};
    expect(Tok::colon, "':' after label");
    return LabeledCommand{std::move(l), command(), line};
  }

  Command command() {
    if (at_keyword("skip")) {
      ++pos_;
      return Skip{};
    }
    if (at_keyword("halt")) {
      ++pos_;
      return Halt{};
    }
    if (at_keyword("done")) {
      ++pos_;
      return Done{};
    }
    if (at_keyword("goto")) {
      ++pos_;
      return Goto{Label{name("goto target label")}};
    }
    if (at_keyword("if")) {
      ++pos_;
      BExp c = bexp();
      if (!at_keyword("then")) fail("expected 'then'");
      ++pos_;
      return If{std::move(c), Label{name("branch target label")}};
    }
    std::string v = name("command");
    expect(Tok::assign, "':='");
    return Assign{std::move(v), aexp()};
  }

  AExp aexp() {
    AExp e = term();
    while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
      const auto k = peek().kind == Tok::plus ? AExp::Kind::add : AExp::Kind::sub;
      ++pos_;
      e = AExp::binary(k, std::move(e), term());
    }
    return e;
  }

  AExp term() {
    AExp e = atom();
    while (peek().kind == Tok::star) {
      ++pos_;
      e = AExp::binary(AExp::Kind::mul, std::move(e), atom());
    }
    return e;
  }

  AExp atom() {
    const Token& t = peek();
    if (t.kind == Tok::minus) {
      ++pos_;
      if (peek().kind != Tok::integer) fail("expected integer after '-'");
      return AExp::lit(integer(true));
    }
    if (t.kind == Tok::integer) return AExp::lit(integer(false));
    if (t.kind == Tok::lparen) {
      ++pos_;
      AExp e = aexp();
      expect(Tok::rparen, "')'");
      return e;
    }
    return AExp::var(name("arithmetic expression"));
  }

  Value integer(bool negative) {
    const Token& t = peek();
    constexpr auto kMax = static_cast<unsigned long long>(std::numeric_limits<Value>::max());
    unsigned long long v = 0;
    for (char c : t.text) {
      const unsigned d = static_cast<unsigned>(c - '0');
      if (v > (kMax + 1 - d) / 10) syntax_error("integer literal out of range", t.line, t.column);
      v = v * 10 + d;
    }
    if (!negative && v > kMax) syntax_error("integer literal out of range", t.line, t.column);
    ++pos_;
    return negative ? static_cast<Value>(0ULL - v) : static_cast<Value>(v);
  }

  BExp bexp() {
    BExp b = conj();
    while (at_keyword("or")) {
      ++pos_;
      b = BExp::disj(std::move(b), conj());
    }
    return b;
  }

  BExp conj() {
    BExp b = neg();
    while (at_keyword("and")) {
      ++pos_;
      b = BExp::conj(std::move(b), neg());
    }
    return b;
  }

  BExp neg() {
    if (at_keyword("not")) {
      ++pos_;
      return BExp::negate(neg());
    }
    if (at_keyword("true") || at_keyword("false")) {
      const bool t = peek().text == "true";
      ++pos_;
      return BExp::constant(t);
    }
    if (peek().kind == Tok::lparen) {
      // '(' opens either a nested boolean or the left operand of a
      // comparison; try the boolean reading first and backtrack.
      const std::size_t saved = pos_;
      try {
        ++pos_;
        BExp inner = bexp();
        expect(Tok::rparen, "')'");
        return inner;
      } catch (const ProgramError&) {
        pos_ = saved;
      }
    }
    AExp lhs = aexp();
    if (peek().kind == Tok::eq) {
      ++pos_;
      return BExp::eq(std::move(lhs), aexp());
    }
    if (peek().kind == Tok::le) {
      ++pos_;
      return BExp::le(std::move(lhs), aexp());
    }
    fail("expected '=' or '<='");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

Program parse_program(std::string_view text) { return Program(Parser(tokenize(text)).program()); }

AExp parse_aexp(std::string_view text) { return Parser(tokenize(text)).whole_aexp(); }

BExp parse_bexp(std::string_view text) { return Parser(tokenize(text)).whole_bexp(); }

}  // namespace prophecy::core
