#include "metaabd/logic/parser.hpp"

#include <cctype>
#include <charconv>
#include <unordered_map>

#include "metaabd/logic/kb.hpp"

namespace metaabd::logic {
namespace {

enum class Tok { Atom, Var, Int, LParen, RParen, LBracket, RBracket, Bar, Comma, Neck, End, Eof };

struct Token {
  Tok kind;
  std::string text;
  std::int64_t value = 0;
  std::size_t line = 1;
  std::size_t column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_space();
    Token t;
    t.line = line_;
    t.column = col_;
    if (pos_ >= src_.size()) {
      t.kind = Tok::Eof;
      return t;
    }
    const char c = src_[pos_];
    if (std::islower(static_cast<unsigned char>(c))) {
      t.kind = Tok::Atom;
      t.text = take_word();
      return t;
    }
    if (std::isupper(static_cast<unsigned char>(c)) || c == '_') {
      t.kind = Tok::Var;
      t.text = take_word();
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      t.kind = Tok::Int;
      const std::size_t start = pos_;
      advance();
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
      const std::string_view digits = src_.substr(start, pos_ - start);
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), t.value);
      if (ec != std::errc() || ptr != digits.data() + digits.size()) {
        throw ParseError("integer literal out of range", t.line, t.column);
      }
      t.text = std::string(digits);
      return t;
    }
    if (c == '\'') {
      t.kind = Tok::Atom;
      t.text = take_quoted(t);
      return t;
    }
    if (c == ':' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '-') {
      advance();
      advance();
      t.kind = Tok::Neck;
      return t;
    }
    advance();
    switch (c) {
      case '(': t.kind = Tok::LParen; break;
      case ')': t.kind = Tok::RParen; break;
      case '[': t.kind = Tok::LBracket; break;
      case ']': t.kind = Tok::RBracket; break;
      case '|': t.kind = Tok::Bar; break;
      case ',': t.kind = Tok::Comma; break;
      case '.': t.kind = Tok::End; break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", t.line, t.column);
    }
    return t;
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '%') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  std::string take_word() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
      advance();
    }
    return std::string(src_.substr(start, pos_ - start));
  }

  std::string take_quoted(const Token& at) {
    advance();  // opening quote
    std::string out;
    while (true) {
      if (pos_ >= src_.size()) throw ParseError("unterminated quoted atom", at.line, at.column);
      char c = src_[pos_];
      if (c == '\'') {
        advance();
        return out;
      }
      if (c == '\\') {
        advance();
        if (pos_ >= src_.size()) throw ParseError("unterminated quoted atom", at.line, at.column);
        c = src_[pos_];
      }
      out += c;
      advance();
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : lexer_(src) { shift(); }

  std::vector<Clause> clauses() {
    std::vector<Clause> out;
    while (cur_.kind != Tok::Eof) {
      vars_.clear();
      out.push_back(clause());
    }
    return out;
  }

  Term single_term() {
    Term t = term();
    if (cur_.kind == Tok::End) shift();
    expect(Tok::Eof, "end of input");
    return t;
  }

 private:
  void shift() { cur_ = lexer_.next(); }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what, cur_.line, cur_.column);
  }

  void expect(Tok kind, const char* what) {
    if (cur_.kind != kind) fail(std::string("expected ") + what);
    shift();
  }

  Clause clause() {
    Clause c;
    c.head = callable(term(), "clause head");
    if (cur_.kind == Tok::Neck) {
      shift();
      c.body.push_back(callable(term(), "body goal"));
      while (cur_.kind == Tok::Comma) {
        shift();
        c.body.push_back(callable(term(), "body goal"));
      }
    }
    expect(Tok::End, "'.' at end of clause");
    return c;
  }

  Atom callable(const Term& t, const char* where) const {
    if (t.is_sym() || (t.is_compound() && !t.is_nil() && !t.is_cons())) return Atom::from_term(t);
    throw ParseError(std::string(where) + " is not callable: " + to_string(t), last_line_, last_col_);
  }

  Term term() {
    last_line_ = cur_.line;
    last_col_ = cur_.column;
    switch (cur_.kind) {
      case Tok::Var: {
        std::string name = cur_.text;
        shift();
        if (name == "_") return Term::fresh_var();
        auto [it, inserted] = vars_.try_emplace(name);
        if (inserted) it->second = Term::fresh_var();
        return it->second;
      }
      case Tok::Int: {
        const auto v = cur_.value;
        shift();
        return Term::integer(v);
      }
      case Tok::Atom: {
        std::string name = cur_.text;
        shift();
        if (cur_.kind != Tok::LParen) return Term::sym(name);
        shift();
        std::vector<Term> args;
        args.push_back(term());
        while (cur_.kind == Tok::Comma) {
          shift();
          args.push_back(term());
        }
        expect(Tok::RParen, "')'");
        return Term::compound(name, std::move(args));
      }
      case Tok::LBracket:
        return list();
      case Tok::LParen: {
        shift();
        Term t = term();
        expect(Tok::RParen, "')'");
        return t;
      }
      default:
        fail("expected a term");
    }
  }

  Term list() {
    shift();  // [
    if (cur_.kind == Tok::RBracket) {
      shift();
      return Term::nil();
    }
    std::vector<Term> items;
    items.push_back(term());
    while (cur_.kind == Tok::Comma) {
      shift();
      items.push_back(term());
    }
    Term tail = Term::nil();
    if (cur_.kind == Tok::Bar) {
      shift();
      tail = term();
    }
    expect(Tok::RBracket, "']'");
    return Term::list(items, tail);
  }

  Lexer lexer_;
  Token cur_;
  std::size_t last_line_ = 1;
  std::size_t last_col_ = 1;
  std::unordered_map<std::string, Term> vars_;
};

}  // namespace

ParseError::ParseError(const std::string& message, std::size_t line, std::size_t column)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

std::vector<Clause> parse_clauses(std::string_view text) { return Parser(text).clauses(); }

Term parse_term(std::string_view text) { return Parser(text).single_term(); }

KnowledgeBase parse_program(std::string_view text) {
  KnowledgeBase kb = KnowledgeBase::with_standard_builtins();
  for (Clause& c : parse_clauses(text)) kb.add_clause(std::move(c));
  return kb;
}

}  // namespace metaabd::logic
