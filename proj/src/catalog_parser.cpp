// Line-oriented rule DSL:
//
//   predicate NAME : category(key=Value, ...)
//   constraint ID allow {Action, ...} severity N says "text"
//   rule ID: PRED & PRED ... => CONSTRAINT [says "cause"]
//   temporal ID (w=REAL): BODY & BODY ... => CONSTRAINT [says "cause"]
//     BODY := [!]CONSTRAINT@-LAG | count(CONSTRAINT >= M in last L)
//
// `#` starts a comment outside string literals.

#include <cctype>
#include <charconv>
#include <cstdlib>

#include "guardad/catalog.hpp"
#include "guardad/error.hpp"

namespace guardad {
namespace {

enum class Tok { Ident, Number, String, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::size_t column = 0;  // 1-based
};

class LineLexer {
 public:
  LineLexer(std::string_view line, std::size_t line_no) : line_(line), line_no_(line_no) { advance(); }

  const Token& peek() const { return current_; }

  Token next() {
    Token t = current_;
    advance();
    return t;
  }

  [[noreturn]] void fail(const Token& at, const std::string& why) const {
    throw ParseError(line_no_, at.column, why);
  }

  bool at_punct(std::string_view p) const { return current_.kind == Tok::Punct && current_.text == p; }
  bool at_word(std::string_view w) const { return current_.kind == Tok::Ident && current_.text == w; }

  void expect_punct(std::string_view p) {
    if (!at_punct(p)) fail(current_, "expected '" + std::string(p) + "'" + found());
    advance();
  }
  void expect_word(std::string_view w) {
    if (!at_word(w)) fail(current_, "expected '" + std::string(w) + "'" + found());
    advance();
  }
  Token expect(Tok kind, const char* what) {
    if (current_.kind != kind) fail(current_, std::string("expected ") + what + found());
    return next();
  }
  void expect_end() {
    if (current_.kind != Tok::End) fail(current_, "unexpected trailing input" + found());
  }

 private:
  std::string found() const {
    return current_.kind == Tok::End ? ", found end of line" : ", found '" + current_.text + "'";
  }

  void advance() {
    while (pos_ < line_.size() && std::isspace(static_cast<unsigned char>(line_[pos_]))) ++pos_;
    current_ = Token{};
    current_.column = pos_ + 1;
    if (pos_ >= line_.size() || line_[pos_] == '#') {
      current_.kind = Tok::End;
      return;
    }
    const char c = line_[pos_];
    auto digit_at = [&](std::size_t i) {
      return i < line_.size() && std::isdigit(static_cast<unsigned char>(line_[i]));
    };
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < line_.size() &&
             (std::isalnum(static_cast<unsigned char>(line_[pos_])) || line_[pos_] == '_')) {
        ++pos_;
      }
      current_.kind = Tok::Ident;
      current_.text = std::string(line_.substr(start, pos_ - start));
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               ((c == '-' || c == '+' || c == '.') && digit_at(pos_ + 1))) {
      std::size_t start = pos_++;
      while (pos_ < line_.size()) {
        const char d = line_[pos_];
        if (std::isdigit(static_cast<unsigned char>(d)) || d == '.') {
          ++pos_;
        } else if ((d == 'e' || d == 'E') && pos_ + 1 < line_.size()) {
          ++pos_;
          if (line_[pos_] == '-' || line_[pos_] == '+') ++pos_;
        } else {
          break;
        }
      }
      current_.kind = Tok::Number;
      current_.text = std::string(line_.substr(start, pos_ - start));
    } else if (c == '"') {
      ++pos_;
      std::string value;
      bool closed = false;
      while (pos_ < line_.size()) {
        char d = line_[pos_++];
        if (d == '\\' && pos_ < line_.size()) {
          value += line_[pos_++];
        } else if (d == '"') {
          closed = true;
          break;
        } else {
          value += d;
        }
      }
      if (!closed) throw ParseError(line_no_, current_.column, "unterminated string literal");
      current_.kind = Tok::String;
      current_.text = std::move(value);
    } else {
      static constexpr std::string_view two[] = {"=>", ">="};
      for (auto p : two) {
        if (line_.substr(pos_, 2) == p) {
          current_.kind = Tok::Punct;
          current_.text = std::string(p);
          pos_ += 2;
          return;
        }
      }
      static constexpr std::string_view singles = ":(){},=&@-!";
      if (singles.find(c) == std::string_view::npos) {
        throw ParseError(line_no_, current_.column, std::string("unexpected character '") + c + "'");
      }
      current_.kind = Tok::Punct;
      current_.text = std::string(1, c);
      ++pos_;
    }
  }

  std::string_view line_;
  std::size_t line_no_;
  std::size_t pos_ = 0;
  Token current_;
};

template <class E>
E enum_token(LineLexer& lex, const char* what) {
  Token t = lex.expect(Tok::Ident, what);
  auto v = enum_from<E>(t.text);
  if (!v) lex.fail(t, std::string("unknown ") + what + " '" + t.text + "'");
  return *v;
}

int integer_token(LineLexer& lex, const char* what) {
  Token t = lex.expect(Tok::Number, what);
  int value = 0;
  auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
  if (ec != std::errc{} || ptr != t.text.data() + t.text.size()) {
    lex.fail(t, std::string("expected integer ") + what);
  }
  return value;
}

double real_token(LineLexer& lex, const char* what) {
  Token t = lex.expect(Tok::Number, what);
  char* end = nullptr;
  double value = std::strtod(t.text.c_str(), &end);
  if (end != t.text.c_str() + t.text.size()) lex.fail(t, std::string("expected number ") + what);
  return value;
}

PredicateDef parse_predicate(LineLexer& lex) {
  PredicateDef def;
  def.name = lex.expect(Tok::Ident, "predicate name").text;
  lex.expect_punct(":");
  def.category = enum_token<PredicateCategory>(lex, "predicate category");
  lex.expect_punct("(");
  PredicateSelector& s = def.selector;
  // action(Decelerate) shorthand
  if (def.category == PredicateCategory::Action && lex.peek().kind == Tok::Ident &&
      lex.peek().text != "action") {
    s.action = enum_token<Action>(lex, "action");
    lex.expect_punct(")");
    return def;
  }
  bool first = true;
  while (!lex.at_punct(")")) {
    if (!first) lex.expect_punct(",");
    first = false;
    Token key = lex.expect(Tok::Ident, "selector key");
    lex.expect_punct("=");
    auto set_once = [&](auto& slot, auto value) {
      if (slot) lex.fail(key, "selector key '" + key.text + "' given twice");
      slot = value;
    };
    if (key.text == "action") set_once(s.action, enum_token<Action>(lex, "action"));
    else if (key.text == "kind") set_once(s.kind, enum_token<EntityKind>(lex, "kind"));
    else if (key.text == "region") set_once(s.region, enum_token<Region>(lex, "region"));
    else if (key.text == "trend") set_once(s.trend, enum_token<MotionTrend>(lex, "trend"));
    else if (key.text == "signal") set_once(s.signal, enum_token<SignalState>(lex, "signal"));
    else if (key.text == "sign") set_once(s.sign, enum_token<SignType>(lex, "sign"));
    else lex.fail(key, "unknown selector key '" + key.text + "'");
  }
  lex.expect_punct(")");
  return def;
}

Constraint parse_constraint(LineLexer& lex) {
  Constraint c;
  c.id = lex.expect(Tok::Ident, "constraint id").text;
  lex.expect_word("allow");
  lex.expect_punct("{");
  bool first = true;
  while (!lex.at_punct("}")) {
    if (!first) lex.expect_punct(",");
    first = false;
    c.allowed.insert(enum_token<Action>(lex, "action"));
  }
  lex.expect_punct("}");
  lex.expect_word("severity");
  c.severity = integer_token(lex, "severity");
  lex.expect_word("says");
  c.says = lex.expect(Tok::String, "string literal").text;
  return c;
}

std::string optional_says(LineLexer& lex) {
  if (!lex.at_word("says")) return {};
  lex.next();
  return lex.expect(Tok::String, "string literal").text;
}

HornRule parse_rule(LineLexer& lex) {
  HornRule r;
  r.id = lex.expect(Tok::Ident, "rule id").text;
  lex.expect_punct(":");
  r.antecedent.push_back(lex.expect(Tok::Ident, "predicate name").text);
  while (lex.at_punct("&")) {
    lex.next();
    r.antecedent.push_back(lex.expect(Tok::Ident, "predicate name").text);
  }
  lex.expect_punct("=>");
  r.consequent = lex.expect(Tok::Ident, "constraint id").text;
  r.says = optional_says(lex);
  return r;
}

BodyAtom parse_body_atom(LineLexer& lex) {
  if (lex.at_word("count")) {
    lex.next();
    CountAtLeast c;
    lex.expect_punct("(");
    c.constraint = lex.expect(Tok::Ident, "constraint id").text;
    lex.expect_punct(">=");
    c.at_least = integer_token(lex, "count threshold");
    lex.expect_word("in");
    lex.expect_word("last");
    c.last = integer_token(lex, "window length");
    lex.expect_punct(")");
    return c;
  }
  AtOffset a;
  if (lex.at_punct("!")) {
    lex.next();
    a.positive = false;
  }
  a.constraint = lex.expect(Tok::Ident, "constraint id").text;
  lex.expect_punct("@");
  const Token off = lex.peek();
  int offset = integer_token(lex, "offset");
  if (offset >= 0) lex.fail(off, "offset must be negative (e.g. @-1)");
  a.lag = -offset;
  return a;
}

TemporalRule parse_temporal(LineLexer& lex) {
  TemporalRule r;
  r.id = lex.expect(Tok::Ident, "rule id").text;
  lex.expect_punct("(");
  lex.expect_word("w");
  lex.expect_punct("=");
  r.weight = real_token(lex, "weight");
  lex.expect_punct(")");
  lex.expect_punct(":");
  r.body.push_back(parse_body_atom(lex));
  while (lex.at_punct("&")) {
    lex.next();
    r.body.push_back(parse_body_atom(lex));
  }
  lex.expect_punct("=>");
  r.head = lex.expect(Tok::Ident, "constraint id").text;
  r.says = optional_says(lex);
  return r;
}

}  // namespace

RuleCatalog parse_catalog(std::string_view text) {
  std::vector<PredicateDef> predicates;
  std::vector<Constraint> constraints;
  std::vector<HornRule> rules;
  std::vector<TemporalRule> temporal;

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    start = end + 1;

    LineLexer lex(line, line_no);
    if (lex.peek().kind == Tok::End) {
      if (end == text.size()) break;
      continue;
    }
    Token keyword = lex.expect(Tok::Ident, "declaration keyword");
    if (keyword.text == "predicate") predicates.push_back(parse_predicate(lex));
    else if (keyword.text == "constraint") constraints.push_back(parse_constraint(lex));
    else if (keyword.text == "rule") rules.push_back(parse_rule(lex));
    else if (keyword.text == "temporal") temporal.push_back(parse_temporal(lex));
    else lex.fail(keyword, "unknown declaration '" + keyword.text + "'");
    lex.expect_end();
    if (end == text.size()) break;
  }
  return RuleCatalog(std::move(predicates), std::move(constraints), std::move(rules), std::move(temporal));
}

}  // namespace guardad
