#include "hare/parser.hpp"

#include <cctype>
#include <charconv>
#include <map>
#include <optional>
#include <set>

namespace hare {

std::string ParseError::to_string() const {
  std::string s = std::to_string(line) + ":" + std::to_string(column) + ": " + message;
  if (!token.empty()) s += " (at '" + token + "')";
  return s;
}

namespace {

enum class Tok {
  Ident, Number,
  LBrace, RBrace, LParen, RParen, LBracket, RBracket,
  Comma, Semi, Colon, Assign, Arrow,
  Le, Lt, Ge, Gt, EqEq,
  Plus, Minus, Star, Slash, Caret,
  End
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double number = 0.0;
  int line = 1;
  int col = 1;
};

// Thrown internally and converted to the ParseError return value; never
// escapes parse_model.
struct ParseAbort {
  ParseError err;
};

[[noreturn]] void fail(const Token& at, const std::string& message) {
  throw ParseAbort{ParseError{at.line, at.col, message, at.text}};
}

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) {}

  Token next() {
    skip_ws();
    Token t;
    t.line = line_;
    t.col = col_;
    if (pos_ >= text_.size()) return t;

    const char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        advance();
      t.kind = Tok::Ident;
      t.text = text_.substr(start, pos_ - start);
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
        advance();
      if (pos_ < text_.size() && text_[pos_] == '.') {
        advance();
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
          advance();
      }
      if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
        size_t mark = pos_;
        advance();
        if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) advance();
        if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
          while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
            advance();
        } else {
          rewind_to(mark);
        }
      }
      t.kind = Tok::Number;
      t.text = text_.substr(start, pos_ - start);
      auto r = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
      if (r.ec != std::errc()) fail(t, "malformed number literal");
      return t;
    }

    auto two = [&](char second, Tok yes, Tok no) {
      advance();
      if (pos_ < text_.size() && text_[pos_] == second) {
        advance();
        t.kind = yes;
      } else {
        t.kind = no;
      }
    };

    t.text = std::string(1, c);
    switch (c) {
      case '{': t.kind = Tok::LBrace; advance(); break;
      case '}': t.kind = Tok::RBrace; advance(); break;
      case '(': t.kind = Tok::LParen; advance(); break;
      case ')': t.kind = Tok::RParen; advance(); break;
      case '[': t.kind = Tok::LBracket; advance(); break;
      case ']': t.kind = Tok::RBracket; advance(); break;
      case ',': t.kind = Tok::Comma; advance(); break;
      case ';': t.kind = Tok::Semi; advance(); break;
      case '+': t.kind = Tok::Plus; advance(); break;
      case '*': t.kind = Tok::Star; advance(); break;
      case '/': t.kind = Tok::Slash; advance(); break;
      case '^': t.kind = Tok::Caret; advance(); break;
      case ':': two('=', Tok::Assign, Tok::Colon); break;
      case '<': two('=', Tok::Le, Tok::Lt); break;
      case '>': two('=', Tok::Ge, Tok::Gt); break;
      case '-':
        advance();
        if (pos_ < text_.size() && text_[pos_] == '>') {
          advance();
          t.kind = Tok::Arrow;
          t.text = "->";
        } else {
          t.kind = Tok::Minus;
        }
        break;
      case '=':
        advance();
        if (pos_ < text_.size() && text_[pos_] == '=') {
          advance();
          t.kind = Tok::EqEq;
          t.text = "==";
        } else {
          t.kind = Tok::EqEq;  // single '=' accepted as equality
        }
        break;
      default:
        fail(t, "unexpected character");
    }
    if (t.kind == Tok::Le) t.text = "<=";
    if (t.kind == Tok::Ge) t.text = ">=";
    if (t.kind == Tok::Assign) t.text = ":=";
    return t;
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void rewind_to(size_t mark) {
    // Only used within a single line (exponent backtrack).
    col_ -= static_cast<int>(pos_ - mark);
    pos_ = mark;
  }

  void skip_ws() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  const std::string& text_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

struct PendingTransition {
  std::string source, target;
  Token source_tok, target_tok;
  std::vector<LinearConstraint> guard;
  std::vector<Reset> resets;
};

class Parser {
 public:
  explicit Parser(const std::string& text) : lexer_(text) { bump(); }

  HybridAutomaton run() {
    while (cur_.kind != Tok::End) statement();
    return finish();
  }

 private:
  void bump() {
    cur_ = lexer_.next();
  }

  bool at_ident(const char* kw) const { return cur_.kind == Tok::Ident && cur_.text == kw; }

  Token expect(Tok kind, const std::string& what) {
    if (cur_.kind != kind) fail(cur_, "expected " + what);
    Token t = cur_;
    bump();
    return t;
  }

  Token expect_ident(const std::string& what) { return expect(Tok::Ident, what); }

  void expect_keyword(const char* kw) {
    if (!at_ident(kw)) fail(cur_, std::string("expected '") + kw + "'");
    bump();
  }

  // ---- statements ----

  void statement() {
    if (at_ident("automaton")) {
      bump();
      Token name = expect_ident("automaton name");
      if (!model_.name.empty()) fail(name, "duplicate 'automaton' declaration");
      model_.name = name.text;
      return;
    }
    if (at_ident("var")) {
      bump();
      var_statement();
      return;
    }
    if (at_ident("location")) {
      bump();
      location_statement();
      return;
    }
    if (at_ident("init")) {
      bump();
      Token name = expect_ident("initial location name");
      if (!init_name_.empty()) fail(name, "duplicate 'init' declaration");
      init_name_ = name.text;
      init_tok_ = name;
      expect(Tok::Semi, "';'");
      return;
    }
    if (at_ident("bad")) {
      bump();
      expect(Tok::Colon, "':'");
      for (;;) {
        Token name = expect_ident("bad location name");
        bad_names_.push_back({name.text, name});
        if (cur_.kind != Tok::Comma) break;
        bump();
      }
      expect(Tok::Semi, "';'");
      return;
    }
    if (at_ident("transition")) {
      bump();
      transition_statement();
      return;
    }
    fail(cur_, "expected a declaration (automaton, var, location, init, bad, transition)");
  }

  void var_statement() {
    for (;;) {
      Token name = expect_ident("variable name");
      if (model_.var_index(name.text) >= 0)
        fail(name, "duplicate variable '" + name.text + "'");
      expect_keyword("in");
      expect(Tok::LBracket, "'['");
      const double lo = signed_number();
      expect(Tok::Comma, "','");
      const double hi = signed_number();
      Token close = expect(Tok::RBracket, "']'");
      if (lo > hi) fail(close, "variable range has lo > hi");
      model_.vars.push_back({name.text, Interval(lo, hi)});
      if (cur_.kind != Tok::Comma) break;
      bump();
    }
    expect(Tok::Semi, "';'");
  }

  double signed_number() {
    bool negate = false;
    while (cur_.kind == Tok::Minus || cur_.kind == Tok::Plus) {
      if (cur_.kind == Tok::Minus) negate = !negate;
      bump();
    }
    Token n = expect(Tok::Number, "number");
    return negate ? -n.number : n.number;
  }

  void location_statement() {
    Token name = expect_ident("location name");
    if (model_.location_index(name.text) >= 0)
      fail(name, "duplicate location '" + name.text + "'");
    Location loc;
    loc.name = name.text;
    expect(Tok::LBrace, "'{'");
    bool saw_flow = false;
    bool saw_invariant = false;
    while (cur_.kind != Tok::RBrace) {
      if (at_ident("invariant")) {
        if (saw_invariant) fail(cur_, "duplicate 'invariant:' section");
        saw_invariant = true;
        bump();
        expect(Tok::Colon, "':'");
        if (cur_.kind != Tok::Semi) loc.invariant = constraint_list();
        expect(Tok::Semi, "';'");
      } else if (at_ident("flow")) {
        if (saw_flow) fail(cur_, "duplicate 'flow:' section");
        saw_flow = true;
        bump();
        expect(Tok::Colon, "':'");
        loc.flows.assign(model_.vars.size(), Flow{});
        flow_defined_.assign(model_.vars.size(), false);
        while (cur_.kind == Tok::Ident && !at_ident("invariant") && !at_ident("flow"))
          flow_item(loc, name);
      } else {
        fail(cur_, "expected 'invariant:' or 'flow:'");
      }
    }
    expect(Tok::RBrace, "'}'");
    if (saw_flow) {
      for (size_t i = 0; i < flow_defined_.size(); ++i)
        if (!flow_defined_[i])
          fail(name, "flow missing for " + model_.vars[i].name + " in '" + loc.name + "'");
    }
    loc_tokens_.push_back(name);
    model_.locations.push_back(std::move(loc));
  }

  void flow_item(Location& loc, const Token& loc_tok) {
    Token d = expect_ident("flow definition (d<var> = expr or d<var> in [a, b])");
    if (d.text.size() < 2 || d.text[0] != 'd')
      fail(d, "flow definitions start with 'd' followed by a variable name");
    const std::string var_name = d.text.substr(1);
    const int var = model_.var_index(var_name);
    if (var < 0) fail(d, "unknown variable '" + var_name + "' in flow");
    if (flow_defined_[static_cast<size_t>(var)])
      fail(d, "duplicate flow for " + var_name + " in '" + loc_tok.text + "'");
    if (at_ident("in")) {
      bump();
      expect(Tok::LBracket, "'['");
      const double lo = signed_number();
      expect(Tok::Comma, "','");
      const double hi = signed_number();
      Token close = expect(Tok::RBracket, "']'");
      if (lo > hi) fail(close, "rate interval has lo > hi");
      loc.flows[static_cast<size_t>(var)] = Interval(lo, hi);
    } else {
      expect(Tok::EqEq, "'=' or 'in'");
      loc.flows[static_cast<size_t>(var)] = parse_expr(0);
    }
    flow_defined_[static_cast<size_t>(var)] = true;
    expect(Tok::Semi, "';'");
  }

  void transition_statement() {
    PendingTransition t;
    t.source_tok = expect_ident("source location");
    t.source = t.source_tok.text;
    expect(Tok::Arrow, "'->'");
    t.target_tok = expect_ident("target location");
    t.target = t.target_tok.text;
    expect(Tok::LBrace, "'{'");
    while (cur_.kind != Tok::RBrace) {
      if (at_ident("guard")) {
        bump();
        expect(Tok::Colon, "':'");
        if (cur_.kind != Tok::Semi) t.guard = constraint_list();
        expect(Tok::Semi, "';'");
      } else if (at_ident("reset")) {
        bump();
        expect(Tok::Colon, "':'");
        std::set<int> seen;
        for (;;) {
          Token v = expect_ident("variable name");
          const int var = model_.var_index(v.text);
          if (var < 0) fail(v, "unknown variable '" + v.text + "' in reset");
          if (!seen.insert(var).second) fail(v, "variable '" + v.text + "' reset twice");
          expect(Tok::Assign, "':='");
          const double value = signed_number();
          t.resets.push_back({var, value});
          if (cur_.kind != Tok::Comma) break;
          bump();
        }
        expect(Tok::Semi, "';'");
      } else {
        fail(cur_, "expected 'guard:' or 'reset:'");
      }
    }
    expect(Tok::RBrace, "'}'");
    pending_transitions_.push_back(std::move(t));
  }

  // ---- expressions ----
  // Precedence: + - < * / < ^ < unary minus < atoms. Unary minus binds
  // tighter than '^', so -x^2 parses as (-x)^2.

  Expr parse_expr(int depth) {
    if (depth > 200) fail(cur_, "expression nested too deeply");
    Expr lhs = parse_term(depth + 1);
    while (cur_.kind == Tok::Plus || cur_.kind == Tok::Minus) {
      const bool plus = cur_.kind == Tok::Plus;
      bump();
      Expr rhs = parse_term(depth + 1);
      lhs = plus ? Expr::add(lhs, rhs) : Expr::sub(lhs, rhs);
    }
    return lhs;
  }

  Expr parse_term(int depth) {
    if (depth > 200) fail(cur_, "expression nested too deeply");
    Expr lhs = parse_power(depth + 1);
    while (cur_.kind == Tok::Star || cur_.kind == Tok::Slash) {
      const bool mul = cur_.kind == Tok::Star;
      bump();
      Expr rhs = parse_power(depth + 1);
      lhs = mul ? Expr::mul(lhs, rhs) : Expr::div(lhs, rhs);
    }
    return lhs;
  }

  Expr parse_power(int depth) {
    if (depth > 200) fail(cur_, "expression nested too deeply");
    Expr base = parse_unary(depth + 1);
    while (cur_.kind == Tok::Caret) {
      bump();
      bool negate = false;
      while (cur_.kind == Tok::Minus) {
        negate = !negate;
        bump();
      }
      Token e = expect(Tok::Number, "integer exponent");
      const double whole = e.number;
      if (whole != static_cast<double>(static_cast<int>(whole)))
        fail(e, "exponent must be an integer");
      int exponent = static_cast<int>(whole);
      if (negate) exponent = -exponent;
      base = Expr::pow(base, exponent);
    }
    return base;
  }

  Expr parse_unary(int depth) {
    if (depth > 200) fail(cur_, "expression nested too deeply");
    if (cur_.kind == Tok::Minus) {
      bump();
      return Expr::neg(parse_unary(depth + 1));
    }
    if (cur_.kind == Tok::Plus) {
      bump();
      return parse_unary(depth + 1);
    }
    return parse_primary(depth + 1);
  }

  Expr parse_primary(int depth) {
    if (cur_.kind == Tok::Number) {
      Expr e = Expr::constant(cur_.number);
      bump();
      return e;
    }
    if (cur_.kind == Tok::LParen) {
      bump();
      Expr e = parse_expr(depth + 1);
      expect(Tok::RParen, "')'");
      return e;
    }
    if (cur_.kind == Tok::Ident) {
      Token id = cur_;
      bump();
      if (id.text == "sin" || id.text == "cos" || id.text == "exp") {
        expect(Tok::LParen, "'('");
        Expr arg = parse_expr(depth + 1);
        expect(Tok::RParen, "')'");
        if (id.text == "sin") return Expr::sin(arg);
        if (id.text == "cos") return Expr::cos(arg);
        return Expr::exp(arg);
      }
      const int var = model_.var_index(id.text);
      if (var < 0) fail(id, "unknown variable '" + id.text + "'");
      return Expr::variable(var);
    }
    fail(cur_, "expected an expression");
  }

  // ---- linear constraints ----

  struct Affine {
    std::map<int, double> coeffs;
    double constant = 0.0;

    bool is_constant() const { return coeffs.empty(); }
  };

  Affine linearize(const Expr::Node& n, const Token& at) {
    switch (n.kind) {
      case Expr::Kind::Constant:
        return Affine{{}, n.value};
      case Expr::Kind::Variable: {
        Affine a;
        a.coeffs[n.var] = 1.0;
        return a;
      }
      case Expr::Kind::Add: {
        Affine a = linearize(*n.a, at), b = linearize(*n.b, at);
        for (const auto& [v, c] : b.coeffs) a.coeffs[v] += c;
        a.constant += b.constant;
        return a;
      }
      case Expr::Kind::Sub: {
        Affine a = linearize(*n.a, at), b = linearize(*n.b, at);
        for (const auto& [v, c] : b.coeffs) a.coeffs[v] -= c;
        a.constant -= b.constant;
        return a;
      }
      case Expr::Kind::Neg: {
        Affine a = linearize(*n.a, at);
        for (auto& [v, c] : a.coeffs) c = -c;
        a.constant = -a.constant;
        return a;
      }
      case Expr::Kind::Mul: {
        Affine a = linearize(*n.a, at), b = linearize(*n.b, at);
        if (!a.is_constant() && !b.is_constant())
          fail(at, "nonlinear term in constraint");
        if (a.is_constant()) std::swap(a, b);
        for (auto& [v, c] : a.coeffs) c *= b.constant;
        a.constant *= b.constant;
        return a;
      }
      case Expr::Kind::Div: {
        Affine a = linearize(*n.a, at), b = linearize(*n.b, at);
        if (!b.is_constant()) fail(at, "nonlinear term in constraint");
        if (b.constant == 0.0) fail(at, "division by zero in constraint");
        for (auto& [v, c] : a.coeffs) c /= b.constant;
        a.constant /= b.constant;
        return a;
      }
      default:
        fail(at, "nonlinear term in constraint");
    }
  }

  std::vector<LinearConstraint> constraint_list() {
    std::vector<LinearConstraint> out;
    for (;;) {
      out.push_back(constraint());
      if (cur_.kind != Tok::Comma) break;
      bump();
    }
    return out;
  }

  static bool is_relop(Tok k) {
    return k == Tok::Le || k == Tok::Lt || k == Tok::Ge || k == Tok::Gt || k == Tok::EqEq;
  }

  LinearConstraint constraint() {
    Token start = cur_;
    Affine first = linearize(parse_expr(0).node(), start);
    if (!is_relop(cur_.kind)) fail(cur_, "expected a comparison operator");
    Tok op1 = cur_.kind;
    bump();
    Token mid_tok = cur_;
    Affine second = linearize(parse_expr(0).node(), mid_tok);

    if (is_relop(cur_.kind)) {
      // chained form: bound op expr op bound
      Tok op2 = cur_.kind;
      if (op1 == Tok::EqEq || op2 == Tok::EqEq) fail(cur_, "'==' cannot be chained");
      const bool fwd1 = op1 == Tok::Le || op1 == Tok::Lt;
      const bool fwd2 = op2 == Tok::Le || op2 == Tok::Lt;
      if (fwd1 != fwd2) fail(cur_, "chained comparison must point the same way");
      bump();
      Token last_tok = cur_;
      Affine third = linearize(parse_expr(0).node(), last_tok);
      if (!first.is_constant() || !third.is_constant())
        fail(start, "bounds of a chained comparison must be constant");
      LinearConstraint c = body_to_constraint(second, mid_tok);
      if (fwd1) {
        c.lower = first.constant - second.constant;
        c.upper = third.constant - second.constant;
        c.strict_lower = op1 == Tok::Lt;
        c.strict_upper = op2 == Tok::Lt;
      } else {
        c.upper = first.constant - second.constant;
        c.lower = third.constant - second.constant;
        c.strict_upper = op1 == Tok::Gt;
        c.strict_lower = op2 == Tok::Gt;
      }
      if (c.lower > c.upper) fail(start, "constraint bounds cross (lower > upper)");
      return c;
    }

    // single comparison: move everything to the left side
    Affine diff = first;
    for (const auto& [v, co] : second.coeffs) diff.coeffs[v] -= co;
    diff.constant -= second.constant;
    LinearConstraint c = body_to_constraint(diff, start);
    const double bound = -diff.constant;
    switch (op1) {
      case Tok::Le: c.upper = bound; break;
      case Tok::Lt: c.upper = bound; c.strict_upper = true; break;
      case Tok::Ge: c.lower = bound; break;
      case Tok::Gt: c.lower = bound; c.strict_lower = true; break;
      case Tok::EqEq: c.lower = c.upper = bound; break;
      default: break;
    }
    return c;
  }

  LinearConstraint body_to_constraint(const Affine& a, const Token& at) {
    LinearConstraint c;
    for (const auto& [v, co] : a.coeffs)
      if (co != 0.0) c.coeffs.push_back({v, co});
    if (c.coeffs.empty()) fail(at, "constraint has no variables");
    return c;
  }

  // ---- final assembly ----

  HybridAutomaton finish() {
    if (model_.name.empty())
      fail(cur_, "missing 'automaton <name>' declaration");
    if (init_name_.empty()) fail(cur_, "missing 'init <location>;' declaration");
    const int init = model_.location_index(init_name_);
    if (init < 0) fail(init_tok_, "unknown initial location '" + init_name_ + "'");
    model_.initial = init;
    model_.locations[static_cast<size_t>(init)].is_initial = true;

    for (const auto& [name, tok] : bad_names_) {
      const int li = model_.location_index(name);
      if (li < 0) fail(tok, "unknown bad location '" + name + "'");
      model_.locations[static_cast<size_t>(li)].is_bad = true;
    }

    for (auto& pt : pending_transitions_) {
      Transition t;
      t.source = model_.location_index(pt.source);
      if (t.source < 0) fail(pt.source_tok, "unknown location '" + pt.source + "'");
      t.target = model_.location_index(pt.target);
      if (t.target < 0) fail(pt.target_tok, "unknown location '" + pt.target + "'");
      if (t.target == model_.initial)
        fail(pt.target_tok, "transition into initial location");
      if (t.source == model_.initial && !pt.guard.empty())
        fail(pt.source_tok, "guard on a transition from the initial location");
      t.guard = std::move(pt.guard);
      t.resets = std::move(pt.resets);
      model_.transitions.push_back(std::move(t));
    }

    // Locations referenced as non-initial must define flows for every var.
    for (size_t li = 0; li < model_.locations.size(); ++li) {
      Location& loc = model_.locations[li];
      if (loc.is_initial) {
        if (!loc.flows.empty() || !loc.invariant.empty())
          fail(loc_tokens_[li], "initial location '" + loc.name +
                                    "' must have no invariant and no flows");
        continue;
      }
      if (loc.flows.size() != model_.vars.size()) {
        std::string missing;
        for (size_t vi = loc.flows.size(); vi < model_.vars.size(); ++vi) {
          if (!missing.empty()) missing += ", ";
          missing += model_.vars[vi].name;
        }
        fail(loc_tokens_[li], "flow missing for " + missing + " in '" + loc.name + "'");
      }
    }

    ValidationReport report = validate_automaton(model_);
    if (!report.ok()) {
      Token t;
      fail(t, "invalid model: " + report.summary());
    }
    return std::move(model_);
  }

  Lexer lexer_;
  Token cur_;
  HybridAutomaton model_;
  std::string init_name_;
  Token init_tok_;
  std::vector<std::pair<std::string, Token>> bad_names_;
  std::vector<PendingTransition> pending_transitions_;
  std::vector<Token> loc_tokens_;
  std::vector<bool> flow_defined_;
};

}  // namespace

ParseResult parse_model(const std::string& text) {
  try {
    Parser p(text);
    return p.run();
  } catch (const ParseAbort& abort) {
    return abort.err;
  }
}

}  // namespace hare
