#include "mltt/syntax.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <unordered_set>
#include <utility>

#include "mltt/error.hpp"
#include "mltt/subst.hpp"

namespace mltt {

struct Expr::Node {
  Kind kind;
  std::string name;
  std::size_t index = 0;
  std::vector<Expr> kids;
  std::size_t hash = 0;
};

namespace {

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

bool kind_keeps_name(Expr::Kind k) {
  return k == Expr::Kind::TypeApp || k == Expr::Kind::Const;
}

}  // namespace

namespace detail {

struct ExprFactory {
  static Expr make(Expr::Kind kind, std::string name, std::size_t index, std::vector<Expr> kids) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = kind;
    std::size_t h = static_cast<std::size_t>(kind) * 1315423911u;
    if (kind_keeps_name(kind)) h = mix(h, std::hash<std::string>{}(name));
    if (kind == Expr::Kind::Var) h = mix(h, index);
    for (const auto& k : kids) h = mix(h, k.hash());
    n->name = std::move(name);
    n->index = index;
    n->kids = std::move(kids);
    n->hash = h;
    return Expr::from_node(std::move(n));
  }
};

}  // namespace detail

Expr Expr::from_node(std::shared_ptr<const Node> n) { return Expr(std::move(n)); }

Expr::Expr() : Expr(unit()) {}

Expr Expr::type_app(std::string head, std::vector<Expr> args) {
  return detail::ExprFactory::make(Kind::TypeApp, std::move(head), 0, std::move(args));
}
Expr Expr::unit() {
  static const Expr u = detail::ExprFactory::make(Kind::Unit, {}, 0, {});
  return u;
}
Expr Expr::id(Expr lhs, Expr rhs) {
  return detail::ExprFactory::make(Kind::Id, {}, 0, {std::move(lhs), std::move(rhs)});
}
Expr Expr::sigma(std::string hint, Expr dom, Expr cod) {
  return detail::ExprFactory::make(Kind::Sigma, std::move(hint), 0, {std::move(dom), std::move(cod)});
}
Expr Expr::pi(std::string hint, Expr dom, Expr cod) {
  return detail::ExprFactory::make(Kind::Pi, std::move(hint), 0, {std::move(dom), std::move(cod)});
}
Expr Expr::constant(std::string name) {
  return detail::ExprFactory::make(Kind::Const, std::move(name), 0, {});
}
Expr Expr::var(std::size_t index, std::string hint) {
  return detail::ExprFactory::make(Kind::Var, std::move(hint), index, {});
}
Expr Expr::star() {
  static const Expr s = detail::ExprFactory::make(Kind::Star, {}, 0, {});
  return s;
}
Expr Expr::refl(Expr body) { return detail::ExprFactory::make(Kind::Refl, {}, 0, {std::move(body)}); }
Expr Expr::pair(Expr fst, Expr snd) {
  return detail::ExprFactory::make(Kind::Pair, {}, 0, {std::move(fst), std::move(snd)});
}
Expr Expr::proj1(Expr body) { return detail::ExprFactory::make(Kind::Proj1, {}, 0, {std::move(body)}); }
Expr Expr::proj2(Expr body) { return detail::ExprFactory::make(Kind::Proj2, {}, 0, {std::move(body)}); }
Expr Expr::lam(std::string hint, Expr dom, Expr body) {
  return detail::ExprFactory::make(Kind::Lam, std::move(hint), 0, {std::move(dom), std::move(body)});
}
Expr Expr::app(Expr fun, Expr arg) {
  return detail::ExprFactory::make(Kind::App, {}, 0, {std::move(fun), std::move(arg)});
}
Expr Expr::apps(Expr fun, std::span<const Expr> args) {
  for (const auto& a : args) fun = app(std::move(fun), a);
  return fun;
}

Expr::Kind Expr::kind() const { return node_->kind; }

bool Expr::is_type() const {
  switch (kind()) {
    case Kind::TypeApp: case Kind::Unit: case Kind::Id: case Kind::Sigma: case Kind::Pi:
      return true;
    default:
      return false;
  }
}

const std::string& Expr::name() const { return node_->name; }
std::size_t Expr::index() const { return node_->index; }
std::span<const Expr> Expr::children() const { return node_->kids; }

std::size_t Expr::binds_in(std::size_t i) const {
  switch (kind()) {
    case Kind::Sigma: case Kind::Pi: case Kind::Lam:
      return i == 1 ? 1 : 0;
    default:
      return 0;
  }
}

Expr Expr::with_children(std::vector<Expr> children) const {
  if (children.size() != node_->kids.size() && kind() != Kind::TypeApp)
    throw ValidationError("with_children: wrong number of children");
  return detail::ExprFactory::make(kind(), node_->name, node_->index, std::move(children));
}

std::size_t Expr::hash() const { return node_->hash; }

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  if (a.node_->hash != b.node_->hash || a.node_->kind != b.node_->kind) return false;
  if (kind_keeps_name(a.kind()) && a.name() != b.name()) return false;
  if (a.is(Expr::Kind::Var) && a.index() != b.index()) return false;
  const auto& ka = a.node_->kids;
  const auto& kb = b.node_->kids;
  if (ka.size() != kb.size()) return false;
  for (std::size_t i = 0; i < ka.size(); ++i)
    if (!(ka[i] == kb[i])) return false;
  return true;
}

// ---------------------------------------------------------------- Signature

void Signature::add_type(std::string name, Context args, SourcePos pos) {
  if (index_.contains(name)) throw ValidationError("duplicate declaration '" + name + "'");
  index_.emplace(name, decls_.size());
  decls_.push_back({Decl::Kind::Type, std::move(name), std::move(args), Expr::unit(), pos});
}

void Signature::add_term(std::string name, Expr type, SourcePos pos) {
  if (index_.contains(name)) throw ValidationError("duplicate declaration '" + name + "'");
  index_.emplace(name, decls_.size());
  decls_.push_back({Decl::Kind::Term, std::move(name), {}, std::move(type), pos});
}

void Signature::add_rewrite(const std::string& name) {
  auto i = find(name);
  if (!i || decls_[*i].kind != Decl::Kind::Term)
    throw ValidationError("rewrite '" + name + "' does not name a term constant");
  if (!is_rewrite(name)) rewrites_.push_back(name);
}

std::optional<std::size_t> Signature::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Signature::is_rewrite(const std::string& name) const {
  return std::find(rewrites_.begin(), rewrites_.end(), name) != rewrites_.end();
}

bool is_reserved_var_name(std::string_view name) {
  if (name.size() < 2 || name[0] != 'v') return false;
  return std::all_of(name.begin() + 1, name.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

std::optional<std::string> rewrite_shape_error(const Expr& type) {
  Expr body = type;
  std::size_t n = 0;
  while (body.is(Expr::Kind::Pi)) {
    body = body.child(1);
    ++n;
  }
  if (!body.is(Expr::Kind::Id)) return "rewrite axiom type is not of the form Pi ... . Id(l, r)";
  const Expr& lhs = body.child(0);
  if (lhs.is(Expr::Kind::Var)) return "rewrite left-hand side is a variable";
  for (std::size_t i = 0; i < n; ++i)
    if (!occurs_free(lhs, i)) return "rewrite variable missing from left-hand side";
  return std::nullopt;
}

// ---------------------------------------------------------------- lexer

namespace {

enum class Tok { Ident, Punct, End };

struct Token {
  Tok kind;
  std::string text;
  SourcePos pos;
};

const std::unordered_set<std::string> kKeywords = {
    "theory", "type", "const", "rewrite", "check", "infer", "equal", "inhabit", "by",
    "Unit", "star", "Id", "refl", "Sig", "Pi", "fun", "pair", "proj1", "proj2"};

std::vector<Token> lex(std::string_view text) {
  std::vector<Token> out;
  std::size_t line = 1, col = 1, i = 0;
  auto advance = [&](std::size_t k) {
    for (std::size_t j = 0; j < k; ++j) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  static const char* const kPunct2[] = {"=>", "->", "|-", "=="};
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    SourcePos pos{line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_' || text[j] == '\''))
        ++j;
      out.push_back({Tok::Ident, std::string(text.substr(i, j - i)), pos});
      advance(j - i);
      continue;
    }
    bool matched = false;
    for (const char* p : kPunct2) {
      if (text.substr(i, 2) == p) {
        out.push_back({Tok::Punct, p, pos});
        advance(2);
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string_view("(),:.{}").find(c) != std::string_view::npos) {
      out.push_back({Tok::Punct, std::string(1, c), pos});
      advance(1);
      continue;
    }
    throw ParseError(line, col, std::string("unexpected character '") + c + "'");
  }
  out.push_back({Tok::End, "", {line, col}});
  return out;
}

// ---------------------------------------------------------------- parser

class Parser {
 public:
  Parser(std::vector<Token> toks, Signature& sig) : toks_(std::move(toks)), sig_(sig) {}

  TheoryFile theory() {
    TheoryFile file;
    expect_kw("theory");
    file.name = ident("theory name").text;
    expect("{");
    while (!at("}")) decl();
    expect("}");
    while (!at_end()) file.goals.push_back(goal());
    file.signature = sig_;
    return file;
  }

  Expr expr_only() {
    Expr e = expr();
    if (!at_end()) fail("unexpected '" + peek().text + "' after expression");
    return e;
  }

  Context context_only() {
    Context c = at_end() ? Context{} : context();
    if (!at_end()) fail("unexpected '" + peek().text + "' after context");
    return c;
  }

  void push_scope(const Context& ctx) {
    for (const auto& d : ctx) scope_.push_back(d.name);
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Signature& sig_;
  std::vector<std::string> scope_;  // innermost last; "" is an anonymous binder

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool at_end() const { return peek().kind == Tok::End; }
  bool at(std::string_view p) const { return peek().kind == Tok::Punct && peek().text == p; }
  bool at_kw(std::string_view k) const { return peek().kind == Tok::Ident && peek().text == k; }
  Token next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  [[noreturn]] void fail(const std::string& msg) const { fail_at(peek().pos, msg); }
  [[noreturn]] static void fail_at(SourcePos p, const std::string& msg) { throw ParseError(p.line, p.column, msg); }

  static std::string describe(const Token& t) { return t.kind == Tok::End ? "end of input" : "'" + t.text + "'"; }

  void expect(std::string_view p) {
    if (!at(p)) fail("expected '" + std::string(p) + "', found " + describe(peek()));
    next();
  }
  void expect_kw(std::string_view k) {
    if (!at_kw(k)) fail("expected '" + std::string(k) + "', found " + describe(peek()));
    next();
  }
  Token ident(std::string_view what) {
    const Token& t = peek();
    if (t.kind != Tok::Ident || kKeywords.contains(t.text))
      fail("expected " + std::string(what) + ", found " + describe(t));
    return next();
  }

  void decl() {
    if (at_kw("type")) {
      next();
      Token name = ident("type name");
      expect("(");
      std::size_t mark = scope_.size();
      Context args = at(")") ? Context{} : context();
      scope_.resize(mark);
      expect(")");
      add(name, [&] { sig_.add_type(name.text, std::move(args), name.pos); });
    } else if (at_kw("const")) {
      next();
      Token name = ident("constant name");
      expect(":");
      Expr type = expr();
      add(name, [&] { sig_.add_term(name.text, std::move(type), name.pos); });
    } else if (at_kw("rewrite")) {
      next();
      Token name = ident("constant name");
      auto i = sig_.find(name.text);
      if (!i || sig_.decl(*i).kind != Decl::Kind::Term)
        fail_at(name.pos, "rewrite '" + name.text + "' does not name a term constant");
      if (auto err = rewrite_shape_error(sig_.decl(*i).type)) fail_at(name.pos, *err);
      sig_.add_rewrite(name.text);
    } else {
      fail("expected declaration, found " + describe(peek()));
    }
  }

  template <class F>
  void add(const Token& name, F&& f) {
    try {
      f();
    } catch (const ValidationError& e) {
      fail_at(name.pos, e.what());
    }
  }

  Goal goal() {
    Goal g;
    g.pos = peek().pos;
    std::string kw = peek().kind == Tok::Ident ? peek().text : "";
    if (kw == "check") g.kind = Goal::Kind::CheckType;
    else if (kw == "infer") g.kind = Goal::Kind::Infer;
    else if (kw == "equal") g.kind = Goal::Kind::CheckEqual;
    else if (kw == "inhabit") g.kind = Goal::Kind::CheckInhabited;
    else fail("expected goal, found " + describe(peek()));
    next();
    std::size_t mark = scope_.size();
    if (!at("|-")) g.ctx = context();
    expect("|-");
    g.lhs = expr();
    switch (g.kind) {
      case Goal::Kind::CheckType:
        expect_kw("type");
        break;
      case Goal::Kind::Infer:
        break;
      case Goal::Kind::CheckEqual:
        expect("==");
        g.rhs = expr();
        if (at_kw("by")) {
          next();
          g.hint = expr();
        }
        break;
      case Goal::Kind::CheckInhabited:
        expect_kw("by");
        g.rhs = expr();
        break;
    }
    scope_.resize(mark);
    return g;
  }

  // Parses `x : S, y : T`, leaving the variables in scope.
  Context context() {
    Context ctx;
    for (;;) {
      Token name = ident("variable name");
      if (is_reserved_var_name(name.text)) fail_at(name.pos, "variable name '" + name.text + "' is reserved");
      if (sig_.find(name.text)) fail_at(name.pos, "variable '" + name.text + "' clashes with a constant");
      for (const auto& d : ctx)
        if (d.name == name.text) fail_at(name.pos, "duplicate variable '" + name.text + "'");
      expect(":");
      Expr type = expr();
      ctx.push_back({name.text, type});
      scope_.push_back(name.text);
      if (!at(",")) break;
      next();
    }
    return ctx;
  }

  Expr expr() {
    if (at_kw("Sig") || at_kw("Pi") || at_kw("fun")) {
      std::string kw = next().text;
      Token name = ident("binder name");
      if (sig_.find(name.text)) fail_at(name.pos, "binder '" + name.text + "' clashes with a constant");
      expect(":");
      Expr dom = expr();
      expect(kw == "fun" ? "=>" : ".");
      scope_.push_back(name.text);
      Expr body = expr();
      scope_.pop_back();
      if (kw == "Sig") return Expr::sigma(name.text, dom, body);
      if (kw == "Pi") return Expr::pi(name.text, dom, body);
      return Expr::lam(name.text, dom, body);
    }
    Expr lhs = application();
    if (at("->")) {
      next();
      scope_.push_back("");
      Expr rhs = expr();
      scope_.pop_back();
      return Expr::pi("_", lhs, rhs);
    }
    return lhs;
  }

  bool starts_atom() const {
    const Token& t = peek();
    if (t.kind == Tok::Punct) return t.text == "(";
    if (t.kind != Tok::Ident) return false;
    if (!kKeywords.contains(t.text)) return true;
    static const std::unordered_set<std::string> atom_kws = {"Unit", "star", "Id", "refl", "pair", "proj1", "proj2"};
    return atom_kws.contains(t.text);
  }

  Expr application() {
    SourcePos start = peek().pos;
    Expr head = atom();
    while (starts_atom()) {
      if (head.is_type()) fail_at(start, "a type cannot be applied");
      head = Expr::app(head, atom());
    }
    return head;
  }

  Expr atom() {
    const Token& t = peek();
    if (at("(")) {
      next();
      Expr e = expr();
      expect(")");
      return e;
    }
    if (t.kind != Tok::Ident) fail("expected expression, found " + describe(t));
    const std::string kw = t.text;
    if (kw == "Unit") { next(); return Expr::unit(); }
    if (kw == "star") { next(); return Expr::star(); }
    if (kw == "Id" || kw == "pair") {
      next();
      expect("(");
      Expr a = expr();
      expect(",");
      Expr b = expr();
      expect(")");
      return kw == "Id" ? Expr::id(a, b) : Expr::pair(a, b);
    }
    if (kw == "refl") {
      next();
      expect("(");
      Expr a = expr();
      expect(")");
      return Expr::refl(a);
    }
    if (kw == "proj1" || kw == "proj2") {
      next();
      Expr a = atom();
      return kw == "proj1" ? Expr::proj1(a) : Expr::proj2(a);
    }
    Token name = ident("expression");
    for (std::size_t k = scope_.size(); k-- > 0;)
      if (scope_[k] == name.text) return Expr::var(scope_.size() - 1 - k, name.text);
    auto i = sig_.find(name.text);
    if (!i) fail_at(name.pos, "unbound name '" + name.text + "'");
    const Decl& d = sig_.decl(*i);
    if (d.kind == Decl::Kind::Term) return Expr::constant(name.text);
    std::vector<Expr> args;
    if (at("(")) {
      next();
      if (!at(")")) {
        args.push_back(expr());
        while (at(",")) {
          next();
          args.push_back(expr());
        }
      }
      expect(")");
    }
    if (args.size() != d.args.size())
      fail_at(name.pos, "type constant '" + name.text + "' expects " + std::to_string(d.args.size()) +
                            " argument(s), got " + std::to_string(args.size()));
    return Expr::type_app(name.text, std::move(args));
  }
};

// ---------------------------------------------------------------- printer

void print_into(std::string& out, const Expr& e, const Context& ctx, std::size_t depth) {
  using K = Expr::Kind;
  auto kid = [&](std::size_t i) { print_into(out, e.child(i), ctx, depth + e.binds_in(i)); };
  switch (e.kind()) {
    case K::TypeApp:
      out += e.name();
      out += '(';
      for (std::size_t i = 0; i < e.children().size(); ++i) {
        if (i) out += ", ";
        kid(i);
      }
      out += ')';
      return;
    case K::Unit: out += "Unit"; return;
    case K::Star: out += "(star)"; return;
    case K::Const: out += '(' + e.name() + ')'; return;
    case K::Var:
      if (e.index() < depth) {
        out += 'v' + std::to_string(depth - 1 - e.index());
      } else if (e.index() - depth < ctx.size()) {
        out += ctx[ctx.size() - 1 - (e.index() - depth)].name;
      } else {
        out += '#' + std::to_string(e.index() - depth);
      }
      return;
    case K::Id: case K::Pair:
      out += e.is(K::Id) ? "Id(" : "pair(";
      kid(0);
      out += ", ";
      kid(1);
      out += ')';
      return;
    case K::Refl:
      out += "refl(";
      kid(0);
      out += ')';
      return;
    case K::Proj1: case K::Proj2:
      out += e.is(K::Proj1) ? "(proj1 " : "(proj2 ";
      kid(0);
      out += ')';
      return;
    case K::App:
      out += '(';
      kid(0);
      out += ' ';
      kid(1);
      out += ')';
      return;
    case K::Sigma: case K::Pi: case K::Lam: {
      out += e.is(K::Sigma) ? "(Sig v" : e.is(K::Pi) ? "(Pi v" : "(fun v";
      out += std::to_string(depth);
      out += " : ";
      kid(0);
      out += e.is(K::Lam) ? " => " : " . ";
      kid(1);
      out += ')';
      return;
    }
  }
}

}  // namespace

TheoryFile parse_theory(std::string_view text) {
  Signature sig;
  Parser p(lex(text), sig);
  return p.theory();
}

Expr parse_expr(std::string_view text, const Signature& sig, const Context& ctx) {
  Signature copy = sig;
  Parser p(lex(text), copy);
  p.push_scope(ctx);
  return p.expr_only();
}

Context parse_context(std::string_view text, const Signature& sig) {
  Signature copy = sig;
  Parser p(lex(text), copy);
  return p.context_only();
}

std::string print_expr(const Expr& e, const Context& ctx) {
  std::string out;
  print_into(out, e, ctx, 0);
  return out;
}

std::string print_context(const Context& ctx) {
  std::string out;
  Context prefix;
  for (const auto& d : ctx) {
    if (!out.empty()) out += ", ";
    out += d.name + " : " + print_expr(d.expr, prefix);
    prefix.push_back(d);
  }
  return out;
}

std::string print_signature(const Signature& sig, const std::string& theory_name) {
  std::string out = "theory " + theory_name + " {\n";
  for (const Decl& d : sig.decls()) {
    if (d.kind == Decl::Kind::Type)
      out += "  type " + d.name + "(" + print_context(d.args) + ")\n";
    else
      out += "  const " + d.name + " : " + print_expr(d.type) + "\n";
  }
  for (const auto& r : sig.rewrites()) out += "  rewrite " + r + "\n";
  return out + "}\n";
}

}  // namespace mltt
