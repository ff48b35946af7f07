#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mltt {

namespace detail { struct ExprFactory; }

/// Terms and types of the theory with nameless (de Bruijn) variables.
///
/// Binders keep the source name as a hint for diagnostics only; equality and
/// printing ignore it. Var(i) refers to the i-th enclosing binder, counting
/// outward from 0, and continues into the surrounding context.
class Expr {
 public:
  enum class Kind : unsigned char {
    TypeApp, Unit, Id, Sigma, Pi,
    Const, Var, Star, Refl, Pair, Proj1, Proj2, Lam, App
  };

  /// Unit; a default-constructed Expr is the unit type.
  Expr();

  static Expr type_app(std::string head, std::vector<Expr> args);
  static Expr unit();
  static Expr id(Expr lhs, Expr rhs);
  static Expr sigma(std::string hint, Expr dom, Expr cod);
  static Expr pi(std::string hint, Expr dom, Expr cod);
  static Expr constant(std::string name);
  static Expr var(std::size_t index, std::string hint = {});
  static Expr star();
  static Expr refl(Expr body);
  static Expr pair(Expr fst, Expr snd);
  static Expr proj1(Expr body);
  static Expr proj2(Expr body);
  static Expr lam(std::string hint, Expr dom, Expr body);
  static Expr app(Expr fun, Expr arg);
  /// f a1 ... an
  static Expr apps(Expr fun, std::span<const Expr> args);

  Kind kind() const;
  bool is(Kind k) const { return kind() == k; }
  bool is_type() const;
  /// Head of TypeApp, name of Const, or binder/variable hint.
  const std::string& name() const;
  std::size_t index() const;
  /// TypeApp arguments; otherwise the immediate subexpressions in order
  /// (Id: lhs, rhs; Sigma/Pi/Lam: dom, body; Pair; Proj/Refl: body; App: fun, arg).
  std::span<const Expr> children() const;
  const Expr& child(std::size_t i) const { return children()[i]; }
  /// Number of binders introduced in front of child i (1 for bodies of Sigma/Pi/Lam).
  std::size_t binds_in(std::size_t i) const;

  /// Same node with new children (TypeApp args or subexpressions), keeping names.
  Expr with_children(std::vector<Expr> children) const;

  std::size_t hash() const;
  /// Structural equality; binder and variable hints are ignored.
  friend bool operator==(const Expr& a, const Expr& b);
  /// Pointer identity, a cheap sufficient test for equality.
  bool same_node(const Expr& other) const { return node_ == other.node_; }

  struct Node;

 private:
  friend struct detail::ExprFactory;
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  static Expr from_node(std::shared_ptr<const Node> n);
  std::shared_ptr<const Node> node_;
};

struct NamedExpr {
  std::string name;
  Expr expr;
};

/// Ordered variable declarations; the i-th type may mention earlier variables.
using Context = std::vector<NamedExpr>;
/// Ordered assignments x := term, following the order of the source context.
using Substitution = std::vector<NamedExpr>;

struct SourcePos {
  std::size_t line = 0;
  std::size_t column = 0;
};

struct Decl {
  enum class Kind { Type, Term };
  Kind kind;
  std::string name;
  Context args;  ///< argument context of a type constant
  Expr type;     ///< declared type of a term constant (closed)
  SourcePos pos;
};

/// Ordered declarations plus the set of term constants marked as rewrite rules.
class Signature {
 public:
  /// Throws ValidationError if the name is already declared.
  void add_type(std::string name, Context args, SourcePos pos = {});
  void add_term(std::string name, Expr type, SourcePos pos = {});
  /// Throws ValidationError unless `name` is a declared term constant.
  void add_rewrite(const std::string& name);

  std::span<const Decl> decls() const { return decls_; }
  std::size_t size() const { return decls_.size(); }
  const Decl& decl(std::size_t i) const { return decls_[i]; }
  std::optional<std::size_t> find(const std::string& name) const;
  const std::vector<std::string>& rewrites() const { return rewrites_; }
  bool is_rewrite(const std::string& name) const;

 private:
  std::vector<Decl> decls_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> rewrites_;
};

struct Goal {
  enum class Kind { CheckType, Infer, CheckEqual, CheckInhabited };
  Kind kind;
  Context ctx;
  Expr lhs;                  ///< type (CheckType, CheckInhabited) or term
  Expr rhs;                  ///< right-hand side (CheckEqual) or witness (CheckInhabited)
  std::optional<Expr> hint;  ///< `by` witness of CheckEqual
  SourcePos pos;
};

struct TheoryFile {
  std::string name;
  Signature signature;
  std::vector<Goal> goals;
};

/// Throws ParseError with line/column on lexical, syntax, scoping and duplicate errors.
TheoryFile parse_theory(std::string_view text);

/// Parses a single expression over `sig` and `ctx` (as written on a command line).
Expr parse_expr(std::string_view text, const Signature& sig, const Context& ctx = {});
/// Parses `x : S, y : T` over `sig`.
Context parse_context(std::string_view text, const Signature& sig);

/// Canonical fully parenthesized form. Binders print as v<depth>, free
/// variables by the corresponding name in `ctx` (innermost last).
std::string print_expr(const Expr& e, const Context& ctx = {});
std::string print_context(const Context& ctx);
/// Theory source with the declarations of `sig` and no goals; parses back to `sig`.
std::string print_signature(const Signature& sig, const std::string& theory_name = "T");

/// Why `type` cannot orient a rewrite rule: it must be Pi ... . Id(l, r) with
/// l not a variable and every Pi-bound variable occurring in l.
std::optional<std::string> rewrite_shape_error(const Expr& type);

/// Names of the form v<digits> are reserved for binders in printed output.
bool is_reserved_var_name(std::string_view name);

}  // namespace mltt
