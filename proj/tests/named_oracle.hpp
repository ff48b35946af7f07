#pragma once

// Named-variable reference implementation of expressions, used as an
// independent oracle for the nameless core: alpha-equivalence by binder
// correspondence and substitution by renaming to globally fresh names.

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "mltt/syntax.hpp"

namespace oracle {

struct Named {
  enum K { Var, Const, Unit, Star, Ob, Mor, Id, Refl, Pair, P1, P2, Lam, Sig, Pi, App } k;
  std::string name;  // variable, constant or binder name
  std::vector<Named> kids;
};

inline bool is_type(const Named& n) {
  return n.k == Named::Unit || n.k == Named::Ob || n.k == Named::Mor || n.k == Named::Id ||
         n.k == Named::Sig || n.k == Named::Pi;
}

// Source text accepted by mltt::parse_expr over the signature of `test_signature`.
inline std::string render(const Named& n) {
  auto r = [&](std::size_t i) { return render(n.kids[i]); };
  switch (n.k) {
    case Named::Var: return n.name;
    case Named::Const: return n.name;
    case Named::Unit: return "Unit";
    case Named::Star: return "star";
    case Named::Ob: return "Ob";
    case Named::Mor: return "Mor(" + r(0) + ", " + r(1) + ")";
    case Named::Id: return "Id(" + r(0) + ", " + r(1) + ")";
    case Named::Refl: return "refl(" + r(0) + ")";
    case Named::Pair: return "pair(" + r(0) + ", " + r(1) + ")";
    case Named::P1: return "(proj1 " + r(0) + ")";
    case Named::P2: return "(proj2 " + r(0) + ")";
    case Named::Lam: return "(fun " + n.name + " : " + r(0) + " => " + r(1) + ")";
    case Named::Sig: return "(Sig " + n.name + " : " + r(0) + " . " + r(1) + ")";
    case Named::Pi: return "(Pi " + n.name + " : " + r(0) + " . " + r(1) + ")";
    case Named::App: return "(" + r(0) + " " + r(1) + ")";
  }
  return {};
}

inline mltt::Signature test_signature() {
  mltt::Signature sig;
  sig.add_type("Ob", {});
  mltt::Context args{{"x", mltt::Expr::type_app("Ob", {})}, {"y", mltt::Expr::type_app("Ob", {})}};
  sig.add_type("Mor", args);
  sig.add_term("c", mltt::Expr::type_app("Ob", {}));
  sig.add_term("f", mltt::Expr::pi("_", mltt::Expr::unit(), mltt::Expr::type_app("Ob", {})));
  return sig;
}

// Random expression whose free variables are drawn from `scope`; binder
// names come from a small pool so that shadowing is frequent.
class Generator {
 public:
  explicit Generator(std::uint64_t seed) : rng_(seed) {}

  Named gen(std::vector<std::string> scope, int depth) {
    return pick(2) ? term(scope, depth) : type(scope, depth);
  }

  Named term(std::vector<std::string>& scope, int depth) {
    int choice = depth <= 0 ? pick(3) : pick(10);
    switch (choice) {
      case 0:
        if (!scope.empty()) return {Named::Var, scope[pick(scope.size())], {}};
        return {Named::Star, "", {}};
      case 1: return {Named::Const, pick(2) ? "c" : "f", {}};
      case 2: return {Named::Star, "", {}};
      case 3: return {Named::Refl, "", {term(scope, depth - 1)}};
      case 4: return {Named::Pair, "", {term(scope, depth - 1), term(scope, depth - 1)}};
      case 5: return {Named::P1, "", {term(scope, depth - 1)}};
      case 6: return {Named::P2, "", {term(scope, depth - 1)}};
      case 7: return binder(Named::Lam, scope, depth, false);
      default: {
        Named head = term(scope, depth - 1);
        return {Named::App, "", {head, term(scope, depth - 1)}};
      }
    }
  }

  Named type(std::vector<std::string>& scope, int depth) {
    int choice = depth <= 0 ? pick(2) : pick(6);
    switch (choice) {
      case 0: return {Named::Unit, "", {}};
      case 1: return {Named::Ob, "", {}};
      case 2: return {Named::Mor, "", {term(scope, depth - 1), term(scope, depth - 1)}};
      case 3: return {Named::Id, "", {term(scope, depth - 1), term(scope, depth - 1)}};
      case 4: return binder(Named::Sig, scope, depth, true);
      default: return binder(Named::Pi, scope, depth, true);
    }
  }

  std::string binder_name() {
    static const char* const pool[] = {"x", "y", "z", "w"};
    return pool[pick(4)];
  }

  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;

  Named binder(Named::K k, std::vector<std::string>& scope, int depth, bool body_is_type) {
    Named dom = type(scope, depth - 1);
    std::string name = binder_name();
    scope.push_back(name);
    Named body = body_is_type ? type(scope, depth - 1) : term(scope, depth - 1);
    scope.pop_back();
    return {k, name, {dom, body}};
  }
};

// Alpha-equivalence: bound names correspond positionally, free names must match.
inline bool alpha_eq(const Named& a, const Named& b, std::vector<std::pair<std::string, std::string>>& bound) {
  if (a.k != b.k || a.kids.size() != b.kids.size()) return false;
  if (a.k == Named::Var) {
    for (std::size_t i = bound.size(); i-- > 0;) {
      bool la = bound[i].first == a.name, lb = bound[i].second == b.name;
      if (la || lb) return la && lb;
    }
    return a.name == b.name;
  }
  if (a.k == Named::Const) return a.name == b.name;
  bool binds = a.k == Named::Lam || a.k == Named::Sig || a.k == Named::Pi;
  for (std::size_t i = 0; i < a.kids.size(); ++i) {
    if (binds && i == 1) bound.emplace_back(a.name, b.name);
    bool ok = alpha_eq(a.kids[i], b.kids[i], bound);
    if (binds && i == 1) bound.pop_back();
    if (!ok) return false;
  }
  return true;
}

inline bool alpha_eq(const Named& a, const Named& b) {
  std::vector<std::pair<std::string, std::string>> bound;
  return alpha_eq(a, b, bound);
}

// Renames every binder to a globally fresh name `#k` (not a source identifier).
inline Named freshen(const Named& n, std::vector<std::pair<std::string, std::string>>& env, int& counter) {
  if (n.k == Named::Var) {
    for (std::size_t i = env.size(); i-- > 0;)
      if (env[i].first == n.name) return {Named::Var, env[i].second, {}};
    return n;
  }
  Named out{n.k, n.name, {}};
  bool binds = n.k == Named::Lam || n.k == Named::Sig || n.k == Named::Pi;
  for (std::size_t i = 0; i < n.kids.size(); ++i) {
    if (binds && i == 1) {
      out.name = "#" + std::to_string(counter++);
      env.emplace_back(n.name, out.name);
    }
    out.kids.push_back(freshen(n.kids[i], env, counter));
    if (binds && i == 1) env.pop_back();
  }
  return out;
}

// Capture-free because all binders in n and in the images are globally fresh.
inline Named naive_subst(const Named& n, const std::vector<std::pair<std::string, Named>>& sigma) {
  if (n.k == Named::Var) {
    for (const auto& [x, t] : sigma)
      if (x == n.name) return t;
    return n;
  }
  Named out{n.k, n.name, {}};
  for (const auto& k : n.kids) out.kids.push_back(naive_subst(k, sigma));
  return out;
}

// Named -> nameless, resolving free variables against `ctx` (innermost last).
inline mltt::Expr to_expr(const Named& n, std::vector<std::string>& scope) {
  using mltt::Expr;
  auto r = [&](std::size_t i) { return to_expr(n.kids[i], scope); };
  switch (n.k) {
    case Named::Var:
      for (std::size_t i = scope.size(); i-- > 0;)
        if (scope[i] == n.name) return Expr::var(scope.size() - 1 - i, n.name);
      throw std::runtime_error("oracle: unbound " + n.name);
    case Named::Const: return Expr::constant(n.name);
    case Named::Unit: return Expr::unit();
    case Named::Star: return Expr::star();
    case Named::Ob: return Expr::type_app("Ob", {});
    case Named::Mor: return Expr::type_app("Mor", {r(0), r(1)});
    case Named::Id: return Expr::id(r(0), r(1));
    case Named::Refl: return Expr::refl(r(0));
    case Named::Pair: return Expr::pair(r(0), r(1));
    case Named::P1: return Expr::proj1(r(0));
    case Named::P2: return Expr::proj2(r(0));
    case Named::App: return Expr::app(r(0), r(1));
    case Named::Lam: case Named::Sig: case Named::Pi: {
      Expr dom = r(0);
      scope.push_back(n.name);
      Expr body = r(1);
      scope.pop_back();
      if (n.k == Named::Lam) return Expr::lam(n.name, dom, body);
      if (n.k == Named::Sig) return Expr::sigma(n.name, dom, body);
      return Expr::pi(n.name, dom, body);
    }
  }
  throw std::logic_error("oracle: bad kind");
}

}  // namespace oracle
