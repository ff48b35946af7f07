#include "mltt/kernel.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "mltt/error.hpp"
#include "mltt/subst.hpp"

namespace mltt {

const char* to_string(JudgmentKind k) {
  switch (k) {
    case JudgmentKind::Signature: return "signature";
    case JudgmentKind::Context: return "context";
    case JudgmentKind::Subst: return "substitution";
    case JudgmentKind::Type: return "type";
    case JudgmentKind::Typing: return "typing";
    case JudgmentKind::TermEq: return "term-equality";
    case JudgmentKind::TypeEq: return "type-equality";
  }
  return "?";
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Accepted: return "accepted";
    case Verdict::Rejected: return "rejected";
    case Verdict::Undetermined: return "undetermined";
  }
  return "?";
}

const std::vector<std::string>& admissible_rules() {
  static const std::vector<std::string> rules = {
      "e_refl", "e_sym", "e_trans", "e_cong_proj1", "e_cong_proj2",
      "e_cong_pair", "e_cong_refl", "e_cong_lam", "E_refl"};
  return rules;
}

std::vector<std::string> trace_of(const DerivPtr& root) {
  std::vector<std::string> out;
  std::unordered_set<const Derivation*> seen;
  std::vector<const Derivation*> stack;
  if (root) stack.push_back(root.get());
  while (!stack.empty()) {
    const Derivation* d = stack.back();
    stack.pop_back();
    if (!seen.insert(d).second) continue;
    out.push_back(d->rule);
    for (auto it = d->premises.rbegin(); it != d->premises.rend(); ++it)
      if (*it) stack.push_back(it->get());
  }
  return out;
}

std::size_t derivation_size(const DerivPtr& d) { return trace_of(d).size(); }

namespace {

using K = Expr::Kind;

struct Reject {
  std::string msg;
};
// A term-level equation the algorithm could neither prove nor refute.
struct Mismatch {
  std::string msg;
};
struct OutOfFuel {};

bool ctx_eq(const ContextRef& a, const ContextRef& b) {
  if (a == b) return true;
  if (!a || !b || a->size() != b->size()) return false;
  for (std::size_t i = 0; i < a->size(); ++i)
    if (!((*a)[i].expr == (*b)[i].expr)) return false;
  return true;
}

// Whether `longer` is `shorter` followed by the declarations `tail`.
bool ctx_extends(const ContextRef& longer, const Context& shorter, std::span<const Expr> tail) {
  if (!longer || longer->size() != shorter.size() + tail.size()) return false;
  for (std::size_t i = 0; i < shorter.size(); ++i)
    if (!((*longer)[i].expr == shorter[i].expr)) return false;
  for (std::size_t i = 0; i < tail.size(); ++i)
    if (!((*longer)[shorter.size() + i].expr == tail[i])) return false;
  return true;
}

DerivPtr make(Judgment j, std::string rule, std::vector<DerivPtr> premises = {}) {
  return std::make_shared<const Derivation>(Derivation{std::move(j), std::move(rule), std::move(premises)});
}

struct Scope {
  ContextRef ctx;
  DerivPtr deriv;  // Context judgment for ctx
};

struct RewriteRule {
  std::string name;
  std::size_t arity;
  Expr lhs;
};

std::string show(const Expr& e, const ContextRef& ctx) { return print_expr(e, ctx ? *ctx : Context{}); }

class Checker {
 public:
  Checker(const Signature& sig, std::size_t prefix, DerivPtr sig_deriv, std::size_t fuel)
      : sig_(sig), prefix_(prefix), sig_deriv_(std::move(sig_deriv)), fuel_(fuel), start_fuel_(fuel) {
    for (const auto& name : sig_.rewrites()) {
      auto i = sig_.find(name);
      if (!i || *i >= prefix_) continue;
      Expr body = sig_.decl(*i).type;
      std::size_t n = 0;
      while (body.is(K::Pi)) {
        body = body.child(1);
        ++n;
      }
      if (body.is(K::Id)) rules_.push_back({name, n, body.child(0)});
    }
  }

  std::size_t fuel_used() const { return start_fuel_ - fuel_; }

  Judgment judgment(JudgmentKind kind, const Scope& s, std::vector<Expr> subjects) const {
    return Judgment{kind, prefix_, s.ctx, nullptr, std::move(subjects)};
  }

  // ------------------------------------------------------------- contexts

  Scope root() const {
    auto ctx = std::make_shared<const Context>();
    return {ctx, make(Judgment{JudgmentKind::Context, prefix_, ctx, nullptr, {}}, "Gamma_empty", {sig_deriv_})};
  }

  Scope extend(const Scope& s, const std::string& name, const Expr& type, DerivPtr type_deriv) const {
    auto ctx = std::make_shared<Context>(*s.ctx);
    ctx->push_back({name, type});
    ContextRef ref = ctx;
    return {ref, make(Judgment{JudgmentKind::Context, prefix_, ref, nullptr, {}}, "Gamma_x",
                      {s.deriv, std::move(type_deriv)})};
  }

  Scope extend_checked(const Scope& s, const std::string& name, const Expr& type) {
    return extend(s, name, type, check_type(s, type));
  }

  // Scopes for every prefix of ctx (ctx.size() + 1 entries) and the type derivation of each entry.
  std::pair<std::vector<Scope>, std::vector<DerivPtr>> scopes_of(const Context& ctx) {
    std::vector<Scope> scopes{root()};
    std::vector<DerivPtr> types;
    for (const auto& [name, type] : ctx) {
      try {
        types.push_back(check_type(scopes.back(), type));
      } catch (Reject& r) {
        r.msg = "in declaration of '" + name + "': " + r.msg;
        throw;
      }
      scopes.push_back(extend(scopes.back(), name, type, types.back()));
    }
    return {std::move(scopes), std::move(types)};
  }

  Scope scope_of(const Context& ctx) { return scopes_of(ctx).first.back(); }

  const Decl& lookup(const std::string& name, Decl::Kind kind) const {
    auto i = sig_.find(name);
    if (!i || *i >= prefix_ || sig_.decl(*i).kind != kind)
      throw Reject{std::string("unbound name '") + name + "'"};
    return sig_.decl(*i);
  }

  // ------------------------------------------------------------- substitutions

  DerivPtr subst_deriv(const std::vector<Scope>& src_scopes, const std::vector<DerivPtr>& src_types,
                       const Scope& dst, std::span<const Expr> terms) {
    const Context& src = *src_scopes.back().ctx;
    if (terms.size() != src.size())
      throw Reject{"substitution assigns " + std::to_string(terms.size()) + " term(s) to a context of " +
                   std::to_string(src.size()) + " variable(s)"};
    DerivPtr d = make(Judgment{JudgmentKind::Subst, prefix_, dst.ctx, src_scopes[0].ctx, {}}, "sigma_empty",
                      {dst.deriv});
    Substitution gamma;
    for (std::size_t i = 0; i < src.size(); ++i) {
      Expr want = apply_subst(gamma, src[i].expr);
      DerivPtr ds;
      try {
        ds = check(dst, terms[i], want);
      } catch (Reject& r) {
        r.msg = "argument for '" + src[i].name + "': " + r.msg;
        throw;
      }
      gamma.push_back({src[i].name, terms[i]});
      std::vector<Expr> assigned(terms.begin(), terms.begin() + static_cast<std::ptrdiff_t>(i + 1));
      d = make(Judgment{JudgmentKind::Subst, prefix_, dst.ctx, src_scopes[i + 1].ctx, std::move(assigned)},
               "sigma_x", {d, src_types[i], ds});
    }
    return d;
  }

  const std::pair<std::vector<Scope>, std::vector<DerivPtr>>& arg_scopes(const std::string& type_name) {
    auto it = arg_cache_.find(type_name);
    if (it != arg_cache_.end()) return it->second;
    const Decl& d = lookup(type_name, Decl::Kind::Type);
    return arg_cache_.emplace(type_name, scopes_of(d.args)).first->second;
  }

  // ------------------------------------------------------------- types

  DerivPtr check_type(const Scope& s, const Expr& ty) {
    switch (ty.kind()) {
      case K::TypeApp: {
        const Decl& d = lookup(ty.name(), Decl::Kind::Type);
        if (d.args.size() != ty.children().size())
          throw Reject{"type constant '" + ty.name() + "' expects " + std::to_string(d.args.size()) + " argument(s)"};
        const auto& [scopes, types] = arg_scopes(ty.name());
        DerivPtr sub = subst_deriv(scopes, types, s, ty.children());
        return make(judgment(JudgmentKind::Type, s, {ty}), "T_app", {sub});
      }
      case K::Unit:
        return make(judgment(JudgmentKind::Type, s, {ty}), "T_Unit", {s.deriv});
      case K::Id: {
        auto [a, da] = infer(s, ty.child(0));
        DerivPtr db = check(s, ty.child(1), a);
        return make(judgment(JudgmentKind::Type, s, {ty}), "T_Id", {da, db});
      }
      case K::Sigma: case K::Pi: {
        Scope inner = extend_checked(s, ty.name(), ty.child(0));
        DerivPtr dt = check_type(inner, ty.child(1));
        return make(judgment(JudgmentKind::Type, s, {ty}), ty.is(K::Sigma) ? "T_Sigma" : "T_Pi", {dt});
      }
      default:
        throw Reject{"expected a type, found term " + show(ty, s.ctx)};
    }
  }

  // ------------------------------------------------------------- terms

  std::pair<Expr, DerivPtr> infer(const Scope& s, const Expr& t) {
    auto typing = [&](const Expr& type, const char* rule, std::vector<DerivPtr> prem) {
      return std::pair<Expr, DerivPtr>{type, make(judgment(JudgmentKind::Typing, s, {t, type}), rule, std::move(prem))};
    };
    switch (t.kind()) {
      case K::Const:
        return typing(lookup(t.name(), Decl::Kind::Term).type, "t_c", {s.deriv});
      case K::Var:
        if (t.index() >= s.ctx->size()) throw Reject{"unbound variable #" + std::to_string(t.index())};
        return typing(var_type(*s.ctx, t.index()), "t_x", {s.deriv});
      case K::Star:
        return typing(Expr::unit(), "t_star", {s.deriv});
      case K::Refl: {
        auto [a, d] = infer(s, t.child(0));
        return typing(Expr::id(t.child(0), t.child(0)), "t_refl", {d});
      }
      case K::Pair:
        throw Reject{"pair " + show(t, s.ctx) + " needs expected type"};
      case K::Proj1: case K::Proj2: {
        // A literal pair is checked against the non-dependent Sigma of its components.
        auto [u, d] = t.child(0).is(K::Pair) ? literal_pair(s, t.child(0)) : infer(s, t.child(0));
        if (!u.is(K::Sigma))
          throw Reject{"projection from " + show(t.child(0), s.ctx) + " of non-Sigma type " + show(u, s.ctx)};
        if (t.is(K::Proj1)) return typing(u.child(0), "t_pi1", {d});
        return typing(instantiate(u.child(1), Expr::proj1(t.child(0))), "t_pi2", {d});
      }
      case K::Lam: {
        Scope inner = extend_checked(s, t.name(), t.child(0));
        auto [body, d] = infer(inner, t.child(1));
        return typing(Expr::pi(t.name(), t.child(0), body), "t_lambda", {d});
      }
      case K::App: {
        auto [f, df] = infer(s, t.child(0));
        if (!f.is(K::Pi))
          throw Reject{"application of " + show(t.child(0), s.ctx) + " of non-function type " + show(f, s.ctx)};
        DerivPtr da = check(s, t.child(1), f.child(0));
        return typing(instantiate(f.child(1), t.child(1)), "t_app", {df, da});
      }
      default:
        throw Reject{"expected a term, found type " + show(t, s.ctx)};
    }
  }

  std::pair<Expr, DerivPtr> literal_pair(const Scope& s, const Expr& p) {
    auto component = [&](const Expr& c) {
      return c.is(K::Pair) ? literal_pair(s, c).first : infer(s, c).first;
    };
    Expr a = component(p.child(0));
    Expr b = component(p.child(1));
    Expr sig = Expr::sigma("x", a, shift(b, 1));
    return {sig, check(s, p, sig)};
  }

  DerivPtr check(const Scope& s, const Expr& t, const Expr& ty) {
    if (t.is(K::Pair)) {
      if (!ty.is(K::Sigma))
        throw Reject{"pair " + show(t, s.ctx) + " checked against non-Sigma type " + show(ty, s.ctx)};
      DerivPtr da = check(s, t.child(0), ty.child(0));
      Scope inner = extend_checked(s, ty.name(), ty.child(0));
      DerivPtr dt = check_type(inner, ty.child(1));
      DerivPtr db = check(s, t.child(1), instantiate(ty.child(1), t.child(0)));
      return make(judgment(JudgmentKind::Typing, s, {t, ty}), "t_pair", {da, dt, db});
    }
    if (t.is(K::Lam) && ty.is(K::Pi) && t.child(0) == ty.child(0)) {
      Scope inner = extend_checked(s, t.name(), t.child(0));
      DerivPtr db = check(inner, t.child(1), ty.child(1));
      return make(judgment(JudgmentKind::Typing, s, {t, ty}), "t_lambda", {db});
    }
    auto [actual, d] = infer(s, t);
    if (actual == ty) return d;
    DerivPtr eq = type_eq(s, actual, ty);
    return make(judgment(JudgmentKind::Typing, s, {t, ty}), "e_typing", {d, refl(s, t), eq});
  }

  // ------------------------------------------------------------- type equality

  DerivPtr type_eq(const Scope& s, const Expr& a, const Expr& b) {
    Judgment j = judgment(JudgmentKind::TypeEq, s, {a, b});
    if (a == b) return make(std::move(j), "E_refl");
    if (a.kind() != b.kind() || !a.is_type() || (a.is(K::TypeApp) && a.name() != b.name()))
      throw Reject{"type mismatch: " + show(a, s.ctx) + " vs " + show(b, s.ctx)};
    switch (a.kind()) {
      case K::TypeApp: {
        const Decl& d = lookup(a.name(), Decl::Kind::Type);
        std::vector<DerivPtr> prem;
        Substitution gamma;
        for (std::size_t i = 0; i < d.args.size(); ++i) {
          prem.push_back(conv(s, a.child(i), b.child(i), apply_subst(gamma, d.args[i].expr)));
          gamma.push_back({d.args[i].name, a.child(i)});
        }
        return make(std::move(j), "E_a", std::move(prem));
      }
      case K::Unit:
        return make(std::move(j), "E_Unit");
      case K::Id: {
        Expr x = infer(s, a.child(0)).first;
        DerivPtr d0 = conv(s, a.child(0), b.child(0), x);
        DerivPtr d1 = conv(s, a.child(1), b.child(1), x);
        return make(std::move(j), "E_Id", {d0, d1});
      }
      default: {
        DerivPtr d0 = type_eq(s, a.child(0), b.child(0));
        Scope inner = extend_checked(s, a.name(), a.child(0));
        DerivPtr d1 = type_eq(inner, a.child(1), b.child(1));
        return make(std::move(j), a.is(K::Sigma) ? "E_Sigma" : "E_Pi", {d0, d1});
      }
    }
  }

  // ------------------------------------------------------------- term equality

  DerivPtr refl(const Scope& s, const Expr& t) const {
    return make(judgment(JudgmentKind::TermEq, s, {t, t}), "e_refl");
  }
  static const Expr& lhs(const DerivPtr& d) { return d->judgment.subjects[0]; }
  static const Expr& rhs(const DerivPtr& d) { return d->judgment.subjects[1]; }
  static bool is_refl(const DerivPtr& d) { return d->rule == "e_refl"; }

  DerivPtr sym(const Scope& s, const DerivPtr& d) const {
    if (is_refl(d)) return d;
    if (d->rule == "e_sym") return d->premises[0];
    return make(judgment(JudgmentKind::TermEq, s, {rhs(d), lhs(d)}), "e_sym", {d});
  }

  DerivPtr trans(const Scope& s, const DerivPtr& a, const DerivPtr& b) const {
    if (!a || is_refl(a)) return b;
    if (!b || is_refl(b)) return a;
    return make(judgment(JudgmentKind::TermEq, s, {lhs(a), rhs(b)}), "e_trans", {a, b});
  }

  DerivPtr unit_eq(const Scope& s, const Expr& t) {
    return make(judgment(JudgmentKind::TermEq, s, {t, Expr::star()}), "e_star", {check(s, t, Expr::unit())});
  }

  // Normalizes both sides, then compares the normal forms by the type-directed rules.
  DerivPtr conv(const Scope& s, const Expr& a, const Expr& b, const Expr& ty) {
    if (a == b) return refl(s, a);
    auto [na, da] = nf(s, a);
    auto [nb, db] = nf(s, b);
    DerivPtr middle = na == nb ? refl(s, na) : conv_normal(s, na, nb, ty);
    return trans(s, da, trans(s, middle, db ? sym(s, db) : nullptr));
  }

  DerivPtr conv_normal(const Scope& s, const Expr& a, const Expr& b, const Expr& ty) {
    switch (ty.kind()) {
      case K::Unit:
        return trans(s, unit_eq(s, a), sym(s, unit_eq(s, b)));
      case K::Id:
        return make(judgment(JudgmentKind::TermEq, s, {a, b}), "e_id-uniq", {check(s, a, ty), check(s, b, ty)});
      case K::Pi: {
        DerivPtr da = check(s, a, ty);
        DerivPtr db = check(s, b, ty);
        Scope inner = extend_checked(s, "%y", ty.child(0));
        Expr y = Expr::var(0, "%y");
        DerivPtr body = conv(inner, Expr::app(shift(a, 1), y), Expr::app(shift(b, 1), y), ty.child(1));
        return make(judgment(JudgmentKind::TermEq, s, {a, b}), "e_funcext", {da, db, body});
      }
      case K::Sigma: {
        Expr a1 = Expr::proj1(a), a2 = Expr::proj2(a), b1 = Expr::proj1(b), b2 = Expr::proj2(b);
        DerivPtr d1 = conv(s, a1, b1, ty.child(0));
        DerivPtr d2 = conv(s, a2, b2, instantiate(ty.child(1), a1));
        DerivPtr eta_a = make(judgment(JudgmentKind::TermEq, s, {Expr::pair(a1, a2), a}), "e_pair");
        DerivPtr eta_b = make(judgment(JudgmentKind::TermEq, s, {Expr::pair(b1, b2), b}), "e_pair");
        DerivPtr mid = make(judgment(JudgmentKind::TermEq, s, {Expr::pair(a1, a2), Expr::pair(b1, b2)}),
                            "e_cong_pair", {d1, d2});
        return trans(s, sym(s, eta_a), trans(s, mid, eta_b));
      }
      default:
        return neutral(s, a, b).first;
    }
  }

  // Compares normal forms by their head spines.
  std::pair<DerivPtr, Expr> neutral(const Scope& s, const Expr& a, const Expr& b) {
    auto fail = [&]() -> std::pair<DerivPtr, Expr> {
      throw Mismatch{"cannot show " + show(a, s.ctx) + " == " + show(b, s.ctx)};
    };
    if (a.kind() != b.kind()) return fail();
    switch (a.kind()) {
      case K::Var:
        if (a.index() != b.index() || a.index() >= s.ctx->size()) return fail();
        return {refl(s, a), var_type(*s.ctx, a.index())};
      case K::Const:
        if (a.name() != b.name()) return fail();
        return {refl(s, a), lookup(a.name(), Decl::Kind::Term).type};
      case K::App: {
        auto [df, f] = neutral(s, a.child(0), b.child(0));
        if (!f.is(K::Pi)) return fail();
        DerivPtr dx = conv(s, a.child(1), b.child(1), f.child(0));
        DerivPtr d = is_refl(df) && is_refl(dx) ? refl(s, a)
                                                : make(judgment(JudgmentKind::TermEq, s, {a, b}), "e_app", {df, dx});
        return {d, instantiate(f.child(1), a.child(1))};
      }
      case K::Proj1: case K::Proj2: {
        auto [du, u] = neutral(s, a.child(0), b.child(0));
        if (!u.is(K::Sigma)) return fail();
        DerivPtr d = is_refl(du) ? refl(s, a)
                                 : make(judgment(JudgmentKind::TermEq, s, {a, b}),
                                        a.is(K::Proj1) ? "e_cong_proj1" : "e_cong_proj2", {du});
        return {d, a.is(K::Proj1) ? u.child(0) : instantiate(u.child(1), Expr::proj1(a.child(0)))};
      }
      default:
        return fail();
    }
  }

  // ------------------------------------------------------------- normalization

  void spend() {
    if (fuel_ == 0) throw OutOfFuel{};
    --fuel_;
  }

  // Full normal form, outermost redex first. The derivation is null when e is already normal.
  std::pair<Expr, DerivPtr> nf(const Scope& s, const Expr& e) {
    Expr cur = e;
    DerivPtr acc;
    bool kids_normal = false;
    for (;;) {
      if (auto step = root_step(s, cur)) {
        spend();
        acc = trans(s, acc, step->second);
        cur = step->first;
        kids_normal = false;
        continue;
      }
      if (kids_normal) return {cur, acc};
      auto [next, d] = congruence(s, cur);
      kids_normal = true;
      if (!d) return {cur, acc};
      acc = trans(s, acc, d);
      cur = next;
    }
  }

  std::pair<Expr, DerivPtr> congruence(const Scope& s, const Expr& e) {
    auto step = [&](const Expr& after, const char* rule, std::vector<DerivPtr> prem) {
      return std::pair<Expr, DerivPtr>{after, make(judgment(JudgmentKind::TermEq, s, {e, after}), rule, std::move(prem))};
    };
    switch (e.kind()) {
      case K::App: case K::Pair: {
        auto [x, dx] = nf(s, e.child(0));
        auto [y, dy] = nf(s, e.child(1));
        if (!dx && !dy) return {e, nullptr};
        if (!dx) dx = refl(s, x);
        if (!dy) dy = refl(s, y);
        return e.is(K::App) ? step(Expr::app(x, y), "e_app", {dx, dy}) : step(Expr::pair(x, y), "e_cong_pair", {dx, dy});
      }
      case K::Proj1: case K::Proj2: case K::Refl: {
        auto [x, dx] = nf(s, e.child(0));
        if (!dx) return {e, nullptr};
        if (e.is(K::Refl)) return step(Expr::refl(x), "e_cong_refl", {dx});
        if (e.is(K::Proj1)) return step(Expr::proj1(x), "e_cong_proj1", {dx});
        return step(Expr::proj2(x), "e_cong_proj2", {dx});
      }
      case K::Lam: {
        Scope inner = extend_checked(s, e.name(), e.child(0));
        auto [body, db] = nf(inner, e.child(1));
        if (!db) return {e, nullptr};
        return step(Expr::lam(e.name(), e.child(0), body), "e_cong_lam", {db});
      }
      default:
        return {e, nullptr};
    }
  }

  std::optional<std::pair<Expr, DerivPtr>> root_step(const Scope& s, const Expr& e) {
    auto step = [&](const Expr& after, const char* rule, std::vector<DerivPtr> prem = {}) {
      return std::pair<Expr, DerivPtr>{after, make(judgment(JudgmentKind::TermEq, s, {e, after}), rule, std::move(prem))};
    };
    if (e.is(K::App) && e.child(0).is(K::Lam)) return step(instantiate(e.child(0).child(1), e.child(1)), "e_beta");
    if (e.is(K::Proj1) && e.child(0).is(K::Pair)) return step(e.child(0).child(0), "e_pi1");
    if (e.is(K::Proj2) && e.child(0).is(K::Pair)) return step(e.child(0).child(1), "e_pi2");
    for (const auto& rule : rules_) {
      std::vector<std::optional<Expr>> assignment(rule.arity);
      if (!match(rule.lhs, e, 0, rule.arity, assignment)) continue;
      std::vector<Expr> args;
      for (auto& a : assignment) args.push_back(*a);
      Expr instance = Expr::apps(Expr::constant(rule.name), args);
      std::pair<Expr, DerivPtr> typed;
      try {
        typed = infer(s, instance);
      } catch (const Reject&) {
        continue;
      } catch (const Mismatch&) {
        continue;
      }
      const Expr& ty = typed.first;
      if (!ty.is(K::Id) || !(ty.child(0) == e)) continue;
      return step(ty.child(1), "e_Id", {typed.second});
    }
    return std::nullopt;
  }

  static bool match(const Expr& pat, const Expr& target, std::size_t depth, std::size_t arity,
                    std::vector<std::optional<Expr>>& out) {
    if (pat.is(K::Var)) {
      if (pat.index() < depth) return target.is(K::Var) && target.index() == pat.index();
      std::size_t slot = arity - 1 - (pat.index() - depth);
      for (std::size_t b = 0; b < depth; ++b)
        if (occurs_free(target, b)) return false;
      Expr value = shift(target, -static_cast<std::ptrdiff_t>(depth), 0);
      if (out[slot]) return *out[slot] == value;
      out[slot] = value;
      return true;
    }
    if (pat.kind() != target.kind()) return false;
    if ((pat.is(K::TypeApp) || pat.is(K::Const)) && pat.name() != target.name()) return false;
    if (pat.children().size() != target.children().size()) return false;
    for (std::size_t i = 0; i < pat.children().size(); ++i)
      if (!match(pat.child(i), target.child(i), depth + pat.binds_in(i), arity, out)) return false;
    return true;
  }

 private:
  const Signature& sig_;
  std::size_t prefix_;
  DerivPtr sig_deriv_;
  std::size_t fuel_;
  std::size_t start_fuel_;
  std::vector<RewriteRule> rules_;
  std::unordered_map<std::string, std::pair<std::vector<Scope>, std::vector<DerivPtr>>> arg_cache_;
};

// ---------------------------------------------------------------- replay

struct Bad {
  std::string msg;
};

class Replayer {
 public:
  explicit Replayer(const Signature& sig) : sig_(sig) {}

  void node(const Derivation& n) {
    const Judgment& j = n.judgment;
    const auto& r = n.rule;
    P_ = &n.premises;
    j_ = &j;
    for (const auto& p : n.premises)
      if (!p) throw Bad{"null premise"};
    if (r == "Sigma_empty") {
      kind(JudgmentKind::Signature, 0);
      if (j.sig_prefix != 0) throw Bad{"nonempty signature"};
      count(0);
    } else if (r == "Sigma_c" || r == "Sigma_a") {
      kind(JudgmentKind::Signature, 0);
      if (j.sig_prefix == 0 || j.sig_prefix > sig_.size()) throw Bad{"bad signature prefix"};
      std::size_t k = j.sig_prefix - 1;
      const Decl& d = sig_.decl(k);
      count(2);
      prem(0, JudgmentKind::Signature, k);
      for (std::size_t i = 0; i < k; ++i)
        if (sig_.decl(i).name == d.name) throw Bad{"name already declared"};
      if (r == "Sigma_c") {
        if (d.kind != Decl::Kind::Term) throw Bad{"not a term declaration"};
        const Judgment& t = prem(1, JudgmentKind::Type, k);
        need_ctx(t, Context{}, {});
        if (!(t.subjects.at(0) == d.type)) throw Bad{"declared type differs"};
      } else {
        if (d.kind != Decl::Kind::Type) throw Bad{"not a type declaration"};
        const Judgment& c = prem(1, JudgmentKind::Context, k);
        need_ctx(c, d.args, {});
      }
    } else if (r == "Gamma_empty") {
      kind(JudgmentKind::Context, 0);
      if (!j.ctx || !j.ctx->empty()) throw Bad{"nonempty context"};
      count(1);
      prem(0, JudgmentKind::Signature, j.sig_prefix);
    } else if (r == "Gamma_x") {
      kind(JudgmentKind::Context, 0);
      if (!j.ctx || j.ctx->empty()) throw Bad{"empty context"};
      count(2);
      Context shorter(j.ctx->begin(), j.ctx->end() - 1);
      need_ctx(prem(0, JudgmentKind::Context), shorter, {});
      const Judgment& t = prem(1, JudgmentKind::Type);
      need_ctx(t, shorter, {});
      if (!(t.subjects.at(0) == j.ctx->back().expr)) throw Bad{"declared type differs"};
    } else if (r == "sigma_empty") {
      kind(JudgmentKind::Subst, 0);
      if (!j.src || !j.src->empty()) throw Bad{"nonempty source"};
      count(1);
      if (!ctx_eq(prem(0, JudgmentKind::Context).ctx, j.ctx)) throw Bad{"context differs"};
    } else if (r == "sigma_x") {
      if (j.kind != JudgmentKind::Subst || !j.src || j.src->empty() || j.subjects.size() != j.src->size())
        throw Bad{"malformed substitution judgment"};
      count(3);
      Context shorter(j.src->begin(), j.src->end() - 1);
      const Judgment& prev = prem(0, JudgmentKind::Subst);
      if (!ctx_eq(prev.ctx, j.ctx) || !ctx_extends(prev.src, shorter, {}) ||
          prev.subjects.size() != shorter.size() ||
          !std::equal(prev.subjects.begin(), prev.subjects.end(), j.subjects.begin()))
        throw Bad{"prefix substitution differs"};
      const Judgment& t = prem(1, JudgmentKind::Type);
      need_ctx(t, shorter, {});
      if (!(t.subjects.at(0) == j.src->back().expr)) throw Bad{"declared type differs"};
      Substitution gamma;
      for (std::size_t i = 0; i < shorter.size(); ++i) gamma.push_back({shorter[i].name, j.subjects[i]});
      typing(2, j.subjects.back(), apply_subst(gamma, j.src->back().expr));
    } else if (r == "T_app") {
      const Expr& ty = kind(JudgmentKind::Type, 1)[0];
      if (!ty.is(K::TypeApp)) throw Bad{"not a type application"};
      const Decl& d = decl(ty.name(), Decl::Kind::Type, j.sig_prefix);
      count(1);
      const Judgment& s = prem(0, JudgmentKind::Subst);
      if (!ctx_eq(s.ctx, j.ctx) || !s.src || !ctx_extends(s.src, d.args, {}) ||
          s.subjects.size() != ty.children().size() ||
          !std::equal(s.subjects.begin(), s.subjects.end(), ty.children().begin()))
        throw Bad{"argument substitution differs"};
    } else if (r == "T_Unit") {
      if (!kind(JudgmentKind::Type, 1)[0].is(K::Unit)) throw Bad{"not Unit"};
      count(1);
      if (!ctx_eq(prem(0, JudgmentKind::Context).ctx, j.ctx)) throw Bad{"context differs"};
    } else if (r == "T_Id") {
      const Expr& ty = kind(JudgmentKind::Type, 1)[0];
      if (!ty.is(K::Id)) throw Bad{"not an identity type"};
      count(2);
      const Judgment& a = prem(0, JudgmentKind::Typing);
      const Judgment& b = prem(1, JudgmentKind::Typing);
      same_ctx(a);
      same_ctx(b);
      if (!(a.subjects.at(0) == ty.child(0)) || !(b.subjects.at(0) == ty.child(1)) ||
          !(a.subjects.at(1) == b.subjects.at(1)))
        throw Bad{"sides are not typed at a common type"};
    } else if (r == "T_Sigma" || r == "T_Pi") {
      const Expr& ty = kind(JudgmentKind::Type, 1)[0];
      if (!ty.is(r == "T_Sigma" ? K::Sigma : K::Pi)) throw Bad{"wrong type former"};
      count(1);
      const Judgment& b = prem(0, JudgmentKind::Type);
      need_ctx(b, *j.ctx, {&ty.child(0), 1});
      if (!(b.subjects.at(0) == ty.child(1))) throw Bad{"body differs"};
    } else if (r == "t_c") {
      const auto& sub = kind(JudgmentKind::Typing, 2);
      if (!sub[0].is(K::Const)) throw Bad{"not a constant"};
      const Decl& d = decl(sub[0].name(), Decl::Kind::Term, j.sig_prefix);
      if (!(d.type == sub[1])) throw Bad{"declared type differs"};
      count(1);
      if (!ctx_eq(prem(0, JudgmentKind::Context).ctx, j.ctx)) throw Bad{"context differs"};
    } else if (r == "t_x") {
      const auto& sub = kind(JudgmentKind::Typing, 2);
      if (!sub[0].is(K::Var) || sub[0].index() >= j.ctx->size()) throw Bad{"not a declared variable"};
      if (!(var_type(*j.ctx, sub[0].index()) == sub[1])) throw Bad{"declared type differs"};
      count(1);
      if (!ctx_eq(prem(0, JudgmentKind::Context).ctx, j.ctx)) throw Bad{"context differs"};
    } else if (r == "t_star") {
      const auto& sub = kind(JudgmentKind::Typing, 2);
      if (!sub[0].is(K::Star) || !sub[1].is(K::Unit)) throw Bad{"not star : Unit"};
      count(1);
      if (!ctx_eq(prem(0, JudgmentKind::Context).ctx, j.ctx)) throw Bad{"context differs"};
    } else if (r == "t_refl") {
      const auto& sub = kind(JudgmentKind::Typing, 2);
      if (!sub[0].is(K::Refl) || !(sub[1] == Expr::id(sub[0].child(0), sub[0].child(0)))) throw Bad{"not refl(s) : Id(s, s)"};
      count(1);
      const Judgment& a = prem(0, JudgmentKind::Typing);
      same_ctx(a);
      if (!(a.subjects.at(0) == sub[0].child(0))) throw Bad{"premise subject differs"};
    } else if (r == "t_pair") {
      const auto& sub = kind(JudgmentKind::Typing, 2);
      if (!sub[0].is(K::Pair) || !sub[1].is(K::Sigma)) throw Bad{"not a pair at a Sigma type"};
      count(3);
      typing(0, sub[0].child(0), sub[1].child(0));
      const Judgment& t = prem(1, JudgmentKind::Type);
      need_ctx(t, *j.ctx, {&sub[1].child(0), 1});
      if (!(t.subjects.at(0) == sub[1].child(1))) throw Bad{"family differs"};
      typing(2, sub[0].child(1), instantiate(sub[1].child(1), sub[0].child(0)));
    } else if (r == "t_pi1" || r == "t_pi2") {
      const auto& sub = kind(JudgmentKind::Typing, 2);
      if (!sub[0].is(r == "t_pi1" ? K::Proj1 : K::Proj2)) throw Bad{"not a projection"};
      count(1);
      const Judgment& u = prem(0, JudgmentKind::Typing);
      same_ctx(u);
      const Expr& sg = u.subjects.at(1);
      if (!(u.subjects.at(0) == sub[0].child(0)) || !sg.is(K::Sigma)) throw Bad{"premise is not u : Sigma"};
      Expr want = r == "t_pi1" ? sg.child(0) : instantiate(sg.child(1), Expr::proj1(sub[0].child(0)));
      if (!(want == sub[1])) throw Bad{"result type differs"};
    } else if (r == "t_lambda") {
      const auto& sub = kind(JudgmentKind::Typing, 2);
      if (!sub[0].is(K::Lam) || !sub[1].is(K::Pi) || !(sub[0].child(0) == sub[1].child(0)))
        throw Bad{"not fun x:S.t : Pi x:S.T"};
      count(1);
      const Judgment& b = prem(0, JudgmentKind::Typing);
      need_ctx(b, *j.ctx, {&sub[0].child(0), 1});
      if (!(b.subjects.at(0) == sub[0].child(1)) || !(b.subjects.at(1) == sub[1].child(1))) throw Bad{"body differs"};
    } else if (r == "t_app") {
      const auto& sub = kind(JudgmentKind::Typing, 2);
      if (!sub[0].is(K::App)) throw Bad{"not an application"};
      count(2);
      const Judgment& f = prem(0, JudgmentKind::Typing);
      same_ctx(f);
      const Expr& pi = f.subjects.at(1);
      if (!(f.subjects.at(0) == sub[0].child(0)) || !pi.is(K::Pi)) throw Bad{"head is not typed by a Pi"};
      typing(1, sub[0].child(1), pi.child(0));
      if (!(instantiate(pi.child(1), sub[0].child(1)) == sub[1])) throw Bad{"result type differs"};
    } else if (r == "e_Id") {
      const auto& sub = kind(JudgmentKind::TermEq, 2);
      count(1);
      const Judgment& v = prem(0, JudgmentKind::Typing);
      same_ctx(v);
      if (!(v.subjects.at(1) == Expr::id(sub[0], sub[1]))) throw Bad{"witness type differs"};
    } else if (r == "e_id-uniq") {
      const auto& sub = kind(JudgmentKind::TermEq, 2);
      count(2);
      const Judgment& a = prem(0, JudgmentKind::Typing);
      const Judgment& b = prem(1, JudgmentKind::Typing);
      same_ctx(a);
      same_ctx(b);
      if (!(a.subjects.at(0) == sub[0]) || !(b.subjects.at(0) == sub[1]) || !a.subjects.at(1).is(K::Id) ||
          !(a.subjects.at(1) == b.subjects.at(1)))
        throw Bad{"not two proofs of one identity"};
    } else if (r == "e_star") {
      const auto& sub = kind(JudgmentKind::TermEq, 2);
      if (!sub[1].is(K::Star)) throw Bad{"right side is not star"};
      count(1);
      typing(0, sub[0], Expr::unit());
    } else if (r == "e_pair") {
      const auto& sub = kind(JudgmentKind::TermEq, 2);
      count(0);
      if (!(sub[0] == Expr::pair(Expr::proj1(sub[1]), Expr::proj2(sub[1])))) throw Bad{"not pair(proj1 u, proj2 u) == u"};
    } else if (r == "e_pi1" || r == "e_pi2") {
      const auto& sub = kind(JudgmentKind::TermEq, 2);
      count(0);
      const Expr& p = sub[0];
      if (!p.is(r == "e_pi1" ? K::Proj1 : K::Proj2) || !p.child(0).is(K::Pair) ||
          !(p.child(0).child(r == "e_pi1" ? 0 : 1) == sub[1]))
        throw Bad{"not a projection of a pair"};
    } else if (r == "e_beta") {
      const auto& sub = kind(JudgmentKind::TermEq, 2);
      count(0);
      if (!sub[0].is(K::App) || !sub[0].child(0).is(K::Lam) ||
          !(instantiate(sub[0].child(0).child(1), sub[0].child(1)) == sub[1]))
        throw Bad{"not a beta step"};
    } else if (r == "e_app") {
      const auto& sub = kind(JudgmentKind::TermEq, 2);
      if (!sub[0].is(K::App) || !sub[1].is(K::App)) throw Bad{"not applications"};
      count(2);
      term_eq(0, sub[0].child(0), sub[1].child(0), *j.ctx, {});
      term_eq(1, sub[0].child(1), sub[1].child(1), *j.ctx, {});
    } else if (r == "e_funcext") {
      const auto& sub = kind(JudgmentKind::TermEq, 2);
      count(3);
      const Judgment& a = prem(0, JudgmentKind::Typing);
      const Judgment& b = prem(1, JudgmentKind::Typing);
      same_ctx(a);
      same_ctx(b);
      const Expr& pi = a.subjects.at(1);
      if (!(a.subjects.at(0) == sub[0]) || !(b.subjects.at(0) == sub[1]) || !pi.is(K::Pi) || !(b.subjects.at(1) == pi))
        throw Bad{"sides not typed at a common Pi type"};
      Expr y = Expr::var(0);
      term_eq(2, Expr::app(shift(sub[0], 1), y), Expr::app(shift(sub[1], 1), y), *j.ctx, {&pi.child(0), 1});
    } else if (r == "e_typing") {
      const auto& sub = kind(JudgmentKind::Typing, 2);
      count(3);
      const Judgment& a = prem(0, JudgmentKind::Typing);
      same_ctx(a);
      term_eq(1, a.subjects.at(0), sub[0], *j.ctx, {});
      const Judgment& e = prem(2, JudgmentKind::TypeEq);
      same_ctx(e);
      if (!(e.subjects.at(0) == a.subjects.at(1)) || !(e.subjects.at(1) == sub[1])) throw Bad{"type equation differs"};
    } else if (r == "E_a") {
      const auto& sub = kind(JudgmentKind::TypeEq, 2);
      if (!sub[0].is(K::TypeApp) || !sub[1].is(K::TypeApp) || sub[0].name() != sub[1].name() ||
          sub[0].children().size() != sub[1].children().size())
        throw Bad{"not applications of one type constant"};
      count(sub[0].children().size());
      for (std::size_t i = 0; i < sub[0].children().size(); ++i) term_eq(i, sub[0].child(i), sub[1].child(i), *j.ctx, {});
    } else if (r == "E_Unit") {
      const auto& sub = kind(JudgmentKind::TypeEq, 2);
      count(0);
      if (!sub[0].is(K::Unit) || !sub[1].is(K::Unit)) throw Bad{"not Unit == Unit"};
    } else if (r == "E_Id") {
      const auto& sub = kind(JudgmentKind::TypeEq, 2);
      if (!sub[0].is(K::Id) || !sub[1].is(K::Id)) throw Bad{"not identity types"};
      count(2);
      term_eq(0, sub[0].child(0), sub[1].child(0), *j.ctx, {});
      term_eq(1, sub[0].child(1), sub[1].child(1), *j.ctx, {});
    } else if (r == "E_Sigma" || r == "E_Pi") {
      const auto& sub = kind(JudgmentKind::TypeEq, 2);
      K former = r == "E_Sigma" ? K::Sigma : K::Pi;
      if (!sub[0].is(former) || !sub[1].is(former)) throw Bad{"wrong type formers"};
      count(2);
      type_eq(0, sub[0].child(0), sub[1].child(0), *j.ctx, {});
      type_eq(1, sub[0].child(1), sub[1].child(1), *j.ctx, {&sub[0].child(0), 1});
    } else if (r == "e_refl") {
      const auto& sub = kind(JudgmentKind::TermEq, 2);
      count(0);
      if (!(sub[0] == sub[1])) throw Bad{"sides differ"};
    } else if (r == "E_refl") {
      const auto& sub = kind(JudgmentKind::TypeEq, 2);
      count(0);
      if (!(sub[0] == sub[1])) throw Bad{"sides differ"};
    } else if (r == "e_sym") {
      const auto& sub = kind(JudgmentKind::TermEq, 2);
      count(1);
      term_eq(0, sub[1], sub[0], *j.ctx, {});
    } else if (r == "e_trans") {
      const auto& sub = kind(JudgmentKind::TermEq, 2);
      count(2);
      const Judgment& a = prem(0, JudgmentKind::TermEq);
      term_eq(0, sub[0], a.subjects.at(1), *j.ctx, {});
      term_eq(1, a.subjects.at(1), sub[1], *j.ctx, {});
    } else if (r == "e_cong_proj1" || r == "e_cong_proj2" || r == "e_cong_refl") {
      const auto& sub = kind(JudgmentKind::TermEq, 2);
      K k = r == "e_cong_proj1" ? K::Proj1 : r == "e_cong_proj2" ? K::Proj2 : K::Refl;
      if (!sub[0].is(k) || !sub[1].is(k)) throw Bad{"wrong term formers"};
      count(1);
      term_eq(0, sub[0].child(0), sub[1].child(0), *j.ctx, {});
    } else if (r == "e_cong_pair") {
      const auto& sub = kind(JudgmentKind::TermEq, 2);
      if (!sub[0].is(K::Pair) || !sub[1].is(K::Pair)) throw Bad{"not pairs"};
      count(2);
      term_eq(0, sub[0].child(0), sub[1].child(0), *j.ctx, {});
      term_eq(1, sub[0].child(1), sub[1].child(1), *j.ctx, {});
    } else if (r == "e_cong_lam") {
      const auto& sub = kind(JudgmentKind::TermEq, 2);
      if (!sub[0].is(K::Lam) || !sub[1].is(K::Lam) || !(sub[0].child(0) == sub[1].child(0)))
        throw Bad{"not functions over one domain"};
      count(1);
      term_eq(0, sub[0].child(1), sub[1].child(1), *j.ctx, {&sub[0].child(0), 1});
    } else {
      throw Bad{"unknown rule"};
    }
  }

 private:
  const Signature& sig_;
  const std::vector<DerivPtr>* P_ = nullptr;
  const Judgment* j_ = nullptr;

  const std::vector<Expr>& kind(JudgmentKind k, std::size_t subjects) const {
    if (j_->kind != k) throw Bad{std::string("conclusion is not a ") + to_string(k) + " judgment"};
    if (j_->subjects.size() != subjects) throw Bad{"wrong number of subjects"};
    if (k != JudgmentKind::Signature && !j_->ctx) throw Bad{"missing context"};
    return j_->subjects;
  }

  void count(std::size_t n) const {
    if (P_->size() != n) throw Bad{"expected " + std::to_string(n) + " premise(s), found " + std::to_string(P_->size())};
  }

  const Judgment& prem(std::size_t i, JudgmentKind k, std::optional<std::size_t> prefix = std::nullopt) const {
    const Judgment& p = (*P_)[i]->judgment;
    if (p.kind != k) throw Bad{"premise " + std::to_string(i) + " is not a " + to_string(k) + " judgment"};
    if (p.sig_prefix != prefix.value_or(j_->sig_prefix)) throw Bad{"premise " + std::to_string(i) + " uses another signature"};
    std::size_t want = k == JudgmentKind::Type ? 1 : (k == JudgmentKind::Typing || k == JudgmentKind::TermEq || k == JudgmentKind::TypeEq) ? 2 : p.subjects.size();
    if (p.subjects.size() != want) throw Bad{"premise " + std::to_string(i) + " has malformed subjects"};
    if (k != JudgmentKind::Signature && !p.ctx) throw Bad{"premise " + std::to_string(i) + " lacks a context"};
    return p;
  }

  void same_ctx(const Judgment& p) const {
    if (!ctx_eq(p.ctx, j_->ctx)) throw Bad{"premise context differs"};
  }

  static void need_ctx(const Judgment& p, const Context& base, std::span<const Expr> tail) {
    if (!ctx_extends(p.ctx, base, tail)) throw Bad{"premise context differs"};
  }

  void typing(std::size_t i, const Expr& t, const Expr& ty) const {
    const Judgment& p = prem(i, JudgmentKind::Typing);
    same_ctx(p);
    if (!(p.subjects[0] == t) || !(p.subjects[1] == ty)) throw Bad{"premise " + std::to_string(i) + " types the wrong thing"};
  }

  void term_eq(std::size_t i, const Expr& a, const Expr& b, const Context& base, std::span<const Expr> tail) const {
    const Judgment& p = prem(i, JudgmentKind::TermEq);
    need_ctx(p, base, tail);
    if (!(p.subjects[0] == a) || !(p.subjects[1] == b)) throw Bad{"premise " + std::to_string(i) + " equates the wrong terms"};
  }

  void type_eq(std::size_t i, const Expr& a, const Expr& b, const Context& base, std::span<const Expr> tail) const {
    const Judgment& p = prem(i, JudgmentKind::TypeEq);
    need_ctx(p, base, tail);
    if (!(p.subjects[0] == a) || !(p.subjects[1] == b)) throw Bad{"premise " + std::to_string(i) + " equates the wrong types"};
  }

  const Decl& decl(const std::string& name, Decl::Kind k, std::size_t prefix) const {
    auto i = sig_.find(name);
    if (!i || *i >= prefix || sig_.decl(*i).kind != k) throw Bad{"'" + name + "' is not declared in the signature prefix"};
    return sig_.decl(*i);
  }
};

}  // namespace

std::optional<std::string> replay(const Signature& sig, const DerivPtr& root) {
  if (!root) return "empty derivation";
  Replayer r(sig);
  std::unordered_set<const Derivation*> done;
  std::vector<const Derivation*> stack{root.get()};
  while (!stack.empty()) {
    const Derivation* d = stack.back();
    stack.pop_back();
    if (!done.insert(d).second) continue;
    try {
      r.node(*d);
    } catch (const Bad& b) {
      return d->rule + ": " + b.msg;
    } catch (const std::exception& e) {
      return d->rule + ": " + e.what();
    }
    for (const auto& p : d->premises) stack.push_back(p.get());
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- Kernel

Kernel::Kernel(Signature sig, KernelOptions opts) : sig_(std::move(sig)), opts_(opts) {
  DerivPtr d = make(Judgment{JudgmentKind::Signature, 0, nullptr, nullptr, {}}, "Sigma_empty");
  sig_derivs_.push_back(d);
  for (std::size_t k = 0; k < sig_.size(); ++k) {
    const Decl& decl = sig_.decl(k);
    Checker c(sig_, k, d, opts_.fuel);
    try {
      for (std::size_t i = 0; i < k; ++i)
        if (sig_.decl(i).name == decl.name) throw Reject{"name already declared"};
      Judgment j{JudgmentKind::Signature, k + 1, nullptr, nullptr, {}};
      if (decl.kind == Decl::Kind::Term) {
        DerivPtr t = c.check_type(c.root(), decl.type);
        d = make(std::move(j), "Sigma_c", {d, t});
      } else {
        d = make(std::move(j), "Sigma_a", {d, c.scope_of(decl.args).deriv});
      }
    } catch (const Reject& r) {
      sig_error_ = "declaration '" + decl.name + "': " + r.msg;
    } catch (const Mismatch& m) {
      sig_error_ = "declaration '" + decl.name + "': " + m.msg;
    } catch (const OutOfFuel&) {
      sig_error_ = "declaration '" + decl.name + "': out of fuel";
    } catch (const Error& e) {
      sig_error_ = "declaration '" + decl.name + "': " + e.what();
    }
    if (sig_error_) break;
    sig_derivs_.push_back(d);
  }
}

namespace {

template <class F>
JudgmentReport run(const Signature& sig, const std::vector<DerivPtr>& sig_derivs,
                   const std::optional<std::string>& sig_error, std::size_t fuel, JudgmentKind kind,
                   const Context& ctx, std::vector<Expr> subjects, F&& body) {
  JudgmentReport rep{kind, ctx, std::move(subjects)};
  if (sig_error) {
    rep.verdict = Verdict::Rejected;
    rep.message = "signature is not well-formed: " + *sig_error;
    return rep;
  }
  Checker c(sig, sig.size(), sig_derivs.back(), fuel);
  try {
    rep.derivation = body(c, rep);
    rep.verdict = Verdict::Accepted;
    rep.trace = trace_of(rep.derivation);
  } catch (const Reject& r) {
    rep.verdict = Verdict::Rejected;
    rep.message = r.msg;
  } catch (const Mismatch& m) {
    rep.verdict = Verdict::Undetermined;
    rep.message = m.msg;
  } catch (const OutOfFuel&) {
    rep.verdict = Verdict::Undetermined;
    rep.message = "out of fuel after " + std::to_string(fuel) + " reduction steps";
  } catch (const Error& e) {
    rep.verdict = Verdict::Rejected;
    rep.message = e.what();
  }
  rep.fuel_used = c.fuel_used();
  return rep;
}

}  // namespace

JudgmentReport Kernel::check_signature() const {
  JudgmentReport rep{JudgmentKind::Signature, {}, {}};
  if (sig_error_) {
    rep.verdict = Verdict::Rejected;
    rep.message = *sig_error_;
    return rep;
  }
  rep.verdict = Verdict::Accepted;
  rep.derivation = sig_derivs_.back();
  rep.trace = trace_of(rep.derivation);
  return rep;
}

JudgmentReport Kernel::check_context(const Context& ctx) const {
  return run(sig_, sig_derivs_, sig_error_, opts_.fuel, JudgmentKind::Context, ctx, {},
             [&](Checker& c, JudgmentReport& rep) -> DerivPtr {
    (void)rep;
    return c.scope_of(ctx).deriv;
  });
}

JudgmentReport Kernel::check_subst(const Context& src, const Context& dst, const Substitution& gamma) const {
  std::vector<Expr> terms;
  for (const auto& g : gamma) terms.push_back(g.expr);
  return run(sig_, sig_derivs_, sig_error_, opts_.fuel, JudgmentKind::Subst, dst, terms,
             [&](Checker& c, JudgmentReport& rep) -> DerivPtr {
    (void)rep;
    auto [scopes, types] = c.scopes_of(src);
    Scope target = c.scope_of(dst);
    for (std::size_t i = 0; i < gamma.size() && i < src.size(); ++i)
      if (gamma[i].name != src[i].name)
        throw Reject{"substitution assigns '" + gamma[i].name + "' where '" + src[i].name + "' is expected"};
    return c.subst_deriv(scopes, types, target, terms);
  });
}

JudgmentReport Kernel::check_type_wf(const Context& ctx, const Expr& ty) const {
  return run(sig_, sig_derivs_, sig_error_, opts_.fuel, JudgmentKind::Type, ctx, {ty},
             [&](Checker& c, JudgmentReport& rep) -> DerivPtr {
    (void)rep;
    return c.check_type(c.scope_of(ctx), ty);
  });
}

JudgmentReport Kernel::infer_type(const Context& ctx, const Expr& t) const {
  return run(sig_, sig_derivs_, sig_error_, opts_.fuel, JudgmentKind::Typing, ctx, {t},
             [&](Checker& c, JudgmentReport& rep) -> DerivPtr {
    auto [ty, d] = c.infer(c.scope_of(ctx), t);
    rep.type = ty;
    rep.subjects.push_back(ty);
    return d;
  });
}

JudgmentReport Kernel::check_term(const Context& ctx, const Expr& t, const Expr& ty) const {
  return run(sig_, sig_derivs_, sig_error_, opts_.fuel, JudgmentKind::Typing, ctx, std::vector<Expr>{t, ty},
             [&](Checker& c, JudgmentReport& rep) -> DerivPtr {
    (void)rep;
    Scope s = c.scope_of(ctx);
    c.check_type(s, ty);
    return c.check(s, t, ty);
  });
}

JudgmentReport Kernel::equal_terms(const Context& ctx, const Expr& a, const Expr& b,
                                   const std::optional<Expr>& hint) const {
  return run(sig_, sig_derivs_, sig_error_, opts_.fuel, JudgmentKind::TermEq, ctx, std::vector<Expr>{a, b},
             [&](Checker& c, JudgmentReport& rep) -> DerivPtr {
    (void)rep;
    Scope s = c.scope_of(ctx);
    // A pair only checks, so take the type from the other side when needed.
    bool from_rhs = a.is(K::Pair) && !b.is(K::Pair);
    Expr ty = c.infer(s, from_rhs ? b : a).first;
    c.check(s, from_rhs ? a : b, ty);
    DerivPtr witness;
    if (hint) {
      try {
        witness = c.check(s, *hint, Expr::id(a, b));
      } catch (const Reject& r) {
        throw Reject{"ill-typed hint: " + r.msg};
      } catch (const Mismatch& m) {
        throw Reject{"ill-typed hint: " + m.msg};
      }
    }
    try {
      return c.conv(s, a, b, ty);
    } catch (const Mismatch&) {
      if (!witness) throw;
      return make(c.judgment(JudgmentKind::TermEq, s, {a, b}), "e_Id", {witness});
    }
  });
}

JudgmentReport Kernel::equal_types(const Context& ctx, const Expr& a, const Expr& b) const {
  return run(sig_, sig_derivs_, sig_error_, opts_.fuel, JudgmentKind::TypeEq, ctx, std::vector<Expr>{a, b},
             [&](Checker& c, JudgmentReport& rep) -> DerivPtr {
    (void)rep;
    Scope s = c.scope_of(ctx);
    c.check_type(s, a);
    c.check_type(s, b);
    return c.type_eq(s, a, b);
  });
}

NormalizeResult Kernel::normalize(const Context& ctx, const Expr& e) const { return normalize(ctx, e, opts_.fuel); }

NormalizeResult Kernel::normalize(const Context& ctx, const Expr& e, std::size_t fuel) const {
  if (sig_error_) throw ValidationError("signature is not well-formed: " + *sig_error_);
  Checker c(sig_, sig_.size(), sig_derivs_.back(), fuel);
  Scope s;
  try {
    s = c.scope_of(ctx);
  } catch (const Reject& r) {
    throw ValidationError(r.msg);
  } catch (const Mismatch& m) {
    throw ValidationError(m.msg);
  } catch (const OutOfFuel&) {
    return {e, c.refl(c.root(), e), c.fuel_used(), true};
  }
  try {
    auto [out, d] = c.nf(s, e);
    return {out, d ? d : c.refl(s, e), c.fuel_used(), false};
  } catch (const OutOfFuel&) {
    return {e, c.refl(s, e), c.fuel_used(), true};
  } catch (const Reject& r) {
    throw ValidationError(r.msg);
  } catch (const Mismatch& m) {
    throw ValidationError(m.msg);
  }
}

JudgmentReport Kernel::run_goal(const Goal& goal) const {
  switch (goal.kind) {
    case Goal::Kind::CheckType: return check_type_wf(goal.ctx, goal.lhs);
    case Goal::Kind::Infer: return infer_type(goal.ctx, goal.lhs);
    case Goal::Kind::CheckEqual: return equal_terms(goal.ctx, goal.lhs, goal.rhs, goal.hint);
    case Goal::Kind::CheckInhabited: return check_term(goal.ctx, goal.rhs, goal.lhs);
  }
  return {};
}

}  // namespace mltt
