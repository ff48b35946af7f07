#include "mltt/subst.hpp"

#include <functional>
#include <string>

#include "mltt/error.hpp"

namespace mltt {

namespace {

// Rebuilds e, replacing each free variable (index >= depth) via `on_var(index, depth)`.
Expr map_vars(const Expr& e, std::size_t depth,
              const std::function<Expr(const Expr&, std::size_t)>& on_var) {
  if (e.is(Expr::Kind::Var)) return e.index() >= depth ? on_var(e, depth) : e;
  auto kids = e.children();
  if (kids.empty()) return e;
  std::vector<Expr> out;
  out.reserve(kids.size());
  bool changed = false;
  for (std::size_t i = 0; i < kids.size(); ++i) {
    out.push_back(map_vars(kids[i], depth + e.binds_in(i), on_var));
    changed = changed || !out.back().same_node(kids[i]);
  }
  return changed ? e.with_children(std::move(out)) : e;
}

}  // namespace

Expr shift(const Expr& e, std::ptrdiff_t by, std::size_t cutoff) {
  if (by == 0) return e;
  return map_vars(e, cutoff, [&](const Expr& v, std::size_t) {
    auto target = static_cast<std::ptrdiff_t>(v.index()) + by;
    if (target < 0) throw ValidationError("shift would make a variable index negative");
    return Expr::var(static_cast<std::size_t>(target), v.name());
  });
}

Expr apply_subst(const Substitution& gamma, const Expr& e) {
  const std::size_t n = gamma.size();
  return map_vars(e, 0, [&](const Expr& v, std::size_t depth) {
    const std::size_t free = v.index() - depth;
    if (free >= n)
      throw ValidationError("unbound variable" + (v.name().empty() ? "" : " '" + v.name() + "'") +
                            " in substitution of " + std::to_string(n) + " terms");
    return shift(gamma[n - 1 - free].expr, static_cast<std::ptrdiff_t>(depth));
  });
}

Substitution compose_subst(const Substitution& delta, const Substitution& gamma) {
  Substitution out;
  out.reserve(delta.size());
  for (const auto& [name, term] : delta) out.push_back({name, apply_subst(gamma, term)});
  return out;
}

Substitution id_subst(const Context& ctx) {
  Substitution out;
  const std::size_t n = ctx.size();
  for (std::size_t i = 0; i < n; ++i) out.push_back({ctx[i].name, Expr::var(n - 1 - i, ctx[i].name)});
  return out;
}

Expr instantiate(const Expr& body, const Expr& s) {
  return map_vars(body, 0, [&](const Expr& v, std::size_t depth) {
    if (v.index() == depth) return shift(s, static_cast<std::ptrdiff_t>(depth));
    return Expr::var(v.index() - 1, v.name());
  });
}

bool occurs_free(const Expr& e, std::size_t index) {
  std::function<bool(const Expr&, std::size_t)> go = [&](const Expr& x, std::size_t depth) {
    if (x.is(Expr::Kind::Var)) return x.index() == index + depth;
    auto kids = x.children();
    for (std::size_t i = 0; i < kids.size(); ++i)
      if (go(kids[i], depth + x.binds_in(i))) return true;
    return false;
  };
  return go(e, 0);
}

std::size_t free_var_bound(const Expr& e) {
  std::function<std::size_t(const Expr&, std::size_t)> go = [&](const Expr& x, std::size_t depth) {
    if (x.is(Expr::Kind::Var)) return x.index() >= depth ? x.index() - depth + 1 : std::size_t{0};
    std::size_t best = 0;
    auto kids = x.children();
    for (std::size_t i = 0; i < kids.size(); ++i)
      best = std::max(best, go(kids[i], depth + x.binds_in(i)));
    return best;
  };
  return go(e, 0);
}

Expr var_type(const Context& ctx, std::size_t index) {
  if (index >= ctx.size()) throw ValidationError("variable index out of context");
  return shift(ctx[ctx.size() - 1 - index].expr, static_cast<std::ptrdiff_t>(index + 1));
}

}  // namespace mltt
