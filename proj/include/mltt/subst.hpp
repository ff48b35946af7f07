#pragma once

#include <cstddef>
#include <vector>

#include "mltt/syntax.hpp"

namespace mltt {

/// Adds `by` to every variable index >= `cutoff`.
Expr shift(const Expr& e, std::ptrdiff_t by, std::size_t cutoff = 0);

/// Applies gamma (assigning terms over some Γ' to the variables of a context
/// Δ, in order) to an expression over Δ. Throws ValidationError when e has a
/// free variable outside the domain of gamma.
Expr apply_subst(const Substitution& gamma, const Expr& e);

/// x := apply_subst(gamma, delta(x)) for every x of delta, in order.
Substitution compose_subst(const Substitution& delta, const Substitution& gamma);

/// x := x for every variable of ctx.
Substitution id_subst(const Context& ctx);

/// body[x := s] for a body under one binder: Var 0 becomes s, others move down.
Expr instantiate(const Expr& body, const Expr& s);

/// Whether variable `index` (relative to the outside of e) occurs free in e.
bool occurs_free(const Expr& e, std::size_t index);

/// One past the largest free variable index of e (0 for closed expressions).
std::size_t free_var_bound(const Expr& e);

/// Type of variable `index` in ctx, as an expression over the whole ctx.
Expr var_type(const Context& ctx, std::size_t index);

}  // namespace mltt
