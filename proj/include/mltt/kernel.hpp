#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mltt/syntax.hpp"

namespace mltt {

/// The seven judgment forms.
enum class JudgmentKind { Signature, Context, Subst, Type, Typing, TermEq, TypeEq };

const char* to_string(JudgmentKind k);

using ContextRef = std::shared_ptr<const Context>;

/// Subjects by kind: Signature, Context: none; Subst: the assigned terms;
/// Type: [T]; Typing: [t, T]; TermEq: [s, s']; TypeEq: [S, S'].
/// `ctx` is Γ (for Subst the target Γ'); `src` is the source context of a Subst.
struct Judgment {
  JudgmentKind kind;
  std::size_t sig_prefix = 0;  ///< judgments are made over the first sig_prefix declarations
  ContextRef ctx;
  ContextRef src;
  std::vector<Expr> subjects;
};

struct Derivation;
using DerivPtr = std::shared_ptr<const Derivation>;

/// One rule instance. Premises may be shared between nodes (context
/// derivations in particular), so a derivation is a DAG.
struct Derivation {
  Judgment judgment;
  std::string rule;
  std::vector<DerivPtr> premises;
};

/// Rule names in pre-order, visiting each shared node once.
std::vector<std::string> trace_of(const DerivPtr& d);
std::size_t derivation_size(const DerivPtr& d);

/// Re-checks every node of `d` against the literal shape of its rule.
/// Returns a description of the first bad node, or nullopt if all are valid.
std::optional<std::string> replay(const Signature& sig, const DerivPtr& d);

/// Rules accepted by replay in addition to the figure rules: reflexivity,
/// symmetry, transitivity and congruences that the calculus leaves admissible.
const std::vector<std::string>& admissible_rules();

enum class Verdict { Accepted, Rejected, Undetermined };
const char* to_string(Verdict v);

struct JudgmentReport {
  JudgmentKind kind;
  Context ctx;
  std::vector<Expr> subjects;
  Verdict verdict = Verdict::Rejected;
  std::vector<std::string> trace;
  std::string message;         ///< reason for a rejected or undetermined verdict
  DerivPtr derivation;         ///< set iff accepted
  std::optional<Expr> type;    ///< inferred type (infer_type)
  std::size_t fuel_used = 0;

  bool accepted() const { return verdict == Verdict::Accepted; }
};

struct KernelOptions {
  std::size_t fuel = 10000;  ///< reduction steps per judgment
};

struct NormalizeResult {
  Expr result;
  DerivPtr derivation;  ///< TermEq(e, result)
  std::size_t steps = 0;
  bool fuel_exhausted = false;  ///< result is then the input unchanged
};

/// Bidirectional checker producing derivations. Type equality is structural;
/// term equality combines normalization (β, π, rewrite-marked axioms),
/// type-directed unit/identity/function/pair rules and `by` witnesses.
/// Immutable after construction; safe to share between threads.
class Kernel {
 public:
  explicit Kernel(Signature sig, KernelOptions opts = {});

  const Signature& signature() const { return sig_; }
  const KernelOptions& options() const { return opts_; }

  JudgmentReport check_signature() const;
  JudgmentReport check_context(const Context& ctx) const;
  JudgmentReport check_subst(const Context& src, const Context& dst, const Substitution& gamma) const;
  JudgmentReport check_type_wf(const Context& ctx, const Expr& ty) const;
  JudgmentReport infer_type(const Context& ctx, const Expr& t) const;
  JudgmentReport check_term(const Context& ctx, const Expr& t, const Expr& ty) const;
  JudgmentReport equal_terms(const Context& ctx, const Expr& s, const Expr& s2,
                             const std::optional<Expr>& hint = std::nullopt) const;
  JudgmentReport equal_types(const Context& ctx, const Expr& a, const Expr& b) const;
  NormalizeResult normalize(const Context& ctx, const Expr& e) const;
  NormalizeResult normalize(const Context& ctx, const Expr& e, std::size_t fuel) const;

  JudgmentReport run_goal(const Goal& goal) const;

 private:
  Signature sig_;
  KernelOptions opts_;
  std::vector<DerivPtr> sig_derivs_;  ///< sig_derivs_[k] derives the first k declarations
  std::optional<std::string> sig_error_;
};

}  // namespace mltt
