#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mltt/indexed.hpp"
#include "mltt/lcc.hpp"
#include "mltt/syntax.hpp"

namespace mltt {

/// A model of a signature over a finite poset.
///
/// types[F] is an indexed set over ∫⟦Δ⟧ for the argument context Δ of F;
/// terms[c] is a section of ⟦T⟧ over ∫⟦·⟧ for the declared type T of c.
struct Model {
  Signature sig;
  FinPoset base;
  std::map<std::string, IndexedSet> types;
  std::map<std::string, Section> terms;
};

/// Parses and validates a JSON model file against `sig`. Errors name the
/// offending constant and the witness (key, pair of points, or value).
Model parse_model(const Signature& sig, const std::string& json_text);
Model load_model(const Signature& sig, const std::string& path);

/// JSON text with total data, accepted by parse_model.
std::string print_model(const Model& m);

struct InterpOptions {
  std::size_t section_limit = kDefaultSectionLimit;  ///< per Π fiber
  /// Mutation hook: interpret λ without split, by a constant-argument family.
  bool mutant_lambda = false;
};

/// ⟦−⟧ for one model, memoizing contexts, types and dependent products.
/// Well-formedness of the input is assumed (the kernel is the judge); the
/// lcc constructors still validate every object they build, so ill-typed
/// input surfaces as ValidationError.
class Interpreter {
 public:
  explicit Interpreter(Model m, InterpOptions opts = {});

  const Model& model() const { return m_; }

  /// Over base: ⟦·⟧ = 1, ⟦Γ, x:S⟧ = ⟦Γ⟧⋉⟦S⟧.
  const IndexedSet& context(const Context& ctx);
  /// ∫⟦Γ⟧.
  const FinPoset& total(const Context& ctx);
  /// ⟦dst⟧ -> ⟦src⟧ for gamma assigning terms over dst to the variables of src.
  NatTrans subst(const Context& src, const Context& dst, const Substitution& gamma);
  /// Over ∫⟦ctx⟧.
  const IndexedSet& type(const Context& ctx, const Expr& s);
  /// Section of ⟦S⟧ for the type S the kernel infers for t.
  Section term(const Context& ctx, const Expr& t);
  /// Section of ⟦S⟧ for t checked against S (needed for pairs).
  Section term(const Context& ctx, const Expr& t, const Expr& s);

  /// The kernel's inferred type of t, without derivations.
  Expr infer(const Context& ctx, const Expr& t) const;

 private:
  struct Key {
    std::vector<Expr> ctx;
    Expr e;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };
  struct CtxSem {
    IndexedSet set;
    FinPoset total;
  };

  const CtxSem& ctx_sem(const Context& ctx);
  const DepProd& dep_prod_of(const Context& ctx, const Expr& pi);
  Section build_term(const Context& ctx, const Expr& t, const Expr* expected);
  Section lambda(const Context& ctx, const Expr& t, const Expr& pi_type);
  Elem const_value(const std::string& name, const Elem& point);

  Model m_;
  InterpOptions opts_;
  FinPoset closed_total_;  ///< ∫⟦·⟧
  std::unordered_map<Key, CtxSem, KeyHash> contexts_;
  std::unordered_map<Key, IndexedSet, KeyHash> types_;
  std::unordered_map<Key, std::unique_ptr<DepProd>, KeyHash> prods_;
};

IndexedSet interp_context(const Model& m, const Context& ctx);
NatTrans interp_subst(const Model& m, const Context& src, const Context& dst,
                      const Substitution& gamma);
IndexedSet interp_type(const Model& m, const Context& ctx, const Expr& s);
Section interp_term(const Model& m, const Context& ctx, const Expr& t);

/// One instance of the substitution theorem: gamma from src into dst, and
/// optionally a type and a term over src and an outer substitution delta
/// assigning terms over src to the variables of `outer`.
struct SubstInstance {
  Context src;
  Context dst;
  Substitution gamma;
  std::optional<Expr> type;
  std::optional<Expr> term;  ///< of type `type` when both are given
  Context outer;
  std::optional<Substitution> delta;
};

struct ClauseResult {
  std::string clause;  ///< "composition", "type", "term" or "aux"
  std::optional<std::string> counterexample;
  bool ok() const { return !counterexample; }
};

/// Checks pointwise whichever clauses apply: ⟦δ[γ]⟧ = ⟦δ⟧∘⟦γ⟧,
/// ⟦γ̄S⟧ = F(⟦γ⟧);⟦S⟧, ⟦γ̄s⟧ = ⟦γ⟧·⟦s⟧ and ⟦γ, x:=x⟧ = pbf(⟦γ⟧, ⟦S⟧).
std::vector<ClauseResult> check_substitution_theorem(Interpreter& in, const SubstInstance& inst);

/// First point where two indexed sets over the same base disagree, printed
/// with both values; nullopt when equal.
std::optional<std::string> diff_indexed(const IndexedSet& lhs, const IndexedSet& rhs);
std::optional<std::string> diff_sections(const Section& lhs, const Section& rhs);
std::optional<std::string> diff_nat(const NatTrans& lhs, const NatTrans& rhs);

}  // namespace mltt
