#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mltt/enumerate.hpp"
#include "mltt/interp.hpp"
#include "mltt/kernel.hpp"

namespace mltt {

// ---------------------------------------------------------------------------
// Models

struct GeneratedModel {
  Model model;
  bool fallback = false;     ///< the terminal model, after the retry budget ran out
  std::size_t attempts = 0;  ///< random candidates drawn
};

/// Every type constant interpreted by the constant singleton family, so every
/// type denotes singletons and every constant has exactly one section.
Model terminal_model(const Signature& sig, const FinPoset& base);

/// Random poset and functorial fibers in declaration order, constants by a
/// uniform choice among all sections. Redraws when a constant's type has no
/// section; after `retries` candidates falls back to the terminal model over
/// the last drawn poset. Throws ValidationError("no model within bounds") if
/// even that is out of bounds (max_fiber == 0 with a type constant).
GeneratedModel gen_random_model(const Signature& sig, std::uint64_t seed, std::size_t max_poset,
                                std::size_t max_fiber, std::size_t retries = 64);

/// Calls `visit` on every model with a poset of at most `max_poset` elements
/// (one per isomorphism class, smallest first) and fibers of at most
/// `max_fiber` elements, in a fixed order. Returns false iff stopped early.
bool for_each_model(const Signature& sig, std::size_t max_poset, std::size_t max_fiber,
                    const std::function<bool(const Model&)>& visit);

// ---------------------------------------------------------------------------
// Type-directed synthesis

/// Builds well-typed syntax by inverting the typing rules: introduction forms
/// for Unit, Id(s,s), Σ and Π goals, and otherwise a variable or constant
/// whose codomain matches the goal, with arguments solved by first-order
/// matching or synthesized in turn. Results are meant to be re-checked.
class Synthesizer {
 public:
  Synthesizer(const Signature& sig, Rng& rng) : sig_(sig), rng_(rng) {}

  std::optional<Expr> term(const Context& ctx, const Expr& goal, int depth);
  Expr type(const Context& ctx, int depth);
  Context context(std::size_t max_size, int depth);
  /// Terms over dst for the variables of src, in order.
  std::optional<Substitution> subst(const Context& src, const Context& dst, int depth);
  /// Some variable or constant application whose type is an identity type.
  std::optional<Expr> witness(const Context& ctx, int depth);

 private:
  std::optional<Expr> from_head(const Context& ctx, const Expr& head, const Expr& head_type,
                                const Expr& goal, int depth);
  std::vector<std::pair<Expr, Expr>> heads(const Context& ctx) const;

  const Signature& sig_;
  Rng& rng_;
};

// ---------------------------------------------------------------------------
// LCC law suite

const std::vector<std::string>& law_names();

struct LawOptions {
  std::optional<std::string> only;  ///< run a single law
  /// Families below the top level (B, C, D, and the sources of maps g, h) are
  /// enumerated exhaustively when there are at most this many, otherwise this
  /// many are sampled.
  std::size_t family_cap = 3;
  std::size_t test_objects_cap = 8;  ///< cones checked by the pullback square law
  std::size_t limit = 1u << 14;      ///< per-instance enumeration budget
  std::uint64_t seed = 1;
  std::size_t threads = 0;  ///< 0: hardware concurrency
  /// Mutation hook: corrupt one identity transport of every B with a fiber of
  /// two or more elements before the pullback functor law.
  bool corrupt_transport = false;
};

struct LawStats {
  std::string name;
  std::size_t instances = 0;
  std::size_t skipped = 0;   ///< exceeded the enumeration budget
  bool exhaustive = true;    ///< no family was sampled
  std::optional<std::string> counterexample;
};

struct LawReport {
  std::size_t max_poset = 0;
  std::size_t max_fiber = 0;
  std::vector<std::size_t> posets;     ///< posets up to iso, per size 1..max_poset
  std::vector<std::size_t> families;   ///< indexed sets A, per size 1..max_poset
  std::vector<LawStats> laws;
  bool ok() const;
};

LawReport run_lcc_laws(std::size_t max_poset, std::size_t max_fiber, const LawOptions& opts = {});

/// F/I round trips on every indexed set and on natural transformations
/// between them, and |sections| = |A(p0)| when p0 is least.
struct IsoReport {
  std::size_t indexed_sets = 0;
  std::size_t nat_trans = 0;
  std::size_t least_element_cases = 0;
  std::optional<std::string> counterexample;
  bool ok() const { return !counterexample; }
};

IsoReport run_iso_suite(std::size_t max_poset, std::size_t max_fiber, std::size_t maps_per_set = 4);

// ---------------------------------------------------------------------------
// Soundness fuzzing

struct SoundnessOptions {
  std::size_t max_poset = 2;
  std::size_t max_fiber = 2;
  int depth = 4;
  std::size_t terms_per_iteration = 6;
  std::size_t fuel = 10000;
  std::size_t threads = 0;
  InterpOptions interp;
};

struct FuzzFailure {
  std::size_t iteration = 0;
  std::string check;   ///< well-typed, equality, subst:<clause>, beta, pi, eta
  std::string detail;  ///< context, expressions and the differing point
  std::string model;   ///< model file text
};

struct SoundnessReport {
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  std::string theory;  ///< theory source reproducing the signature
  std::map<std::string, std::size_t> checks;  ///< instances per check
  std::size_t skipped = 0;  ///< instances abandoned at the enumeration budget
  std::size_t fallback_models = 0;
  std::vector<FuzzFailure> failures;  ///< in iteration order
  bool ok() const { return failures.empty(); }
};

SoundnessReport run_soundness_fuzz(const Signature& sig, std::uint64_t seed, std::size_t iterations,
                                   const SoundnessOptions& opts = {});

// ---------------------------------------------------------------------------
// Countermodels

struct CountermodelResult {
  std::optional<Model> model;  ///< first model where S has no section
  std::size_t models_tried = 0;
  bool exhausted() const { return !model; }
};

CountermodelResult search_countermodel(const Signature& sig, const Context& ctx, const Expr& s,
                                       std::size_t max_poset, std::size_t max_fiber);

// ---------------------------------------------------------------------------
// Reports

std::string to_json(const LawReport& r);
std::string to_text(const LawReport& r);
std::string to_json(const IsoReport& r);
std::string to_text(const IsoReport& r);
std::string to_json(const SoundnessReport& r);
std::string to_text(const SoundnessReport& r);
std::string to_json(const CountermodelResult& r, const Context& ctx, const Expr& s);
std::string to_text(const CountermodelResult& r, const Context& ctx, const Expr& s);

}  // namespace mltt
