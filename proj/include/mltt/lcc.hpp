#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mltt/indexed.hpp"

namespace mltt {

/// h*B together with the comparison map pbf(h,B): A2⋉h*B -> A1⋉B.
struct Pullback {
  IndexedSet set;
  NatTrans pbf;
};

/// Pullback of B (over ∫A1) along h: A2 -> A1, by precomposition with F(h).
Pullback pullback(const NatTrans& h, const IndexedSet& b);

/// h*beta: h*B -> h*B' for beta: B -> B' over ∫A1.
NatTrans pullback_nat(const NatTrans& h, const NatTrans& beta);

/// Reassociation ∫B -> ∫(A⋉B), ((p,a),b) |-> (p,(a,b)).
MonotoneMap assoc_map(const IndexedSet& a, const IndexedSet& b);

/// Σ_B C over ∫A, for B over ∫A and C over ∫(A⋉B). Fibers are pairs (b,c).
IndexedSet dep_sum(const IndexedSet& a, const IndexedSet& b, const IndexedSet& c);

/// Yoneda-restricted data at one x = (p,a) of ∫A.
struct AuxRestriction {
  IndexedSet ax;  ///< {()} above p, empty elsewhere
  NatTrans ix;    ///< ax -> A, () |-> A(p->p')(a)
  IndexedSet bx;  ///< ix*B
  IndexedSet cx;  ///< (pbf ix B)*C
  FinPoset dx;    ///< ∫(ax⋉bx), elements (p',((),b'))
};

AuxRestriction aux_restriction(const IndexedSet& a, const IndexedSet& b, const IndexedSet& c,
                               std::size_t x);

/// Π_B C over ∫A together with the per-point restrictions used by split/unsplit.
///
/// The fiber at x is the set of sections of cx, each encoded as the left-nested
/// family ((((),(y1,v1)),(y2,v2))...) with keys y in dx order.
struct DepProd {
  IndexedSet a;
  IndexedSet b;
  IndexedSet c;
  IndexedSet set;
  std::vector<AuxRestriction> aux;  ///< indexed like ∫A
};

DepProd dep_prod(const IndexedSet& a, const IndexedSet& b, const IndexedSet& c,
                 std::size_t limit = kDefaultSectionLimit);

/// Family encoding helpers for Π fibers.
Elem encode_family(const std::vector<std::pair<Elem, Elem>>& entries);
std::vector<std::pair<Elem, Elem>> decode_family(const Elem& family);
/// Value of a family at key y; throws ValidationError if y is not a key.
Elem family_at(const Elem& family, const Elem& y);

/// Currying: a section of C over ∫(A⋉B) to a section of Π_B C.
Section split(const DepProd& pi, const Section& t);
/// Uncurrying, inverse to split.
Section unsplit(const DepProd& pi, const Section& f);

/// (f·a)_q = a_{f(q)}; the owner becomes f;owner.
Section compose_section(const MonotoneMap& f, const Section& a);

// ---------------------------------------------------------------------------
// Per-instance law checks. Each returns nullopt on success or a description of
// the counterexample. Exhaustive sub-enumerations throw SizeLimitExceeded when
// they exceed `limit`; callers count such instances as skipped.

/// Square commutes, and cones from every test object factor uniquely.
std::optional<std::string> check_pullback_square(const NatTrans& h, const IndexedSet& b,
                                                 const std::vector<IndexedSet>& test_objects,
                                                 std::size_t limit);

/// id*B = B with identity comparison; (g∘h)*B = h*(g*B) with composite comparison.
std::optional<std::string> check_pullback_coherence(const NatTrans& g, const NatTrans& h,
                                                    const IndexedSet& b);

/// h*B is a valid functor; h* preserves identities and composition of endomorphisms of B.
std::optional<std::string> check_pullback_functor(const NatTrans& h, const IndexedSet& b,
                                                  std::size_t limit);

/// Hom(Σ_B C, D) and Hom(C, grop(B)*D) in bijection via the transposition map.
std::optional<std::string> check_sigma_adjunction(const IndexedSet& a, const IndexedSet& b,
                                                  const IndexedSet& c, const IndexedSet& d,
                                                  std::size_t limit);

/// Hom(grop(B)*D, C) and Hom(D, Π_B C) in bijection via the transposition map.
std::optional<std::string> check_pi_adjunction(const IndexedSet& a, const IndexedSet& b,
                                               const IndexedSet& c, const IndexedSet& d,
                                               std::size_t limit);

/// g*(Σ_B C) = Σ_{g*B}((pbf g B)*C) exactly.
std::optional<std::string> check_beck_chevalley_sigma(const NatTrans& g, const IndexedSet& b,
                                                      const IndexedSet& c);

/// g*(Π_B C) = Π_{g*B}((pbf g B)*C) exactly.
std::optional<std::string> check_beck_chevalley_pi(const NatTrans& g, const IndexedSet& b,
                                                   const IndexedSet& c, std::size_t limit);

/// split and unsplit are mutually inverse on all sections.
std::optional<std::string> check_split_inverse(const IndexedSet& a, const IndexedSet& b,
                                               const IndexedSet& c, std::size_t limit);

/// split of the pulled-back section at x' equals split of the section at F(g)(x').
std::optional<std::string> check_split_coherence(const NatTrans& g, const IndexedSet& b,
                                                 const IndexedSet& c, std::size_t limit);

}  // namespace mltt
