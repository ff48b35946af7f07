#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mltt/elem.hpp"

namespace mltt {

/// Default cap on enumerated sections; exceeding it throws SizeLimitExceeded.
inline constexpr std::size_t kDefaultSectionLimit = 1u << 16;

class IndexedSet;

/// Finite partial order whose elements are canonical values.
///
/// Elements are kept sorted, so two posets built from the same data compare
/// equal regardless of construction order.
class FinPoset {
 public:
  FinPoset();

  /// Evaluates `leq` on every ordered pair and validates the partial-order axioms.
  static FinPoset from_relation(std::vector<Elem> elems,
                                const std::function<bool(const Elem&, const Elem&)>& leq);
  /// Closes `pairs` under reflexivity and transitivity, then checks antisymmetry.
  static FinPoset from_pairs(std::vector<Elem> elems,
                             const std::vector<std::pair<Elem, Elem>>& pairs);

  std::size_t size() const;
  const Elem& elem(std::size_t i) const;
  std::span<const Elem> elems() const;
  std::optional<std::size_t> find(const Elem& e) const;
  std::size_t index_of(const Elem& e) const;
  bool leq(std::size_t i, std::size_t j) const;
  /// Indices j with i <= j, including i, ascending.
  std::span<const std::size_t> above(std::size_t i) const;
  /// Indices j with j <= i, including i, ascending.
  std::span<const std::size_t> below(std::size_t i) const;
  /// Indices j with j < i and nothing strictly between.
  std::span<const std::size_t> lower_covers(std::size_t i) const;
  /// A linear extension: every index appears after all indices below it.
  std::span<const std::size_t> linear_extension() const;
  std::optional<std::size_t> least() const;

  std::string to_string() const;

  friend bool operator==(const FinPoset& a, const FinPoset& b);

 private:
  struct Data;
  explicit FinPoset(std::shared_ptr<const Data> d) : d_(std::move(d)) {}
  /// Trusted path: `elems` sorted and unique, `leq` already a partial order.
  static FinPoset from_matrix(std::vector<Elem> elems, std::vector<char> leq);
  friend FinPoset grothendieck(const IndexedSet& a);
  std::shared_ptr<const Data> d_;
};

/// A functor from a finite poset to finite sets of canonical values.
///
/// Fibers are sorted; transports are stored for every comparable pair as maps
/// between fiber indices. Construction validates functoriality eagerly.
class IndexedSet {
 public:
  using FiberFn = std::function<std::vector<Elem>(std::size_t)>;
  using TransportFn = std::function<Elem(std::size_t from, std::size_t to, const Elem&)>;

  IndexedSet();

  /// `transport` is called for every pair i <= j, including i == j.
  static IndexedSet build(FinPoset base, const FiberFn& fiber, const TransportFn& transport);

  const FinPoset& base() const;
  std::span<const Elem> fiber(std::size_t i) const;
  std::size_t fiber_size(std::size_t i) const;
  std::optional<std::uint32_t> find(std::size_t i, const Elem& a) const;
  std::uint32_t index_of(std::size_t i, const Elem& a) const;
  std::uint32_t transport_index(std::size_t i, std::size_t j, std::uint32_t k) const;
  Elem transport(std::size_t i, std::size_t j, const Elem& a) const;
  std::size_t total_size() const;

  /// Re-checks identity and composition laws; returns a witness on failure.
  std::optional<std::string> functoriality_witness() const;

  /// Copy with one transport entry overwritten and no validation (mutation testing).
  IndexedSet with_corrupted_transport(std::size_t i, std::size_t j, std::uint32_t k,
                                      std::uint32_t target) const;

  std::string to_string() const;

  friend bool operator==(const IndexedSet& a, const IndexedSet& b);
  friend FinPoset grothendieck(const IndexedSet& a);

 private:
  struct Data;
  explicit IndexedSet(std::shared_ptr<const Data> d) : d_(std::move(d)) {}
  std::shared_ptr<const Data> d_;
};

/// Natural transformation between indexed sets over the same base.
class NatTrans {
 public:
  using ComponentFn = std::function<Elem(std::size_t p, const Elem& a)>;

  NatTrans() = default;
  static NatTrans build(IndexedSet src, IndexedSet dst, const ComponentFn& component);
  static NatTrans from_indices(IndexedSet src, IndexedSet dst,
                               std::vector<std::vector<std::uint32_t>> components);
  static NatTrans identity(const IndexedSet& a);

  const IndexedSet& src() const { return src_; }
  const IndexedSet& dst() const { return dst_; }
  std::uint32_t apply_index(std::size_t p, std::uint32_t k) const { return components_[p][k]; }
  Elem apply(std::size_t p, const Elem& a) const;
  const std::vector<std::vector<std::uint32_t>>& components() const { return components_; }

  friend bool operator==(const NatTrans& a, const NatTrans& b);

 private:
  NatTrans(IndexedSet src, IndexedSet dst, std::vector<std::vector<std::uint32_t>> components);
  IndexedSet src_;
  IndexedSet dst_;
  std::vector<std::vector<std::uint32_t>> components_;
};

/// `second ∘ first`.
NatTrans compose(const NatTrans& second, const NatTrans& first);

/// Indexed element (global section): a transport-compatible choice per base element.
class Section {
 public:
  Section() = default;
  static Section build(IndexedSet owner, const std::function<Elem(std::size_t)>& choice);
  static Section from_indices(IndexedSet owner, std::vector<std::uint32_t> choice);

  const IndexedSet& owner() const { return owner_; }
  Elem at(std::size_t p) const;
  std::uint32_t index_at(std::size_t p) const { return choice_[p]; }
  const std::vector<std::uint32_t>& choice() const { return choice_; }
  std::vector<Elem> values() const;

  std::string to_string() const;

  friend bool operator==(const Section& a, const Section& b);
  /// Orders by choice; meaningful for sections of the same owner.
  friend bool operator<(const Section& a, const Section& b) { return a.choice_ < b.choice_; }

 private:
  Section(IndexedSet owner, std::vector<std::uint32_t> choice)
      : owner_(std::move(owner)), choice_(std::move(choice)) {}
  IndexedSet owner_;
  std::vector<std::uint32_t> choice_;
};

/// Order-preserving map between finite posets.
class MonotoneMap {
 public:
  MonotoneMap() = default;
  static MonotoneMap build(FinPoset src, FinPoset dst, const std::function<Elem(const Elem&)>& f);
  static MonotoneMap from_indices(FinPoset src, FinPoset dst, std::vector<std::size_t> image);
  static MonotoneMap identity(const FinPoset& p);

  const FinPoset& src() const { return src_; }
  const FinPoset& dst() const { return dst_; }
  std::size_t operator()(std::size_t i) const { return image_[i]; }
  Elem apply(const Elem& e) const;
  const std::vector<std::size_t>& image() const { return image_; }

  /// nullopt iff this is a discrete opfibration (unique lifts); otherwise the failing pair.
  std::optional<std::string> fibration_witness() const;
  bool is_fibration() const { return !fibration_witness(); }

  friend bool operator==(const MonotoneMap& a, const MonotoneMap& b);

 private:
  MonotoneMap(FinPoset src, FinPoset dst, std::vector<std::size_t> image)
      : src_(std::move(src)), dst_(std::move(dst)), image_(std::move(image)) {}
  FinPoset src_;
  FinPoset dst_;
  std::vector<std::size_t> image_;
};

/// `second ∘ first`.
MonotoneMap compose(const MonotoneMap& second, const MonotoneMap& first);

/// The constant indexed set with fiber {()} everywhere.
IndexedSet one_point(const FinPoset& p);

/// Category of elements: pairs (p,a) ordered by p <= p' and transport(a) = a'.
FinPoset grothendieck(const IndexedSet& a);

struct GrotPair {
  IndexedSet set;         ///< fibers {(a,b) | a in A(p), b in B(p,a)}
  NatTrans projection;    ///< (a,b) |-> a
};

/// Dependent pairing of A with B over the category of elements of A.
GrotPair grot_pair(const IndexedSet& a, const IndexedSet& b);

/// Enumerates all sections in a deterministic order; `visit` returns false to stop
/// early. Returns false iff stopped.
bool for_each_section(const IndexedSet& a, const std::function<bool(const Section&)>& visit);

/// All sections, sorted. Throws SizeLimitExceeded beyond `limit`.
std::vector<Section> indexed_elements(const IndexedSet& a,
                                      std::size_t limit = kDefaultSectionLimit);

/// Precomposition f;A of an indexed set over P with a monotone map Q -> P.
IndexedSet precompose(const MonotoneMap& f, const IndexedSet& a);

/// Canonical fibration: first projection out of the category of elements.
MonotoneMap to_fibration(const IndexedSet& a);
/// Fibration between categories of elements induced by a natural transformation.
MonotoneMap to_fibration(const NatTrans& eta);
/// Map P -> category of elements picking the section's value at each point.
MonotoneMap to_fibration(const Section& s);

/// Inverse of to_fibration on canonical fibrations. Throws ValidationError with
/// the failing pair when lifts are missing or not unique.
IndexedSet from_fibration(const MonotoneMap& f);
/// Natural transformation I(phi) between I(f) and I(g) for a map phi with g∘phi = f.
NatTrans from_fibration(const MonotoneMap& phi, const MonotoneMap& f, const MonotoneMap& g);

}  // namespace mltt
