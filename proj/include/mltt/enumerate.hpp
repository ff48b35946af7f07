#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "mltt/indexed.hpp"

namespace mltt {

using Rng = std::mt19937_64;

/// Uniform draw from [0, n); n must be positive. Independent of the standard
/// library's distribution implementation, so seeds reproduce across toolchains.
std::size_t uniform(Rng& rng, std::size_t n);

/// Poset on atoms p0..p{n-1} described by its order matrix.
FinPoset labelled_poset(std::size_t n, const std::vector<char>& leq);

/// One representative per isomorphism class of n-element posets, in canonical order.
std::vector<FinPoset> posets_up_to_iso(std::size_t n);

/// Every indexed set over `p` with fibers {0, ..., k-1} (k <= max_fiber), each
/// functorial transport exactly once. Returns false iff `visit` stopped early.
bool for_each_indexed_set(const FinPoset& p, std::size_t max_fiber,
                          const std::function<bool(const IndexedSet&)>& visit);

/// Every natural transformation src -> dst. Returns false iff stopped early.
bool for_each_nat_trans(const IndexedSet& src, const IndexedSet& dst,
                        const std::function<bool(const NatTrans&)>& visit);

/// Number of natural transformations src -> dst; throws SizeLimitExceeded past `limit`.
std::size_t count_nat_trans(const IndexedSet& src, const IndexedSet& dst, std::size_t limit);

/// Every monotone map src -> dst. Returns false iff stopped early.
bool for_each_monotone_map(const FinPoset& src, const FinPoset& dst,
                           const std::function<bool(const MonotoneMap&)>& visit);

/// Random poset with 1..max_size elements (a random DAG, transitively closed).
FinPoset random_poset(std::size_t max_size, Rng& rng);

/// Random functorial indexed set with fibers {0..k-1}, k <= max_fiber.
/// When `nonempty` is set every fiber has at least one element.
IndexedSet random_indexed_set(const FinPoset& p, std::size_t max_fiber, Rng& rng,
                              bool nonempty = false);

/// Uniformly chosen section among all sections, or nullopt if there are none.
/// Throws SizeLimitExceeded when there are more than `limit` sections.
std::optional<Section> random_section(const IndexedSet& a, Rng& rng,
                                      std::size_t limit = kDefaultSectionLimit);

/// Some natural transformation src -> dst found by randomized search, or nullopt
/// if there is none.
std::optional<NatTrans> random_nat_trans(const IndexedSet& src, const IndexedSet& dst, Rng& rng);

}  // namespace mltt
