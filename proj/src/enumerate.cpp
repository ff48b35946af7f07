#include "mltt/enumerate.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "mltt/error.hpp"

namespace mltt {

std::size_t uniform(Rng& rng, std::size_t n) {
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t range = n;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % range);
}

namespace {

Elem point_name(std::size_t i) { return Elem::atom("p" + std::to_string(i)); }

Elem label(std::size_t k) { return Elem::atom(std::to_string(k)); }

std::vector<Elem> labels(std::size_t k) {
  std::vector<Elem> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(label(i));
  return out;
}

// Build from index tables; fibers are labels 0..k-1, which sort like their indices for k <= 10.
IndexedSet from_tables(const FinPoset& p, const std::vector<std::size_t>& sizes,
                       const std::vector<std::vector<std::uint32_t>>& t) {
  const std::size_t n = p.size();
  return IndexedSet::build(
      p, [&](std::size_t i) { return labels(sizes[i]); },
      [&](std::size_t i, std::size_t j, const Elem& a) {
        return label(t[i * n + j][std::stoul(a.name())]);
      });
}

}  // namespace

FinPoset labelled_poset(std::size_t n, const std::vector<char>& leq) {
  std::vector<Elem> elems;
  for (std::size_t i = 0; i < n; ++i) elems.push_back(point_name(i));
  // Atom order "p0" < "p1" < ... matches index order for n <= 10.
  return FinPoset::from_relation(elems, [&](const Elem& a, const Elem& b) {
    std::size_t i = std::stoul(a.name().substr(1));
    std::size_t j = std::stoul(b.name().substr(1));
    return leq[i * n + j] != 0;
  });
}

std::vector<FinPoset> posets_up_to_iso(std::size_t n) {
  if (n > 6) throw SizeLimitExceeded("poset enumeration is limited to 6 elements");
  std::vector<std::pair<std::size_t, std::size_t>> slots;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) slots.emplace_back(i, j);
  std::map<std::vector<char>, bool> classes;
  std::vector<std::size_t> perm(n);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << slots.size()); ++mask) {
    std::vector<char> m(n * n);
    for (std::size_t i = 0; i < n; ++i) m[i * n + i] = 1;
    for (std::size_t s = 0; s < slots.size(); ++s)
      if (mask >> s & 1) m[slots[s].first * n + slots[s].second] = 1;
    bool transitive = true;
    for (std::size_t i = 0; i < n && transitive; ++i)
      for (std::size_t j = 0; j < n && transitive; ++j)
        for (std::size_t k = 0; k < n && transitive; ++k)
          if (m[i * n + j] && m[j * n + k] && !m[i * n + k]) transitive = false;
    if (!transitive) continue;
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::vector<char> best;
    do {
      std::vector<char> code(n * n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) code[perm[i] * n + perm[j]] = m[i * n + j];
      if (best.empty() || code < best) best = code;
    } while (std::next_permutation(perm.begin(), perm.end()));
    classes.emplace(best, true);
  }
  std::vector<FinPoset> out;
  for (const auto& [code, unused] : classes) out.push_back(labelled_poset(n, code));
  return out;
}

bool for_each_indexed_set(const FinPoset& p, std::size_t max_fiber,
                          const std::function<bool(const IndexedSet&)>& visit) {
  const std::size_t n = p.size();
  auto order = p.linear_extension();
  std::vector<std::size_t> sizes(n, 0);
  std::vector<std::vector<std::uint32_t>> t(n * n);
  bool stopped = false;

  std::function<void(std::size_t)> maps = [&](std::size_t pos) {
    if (stopped) return;
    if (pos == n) {
      if (!visit(from_tables(p, sizes, t))) stopped = true;
      return;
    }
    const std::size_t j = order[pos];
    auto covers = p.lower_covers(j);
    std::size_t digits = 0;
    for (auto c : covers) digits += sizes[c];
    if (digits > 0 && sizes[j] == 0) return;
    std::vector<std::uint32_t> odo(digits, 0);
    t[j * n + j].resize(sizes[j]);
    std::iota(t[j * n + j].begin(), t[j * n + j].end(), 0u);
    while (true) {
      std::size_t d = 0;
      for (auto c : covers) {
        t[c * n + j].assign(odo.begin() + d, odo.begin() + d + sizes[c]);
        d += sizes[c];
      }
      bool ok = true;
      for (std::size_t i : p.below(j)) {
        if (i == j || std::find(covers.begin(), covers.end(), i) != covers.end()) continue;
        auto& row = t[i * n + j];
        row.assign(sizes[i], UINT32_MAX);
        for (auto c : covers) {
          if (!p.leq(i, c)) continue;
          for (std::size_t k = 0; k < sizes[i] && ok; ++k) {
            std::uint32_t v = t[c * n + j][t[i * n + c][k]];
            if (row[k] == UINT32_MAX) row[k] = v;
            else if (row[k] != v) ok = false;
          }
        }
        if (!ok) break;
      }
      if (ok) maps(pos + 1);
      if (stopped) return;
      std::size_t k = 0;
      while (k < digits && ++odo[k] == sizes[j]) odo[k++] = 0;
      if (k == digits) break;
    }
  };

  std::function<void(std::size_t)> choose_sizes = [&](std::size_t i) {
    if (stopped) return;
    if (i == n) {
      maps(0);
      return;
    }
    for (std::size_t k = 0; k <= max_fiber && !stopped; ++k) {
      sizes[i] = k;
      choose_sizes(i + 1);
    }
  };
  choose_sizes(0);
  return !stopped;
}

namespace {

// Depth-first search over natural transformations. Values at each point are
// forced by lower covers where possible; `shuffle` permutes free choices.
bool nat_trans_search(const IndexedSet& src, const IndexedSet& dst,
                      const std::function<bool(const NatTrans&)>& visit, Rng* shuffle) {
  if (!(src.base() == dst.base()))
    throw ValidationError("natural transformations between different bases");
  const FinPoset& p = src.base();
  const std::size_t n = p.size();
  auto order = p.linear_extension();
  std::vector<std::vector<std::uint32_t>> comp(n);
  for (std::size_t i = 0; i < n; ++i) comp[i].assign(src.fiber_size(i), 0);
  bool stopped = false;

  std::function<void(std::size_t, std::size_t)> go = [&](std::size_t pos, std::size_t k) {
    if (stopped) return;
    if (pos == n) {
      if (!visit(NatTrans::from_indices(src, dst, comp))) stopped = true;
      return;
    }
    const std::size_t i = order[pos];
    if (k == src.fiber_size(i)) {
      go(pos + 1, 0);
      return;
    }
    std::uint32_t forced = UINT32_MAX;
    for (auto c : p.lower_covers(i)) {
      for (std::uint32_t k2 = 0; k2 < src.fiber_size(c); ++k2) {
        if (src.transport_index(c, i, k2) != k) continue;
        std::uint32_t v = dst.transport_index(c, i, comp[c][k2]);
        if (forced == UINT32_MAX) forced = v;
        else if (forced != v) return;
      }
    }
    if (forced != UINT32_MAX) {
      comp[i][k] = forced;
      go(pos, k + 1);
      return;
    }
    std::vector<std::uint32_t> options(dst.fiber_size(i));
    std::iota(options.begin(), options.end(), 0u);
    if (shuffle) std::shuffle(options.begin(), options.end(), *shuffle);
    for (auto v : options) {
      if (stopped) return;
      comp[i][k] = v;
      go(pos, k + 1);
    }
  };
  go(0, 0);
  return !stopped;
}

}  // namespace

bool for_each_nat_trans(const IndexedSet& src, const IndexedSet& dst,
                        const std::function<bool(const NatTrans&)>& visit) {
  return nat_trans_search(src, dst, visit, nullptr);
}

std::size_t count_nat_trans(const IndexedSet& src, const IndexedSet& dst, std::size_t limit) {
  std::size_t count = 0;
  for_each_nat_trans(src, dst, [&](const NatTrans&) {
    if (++count > limit)
      throw SizeLimitExceeded("more than " + std::to_string(limit) + " natural transformations");
    return true;
  });
  return count;
}

bool for_each_monotone_map(const FinPoset& src, const FinPoset& dst,
                           const std::function<bool(const MonotoneMap&)>& visit) {
  const std::size_t n = src.size();
  auto order = src.linear_extension();
  std::vector<std::size_t> img(n, 0);
  bool stopped = false;
  std::function<void(std::size_t)> go = [&](std::size_t pos) {
    if (stopped) return;
    if (pos == n) {
      if (!visit(MonotoneMap::from_indices(src, dst, img))) stopped = true;
      return;
    }
    const std::size_t i = order[pos];
    for (std::size_t j = 0; j < dst.size() && !stopped; ++j) {
      bool ok = true;
      for (auto c : src.lower_covers(i))
        if (!dst.leq(img[c], j)) ok = false;
      if (!ok) continue;
      img[i] = j;
      go(pos + 1);
    }
  };
  go(0);
  return !stopped;
}

FinPoset random_poset(std::size_t max_size, Rng& rng) {
  const std::size_t n = 1 + uniform(rng, max_size);
  std::vector<char> m(n * n);
  for (std::size_t i = 0; i < n; ++i) m[i * n + i] = 1;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (uniform(rng, 2)) m[i * n + j] = 1;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (m[i * n + k])
        for (std::size_t j = 0; j < n; ++j)
          if (m[k * n + j]) m[i * n + j] = 1;
  return labelled_poset(n, m);
}

IndexedSet random_indexed_set(const FinPoset& p, std::size_t max_fiber, Rng& rng,
                              bool nonempty) {
  const std::size_t n = p.size();
  std::vector<std::size_t> sizes(n, 0);
  std::vector<std::vector<std::uint32_t>> t(n * n);
  for (std::size_t j : p.linear_extension()) {
    std::size_t k = nonempty ? 1 + uniform(rng, std::max<std::size_t>(max_fiber, 1))
                             : uniform(rng, max_fiber + 1);
    for (std::size_t i : p.below(j))
      if (i != j && sizes[i] > 0) k = std::max<std::size_t>(k, 1);
    sizes[j] = k;
    t[j * n + j].resize(k);
    std::iota(t[j * n + j].begin(), t[j * n + j].end(), 0u);
    auto covers = p.lower_covers(j);
    bool ok = false;
    for (int attempt = 0; attempt < 32 && !ok; ++attempt) {
      for (auto c : covers) {
        auto& row = t[c * n + j];
        row.resize(sizes[c]);
        for (auto& v : row) v = static_cast<std::uint32_t>(uniform(rng, k));
      }
      ok = true;
      for (std::size_t i : p.below(j)) {
        if (i == j || std::find(covers.begin(), covers.end(), i) != covers.end()) continue;
        auto& row = t[i * n + j];
        row.assign(sizes[i], UINT32_MAX);
        for (auto c : covers) {
          if (!p.leq(i, c)) continue;
          for (std::size_t a = 0; a < sizes[i]; ++a) {
            std::uint32_t v = t[c * n + j][t[i * n + c][a]];
            if (row[a] == UINT32_MAX) row[a] = v;
            else if (row[a] != v) ok = false;
          }
        }
      }
    }
    if (!ok) {
      // Constant maps onto 0 always compose consistently.
      for (std::size_t i : p.below(j))
        if (i != j) t[i * n + j].assign(sizes[i], 0);
    }
  }
  return from_tables(p, sizes, t);
}

std::optional<Section> random_section(const IndexedSet& a, Rng& rng, std::size_t limit) {
  auto all = indexed_elements(a, limit);
  if (all.empty()) return std::nullopt;
  return all[uniform(rng, all.size())];
}

std::optional<NatTrans> random_nat_trans(const IndexedSet& src, const IndexedSet& dst, Rng& rng) {
  std::optional<NatTrans> found;
  nat_trans_search(
      src, dst,
      [&](const NatTrans& eta) {
        found = eta;
        return false;
      },
      &rng);
  return found;
}

}  // namespace mltt
