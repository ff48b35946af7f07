#include "mltt/indexed.hpp"

#include <algorithm>
#include <mutex>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "mltt/error.hpp"

namespace mltt {

// ---------------------------------------------------------------------------
// FinPoset

struct FinPoset::Data {
  std::vector<Elem> elems;
  std::unordered_map<Elem, std::size_t> index;
  std::vector<char> leq;  // row-major n*n
  std::vector<std::vector<std::size_t>> above;
  std::vector<std::vector<std::size_t>> below;
  std::vector<std::vector<std::size_t>> covers;
  std::vector<std::size_t> linext;
};

namespace {

void sort_unique(std::vector<Elem>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

FinPoset FinPoset::from_matrix(std::vector<Elem> elems, std::vector<char> leq) {
  auto d = std::make_shared<Data>();
  const std::size_t n = elems.size();
  d->elems = std::move(elems);
  d->leq = std::move(leq);
  d->above.resize(n);
  d->below.resize(n);
  d->covers.resize(n);
  for (std::size_t i = 0; i < n; ++i) d->index.emplace(d->elems[i], i);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (d->leq[i * n + j]) {
        d->above[i].push_back(j);
        d->below[j].push_back(i);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : d->below[i]) {
      if (j == i) continue;
      bool cover = true;
      for (std::size_t k : d->below[i]) {
        if (k != i && k != j && d->leq[j * n + k]) {
          cover = false;
          break;
        }
      }
      if (cover) d->covers[i].push_back(j);
    }
  }
  d->linext.resize(n);
  std::iota(d->linext.begin(), d->linext.end(), 0);
  std::stable_sort(d->linext.begin(), d->linext.end(), [&](std::size_t a, std::size_t b) {
    return d->below[a].size() < d->below[b].size();
  });
  return FinPoset(std::shared_ptr<const Data>(std::move(d)));
}

FinPoset::FinPoset() {
  static const std::shared_ptr<const Data> empty = std::make_shared<Data>();
  d_ = empty;
}

FinPoset FinPoset::from_relation(std::vector<Elem> elems,
                                 const std::function<bool(const Elem&, const Elem&)>& leq) {
  sort_unique(elems);
  const std::size_t n = elems.size();
  std::vector<char> m(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m[i * n + j] = leq(elems[i], elems[j]) ? 1 : 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!m[i * n + i])
      throw ValidationError("poset not reflexive at " + elems[i].to_string());
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && m[i * n + j] && m[j * n + i])
        throw ValidationError("poset not antisymmetric: " + elems[i].to_string() +
                              " <= " + elems[j].to_string() + " <= " + elems[i].to_string());
      if (!m[i * n + j]) continue;
      for (std::size_t k = 0; k < n; ++k) {
        if (m[j * n + k] && !m[i * n + k])
          throw ValidationError("poset not transitive: " + elems[i].to_string() + " <= " +
                                elems[j].to_string() + " <= " + elems[k].to_string());
      }
    }
  }
  return from_matrix(std::move(elems), std::move(m));
}

FinPoset FinPoset::from_pairs(std::vector<Elem> elems,
                              const std::vector<std::pair<Elem, Elem>>& pairs) {
  sort_unique(elems);
  const std::size_t n = elems.size();
  auto locate = [&](const Elem& e) {
    auto it = std::lower_bound(elems.begin(), elems.end(), e);
    if (it == elems.end() || *it != e)
      throw ValidationError("order pair mentions unknown element " + e.to_string());
    return static_cast<std::size_t>(it - elems.begin());
  };
  std::vector<char> m(n * n);
  for (std::size_t i = 0; i < n; ++i) m[i * n + i] = 1;
  for (const auto& [lo, hi] : pairs) m[locate(lo) * n + locate(hi)] = 1;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (m[i * n + k])
        for (std::size_t j = 0; j < n; ++j)
          if (m[k * n + j]) m[i * n + j] = 1;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (m[i * n + j] && m[j * n + i])
        throw ValidationError("poset not antisymmetric: " + elems[i].to_string() + " and " +
                              elems[j].to_string() + " are mutually below each other");
  return from_matrix(std::move(elems), std::move(m));
}

std::size_t FinPoset::size() const { return d_->elems.size(); }
const Elem& FinPoset::elem(std::size_t i) const { return d_->elems[i]; }
std::span<const Elem> FinPoset::elems() const { return d_->elems; }

std::optional<std::size_t> FinPoset::find(const Elem& e) const {
  auto it = d_->index.find(e);
  if (it == d_->index.end()) return std::nullopt;
  return it->second;
}

std::size_t FinPoset::index_of(const Elem& e) const {
  auto i = find(e);
  if (!i) throw ValidationError("element " + e.to_string() + " not in poset");
  return *i;
}

bool FinPoset::leq(std::size_t i, std::size_t j) const { return d_->leq[i * size() + j] != 0; }
std::span<const std::size_t> FinPoset::above(std::size_t i) const { return d_->above[i]; }
std::span<const std::size_t> FinPoset::below(std::size_t i) const { return d_->below[i]; }
std::span<const std::size_t> FinPoset::lower_covers(std::size_t i) const { return d_->covers[i]; }
std::span<const std::size_t> FinPoset::linear_extension() const { return d_->linext; }

std::optional<std::size_t> FinPoset::least() const {
  for (std::size_t i = 0; i < size(); ++i)
    if (d_->above[i].size() == size()) return i;
  return std::nullopt;
}

std::string FinPoset::to_string() const {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < size(); ++i) os << (i ? " " : "") << d_->elems[i];
  os << " |";
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j : d_->covers[i]) os << ' ' << d_->elems[j] << "<" << d_->elems[i];
  os << '}';
  return os.str();
}

bool operator==(const FinPoset& a, const FinPoset& b) {
  if (a.d_ == b.d_) return true;
  return a.d_->elems == b.d_->elems && a.d_->leq == b.d_->leq;
}

// ---------------------------------------------------------------------------
// IndexedSet

struct IndexedSet::Data {
  struct Elements {
    std::once_flag once;
    FinPoset poset;
  };
  FinPoset base;
  std::vector<std::vector<Elem>> fibers;
  std::vector<std::vector<std::uint32_t>> transport;  // n*n; empty unless i <= j
  std::shared_ptr<Elements> elements = std::make_shared<Elements>();  // ∫A, built on demand
};

namespace {

std::optional<std::uint32_t> find_sorted(const std::vector<Elem>& v, const Elem& e) {
  auto it = std::lower_bound(v.begin(), v.end(), e);
  if (it == v.end() || *it != e) return std::nullopt;
  return static_cast<std::uint32_t>(it - v.begin());
}

}  // namespace

IndexedSet::IndexedSet() {
  static const std::shared_ptr<const Data> empty = std::make_shared<Data>();
  d_ = empty;
}

IndexedSet IndexedSet::build(FinPoset base, const FiberFn& fiber, const TransportFn& transport) {
  auto d = std::make_shared<Data>();
  const std::size_t n = base.size();
  d->base = std::move(base);
  d->fibers.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    d->fibers[i] = fiber(i);
    sort_unique(d->fibers[i]);
  }
  d->transport.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : d->base.above(i)) {
      auto& row = d->transport[i * n + j];
      row.reserve(d->fibers[i].size());
      for (const Elem& a : d->fibers[i]) {
        Elem b = transport(i, j, a);
        auto k = find_sorted(d->fibers[j], b);
        if (!k)
          throw ValidationError("transport " + d->base.elem(i).to_string() + "<=" +
                                d->base.elem(j).to_string() + " sends " + a.to_string() +
                                " to " + b.to_string() + ", which is not in the target fiber");
        row.push_back(*k);
      }
    }
  }
  IndexedSet result(std::shared_ptr<const Data>(std::move(d)));
  if (auto w = result.functoriality_witness()) throw ValidationError(*w);
  return result;
}

const FinPoset& IndexedSet::base() const { return d_->base; }
std::span<const Elem> IndexedSet::fiber(std::size_t i) const { return d_->fibers[i]; }
std::size_t IndexedSet::fiber_size(std::size_t i) const { return d_->fibers[i].size(); }

std::optional<std::uint32_t> IndexedSet::find(std::size_t i, const Elem& a) const {
  return find_sorted(d_->fibers[i], a);
}

std::uint32_t IndexedSet::index_of(std::size_t i, const Elem& a) const {
  auto k = find(i, a);
  if (!k)
    throw ValidationError(a.to_string() + " is not in the fiber over " +
                          base().elem(i).to_string());
  return *k;
}

std::uint32_t IndexedSet::transport_index(std::size_t i, std::size_t j, std::uint32_t k) const {
  return d_->transport[i * base().size() + j][k];
}

Elem IndexedSet::transport(std::size_t i, std::size_t j, const Elem& a) const {
  if (!base().leq(i, j))
    throw ValidationError("no transport from " + base().elem(i).to_string() + " to " +
                          base().elem(j).to_string());
  return d_->fibers[j][transport_index(i, j, index_of(i, a))];
}

std::size_t IndexedSet::total_size() const {
  std::size_t total = 0;
  for (const auto& f : d_->fibers) total += f.size();
  return total;
}

std::optional<std::string> IndexedSet::functoriality_witness() const {
  const FinPoset& p = base();
  const std::size_t n = p.size();
  auto name = [&](std::size_t i) { return p.elem(i).to_string(); };
  for (std::size_t i = 0; i < n; ++i) {
    const auto& id = d_->transport[i * n + i];
    for (std::uint32_t k = 0; k < id.size(); ++k) {
      if (id[k] != k)
        return "identity law fails at " + name(i) + ": " + d_->fibers[i][k].to_string() +
               " |-> " + d_->fibers[i][id[k]].to_string();
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : p.above(i)) {
      if (j == i) continue;
      const auto& ij = d_->transport[i * n + j];
      for (std::size_t l : p.above(j)) {
        if (l == j) continue;
        const auto& jl = d_->transport[j * n + l];
        const auto& il = d_->transport[i * n + l];
        for (std::uint32_t k = 0; k < ij.size(); ++k) {
          if (jl[ij[k]] != il[k])
            return "composition law fails for " + name(i) + "<=" + name(j) + "<=" + name(l) +
                   " at " + d_->fibers[i][k].to_string() + ": composite gives " +
                   d_->fibers[l][jl[ij[k]]].to_string() + ", direct map gives " +
                   d_->fibers[l][il[k]].to_string();
        }
      }
    }
  }
  return std::nullopt;
}

IndexedSet IndexedSet::with_corrupted_transport(std::size_t i, std::size_t j, std::uint32_t k,
                                                std::uint32_t target) const {
  auto d = std::make_shared<Data>(*d_);
  d->elements = std::make_shared<Data::Elements>();
  d->transport.at(i * base().size() + j).at(k) = target;
  return IndexedSet(std::shared_ptr<const Data>(std::move(d)));
}

std::string IndexedSet::to_string() const {
  std::ostringstream os;
  const FinPoset& p = base();
  os << '{';
  for (std::size_t i = 0; i < p.size(); ++i) {
    os << (i ? "; " : "") << p.elem(i) << ": [";
    for (std::size_t k = 0; k < d_->fibers[i].size(); ++k)
      os << (k ? " " : "") << d_->fibers[i][k];
    os << ']';
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j : p.above(i)) {
      if (i == j) continue;
      os << "; " << p.elem(i) << "<=" << p.elem(j) << ": ";
      const auto& row = d_->transport[i * p.size() + j];
      for (std::size_t k = 0; k < row.size(); ++k)
        os << (k ? " " : "") << d_->fibers[i][k] << "->" << d_->fibers[j][row[k]];
    }
  }
  os << '}';
  return os.str();
}

bool operator==(const IndexedSet& a, const IndexedSet& b) {
  if (a.d_ == b.d_) return true;
  return a.d_->base == b.d_->base && a.d_->fibers == b.d_->fibers &&
         a.d_->transport == b.d_->transport;
}

// ---------------------------------------------------------------------------
// NatTrans

namespace {

std::optional<std::string> naturality_witness(const IndexedSet& src, const IndexedSet& dst,
                                              const std::vector<std::vector<std::uint32_t>>& c) {
  const FinPoset& p = src.base();
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j : p.above(i)) {
      if (i == j) continue;
      for (std::uint32_t k = 0; k < src.fiber_size(i); ++k) {
        std::uint32_t lhs = dst.transport_index(i, j, c[i][k]);
        std::uint32_t rhs = c[j][src.transport_index(i, j, k)];
        if (lhs != rhs)
          return "naturality fails for " + p.elem(i).to_string() + "<=" +
                 p.elem(j).to_string() + " at " + src.fiber(i)[k].to_string() + ": " +
                 dst.fiber(j)[lhs].to_string() + " vs " + dst.fiber(j)[rhs].to_string();
      }
    }
  }
  return std::nullopt;
}

}  // namespace

NatTrans::NatTrans(IndexedSet src, IndexedSet dst,
                   std::vector<std::vector<std::uint32_t>> components)
    : src_(std::move(src)), dst_(std::move(dst)), components_(std::move(components)) {}

NatTrans NatTrans::build(IndexedSet src, IndexedSet dst, const ComponentFn& component) {
  if (!(src.base() == dst.base()))
    throw ValidationError("natural transformation between indexed sets over different bases");
  const std::size_t n = src.base().size();
  std::vector<std::vector<std::uint32_t>> c(n);
  for (std::size_t i = 0; i < n; ++i) {
    c[i].reserve(src.fiber_size(i));
    for (const Elem& a : src.fiber(i)) {
      Elem b = component(i, a);
      auto k = dst.find(i, b);
      if (!k)
        throw ValidationError("component at " + src.base().elem(i).to_string() + " sends " +
                              a.to_string() + " to " + b.to_string() +
                              ", which is not in the target fiber");
      c[i].push_back(*k);
    }
  }
  if (auto w = naturality_witness(src, dst, c)) throw ValidationError(*w);
  return NatTrans(std::move(src), std::move(dst), std::move(c));
}

NatTrans NatTrans::from_indices(IndexedSet src, IndexedSet dst,
                                std::vector<std::vector<std::uint32_t>> components) {
  if (!(src.base() == dst.base()))
    throw ValidationError("natural transformation between indexed sets over different bases");
  const std::size_t n = src.base().size();
  if (components.size() != n) throw ValidationError("component count does not match base");
  for (std::size_t i = 0; i < n; ++i) {
    if (components[i].size() != src.fiber_size(i))
      throw ValidationError("component size mismatch at " + src.base().elem(i).to_string());
    for (auto k : components[i])
      if (k >= dst.fiber_size(i))
        throw ValidationError("component index out of range at " +
                              src.base().elem(i).to_string());
  }
  if (auto w = naturality_witness(src, dst, components)) throw ValidationError(*w);
  return NatTrans(std::move(src), std::move(dst), std::move(components));
}

NatTrans NatTrans::identity(const IndexedSet& a) {
  std::vector<std::vector<std::uint32_t>> c(a.base().size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    c[i].resize(a.fiber_size(i));
    std::iota(c[i].begin(), c[i].end(), 0u);
  }
  return NatTrans(a, a, std::move(c));
}

Elem NatTrans::apply(std::size_t p, const Elem& a) const {
  return dst_.fiber(p)[components_[p][src_.index_of(p, a)]];
}

bool operator==(const NatTrans& a, const NatTrans& b) {
  return a.components_ == b.components_ && a.src_ == b.src_ && a.dst_ == b.dst_;
}

NatTrans compose(const NatTrans& second, const NatTrans& first) {
  if (!(first.dst() == second.src()))
    throw ValidationError("cannot compose natural transformations: middle objects differ");
  std::vector<std::vector<std::uint32_t>> c(first.components().size());
  for (std::size_t i = 0; i < c.size(); ++i)
    for (auto k : first.components()[i]) c[i].push_back(second.components()[i][k]);
  return NatTrans::from_indices(first.src(), second.dst(), std::move(c));
}

// ---------------------------------------------------------------------------
// Section

namespace {

std::optional<std::string> section_witness(const IndexedSet& owner,
                                           const std::vector<std::uint32_t>& choice) {
  const FinPoset& p = owner.base();
  if (choice.size() != p.size()) return std::string("section has wrong number of components");
  for (std::size_t i = 0; i < p.size(); ++i)
    if (choice[i] >= owner.fiber_size(i))
      return "section component out of range at " + p.elem(i).to_string();
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j : p.above(i)) {
      if (owner.transport_index(i, j, choice[i]) != choice[j])
        return "section incompatible with transport " + p.elem(i).to_string() + "<=" +
               p.elem(j).to_string() + ": " + owner.fiber(i)[choice[i]].to_string() +
               " is sent to " + owner.fiber(j)[owner.transport_index(i, j, choice[i])].to_string() +
               ", not " + owner.fiber(j)[choice[j]].to_string();
    }
  }
  return std::nullopt;
}

}  // namespace

Section Section::build(IndexedSet owner, const std::function<Elem(std::size_t)>& choice) {
  std::vector<std::uint32_t> c(owner.base().size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    Elem a = choice(i);
    auto k = owner.find(i, a);
    if (!k)
      throw ValidationError("section value " + a.to_string() + " is not in the fiber over " +
                            owner.base().elem(i).to_string());
    c[i] = *k;
  }
  return from_indices(std::move(owner), std::move(c));
}

Section Section::from_indices(IndexedSet owner, std::vector<std::uint32_t> choice) {
  if (auto w = section_witness(owner, choice)) throw ValidationError(*w);
  return Section(std::move(owner), std::move(choice));
}

Elem Section::at(std::size_t p) const { return owner_.fiber(p)[choice_[p]]; }

std::vector<Elem> Section::values() const {
  std::vector<Elem> v;
  v.reserve(choice_.size());
  for (std::size_t i = 0; i < choice_.size(); ++i) v.push_back(at(i));
  return v;
}

std::string Section::to_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < choice_.size(); ++i)
    os << (i ? " " : "") << owner_.base().elem(i) << "=" << at(i);
  os << ']';
  return os.str();
}

bool operator==(const Section& a, const Section& b) {
  return a.choice_ == b.choice_ && a.owner_ == b.owner_;
}

// ---------------------------------------------------------------------------
// MonotoneMap

namespace {

void check_monotone(const FinPoset& src, const FinPoset& dst, const std::vector<std::size_t>& img) {
  if (img.size() != src.size()) throw ValidationError("monotone map has wrong domain size");
  for (auto j : img)
    if (j >= dst.size()) throw ValidationError("monotone map image out of range");
  for (std::size_t i = 0; i < src.size(); ++i)
    for (std::size_t j : src.above(i))
      if (!dst.leq(img[i], img[j]))
        throw ValidationError("map not monotone: " + src.elem(i).to_string() + " <= " +
                              src.elem(j).to_string() + " but " + dst.elem(img[i]).to_string() +
                              " is not <= " + dst.elem(img[j]).to_string());
}

}  // namespace

MonotoneMap MonotoneMap::build(FinPoset src, FinPoset dst,
                               const std::function<Elem(const Elem&)>& f) {
  std::vector<std::size_t> img(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    Elem e = f(src.elem(i));
    auto j = dst.find(e);
    if (!j)
      throw ValidationError("map sends " + src.elem(i).to_string() + " to " + e.to_string() +
                            ", which is not in the codomain");
    img[i] = *j;
  }
  return from_indices(std::move(src), std::move(dst), std::move(img));
}

MonotoneMap MonotoneMap::from_indices(FinPoset src, FinPoset dst, std::vector<std::size_t> image) {
  check_monotone(src, dst, image);
  return MonotoneMap(std::move(src), std::move(dst), std::move(image));
}

MonotoneMap MonotoneMap::identity(const FinPoset& p) {
  std::vector<std::size_t> img(p.size());
  std::iota(img.begin(), img.end(), std::size_t{0});
  return MonotoneMap(p, p, std::move(img));
}

Elem MonotoneMap::apply(const Elem& e) const { return dst_.elem(image_[src_.index_of(e)]); }

std::optional<std::string> MonotoneMap::fibration_witness() const {
  for (std::size_t q = 0; q < src_.size(); ++q) {
    for (std::size_t p2 : dst_.above(image_[q])) {
      std::size_t lifts = 0;
      for (std::size_t q2 : src_.above(q))
        if (image_[q2] == p2) ++lifts;
      if (lifts != 1)
        return std::string(lifts == 0 ? "no lift" : "non-unique lift") + " of " +
               dst_.elem(image_[q]).to_string() + "<=" + dst_.elem(p2).to_string() +
               " at (p'=" + dst_.elem(p2).to_string() + ", q=" + src_.elem(q).to_string() + ")";
    }
  }
  return std::nullopt;
}

bool operator==(const MonotoneMap& a, const MonotoneMap& b) {
  return a.image_ == b.image_ && a.src_ == b.src_ && a.dst_ == b.dst_;
}

MonotoneMap compose(const MonotoneMap& second, const MonotoneMap& first) {
  if (!(first.dst() == second.src()))
    throw ValidationError("cannot compose monotone maps: middle posets differ");
  std::vector<std::size_t> img(first.src().size());
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = second(first(i));
  return MonotoneMap::from_indices(first.src(), second.dst(), std::move(img));
}

// ---------------------------------------------------------------------------
// Constructions

IndexedSet one_point(const FinPoset& p) {
  return IndexedSet::build(
      p, [](std::size_t) { return std::vector<Elem>{Elem::unit()}; },
      [](std::size_t, std::size_t, const Elem& a) { return a; });
}

FinPoset grothendieck(const IndexedSet& a) {
  auto& cache = *a.d_->elements;
  std::call_once(cache.once, [&] {
    const FinPoset& p = a.base();
    std::vector<Elem> elems;
    std::vector<std::pair<std::size_t, std::uint32_t>> origin;
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::uint32_t k = 0; k < a.fiber_size(i); ++k) {
        elems.push_back(Elem::pair(p.elem(i), a.fiber(i)[k]));
        origin.emplace_back(i, k);
      }
    }
    const std::size_t n = elems.size();
    std::vector<char> m(n * n);
    for (std::size_t x = 0; x < n; ++x) {
      auto [i, k] = origin[x];
      for (std::size_t y = 0; y < n; ++y) {
        auto [j, l] = origin[y];
        m[x * n + y] = p.leq(i, j) && a.transport_index(i, j, k) == l;
      }
    }
    // Base elements and fibers are sorted, so the pairs are already in order.
    cache.poset = FinPoset::from_matrix(std::move(elems), std::move(m));
  });
  return cache.poset;
}

GrotPair grot_pair(const IndexedSet& a, const IndexedSet& b) {
  const FinPoset g = grothendieck(a);
  if (!(b.base() == g))
    throw ValidationError("dependent pairing: second family is not over the category of "
                          "elements of the first");
  const FinPoset& p = a.base();
  auto x_of = [&](std::size_t i, const Elem& e) { return g.index_of(Elem::pair(p.elem(i), e)); };
  IndexedSet set = IndexedSet::build(
      p,
      [&](std::size_t i) {
        std::vector<Elem> out;
        for (const Elem& e : a.fiber(i)) {
          std::size_t x = x_of(i, e);
          for (const Elem& f : b.fiber(x)) out.push_back(Elem::pair(e, f));
        }
        return out;
      },
      [&](std::size_t i, std::size_t j, const Elem& ab) {
        Elem a1 = ab.first();
        Elem a2 = a.transport(i, j, a1);
        return Elem::pair(a2, b.transport(x_of(i, a1), x_of(j, a2), ab.second()));
      });
  NatTrans proj = NatTrans::build(set, a, [](std::size_t, const Elem& ab) { return ab.first(); });
  return GrotPair{std::move(set), std::move(proj)};
}

bool for_each_section(const IndexedSet& a, const std::function<bool(const Section&)>& visit) {
  const FinPoset& p = a.base();
  const std::size_t n = p.size();
  auto order = p.linear_extension();
  std::vector<std::uint32_t> choice(n);
  bool stopped = false;

  std::function<void(std::size_t)> go = [&](std::size_t pos) {
    if (stopped) return;
    if (pos == n) {
      if (!visit(Section::from_indices(a, choice))) stopped = true;
      return;
    }
    std::size_t i = order[pos];
    auto covers = p.lower_covers(i);
    if (covers.empty()) {
      for (std::uint32_t k = 0; k < a.fiber_size(i) && !stopped; ++k) {
        choice[i] = k;
        go(pos + 1);
      }
      return;
    }
    std::uint32_t forced = a.transport_index(covers[0], i, choice[covers[0]]);
    for (std::size_t c = 1; c < covers.size(); ++c)
      if (a.transport_index(covers[c], i, choice[covers[c]]) != forced) return;
    choice[i] = forced;
    go(pos + 1);
  };
  go(0);
  return !stopped;
}

std::vector<Section> indexed_elements(const IndexedSet& a, std::size_t limit) {
  std::vector<Section> out;
  for_each_section(a, [&](const Section& s) {
    if (out.size() >= limit)
      throw SizeLimitExceeded("more than " + std::to_string(limit) + " sections");
    out.push_back(s);
    return true;
  });
  std::sort(out.begin(), out.end());
  return out;
}

IndexedSet precompose(const MonotoneMap& f, const IndexedSet& a) {
  if (!(f.dst() == a.base()))
    throw ValidationError("precomposition: map codomain is not the base of the indexed set");
  return IndexedSet::build(
      f.src(),
      [&](std::size_t q) {
        auto fib = a.fiber(f(q));
        return std::vector<Elem>(fib.begin(), fib.end());
      },
      [&](std::size_t q, std::size_t q2, const Elem& e) {
        return a.fiber(f(q2))[a.transport_index(f(q), f(q2), a.index_of(f(q), e))];
      });
}

MonotoneMap to_fibration(const IndexedSet& a) {
  FinPoset g = grothendieck(a);
  std::vector<std::size_t> img(g.size());
  for (std::size_t x = 0; x < g.size(); ++x) img[x] = a.base().index_of(g.elem(x).first());
  return MonotoneMap::from_indices(std::move(g), a.base(), std::move(img));
}

MonotoneMap to_fibration(const NatTrans& eta) {
  FinPoset gs = grothendieck(eta.src());
  FinPoset gd = grothendieck(eta.dst());
  const FinPoset& p = eta.src().base();
  return MonotoneMap::build(gs, gd, [&](const Elem& x) {
    std::size_t i = p.index_of(x.first());
    return Elem::pair(x.first(), eta.apply(i, x.second()));
  });
}

MonotoneMap to_fibration(const Section& s) {
  const FinPoset& p = s.owner().base();
  return MonotoneMap::build(p, grothendieck(s.owner()), [&](const Elem& e) {
    return Elem::pair(e, s.at(p.index_of(e)));
  });
}

namespace {

// For a canonical fibration f, the unique q' above q with f(q') = p2.
std::size_t unique_lift(const MonotoneMap& f, std::size_t q, std::size_t p2) {
  for (std::size_t q2 : f.src().above(q))
    if (f(q2) == p2) return q2;
  throw ValidationError("missing lift");
}

void check_canonical(const MonotoneMap& f) {
  if (auto w = f.fibration_witness()) throw ValidationError("not a fibration: " + *w);
  for (std::size_t q = 0; q < f.src().size(); ++q) {
    const Elem& e = f.src().elem(q);
    if (!e.is_pair() || e.first() != f.dst().elem(f(q)))
      throw ValidationError("not a canonical fibration: " + e.to_string() +
                            " is not a pair over its image " + f.dst().elem(f(q)).to_string());
  }
}

}  // namespace

IndexedSet from_fibration(const MonotoneMap& f) {
  check_canonical(f);
  const FinPoset& q = f.src();
  return IndexedSet::build(
      f.dst(),
      [&](std::size_t i) {
        std::vector<Elem> out;
        for (std::size_t x = 0; x < q.size(); ++x)
          if (f(x) == i) out.push_back(q.elem(x).second());
        return out;
      },
      [&](std::size_t i, std::size_t j, const Elem& a) {
        std::size_t x = q.index_of(Elem::pair(f.dst().elem(i), a));
        return q.elem(unique_lift(f, x, j)).second();
      });
}

NatTrans from_fibration(const MonotoneMap& phi, const MonotoneMap& f, const MonotoneMap& g) {
  if (!(phi.src() == f.src()) || !(phi.dst() == g.src()) || !(f.dst() == g.dst()))
    throw ValidationError("fibration morphism has mismatched endpoints");
  if (!(compose(g, phi) == f))
    throw ValidationError("fibration morphism does not commute with the projections");
  IndexedSet a = from_fibration(f);
  IndexedSet b = from_fibration(g);
  const FinPoset& p = f.dst();
  return NatTrans::build(a, b, [&](std::size_t i, const Elem& e) {
    return phi.apply(Elem::pair(p.elem(i), e)).second();
  });
}

}  // namespace mltt
