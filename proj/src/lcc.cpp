#include "mltt/lcc.hpp"

#include <algorithm>
#include <set>

#include "mltt/enumerate.hpp"
#include "mltt/error.hpp"

namespace mltt {

namespace {

// `bottom` is A⋉B for the target A of h, shared between calls so that its
// category of elements is built once.
Pullback pullback_into(const NatTrans& h, const IndexedSet& b, const IndexedSet& bottom) {
  const IndexedSet& a2 = h.src();
  MonotoneMap fh = to_fibration(h);
  if (!(b.base() == fh.dst()))
    throw ValidationError("pullback: family is not over the category of elements of the target");
  IndexedSet pulled = precompose(fh, b);
  IndexedSet top = grot_pair(a2, pulled).set;
  NatTrans pbf = NatTrans::build(top, bottom, [&](std::size_t p, const Elem& ab) {
    return Elem::pair(h.apply(p, ab.first()), ab.second());
  });
  return Pullback{std::move(pulled), std::move(pbf)};
}

AuxRestriction aux_at(const IndexedSet& a, const FinPoset& g, const IndexedSet& ab,
                      const IndexedSet& b, const IndexedSet& c, std::size_t x) {
  const FinPoset& base = a.base();
  const std::size_t p = base.index_of(g.elem(x).first());
  const Elem av = g.elem(x).second();
  IndexedSet ax = IndexedSet::build(
      base,
      [&](std::size_t i) {
        return base.leq(p, i) ? std::vector<Elem>{Elem::unit()} : std::vector<Elem>{};
      },
      [](std::size_t, std::size_t, const Elem& e) { return e; });
  NatTrans ix = NatTrans::build(ax, a, [&](std::size_t i, const Elem&) {
    return a.transport(p, i, av);
  });
  Pullback pb = pullback_into(ix, b, ab);
  MonotoneMap fp = to_fibration(pb.pbf);
  if (!(c.base() == fp.dst()))
    throw ValidationError("pullback: family is not over the category of elements of the target");
  IndexedSet cx = precompose(fp, c);
  FinPoset dx = cx.base();
  return AuxRestriction{std::move(ax), std::move(ix), std::move(pb.set), std::move(cx),
                        std::move(dx)};
}

}  // namespace

Pullback pullback(const NatTrans& h, const IndexedSet& b) {
  if (!(b.base() == grothendieck(h.dst())))
    throw ValidationError("pullback: family is not over the category of elements of the target");
  return pullback_into(h, b, grot_pair(h.dst(), b).set);
}

NatTrans pullback_nat(const NatTrans& h, const NatTrans& beta) {
  MonotoneMap fh = to_fibration(h);
  IndexedSet src = precompose(fh, beta.src());
  IndexedSet dst = precompose(fh, beta.dst());
  std::vector<std::vector<std::uint32_t>> comps(fh.src().size());
  for (std::size_t x = 0; x < comps.size(); ++x) comps[x] = beta.components()[fh(x)];
  return NatTrans::from_indices(std::move(src), std::move(dst), std::move(comps));
}

MonotoneMap assoc_map(const IndexedSet& a, const IndexedSet& b) {
  FinPoset src = grothendieck(b);
  FinPoset dst = grothendieck(grot_pair(a, b).set);
  return MonotoneMap::build(src, dst, [](const Elem& e) {
    Elem x = e.first();
    return Elem::pair(x.first(), Elem::pair(x.second(), e.second()));
  });
}

IndexedSet dep_sum(const IndexedSet& a, const IndexedSet& b, const IndexedSet& c) {
  MonotoneMap assoc = assoc_map(a, b);
  if (!(c.base() == assoc.dst()))
    throw ValidationError("dependent sum: family is not over the category of elements of A⋉B");
  return grot_pair(b, precompose(assoc, c)).set;
}

AuxRestriction aux_restriction(const IndexedSet& a, const IndexedSet& b, const IndexedSet& c,
                               std::size_t x) {
  FinPoset g = grothendieck(a);
  if (!(b.base() == g))
    throw ValidationError("pullback: family is not over the category of elements of the target");
  return aux_at(a, g, grot_pair(a, b).set, b, c, x);
}

Elem encode_family(const std::vector<std::pair<Elem, Elem>>& entries) {
  Elem acc = Elem::unit();
  for (const auto& [y, v] : entries) acc = Elem::pair(acc, Elem::pair(y, v));
  return acc;
}

std::vector<std::pair<Elem, Elem>> decode_family(const Elem& family) {
  std::vector<std::pair<Elem, Elem>> out;
  Elem acc = family;
  while (acc.is_pair()) {
    Elem entry = acc.second();
    if (!entry.is_pair()) throw ValidationError("malformed family " + family.to_string());
    out.emplace_back(entry.first(), entry.second());
    acc = acc.first();
  }
  if (!acc.is_unit()) throw ValidationError("malformed family " + family.to_string());
  std::reverse(out.begin(), out.end());
  return out;
}

Elem family_at(const Elem& family, const Elem& y) {
  for (const auto& [key, v] : decode_family(family))
    if (key == y) return v;
  throw ValidationError("family " + family.to_string() + " has no entry at " + y.to_string());
}

DepProd dep_prod(const IndexedSet& a, const IndexedSet& b, const IndexedSet& c,
                 std::size_t limit) {
  FinPoset g = grothendieck(a);
  if (!(b.base() == g))
    throw ValidationError("dependent product: B is not over the category of elements of A");
  const IndexedSet ab = grot_pair(a, b).set;
  std::vector<AuxRestriction> aux;
  aux.reserve(g.size());
  for (std::size_t x = 0; x < g.size(); ++x) aux.push_back(aux_at(a, g, ab, b, c, x));
  IndexedSet set = IndexedSet::build(
      g,
      [&](std::size_t x) {
        std::vector<Elem> out;
        const FinPoset& dx = aux[x].dx;
        for (const Section& s : indexed_elements(aux[x].cx, limit)) {
          std::vector<std::pair<Elem, Elem>> entries;
          for (std::size_t y = 0; y < dx.size(); ++y) entries.emplace_back(dx.elem(y), s.at(y));
          out.push_back(encode_family(entries));
        }
        return out;
      },
      [&](std::size_t, std::size_t x2, const Elem& family) {
        // d^{x2} is a subposet of d^{x}; restriction keeps the order of keys.
        std::vector<std::pair<Elem, Elem>> kept;
        for (auto& entry : decode_family(family))
          if (aux[x2].dx.find(entry.first)) kept.push_back(entry);
        return encode_family(kept);
      });
  return DepProd{a, b, c, std::move(set), std::move(aux)};
}

Section split(const DepProd& pi, const Section& t) {
  if (!(t.owner() == pi.c)) throw ValidationError("split: section is not a section of C");
  const FinPoset& g = pi.set.base();
  const FinPoset& base = pi.a.base();
  const FinPoset& gc = pi.c.base();
  return Section::build(pi.set, [&](std::size_t x) {
    const std::size_t p = base.index_of(g.elem(x).first());
    const Elem av = g.elem(x).second();
    const FinPoset& dx = pi.aux[x].dx;
    std::vector<std::pair<Elem, Elem>> entries;
    for (std::size_t y = 0; y < dx.size(); ++y) {
      const Elem& key = dx.elem(y);  // (p',((),b'))
      const Elem p2 = key.first();
      const Elem a2 = pi.a.transport(p, base.index_of(p2), av);
      const Elem z = Elem::pair(p2, Elem::pair(a2, key.second().second()));
      entries.emplace_back(key, t.at(gc.index_of(z)));
    }
    return encode_family(entries);
  });
}

Section unsplit(const DepProd& pi, const Section& f) {
  if (!(f.owner() == pi.set))
    throw ValidationError("unsplit: section is not a section of the dependent product");
  const FinPoset& g = pi.set.base();
  const FinPoset& gc = pi.c.base();
  return Section::build(pi.c, [&](std::size_t z) {
    const Elem& e = gc.elem(z);  // (p,(a,b))
    const Elem x = Elem::pair(e.first(), e.second().first());
    const Elem y = Elem::pair(e.first(), Elem::pair(Elem::unit(), e.second().second()));
    return family_at(f.at(g.index_of(x)), y);
  });
}

Section compose_section(const MonotoneMap& f, const Section& a) {
  IndexedSet owner = precompose(f, a.owner());
  std::vector<std::uint32_t> choice(f.src().size());
  for (std::size_t q = 0; q < choice.size(); ++q) choice[q] = a.index_at(f(q));
  return Section::from_indices(std::move(owner), std::move(choice));
}

// ---------------------------------------------------------------------------
// Law checks

namespace {

using Components = std::vector<std::vector<std::uint32_t>>;

struct Budget {
  std::size_t limit;
  std::size_t used = 0;
  void spend() {
    if (++used > limit)
      throw SizeLimitExceeded("law instance exceeds " + std::to_string(limit) + " steps");
  }
};

}  // namespace

std::optional<std::string> check_pullback_square(const NatTrans& h, const IndexedSet& b,
                                                 const std::vector<IndexedSet>& test_objects,
                                                 std::size_t limit) {
  const IndexedSet& a2 = h.src();
  const IndexedSet& a1 = h.dst();
  Pullback pb = pullback(h, b);
  GrotPair top = grot_pair(a2, pb.set);
  GrotPair bottom = grot_pair(a1, b);
  if (!(compose(h, top.projection) == compose(bottom.projection, pb.pbf)))
    return "pullback square does not commute for B=" + b.to_string();
  Budget budget{limit};
  for (const IndexedSet& x : test_objects) {
    if (!(x.base() == a2.base())) continue;
    std::set<std::pair<Components, Components>> mediated;
    std::optional<std::string> failure;
    for_each_nat_trans(x, top.set, [&](const NatTrans& m) {
      budget.spend();
      auto key = std::make_pair(compose(top.projection, m).components(),
                                compose(pb.pbf, m).components());
      if (!mediated.insert(key).second) {
        failure = "two mediating maps induce the same cone from X=" + x.to_string();
        return false;
      }
      return true;
    });
    if (failure) return failure;
    std::size_t cones = 0;
    for_each_nat_trans(x, bottom.set, [&](const NatTrans& v) {
      for_each_nat_trans(x, a2, [&](const NatTrans& u) {
        budget.spend();
        if (!(compose(h, u) == compose(bottom.projection, v))) return true;
        ++cones;
        if (!mediated.count({u.components(), v.components()})) {
          failure = "cone from X=" + x.to_string() + " has no mediating map";
          return false;
        }
        return true;
      });
      return !failure;
    });
    if (failure) return failure;
    if (cones != mediated.size())
      return "mediating maps and cones differ in number for X=" + x.to_string();
  }
  return std::nullopt;
}

std::optional<std::string> check_pullback_coherence(const NatTrans& g, const NatTrans& h,
                                                    const IndexedSet& b) {
  const IndexedSet& a1 = g.dst();
  Pullback by_id = pullback(NatTrans::identity(a1), b);
  if (!(by_id.set == b)) return "id*B differs from B for B=" + b.to_string();
  if (!(by_id.pbf == NatTrans::identity(grot_pair(a1, b).set)))
    return "pbf(id,B) is not the identity for B=" + b.to_string();
  Pullback along_g = pullback(g, b);
  Pullback composite = pullback(compose(g, h), b);
  Pullback stepwise = pullback(h, along_g.set);
  if (!(composite.set == stepwise.set))
    return "(g∘h)*B = " + composite.set.to_string() + " but h*(g*B) = " + stepwise.set.to_string();
  if (!(composite.pbf == compose(along_g.pbf, stepwise.pbf)))
    return "pbf(g∘h,B) differs from pbf(g,B)∘pbf(h,g*B) for B=" + b.to_string();
  return std::nullopt;
}

std::optional<std::string> check_pullback_functor(const NatTrans& h, const IndexedSet& b,
                                                  std::size_t limit) {
  if (auto w = b.functoriality_witness()) return "input family is not a functor: " + *w;
  Pullback pb;
  try {
    pb = pullback(h, b);
  } catch (const ValidationError& e) {
    return std::string("pullback is not a functor: ") + e.what();
  }
  if (auto w = pb.set.functoriality_witness()) return "pullback is not a functor: " + *w;
  if (!(pullback_nat(h, NatTrans::identity(b)) == NatTrans::identity(pb.set)))
    return "h* does not preserve the identity of B=" + b.to_string();
  std::vector<NatTrans> endos;
  Budget budget{limit};
  for_each_nat_trans(b, b, [&](const NatTrans& e) {
    budget.spend();
    endos.push_back(e);
    return true;
  });
  for (const auto& e1 : endos)
    for (const auto& e2 : endos) {
      budget.spend();
      if (!(pullback_nat(h, compose(e2, e1)) == compose(pullback_nat(h, e2), pullback_nat(h, e1))))
        return "h* does not preserve composition of endomorphisms of B=" + b.to_string();
    }
  return std::nullopt;
}

std::optional<std::string> check_sigma_adjunction(const IndexedSet& a, const IndexedSet& b,
                                                  const IndexedSet& c, const IndexedSet& d,
                                                  std::size_t limit) {
  IndexedSet sum = dep_sum(a, b, c);
  GrotPair ab = grot_pair(a, b);
  IndexedSet pulled = pullback(ab.projection, d).set;
  const FinPoset& ga = sum.base();
  const FinPoset& gc = c.base();
  Budget budget{limit};
  const std::size_t rhs = count_nat_trans(c, pulled, limit);
  std::set<Components> images;
  std::optional<std::string> failure;
  for_each_nat_trans(sum, d, [&](const NatTrans& phi) {
    budget.spend();
    try {
      NatTrans psi = NatTrans::build(c, pulled, [&](std::size_t z, const Elem& cv) {
        const Elem& e = gc.elem(z);
        std::size_t x = ga.index_of(Elem::pair(e.first(), e.second().first()));
        return phi.apply(x, Elem::pair(e.second().second(), cv));
      });
      if (!images.insert(psi.components()).second) {
        failure = "transposition is not injective for C=" + c.to_string();
        return false;
      }
    } catch (const ValidationError& err) {
      failure = std::string("transpose of a map out of Σ_B C is invalid: ") + err.what();
      return false;
    }
    return true;
  });
  if (failure) return failure;
  if (images.size() != rhs)
    return "Hom(Σ_B C, D) has " + std::to_string(images.size()) + " elements but Hom(C, p*D) has " +
           std::to_string(rhs);
  return std::nullopt;
}

std::optional<std::string> check_pi_adjunction(const IndexedSet& a, const IndexedSet& b,
                                               const IndexedSet& c, const IndexedSet& d,
                                               std::size_t limit) {
  DepProd pi = dep_prod(a, b, c, limit);
  GrotPair ab = grot_pair(a, b);
  IndexedSet pulled = pullback(ab.projection, d).set;
  const FinPoset& ga = pi.set.base();
  const FinPoset& base = a.base();
  const FinPoset& gc = c.base();
  Budget budget{limit};
  const std::size_t rhs = count_nat_trans(d, pi.set, limit);
  std::set<Components> images;
  std::optional<std::string> failure;
  for_each_nat_trans(pulled, c, [&](const NatTrans& psi) {
    budget.spend();
    try {
      NatTrans phi = NatTrans::build(d, pi.set, [&](std::size_t x, const Elem& dv) {
        const std::size_t p = base.index_of(ga.elem(x).first());
        const Elem av = ga.elem(x).second();
        const FinPoset& dx = pi.aux[x].dx;
        std::vector<std::pair<Elem, Elem>> entries;
        for (std::size_t y = 0; y < dx.size(); ++y) {
          const Elem& key = dx.elem(y);
          const std::size_t p2 = base.index_of(key.first());
          const Elem a2 = a.transport(p, p2, av);
          const std::size_t x2 = ga.index_of(Elem::pair(key.first(), a2));
          const std::size_t z =
              gc.index_of(Elem::pair(key.first(), Elem::pair(a2, key.second().second())));
          entries.emplace_back(key, psi.apply(z, d.transport(x, x2, dv)));
        }
        return encode_family(entries);
      });
      if (!images.insert(phi.components()).second) {
        failure = "transposition is not injective for C=" + c.to_string();
        return false;
      }
    } catch (const ValidationError& err) {
      failure = std::string("transpose of a map into C is invalid: ") + err.what();
      return false;
    }
    return true;
  });
  if (failure) return failure;
  if (images.size() != rhs)
    return "Hom(p*D, C) has " + std::to_string(images.size()) + " elements but Hom(D, Π_B C) has " +
           std::to_string(rhs);
  return std::nullopt;
}

std::optional<std::string> check_beck_chevalley_sigma(const NatTrans& g, const IndexedSet& b,
                                                      const IndexedSet& c) {
  Pullback pb = pullback(g, b);
  IndexedSet lhs = pullback(g, dep_sum(g.dst(), b, c)).set;
  IndexedSet rhs = dep_sum(g.src(), pb.set, pullback(pb.pbf, c).set);
  if (!(lhs == rhs))
    return "g*(Σ_B C) = " + lhs.to_string() + " but Σ_{g*B}((pbf g B)*C) = " + rhs.to_string();
  return std::nullopt;
}

std::optional<std::string> check_beck_chevalley_pi(const NatTrans& g, const IndexedSet& b,
                                                   const IndexedSet& c, std::size_t limit) {
  Pullback pb = pullback(g, b);
  IndexedSet lhs = pullback(g, dep_prod(g.dst(), b, c, limit).set).set;
  IndexedSet rhs = dep_prod(g.src(), pb.set, pullback(pb.pbf, c).set, limit).set;
  if (!(lhs == rhs))
    return "g*(Π_B C) = " + lhs.to_string() + " but Π_{g*B}((pbf g B)*C) = " + rhs.to_string();
  return std::nullopt;
}

std::optional<std::string> check_split_inverse(const IndexedSet& a, const IndexedSet& b,
                                               const IndexedSet& c, std::size_t limit) {
  DepProd pi = dep_prod(a, b, c, limit);
  auto ts = indexed_elements(c, limit);
  auto fs = indexed_elements(pi.set, limit);
  if (ts.size() != fs.size())
    return std::to_string(ts.size()) + " sections of C but " + std::to_string(fs.size()) +
           " sections of Π_B C";
  for (const Section& t : ts)
    if (!(unsplit(pi, split(pi, t)) == t)) return "unsplit(split(t)) != t for t=" + t.to_string();
  for (const Section& f : fs)
    if (!(split(pi, unsplit(pi, f)) == f)) return "split(unsplit(f)) != f for f=" + f.to_string();
  return std::nullopt;
}

std::optional<std::string> check_split_coherence(const NatTrans& g, const IndexedSet& b,
                                                 const IndexedSet& c, std::size_t limit) {
  DepProd pi1 = dep_prod(g.dst(), b, c, limit);
  Pullback pb = pullback(g, b);
  IndexedSet c2 = pullback(pb.pbf, c).set;
  DepProd pi2 = dep_prod(g.src(), pb.set, c2, limit);
  MonotoneMap fpbf = to_fibration(pb.pbf);
  MonotoneMap fg = to_fibration(g);
  for (const Section& t : indexed_elements(c, limit)) {
    Section t2 = compose_section(fpbf, t);
    Section s1 = split(pi1, t);
    Section s2 = split(pi2, t2);
    for (std::size_t x = 0; x < fg.src().size(); ++x)
      if (s2.at(x) != s1.at(fg(x)))
        return "split coherence fails at x'=" + fg.src().elem(x).to_string() + ": " +
               s2.at(x).to_string() + " vs " + s1.at(fg(x)).to_string();
  }
  return std::nullopt;
}

}  // namespace mltt
