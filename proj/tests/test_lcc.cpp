#include "doctest.h"

#include <map>
#include <set>

#include "mltt/enumerate.hpp"
#include "mltt/error.hpp"
#include "mltt/lcc.hpp"

using namespace mltt;

namespace {

Elem at(const char* s) { return Elem::atom(s); }

IndexedSet constant(const FinPoset& p, std::vector<Elem> fiber) {
  return IndexedSet::build(
      p, [&](std::size_t) { return fiber; },
      [](std::size_t, std::size_t, const Elem& x) { return x; });
}

struct Triple {
  IndexedSet a, b, c;
};

Triple random_triple(Rng& rng, std::size_t max_poset, std::size_t max_fiber) {
  FinPoset p = random_poset(max_poset, rng);
  IndexedSet a = random_indexed_set(p, max_fiber, rng);
  IndexedSet b = random_indexed_set(grothendieck(a), max_fiber, rng);
  IndexedSet c = random_indexed_set(grothendieck(grot_pair(a, b).set), max_fiber, rng);
  return {a, b, c};
}

// Some g: A2 -> A1 with A2 random over the same base.
NatTrans random_map_into(const IndexedSet& a1, Rng& rng, std::size_t max_fiber) {
  for (int attempt = 0; attempt < 50; ++attempt) {
    IndexedSet a2 = random_indexed_set(a1.base(), max_fiber, rng);
    if (auto g = random_nat_trans(a2, a1, rng)) return *g;
  }
  return NatTrans::identity(a1);
}

}  // namespace

TEST_CASE("pullback") {
  Rng rng(5);
  SUBCASE("along the identity is the identity") {
    for (int round = 0; round < 30; ++round) {
      auto [a, b, c] = random_triple(rng, 3, 2);
      Pullback pb = pullback(NatTrans::identity(a), b);
      CHECK(pb.set == b);
      CHECK(pb.pbf == NatTrans::identity(grot_pair(a, b).set));
    }
  }
  SUBCASE("of the one-point family is one point") {
    for (int round = 0; round < 30; ++round) {
      auto [a, b, c] = random_triple(rng, 3, 2);
      NatTrans h = random_map_into(a, rng, 2);
      CHECK(pullback(h, one_point(grothendieck(a))).set == one_point(grothendieck(h.src())));
    }
  }
  SUBCASE("composite law holds structurally") {
    for (int round = 0; round < 30; ++round) {
      auto [a1, b, c] = random_triple(rng, 3, 2);
      NatTrans g = random_map_into(a1, rng, 2);
      NatTrans h = random_map_into(g.src(), rng, 2);
      CHECK(pullback(compose(g, h), b).set == pullback(h, pullback(g, b).set).set);
      CHECK_FALSE(check_pullback_coherence(g, h, b));
    }
  }
  SUBCASE("fibers are looked up through F(h)") {
    for (int round = 0; round < 30; ++round) {
      auto [a1, b, c] = random_triple(rng, 3, 2);
      NatTrans h = random_map_into(a1, rng, 2);
      Pullback pb = pullback(h, b);
      FinPoset g2 = grothendieck(h.src());
      FinPoset g1 = grothendieck(a1);
      for (std::size_t x = 0; x < g2.size(); ++x) {
        Elem e = g2.elem(x);
        std::size_t p = a1.base().index_of(e.first());
        Elem image = Elem::pair(e.first(), h.apply(p, e.second()));
        auto want = b.fiber(g1.index_of(image));
        auto got = pb.set.fiber(x);
        CHECK(std::vector<Elem>(want.begin(), want.end()) == std::vector<Elem>(got.begin(), got.end()));
      }
    }
  }
  CHECK_THROWS_AS(pullback(NatTrans::identity(one_point(labelled_poset(1, {1}))),
                           one_point(labelled_poset(2, {1, 1, 0, 1}))),
                  ValidationError);
}

TEST_CASE("dependent sum") {
  Rng rng(9);
  for (int round = 0; round < 40; ++round) {
    auto [a, b, c] = random_triple(rng, 3, 2);
    IndexedSet s = dep_sum(a, b, c);
    FinPoset ga = grothendieck(a);
    FinPoset gab = grothendieck(grot_pair(a, b).set);
    for (std::size_t x = 0; x < ga.size(); ++x) {
      Elem px = ga.elem(x).first();
      Elem ax = ga.elem(x).second();
      std::size_t expected = 0;
      for (const Elem& bv : b.fiber(x))
        expected += c.fiber_size(gab.index_of(Elem::pair(px, Elem::pair(ax, bv))));
      CHECK(s.fiber_size(x) == expected);
    }
  }
  SUBCASE("with one-point C the fibers are B paired with ()") {
    auto [a, b, c] = random_triple(rng, 2, 2);
    IndexedSet s = dep_sum(a, b, one_point(grothendieck(grot_pair(a, b).set)));
    for (std::size_t x = 0; x < b.base().size(); ++x) {
      REQUIRE(s.fiber_size(x) == b.fiber_size(x));
      for (std::size_t k = 0; k < b.fiber_size(x); ++k)
        CHECK(s.fiber(x)[k] == Elem::pair(b.fiber(x)[k], Elem::unit()));
    }
  }
}

TEST_CASE("dependent product") {
  FinPoset point = labelled_poset(1, {1});
  IndexedSet a = one_point(point);
  SUBCASE("over a point it is the function set") {
    IndexedSet b = constant(grothendieck(a), {at("0"), at("1")});
    IndexedSet c = constant(grothendieck(grot_pair(a, b).set), {at("u"), at("v")});
    DepProd pi = dep_prod(a, b, c);
    REQUIRE(pi.set.fiber_size(0) == 4);
    // Every function {0,1} -> {u,v} appears exactly once.
    std::set<std::pair<std::string, std::string>> functions;
    Elem k0 = Elem::parse("(p0,((),0))");
    Elem k1 = Elem::parse("(p0,((),1))");
    for (const Elem& f : pi.set.fiber(0))
      functions.emplace(family_at(f, k0).to_string(), family_at(f, k1).to_string());
    CHECK(functions.size() == 4);
    CHECK(pi.set.fiber(0)[0].to_string() == "(((),((p0,((),0)),u)),((p0,((),1)),u))");
  }
  SUBCASE("an empty domain gives the empty family") {
    FinPoset p = labelled_poset(2, {1, 1, 0, 1});
    IndexedSet a2 = constant(p, {at("0"), at("1")});
    IndexedSet b = IndexedSet::build(
        grothendieck(a2), [](std::size_t) { return std::vector<Elem>{}; },
        [](std::size_t, std::size_t, const Elem& x) { return x; });
    IndexedSet c = one_point(grothendieck(grot_pair(a2, b).set));
    DepProd pi = dep_prod(a2, b, c);
    for (std::size_t x = 0; x < pi.set.base().size(); ++x) {
      REQUIRE(pi.set.fiber_size(x) == 1);
      CHECK(pi.set.fiber(x)[0].is_unit());
    }
  }
  SUBCASE("restriction along the order of the base") {
    // A = one point over p0 <= p1, B constant {0}, C(p0,..) = {u,v}, C(p1,..) = {u}.
    FinPoset p = labelled_poset(2, {1, 1, 0, 1});
    IndexedSet a1 = one_point(p);
    IndexedSet b = constant(grothendieck(a1), {at("0")});
    FinPoset gab = grothendieck(grot_pair(a1, b).set);
    IndexedSet c = IndexedSet::build(
        gab,
        [&](std::size_t z) {
          return gab.elem(z).first() == at("p0") ? std::vector<Elem>{at("u"), at("v")}
                                                 : std::vector<Elem>{at("u")};
        },
        [](std::size_t i, std::size_t j, const Elem& x) { return i == j ? x : at("u"); });
    DepProd pi = dep_prod(a1, b, c);
    // At p0 a family picks a value at (p0,..) and is forced to u at (p1,..).
    CHECK(pi.set.fiber_size(0) == 2);
    CHECK(pi.set.fiber_size(1) == 1);
    for (const Elem& f : pi.set.fiber(0))
      CHECK(pi.set.transport(0, 1, f).to_string() == "((),((p1,((),0)),u))");
    AuxRestriction aux = aux_restriction(a1, b, c, 1);
    CHECK(aux.ax.fiber_size(0) == 0);
    CHECK(aux.ax.fiber_size(1) == 1);
    CHECK(aux.dx.size() == 1);
  }
}

TEST_CASE("split and unsplit") {
  Rng rng(21);
  std::size_t checked = 0;
  while (checked < 100) {
    auto [a, b, c] = random_triple(rng, 2, 2);
    DepProd pi = dep_prod(a, b, c);
    auto t = random_section(c, rng);
    if (!t) continue;
    ++checked;
    Section f = split(pi, *t);
    CHECK(unsplit(pi, f) == *t);
    CHECK(split(pi, unsplit(pi, f)) == f);
  }
  SUBCASE("with one-point B the domains are singletons") {
    auto [a, b0, c0] = random_triple(rng, 3, 2);
    IndexedSet b = one_point(grothendieck(a));
    IndexedSet c = random_indexed_set(grothendieck(grot_pair(a, b).set), 2, rng);
    DepProd pi = dep_prod(a, b, c);
    for (const auto& aux : pi.aux) CHECK(aux.dx.size() >= 1);
    CHECK(indexed_elements(pi.set).size() == indexed_elements(c).size());
    CHECK_FALSE(check_split_inverse(a, b, c, 1u << 16));
  }
}

TEST_CASE("composing sections with fibrations") {
  Rng rng(31);
  for (int round = 0; round < 30; ++round) {
    FinPoset p = random_poset(3, rng);
    IndexedSet a = random_indexed_set(p, 2, rng);
    auto s = random_section(a, rng);
    if (!s) continue;
    CHECK(compose_section(MonotoneMap::identity(p), *s) == *s);
    // Pulling back to ∫B along the projection is a pointwise lookup.
    IndexedSet b = random_indexed_set(grothendieck(a), 2, rng);
    MonotoneMap proj = to_fibration(grot_pair(a, b).projection);
    MonotoneMap down = to_fibration(a);
    Section lifted = compose_section(down, *s);
    Section pulled = compose_section(proj, lifted);
    for (std::size_t q = 0; q < proj.src().size(); ++q)
      CHECK(pulled.at(q) == s->at(down(proj(q))));
  }
}

TEST_CASE("law checks pass on random instances") {
  Rng rng(77);
  const std::size_t limit = 1u << 16;
  for (int round = 0; round < 25; ++round) {
    auto [a, b, c] = random_triple(rng, 2, 2);
    NatTrans g = random_map_into(a, rng, 2);
    NatTrans h = random_map_into(g.src(), rng, 2);
    IndexedSet d = random_indexed_set(grothendieck(a), 2, rng);
    std::vector<IndexedSet> tests;
    for_each_indexed_set(a.base(), 1, [&](const IndexedSet& x) {
      tests.push_back(x);
      return true;
    });
    CHECK_FALSE(check_pullback_square(g, b, tests, limit));
    CHECK_FALSE(check_pullback_coherence(g, h, b));
    CHECK_FALSE(check_pullback_functor(g, b, limit));
    CHECK_FALSE(check_sigma_adjunction(a, b, c, d, limit));
    CHECK_FALSE(check_pi_adjunction(a, b, c, d, limit));
    CHECK_FALSE(check_beck_chevalley_sigma(g, b, c));
    CHECK_FALSE(check_beck_chevalley_pi(g, b, c, limit));
    CHECK_FALSE(check_split_inverse(a, b, c, limit));
    CHECK_FALSE(check_split_coherence(g, b, c, limit));
  }
}

TEST_CASE("Beck-Chevalley along the identity is reflexivity") {
  Rng rng(2);
  auto [a, b, c] = random_triple(rng, 3, 2);
  NatTrans id = NatTrans::identity(a);
  CHECK(pullback(id, dep_sum(a, b, c)).set == dep_sum(a, b, c));
  CHECK(pullback(id, dep_prod(a, b, c).set).set == dep_prod(a, b, c).set);
  CHECK_FALSE(check_beck_chevalley_sigma(id, b, c));
  CHECK_FALSE(check_beck_chevalley_pi(id, b, c, 1u << 16));
}

TEST_CASE("a corrupted transport makes the pullback functor law fail") {
  FinPoset p = labelled_poset(3, {1, 1, 1, 0, 1, 1, 0, 0, 1});
  IndexedSet a = one_point(p);
  IndexedSet b = constant(grothendieck(a), {at("0"), at("1")});
  CHECK_FALSE(check_pullback_functor(NatTrans::identity(a), b, 1u << 16));
  IndexedSet bad = b.with_corrupted_transport(0, 2, 0, 1);
  auto w = check_pullback_functor(NatTrans::identity(a), bad, 1u << 16);
  REQUIRE(w);
  CHECK(w->find("composition law fails") != std::string::npos);
}

TEST_CASE("adjunction hom-set counts agree") {
  // Over a point with A = 1, B = {0,1}, C = {u}: Σ_B C has two elements and
  // Π_B C one, so with D = {x,y}: |Hom(Σ C, D)| = 4 = |Hom(C, p*D)| = 2*2.
  FinPoset point = labelled_poset(1, {1});
  IndexedSet a = one_point(point);
  IndexedSet b = constant(grothendieck(a), {at("0"), at("1")});
  IndexedSet c = constant(grothendieck(grot_pair(a, b).set), {at("u")});
  IndexedSet d = constant(grothendieck(a), {at("x"), at("y")});
  CHECK(count_nat_trans(dep_sum(a, b, c), d, 100) == 4);
  IndexedSet pd = pullback(grot_pair(a, b).projection, d).set;
  CHECK(count_nat_trans(c, pd, 100) == 4);
  CHECK(count_nat_trans(pd, c, 100) == 1);
  CHECK(count_nat_trans(d, dep_prod(a, b, c).set, 100) == 1);
  CHECK_FALSE(check_sigma_adjunction(a, b, c, d, 100));
  CHECK_FALSE(check_pi_adjunction(a, b, c, d, 100));
}
