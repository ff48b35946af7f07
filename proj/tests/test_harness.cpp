#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "doctest.h"
#include "mltt/error.hpp"
#include "mltt/harness.hpp"
#include "mltt/kernel.hpp"

using namespace mltt;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Signature cat() {
  return parse_theory(read_file(std::string(MLTT_SOURCE_DIR) + "/theories/cat.mltt")).signature;
}

Signature bcd() { return parse_theory("theory BCD { type b() const c : b const d : b }").signature; }

std::size_t count_sets(const FinPoset& p, std::size_t max_fiber) {
  std::size_t n = 0;
  for_each_indexed_set(p, max_fiber, [&](const IndexedSet&) {
    ++n;
    return true;
  });
  return n;
}

// Brute force: canonical form of every reflexive, antisymmetric, transitive
// relation on n points under all relabellings.
std::size_t posets_by_brute_force(std::size_t n) {
  const std::size_t pairs = n * n;
  std::set<std::vector<char>> classes;
  for (std::size_t bits = 0; bits < (std::size_t{1} << pairs); ++bits) {
    std::vector<char> leq(pairs);
    for (std::size_t k = 0; k < pairs; ++k) leq[k] = (bits >> k) & 1;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      ok = leq[i * n + i];
      for (std::size_t j = 0; j < n && ok; ++j) {
        if (i != j && leq[i * n + j] && leq[j * n + i]) ok = false;
        for (std::size_t k = 0; k < n && ok; ++k)
          if (leq[i * n + j] && leq[j * n + k] && !leq[i * n + k]) ok = false;
      }
    }
    if (!ok) continue;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<char> best;
    do {
      std::vector<char> r(pairs);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) r[perm[i] * n + perm[j]] = leq[i * n + j];
      if (best.empty() || r < best) best = r;
    } while (std::next_permutation(perm.begin(), perm.end()));
    classes.insert(best);
  }
  return classes.size();
}

const LawStats& law(const LawReport& r, const std::string& name) {
  for (const auto& l : r.laws)
    if (l.name == name) return l;
  throw std::runtime_error("no law " + name);
}

}  // namespace

TEST_CASE("random models are deterministic and valid") {
  Signature sig = cat();
  for (std::uint64_t seed : {1u, 2u, 42u}) {
    GeneratedModel a = gen_random_model(sig, seed, 2, 2);
    GeneratedModel b = gen_random_model(sig, seed, 2, 2);
    CHECK(print_model(a.model) == print_model(b.model));
    CHECK(a.attempts == b.attempts);
    // A generated model survives the file validator.
    Model again = parse_model(sig, print_model(a.model));
    CHECK(print_model(again) == print_model(a.model));
  }
  Signature only_b = parse_theory("theory B { type b() }").signature;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GeneratedModel g = gen_random_model(only_b, seed, 3, 2);
    CHECK_FALSE(g.fallback);
    CHECK(g.attempts == 1);
  }
  // c : b needs a point of b.
  CHECK_THROWS_AS(gen_random_model(bcd(), 1, 2, 0), ValidationError);
}

TEST_CASE("terminal model") {
  Signature sig = cat();
  Model m = terminal_model(sig, posets_up_to_iso(2)[1]);
  Model again = parse_model(sig, print_model(m));
  CHECK(again.types.at("Ob").base().size() == 2);
  Interpreter in(m);
  Context ctx = parse_context("x : Ob, y : Ob", sig);
  const IndexedSet& mor = in.type(ctx, parse_expr("Mor(x, y)", sig, ctx));
  for (std::size_t i = 0; i < mor.base().size(); ++i) CHECK(mor.fiber_size(i) == 1);
  // A zero retry budget forces the fallback.
  GeneratedModel g = gen_random_model(sig, 7, 2, 2, 0);
  CHECK(g.fallback);
  CHECK(g.attempts == 0);
}

TEST_CASE("model enumeration") {
  // b/c/d over |P| = 1, fibers <= 2: b has 0, 1 or 2 points; c, d range over them.
  std::size_t n = 0;
  for_each_model(bcd(), 1, 2, [&](const Model&) {
    ++n;
    return true;
  });
  CHECK(n == 0 + 1 + 4);
  std::size_t stopped = 0;
  CHECK_FALSE(for_each_model(bcd(), 2, 2, [&](const Model&) { return ++stopped < 3; }));
  CHECK(stopped == 3);
}

TEST_CASE("synthesized terms check") {
  Signature sig = cat();
  Kernel k(sig);
  Rng rng(5);
  Synthesizer syn(sig, rng);
  std::size_t produced = 0;
  for (int i = 0; i < 200; ++i) {
    Context ctx = syn.context(3, 2);
    if (!k.check_context(ctx).accepted()) continue;
    Expr goal = syn.type(ctx, 2);
    INFO(print_context(ctx), " |- ", print_expr(goal, ctx));
    REQUIRE(k.check_type_wf(ctx, goal).accepted());
    if (auto t = syn.term(ctx, goal, 4)) {
      ++produced;
      INFO(print_expr(*t, ctx), " : ", print_expr(goal, ctx));
      CHECK(k.check_term(ctx, *t, goal).accepted());
    }
  }
  CHECK(produced > 100);

  // Solving the implicit objects of comp from the goal.
  Context ctx = parse_context("x : Ob, y : Ob, z : Ob, g : Mor(y, z), f : Mor(x, y)", sig);
  Expr goal = parse_expr("Mor(x, z)", sig, ctx);
  bool found = false;
  for (int i = 0; i < 50 && !found; ++i)
    if (auto t = syn.term(ctx, goal, 2)) found = k.check_term(ctx, *t, goal).accepted();
  CHECK(found);
}

TEST_CASE("poset and family counts") {
  for (std::size_t n = 1; n <= 3; ++n) CHECK(posets_up_to_iso(n).size() == posets_by_brute_force(n));
  LawOptions opts;
  opts.threads = 1;
  LawReport r = run_lcc_laws(2, 1, opts);
  REQUIRE(r.posets.size() == 2);
  CHECK(r.posets[0] == posets_by_brute_force(1));
  CHECK(r.posets[1] == posets_by_brute_force(2));
  std::size_t fams = 0;
  for (const FinPoset& p : posets_up_to_iso(2)) fams += count_sets(p, 1);
  CHECK(r.families[1] == fams);
}

TEST_CASE("laws at one point") {
  LawReport r = run_lcc_laws(1, 1);
  CHECK(r.ok());
  CHECK(r.laws.size() == law_names().size());
  // split_inverse runs once per (A, B, C) with B over ∫A and C over ∫(A⋉B).
  std::size_t expected = 0;
  for_each_indexed_set(posets_up_to_iso(1)[0], 1, [&](const IndexedSet& a) {
    for_each_indexed_set(grothendieck(a), 1, [&](const IndexedSet& b) {
      expected += count_sets(grothendieck(grot_pair(a, b).set), 1);
      return true;
    });
    return true;
  });
  CHECK(expected == 4);
  CHECK(law(r, "split_inverse").instances == expected);
  for (const auto& l : r.laws) CHECK(l.exhaustive);
}

TEST_CASE("laws up to two points") {
  LawReport r = run_lcc_laws(2, 2);
  for (const auto& l : r.laws) {
    INFO(l.name, " ", l.counterexample.value_or(""));
    CHECK_FALSE(l.counterexample);
    CHECK(l.instances > 0);
  }
  CHECK(r.ok());
  std::string j = to_json(r);
  CHECK(j.find("\"split_coherence\"") != std::string::npos);
  CHECK(to_text(r).find("all laws hold") != std::string::npos);
}

TEST_CASE("single law and unknown law") {
  LawOptions opts;
  opts.only = "pi_adjunction";
  LawReport r = run_lcc_laws(1, 2, opts);
  REQUIRE(r.laws.size() == 1);
  CHECK(r.laws[0].name == "pi_adjunction");
  opts.only = "nope";
  CHECK_THROWS_AS(run_lcc_laws(1, 1, opts), Error);
}

TEST_CASE("corrupted transport is caught") {
  LawOptions opts;
  opts.only = "pullback_functor";
  opts.corrupt_transport = true;
  LawReport r = run_lcc_laws(1, 2, opts);
  CHECK_FALSE(r.ok());
  REQUIRE(r.laws[0].counterexample);
  CHECK(r.laws[0].counterexample->find("corrupted") != std::string::npos);
}

TEST_CASE("law reports are reproducible") {
  LawOptions a;
  a.threads = 1;
  LawOptions b;
  b.threads = 4;
  CHECK(to_json(run_lcc_laws(2, 2, a)) == to_json(run_lcc_laws(2, 2, b)));
}

TEST_CASE("iso suite") {
  IsoReport r = run_iso_suite(2, 2);
  INFO(r.counterexample.value_or(""));
  CHECK(r.ok());
  std::size_t sets = 0, least = 0;
  for (std::size_t n = 1; n <= 2; ++n)
    for (const FinPoset& p : posets_up_to_iso(n)) {
      sets += count_sets(p, 2);
      if (p.least()) least += count_sets(p, 2);
    }
  CHECK(r.indexed_sets == sets);
  CHECK(r.least_element_cases == least);
  CHECK(r.nat_trans > sets);
}

TEST_CASE("soundness fuzz") {
  SoundnessReport empty = run_soundness_fuzz(cat(), 3, 0);
  CHECK(empty.ok());
  CHECK(empty.checks.empty());

  SoundnessReport r = run_soundness_fuzz(cat(), 42, 20);
  INFO(to_text(r));
  CHECK(r.ok());
  CHECK(r.checks["well-typed"] > 0);
  CHECK(r.checks["beta"] > 0);
  CHECK(r.checks["subst:type"] > 0);
  CHECK(to_json(r) == to_json(run_soundness_fuzz(cat(), 42, 20)));
}

TEST_CASE("soundness fuzz catches a broken lambda") {
  SoundnessOptions opts;
  opts.interp.mutant_lambda = true;
  SoundnessReport r = run_soundness_fuzz(bcd(), 1, 20, opts);
  REQUIRE_FALSE(r.ok());
  const FuzzFailure& f = r.failures.front();
  CHECK(f.detail.find("fun ") != std::string::npos);
  CHECK_FALSE(f.model.empty());
  // The failure names a model the validator accepts.
  CHECK_NOTHROW(parse_model(bcd(), f.model));
  CHECK(to_text(r).find("first failure") != std::string::npos);
}

TEST_CASE("countermodels") {
  Signature sig = bcd();
  Expr cd = parse_expr("Id(c, d)", sig);
  CountermodelResult r = search_countermodel(sig, {}, cd, 2, 2);
  REQUIRE(r.model);
  CHECK(r.model->base.size() == 1);
  CHECK(r.model->types.at("b").fiber_size(0) == 2);
  CHECK(!(r.model->terms.at("c") == r.model->terms.at("d")));
  Model again = parse_model(sig, print_model(*r.model));
  CHECK(interp_type(again, {}, cd).fiber_size(0) == 0);
  CHECK(to_json(r, {}, cd).find("\"countermodel\"") != std::string::npos);

  for (const char* s : {"Unit", "Pi x : Unit . Unit", "Id(c, c)"}) {
    CountermodelResult e = search_countermodel(sig, {}, parse_expr(s, sig), 2, 2);
    CHECK(e.exhausted());
    CHECK(e.models_tried > 0);
    CHECK(to_text(e, {}, parse_expr(s, sig)).find("exhausted") != std::string::npos);
  }
  // In context x : b the type b is always inhabited by x.
  Context ctx = parse_context("x : b", sig);
  CHECK(search_countermodel(sig, ctx, parse_expr("b", sig, ctx), 2, 2).exhausted());
}
