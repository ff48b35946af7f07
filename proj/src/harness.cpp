#include "mltt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "mltt/error.hpp"
#include "mltt/lcc.hpp"
#include "mltt/subst.hpp"

namespace mltt {

namespace {

using json = nlohmann::ordered_json;
using K = Expr::Kind;

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Runs f(0..n-1) on a pool; the exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& f) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t err_index = n;
  std::exception_ptr err;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (i < err_index) {
            err_index = i;
            err = std::current_exception();
          }
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

Context extended(const Context& ctx, const std::string& name, const Expr& ty) {
  Context out = ctx;
  out.push_back({name, ty});
  return out;
}

std::string fresh_name(const Context& ctx) { return "a" + std::to_string(ctx.size()); }

// Budget for one Π fiber while drawing a random model; larger draws are redrawn.
constexpr std::size_t kGenerationLimit = 1u << 10;

}  // namespace

// ---------------------------------------------------------------------------
// Models

Model terminal_model(const Signature& sig, const FinPoset& base) {
  Model m{sig, base, {}, {}};
  for (const Decl& d : sig.decls()) {
    Interpreter in(m);
    if (d.kind == Decl::Kind::Type) {
      m.types.emplace(d.name, one_point(in.total(d.args)));
    } else {
      const IndexedSet& owner = in.type({}, d.type);
      m.terms.emplace(d.name, Section::build(owner, [&](std::size_t x) {
        if (owner.fiber_size(x) != 1)
          throw ValidationError("terminal model: type of " + d.name + " is not a singleton");
        return owner.fiber(x)[0];
      }));
    }
  }
  return m;
}

GeneratedModel gen_random_model(const Signature& sig, std::uint64_t seed, std::size_t max_poset,
                                std::size_t max_fiber, std::size_t retries) {
  Rng rng(seed);
  FinPoset base;
  std::size_t attempts = 0;
  while (attempts < retries) {
    ++attempts;
    base = random_poset(std::max<std::size_t>(max_poset, 1), rng);
    Model m{sig, base, {}, {}};
    bool ok = true;
    try {
      for (const Decl& d : sig.decls()) {
        Interpreter in(m, InterpOptions{kGenerationLimit});
        if (d.kind == Decl::Kind::Type) {
          bool nonempty = max_fiber > 0 && uniform(rng, 4) != 0;
          m.types.emplace(d.name, random_indexed_set(in.total(d.args), max_fiber, rng, nonempty));
        } else {
          auto s = random_section(in.type({}, d.type), rng, kGenerationLimit);
          if (!s) {
            ok = false;
            break;
          }
          m.terms.emplace(d.name, *s);
        }
      }
    } catch (const SizeLimitExceeded&) {
      ok = false;
    }
    if (ok) return {std::move(m), false, attempts};
  }
  bool has_types = std::any_of(sig.decls().begin(), sig.decls().end(),
                               [](const Decl& d) { return d.kind == Decl::Kind::Type; });
  if (max_fiber == 0 && has_types) throw ValidationError("no model within bounds");
  return {terminal_model(sig, base), true, attempts};
}

bool for_each_model(const Signature& sig, std::size_t max_poset, std::size_t max_fiber,
                    const std::function<bool(const Model&)>& visit) {
  const auto decls = sig.decls();
  std::function<bool(const Model&, std::size_t)> go = [&](const Model& m, std::size_t k) {
    if (k == decls.size()) return visit(m);
    const Decl& d = decls[k];
    Interpreter in(m);
    if (d.kind == Decl::Kind::Type) {
      return for_each_indexed_set(in.total(d.args), max_fiber, [&](const IndexedSet& a) {
        Model next = m;
        next.types.emplace(d.name, a);
        return go(next, k + 1);
      });
    }
    for (const Section& s : indexed_elements(in.type({}, d.type))) {
      Model next = m;
      next.terms.emplace(d.name, s);
      if (!go(next, k + 1)) return false;
    }
    return true;
  };
  for (std::size_t n = 1; n <= max_poset; ++n)
    for (const FinPoset& p : posets_up_to_iso(n))
      if (!go(Model{sig, p, {}, {}}, 0)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Synthesis

namespace {

// First-order matching of `p` (under `b` local binders, with the j outermost
// enclosing binders as unknowns) against `t`.
bool match(const Expr& p, const Expr& t, std::size_t b, std::size_t j,
           std::vector<std::optional<Expr>>& asg) {
  if (p.is(K::Var)) {
    const std::size_t i = p.index();
    if (i < b) return t.is(K::Var) && t.index() == i;
    if (i - b < j) {
      for (std::size_t v = 0; v < b; ++v)
        if (occurs_free(t, v)) return false;
      Expr val = shift(t, -static_cast<std::ptrdiff_t>(b));
      auto& slot = asg[j - 1 - (i - b)];
      if (slot) return *slot == val;
      slot = val;
      return true;
    }
    return t.is(K::Var) && t.index() == i - j;
  }
  if (p.kind() != t.kind() || p.children().size() != t.children().size()) return false;
  if ((p.is(K::Const) || p.is(K::TypeApp)) && p.name() != t.name()) return false;
  for (std::size_t c = 0; c < p.children().size(); ++c)
    if (!match(p.child(c), t.child(c), b + p.binds_in(c), j, asg)) return false;
  return true;
}

}  // namespace

std::vector<std::pair<Expr, Expr>> Synthesizer::heads(const Context& ctx) const {
  std::vector<std::pair<Expr, Expr>> out;
  for (std::size_t i = 0; i < ctx.size(); ++i)
    out.emplace_back(Expr::var(i, ctx[ctx.size() - 1 - i].name), var_type(ctx, i));
  for (const Decl& d : sig_.decls())
    if (d.kind == Decl::Kind::Term) out.emplace_back(Expr::constant(d.name), d.type);
  return out;
}

std::optional<Expr> Synthesizer::from_head(const Context& ctx, const Expr& head,
                                           const Expr& head_type, const Expr& goal, int depth) {
  if (head_type == goal) return head;
  if (head_type.is(K::Sigma)) {
    if (head_type.child(0) == goal) return Expr::proj1(head);
    Expr p1 = Expr::proj1(head);
    if (instantiate(head_type.child(1), p1) == goal) return Expr::proj2(head);
    return std::nullopt;
  }
  // Telescope Pi x1:A1 ... Pi xk:Ak . R; pick the arity j whose remainder matches the goal.
  std::vector<std::size_t> arities;
  std::vector<std::vector<std::optional<Expr>>> solutions;
  Expr rest = head_type;
  for (std::size_t j = 1; rest.is(K::Pi); ++j) {
    rest = rest.child(1);
    std::vector<std::optional<Expr>> asg(j);
    if (match(rest, goal, 0, j, asg)) {
      arities.push_back(j);
      solutions.push_back(std::move(asg));
    }
  }
  if (arities.empty() || depth <= 0) return std::nullopt;
  const std::size_t pick = uniform(rng_, arities.size());
  const auto& asg = solutions[pick];
  Expr t = head, ty = head_type;
  for (std::size_t i = 0; i < arities[pick]; ++i) {
    std::optional<Expr> a = asg[i];
    if (!a) a = term(ctx, ty.child(0), depth - 1);
    if (!a) return std::nullopt;
    t = Expr::app(t, *a);
    ty = instantiate(ty.child(1), *a);
  }
  if (!(ty == goal)) return std::nullopt;
  return t;
}

std::optional<Expr> Synthesizer::term(const Context& ctx, const Expr& goal, int depth) {
  if (depth < 0) return std::nullopt;
  auto intro = [&]() -> std::optional<Expr> {
    switch (goal.kind()) {
      case K::Unit: return Expr::star();
      case K::Id:
        if (goal.child(0) == goal.child(1)) return Expr::refl(goal.child(0));
        return std::nullopt;
      case K::Sigma: {
        auto a = term(ctx, goal.child(0), depth - 1);
        if (!a) return std::nullopt;
        auto b = term(ctx, instantiate(goal.child(1), *a), depth - 1);
        if (!b) return std::nullopt;
        return Expr::pair(*a, *b);
      }
      case K::Pi: {
        std::string x = fresh_name(ctx);
        auto body = term(extended(ctx, x, goal.child(0)), goal.child(1), depth - 1);
        if (!body) return std::nullopt;
        return Expr::lam(x, goal.child(0), *body);
      }
      default: return std::nullopt;
    }
  };
  auto elim = [&]() -> std::optional<Expr> {
    auto hs = heads(ctx);
    for (std::size_t i = hs.size(); i > 1; --i) std::swap(hs[i - 1], hs[uniform(rng_, i)]);
    for (const auto& [h, ht] : hs)
      if (auto t = from_head(ctx, h, ht, goal, depth)) return t;
    return std::nullopt;
  };
  if (uniform(rng_, 3) == 0) {
    if (auto t = elim()) return t;
    return intro();
  }
  if (auto t = intro()) return t;
  return elim();
}

Expr Synthesizer::type(const Context& ctx, int depth) {
  std::vector<const Decl*> tcs;
  for (const Decl& d : sig_.decls())
    if (d.kind == Decl::Kind::Type) tcs.push_back(&d);
  const std::size_t choice = depth <= 0 ? uniform(rng_, 2) : uniform(rng_, 7);
  switch (choice) {
    case 0: return Expr::unit();
    case 1: case 2: case 3: {
      if (tcs.empty()) return Expr::unit();
      for (int attempt = 0; attempt < 3; ++attempt) {
        const Decl& d = *tcs[uniform(rng_, tcs.size())];
        Substitution args;
        bool ok = true;
        for (const auto& a : d.args) {
          auto t = term(ctx, apply_subst(args, a.expr), std::max(depth - 1, 1));
          if (!t) {
            ok = false;
            break;
          }
          args.push_back({a.name, *t});
        }
        if (!ok) continue;
        std::vector<Expr> kids;
        for (const auto& a : args) kids.push_back(a.expr);
        return Expr::type_app(d.name, kids);
      }
      return Expr::unit();
    }
    case 4: {
      Expr a = type(ctx, depth - 1);
      // Id infers the type of its sides, and pairs only check.
      auto s = term(ctx, a, depth - 1);
      if (!s || s->is(K::Pair)) return Expr::unit();
      auto s2 = uniform(rng_, 2) ? term(ctx, a, depth - 1) : s;
      if (!s2 || s2->is(K::Pair)) s2 = s;
      return Expr::id(*s, *s2);
    }
    default: {
      Expr a = type(ctx, depth - 1);
      std::string x = fresh_name(ctx);
      Expr b = type(extended(ctx, x, a), depth - 1);
      return choice == 5 ? Expr::sigma(x, a, b) : Expr::pi(x, a, b);
    }
  }
}

Context Synthesizer::context(std::size_t max_size, int depth) {
  Context ctx;
  const std::size_t n = uniform(rng_, max_size + 1);
  for (std::size_t i = 0; i < n; ++i) ctx.push_back({fresh_name(ctx), type(ctx, depth)});
  return ctx;
}

std::optional<Substitution> Synthesizer::subst(const Context& src, const Context& dst, int depth) {
  Substitution gamma;
  for (const auto& d : src) {
    auto t = term(dst, apply_subst(gamma, d.expr), depth);
    if (!t) return std::nullopt;
    gamma.push_back({d.name, *t});
  }
  return gamma;
}

std::optional<Expr> Synthesizer::witness(const Context& ctx, int depth) {
  auto hs = heads(ctx);
  for (std::size_t i = hs.size(); i > 1; --i) std::swap(hs[i - 1], hs[uniform(rng_, i)]);
  for (const auto& [h, ht] : hs) {
    Expr rest = ht;
    while (rest.is(K::Pi)) rest = rest.child(1);
    if (!rest.is(K::Id)) continue;
    Expr t = h, ty = ht;
    bool ok = true;
    while (ty.is(K::Pi)) {
      auto a = term(ctx, ty.child(0), depth - 1);
      if (!a) {
        ok = false;
        break;
      }
      t = Expr::app(t, *a);
      ty = instantiate(ty.child(1), *a);
    }
    if (ok) return t;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// LCC laws

const std::vector<std::string>& law_names() {
  static const std::vector<std::string> names{
      "pullback_square",    "pullback_coherence", "pullback_functor",
      "sigma_adjunction",   "pi_adjunction",      "beck_chevalley_sigma",
      "beck_chevalley_pi",  "split_inverse",      "split_coherence"};
  return names;
}

bool LawReport::ok() const {
  for (const auto& l : laws)
    if (l.counterexample || l.instances == 0) return false;
  return true;
}

namespace {

struct Families {
  std::vector<IndexedSet> sets;
  bool exhaustive = true;
};

Families families(const FinPoset& base, std::size_t max_fiber, std::size_t cap, Rng& rng) {
  Families f;
  for_each_indexed_set(base, max_fiber, [&](const IndexedSet& a) {
    f.sets.push_back(a);
    return f.sets.size() <= cap;
  });
  if (f.sets.size() <= cap) return f;
  f.sets.clear();
  f.exhaustive = false;
  for (std::size_t i = 0; i < cap; ++i) f.sets.push_back(random_indexed_set(base, max_fiber, rng));
  return f;
}

struct Maps {
  std::vector<NatTrans> maps;
  bool exhaustive = true;
};

// Maps into `a` from the families over its base.
Maps maps_into(const IndexedSet& a, std::size_t max_fiber, std::size_t cap, Rng& rng) {
  Maps m;
  Families srcs = families(a.base(), max_fiber, cap, rng);
  m.exhaustive = srcs.exhaustive;
  for (const IndexedSet& s : srcs.sets) {
    std::size_t seen = 0;
    for_each_nat_trans(s, a, [&](const NatTrans& g) {
      if (++seen > cap) return false;
      m.maps.push_back(g);
      return true;
    });
    if (seen > cap) m.exhaustive = false;
  }
  if (m.maps.size() > cap) {
    m.exhaustive = false;
    for (std::size_t i = m.maps.size(); i > 1; --i) std::swap(m.maps[i - 1], m.maps[uniform(rng, i)]);
    m.maps.resize(cap);
  }
  if (m.maps.empty()) m.maps.push_back(NatTrans::identity(a));
  return m;
}

std::string show_map(const NatTrans& g) {
  std::string s = "{src: " + g.src().to_string() + ", dst: " + g.dst().to_string() + ", components: [";
  for (std::size_t p = 0; p < g.components().size(); ++p) {
    if (p) s += "; ";
    for (std::size_t k = 0; k < g.components()[p].size(); ++k)
      s += (k ? " " : "") + std::to_string(g.components()[p][k]);
  }
  return s + "]}";
}

std::optional<IndexedSet> corrupted(const IndexedSet& b) {
  const FinPoset& base = b.base();
  for (std::size_t i = 0; i < base.size(); ++i)
    if (b.fiber_size(i) >= 2) return b.with_corrupted_transport(i, i, 0, 1);
  return std::nullopt;
}

}  // namespace

LawReport run_lcc_laws(std::size_t max_poset, std::size_t max_fiber, const LawOptions& opts) {
  const auto& names = law_names();
  if (opts.only && std::find(names.begin(), names.end(), *opts.only) == names.end())
    throw Error("unknown law '" + *opts.only + "'");
  LawReport report;
  report.max_poset = max_poset;
  report.max_fiber = max_fiber;

  std::vector<IndexedSet> tops;
  for (std::size_t n = 1; n <= max_poset; ++n) {
    auto ps = posets_up_to_iso(n);
    report.posets.push_back(ps.size());
    std::size_t count = 0;
    for (const FinPoset& p : ps)
      for_each_indexed_set(p, max_fiber, [&](const IndexedSet& a) {
        tops.push_back(a);
        ++count;
        return true;
      });
    report.families.push_back(count);
  }

  const std::size_t cap = opts.family_cap;
  std::vector<std::vector<LawStats>> per(tops.size());
  parallel_for(tops.size(), opts.threads, [&](std::size_t idx) {
    const IndexedSet& a = tops[idx];
    Rng rng(mix(opts.seed, idx));
    std::vector<LawStats> stats;
    for (const auto& n : names) stats.push_back(LawStats{n});
    auto run = [&](std::size_t law, const std::function<std::optional<std::string>()>& check,
                   const std::function<std::string()>& describe) {
      if (opts.only && *opts.only != names[law]) return;
      LawStats& st = stats[law];
      if (st.counterexample) return;
      ++st.instances;
      try {
        if (auto w = check()) st.counterexample = *w + "\ninstance: " + describe();
      } catch (const SizeLimitExceeded&) {
        ++st.skipped;
      } catch (const Error& e) {
        st.counterexample = std::string("error: ") + e.what() + "\ninstance: " + describe();
      }
    };
    auto sampled = [&](std::size_t law, bool exhaustive) {
      if (!exhaustive) stats[law].exhaustive = false;
    };

    const FinPoset ga = grothendieck(a);
    Families bs = families(ga, max_fiber, cap, rng);
    Families ds = families(ga, max_fiber, cap, rng);
    Maps gs = maps_into(a, max_fiber, cap, rng);
    Families tests = families(a.base(), 1, opts.test_objects_cap, rng);
    std::vector<Maps> hs;
    for (const NatTrans& g : gs.maps) hs.push_back(maps_into(g.src(), max_fiber, cap, rng));

    for (std::size_t law = 0; law < names.size(); ++law) sampled(law, bs.exhaustive);
    for (std::size_t law : {3u, 4u}) sampled(law, ds.exhaustive);
    for (std::size_t law : {0u, 1u, 2u, 5u, 6u, 8u}) sampled(law, gs.exhaustive);
    sampled(0, tests.exhaustive);
    for (const Maps& h : hs) sampled(1, h.exhaustive);

    for (const IndexedSet& b : bs.sets) {
      const FinPoset gab = grothendieck(grot_pair(a, b).set);
      Families cs = families(gab, max_fiber, cap, rng);
      for (std::size_t law : {3u, 4u, 5u, 6u, 7u, 8u}) sampled(law, cs.exhaustive);

      for (std::size_t gi = 0; gi < gs.maps.size(); ++gi) {
        const NatTrans& g = gs.maps[gi];
        auto desc_gb = [&] { return "g=" + show_map(g) + " B=" + b.to_string(); };
        run(0, [&] { return check_pullback_square(g, b, tests.sets, opts.limit); }, desc_gb);
        for (const NatTrans& h : hs[gi].maps)
          run(1, [&] { return check_pullback_coherence(g, h, b); },
              [&] { return desc_gb() + " h=" + show_map(h); });
        if (opts.corrupt_transport) {
          if (auto bad = corrupted(b))
            run(2, [&] { return check_pullback_functor(g, *bad, opts.limit); },
                [&] { return "g=" + show_map(g) + " B=" + bad->to_string() + " (corrupted)"; });
        } else {
          run(2, [&] { return check_pullback_functor(g, b, opts.limit); }, desc_gb);
        }
      }
      for (const IndexedSet& c : cs.sets) {
        auto desc_abc = [&] {
          return "A=" + a.to_string() + " B=" + b.to_string() + " C=" + c.to_string();
        };
        for (const IndexedSet& d : ds.sets) {
          auto desc = [&] { return desc_abc() + " D=" + d.to_string(); };
          run(3, [&] { return check_sigma_adjunction(a, b, c, d, opts.limit); }, desc);
          run(4, [&] { return check_pi_adjunction(a, b, c, d, opts.limit); }, desc);
        }
        for (const NatTrans& g : gs.maps) {
          auto desc = [&] { return "g=" + show_map(g) + " B=" + b.to_string() + " C=" + c.to_string(); };
          run(5, [&] { return check_beck_chevalley_sigma(g, b, c); }, desc);
          run(6, [&] { return check_beck_chevalley_pi(g, b, c, opts.limit); }, desc);
          run(8, [&] { return check_split_coherence(g, b, c, opts.limit); }, desc);
        }
        run(7, [&] { return check_split_inverse(a, b, c, opts.limit); }, desc_abc);
      }
    }
    per[idx] = std::move(stats);
  });

  for (const auto& n : names)
    if (!opts.only || *opts.only == n) report.laws.push_back(LawStats{n});
  for (const auto& stats : per)
    for (const LawStats& s : stats) {
      auto it = std::find_if(report.laws.begin(), report.laws.end(),
                             [&](const LawStats& l) { return l.name == s.name; });
      if (it == report.laws.end()) continue;
      it->instances += s.instances;
      it->skipped += s.skipped;
      it->exhaustive = it->exhaustive && s.exhaustive;
      if (!it->counterexample && s.counterexample) it->counterexample = s.counterexample;
    }
  return report;
}

IsoReport run_iso_suite(std::size_t max_poset, std::size_t max_fiber, std::size_t maps_per_set) {
  IsoReport r;
  auto fail = [&](std::string msg) {
    if (!r.counterexample) r.counterexample = std::move(msg);
  };
  for (std::size_t n = 1; n <= max_poset && !r.counterexample; ++n)
    for (const FinPoset& p : posets_up_to_iso(n)) {
      std::vector<IndexedSet> sets;
      for_each_indexed_set(p, max_fiber, [&](const IndexedSet& a) {
        sets.push_back(a);
        return true;
      });
      const auto least = p.least();
      for (std::size_t i = 0; i < sets.size() && !r.counterexample; ++i) {
        const IndexedSet& a = sets[i];
        ++r.indexed_sets;
        MonotoneMap fa = to_fibration(a);
        if (!(from_fibration(fa) == a)) fail("I(F(A)) != A for A=" + a.to_string());
        if (!(to_fibration(from_fibration(fa)) == fa)) fail("F(I(F(A))) != F(A) for A=" + a.to_string());
        if (least) {
          ++r.least_element_cases;
          std::size_t sections = 0;
          for_each_section(a, [&](const Section&) {
            ++sections;
            return true;
          });
          if (sections != a.fiber_size(*least))
            fail(std::to_string(sections) + " sections but " + std::to_string(a.fiber_size(*least)) +
                 " elements at the least point for A=" + a.to_string());
        }
        for (std::size_t k = 0; k <= maps_per_set && k < sets.size(); ++k) {
          const IndexedSet& b = sets[(i + k) % sets.size()];
          MonotoneMap fb = to_fibration(b);
          for_each_nat_trans(a, b, [&](const NatTrans& eta) {
            ++r.nat_trans;
            MonotoneMap phi = to_fibration(eta);
            NatTrans back = from_fibration(phi, fa, fb);
            if (!(back == eta)) fail("I(F(eta)) != eta for eta=" + show_map(eta));
            if (!(to_fibration(back) == phi)) fail("F(I(phi)) != phi for eta=" + show_map(eta));
            return !r.counterexample;
          });
        }
      }
    }
  return r;
}

// ---------------------------------------------------------------------------
// Soundness

namespace {

struct IterationResult {
  std::map<std::string, std::size_t> checks;
  std::size_t skipped = 0;
  std::vector<FuzzFailure> failures;
  bool fallback = false;
};

class Fuzzer {
 public:
  Fuzzer(const Kernel& k, const SoundnessOptions& opts, std::size_t iteration, std::uint64_t seed)
      : k_(k), opts_(opts), iteration_(iteration), rng_(seed), syn_(k.signature(), rng_) {}

  IterationResult run() {
    GeneratedModel gm = gen_random_model(k_.signature(), rng_(), opts_.max_poset, opts_.max_fiber);
    out_.fallback = gm.fallback;
    model_ = std::make_unique<Model>(std::move(gm.model));
    in_ = std::make_unique<Interpreter>(*model_, opts_.interp);

    Context ctx;
    for (int attempt = 0; attempt < 10; ++attempt) {
      Context c = syn_.context(3, 2);
      if (k_.check_context(c).accepted()) {
        ctx = std::move(c);
        break;
      }
    }
    const int d = opts_.depth;
    std::vector<std::pair<Expr, Expr>> typed;  // (term, type)
    for (std::size_t i = 0; i < opts_.terms_per_iteration; ++i) {
      Expr goal = syn_.type(ctx, 2);
      auto t = syn_.term(ctx, goal, d);
      if (!t || !k_.check_term(ctx, *t, goal).accepted()) continue;
      typed.emplace_back(*t, goal);
      well_typed(ctx, *t, goal);
    }
    for (const auto& [t, goal] : typed) {
      NormalizeResult nf = k_.normalize(ctx, t);
      if (!nf.fuel_exhausted && !(nf.result == t)) equality(ctx, t, nf.result, goal, std::nullopt);
    }
    for (std::size_t i = 0; i + 1 < typed.size(); ++i)
      for (std::size_t j = i + 1; j < typed.size(); ++j)
        if (typed[i].second == typed[j].second)
          equality(ctx, typed[i].first, typed[j].first, typed[i].second, std::nullopt);
    for (int i = 0; i < 2; ++i)
      if (auto w = syn_.witness(ctx, d - 1)) hinted(ctx, *w);
    substitution(ctx);
    beta(ctx);
    projections(ctx);
    eta(ctx);
    return std::move(out_);
  }

 private:
  const Kernel& k_;
  const SoundnessOptions& opts_;
  std::size_t iteration_;
  Rng rng_;
  Synthesizer syn_;
  std::unique_ptr<Model> model_;
  std::unique_ptr<Interpreter> in_;
  IterationResult out_;

  void fail(const std::string& check, const std::string& detail) {
    out_.failures.push_back({iteration_, check, detail, print_model(*model_)});
  }

  static std::string show(const Context& ctx, const Expr& e) { return print_expr(e, ctx); }

  void well_typed(const Context& ctx, const Expr& t, const Expr& goal) {
    ++out_.checks["well-typed"];
    std::string where = "ctx: " + print_context(ctx) + "; term: " + show(ctx, t) + "; type: " + show(ctx, goal);
    try {
      Section s = in_->term(ctx, t, goal);
      if (auto dd = diff_indexed(s.owner(), in_->type(ctx, goal))) return fail("well-typed", where + "; " + *dd);
      if (t.is(K::Pair)) return;
      JudgmentReport r = k_.infer_type(ctx, t);
      if (!r.accepted()) return;
      Section s2 = in_->term(ctx, t);
      if (auto dd = diff_indexed(s2.owner(), in_->type(ctx, *r.type)))
        return fail("well-typed", where + "; inferred " + show(ctx, *r.type) + "; " + *dd);
    } catch (const SizeLimitExceeded&) {
      ++out_.skipped;
    } catch (const Error& e) {
      fail("well-typed", where + "; " + e.what());
    }
  }

  // s and s2 of type ty; when the kernel accepts s == s2 their denotations must agree.
  void equality(const Context& ctx, const Expr& s, const Expr& s2, const Expr& ty,
                const std::optional<Expr>& hint) {
    JudgmentReport r = k_.equal_terms(ctx, s, s2, hint);
    if (!r.accepted()) return;
    compare("equality", ctx, s, s2, ty, ty, hint ? "; by " + show(ctx, *hint) : "");
  }

  void compare(const std::string& check, const Context& ctx, const Expr& s, const Expr& s2,
               const Expr& ty, const Expr& ty2, const std::string& extra) {
    ++out_.checks[check];
    std::string where = "ctx: " + print_context(ctx) + "; lhs: " + show(ctx, s) + "; rhs: " + show(ctx, s2) + extra;
    try {
      Section a = in_->term(ctx, s, ty);
      Section b = in_->term(ctx, s2, ty2);
      if (auto dd = diff_sections(a, b)) fail(check, where + "; " + *dd);
    } catch (const SizeLimitExceeded&) {
      ++out_.skipped;
    } catch (const Error& e) {
      fail(check, where + "; " + e.what());
    }
  }

  void hinted(const Context& ctx, const Expr& w) {
    JudgmentReport r = k_.infer_type(ctx, w);
    if (!r.accepted() || !r.type->is(K::Id)) return;
    const Expr& l = r.type->child(0);
    const Expr& rr = r.type->child(1);
    if (l.is(K::Pair)) return;
    JudgmentReport lt = k_.infer_type(ctx, l);
    if (!lt.accepted()) return;
    equality(ctx, l, rr, *lt.type, w);
  }

  // The kernel must accept a rule instance and the two sides must denote alike.
  // Instances whose sides do not infer (λ with a pair body) are out of scope.
  void rule_instance(const std::string& check, const Context& ctx, const Expr& lhs, const Expr& rhs,
                     const Expr& ty, const Expr& ty2) {
    if (!k_.infer_type(ctx, lhs).accepted() && !k_.infer_type(ctx, rhs).accepted()) return;
    JudgmentReport r = k_.equal_terms(ctx, lhs, rhs);
    if (!r.accepted()) {
      ++out_.checks[check];
      return fail(check, "ctx: " + print_context(ctx) + "; lhs: " + show(ctx, lhs) + "; rhs: " +
                             show(ctx, rhs) + "; kernel verdict " + to_string(r.verdict) + ": " + r.message);
    }
    compare(check, ctx, lhs, rhs, ty, ty2, "");
  }

  void substitution(const Context& src) {
    const int d = opts_.depth;
    Context dst;
    std::optional<Substitution> gamma;
    if (uniform(rng_, 2) == 0) {
      dst = syn_.context(3, 2);
      if (!k_.check_context(dst).accepted()) return;
      gamma = syn_.subst(src, dst, d - 1);
    } else {
      // Weakening into src, x:A, with some variables replaced by synthesized terms.
      Expr extra = syn_.type(src, 1);
      dst = extended(src, "a" + std::to_string(src.size()), extra);
      if (!k_.check_context(dst).accepted()) return;
      gamma = Substitution{};
      for (std::size_t i = 0; i < src.size(); ++i) {
        Expr goal = apply_subst(*gamma, src[i].expr);
        std::optional<Expr> t;
        if (uniform(rng_, 3) == 0) t = syn_.term(dst, goal, d - 1);
        if (!t) t = Expr::var(src.size() - i, src[i].name);
        gamma->push_back({src[i].name, *t});
      }
    }
    if (!gamma || !k_.check_subst(src, dst, *gamma).accepted()) return;
    SubstInstance inst{src, dst, *gamma, std::nullopt, std::nullopt, {}, std::nullopt};
    Expr s = syn_.type(src, 2);
    if (k_.check_type_wf(src, s).accepted()) {
      inst.type = s;
      auto t = syn_.term(src, s, d - 1);
      if (t && k_.check_term(src, *t, s).accepted()) inst.term = *t;
    }
    Context outer = syn_.context(2, 1);
    if (k_.check_context(outer).accepted()) {
      auto delta = syn_.subst(outer, src, d - 1);
      if (delta && k_.check_subst(outer, src, *delta).accepted()) {
        inst.outer = outer;
        inst.delta = delta;
      }
    }
    std::string where = "src: " + print_context(src) + "; dst: " + print_context(dst) + "; gamma: [";
    for (std::size_t i = 0; i < gamma->size(); ++i)
      where += (i ? ", " : "") + (*gamma)[i].name + " := " + show(dst, (*gamma)[i].expr);
    where += "]";
    if (inst.type) where += "; type: " + show(src, *inst.type);
    if (inst.term) where += "; term: " + show(src, *inst.term);
    if (inst.delta) where += "; outer: " + print_context(inst.outer);
    std::vector<ClauseResult> clauses;
    try {
      clauses = check_substitution_theorem(*in_, inst);
    } catch (const SizeLimitExceeded&) {
      ++out_.skipped;
    }
    for (const ClauseResult& c : clauses) {
      ++out_.checks["subst:" + c.clause];
      if (!c.ok()) fail("subst:" + c.clause, where + "; " + *c.counterexample);
    }
  }

  void beta(const Context& ctx) {
    const int d = opts_.depth;
    Expr a_ty = syn_.type(ctx, 1);
    std::string x = "a" + std::to_string(ctx.size());
    Context inner = extended(ctx, x, a_ty);
    Expr b_ty = syn_.type(inner, 1);
    auto body = syn_.term(inner, b_ty, d - 1);
    auto arg = syn_.term(ctx, a_ty, d - 1);
    if (!body || !arg) return;
    Expr lhs = Expr::app(Expr::lam(x, a_ty, *body), *arg);
    Expr ty = instantiate(b_ty, *arg);
    if (!k_.check_term(ctx, lhs, ty).accepted()) return;
    rule_instance("beta", ctx, lhs, instantiate(*body, *arg), ty, ty);
  }

  void projections(const Context& ctx) {
    const int d = opts_.depth;
    Expr a_ty = syn_.type(ctx, 1);
    std::string x = "a" + std::to_string(ctx.size());
    Expr b_ty = syn_.type(extended(ctx, x, a_ty), 1);
    Expr sig = Expr::sigma(x, a_ty, b_ty);
    auto a = syn_.term(ctx, a_ty, d - 1);
    if (!a) return;
    auto b = syn_.term(ctx, instantiate(b_ty, *a), d - 1);
    if (!b) return;
    Expr p = Expr::pair(*a, *b);
    std::string u = "a" + std::to_string(ctx.size());
    Expr first = Expr::app(Expr::lam(u, sig, Expr::proj1(Expr::var(0, u))), p);
    Expr second = Expr::app(Expr::lam(u, sig, Expr::proj2(Expr::var(0, u))), p);
    if (k_.check_term(ctx, first, a_ty).accepted()) rule_instance("pi", ctx, first, *a, a_ty, a_ty);
    JudgmentReport r2 = k_.infer_type(ctx, second);
    if (r2.accepted()) rule_instance("pi", ctx, second, *b, *r2.type, instantiate(b_ty, *a));
  }

  void eta(const Context& ctx) {
    const int d = opts_.depth;
    Expr a_ty = syn_.type(ctx, 1);
    std::string x = "a" + std::to_string(ctx.size());
    Expr b_ty = syn_.type(extended(ctx, x, a_ty), 1);
    Expr pi = Expr::pi(x, a_ty, b_ty);
    if (auto f = syn_.term(ctx, pi, d - 1); f && k_.check_term(ctx, *f, pi).accepted()) {
      Expr expanded = Expr::lam(x, a_ty, Expr::app(shift(*f, 1), Expr::var(0, x)));
      rule_instance("eta", ctx, *f, expanded, pi, pi);
    }
    Expr sig = Expr::sigma(x, a_ty, b_ty);
    for (int attempt = 0; attempt < 3; ++attempt) {
      auto p = syn_.term(ctx, sig, d - 1);
      if (!p || p->is(K::Pair)) continue;
      if (!k_.check_term(ctx, *p, sig).accepted()) continue;
      rule_instance("eta", ctx, *p, Expr::pair(Expr::proj1(*p), Expr::proj2(*p)), sig, sig);
      break;
    }
  }
};

}  // namespace

SoundnessReport run_soundness_fuzz(const Signature& sig, std::uint64_t seed, std::size_t iterations,
                                   const SoundnessOptions& opts) {
  SoundnessReport report;
  report.seed = seed;
  report.iterations = iterations;
  report.theory = print_signature(sig);
  Kernel kernel(sig, KernelOptions{opts.fuel});
  if (!kernel.check_signature().accepted()) throw ValidationError("signature rejected by the kernel");
  std::vector<IterationResult> results(iterations);
  parallel_for(iterations, opts.threads, [&](std::size_t i) {
    results[i] = Fuzzer(kernel, opts, i, mix(seed, i)).run();
  });
  for (auto& r : results) {
    for (const auto& [k, v] : r.checks) report.checks[k] += v;
    if (r.fallback) ++report.fallback_models;
    report.skipped += r.skipped;
    for (auto& f : r.failures) report.failures.push_back(std::move(f));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Countermodels

CountermodelResult search_countermodel(const Signature& sig, const Context& ctx, const Expr& s,
                                       std::size_t max_poset, std::size_t max_fiber) {
  CountermodelResult r;
  for_each_model(sig, max_poset, max_fiber, [&](const Model& m) {
    ++r.models_tried;
    Interpreter in(m);
    bool inhabited = !for_each_section(in.type(ctx, s), [](const Section&) { return false; });
    if (inhabited) return true;
    r.model = m;
    return false;
  });
  return r;
}

// ---------------------------------------------------------------------------
// Reports

std::string to_json(const LawReport& r) {
  json j;
  j["max_poset"] = r.max_poset;
  j["max_fiber"] = r.max_fiber;
  j["posets"] = r.posets;
  j["families"] = r.families;
  json laws = json::array();
  for (const auto& l : r.laws) {
    json e{{"name", l.name}, {"instances", l.instances}, {"skipped", l.skipped},
           {"exhaustive", l.exhaustive}, {"passed", !l.counterexample && l.instances > 0}};
    e["counterexample"] = l.counterexample ? json(*l.counterexample) : json(nullptr);
    laws.push_back(e);
  }
  j["laws"] = laws;
  j["ok"] = r.ok();
  return j.dump(2);
}

std::string to_text(const LawReport& r) {
  std::string out = "laws up to |P| <= " + std::to_string(r.max_poset) + ", fibers <= " +
                    std::to_string(r.max_fiber) + "\nposets per size:";
  for (auto n : r.posets) out += " " + std::to_string(n);
  out += "\nindexed sets per size:";
  for (auto n : r.families) out += " " + std::to_string(n);
  out += "\n";
  for (const auto& l : r.laws) {
    out += (l.counterexample || l.instances == 0 ? "FAIL " : "ok   ") + l.name + ": " +
           std::to_string(l.instances) + " instances, " + std::to_string(l.skipped) + " skipped, " +
           (l.exhaustive ? "exhaustive" : "sampled") + "\n";
    if (l.counterexample) out += "  counterexample: " + *l.counterexample + "\n";
  }
  return out + (r.ok() ? "all laws hold\n" : "some laws fail\n");
}

std::string to_json(const IsoReport& r) {
  json j{{"indexed_sets", r.indexed_sets}, {"nat_trans", r.nat_trans},
         {"least_element_cases", r.least_element_cases}};
  j["counterexample"] = r.counterexample ? json(*r.counterexample) : json(nullptr);
  j["ok"] = r.ok();
  return j.dump(2);
}

std::string to_text(const IsoReport& r) {
  std::string out = std::to_string(r.indexed_sets) + " indexed sets, " + std::to_string(r.nat_trans) +
                    " natural transformations, " + std::to_string(r.least_element_cases) +
                    " least-element cases\n";
  if (r.counterexample) out += "counterexample: " + *r.counterexample + "\n";
  return out + (r.ok() ? "round trips hold\n" : "round trips fail\n");
}

std::string to_json(const SoundnessReport& r) {
  json j;
  j["seed"] = r.seed;
  j["iterations"] = r.iterations;
  json checks = json::object();
  for (const auto& [k, v] : r.checks) checks[k] = v;
  j["checks"] = checks;
  j["fallback_models"] = r.fallback_models;
  j["skipped"] = r.skipped;
  json fails = json::array();
  for (const auto& f : r.failures)
    fails.push_back({{"iteration", f.iteration}, {"check", f.check}, {"detail", f.detail},
                     {"theory", r.theory}, {"model", json::parse(f.model)}});
  j["failures"] = fails;
  j["ok"] = r.ok();
  return j.dump(2);
}

std::string to_text(const SoundnessReport& r) {
  std::string out = "soundness fuzz: seed " + std::to_string(r.seed) + ", " +
                    std::to_string(r.iterations) + " iterations, " +
                    std::to_string(r.fallback_models) + " terminal-model fallbacks, " +
                    std::to_string(r.skipped) + " instances over the enumeration budget\n";
  for (const auto& [k, v] : r.checks) out += "  " + k + ": " + std::to_string(v) + "\n";
  out += std::to_string(r.failures.size()) + " failures\n";
  if (!r.failures.empty()) {
    const auto& f = r.failures.front();
    out += "first failure (iteration " + std::to_string(f.iteration) + ", " + f.check + "): " +
           f.detail + "\ntheory:\n" + r.theory + "model:\n" + f.model + "\n";
  }
  return out;
}

std::string to_json(const CountermodelResult& r, const Context& ctx, const Expr& s) {
  json j;
  j["type"] = print_expr(s, ctx);
  j["context"] = print_context(ctx);
  j["models_tried"] = r.models_tried;
  j["result"] = r.model ? "countermodel" : "exhausted";
  j["model"] = r.model ? json::parse(print_model(*r.model)) : json(nullptr);
  return j.dump(2);
}

std::string to_text(const CountermodelResult& r, const Context& ctx, const Expr& s) {
  std::string head = "type " + print_expr(s, ctx);
  if (!ctx.empty()) head += " in context " + print_context(ctx);
  if (!r.model)
    return head + ": exhausted after " + std::to_string(r.models_tried) + " models\n";
  return head + ": countermodel found after " + std::to_string(r.models_tried) + " models\n" +
         print_model(*r.model) + "\n";
}

}  // namespace mltt
