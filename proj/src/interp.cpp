#include "mltt/interp.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mltt/error.hpp"
#include "mltt/subst.hpp"

namespace mltt {

namespace {

using json = nlohmann::ordered_json;
using K = Expr::Kind;

std::string show_fiber(std::span<const Elem> fiber) {
  std::string s = "{";
  for (std::size_t i = 0; i < fiber.size(); ++i) s += (i ? ", " : "") + fiber[i].to_string();
  return s + "}";
}

Elem parse_elem(const std::string& text, const std::string& what) {
  try {
    return Elem::parse(text);
  } catch (const Error&) {
    throw ValidationError(what + ": '" + text + "' is not a value");
  }
}

const json& member(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(where + ": missing '" + key + "'");
  return j.at(key);
}

std::string as_string(const json& j, const std::string& where) {
  if (!j.is_string()) throw ValidationError(where + ": expected a string, found " + j.dump());
  return j.get<std::string>();
}

std::vector<Expr> ctx_types(const Context& ctx) {
  std::vector<Expr> out;
  out.reserve(ctx.size());
  for (const auto& d : ctx) out.push_back(d.expr);
  return out;
}

Context extended(const Context& ctx, const std::string& name, const Expr& ty) {
  Context out = ctx;
  out.push_back({name, ty});
  return out;
}

Substitution prefix(const Substitution& gamma, std::size_t n) {
  return Substitution(gamma.begin(), gamma.begin() + static_cast<std::ptrdiff_t>(n));
}

IndexedSet parse_type_interp(const std::string& name, const json& spec, const FinPoset& over) {
  const std::string where = "type " + name;
  const json& fibers = member(spec, "fibers", where);
  if (!fibers.is_object()) throw ValidationError(where + ": 'fibers' must be an object");
  std::vector<std::optional<std::vector<Elem>>> fib(over.size());
  for (const auto& [key, vals] : fibers.items()) {
    Elem e = parse_elem(key, where + ": fiber key");
    auto x = over.find(e);
    if (!x) throw ValidationError(where + ": fiber key " + key + " is not an element of the category of elements of its argument context");
    if (!vals.is_array()) throw ValidationError(where + ": fiber " + key + " must be an array");
    std::vector<Elem> v;
    for (const auto& a : vals) v.push_back(parse_elem(as_string(a, where), where + ": fiber " + key));
    std::set<Elem> uniq(v.begin(), v.end());
    if (uniq.size() != v.size()) throw ValidationError(where + ": fiber " + key + " repeats an element");
    fib[*x] = std::move(v);
  }
  for (std::size_t x = 0; x < over.size(); ++x)
    if (!fib[x]) throw ValidationError(where + ": no fiber for " + over.elem(x).to_string());

  std::map<std::pair<std::size_t, std::size_t>, std::map<Elem, Elem>> maps;
  if (spec.contains("maps")) {
    const json& mj = spec.at("maps");
    if (!mj.is_object()) throw ValidationError(where + ": 'maps' must be an object");
    for (const auto& [key, table] : mj.items()) {
      auto sep = key.find("<=");
      if (sep == std::string::npos) throw ValidationError(where + ": map key " + key + " lacks '<='");
      auto lo = over.find(parse_elem(key.substr(0, sep), where + ": map key"));
      auto hi = over.find(parse_elem(key.substr(sep + 2), where + ": map key"));
      if (!lo || !hi) throw ValidationError(where + ": map key " + key + " names a non-element");
      if (!over.leq(*lo, *hi)) throw ValidationError(where + ": map key " + key + " is not an order relation");
      if (!table.is_object()) throw ValidationError(where + ": map " + key + " must be an object");
      auto& m = maps[{*lo, *hi}];
      for (const auto& [from, to] : table.items())
        m[parse_elem(from, where + ": map " + key)] = parse_elem(as_string(to, where), where + ": map " + key);
    }
  }
  auto label = [&](std::size_t i, std::size_t j) {
    return over.elem(i).to_string() + "<=" + over.elem(j).to_string();
  };
  try {
    return IndexedSet::build(
        over, [&](std::size_t x) { return *fib[x]; },
        [&](std::size_t i, std::size_t j, const Elem& a) {
          auto it = maps.find({i, j});
          if (it == maps.end()) {
            if (i == j) return a;
            throw ValidationError("no map " + label(i, j));
          }
          auto v = it->second.find(a);
          if (v == it->second.end())
            throw ValidationError("map " + label(i, j) + " has no entry for " + a.to_string());
          return v->second;
        });
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": " + e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Model files

Model parse_model(const Signature& sig, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model: malformed JSON: ") + e.what());
  }
  const json& pj = member(j, "poset", "model");
  std::vector<Elem> elems;
  for (const auto& e : member(pj, "elems", "poset")) elems.push_back(parse_elem(as_string(e, "poset"), "poset element"));
  std::vector<std::pair<Elem, Elem>> pairs;
  if (pj.contains("leq")) {
    for (const auto& pr : pj.at("leq")) {
      if (!pr.is_array() || pr.size() != 2) throw ValidationError("poset: leq entries must be [lo, hi] pairs");
      pairs.emplace_back(parse_elem(as_string(pr[0], "poset"), "poset"), parse_elem(as_string(pr[1], "poset"), "poset"));
    }
  }
  Model m{sig, FinPoset::from_pairs(std::move(elems), pairs), {}, {}};

  const json empty = json::object();
  const json& types = j.contains("types") ? j.at("types") : empty;
  const json& consts = j.contains("consts") ? j.at("consts") : empty;
  for (const auto& [name, _] : types.items()) {
    auto k = sig.find(name);
    if (!k) throw ValidationError("model: unknown constant '" + name + "'");
    if (sig.decl(*k).kind != Decl::Kind::Type) throw ValidationError("model: '" + name + "' is not a type constant");
  }
  for (const auto& [name, _] : consts.items()) {
    auto k = sig.find(name);
    if (!k) throw ValidationError("model: unknown constant '" + name + "'");
    if (sig.decl(*k).kind != Decl::Kind::Term) throw ValidationError("model: '" + name + "' is not a term constant");
  }

  for (const Decl& d : sig.decls()) {
    Interpreter in(m);
    if (d.kind == Decl::Kind::Type) {
      if (!types.contains(d.name)) throw ValidationError("model: no interpretation for type " + d.name);
      m.types.emplace(d.name, parse_type_interp(d.name, types.at(d.name), in.total(d.args)));
    } else {
      const std::string where = "const " + d.name;
      if (!consts.contains(d.name)) throw ValidationError("model: no interpretation for const " + d.name);
      const json& cj = consts.at(d.name);
      if (!cj.is_object()) throw ValidationError(where + ": expected an object");
      std::map<Elem, Elem> vals;
      for (const auto& [p, v] : cj.items()) {
        Elem pe = parse_elem(p, where);
        if (!m.base.find(pe)) throw ValidationError(where + ": " + p + " is not a poset element");
        vals[pe] = parse_elem(as_string(v, where), where);
      }
      const IndexedSet& owner = in.type({}, d.type);
      const FinPoset& tot = owner.base();
      try {
        m.terms.emplace(d.name, Section::build(owner, [&](std::size_t x) {
          Elem p = tot.elem(x).first();
          auto it = vals.find(p);
          if (it == vals.end()) throw ValidationError("no value at " + p.to_string());
          return it->second;
        }));
      } catch (const ValidationError& e) {
        throw ValidationError(where + ": section incompatible with its type: " + e.what());
      }
    }
  }
  return m;
}

Model load_model(const Signature& sig, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(sig, ss.str());
}

std::string print_model(const Model& m) {
  json j;
  json elems = json::array(), leq = json::array();
  for (const Elem& e : m.base.elems()) elems.push_back(e.to_string());
  for (std::size_t i = 0; i < m.base.size(); ++i)
    for (std::size_t k : m.base.above(i))
      if (k != i) leq.push_back({m.base.elem(i).to_string(), m.base.elem(k).to_string()});
  j["poset"] = {{"elems", elems}, {"leq", leq}};
  json types = json::object(), consts = json::object();
  for (const Decl& d : m.sig.decls()) {
    if (d.kind == Decl::Kind::Type) {
      const IndexedSet& a = m.types.at(d.name);
      const FinPoset& over = a.base();
      json fibers = json::object(), maps = json::object();
      for (std::size_t x = 0; x < over.size(); ++x) {
        json f = json::array();
        for (const Elem& e : a.fiber(x)) f.push_back(e.to_string());
        fibers[over.elem(x).to_string()] = f;
      }
      for (std::size_t x = 0; x < over.size(); ++x)
        for (std::size_t y : over.above(x)) {
          if (y == x) continue;
          json t = json::object();
          for (const Elem& e : a.fiber(x)) t[e.to_string()] = a.transport(x, y, e).to_string();
          maps[over.elem(x).to_string() + "<=" + over.elem(y).to_string()] = t;
        }
      types[d.name] = {{"fibers", fibers}, {"maps", maps}};
    } else {
      const Section& s = m.terms.at(d.name);
      json c = json::object();
      for (std::size_t x = 0; x < s.owner().base().size(); ++x)
        c[s.owner().base().elem(x).first().to_string()] = s.at(x).to_string();
      consts[d.name] = c;
    }
  }
  j["types"] = types;
  j["consts"] = consts;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Interpreter

std::size_t Interpreter::KeyHash::operator()(const Key& k) const {
  std::size_t h = k.e.hash();
  for (const Expr& t : k.ctx) h = h * 1000003u ^ t.hash();
  return h;
}

Interpreter::Interpreter(Model m, InterpOptions opts)
    : m_(std::move(m)), opts_(opts), closed_total_(grothendieck(one_point(m_.base))) {}

const Interpreter::CtxSem& Interpreter::ctx_sem(const Context& ctx) {
  Key key{ctx_types(ctx), Expr()};
  if (auto it = contexts_.find(key); it != contexts_.end()) return it->second;
  IndexedSet set;
  if (ctx.empty()) {
    set = one_point(m_.base);
  } else {
    Context pre(ctx.begin(), ctx.end() - 1);
    const IndexedSet& prev = ctx_sem(pre).set;
    set = grot_pair(prev, type(pre, ctx.back().expr)).set;
  }
  FinPoset tot = grothendieck(set);
  return contexts_.emplace(std::move(key), CtxSem{std::move(set), std::move(tot)}).first->second;
}

const IndexedSet& Interpreter::context(const Context& ctx) { return ctx_sem(ctx).set; }
const FinPoset& Interpreter::total(const Context& ctx) { return ctx_sem(ctx).total; }

NatTrans Interpreter::subst(const Context& src, const Context& dst, const Substitution& gamma) {
  if (gamma.size() != src.size())
    throw ValidationError("substitution has " + std::to_string(gamma.size()) + " terms for " +
                          std::to_string(src.size()) + " variables");
  std::vector<Section> parts;
  parts.reserve(gamma.size());
  for (std::size_t i = 0; i < gamma.size(); ++i)
    parts.push_back(term(dst, gamma[i].expr, apply_subst(prefix(gamma, i), src[i].expr)));
  const FinPoset& tot = total(dst);
  const FinPoset& base = m_.base;
  return NatTrans::build(context(dst), context(src), [&](std::size_t p, const Elem& alpha) {
    std::size_t x = tot.index_of(Elem::pair(base.elem(p), alpha));
    Elem acc = Elem::unit();
    for (const Section& s : parts) acc = Elem::pair(acc, s.at(x));
    return acc;
  });
}

const IndexedSet& Interpreter::type(const Context& ctx, const Expr& s) {
  Key key{ctx_types(ctx), s};
  if (auto it = types_.find(key); it != types_.end()) return it->second;
  IndexedSet out;
  switch (s.kind()) {
    case K::Unit:
      out = one_point(total(ctx));
      break;
    case K::TypeApp: {
      auto k = m_.sig.find(s.name());
      if (!k || m_.sig.decl(*k).kind != Decl::Kind::Type)
        throw ValidationError("unknown type constant '" + s.name() + "'");
      const Decl& d = m_.sig.decl(*k);
      auto it = m_.types.find(s.name());
      if (it == m_.types.end()) throw ValidationError("model has no interpretation for " + s.name());
      Substitution args;
      for (std::size_t i = 0; i < s.children().size(); ++i)
        args.push_back({i < d.args.size() ? d.args[i].name : "", s.child(i)});
      out = precompose(to_fibration(subst(d.args, ctx, args)), it->second);
      break;
    }
    case K::Id: {
      Section a = term(ctx, s.child(0));
      Section b = term(ctx, s.child(1), infer(ctx, s.child(0)));
      out = IndexedSet::build(
          total(ctx),
          [&](std::size_t x) {
            return a.at(x) == b.at(x) ? std::vector<Elem>{Elem::unit()} : std::vector<Elem>{};
          },
          [](std::size_t, std::size_t, const Elem& e) { return e; });
      break;
    }
    case K::Sigma: {
      const IndexedSet& dom = type(ctx, s.child(0));
      const IndexedSet& cod = type(extended(ctx, s.name(), s.child(0)), s.child(1));
      out = dep_sum(context(ctx), dom, cod);
      break;
    }
    case K::Pi:
      out = dep_prod_of(ctx, s).set;
      break;
    default:
      throw ValidationError("expected a type, found " + print_expr(s, ctx));
  }
  return types_.emplace(std::move(key), std::move(out)).first->second;
}

const DepProd& Interpreter::dep_prod_of(const Context& ctx, const Expr& pi) {
  Key key{ctx_types(ctx), pi};
  if (auto it = prods_.find(key); it != prods_.end()) return *it->second;
  const IndexedSet& dom = type(ctx, pi.child(0));
  const IndexedSet& cod = type(extended(ctx, pi.name(), pi.child(0)), pi.child(1));
  auto d = std::make_unique<DepProd>(dep_prod(context(ctx), dom, cod, opts_.section_limit));
  return *prods_.emplace(std::move(key), std::move(d)).first->second;
}

Expr Interpreter::infer(const Context& ctx, const Expr& t) const {
  switch (t.kind()) {
    case K::Const: {
      auto k = m_.sig.find(t.name());
      if (!k || m_.sig.decl(*k).kind != Decl::Kind::Term)
        throw ValidationError("unknown term constant '" + t.name() + "'");
      return m_.sig.decl(*k).type;
    }
    case K::Var:
      if (t.index() >= ctx.size()) throw ValidationError("unbound variable #" + std::to_string(t.index()));
      return var_type(ctx, t.index());
    case K::Star: return Expr::unit();
    case K::Refl: return Expr::id(t.child(0), t.child(0));
    case K::Proj1: case K::Proj2: {
      if (t.child(0).is(K::Pair)) return infer(ctx, t.child(0).child(t.is(K::Proj1) ? 0 : 1));
      Expr u = infer(ctx, t.child(0));
      if (!u.is(K::Sigma)) throw ValidationError("projection from a non-Sigma type");
      return t.is(K::Proj1) ? u.child(0) : instantiate(u.child(1), Expr::proj1(t.child(0)));
    }
    case K::Lam:
      return Expr::pi(t.name(), t.child(0), infer(extended(ctx, t.name(), t.child(0)), t.child(1)));
    case K::App: {
      Expr f = infer(ctx, t.child(0));
      if (!f.is(K::Pi)) throw ValidationError("application of a non-function");
      return instantiate(f.child(1), t.child(1));
    }
    case K::Pair:
      // Only reached under a projection; the kernel types such pairs non-dependently.
      return Expr::sigma("x", infer(ctx, t.child(0)), shift(infer(ctx, t.child(1)), 1));
    default:
      throw ValidationError("expected a term, found " + print_expr(t, ctx));
  }
}

Elem Interpreter::const_value(const std::string& name, const Elem& point) {
  auto it = m_.terms.find(name);
  if (it == m_.terms.end()) throw ValidationError("model has no interpretation for " + name);
  return it->second.at(closed_total_.index_of(Elem::pair(point, Elem::unit())));
}

Section Interpreter::term(const Context& ctx, const Expr& t) { return build_term(ctx, t, nullptr); }

Section Interpreter::term(const Context& ctx, const Expr& t, const Expr& s) {
  return build_term(ctx, t, &s);
}

Section Interpreter::lambda(const Context& ctx, const Expr& t, const Expr& pi_type) {
  Context inner = extended(ctx, t.name(), pi_type.child(0));
  Section body = build_term(inner, t.child(1), &pi_type.child(1));
  const DepProd& pi = dep_prod_of(ctx, pi_type);
  if (opts_.mutant_lambda) {
    // Evaluate the body at the first element of each domain fiber only.
    const FinPoset& tot = total(ctx);
    const FinPoset& in_tot = total(inner);
    const IndexedSet& dom = type(ctx, pi_type.child(0));
    body = Section::build(pi.c, [&](std::size_t z) {
      const Elem& e = in_tot.elem(z);  // (p,(α,a))
      Elem pa = Elem::pair(e.first(), e.second().first());
      Elem a0 = dom.fiber(tot.index_of(pa)).front();
      return body.at(in_tot.index_of(Elem::pair(e.first(), Elem::pair(e.second().first(), a0))));
    });
  }
  return split(pi, body);
}

Section Interpreter::build_term(const Context& ctx, const Expr& t, const Expr* expected) {
  if (t.is(K::Pair)) {
    if (!expected || !expected->is(K::Sigma))
      throw ValidationError("pair " + print_expr(t, ctx) + " needs a Sigma type");
    const IndexedSet& owner = type(ctx, *expected);
    Section a = build_term(ctx, t.child(0), &expected->child(0));
    Expr b_ty = instantiate(expected->child(1), t.child(0));
    Section b = build_term(ctx, t.child(1), &b_ty);
    return Section::build(owner, [&](std::size_t x) { return Elem::pair(a.at(x), b.at(x)); });
  }
  if (t.is(K::Lam) && expected && expected->is(K::Pi) && expected->child(0) == t.child(0))
    return lambda(ctx, t, *expected);
  // A projection of a literal pair has no Sigma type to build the pair at.
  if ((t.is(K::Proj1) || t.is(K::Proj2)) && t.child(0).is(K::Pair))
    return build_term(ctx, t.child(0).child(t.is(K::Proj1) ? 0 : 1), expected);

  Expr ty = infer(ctx, t);
  const FinPoset& tot = total(ctx);
  Section out;
  switch (t.kind()) {
    case K::Const:
      out = Section::build(type(ctx, ty), [&](std::size_t x) {
        return const_value(t.name(), tot.elem(x).first());
      });
      break;
    case K::Var:
      out = Section::build(type(ctx, ty), [&](std::size_t x) {
        Elem alpha = tot.elem(x).second();
        for (std::size_t i = 0; i < t.index(); ++i) alpha = alpha.first();
        return alpha.second();
      });
      break;
    case K::Star: case K::Refl:
      out = Section::build(type(ctx, ty), [](std::size_t) { return Elem::unit(); });
      break;
    case K::Proj1: case K::Proj2: {
      Section p = build_term(ctx, t.child(0), nullptr);
      bool first = t.is(K::Proj1);
      out = Section::build(type(ctx, ty), [&](std::size_t x) {
        Elem v = p.at(x);
        return first ? v.first() : v.second();
      });
      break;
    }
    case K::Lam:
      out = lambda(ctx, t, ty);
      break;
    case K::App: {
      Expr f_ty = infer(ctx, t.child(0));
      Section f = build_term(ctx, t.child(0), nullptr);
      Section s = build_term(ctx, t.child(1), &f_ty.child(0));
      const DepProd& pi = dep_prod_of(ctx, f_ty);
      MonotoneMap at_s = compose(assoc_map(context(ctx), pi.b), to_fibration(s));
      out = compose_section(at_s, unsplit(pi, f));
      const IndexedSet& owner = type(ctx, ty);
      if (!(out.owner() == owner))
        throw ValidationError("application " + print_expr(t, ctx) +
                              ": pulled-back codomain differs from the denotation of its type: " +
                              diff_indexed(out.owner(), owner).value_or(""));
      break;
    }
    default:
      throw ValidationError("expected a term, found " + print_expr(t, ctx));
  }
  if (expected && !(*expected == ty)) {
    const IndexedSet& owner = type(ctx, *expected);
    if (!(owner == out.owner()))
      throw ValidationError("types " + print_expr(ty, ctx) + " and " + print_expr(*expected, ctx) +
                            " have different denotations: " +
                            diff_indexed(out.owner(), owner).value_or(""));
  }
  return out;
}

IndexedSet interp_context(const Model& m, const Context& ctx) { return Interpreter(m).context(ctx); }

NatTrans interp_subst(const Model& m, const Context& src, const Context& dst,
                      const Substitution& gamma) {
  return Interpreter(m).subst(src, dst, gamma);
}

IndexedSet interp_type(const Model& m, const Context& ctx, const Expr& s) {
  return Interpreter(m).type(ctx, s);
}

Section interp_term(const Model& m, const Context& ctx, const Expr& t) {
  return Interpreter(m).term(ctx, t);
}

// ---------------------------------------------------------------------------
// Diffs

std::optional<std::string> diff_indexed(const IndexedSet& lhs, const IndexedSet& rhs) {
  if (lhs == rhs) return std::nullopt;
  if (!(lhs.base() == rhs.base()))
    return "bases differ: " + lhs.base().to_string() + " vs " + rhs.base().to_string();
  const FinPoset& b = lhs.base();
  for (std::size_t x = 0; x < b.size(); ++x) {
    auto fl = lhs.fiber(x), fr = rhs.fiber(x);
    if (!std::equal(fl.begin(), fl.end(), fr.begin(), fr.end()))
      return "at " + b.elem(x).to_string() + ": " + show_fiber(fl) + " vs " + show_fiber(fr);
  }
  for (std::size_t x = 0; x < b.size(); ++x)
    for (std::size_t y : b.above(x))
      for (const Elem& e : lhs.fiber(x)) {
        Elem l = lhs.transport(x, y, e), r = rhs.transport(x, y, e);
        if (!(l == r))
          return "transport " + b.elem(x).to_string() + "<=" + b.elem(y).to_string() + " of " +
                 e.to_string() + ": " + l.to_string() + " vs " + r.to_string();
      }
  return "indexed sets differ";
}

std::optional<std::string> diff_sections(const Section& lhs, const Section& rhs) {
  if (lhs == rhs) return std::nullopt;
  if (auto d = diff_indexed(lhs.owner(), rhs.owner())) return "owners differ: " + *d;
  const FinPoset& b = lhs.owner().base();
  for (std::size_t x = 0; x < b.size(); ++x)
    if (!(lhs.at(x) == rhs.at(x)))
      return "at " + b.elem(x).to_string() + ": " + lhs.at(x).to_string() + " vs " + rhs.at(x).to_string();
  return "sections differ";
}

std::optional<std::string> diff_nat(const NatTrans& lhs, const NatTrans& rhs) {
  if (lhs == rhs) return std::nullopt;
  if (auto d = diff_indexed(lhs.src(), rhs.src())) return "sources differ: " + *d;
  if (auto d = diff_indexed(lhs.dst(), rhs.dst())) return "targets differ: " + *d;
  const FinPoset& b = lhs.src().base();
  for (std::size_t p = 0; p < b.size(); ++p)
    for (const Elem& a : lhs.src().fiber(p)) {
      Elem l = lhs.apply(p, a), r = rhs.apply(p, a);
      if (!(l == r))
        return "at (" + b.elem(p).to_string() + "," + a.to_string() + "): " + l.to_string() +
               " vs " + r.to_string();
    }
  return "natural transformations differ";
}

// ---------------------------------------------------------------------------
// Substitution theorem

std::vector<ClauseResult> check_substitution_theorem(Interpreter& in, const SubstInstance& inst) {
  std::vector<ClauseResult> out;
  auto clause = [&](const char* name, const std::function<std::optional<std::string>()>& f) {
    ClauseResult r{name, std::nullopt};
    try {
      r.counterexample = f();
    } catch (const SizeLimitExceeded&) {
      throw;
    } catch (const Error& e) {
      r.counterexample = std::string("error: ") + e.what();
    }
    out.push_back(std::move(r));
  };
  std::optional<NatTrans> g;
  auto sem_gamma = [&]() -> const NatTrans& {
    if (!g) g = in.subst(inst.src, inst.dst, inst.gamma);
    return *g;
  };

  if (inst.delta) {
    clause("composition", [&] {
      NatTrans lhs = in.subst(inst.outer, inst.dst, compose_subst(*inst.delta, inst.gamma));
      NatTrans rhs = compose(in.subst(inst.outer, inst.src, *inst.delta), sem_gamma());
      return diff_nat(lhs, rhs);
    });
  }
  if (inst.type) {
    const Expr& s = *inst.type;
    clause("type", [&] {
      const IndexedSet& lhs = in.type(inst.dst, apply_subst(inst.gamma, s));
      IndexedSet rhs = precompose(to_fibration(sem_gamma()), in.type(inst.src, s));
      return diff_indexed(lhs, rhs);
    });
  }
  if (inst.term) {
    clause("term", [&] {
      const Expr& t = *inst.term;
      Section lhs = inst.type ? in.term(inst.dst, apply_subst(inst.gamma, t), apply_subst(inst.gamma, *inst.type))
                              : in.term(inst.dst, apply_subst(inst.gamma, t));
      Section base = inst.type ? in.term(inst.src, t, *inst.type) : in.term(inst.src, t);
      Section rhs = compose_section(to_fibration(sem_gamma()), base);
      return diff_sections(lhs, rhs);
    });
  }
  if (inst.type) {
    clause("aux", [&] {
      const Expr& s = *inst.type;
      Context src2 = extended(inst.src, "x", s);
      Context dst2 = extended(inst.dst, "x", apply_subst(inst.gamma, s));
      Substitution lifted;
      for (const auto& a : inst.gamma) lifted.push_back({a.name, shift(a.expr, 1)});
      lifted.push_back({"x", Expr::var(0, "x")});
      NatTrans lhs = in.subst(src2, dst2, lifted);
      NatTrans rhs = pullback(sem_gamma(), in.type(inst.src, s)).pbf;
      return diff_nat(lhs, rhs);
    });
  }
  return out;
}

}  // namespace mltt
