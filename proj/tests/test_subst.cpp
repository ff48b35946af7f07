#include "doctest.h"
#include "mltt/error.hpp"
#include "mltt/subst.hpp"
#include "named_oracle.hpp"

using namespace mltt;

namespace {

Expr ob() { return Expr::type_app("Ob", {}); }

struct Fixture {
  Signature sig = oracle::test_signature();
  oracle::Generator gen{11};

  std::vector<std::string> names(const std::string& prefix, std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
  }

  // A substitution for `dom` whose terms are over `cod`, in both representations.
  std::pair<Substitution, std::vector<std::pair<std::string, oracle::Named>>> subst(
      const std::vector<std::string>& dom, const std::vector<std::string>& cod, int depth) {
    Substitution s;
    std::vector<std::pair<std::string, oracle::Named>> named;
    for (const auto& x : dom) {
      std::vector<std::string> scope = cod;
      oracle::Named t = gen.term(scope, depth);
      scope = cod;
      s.push_back({x, oracle::to_expr(t, scope)});
      named.emplace_back(x, t);
    }
    return {s, named};
  }
};

oracle::Named fresh(const oracle::Named& n, int& counter) {
  std::vector<std::pair<std::string, std::string>> env;
  return oracle::freshen(n, env, counter);
}

}  // namespace

TEST_CASE("single-point and type-application examples") {
  Substitution g{{"x", Expr::constant("c")}};
  CHECK(apply_subst(g, Expr::var(0, "x")) == Expr::constant("c"));

  Expr mor = Expr::type_app("Mor", {Expr::var(1, "x"), Expr::var(0, "y")});
  Substitution st{{"x", Expr::constant("s")}, {"y", Expr::constant("t")}};
  CHECK(print_expr(apply_subst(st, mor)) == "Mor((s), (t))");

  // [x := y] applied to fun y : Unit => x, with y free on the outside.
  Context outer{{"y", ob()}};
  Substitution xy{{"x", Expr::var(0, "y")}};
  Expr body = Expr::lam("y", Expr::unit(), Expr::var(1, "x"));
  Expr out = apply_subst(xy, body);
  CHECK(out == Expr::lam("y'", Expr::unit(), Expr::var(1)));
  CHECK(print_expr(out, outer) == "(fun v0 : Unit => y)");

  CHECK_THROWS_AS(apply_subst(g, Expr::var(1)), ValidationError);
}

TEST_CASE("identity substitutions") {
  CHECK(id_subst({}).empty());
  Context ctx{{"x", ob()}, {"y", ob()}};
  Substitution id = id_subst(ctx);
  REQUIRE(id.size() == 2);
  CHECK(id[0].name == "x");
  CHECK(id[0].expr == Expr::var(1));
  CHECK(id[1].expr == Expr::var(0));

  Fixture fx;
  auto gamma = fx.names("g", 3);
  Context g3;
  for (const auto& n : gamma) g3.push_back({n, ob()});
  for (int it = 0; it < 300; ++it) {
    std::vector<std::string> scope = gamma;
    oracle::Named e = fx.gen.gen(gamma, 4);
    scope = gamma;
    Expr ex = oracle::to_expr(e, scope);
    CHECK(apply_subst(id_subst(g3), ex) == ex);
    auto [s, named] = fx.subst(gamma, fx.names("h", 2), 3);
    Context h2{{"h0", ob()}, {"h1", ob()}};
    auto lhs = compose_subst(id_subst(g3), s);
    auto rhs = compose_subst(s, id_subst(h2));
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(lhs[i].expr == s[i].expr);
      CHECK(rhs[i].expr == s[i].expr);
      CHECK(lhs[i].name == s[i].name);
    }
  }
}

TEST_CASE("composition examples") {
  Substitution delta{{"x", Expr::constant("c")}};
  auto r = compose_subst(delta, {});
  REQUIRE(r.size() == 1);
  CHECK(r[0].expr == Expr::constant("c"));

  Substitution dy{{"x", Expr::var(0, "y")}};
  Substitution gc{{"y", Expr::constant("c")}};
  auto xc = compose_subst(dy, gc);
  CHECK(xc[0].name == "x");
  CHECK(xc[0].expr == Expr::constant("c"));
}

TEST_CASE("apply_subst agrees with named substitution on fresh binders") {
  Fixture fx;
  int counter = 0;
  for (int it = 0; it < 1000; ++it) {
    auto delta = fx.names("d", 1 + fx.gen.pick(3));
    auto gamma = fx.names("g", fx.gen.pick(3));
    oracle::Named e = fx.gen.gen(delta, 1 + static_cast<int>(fx.gen.pick(4)));
    auto [s, named] = fx.subst(delta, gamma, 2);
    for (auto& [x, t] : named) t = fresh(t, counter);
    oracle::Named expected = oracle::naive_subst(fresh(e, counter), named);
    std::vector<std::string> scope = delta;
    Expr ex = oracle::to_expr(e, scope);
    scope = gamma;
    REQUIRE(apply_subst(s, ex) == oracle::to_expr(expected, scope));
  }
}

TEST_CASE("associativity of substitution") {
  Fixture fx;
  for (int it = 0; it < 1000; ++it) {
    auto theta = fx.names("t", 1 + fx.gen.pick(3));
    auto delta = fx.names("d", fx.gen.pick(4));
    auto gamma = fx.names("g", fx.gen.pick(3));
    oracle::Named e = fx.gen.gen(theta, 1 + static_cast<int>(fx.gen.pick(4)));
    std::vector<std::string> scope = theta;
    Expr ex = oracle::to_expr(e, scope);
    auto d = fx.subst(theta, delta, 3).first;
    auto g = fx.subst(delta, gamma, 3).first;
    REQUIRE(apply_subst(g, apply_subst(d, ex)) == apply_subst(compose_subst(d, g), ex));
  }
}

TEST_CASE("instantiate and shift") {
  Expr body = Expr::pair(Expr::var(0), Expr::lam("z", Expr::unit(), Expr::var(2)));
  Expr out = instantiate(body, Expr::var(3));
  CHECK(out == Expr::pair(Expr::var(3), Expr::lam("z", Expr::unit(), Expr::var(1))));
  CHECK(shift(Expr::lam("z", Expr::unit(), Expr::pair(Expr::var(0), Expr::var(1))), 2) ==
        Expr::lam("z", Expr::unit(), Expr::pair(Expr::var(0), Expr::var(3))));
  CHECK(occurs_free(Expr::lam("z", Expr::unit(), Expr::var(1)), 0));
  CHECK_FALSE(occurs_free(Expr::lam("z", Expr::unit(), Expr::var(0)), 0));
  CHECK(free_var_bound(Expr::lam("z", Expr::unit(), Expr::var(3))) == 3);
  Context ctx{{"x", ob()}, {"p", Expr::type_app("Mor", {Expr::var(0), Expr::var(0)})}};
  CHECK(var_type(ctx, 0) == Expr::type_app("Mor", {Expr::var(1), Expr::var(1)}));
  CHECK(var_type(ctx, 1) == ob());
}
