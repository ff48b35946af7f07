#include <algorithm>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "kernel_properties.hpp"
#include "mltt/error.hpp"
#include "mltt/kernel.hpp"
#include "mltt/subst.hpp"

using namespace mltt;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TheoryFile theory(const std::string& name) {
  return parse_theory(read_file(std::string(MLTT_SOURCE_DIR) + "/theories/" + name));
}

bool has_rule(const JudgmentReport& r, const std::string& rule) {
  return std::find(r.trace.begin(), r.trace.end(), rule) != r.trace.end();
}

// Accepted reports must replay; returns the report for chaining.
const JudgmentReport& replayed(const Signature& sig, const JudgmentReport& r) {
  if (r.accepted()) {
    auto err = replay(sig, r.derivation);
    INFO(err.value_or(""));
    CHECK_FALSE(err.has_value());
  }
  return r;
}

struct Cat {
  TheoryFile file = theory("cat.mltt");
  Kernel kernel{file.signature};
  const Signature& sig() const { return kernel.signature(); }
  Expr e(const std::string& text, const Context& ctx = {}) const { return parse_expr(text, sig(), ctx); }
  Context c(const std::string& text) const { return parse_context(text, sig()); }
};

}  // namespace

TEST_CASE("signatures") {
  Kernel empty{Signature{}};
  auto r = empty.check_signature();
  CHECK(r.accepted());
  CHECK(r.trace == std::vector<std::string>{"Sigma_empty"});

  Cat cat;
  auto rc = replayed(cat.sig(), cat.kernel.check_signature());
  CHECK(rc.accepted());
  CHECK(has_rule(rc, "Sigma_a"));
  CHECK(has_rule(rc, "Sigma_c"));

  Signature bad;
  bad.add_type("Mor", {});
  bad.add_term("c", Expr::id(Expr::constant("c"), Expr::constant("c")));
  Kernel kb{bad};
  auto rb = kb.check_signature();
  CHECK(rb.verdict == Verdict::Rejected);
  CHECK(rb.message.find("unbound name 'c'") != std::string::npos);
  CHECK(kb.check_context({}).verdict == Verdict::Rejected);
}

TEST_CASE("contexts") {
  Cat cat;
  auto r = replayed(cat.sig(), cat.kernel.check_context(cat.c("x : Ob, y : Ob, f : Mor(x, y)")));
  CHECK(r.accepted());
  CHECK(r.trace.front() == "Gamma_x");
  CHECK(cat.kernel.check_context({}).accepted());
  Context unbound{{"x", Expr::type_app("Mor", {Expr::var(0), Expr::var(0)})}};
  auto ru = cat.kernel.check_context(unbound);
  CHECK(ru.verdict == Verdict::Rejected);
  CHECK(ru.message.find("unbound variable") != std::string::npos);
}

TEST_CASE("substitutions") {
  Cat cat;
  Context src = cat.c("x : Ob, y : Ob");
  Context dst = cat.c("a : Ob");
  CHECK(cat.kernel.check_subst({}, dst, {}).accepted());
  auto r = replayed(cat.sig(), cat.kernel.check_subst(src, dst, {{"x", Expr::var(0)}, {"y", Expr::var(0)}}));
  CHECK(r.accepted());
  CHECK(r.derivation->rule == "sigma_x");
  CHECK(r.derivation->premises[0]->rule == "sigma_x");
  CHECK(r.derivation->premises[0]->premises[0]->rule == "sigma_empty");
  auto arity = cat.kernel.check_subst(src, dst, {{"x", Expr::var(0)}});
  CHECK(arity.verdict == Verdict::Rejected);
  CHECK(arity.message.find("assigns 1 term(s)") != std::string::npos);
  auto ill = cat.kernel.check_subst(src, dst, {{"x", Expr::var(0)}, {"y", Expr::star()}});
  CHECK(ill.verdict == Verdict::Rejected);
}

TEST_CASE("type formation") {
  Cat cat;
  CHECK(replayed(cat.sig(), cat.kernel.check_type_wf({}, Expr::unit())).trace.front() == "T_Unit");
  auto nr = cat.kernel.check_type_wf({}, cat.e("Pi x : Ob . Pi y : Ob . Pi f : Mor(x, y) . Id(comp x x y f (id x), f)"));
  replayed(cat.sig(), nr);
  CHECK(nr.accepted());
  auto bad = cat.kernel.check_type_wf({}, cat.e("Id(star, id)"));
  CHECK(bad.verdict == Verdict::Rejected);
  CHECK(bad.message.find("type mismatch") != std::string::npos);
  CHECK(cat.kernel.check_type_wf({}, cat.e("star")).verdict == Verdict::Rejected);
}

TEST_CASE("inference") {
  Cat cat;
  Context x = cat.c("x : Ob");
  auto r = replayed(cat.sig(), cat.kernel.infer_type(x, cat.e("id x", x)));
  REQUIRE(r.accepted());
  CHECK(print_expr(*r.type, x) == "Mor(x, x)");
  CHECK(*cat.kernel.infer_type({}, Expr::star()).type == Expr::unit());

  auto app = replayed(cat.sig(), cat.kernel.infer_type({}, cat.e("(fun x : Unit => refl(x)) star")));
  REQUIRE(app.accepted());
  CHECK(*app.type == Expr::id(Expr::star(), Expr::star()));
  CHECK(app.trace.front() == "t_app");
  CHECK(has_rule(app, "t_lambda"));
  CHECK(has_rule(app, "t_refl"));

  CHECK(cat.kernel.infer_type({}, cat.e("pair(star, star)")).message.find("needs expected type") != std::string::npos);
  CHECK(cat.kernel.infer_type({}, cat.e("star star")).verdict == Verdict::Rejected);
  CHECK(cat.kernel.infer_type({}, cat.e("proj1 star")).verdict == Verdict::Rejected);
  CHECK(cat.kernel.infer_type({}, Expr::constant("nope")).message.find("unbound name") != std::string::npos);
}

TEST_CASE("second projection types with the first projection of its subject") {
  Cat cat;
  Context ctx = cat.c("u : Sig x : Ob . Mor(x, x)");
  auto r = replayed(cat.sig(), cat.kernel.infer_type(ctx, cat.e("proj2 u", ctx)));
  REQUIRE(r.accepted());
  CHECK(print_expr(*r.type, ctx) == "Mor((proj1 u), (proj1 u))");
}

TEST_CASE("checking") {
  Cat cat;
  auto p = replayed(cat.sig(), cat.kernel.check_term({}, cat.e("pair(star, refl(star))"), cat.e("Sig x : Unit . Id(x, star)")));
  CHECK(p.accepted());
  CHECK(p.trace.front() == "t_pair");
  CHECK(cat.kernel.check_term({}, Expr::star(), Expr::unit()).accepted());
  auto bad = cat.kernel.check_term({}, Expr::star(), cat.e("Ob"));
  CHECK(bad.verdict == Verdict::Rejected);
  CHECK(bad.message.find("Unit vs Ob()") != std::string::npos);

  // Unit-valued witness whose type only matches after conversion.
  Context u = cat.c("u : Unit, v : Unit");
  auto conv = replayed(cat.sig(), cat.kernel.check_term(u, cat.e("refl(u)", u), cat.e("Id(u, v)", u)));
  CHECK(conv.accepted());
  CHECK(has_rule(conv, "e_typing"));
  CHECK(has_rule(conv, "e_star"));
}

TEST_CASE("term equality") {
  Cat cat;
  auto beta = replayed(cat.sig(), cat.kernel.equal_terms({}, cat.e("(fun x : Unit => x) star"), Expr::star()));
  CHECK(beta.accepted());
  CHECK(beta.trace == std::vector<std::string>{"e_beta"});

  Context f = cat.c("x : Ob, y : Ob, f : Mor(x, y)");
  auto refl = cat.kernel.equal_terms(f, Expr::var(0), Expr::var(0));
  CHECK(refl.accepted());
  CHECK(refl.trace == std::vector<std::string>{"e_refl"});

  Expr lhs = cat.e("comp x x y f (id x)", f);
  auto none = cat.kernel.equal_terms(f, lhs, Expr::var(0));
  CHECK(none.verdict == Verdict::Undetermined);
  auto hinted = replayed(cat.sig(), cat.kernel.equal_terms(f, lhs, Expr::var(0), cat.e("neutr_r x y f", f)));
  CHECK(hinted.accepted());
  CHECK(hinted.trace.front() == "e_Id");
  auto wrong = cat.kernel.equal_terms(f, lhs, Expr::var(0), cat.e("neutr_l x y f", f));
  CHECK(wrong.verdict == Verdict::Rejected);
  CHECK(wrong.message.find("ill-typed hint") != std::string::npos);

  // eta, unit and identity uniqueness
  Context g = cat.c("g : Ob -> Ob, p : Sig a : Ob . Unit, e1 : Id(star, star), e2 : Id(star, star)");
  auto eta = replayed(cat.sig(), cat.kernel.equal_terms(g, cat.e("fun z : Ob => g z", g), cat.e("g", g)));
  CHECK(eta.accepted());
  CHECK(has_rule(eta, "e_funcext"));
  auto sp = replayed(cat.sig(), cat.kernel.equal_terms(g, cat.e("pair(proj1 p, star)", g), cat.e("p", g)));
  INFO(sp.message);
  CHECK(sp.accepted());
  CHECK(has_rule(sp, "e_pair"));
  auto uniq = replayed(cat.sig(), cat.kernel.equal_terms(g, cat.e("e1", g), cat.e("e2", g)));
  CHECK(uniq.accepted());
  CHECK(uniq.trace.front() == "e_id-uniq");
}

TEST_CASE("type equality") {
  Cat cat;
  CHECK(cat.kernel.equal_types({}, Expr::unit(), Expr::unit()).accepted());
  Context xy = cat.c("x : Ob, y : Ob");
  auto r = replayed(cat.sig(), cat.kernel.equal_types(xy, cat.e("Mor(x, (fun u : Ob => u) y)", xy), cat.e("Mor(x, y)", xy)));
  CHECK(r.accepted());
  CHECK(r.trace.front() == "E_a");
  CHECK(has_rule(r, "e_beta"));
  auto heads = cat.kernel.equal_types({}, cat.e("Sig x : Unit . Unit"), cat.e("Pi x : Unit . Unit"));
  CHECK(heads.verdict == Verdict::Rejected);
  CHECK(cat.kernel.equal_types(xy, cat.e("Mor(x, y)", xy), cat.e("Mor(y, x)", xy)).verdict == Verdict::Undetermined);
}

TEST_CASE("normalization") {
  Cat cat;
  Context f = cat.c("x : Ob, y : Ob, f : Mor(x, y)");
  auto n = cat.kernel.normalize(f, cat.e("proj1 pair(x, f)", f));
  CHECK(n.result == Expr::var(2));
  CHECK(n.steps == 1);
  CHECK_FALSE(replay(cat.sig(), n.derivation).has_value());
  auto again = cat.kernel.normalize(f, n.result);
  CHECK(again.result == n.result);
  CHECK(again.steps == 0);

  Expr lhs = cat.e("comp x x y f (id x)", f);
  CHECK(cat.kernel.normalize(f, lhs).result == lhs);
  Signature sig = cat.sig();
  sig.add_rewrite("neutr_r");
  Kernel rw{sig};
  auto step = rw.normalize(f, lhs);
  CHECK(step.result == Expr::var(0));
  CHECK(step.steps == 1);
  CHECK(step.derivation->rule == "e_Id");
  CHECK_FALSE(replay(sig, step.derivation).has_value());
  auto eq = replayed(sig, rw.equal_terms(f, lhs, Expr::var(0)));
  CHECK(eq.accepted());

  // A rewrite under a binder and inside an argument.
  Expr nested = cat.e("fun g : Mor(x, y) => comp x x y g (id x)", f);
  CHECK(print_expr(rw.normalize(f, nested).result, f) == "(fun v0 : Mor(x, y) => v0)");
}

TEST_CASE("fuel exhaustion is undetermined") {
  Signature sig;
  sig.add_type("N", {});
  sig.add_term("z", Expr::type_app("N", {}));
  sig.add_term("s", Expr::pi("_", Expr::type_app("N", {}), Expr::type_app("N", {})));
  // loop : Pi n : N . Id(s n, s (s n)) oriented left to right never terminates.
  Expr n = Expr::var(0);
  sig.add_term("loop", Expr::pi("n", Expr::type_app("N", {}),
                                Expr::id(Expr::app(Expr::constant("s"), n),
                                         Expr::app(Expr::constant("s"), Expr::app(Expr::constant("s"), n)))));
  sig.add_rewrite("loop");
  Kernel k{sig, KernelOptions{50}};
  Expr sz = Expr::app(Expr::constant("s"), Expr::constant("z"));
  auto nr = k.normalize({}, sz);
  CHECK(nr.fuel_exhausted);
  CHECK(nr.result == sz);
  auto eq = k.equal_terms({}, sz, Expr::constant("z"));
  CHECK(eq.verdict == Verdict::Undetermined);
  CHECK(eq.message.find("out of fuel") != std::string::npos);
}

TEST_CASE("theory files") {
  for (const char* name : {"cat.mltt", "slice.mltt"}) {
    TheoryFile t = theory(name);
    Kernel k{t.signature};
    for (const auto& g : t.goals) {
      auto r = replayed(t.signature, k.run_goal(g));
      INFO(name << " goal at line " << g.pos.line << ": " << r.message);
      CHECK(r.accepted());
    }
  }
  TheoryFile cat = theory("cat.mltt");
  Kernel k{cat.signature};
  for (const auto& g : cat.goals)
    if (g.kind == Goal::Kind::CheckEqual) CHECK(k.run_goal(g).trace.front() == "e_Id");

  TheoryFile bcd = theory("bcd.mltt");
  Kernel kb{bcd.signature};
  REQUIRE(bcd.goals.size() == 3);
  CHECK(kb.run_goal(bcd.goals[0]).accepted());
  CHECK(kb.run_goal(bcd.goals[1]).accepted());
  CHECK(kb.run_goal(bcd.goals[2]).verdict == Verdict::Undetermined);
}

TEST_CASE("replay rejects tampered derivations") {
  Cat cat;
  Context x = cat.c("x : Ob");
  auto r = cat.kernel.infer_type(x, cat.e("id x", x));
  REQUIRE(r.accepted());
  auto forged = std::make_shared<Derivation>(*r.derivation);
  forged->judgment.subjects[1] = cat.e("Ob");
  CHECK(replay(cat.sig(), forged).has_value());
  auto renamed = std::make_shared<Derivation>(*r.derivation);
  renamed->rule = "t_c";
  CHECK(replay(cat.sig(), renamed).has_value());
  auto shortcut = std::make_shared<Derivation>(Derivation{
      Judgment{JudgmentKind::TermEq, cat.sig().size(), std::make_shared<Context>(x), nullptr,
               {Expr::var(0), cat.e("id x", x)}},
      "e_refl", {}});
  CHECK(replay(cat.sig(), shortcut).has_value());
}

TEST_CASE("kernel properties on generated terms") {
  Signature cat = parse_theory(read_file(std::string(MLTT_SOURCE_DIR) + "/theories/cat.mltt")).signature;
  props::Report r = props::run(cat, 7, 100);
  for (const auto& [name, t] : r.props) {
    INFO(name, ": ", t.failure.value_or(""));
    CHECK_FALSE(t.failure);
    CHECK(t.cases > 0);
  }
  CHECK(r.props.size() == 5);
}
