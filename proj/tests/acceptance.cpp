// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "kernel_properties.hpp"
#include "mltt/error.hpp"
#include "mltt/harness.hpp"
#include "mltt/interp.hpp"
#include "mltt/kernel.hpp"

using namespace mltt;
using Clock = std::chrono::steady_clock;

namespace {

// Time limits in seconds.
constexpr double kCatLimit = 1.0;
constexpr double kSliceLimit = 1.0;
constexpr double kLawsLimit = 600.0;
constexpr double kSoundnessLimit = 300.0;
constexpr double kCountermodelLimit = 10.0;
constexpr double kIsoLimit = 600.0;
constexpr double kPropertiesLimit = 600.0;

constexpr std::size_t kLawFamilyCap = 6;
constexpr std::uint64_t kSoundnessSeed = 42;
constexpr std::size_t kSoundnessIters = 200;
constexpr std::uint64_t kPropertySeed = 2024;
constexpr std::size_t kPropertyCases = 1000;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TheoryFile theory(const std::string& name) {
  return parse_theory(read_file(std::string(MLTT_SOURCE_DIR) + "/theories/" + name));
}

struct Outcome {
  bool ok = false;
  std::string detail;
};

bool run(int n, const char* title, double limit, const std::function<Outcome()>& body) {
  auto start = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  double secs = std::chrono::duration<double>(Clock::now() - start).count();
  bool in_time = secs < limit;
  bool pass = o.ok && in_time;
  std::printf("criterion %d: %s  %s (%.2fs, limit %.0fs)%s%s\n", n, pass ? "PASS" : "FAIL", title,
              secs, limit, o.detail.empty() ? "" : "  ", o.detail.c_str());
  if (!in_time) std::printf("  time limit exceeded\n");
  std::fflush(stdout);
  return pass;
}

Outcome category_theory() {
  TheoryFile t = theory("cat.mltt");
  Kernel k(t.signature);
  JudgmentReport sig = k.check_signature();
  if (!sig.accepted()) return {false, "signature " + sig.message};
  std::size_t equalities = 0;
  for (const Goal& g : t.goals) {
    JudgmentReport r = k.run_goal(g);
    if (!r.accepted()) return {false, "goal on line " + std::to_string(g.pos.line) + ": " + r.message};
    if (g.kind != Goal::Kind::CheckEqual) continue;
    auto trace = trace_of(r.derivation);
    if (std::find(trace.begin(), trace.end(), "e_Id") == trace.end())
      return {false, "goal on line " + std::to_string(g.pos.line) + " not by e_Id"};
    ++equalities;
  }
  return {equalities == 3, std::to_string(equalities) + " equalities by e_Id"};
}

Outcome slice_exponential() {
  Signature sig = theory("slice.mltt").signature;
  const char* u = "Sig x:S. ((Sig y1:S1. Id(x, f1 y1)) -> Sig y2:S2. Id(x, f2 y2))";
  Expr term = parse_expr(std::string("fun u : (") + u + ") => proj1 u", sig);
  Expr type = parse_expr(std::string("(") + u + ") -> S", sig);
  JudgmentReport r = Kernel(sig).check_term({}, term, type);
  return {r.accepted(), r.accepted() ? "" : r.message};
}

Outcome lcc_laws() {
  LawOptions opts;
  opts.family_cap = kLawFamilyCap;
  LawReport r = run_lcc_laws(3, 2, opts);
  std::string detail;
  bool ok = r.laws.size() == law_names().size();
  for (const LawStats& l : r.laws) {
    detail += l.name + "=" + std::to_string(l.instances) + " ";
    if (l.instances == 0 || l.counterexample) ok = false;
    if (l.counterexample) detail += "[" + *l.counterexample + "] ";
  }
  return {ok, detail};
}

Outcome soundness() {
  SoundnessReport r = run_soundness_fuzz(theory("cat.mltt").signature, kSoundnessSeed, kSoundnessIters);
  std::size_t total = 0;
  for (const auto& [name, n] : r.checks) total += n;
  bool clauses = r.checks.count("subst:composition") && r.checks.count("subst:type") && r.checks.count("subst:term") &&
                 r.checks.count("subst:aux") && r.checks.count("well-typed") &&
                 r.checks.count("equality");
  std::string detail = std::to_string(total) + " checks, " + std::to_string(r.failures.size()) +
                       " failures";
  if (!r.ok()) detail += ": " + r.failures.front().detail;
  if (!clauses) detail += " (a check family never ran)";
  return {r.ok() && clauses, detail};
}

Outcome countermodel() {
  Signature sig = parse_theory("theory BCD { type b() const c : b const d : b }").signature;
  Expr cd = parse_expr("Id(c, d)", sig);
  CountermodelResult found = search_countermodel(sig, {}, cd, 1, 2);
  if (!found.model) return {false, "no countermodel for Id(c, d)"};
  const IndexedSet& id = interp_type(*found.model, {}, cd);
  for (std::size_t p = 0; p < id.base().size(); ++p)
    if (id.fiber_size(p) != 0) return {false, "Id(c, d) is not empty"};
  for (const char* s : {"Unit", "Pi x:Unit. Unit"})
    if (!search_countermodel(sig, {}, parse_expr(s, sig), 1, 2).exhausted())
      return {false, std::string("countermodel for ") + s};
  return {true, "Id(c, d) refuted; Unit and Pi x:Unit. Unit exhausted"};
}

Outcome iso() {
  IsoReport r = run_iso_suite(3, 2);
  std::string detail = std::to_string(r.indexed_sets) + " indexed sets, " +
                       std::to_string(r.nat_trans) + " maps, " +
                       std::to_string(r.least_element_cases) + " least-element cases";
  if (r.counterexample) detail += ": " + *r.counterexample;
  return {r.ok() && r.indexed_sets > 0 && r.least_element_cases > 0, detail};
}

Outcome kernel_properties() {
  Signature cat = theory("cat.mltt").signature;
  props::Report a = props::run(cat, kPropertySeed, kPropertyCases);
  props::Report b = props::run(cat, kPropertySeed, kPropertyCases);
  bool deterministic = a.props.size() == b.props.size();
  std::string detail;
  for (const auto& [name, t] : a.props) {
    auto other = b.props.find(name);
    if (other == b.props.end() || other->second.cases != t.cases || other->second.failure != t.failure)
      deterministic = false;
    detail += name + "=" + std::to_string(t.cases) + " ";
    if (t.failure) detail += "[" + *t.failure + "] ";
  }
  if (!deterministic) detail += "(not seed-deterministic)";
  return {a.ok(kPropertyCases) && a.props.size() == 5 && deterministic, detail};
}

}  // namespace

int main() {
  bool ok = true;
  ok &= run(1, "category theory goals", kCatLimit, category_theory);
  ok &= run(2, "slice exponential", kSliceLimit, slice_exponential);
  ok &= run(3, "LCC laws at |P|<=3, fibers<=2", kLawsLimit, lcc_laws);
  ok &= run(4, "soundness fuzz on cat, seed 42, 200 iterations", kSoundnessLimit, soundness);
  ok &= run(5, "countermodel search", kCountermodelLimit, countermodel);
  ok &= run(6, "isomorphism suite at |P|<=3, fibers<=2", kIsoLimit, iso);
  ok &= run(7, "kernel property suite", kPropertiesLimit, kernel_properties);
  std::printf("%s\n", ok ? "all criteria pass" : "some criteria fail");
  return ok ? 0 : 1;
}
