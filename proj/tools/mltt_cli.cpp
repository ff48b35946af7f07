// mltt: proof checking and finite Kripke semantics for extensional type theory.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mltt/error.hpp"
#include "mltt/harness.hpp"
#include "mltt/interp.hpp"
#include "mltt/kernel.hpp"

using namespace mltt;
using json = nlohmann::ordered_json;

namespace {

struct Globals {
  bool json = false;
  std::size_t fuel = 10000;
  std::size_t threads = 0;
};

TheoryFile load_theory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_theory(ss.str());
  } catch (const ParseError& e) {
    throw Error(path + ":" + e.what());
  }
}

const char* goal_kind(Goal::Kind k) {
  switch (k) {
    case Goal::Kind::CheckType: return "check";
    case Goal::Kind::Infer: return "infer";
    case Goal::Kind::CheckEqual: return "equal";
    case Goal::Kind::CheckInhabited: return "inhabit";
  }
  return "?";
}

std::string goal_text(const Goal& g) {
  std::string head = print_context(g.ctx);
  head += head.empty() ? "|- " : " |- ";
  switch (g.kind) {
    case Goal::Kind::CheckType: return head + print_expr(g.lhs, g.ctx) + " type";
    case Goal::Kind::Infer: return head + print_expr(g.lhs, g.ctx);
    case Goal::Kind::CheckEqual: {
      std::string s = head + print_expr(g.lhs, g.ctx) + " == " + print_expr(g.rhs, g.ctx);
      if (g.hint) s += " by " + print_expr(*g.hint, g.ctx);
      return s;
    }
    case Goal::Kind::CheckInhabited:
      return head + print_expr(g.lhs, g.ctx) + " by " + print_expr(g.rhs, g.ctx);
  }
  return head;
}

int exit_code(std::size_t rejected, std::size_t undetermined) {
  if (rejected) return 1;
  return undetermined ? 2 : 0;
}

int cmd_check(const Globals& gl, const std::string& path) {
  TheoryFile th = load_theory(path);
  Kernel k(th.signature, KernelOptions{gl.fuel});
  JudgmentReport sig = k.check_signature();
  std::size_t counts[3] = {0, 0, 0};
  json goals = json::array();
  std::ostringstream text;
  text << "theory " << th.name << ": signature " << to_string(sig.verdict) << " ("
       << th.signature.decls().size() << " declarations)";
  if (!sig.accepted()) text << ": " << sig.message;
  text << "\n";
  if (!sig.accepted()) ++counts[static_cast<int>(sig.verdict)];
  for (std::size_t i = 0; i < th.goals.size() && sig.accepted(); ++i) {
    const Goal& g = th.goals[i];
    JudgmentReport r = k.run_goal(g);
    ++counts[static_cast<int>(r.verdict)];
    json j{{"index", i + 1}, {"line", g.pos.line}, {"kind", goal_kind(g.kind)},
           {"judgment", goal_text(g)}, {"verdict", to_string(r.verdict)}};
    j["message"] = r.message.empty() ? json(nullptr) : json(r.message);
    j["type"] = r.type ? json(print_expr(*r.type, g.ctx)) : json(nullptr);
    j["derivation_size"] = r.derivation ? derivation_size(r.derivation) : 0;
    j["fuel_used"] = r.fuel_used;
    goals.push_back(j);
    text << "goal " << i + 1 << " (line " << g.pos.line << ") " << goal_kind(g.kind) << " "
         << goal_text(g) << ": " << to_string(r.verdict);
    if (r.type) text << " : " << print_expr(*r.type, g.ctx);
    if (r.derivation) text << " [" << derivation_size(r.derivation) << " rule instances]";
    if (!r.message.empty()) text << ": " << r.message;
    text << "\n";
  }
  if (gl.json) {
    json out{{"theory", th.name},
             {"signature", {{"verdict", to_string(sig.verdict)},
                            {"message", sig.message.empty() ? json(nullptr) : json(sig.message)},
                            {"declarations", th.signature.decls().size()}}},
             {"goals", goals},
             {"accepted", counts[0]},
             {"rejected", counts[1]},
             {"undetermined", counts[2]}};
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << text.str() << counts[0] << " accepted, " << counts[1] << " rejected, " << counts[2]
              << " undetermined\n";
  }
  return exit_code(counts[1], counts[2]);
}

int cmd_interp(const Globals& gl, const std::string& path, const std::string& model_path,
               std::optional<std::size_t> only) {
  TheoryFile th = load_theory(path);
  Kernel k(th.signature, KernelOptions{gl.fuel});
  JudgmentReport sig = k.check_signature();
  if (!sig.accepted()) throw Error("signature " + std::string(to_string(sig.verdict)) + ": " + sig.message);
  Model m = load_model(th.signature, model_path);
  Interpreter in(m);
  if (only && (*only == 0 || *only > th.goals.size()))
    throw Error("no goal " + std::to_string(*only) + " (the theory has " +
                std::to_string(th.goals.size()) + ")");
  json goals = json::array();
  std::ostringstream text;
  bool mismatch = false;
  for (std::size_t i = 0; i < th.goals.size(); ++i) {
    if (only && *only != i + 1) continue;
    const Goal& g = th.goals[i];
    JudgmentReport r = k.run_goal(g);
    json j{{"index", i + 1}, {"judgment", goal_text(g)}, {"verdict", to_string(r.verdict)}};
    text << "goal " << i + 1 << " " << goal_text(g) << " (" << to_string(r.verdict) << ")\n";
    if (!r.accepted()) {
      j["skipped"] = "not accepted by the kernel";
      text << "  skipped: not accepted by the kernel\n";
      goals.push_back(j);
      continue;
    }
    switch (g.kind) {
      case Goal::Kind::CheckType: {
        std::string s = in.type(g.ctx, g.lhs).to_string();
        j["type"] = s;
        text << "  type: " << s << "\n";
        break;
      }
      case Goal::Kind::Infer: {
        Section s = in.term(g.ctx, g.lhs, *r.type);
        j["type"] = s.owner().to_string();
        j["term"] = s.to_string();
        text << "  type: " << s.owner().to_string() << "\n  term: " << s.to_string() << "\n";
        break;
      }
      case Goal::Kind::CheckEqual: {
        Expr ty = in.infer(g.ctx, g.rhs.is(Expr::Kind::Pair) ? g.lhs : g.rhs);
        Section a = in.term(g.ctx, g.lhs, ty);
        Section b = in.term(g.ctx, g.rhs, ty);
        auto diff = diff_sections(a, b);
        if (diff) mismatch = true;
        j["lhs"] = a.to_string();
        j["rhs"] = b.to_string();
        j["equal"] = !diff;
        text << "  lhs: " << a.to_string() << "\n  rhs: " << b.to_string() << "\n  "
             << (diff ? "denotations differ " + *diff : std::string("denotations agree")) << "\n";
        break;
      }
      case Goal::Kind::CheckInhabited: {
        Section s = in.term(g.ctx, g.rhs, g.lhs);
        j["type"] = s.owner().to_string();
        j["witness"] = s.to_string();
        text << "  type: " << s.owner().to_string() << "\n  witness: " << s.to_string() << "\n";
        break;
      }
    }
    goals.push_back(j);
  }
  if (gl.json)
    std::cout << json{{"theory", th.name}, {"goals", goals}}.dump(2) << "\n";
  else
    std::cout << text.str();
  return mismatch ? 1 : 0;
}

int cmd_laws(const Globals& gl, std::size_t max_poset, std::size_t max_fiber, LawOptions opts) {
  opts.threads = gl.threads;
  LawReport r = run_lcc_laws(max_poset, max_fiber, opts);
  std::cout << (gl.json ? to_json(r) + "\n" : to_text(r));
  return r.ok() ? 0 : 1;
}

int cmd_iso(const Globals& gl, std::size_t max_poset, std::size_t max_fiber) {
  IsoReport r = run_iso_suite(max_poset, max_fiber);
  std::cout << (gl.json ? to_json(r) + "\n" : to_text(r));
  return r.ok() ? 0 : 1;
}

int cmd_soundness(const Globals& gl, const std::string& path, std::uint64_t seed, std::size_t iters,
                  SoundnessOptions opts) {
  TheoryFile th = load_theory(path);
  opts.fuel = gl.fuel;
  opts.threads = gl.threads;
  SoundnessReport r = run_soundness_fuzz(th.signature, seed, iters, opts);
  std::cout << (gl.json ? to_json(r) + "\n" : to_text(r));
  return r.ok() ? 0 : 1;
}

int cmd_countermodel(const Globals& gl, const std::string& path, const std::string& type_text,
                     const std::string& ctx_text, std::size_t max_poset, std::size_t max_fiber) {
  TheoryFile th = load_theory(path);
  Kernel k(th.signature, KernelOptions{gl.fuel});
  Context ctx = ctx_text.empty() ? Context{} : parse_context(ctx_text, th.signature);
  Expr s = parse_expr(type_text, th.signature, ctx);
  JudgmentReport wf = k.check_type_wf(ctx, s);
  if (!wf.accepted()) throw Error("type " + type_text + " " + to_string(wf.verdict) + ": " + wf.message);
  CountermodelResult r = search_countermodel(th.signature, ctx, s, max_poset, max_fiber);
  std::cout << (gl.json ? to_json(r, ctx, s) + "\n" : to_text(r, ctx, s));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proof checker and finite Kripke-model semantics for extensional type theory"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals gl;
  app.add_flag("--json", gl.json, "Print reports as JSON");
  app.add_option("--fuel", gl.fuel, "Reduction steps per kernel judgment")->capture_default_str();
  app.add_option("--threads", gl.threads, "Worker threads (0: hardware concurrency)")
      ->capture_default_str();

  std::string theory, model, type_text, ctx_text;
  std::optional<std::size_t> goal;
  std::size_t max_poset = 2, max_fiber = 2, iters = 100;
  std::uint64_t seed = 1;
  LawOptions law_opts;
  law_opts.family_cap = 6;
  std::string law;
  SoundnessOptions sound_opts;

  auto* check = app.add_subcommand("check", "Check the signature and run every goal of a theory");
  check->add_option("theory", theory, "Theory file")->required();

  auto* interp = app.add_subcommand("interp", "Interpret the goals of a theory in a model");
  interp->add_option("theory", theory, "Theory file")->required();
  interp->add_option("--model", model, "Model file (JSON)")->required();
  interp->add_option("--goal", goal, "Only goal N (1-based)");

  auto* laws = app.add_subcommand("laws", "Check the LCC laws on all small posets and families");
  laws->add_option("--max-poset", max_poset)->capture_default_str();
  laws->add_option("--max-fiber", max_fiber)->capture_default_str();
  laws->add_option("--law", law, "Run a single law");
  laws->add_option("--family-cap", law_opts.family_cap,
                   "Enumerate nested families exhaustively up to this many, sample beyond")
      ->capture_default_str();
  laws->add_option("--seed", law_opts.seed, "Seed for sampled families")->capture_default_str();
  laws->add_flag("--corrupt-transport", law_opts.corrupt_transport,
                 "Mutation test: corrupt one transport before the pullback functor law");

  auto* iso = app.add_subcommand("iso", "Check the fibration round trips and the section count");
  iso->add_option("--max-poset", max_poset)->capture_default_str();
  iso->add_option("--max-fiber", max_fiber)->capture_default_str();

  auto* soundness = app.add_subcommand("soundness", "Fuzz the kernel against random models");
  soundness->add_option("theory", theory, "Theory file")->required();
  soundness->add_option("--seed", seed)->capture_default_str();
  soundness->add_option("--iters", iters)->capture_default_str();
  soundness->add_option("--max-poset", sound_opts.max_poset)->capture_default_str();
  soundness->add_option("--max-fiber", sound_opts.max_fiber)->capture_default_str();
  soundness->add_option("--depth", sound_opts.depth)->capture_default_str();
  soundness->add_flag("--mutant-lambda", sound_opts.interp.mutant_lambda,
                      "Mutation test: interpret lambda without split");

  auto* counter = app.add_subcommand("countermodel", "Search for a model where a type is empty");
  counter->add_option("theory", theory, "Theory file")->required();
  counter->add_option("--type", type_text, "Type expression")->required();
  counter->add_option("--ctx", ctx_text, "Context, e.g. \"x : b, y : b\"");
  counter->add_option("--max-poset", max_poset)->capture_default_str();
  counter->add_option("--max-fiber", max_fiber)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*check) return cmd_check(gl, theory);
    if (*interp) return cmd_interp(gl, theory, model, goal);
    if (*laws) {
      if (!law.empty()) law_opts.only = law;
      return cmd_laws(gl, max_poset, max_fiber, law_opts);
    }
    if (*iso) return cmd_iso(gl, max_poset, max_fiber);
    if (*soundness) return cmd_soundness(gl, theory, seed, iters, sound_opts);
    if (*counter) return cmd_countermodel(gl, theory, type_text, ctx_text, max_poset, max_fiber);
  } catch (const std::exception& e) {
    std::cerr << "mltt: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
