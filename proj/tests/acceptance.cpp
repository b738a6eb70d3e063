// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include "arl/commands.hpp"
#include "arl/engine.hpp"
#include "arl/miner.hpp"
#include "arl/service.hpp"
#include "arl/store.hpp"
#include "arl/syslearn.hpp"
#include "conformance.hpp"
#include "support.hpp"
#include "wire_client.hpp"

namespace arl::acceptance {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail.clear();
    pass = false;
    if (detail.size() < 400) detail += (detail.empty() ? "" : "; ") + why;
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int digits = 3) {
  std::ostringstream ss;
  ss.precision(digits);
  ss << std::fixed << v;
  return ss.str();
}

std::vector<FrequentItemSet> sorted(std::vector<FrequentItemSet> family) {
  std::sort(family.begin(), family.end(), [](const auto& a, const auto& b) { return a.items < b.items; });
  return family;
}

struct RandomCase {
  Dataset data;
  double min_support;
};

const std::vector<RandomCase>& random_cases() {
  static const std::vector<RandomCase> cases = [] {
    std::mt19937_64 rng(20240601);
    std::vector<RandomCase> out;
    for (int i = 0; i < 200; ++i) out.push_back({test::random_dataset(rng, 12, 200), 0.1 * (1 + i % 9)});
    return out;
  }();
  return cases;
}

Verdict ac1_oracle_equivalence() {
  Verdict v;
  const auto start = Clock::now();
  int discrepancies = 0;
  for (std::size_t i = 0; i < random_cases().size(); ++i) {
    const auto& [data, s] = random_cases()[i];
    try {
      const auto mined = apriori(data, s);
      const bool same_as_oracle = test::to_oracle(mined) == test::oracle_frequent(data, s);
      const bool same_as_brute = sorted(mined) == sorted(brute_force_frequent(data, s));
      if (!same_as_oracle || !same_as_brute) {
        ++discrepancies;
        v.fail("dataset " + std::to_string(i) + " at s=" + fmt(s, 1));
      }
    } catch (const Error& e) {
      ++discrepancies;
      v.fail("dataset " + std::to_string(i) + ": " + e.what());
    }
  }
  const double elapsed = seconds_since(start);
  if (elapsed >= 60.0) v.fail("took " + fmt(elapsed) + " s");
  if (v.pass)
    v.detail = std::to_string(random_cases().size()) + " datasets, " + std::to_string(discrepancies) +
               " discrepancies, " + fmt(elapsed) + " s";
  return v;
}

Verdict ac2_maximality() {
  Verdict v;
  for (std::size_t i = 0; i < random_cases().size(); ++i) {
    const auto& [data, s] = random_cases()[i];
    try {
      const auto maximal = max_miner(data, s);
      std::set<test::OracleSet> got;
      for (const auto& [set, count] : test::to_oracle(maximal)) got.insert(set);
      if (got != test::oracle_maximal(test::oracle_frequent(data, s)))
        v.fail("dataset " + std::to_string(i) + ": maximal family differs");
      if (sorted(expand_maximal(maximal, data, s)) != sorted(apriori(data, s)))
        v.fail("dataset " + std::to_string(i) + ": expansion differs from apriori");
    } catch (const Error& e) {
      v.fail("dataset " + std::to_string(i) + ": " + e.what());
    }
  }
  if (v.pass) v.detail = std::to_string(random_cases().size()) + " datasets, maximal sets and expansions exact";
  return v;
}

Verdict ac3_rule_identity() {
  Verdict v;
  struct Fixture {
    std::string name;
    Dataset data;
    double s, c;
  };
  std::vector<Fixture> fixtures = {{"F1", test::f1_dataset(), 0.4, 0.8},
                                   {"F1-low", test::f1_dataset(), 0.2, 0.5},
                                   {"planted", test::planted_dataset(17), 0.5, 0.8},
                                   {"planted-low", test::planted_dataset(17), 0.2, 0.6}};
  for (std::size_t i = 0; i < random_cases().size(); ++i)
    fixtures.push_back({"random" + std::to_string(i), random_cases()[i].data, random_cases()[i].min_support, 0.5});
  std::size_t rules_compared = 0;
  for (const auto& f : fixtures) {
    try {
      const auto a = derive_rules(apriori(f.data, f.s), f.data.schema, f.c, RuleSource::apriori);
      const auto m = derive_rules(expand_maximal(max_miner(f.data, f.s), f.data, f.s), f.data.schema, f.c,
                                  RuleSource::maxminer);
      if (test::to_oracle(a) != test::to_oracle(m)) v.fail(f.name + ": rule sets differ");
      if (test::to_oracle(a) != test::oracle_rules(f.data, f.s, f.c)) v.fail(f.name + ": rules differ from oracle");
      rules_compared += a.size();
    } catch (const Error& e) {
      v.fail(f.name + ": " + e.what());
    }
  }
  const auto rules = mine_rules(test::f1_dataset(), Thresholds::make(0.4, 0.8), RuleSource::apriori);
  const auto headline = std::find_if(rules.begin(), rules.end(), [](const Rule& r) {
    return r.identity() == "{headphones=yes}=>{app=music}";
  });
  if (headline == rules.end()) {
    v.fail("F1 headline rule missing");
  } else if (headline->support != 0.6 || headline->confidence != 1.0) {
    v.fail("F1 headline rule at support " + format_number(headline->support) + ", confidence " +
           format_number(headline->confidence));
  }
  if (v.pass)
    v.detail = std::to_string(fixtures.size()) + " fixtures, " + std::to_string(rules_compared) +
               " rules identical; {headphones=yes}=>{app=music} support=0.6 confidence=1";
  return v;
}

Verdict ac4_candidate_direction() {
  Verdict v;
  const auto data = test::planted_dataset(17);
  MiningStats a, m;
  apriori(data, 0.5, &a);
  const auto maximal = max_miner(data, 0.5, &m);
  const auto longest = std::max_element(maximal.begin(), maximal.end(), [](const auto& x, const auto& y) {
    return x.items.size() < y.items.size();
  });
  if (longest == maximal.end() || longest->items.size() != 8) v.fail("planted pattern of length 8 not recovered");
  if (!(m.candidates_generated < a.candidates_generated))
    v.fail("maxminer " + std::to_string(m.candidates_generated) + " vs apriori " +
           std::to_string(a.candidates_generated));
  if (v.pass)
    v.detail = "candidates maxminer=" + std::to_string(m.candidates_generated) +
               " < apriori=" + std::to_string(a.candidates_generated);
  return v;
}

Verdict ac5_id3() {
  Verdict v;
  const double even = entropy({{"music", 1}, {"none", 1}});
  const double skewed = entropy({{"music", 3}, {"none", 2}});
  if (even != 1.0) v.fail("entropy(1,1)=" + format_number(even));
  if (std::abs(skewed - 0.9710) > 1e-4) v.fail("entropy(3,2)=" + format_number(skewed));

  std::mt19937_64 rng(99);
  int fitted = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto d = test::random_dataset(rng, 12, 80);
    const auto target = d.schema.outputs().front().name;
    // Make the target a function of the inputs.
    std::map<std::map<std::string, std::string>, std::string> label;
    for (auto& r : d.rows) r.outputs[target] = label.emplace(r.inputs, r.outputs.at(target)).first->second;
    const auto tree = id3_build(d, target);
    bool ok = true;
    for (const auto& r : d.rows) ok = ok && tree->classify(r.inputs).value == r.outputs.at(target);
    if (!ok) v.fail("trial " + std::to_string(trial) + ": training row misclassified");
    if (!(*tree == *id3_build(d, target))) v.fail("trial " + std::to_string(trial) + ": nondeterministic tree");
    ++fitted;
  }
  if (v.pass)
    v.detail = "entropy(1,1)=1, entropy(3,2)=" + fmt(skewed, 4) + ", " + std::to_string(fitted) +
               " consistent datasets fitted deterministically";
  return v;
}

Verdict ac6_protocol() {
  Verdict v;
  test::TempDir dir;
  const auto sock = (dir / "arl.sock").string();
  Service service;
  Server server(service, "unix:" + sock);
  std::thread thread([&] { server.run(); });
  std::size_t cases = 0;
  {
    auto client = test::WireClient::unix_socket(sock);
    test::ConformanceSession s([&](const std::string& line) { return client.call(line); });
    test::run_conformance(s);
    cases = s.results().size();
    for (const auto& r : s.results())
      if (!r.passed) v.fail(r.name + ": " + r.detail);
    const auto verbs = s.verbs_seen();
    for (const auto& verb : test::all_verbs())
      if (!verbs.count(verb)) v.fail("verb not exercised: " + verb);
    const auto codes = s.codes_seen();
    for (const auto& code : test::wire_error_codes())
      if (!codes.count(code)) v.fail("error code not exercised: " + code);
  }
  server.stop();
  thread.join();
  if (v.pass)
    v.detail = std::to_string(cases) + " cases, 12 verbs, " + std::to_string(test::wire_error_codes().size()) +
               " error codes, all passed";
  return v;
}

Verdict ac7_feedback() {
  Verdict v;
  Engine engine;
  const auto key = engine.register_app("fb");
  const auto d = test::f1_dataset();
  engine.set_input_output(key, d.schema.inputs(), d.schema.outputs());
  engine.load_training_data(key, d.rows);
  // A tiny confidence threshold keeps the rule active long enough to reach the floor.
  const auto thresholds = Thresholds::make(0.4, 0.01);
  engine.generate_rules(key, thresholds, RuleSource::apriori);
  const ItemSet query{{"headphones", "yes"}};
  const std::string rule = "{headphones=yes}=>{app=music}";

  auto gco_rule = [&]() -> std::string {
    const auto r = engine.get_current_output(key, query);
    return r.outputs ? r.rule_identity : std::string("null");
  };

  if (gco_rule() != rule) v.fail("unexpected best match");
  const double up = engine.send_feedback_last_gco(key, arl::Verdict::positive);
  if (up != 1.0) v.fail("ceiling not clamped: " + format_number(up));
  try {
    engine.send_feedback_last_gco(key, arl::Verdict::positive);
    v.fail("double feedback accepted");
  } catch (const Error& e) {
    if (e.code() != errc::no_pending_gco) v.fail(std::string("double feedback: ") + e.what());
  }
  gco_rule();
  const double down = engine.send_feedback_last_gco(key, arl::Verdict::negative);
  if (std::abs(down - 0.9) > 1e-12) v.fail("negative step gave " + format_number(down));
  gco_rule();
  const double back = engine.send_feedback_last_gco(key, arl::Verdict::positive);
  if (std::abs(back - 0.95) > 1e-12) v.fail("positive step gave " + format_number(back));

  // From 0.95 the tenth negative step overshoots zero by 0.05.
  double c = back;
  for (int step = 0; step < 10; ++step) {
    if (gco_rule() != rule) {
      v.fail("rule left before reaching the floor at " + format_number(c));
      break;
    }
    c = engine.send_feedback_last_gco(key, arl::Verdict::negative);
  }
  if (c != 0.0) v.fail("floor not clamped: " + format_number(c));
  for (int i = 0; i < 3; ++i)
    if (gco_rule() == rule) v.fail("deactivated rule returned");
  try {
    engine.send_feedback_last_gco(key, arl::Verdict::positive);
    v.fail("feedback accepted without a pending output");
  } catch (const Error&) {
  }
  engine.generate_rules(key, thresholds, RuleSource::apriori);
  if (gco_rule() != rule) v.fail("rule not restored by regeneration");

  if (v.pass) v.detail = "+0.05/-0.10 steps, clamped at 1 and 0, double feedback rejected, deactivation held";
  return v;
}

AppContext without_gco(AppContext ctx) {
  ctx.last_gco.reset();
  return ctx;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict ac8_persistence() {
  Verdict v;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    test::TempDir dir;
    std::vector<AppContext> expected;
    {
      Store store(dir.path(), Store::Options{.sync = false});
      Engine engine({}, &store);
      std::mt19937_64 rng(seed);
      test::random_workload(engine, rng, 200);
      for (const auto& k : engine.keys()) expected.push_back(without_gco(engine.context(k)));
    }
    Store reopened(dir.path());
    if (reopened.loaded() != expected) v.fail("seed " + std::to_string(seed) + ": reopened state differs");
  }

  // Kill right after an acknowledged row.
  {
    test::TempDir dir;
    IdentificationKey key = IdentificationKey::generate();
    const auto d = test::f1_dataset();
    {
      Store store(dir.path());
      Engine engine({}, &store);
      key = engine.register_app("crash");
      engine.set_input_output(key, d.schema.inputs(), d.schema.outputs());
    }
    const pid_t child = fork();
    if (child == 0) {
      Store store(dir.path());
      Engine engine({}, &store);
      for (auto& ctx : std::vector<AppContext>(store.loaded())) engine.restore(std::move(ctx));
      engine.set_training_data_row(key, d.rows[3]);
      raise(SIGKILL);
      _exit(1);
    }
    int status = 0;
    waitpid(child, &status, 0);
    Store store(dir.path());
    if (!WIFSIGNALED(status)) v.fail("crash child was not killed");
    if (store.loaded().size() != 1 || store.loaded()[0].data->rows != std::vector<TrainingRow>{d.rows[3]})
      v.fail("acknowledged row lost after kill");
  }

  // Torn trailing record.
  {
    test::TempDir dir;
    IdentificationKey key = IdentificationKey::generate();
    {
      Store store(dir.path());
      Engine engine({}, &store);
      key = engine.register_app("torn");
      const auto d = test::f1_dataset();
      engine.set_input_output(key, d.schema.inputs(), d.schema.outputs());
      engine.load_training_data(key, d.rows);
    }
    const auto rows = dir.path() / key.str() / "rows.jsonl";
    const auto intact = slurp(rows);
    std::ofstream(rows, std::ios::binary | std::ios::app) << R"({"inputs":{"headphones":"y)";
    Store store(dir.path());
    if (store.warnings().size() != 1) v.fail("torn record not warned about");
    if (store.loaded()[0].data->rows.size() != 5) v.fail("torn record not dropped");
    if (slurp(rows) != intact) v.fail("torn record not truncated");
  }
  if (v.pass) v.detail = "20 random states bit-identical, acknowledged row survived SIGKILL, torn record dropped";
  return v;
}

Verdict ac9_planted_recovery() {
  Verdict v;
  const auto start = Clock::now();
  const auto spec = TraceSpec::from_file(test::fixture("t1_spec.json"));
  const auto bins = BinningConfig::from_file(test::fixture("t1_bins.json"));
  const auto generated = generate_trace(spec, 7, 500);
  Engine engine;
  const auto key = register_system_app(engine, bins);
  const auto report = replay(generated.events, engine, key, bins, Thresholds::make(0.05, 0.7), RuleSource::apriori,
                             {.regenerate_every = 25});
  const double elapsed = seconds_since(start);

  const double truth = generated.sidecar.at("{headphones=yes,hour=08}").at("{app_launched=music}").get<double>();
  const auto learned = std::find_if(report.rules.begin(), report.rules.end(), [](const Rule& r) {
    return r.identity() == "{headphones=yes,hour=08}=>{app_launched=music}";
  });
  double confidence = -1.0;
  if (learned == report.rules.end()) {
    v.fail("planted rule not learned");
  } else {
    confidence = learned->confidence;
    if (std::abs(confidence - truth) > 0.05)
      v.fail("confidence " + fmt(confidence) + " vs sidecar " + fmt(truth));
  }
  if (report.precision < 0.8) v.fail("precision " + fmt(report.precision));
  if (report.recall < 0.8) v.fail("recall " + fmt(report.recall));
  if (elapsed >= 30.0) v.fail("replay took " + fmt(elapsed) + " s");
  if (v.pass)
    v.detail = "confidence " + fmt(confidence) + " vs sidecar " + fmt(truth) + ", precision " +
               fmt(report.precision) + ", recall " + fmt(report.recall) + ", " + fmt(elapsed) + " s";
  return v;
}

Verdict ac10_determinism() {
  Verdict v;
  test::TempDir dir;
  auto capture = [](auto fn, const auto& options) {
    std::ostringstream out, err;
    const int status = fn(options, out, err);
    return std::to_string(status) + "\n" + out.str();
  };

  test::write_data_file(test::planted_dataset(5), dir / "planted.jsonl");
  for (const auto& data : {test::fixture("f1.jsonl"), dir / "planted.jsonl"}) {
    for (auto algo : {RuleSource::apriori, RuleSource::maxminer, RuleSource::id3}) {
      MineOptions o{data, 0.3, 0.6, algo, true};
      if (capture(cmd_mine, o) != capture(cmd_mine, o)) v.fail("mine output differs for " + data.string());
    }
  }

  GenTraceOptions g{test::fixture("t1_spec.json"), 11, 400, dir / "a.jsonl", {}};
  auto g2 = g;
  g2.out = dir / "b.jsonl";
  capture(cmd_gen_trace, g);
  capture(cmd_gen_trace, g2);
  if (slurp(dir / "a.jsonl") != slurp(dir / "b.jsonl") || slurp(dir / "a.jsonl").empty())
    v.fail("gen-trace trace differs");
  if (slurp(dir / "a.jsonl.sidecar.json") != slurp(dir / "b.jsonl.sidecar.json")) v.fail("gen-trace sidecar differs");

  for (std::size_t every : {std::size_t{1}, std::size_t{25}}) {
    for (bool feedback : {false, true}) {
      ReplayOptions r{dir / "a.jsonl", test::fixture("t1_bins.json"), 0.05, 0.7, RuleSource::apriori, every, feedback};
      const auto first = capture(cmd_replay, r);
      if (first != capture(cmd_replay, r)) v.fail("replay output differs (every=" + std::to_string(every) + ")");
      if (first.rfind("0\n", 0) != 0) v.fail("replay failed");
    }
  }
  if (v.pass) v.detail = "mine, replay and gen-trace byte-stable across repeated runs";
  return v;
}

}  // namespace
}  // namespace arl::acceptance

int main() {
  using namespace arl::acceptance;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"AC1", ac1_oracle_equivalence}, {"AC2", ac2_maximality},   {"AC3", ac3_rule_identity},
      {"AC4", ac4_candidate_direction}, {"AC5", ac5_id3},         {"AC6", ac6_protocol},
      {"AC7", ac7_feedback},           {"AC8", ac8_persistence},  {"AC9", ac9_planted_recovery},
      {"AC10", ac10_determinism}};
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Verdict verdict;
    try {
      verdict = run();
    } catch (const std::exception& e) {
      verdict.fail(std::string("exception: ") + e.what());
    }
    failures += verdict.pass ? 0 : 1;
    std::cout << name << ' ' << (verdict.pass ? "PASS" : "FAIL") << ' ' << verdict.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
