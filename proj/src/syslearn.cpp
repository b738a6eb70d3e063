#include "arl/syslearn.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>

namespace arl {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void bad_line(std::size_t line, const std::string& why) {
  throw Error(errc::malformed_line, "line " + std::to_string(line) + ": " + why);
}

[[noreturn]] void bad_binning(const std::string& why) { throw Error(errc::invalid_binning, why); }
[[noreturn]] void bad_spec(const std::string& why) { throw Error(errc::invalid_spec, why); }

Json read_json_file(const fs::path& path, std::string_view code) {
  std::ifstream in(path);
  if (!in) throw Error(code, "cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const std::exception& e) {
    throw Error(code, path.string() + ": " + e.what());
  }
}

std::string two_digits(int v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", v);
  return buf;
}

// Minutes since midnight from "HH:MM[:SS]" or a seconds-of-day number.
std::optional<int> minute_of_day(const RawValue& raw) {
  if (const auto* seconds = std::get_if<double>(&raw)) {
    if (*seconds < 0 || *seconds >= 86400) return std::nullopt;
    return static_cast<int>(*seconds / 60);
  }
  const auto& text = std::get<std::string>(raw);
  int h = 0, m = 0;
  if (text.size() < 5 || text[2] != ':') return std::nullopt;
  auto r1 = std::from_chars(text.data(), text.data() + 2, h);
  auto r2 = std::from_chars(text.data() + 3, text.data() + 5, m);
  if (r1.ec != std::errc() || r2.ec != std::errc() || r1.ptr != text.data() + 2 || r2.ptr != text.data() + 5) {
    return std::nullopt;
  }
  if (text.size() != 5 && !(text.size() == 8 && text[5] == ':')) return std::nullopt;
  if (h < 0 || h > 23 || m < 0 || m > 59) return std::nullopt;
  return h * 60 + m;
}

std::string raw_to_text(const RawValue& raw) {
  if (const auto* s = std::get_if<std::string>(&raw)) return *s;
  return format_number(std::get<double>(raw));
}

std::vector<std::string> string_list(const Json& j, const char* field, void (*fail)(const std::string&)) {
  auto it = j.find(field);
  if (it == j.end() || !it->is_array()) fail(std::string("'") + field + "' must be an array of strings");
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) fail(std::string("'") + field + "' must be an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

// Uniform doubles from raw engine output; independent of the standard
// library's distribution implementations.
class Random {
 public:
  explicit Random(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::size_t index(std::size_t n) { return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n))); }
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(index(static_cast<std::size_t>(hi - lo + 1)));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Traces

std::vector<TraceEvent> parse_trace(std::istream& in) {
  std::vector<TraceEvent> events;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const std::exception& e) {
      bad_line(number, e.what());
    }
    if (!j.is_object()) bad_line(number, "event must be a JSON object");
    auto t = j.find("t");
    if (t == j.end() || !t->is_number_integer()) bad_line(number, "'t' must be an integer");
    TraceEvent event;
    event.t = t->get<std::int64_t>();

    const bool sensor = j.contains("sensor");
    const bool action = j.contains("action");
    if (sensor == action) bad_line(number, "event needs exactly one of 'sensor' or 'action'");
    const auto& body = sensor ? j["sensor"] : j["action"];
    if (!body.is_object() || !body.contains("name") || !body["name"].is_string() || !body.contains("value")) {
      bad_line(number, "event body needs 'name' and 'value'");
    }
    const auto name = body["name"].get<std::string>();
    const auto& value = body["value"];
    if (sensor) {
      if (value.is_string()) {
        event.what = SensorReading{name, value.get<std::string>()};
      } else if (value.is_number()) {
        event.what = SensorReading{name, value.get<double>()};
      } else {
        bad_line(number, "sensor value must be a string or number");
      }
    } else {
      if (!value.is_string()) bad_line(number, "action value must be a string");
      event.what = UserAction{name, value.get<std::string>()};
    }
    if (!events.empty() && event.t < events.back().t) {
      throw Error(errc::timestamp_regression, "line " + std::to_string(number) + ": timestamp " +
                                                  std::to_string(event.t) + " precedes " +
                                                  std::to_string(events.back().t));
    }
    events.push_back(std::move(event));
  }
  return events;
}

std::vector<TraceEvent> parse_trace_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::malformed_line, "cannot read trace " + path.string());
  return parse_trace(in);
}

void write_trace(std::span<const TraceEvent> events, std::ostream& out) {
  for (const auto& e : events) {
    Json j = Json::object();
    j["t"] = e.t;
    Json body = Json::object();
    if (const auto* s = std::get_if<SensorReading>(&e.what)) {
      body["name"] = s->name;
      std::visit([&](const auto& v) { body["value"] = v; }, s->value);
      j["sensor"] = std::move(body);
    } else {
      const auto& a = std::get<UserAction>(e.what);
      body["name"] = a.name;
      body["value"] = a.value;
      j["action"] = std::move(body);
    }
    out << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Binning

std::vector<std::string> SignalBinning::labels() const {
  switch (kind) {
    case Kind::categorical: return values;
    case Kind::numeric: {
      std::vector<std::string> out;
      for (const auto& b : bins) out.push_back(b.label);
      return out;
    }
    case Kind::time_of_day: {
      std::vector<std::string> out;
      for (int start = 0; start < 24 * 60; start += bin_minutes) {
        out.push_back(bin_minutes % 60 == 0 ? two_digits(start / 60)
                                            : two_digits(start / 60) + ":" + two_digits(start % 60));
      }
      return out;
    }
  }
  return {};
}

std::string SignalBinning::bin(const RawValue& raw) const {
  auto unbinnable = [&] {
    return Error(errc::unbinnable_value, "signal '" + signal + "' value '" + raw_to_text(raw) + "' fits no bin");
  };
  switch (kind) {
    case Kind::categorical: {
      auto text = raw_to_text(raw);
      if (std::find(values.begin(), values.end(), text) == values.end()) throw unbinnable();
      return text;
    }
    case Kind::numeric: {
      const auto* x = std::get_if<double>(&raw);
      if (!x) throw unbinnable();
      for (const auto& b : bins)
        if (*x >= b.lo && *x < b.hi) return b.label;
      throw unbinnable();
    }
    case Kind::time_of_day: {
      auto minute = minute_of_day(raw);
      if (!minute) throw unbinnable();
      return labels()[static_cast<std::size_t>(*minute / bin_minutes)];
    }
  }
  throw unbinnable();
}

BinningConfig BinningConfig::from_json(const Json& j) {
  if (!j.is_object()) bad_binning("binning must be a JSON object");
  BinningConfig cfg;
  std::set<std::string> signal_names, attributes;
  auto signals = j.find("signals");
  if (signals == j.end() || !signals->is_array()) bad_binning("'signals' must be an array");
  for (const auto& s : *signals) {
    SignalBinning b;
    if (!s.is_object() || !s.contains("name") || !s["name"].is_string()) bad_binning("signal needs a 'name'");
    b.signal = s["name"].get<std::string>();
    b.attribute = s.value("attribute", b.signal);
    const auto kind = s.value("kind", std::string("categorical"));
    if (kind == "categorical") {
      b.kind = SignalBinning::Kind::categorical;
      b.values = string_list(s, "values", bad_binning);
    } else if (kind == "numeric") {
      b.kind = SignalBinning::Kind::numeric;
      auto bins = s.find("bins");
      if (bins == s.end() || !bins->is_array() || bins->empty()) bad_binning("numeric signal needs 'bins'");
      for (const auto& iv : *bins) {
        try {
          b.bins.push_back({iv.at("lo").get<double>(), iv.at("hi").get<double>(), iv.at("label").get<std::string>()});
        } catch (const std::exception&) {
          bad_binning("numeric bin needs 'lo', 'hi' and 'label'");
        }
      }
      for (std::size_t i = 0; i < b.bins.size(); ++i) {
        if (!(b.bins[i].lo < b.bins[i].hi)) bad_binning("bin '" + b.bins[i].label + "' is empty");
        if (i > 0 && b.bins[i].lo != b.bins[i - 1].hi) bad_binning("bins of '" + b.signal + "' are not contiguous");
      }
    } else if (kind == "time-of-day") {
      b.kind = SignalBinning::Kind::time_of_day;
      b.bin_minutes = s.value("bin_minutes", 60);
      if (b.bin_minutes <= 0 || (24 * 60) % b.bin_minutes != 0) bad_binning("'bin_minutes' must divide 1440");
    } else {
      bad_binning("unknown signal kind '" + kind + "'");
    }
    const auto labels = b.labels();
    if (labels.empty() || std::set(labels.begin(), labels.end()).size() != labels.size()) {
      bad_binning("labels of '" + b.signal + "' must be nonempty and unique");
    }
    if (!signal_names.insert(b.signal).second) bad_binning("duplicate signal '" + b.signal + "'");
    if (!attributes.insert(b.attribute).second) bad_binning("duplicate attribute '" + b.attribute + "'");
    cfg.signals.push_back(std::move(b));
  }

  auto actions = j.find("actions");
  if (actions == j.end() || !actions->is_array() || actions->empty()) bad_binning("'actions' must be a nonempty array");
  for (const auto& a : *actions) {
    ActionSpec spec;
    if (!a.is_object() || !a.contains("name") || !a["name"].is_string()) bad_binning("action needs a 'name'");
    spec.name = a["name"].get<std::string>();
    spec.values = string_list(a, "values", bad_binning);
    if (a.contains("idle")) spec.idle = a["idle"].get<std::string>();
    if (!attributes.insert(spec.name).second) bad_binning("duplicate attribute '" + spec.name + "'");
    cfg.actions.push_back(std::move(spec));
  }
  if (cfg.actions.size() > 1) {
    for (const auto& a : cfg.actions) {
      if (!a.idle || std::find(a.values.begin(), a.values.end(), *a.idle) == a.values.end()) {
        bad_binning("action '" + a.name + "' needs an 'idle' value from its domain");
      }
    }
  }
  try {
    (void)cfg.schema();
  } catch (const Error& e) {
    bad_binning(e.what());
  }
  return cfg;
}

BinningConfig BinningConfig::from_file(const fs::path& path) {
  return from_json(read_json_file(path, errc::invalid_binning));
}

Schema BinningConfig::schema() const {
  std::vector<AttributeSchema> inputs, outputs;
  for (const auto& s : signals) inputs.push_back({s.attribute, AttributeKind::input, s.labels()});
  for (const auto& a : actions) outputs.push_back({a.name, AttributeKind::output, a.values});
  return Schema(std::move(inputs), std::move(outputs));
}

const SignalBinning* BinningConfig::find_signal(std::string_view name) const {
  for (const auto& s : signals)
    if (s.signal == name) return &s;
  return nullptr;
}

TrainingRow snapshot_to_row(const std::map<std::string, RawValue>& state, const Item& action,
                            const BinningConfig& binning) {
  TrainingRow row;
  for (const auto& s : binning.signals) {
    auto it = state.find(s.signal);
    if (it != state.end()) row.inputs.emplace(s.attribute, s.bin(it->second));
  }
  const ActionSpec* fired = nullptr;
  for (const auto& a : binning.actions)
    if (a.name == action.attribute) fired = &a;
  if (!fired) throw Error(errc::unknown_attribute, "'" + action.attribute + "' is not a declared action");
  if (std::find(fired->values.begin(), fired->values.end(), action.value) == fired->values.end()) {
    throw Error(errc::out_of_domain_value, "'" + action.value + "' is not a value of '" + action.attribute + "'");
  }
  for (const auto& a : binning.actions) {
    row.outputs.emplace(a.name, &a == fired ? action.value : *a.idle);
  }
  return row;
}

// ---------------------------------------------------------------------------
// Replay

Json ReplayReport::to_json() const {
  Json j = Json::object();
  j["actions"] = actions;
  j["fired"] = fired;
  j["correct"] = correct;
  j["precision"] = precision;
  j["recall"] = recall;
  Json per = Json::object();
  for (const auto& [name, tally] : per_action) {
    Json t = Json::object();
    t["occurrences"] = tally.occurrences;
    t["predicted"] = tally.predicted;
    t["correct"] = tally.correct;
    per[name] = std::move(t);
  }
  j["per_action"] = std::move(per);
  j["rules"] = Json::array();
  for (const auto& r : rules) j["rules"].push_back(rule_to_json(r, true));
  j["predictions"] = Json::array();
  for (const auto& p : predictions) {
    Json e = Json::object();
    e["t"] = p.t;
    e["rule"] = p.rule;
    e["predicted"] = itemset_to_json(p.predicted);
    e["actual"] = itemset_to_json(ItemSet{p.actual});
    e["matched"] = p.matched;
    j["predictions"].push_back(std::move(e));
  }
  return j;
}

IdentificationKey register_system_app(Engine& engine, const BinningConfig& binning, const std::string& name) {
  auto key = engine.register_app(name);
  auto schema = binning.schema();
  engine.set_input_output(key, schema.inputs(), schema.outputs());
  return key;
}

ReplayReport replay(std::span<const TraceEvent> trace, Engine& engine, const IdentificationKey& key,
                    const BinningConfig& binning, const Thresholds& thresholds, RuleSource algorithm,
                    const ReplayPolicy& policy) {
  {
    const auto ctx = engine.context(key);
    if (!ctx.data || !(ctx.data->schema == binning.schema())) {
      throw Error(errc::schema_mismatch, "application schema does not match the binning configuration");
    }
  }
  const std::size_t every = std::max<std::size_t>(1, policy.regenerate_every);

  ReplayReport report;
  std::map<std::string, RawValue> state;
  bool have_rules = engine.context(key).rules_generated;
  std::size_t pending = 0;

  for (const auto& event : trace) {
    if (const auto* reading = std::get_if<SensorReading>(&event.what)) {
      state[reading->name] = reading->value;
      continue;
    }
    const auto& user = std::get<UserAction>(event.what);
    const Item actual{user.name, user.value};
    auto row = snapshot_to_row(state, actual, binning);
    const auto tally_key = user.name + "=" + user.value;

    // Predict from the state as it stood before this action.
    ++report.actions;
    ++report.per_action[tally_key].occurrences;
    if (have_rules) {
      std::vector<Item> inputs;
      for (const auto& [k, v] : row.inputs) inputs.push_back({k, v});
      auto gco = engine.get_current_output(key, ItemSet(std::move(inputs)));
      if (gco.outputs) {
        const bool matched = gco.outputs->contains(actual);
        ++report.fired;
        if (matched) {
          ++report.correct;
          ++report.per_action[tally_key].correct;
        }
        for (const auto& a : binning.actions) {
          if (auto v = gco.outputs->value_of(a.name); v && (binning.actions.size() == 1 || *v != *a.idle)) {
            ++report.per_action[a.name + "=" + std::string(*v)].predicted;
          }
        }
        report.predictions.push_back({event.t, gco.rule_identity, *gco.outputs, actual, matched});
        if (policy.send_feedback) {
          engine.send_feedback_last_gco(key, matched ? Verdict::positive : Verdict::negative);
        }
      }
    }

    // Then learn from it.
    engine.set_training_data_row(key, std::move(row));
    if (every == 1) {
      if (engine.context(key).mode != GenerationMode::automated) {
        engine.generate_rules(key, thresholds, algorithm);
        engine.set_generation_mode(key, GenerationMode::automated);
      }
      have_rules = true;
    } else if (++pending == every) {
      engine.generate_rules(key, thresholds, algorithm);
      pending = 0;
      have_rules = true;
    }
  }
  if (pending > 0) engine.generate_rules(key, thresholds, algorithm);

  for (const auto& stored : engine.context(key).rules) report.rules.push_back(stored.rule);
  report.precision = report.fired ? static_cast<double>(report.correct) / static_cast<double>(report.fired) : 0.0;
  report.recall = report.actions ? static_cast<double>(report.correct) / static_cast<double>(report.actions) : 0.0;
  return report;
}

// ---------------------------------------------------------------------------
// Trace generation

TraceSpec TraceSpec::from_json(const Json& j) {
  if (!j.is_object()) bad_spec("trace spec must be a JSON object");
  TraceSpec spec;
  try {
    spec.start = j.value("start", spec.start);
    if (j.contains("step")) {
      spec.step_min = j["step"].at(0).get<std::int64_t>();
      spec.step_max = j["step"].at(1).get<std::int64_t>();
    }
    for (const auto& s : j.at("signals")) {
      Signal sig;
      sig.name = s.at("name").get<std::string>();
      sig.attribute = s.value("attribute", sig.name);
      sig.values = s.at("values").get<std::vector<std::string>>();
      sig.time_of_day = s.value("time_of_day", false);
      sig.change_prob = s.value("change_prob", 0.5);
      spec.signals.push_back(std::move(sig));
    }
    const auto& action = j.at("action");
    spec.action = action.at("name").get<std::string>();
    spec.action_values = action.at("values").get<std::vector<std::string>>();
    spec.default_action = action.at("default").get<std::string>();
    if (j.contains("patterns")) {
      for (const auto& p : j["patterns"]) {
        Pattern pat;
        pat.when = itemset_from_json(p.at("when"));
        pat.then = p.at("then").get<std::string>();
        pat.p = p.value("p", 1.0);
        if (p.contains("otherwise")) pat.otherwise = p["otherwise"].get<std::string>();
        spec.patterns.push_back(std::move(pat));
      }
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    bad_spec(e.what());
  }

  if (spec.step_min < 0 || spec.step_max < spec.step_min) bad_spec("'step' must be [min, max] with 0 <= min <= max");
  if (spec.signals.empty()) bad_spec("at least one signal is required");
  std::set<std::string> attributes;
  for (const auto& s : spec.signals) {
    if (s.values.empty()) bad_spec("signal '" + s.name + "' has no values");
    if (!(s.change_prob >= 0.0 && s.change_prob <= 1.0)) bad_spec("'change_prob' must be in [0, 1]");
    if (s.time_of_day) {
      for (const auto& v : s.values) {
        int h = -1;
        auto r = std::from_chars(v.data(), v.data() + v.size(), h);
        if (v.size() != 2 || r.ec != std::errc() || h < 0 || h > 23) bad_spec("time-of-day values are hours 00-23");
      }
    }
    if (!attributes.insert(s.attribute).second) bad_spec("duplicate attribute '" + s.attribute + "'");
  }
  auto is_action = [&](const std::string& v) {
    return std::find(spec.action_values.begin(), spec.action_values.end(), v) != spec.action_values.end();
  };
  if (!is_action(spec.default_action)) bad_spec("default action is not among the action values");
  for (const auto& p : spec.patterns) {
    if (!is_action(p.then) || (p.otherwise && !is_action(*p.otherwise))) bad_spec("pattern names an unknown action");
    if (!(p.p >= 0.0 && p.p <= 1.0)) bad_spec("pattern probability must be in [0, 1]");
    for (const auto& item : p.when) {
      auto sig = std::find_if(spec.signals.begin(), spec.signals.end(),
                              [&](const Signal& s) { return s.attribute == item.attribute; });
      if (sig == spec.signals.end() ||
          std::find(sig->values.begin(), sig->values.end(), item.value) == sig->values.end()) {
        bad_spec("pattern condition " + item.attribute + "=" + item.value + " is not a signal value");
      }
    }
  }
  return spec;
}

TraceSpec TraceSpec::from_file(const fs::path& path) { return from_json(read_json_file(path, errc::invalid_spec)); }

GeneratedTrace generate_trace(const TraceSpec& spec, std::uint64_t seed, std::size_t length) {
  Random rng(seed);
  GeneratedTrace out;
  std::vector<std::size_t> current(spec.signals.size(), 0);
  std::vector<std::uint64_t> condition_hits(spec.patterns.size(), 0);
  std::vector<std::uint64_t> outcome_hits(spec.patterns.size(), 0);
  std::int64_t t = spec.start;

  auto emit = [&](TraceEvent e) {
    if (out.events.size() >= length) return false;
    out.events.push_back(std::move(e));
    t += rng.between(spec.step_min, spec.step_max);
    return true;
  };
  auto reading = [&](std::size_t s) {
    const auto& sig = spec.signals[s];
    const auto& label = sig.values[current[s]];
    RawValue raw = label;
    if (sig.time_of_day) raw = label + ":" + two_digits(static_cast<int>(rng.index(60)));
    return TraceEvent{t, SensorReading{sig.name, std::move(raw)}};
  };

  bool first = true;
  while (out.events.size() < length) {
    for (std::size_t s = 0; s < spec.signals.size(); ++s) {
      const auto& sig = spec.signals[s];
      if (first) {
        current[s] = rng.index(sig.values.size());
      } else if (rng.uniform() < sig.change_prob && sig.values.size() > 1) {
        const auto shift = 1 + rng.index(sig.values.size() - 1);
        current[s] = (current[s] + shift) % sig.values.size();
      } else {
        continue;
      }
      if (!emit(reading(s))) break;
    }
    first = false;

    ItemSet state;
    for (std::size_t s = 0; s < spec.signals.size(); ++s) {
      state.insert({spec.signals[s].attribute, spec.signals[s].values[current[s]]});
    }
    std::string chosen = spec.default_action;
    std::optional<std::size_t> matched;
    for (std::size_t p = 0; p < spec.patterns.size(); ++p) {
      if (spec.patterns[p].when.is_subset_of(state)) {
        matched = p;
        break;
      }
    }
    if (matched) {
      const auto& pat = spec.patterns[*matched];
      chosen = rng.uniform() < pat.p ? pat.then : pat.otherwise.value_or(spec.default_action);
    }
    if (!emit(TraceEvent{t, UserAction{spec.action, chosen}})) break;
    // Sidecar frequencies count every emitted action against each pattern
    // whose condition held, whether or not that pattern was the one applied.
    for (std::size_t p = 0; p < spec.patterns.size(); ++p) {
      if (!spec.patterns[p].when.is_subset_of(state)) continue;
      ++condition_hits[p];
      if (chosen == spec.patterns[p].then) ++outcome_hits[p];
    }
  }

  out.sidecar = Json::object();
  for (std::size_t p = 0; p < spec.patterns.size(); ++p) {
    const auto& pat = spec.patterns[p];
    Json entry = Json::object();
    const auto action_key = canonical_encode(ItemSet{Item{spec.action, pat.then}});
    entry[action_key] = condition_hits[p] ? Json(static_cast<double>(outcome_hits[p]) /
                                                 static_cast<double>(condition_hits[p]))
                                          : Json();
    out.sidecar[canonical_encode(pat.when)] = std::move(entry);
  }
  return out;
}

}  // namespace arl
