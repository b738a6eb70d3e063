#pragma once

// System-level learning: the platform itself is the client. Sensor readings
// become (binned) inputs, user actions become outputs, and every action is
// first predicted from the current state and then learned.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "arl/codec.hpp"
#include "arl/engine.hpp"

namespace arl {

using RawValue = std::variant<std::string, double>;

struct SensorReading {
  std::string name;
  RawValue value;
  bool operator==(const SensorReading&) const = default;
};

struct UserAction {
  std::string name;
  std::string value;
  bool operator==(const UserAction&) const = default;
};

struct TraceEvent {
  std::int64_t t = 0;  // seconds since epoch
  std::variant<SensorReading, UserAction> what;
  bool operator==(const TraceEvent&) const = default;
};

/// JSON lines: {"t":n,"sensor":{"name":..,"value":..}} or
/// {"t":n,"action":{"name":..,"value":..}}. Blank lines are ignored.
/// Throws `malformed-line` (message carries the line number) or
/// `timestamp-regression`.
std::vector<TraceEvent> parse_trace(std::istream& in);
std::vector<TraceEvent> parse_trace_file(const std::filesystem::path& path);
void write_trace(std::span<const TraceEvent> events, std::ostream& out);

/// How one raw signal becomes a categorical input attribute.
struct SignalBinning {
  enum class Kind { categorical, numeric, time_of_day };
  struct Interval {
    double lo = 0.0;  // inclusive
    double hi = 0.0;  // exclusive
    std::string label;
  };

  std::string signal;
  std::string attribute;
  Kind kind = Kind::categorical;
  std::vector<std::string> values{};  // categorical
  std::vector<Interval> bins{};       // numeric, ascending and contiguous
  int bin_minutes = 60;             // time_of_day, divides 24h

  /// The attribute's domain, in bin order.
  std::vector<std::string> labels() const;
  /// Throws `unbinnable-value`.
  std::string bin(const RawValue& raw) const;
};

struct ActionSpec {
  std::string name;
  std::vector<std::string> values;
  /// Value recorded for this action attribute when a different action
  /// fires. Required when more than one action attribute exists.
  std::optional<std::string> idle;
};

struct BinningConfig {
  std::vector<SignalBinning> signals;
  std::vector<ActionSpec> actions;

  /// Throws `invalid-binning`.
  static BinningConfig from_json(const Json& j);
  static BinningConfig from_file(const std::filesystem::path& path);
  Schema schema() const;
  const SignalBinning* find_signal(std::string_view name) const;
};

/// Throws `unbinnable-value`, or `unknown-attribute` / `out-of-domain-value`
/// for an action the configuration does not declare.
TrainingRow snapshot_to_row(const std::map<std::string, RawValue>& state, const Item& action,
                            const BinningConfig& binning);

struct ReplayPolicy {
  /// 1: automated regeneration after every learned row. N > 1: manual
  /// regeneration after every N rows and once more at the end.
  std::size_t regenerate_every = 1;
  /// Send positive/negative feedback after each fired prediction.
  bool send_feedback = false;
};

struct Prediction {
  std::int64_t t = 0;
  std::string rule;
  ItemSet predicted;
  Item actual;
  bool matched = false;
};

struct ActionTally {
  std::uint64_t occurrences = 0;  // times the user performed the action
  std::uint64_t predicted = 0;    // fired predictions naming the action
  std::uint64_t correct = 0;      // occurrences that were predicted
};

struct ReplayReport {
  std::vector<Rule> rules;
  std::vector<Prediction> predictions;  // fired predictions only
  std::uint64_t actions = 0;
  std::uint64_t fired = 0;
  std::uint64_t correct = 0;
  double precision = 0.0;  // correct / fired
  double recall = 0.0;     // correct / actions
  std::map<std::string, ActionTally> per_action;  // keyed by "name=value"

  Json to_json() const;
};

/// Registers `name` and installs the binning's schema.
IdentificationKey register_system_app(Engine& engine, const BinningConfig& binning,
                                      const std::string& name = "system");

/// Throws `schema-mismatch` when the app's schema differs from the
/// binning's; engine errors propagate.
ReplayReport replay(std::span<const TraceEvent> trace, Engine& engine, const IdentificationKey& key,
                    const BinningConfig& binning, const Thresholds& thresholds, RuleSource algorithm,
                    const ReplayPolicy& policy = {});

// ---------------------------------------------------------------------------
// Planted-pattern trace generation

struct TraceSpec {
  struct Signal {
    std::string name;
    std::string attribute;
    std::vector<std::string> values;  // binned labels; hour labels for time_of_day
    bool time_of_day = false;
    double change_prob = 0.5;
  };
  struct Pattern {
    ItemSet when;  // over signal attributes
    std::string then;
    double p = 1.0;
    std::optional<std::string> otherwise;
  };

  std::int64_t start = 1700000000;
  std::int64_t step_min = 60;
  std::int64_t step_max = 900;
  std::vector<Signal> signals;
  std::string action;
  std::vector<std::string> action_values;
  std::string default_action;
  std::vector<Pattern> patterns;

  /// Throws `invalid-spec`.
  static TraceSpec from_json(const Json& j);
  static TraceSpec from_file(const std::filesystem::path& path);
};

struct GeneratedTrace {
  std::vector<TraceEvent> events;
  /// {"<condition encoding>": {"<action encoding>": frequency}} per pattern,
  /// counted over the emitted actions.
  Json sidecar;
};

/// Deterministic for a fixed (spec, seed, length).
GeneratedTrace generate_trace(const TraceSpec& spec, std::uint64_t seed, std::size_t length);

}  // namespace arl
