#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "arl/miner.hpp"
#include "arl/model.hpp"

namespace arl {

enum class GenerationMode { manual, automated };
enum class Verdict { positive, negative };
enum class DeleteMode { first, all };

std::string_view to_string(GenerationMode mode);
GenerationMode parse_generation_mode(std::string_view text);

struct GenerationConfig {
  Thresholds thresholds;
  RuleSource algorithm = RuleSource::apriori;
  bool operator==(const GenerationConfig&) const = default;
};

struct StoredRule {
  Rule rule;
  bool active = true;
  bool operator==(const StoredRule&) const = default;
};

struct LastGco {
  ItemSet inputs;
  std::optional<std::string> rule_identity;  // empty for a null result
  std::chrono::system_clock::time_point at;
  bool operator==(const LastGco&) const = default;
};

/// Everything the engine knows about one registered application.
struct AppContext {
  IdentificationKey key;
  std::string name;
  std::optional<Dataset> data{};        // schema plus mineable rows
  std::vector<TrainingRow> quarantine{};  // rows a schema change made unmineable
  std::vector<StoredRule> rules{};
  bool rules_generated = false;
  GenerationMode mode = GenerationMode::manual;
  std::optional<GenerationConfig> config{};
  std::optional<LastGco> last_gco{};  // transient, never persisted

  bool operator==(const AppContext&) const = default;
};

/// Amounts a feedback verdict moves the matched rule's confidence.
struct FeedbackPolicy {
  double positive_delta = 0.05;
  double negative_delta = 0.10;
  double floor = 0.0;
  double ceiling = 1.0;
};

struct GcoResult {
  std::optional<ItemSet> outputs;  // nullopt: no rule matched
  double confidence = 0.0;
  double support = 0.0;
  std::string rule_identity;
};

struct MigrationReport {
  std::vector<std::string> dropped_attributes;
  std::vector<std::string> added_attributes;
  std::size_t retained_rows = 0;
  std::size_t quarantined_rows = 0;  // newly quarantined by this change
};

/// Receives every durable state change while the affected context is
/// locked. The store implements this.
class EngineJournal {
 public:
  virtual ~EngineJournal() = default;
  virtual void context_created(const AppContext& ctx) = 0;
  virtual void rows_appended(const AppContext& ctx, std::span<const TrainingRow> rows) = 0;
  /// Name, schema, mode, config and rules changed.
  virtual void context_updated(const AppContext& ctx) = 0;
  /// Rows and quarantine no longer match what was appended.
  virtual void dataset_rewritten(const AppContext& ctx) = 0;
};

/// Multi-application rule learning engine.
///
/// Mutations on one application are serialized by a per-context mutex;
/// different applications proceed independently. All failures are reported
/// as `arl::Error` with the codes named on each method.
class Engine {
 public:
  explicit Engine(FeedbackPolicy policy = {}, EngineJournal* journal = nullptr);

  /// Installs a previously persisted context (used when reopening a store).
  void restore(AppContext ctx);

  /// empty-name, duplicate-name
  IdentificationKey register_app(const std::string& name);
  /// unknown-key, schema-already-set, invalid-schema
  void set_input_output(const IdentificationKey& key, std::vector<AttributeSchema> inputs,
                        std::vector<AttributeSchema> outputs);
  /// unknown-key, no-schema, validation-error. All-or-nothing.
  std::size_t load_training_data(const IdentificationKey& key, std::vector<TrainingRow> rows);
  /// unknown-key, no-schema, validation-error
  void set_training_data_row(const IdentificationKey& key, TrainingRow row);
  /// unknown-key, no-schema, empty-training-data
  std::vector<Rule> generate_rules(const IdentificationKey& key, const Thresholds& thresholds,
                                   RuleSource algorithm);
  /// unknown-key, no-generation-config
  void set_generation_mode(const IdentificationKey& key, GenerationMode mode);
  /// unknown-key, no-rules-generated, unknown-attribute, out-of-domain-value
  GcoResult get_current_output(const IdentificationKey& key, const ItemSet& inputs);
  /// unknown-key, no-pending-gco, rule-evicted. Returns the new confidence.
  double send_feedback_last_gco(const IdentificationKey& key, Verdict verdict);
  /// unknown-key
  void delete_training_data(const IdentificationKey& key);
  /// unknown-key, no-schema, invalid-attribute
  std::size_t delete_training_data_row(const IdentificationKey& key,
                                       const std::map<std::string, std::string>& input_match, DeleteMode mode);
  /// unknown-key, no-schema, invalid-schema
  MigrationReport change_inputs_outputs(const IdentificationKey& key, std::vector<AttributeSchema> inputs,
                                        std::vector<AttributeSchema> outputs);

  /// Copy of the current context; unknown-key.
  AppContext context(const IdentificationKey& key) const;
  std::optional<IdentificationKey> key_for(const std::string& name) const;
  std::vector<IdentificationKey> keys() const;
  const FeedbackPolicy& policy() const { return policy_; }

 private:
  struct Slot {
    explicit Slot(AppContext c) : ctx(std::move(c)) {}
    mutable std::mutex mutex;
    AppContext ctx;
  };

  std::shared_ptr<Slot> slot(const IdentificationKey& key) const;
  void regenerate(AppContext& ctx);

  FeedbackPolicy policy_;
  EngineJournal* journal_;
  mutable std::shared_mutex registry_mutex_;
  std::map<IdentificationKey, std::shared_ptr<Slot>> contexts_;
  std::map<std::string, IdentificationKey> names_;
};

}  // namespace arl
