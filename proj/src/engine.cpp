#include "arl/engine.hpp"

#include <algorithm>
#include <set>

namespace arl {

namespace {

const Dataset& require_schema(const AppContext& ctx) {
  if (!ctx.data) throw Error(errc::no_schema, "application '" + ctx.name + "' has no input/output schema");
  return *ctx.data;
}

Dataset& require_schema(AppContext& ctx) {
  return const_cast<Dataset&>(require_schema(std::as_const(ctx)));
}

void check_rows(const Schema& schema, std::span<const TrainingRow> rows) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (auto issue = validate_row(schema, rows[i])) {
      throw Error(errc::validation_error, "row " + std::to_string(i) + ": " + issue->code +
                                              (issue->attribute.empty() ? "" : " (" + issue->attribute + ")"));
    }
  }
}

std::vector<StoredRule> store_rules(std::vector<Rule> rules) {
  std::vector<StoredRule> out;
  out.reserve(rules.size());
  for (auto& r : rules) out.push_back({std::move(r), true});
  return out;
}

// Total order used to pick the rule that answers a query.
bool better_match(const Rule& a, const Rule& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  if (a.support != b.support) return a.support > b.support;
  if (a.antecedent.size() != b.antecedent.size()) return a.antecedent.size() > b.antecedent.size();
  return a.identity() < b.identity();
}

// Keeps only the bindings the new schema still declares, under their new kind.
TrainingRow migrate_row(const TrainingRow& row, const Schema& schema) {
  TrainingRow out;
  out.weight = row.weight;
  for (const auto& [k, v] : row.inputs)
    if (schema.is_input(k)) out.inputs.emplace(k, v);
  for (const auto& [k, v] : row.outputs)
    if (schema.is_output(k)) out.outputs.emplace(k, v);
  return out;
}

}  // namespace

std::string_view to_string(GenerationMode mode) {
  return mode == GenerationMode::automated ? "automated" : "manual";
}

GenerationMode parse_generation_mode(std::string_view text) {
  if (text == "automated") return GenerationMode::automated;
  if (text == "manual") return GenerationMode::manual;
  throw Error(errc::malformed_params, "unknown generation mode '" + std::string(text) + "'");
}

Engine::Engine(FeedbackPolicy policy, EngineJournal* journal) : policy_(policy), journal_(journal) {}

void Engine::restore(AppContext ctx) {
  std::unique_lock lock(registry_mutex_);
  names_.insert_or_assign(ctx.name, ctx.key);
  const auto key = ctx.key;
  contexts_.insert_or_assign(key, std::make_shared<Slot>(std::move(ctx)));
}

std::shared_ptr<Engine::Slot> Engine::slot(const IdentificationKey& key) const {
  std::shared_lock lock(registry_mutex_);
  auto it = contexts_.find(key);
  if (it == contexts_.end()) throw Error(errc::unknown_key, "no application registered under this key");
  return it->second;
}

IdentificationKey Engine::register_app(const std::string& name) {
  if (name.empty()) throw Error(errc::empty_name, "application name must be nonempty");
  std::unique_lock lock(registry_mutex_);
  if (names_.contains(name)) throw Error(errc::duplicate_name, "application '" + name + "' is already registered");
  auto key = IdentificationKey::generate();
  while (contexts_.contains(key)) key = IdentificationKey::generate();

  auto slot = std::make_shared<Slot>(AppContext{.key = key, .name = name});
  if (journal_) journal_->context_created(slot->ctx);
  contexts_.emplace(key, std::move(slot));
  names_.emplace(name, key);
  return key;
}

void Engine::set_input_output(const IdentificationKey& key, std::vector<AttributeSchema> inputs,
                              std::vector<AttributeSchema> outputs) {
  auto s = slot(key);
  std::lock_guard lock(s->mutex);
  if (s->ctx.data) {
    throw Error(errc::schema_already_set, "schema already set; use change_inputs_outputs to alter it");
  }
  Schema schema(std::move(inputs), std::move(outputs));
  s->ctx.data = Dataset{std::move(schema), {}};
  try {
    if (journal_) journal_->context_updated(s->ctx);
  } catch (...) {
    s->ctx.data.reset();
    throw;
  }
}

void Engine::regenerate(AppContext& ctx) {
  ctx.rules = store_rules(mine_rules(*ctx.data, ctx.config->thresholds, ctx.config->algorithm));
  ctx.rules_generated = true;
}

std::size_t Engine::load_training_data(const IdentificationKey& key, std::vector<TrainingRow> rows) {
  auto s = slot(key);
  std::lock_guard lock(s->mutex);
  auto& data = require_schema(s->ctx);
  check_rows(data.schema, rows);
  if (rows.empty()) return 0;
  if (journal_) journal_->rows_appended(s->ctx, rows);
  data.rows.insert(data.rows.end(), rows.begin(), rows.end());
  if (s->ctx.mode == GenerationMode::automated) {
    regenerate(s->ctx);
    if (journal_) journal_->context_updated(s->ctx);
  }
  return rows.size();
}

void Engine::set_training_data_row(const IdentificationKey& key, TrainingRow row) {
  std::vector<TrainingRow> rows;
  rows.push_back(std::move(row));
  load_training_data(key, std::move(rows));
}

std::vector<Rule> Engine::generate_rules(const IdentificationKey& key, const Thresholds& thresholds,
                                         RuleSource algorithm) {
  auto s = slot(key);
  std::lock_guard lock(s->mutex);
  auto& ctx = s->ctx;
  const auto& data = require_schema(ctx);
  if (data.total_weight() == 0) throw Error(errc::empty_training_data, "training data set is empty");

  auto rules = mine_rules(data, thresholds, algorithm);
  auto previous_rules = std::exchange(ctx.rules, store_rules(rules));
  auto previous_config = std::exchange(ctx.config, GenerationConfig{thresholds, algorithm});
  const bool previous_generated = std::exchange(ctx.rules_generated, true);
  try {
    if (journal_) journal_->context_updated(ctx);
  } catch (...) {
    ctx.rules = std::move(previous_rules);
    ctx.config = std::move(previous_config);
    ctx.rules_generated = previous_generated;
    throw;
  }
  return rules;
}

void Engine::set_generation_mode(const IdentificationKey& key, GenerationMode mode) {
  auto s = slot(key);
  std::lock_guard lock(s->mutex);
  if (mode == GenerationMode::automated && !s->ctx.config) {
    throw Error(errc::no_generation_config, "automated mode needs a prior generate_rules call");
  }
  const auto previous = std::exchange(s->ctx.mode, mode);
  try {
    if (journal_) journal_->context_updated(s->ctx);
  } catch (...) {
    s->ctx.mode = previous;
    throw;
  }
}

GcoResult Engine::get_current_output(const IdentificationKey& key, const ItemSet& inputs) {
  auto s = slot(key);
  std::lock_guard lock(s->mutex);
  auto& ctx = s->ctx;
  if (!ctx.rules_generated) throw Error(errc::no_rules_generated, "generate_rules has not been called");
  const auto& schema = require_schema(ctx).schema;
  for (const auto& item : inputs) {
    const auto* a = schema.find_input(item.attribute);
    if (!a) throw Error(errc::unknown_attribute, "'" + item.attribute + "' is not an input attribute");
    if (!a->allows(item.value)) {
      throw Error(errc::out_of_domain_value, "'" + item.value + "' is not a value of '" + item.attribute + "'");
    }
  }

  const Rule* best = nullptr;
  for (const auto& stored : ctx.rules) {
    if (!stored.active || !stored.rule.antecedent.is_subset_of(inputs)) continue;
    if (!best || better_match(stored.rule, *best)) best = &stored.rule;
  }

  GcoResult result;
  LastGco record{inputs, std::nullopt, std::chrono::system_clock::now()};
  if (best) {
    result.outputs = best->consequent;
    result.confidence = best->confidence;
    result.support = best->support;
    result.rule_identity = best->identity();
    record.rule_identity = result.rule_identity;
  }
  ctx.last_gco = std::move(record);
  return result;
}

double Engine::send_feedback_last_gco(const IdentificationKey& key, Verdict verdict) {
  auto s = slot(key);
  std::lock_guard lock(s->mutex);
  auto& ctx = s->ctx;
  if (!ctx.last_gco || !ctx.last_gco->rule_identity) {
    throw Error(errc::no_pending_gco, "no get_current_output result is awaiting feedback");
  }
  const auto identity = *ctx.last_gco->rule_identity;
  auto it = std::find_if(ctx.rules.begin(), ctx.rules.end(),
                         [&](const StoredRule& r) { return r.rule.identity() == identity; });
  if (it == ctx.rules.end()) {
    ctx.last_gco.reset();
    throw Error(errc::rule_evicted, "the rule behind the last result is no longer stored");
  }

  const StoredRule before = *it;
  const double delta = verdict == Verdict::positive ? policy_.positive_delta : -policy_.negative_delta;
  it->rule.confidence = std::clamp(it->rule.confidence + delta, policy_.floor, policy_.ceiling);
  it->active = !(ctx.config && it->rule.confidence < ctx.config->thresholds.min_confidence);
  try {
    if (journal_) journal_->context_updated(ctx);
  } catch (...) {
    *it = before;
    throw;
  }
  ctx.last_gco.reset();
  return it->rule.confidence;
}

void Engine::delete_training_data(const IdentificationKey& key) {
  auto s = slot(key);
  std::lock_guard lock(s->mutex);
  auto& ctx = s->ctx;
  if (!ctx.data || (ctx.data->rows.empty() && ctx.quarantine.empty())) return;
  auto next = ctx;
  next.data->rows.clear();
  next.quarantine.clear();
  if (journal_) journal_->dataset_rewritten(next);
  ctx = std::move(next);
}

std::size_t Engine::delete_training_data_row(const IdentificationKey& key,
                                             const std::map<std::string, std::string>& input_match,
                                             DeleteMode mode) {
  auto s = slot(key);
  std::lock_guard lock(s->mutex);
  auto& ctx = s->ctx;
  const auto& data = require_schema(ctx);
  for (const auto& [name, value] : input_match) {
    if (!data.schema.is_input(name)) {
      throw Error(errc::invalid_attribute, "'" + name + "' is not an input attribute");
    }
  }
  auto matches = [&](const TrainingRow& row) {
    for (const auto& [name, value] : input_match) {
      auto it = row.inputs.find(name);
      if (it == row.inputs.end() || it->second != value) return false;
    }
    return true;
  };

  std::vector<TrainingRow> kept;
  std::size_t deleted = 0;
  for (const auto& row : data.rows) {
    if (matches(row) && (mode == DeleteMode::all || deleted == 0)) {
      ++deleted;
    } else {
      kept.push_back(row);
    }
  }
  if (deleted == 0) return 0;
  auto next = ctx;
  next.data->rows = std::move(kept);
  if (journal_) journal_->dataset_rewritten(next);
  ctx = std::move(next);
  return deleted;
}

MigrationReport Engine::change_inputs_outputs(const IdentificationKey& key, std::vector<AttributeSchema> inputs,
                                              std::vector<AttributeSchema> outputs) {
  auto s = slot(key);
  std::lock_guard lock(s->mutex);
  auto& ctx = s->ctx;
  const auto& old = require_schema(ctx);
  Schema schema(std::move(inputs), std::move(outputs));

  MigrationReport report;
  auto names = [](const Schema& sc) {
    std::vector<std::string> out;
    for (const auto& a : sc.inputs()) out.push_back(a.name);
    for (const auto& a : sc.outputs()) out.push_back(a.name);
    return out;
  };
  for (const auto& n : names(old.schema))
    if (!schema.find(n)) report.dropped_attributes.push_back(n);
  for (const auto& n : names(schema))
    if (!old.schema.find(n)) report.added_attributes.push_back(n);

  AppContext next = ctx;
  Dataset migrated{schema, {}};
  for (const auto& row : old.rows) {
    auto moved = migrate_row(row, schema);
    if (validate_row(schema, moved)) {
      next.quarantine.push_back(std::move(moved));
      ++report.quarantined_rows;
    } else {
      migrated.rows.push_back(std::move(moved));
    }
  }
  for (auto& row : next.quarantine) row = migrate_row(row, schema);
  report.retained_rows = migrated.rows.size();

  next.data = std::move(migrated);
  next.rules.clear();
  next.rules_generated = false;
  next.last_gco.reset();
  if (journal_) {
    journal_->dataset_rewritten(next);
    journal_->context_updated(next);
  }
  ctx = std::move(next);
  return report;
}

AppContext Engine::context(const IdentificationKey& key) const {
  auto s = slot(key);
  std::lock_guard lock(s->mutex);
  return s->ctx;
}

std::optional<IdentificationKey> Engine::key_for(const std::string& name) const {
  std::shared_lock lock(registry_mutex_);
  auto it = names_.find(name);
  if (it == names_.end()) return std::nullopt;
  return it->second;
}

std::vector<IdentificationKey> Engine::keys() const {
  std::shared_lock lock(registry_mutex_);
  std::vector<IdentificationKey> out;
  for (const auto& [k, v] : contexts_) out.push_back(k);
  return out;
}

}  // namespace arl
