#include "arl/commands.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <set>

#include "arl/codec.hpp"
#include "arl/miner.hpp"
#include "arl/store.hpp"
#include "arl/syslearn.hpp"

namespace arl {

namespace fs = std::filesystem;

int exit_status_for(std::string_view code) {
  static const std::set<std::string_view> usage = {errc::invalid_thresholds, errc::malformed_params};
  static const std::set<std::string_view> data = {
      errc::malformed_row,   errc::invalid_schema,   errc::unknown_attribute, errc::out_of_domain_value,
      errc::missing_output,  errc::invalid_weight,   errc::conflicting_items, errc::malformed_line,
      errc::timestamp_regression, errc::unbinnable_value, errc::invalid_binning, errc::invalid_spec,
      errc::io_error,        errc::unreadable_root,  errc::corrupt_meta,      errc::corrupt_log,
      errc::validation_error};
  if (usage.contains(code)) return kExitUsage;
  if (data.contains(code)) return kExitData;
  return kExitEngine;
}

namespace {

int report(const Error& e, std::ostream& err) {
  err << "error: " << e.code() << ": " << e.what() << '\n';
  return exit_status_for(e.code());
}

}  // namespace

Dataset read_data_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::io_error, "cannot read " + path.string());
  std::string line;
  std::size_t number = 0;
  std::optional<Dataset> data;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = path.string() + ":" + std::to_string(number) + ": ";
    Json j;
    try {
      j = Json::parse(line);
    } catch (const std::exception& e) {
      throw Error(errc::malformed_row, where + e.what());
    }
    if (!data) {
      if (!j.is_object() || !j.contains("schema")) throw Error(errc::invalid_schema, where + "expected a schema header");
      data = Dataset{schema_from_json(j["schema"]), {}};
      continue;
    }
    TrainingRow row;
    try {
      row = row_from_json(j);
    } catch (const Error& e) {
      throw Error(e.code(), where + e.what());
    }
    if (auto issue = validate_row(data->schema, row)) {
      throw Error(issue->code, where + issue->code + " (" + issue->attribute + ")");
    }
    data->rows.push_back(std::move(row));
  }
  if (!data) throw Error(errc::invalid_schema, path.string() + ": missing schema header");
  return std::move(*data);
}

int cmd_mine(const MineOptions& options, std::ostream& out, std::ostream& err) {
  try {
    const auto thresholds = Thresholds::make(options.min_support, options.min_confidence);
    const auto data = read_data_file(options.data);
    if (data.total_weight() == 0) throw Error(errc::empty_training_data, "training data set is empty");
    MiningStats stats;
    auto rules = mine_rules(data, thresholds, options.algorithm, &stats);
    std::sort(rules.begin(), rules.end(), [](const Rule& a, const Rule& b) {
      if (a.confidence != b.confidence) return a.confidence > b.confidence;
      if (a.support != b.support) return a.support > b.support;
      return a.identity() < b.identity();
    });
    for (const auto& r : rules) {
      out << canonical_encode(r.antecedent) << " => " << canonical_encode(r.consequent)
          << " support=" << format_number(r.support) << " confidence=" << format_number(r.confidence) << '\n';
    }
    if (options.stats) {
      out << "# candidates_generated=" << stats.candidates_generated << '\n'
          << "# support_counting_passes=" << stats.support_counting_passes << '\n'
          << "# rules_emitted=" << stats.rules_emitted << '\n';
    }
    return kExitOk;
  } catch (const Error& e) {
    if (e.code() == errc::empty_dataset) return report(Error(errc::empty_training_data, e.what()), err);
    return report(e, err);
  }
}

int cmd_replay(const ReplayOptions& options, std::ostream& out, std::ostream& err) {
  try {
    const auto thresholds = Thresholds::make(options.min_support, options.min_confidence);
    const auto binning = BinningConfig::from_file(options.bins);
    const auto trace = parse_trace_file(options.trace);
    Engine engine;
    const auto key = register_system_app(engine, binning);
    ReplayPolicy policy;
    policy.regenerate_every = options.regenerate_every;
    policy.send_feedback = options.feedback;
    const auto result = replay(trace, engine, key, binning, thresholds, options.algorithm, policy);
    out << result.to_json().dump(2) << '\n';
    return kExitOk;
  } catch (const Error& e) {
    return report(e, err);
  }
}

int cmd_gen_trace(const GenTraceOptions& options, std::ostream& out, std::ostream& err) {
  try {
    const auto spec = TraceSpec::from_file(options.spec);
    const auto generated = generate_trace(spec, options.seed, options.length);
    {
      std::ofstream file(options.out, std::ios::binary | std::ios::trunc);
      if (!file) throw Error(errc::io_error, "cannot write " + options.out.string());
      write_trace(generated.events, file);
    }
    const auto sidecar = options.sidecar.empty() ? fs::path(options.out.string() + ".sidecar.json") : options.sidecar;
    {
      std::ofstream file(sidecar, std::ios::binary | std::ios::trunc);
      if (!file) throw Error(errc::io_error, "cannot write " + sidecar.string());
      file << generated.sidecar.dump(2) << '\n';
    }
    out << "wrote " << generated.events.size() << " events to " << options.out.string() << '\n';
    return kExitOk;
  } catch (const Error& e) {
    return report(e, err);
  }
}

int cmd_inspect(const InspectOptions& options, std::ostream& out, std::ostream& err) {
  try {
    Store store(options.store, Store::Options{.read_only = true, .sync = false});
    for (const auto& w : store.warnings()) err << "warning: " << w << '\n';
    const auto& apps = store.loaded();
    auto it = std::find_if(apps.begin(), apps.end(), [&](const AppContext& c) { return c.name == options.app; });
    if (it == apps.end()) throw Error(errc::unknown_app, "no application named '" + options.app + "'");
    const auto& ctx = *it;

    out << "app: " << ctx.name << '\n' << "key: " << ctx.key.str() << '\n' << "mode: " << to_string(ctx.mode) << '\n';
    if (ctx.data) {
      out << "schema:\n";
      for (const auto& a : ctx.data->schema.inputs()) out << "  " << format_attribute_literal(a) << '\n';
      for (const auto& a : ctx.data->schema.outputs()) out << "  " << format_attribute_literal(a) << '\n';
      out << "rows: " << ctx.data->rows.size() << '\n';
    } else {
      out << "schema: none\nrows: 0\n";
    }
    out << "quarantined: " << ctx.quarantine.size() << '\n';
    const auto active = std::count_if(ctx.rules.begin(), ctx.rules.end(), [](const StoredRule& r) { return r.active; });
    out << "rules: " << ctx.rules.size() << " (" << active << " active)\n";
    if (ctx.config) {
      out << "config: " << to_string(ctx.config->algorithm)
          << " min_support=" << format_number(ctx.config->thresholds.min_support)
          << " min_confidence=" << format_number(ctx.config->thresholds.min_confidence) << '\n';
    } else {
      out << "config: none\n";
    }
    return kExitOk;
  } catch (const Error& e) {
    return report(e, err);
  }
}

}  // namespace arl
