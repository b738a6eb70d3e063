#pragma once

#include <filesystem>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "arl/engine.hpp"

namespace arl {

/// Directory-per-application persistence.
///
///   <root>/<key>/meta.json         name, schema, mode, generation config
///   <root>/<key>/rows.jsonl        append-only training rows
///   <root>/<key>/rules.jsonl       rule snapshot, rewritten atomically
///   <root>/<key>/quarantine.jsonl  rows excluded from mining
///
/// Snapshots are replaced by write-temp-then-rename; appends are flushed to
/// stable storage before returning. A torn final record in a log is dropped
/// (with a warning) when the store is opened.
class Store final : public EngineJournal {
 public:
  struct Options {
    bool read_only = false;  // never create, repair or write anything
    bool sync = true;        // fsync after every write
  };

  /// Opens (creating if needed) the store and loads every application.
  /// Throws `unreadable-root`, `corrupt-meta` or `corrupt-log`.
  explicit Store(std::filesystem::path root, Options options);
  explicit Store(std::filesystem::path root) : Store(std::move(root), Options{}) {}

  const std::filesystem::path& root() const { return root_; }
  /// Contexts found when the store was opened, ordered by key.
  const std::vector<AppContext>& loaded() const { return loaded_; }
  std::vector<std::string> warnings() const;

  /// Rewrites meta and rules. Throws `io-error`.
  void persist_context(const AppContext& ctx);
  /// Throws `unknown-key` or `io-error`.
  void append_row(const IdentificationKey& key, const TrainingRow& row);
  void append_rows(const IdentificationKey& key, std::span<const TrainingRow> rows);
  /// Replaces the rows and quarantine logs with the context's current rows.
  void compact(const AppContext& ctx);

  void context_created(const AppContext& ctx) override;
  void rows_appended(const AppContext& ctx, std::span<const TrainingRow> rows) override;
  void context_updated(const AppContext& ctx) override { persist_context(ctx); }
  void dataset_rewritten(const AppContext& ctx) override { compact(ctx); }

 private:
  std::filesystem::path app_dir(const IdentificationKey& key) const { return root_ / key.str(); }
  AppContext load_app(const std::filesystem::path& dir);
  std::vector<TrainingRow> load_rows(const std::filesystem::path& file);
  void write_atomically(const std::filesystem::path& file, const std::string& contents);
  void warn(std::string message);

  std::filesystem::path root_;
  Options options_;
  std::vector<AppContext> loaded_;
  mutable std::mutex warnings_mutex_;
  std::vector<std::string> warnings_;
};

}  // namespace arl
