#include "arl/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include "arl/codec.hpp"

namespace arl {

namespace fs = std::filesystem;

namespace {

constexpr const char* kMeta = "meta.json";
constexpr const char* kRows = "rows.jsonl";
constexpr const char* kRules = "rules.jsonl";
constexpr const char* kQuarantine = "quarantine.jsonl";

[[noreturn]] void io_failure(const fs::path& path, const char* what) {
  throw Error(errc::io_error, std::string(what) + " " + path.string() + ": " + std::strerror(errno));
}

class Fd {
 public:
  Fd(const fs::path& path, int flags) : fd_(::open(path.c_str(), flags | O_CLOEXEC, 0644)) {
    if (fd_ < 0) io_failure(path, "cannot open");
  }
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;

  void write_all(const fs::path& path, std::string_view data) {
    while (!data.empty()) {
      const auto n = ::write(fd_, data.data(), data.size());
      if (n < 0) {
        if (errno == EINTR) continue;
        io_failure(path, "cannot write");
      }
      data.remove_prefix(static_cast<std::size_t>(n));
    }
  }
  void sync(const fs::path& path) {
    if (::fsync(fd_) != 0) io_failure(path, "cannot sync");
  }

 private:
  int fd_;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string rows_text(std::span<const TrainingRow> rows) {
  std::string out;
  for (const auto& r : rows) {
    out += row_to_json(r).dump();
    out += '\n';
  }
  return out;
}

struct LogLines {
  std::vector<std::string> complete;
  std::size_t good_bytes = 0;  // length of the prefix holding complete, parseable records
  bool torn = false;
};

// Splits a JSON-lines log. A final record that lacks its newline or does not
// parse is torn; an unparseable record anywhere else is corruption.
LogLines split_log(const std::string& text, const fs::path& path) {
  LogLines out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      out.torn = true;
      break;
    }
    std::string line = text.substr(pos, nl - pos);
    const bool last = nl + 1 == text.size();
    if (!Json::accept(line)) {
      if (last) {
        out.torn = true;
        break;
      }
      throw Error(errc::corrupt_log, path.string() + ": unreadable record at byte " + std::to_string(pos));
    }
    out.complete.push_back(std::move(line));
    pos = nl + 1;
    out.good_bytes = pos;
  }
  return out;
}

Json meta_to_json(const AppContext& ctx) {
  Json j = Json::object();
  j["key"] = ctx.key.str();
  j["name"] = ctx.name;
  j["schema"] = ctx.data ? schema_to_json(ctx.data->schema) : Json();
  j["mode"] = std::string(to_string(ctx.mode));
  if (ctx.config) {
    Json c = Json::object();
    c["min_support"] = ctx.config->thresholds.min_support;
    c["min_confidence"] = ctx.config->thresholds.min_confidence;
    c["algorithm"] = std::string(to_string(ctx.config->algorithm));
    j["config"] = std::move(c);
  } else {
    j["config"] = Json();
  }
  j["rules_generated"] = ctx.rules_generated;
  return j;
}

}  // namespace

Store::Store(fs::path root, Options options) : root_(std::move(root)), options_(options) {
  std::error_code ec;
  if (!options_.read_only) fs::create_directories(root_, ec);
  if (!fs::is_directory(root_, ec)) {
    throw Error(errc::unreadable_root, "store root " + root_.string() + " is not a readable directory");
  }
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root_, ec)) {
    if (entry.is_directory() && IdentificationKey::well_formed(entry.path().filename().string())) {
      dirs.push_back(entry.path());
    }
  }
  if (ec) throw Error(errc::unreadable_root, "cannot list " + root_.string() + ": " + ec.message());
  std::sort(dirs.begin(), dirs.end());
  for (const auto& dir : dirs) loaded_.push_back(load_app(dir));
}

std::vector<std::string> Store::warnings() const {
  std::lock_guard lock(warnings_mutex_);
  return warnings_;
}

void Store::warn(std::string message) {
  std::lock_guard lock(warnings_mutex_);
  warnings_.push_back(std::move(message));
}

std::vector<TrainingRow> Store::load_rows(const fs::path& file) {
  if (!fs::exists(file)) return {};
  const auto text = read_file(file);
  const auto lines = split_log(text, file);
  if (lines.torn) {
    warn(file.string() + ": dropped torn trailing record (" + std::to_string(text.size() - lines.good_bytes) +
         " bytes)");
    if (!options_.read_only) fs::resize_file(file, lines.good_bytes);
  }
  std::vector<TrainingRow> rows;
  rows.reserve(lines.complete.size());
  for (const auto& line : lines.complete) {
    try {
      rows.push_back(row_from_json(Json::parse(line)));
    } catch (const std::exception& e) {
      throw Error(errc::corrupt_log, file.string() + ": " + e.what());
    }
  }
  return rows;
}

AppContext Store::load_app(const fs::path& dir) {
  const auto meta_path = dir / kMeta;
  Json meta;
  try {
    meta = Json::parse(read_file(meta_path));
  } catch (const std::exception& e) {
    throw Error(errc::corrupt_meta, meta_path.string() + ": " + e.what());
  }

  auto ctx = [&] {
    try {
      AppContext c{.key = IdentificationKey(meta.at("key").get<std::string>()),
                   .name = meta.at("name").get<std::string>()};
      if (c.key.str() != dir.filename().string()) throw std::runtime_error("key does not match directory");
      if (!meta.at("schema").is_null()) c.data = Dataset{schema_from_json(meta.at("schema")), {}};
      c.mode = parse_generation_mode(meta.at("mode").get<std::string>());
      if (const auto& cfg = meta.at("config"); !cfg.is_null()) {
        c.config = GenerationConfig{
            Thresholds::make(cfg.at("min_support").get<double>(), cfg.at("min_confidence").get<double>()),
            parse_rule_source(cfg.at("algorithm").get<std::string>())};
      }
      c.rules_generated = meta.at("rules_generated").get<bool>();
      return c;
    } catch (const std::exception& e) {
      throw Error(errc::corrupt_meta, meta_path.string() + ": " + e.what());
    }
  }();

  auto rows = load_rows(dir / kRows);
  ctx.quarantine = load_rows(dir / kQuarantine);
  if (ctx.data) {
    for (auto& row : rows) {
      if (validate_row(ctx.data->schema, row)) {
        warn(dir.string() + ": row does not fit the stored schema; moved to quarantine");
        ctx.quarantine.push_back(std::move(row));
      } else {
        ctx.data->rows.push_back(std::move(row));
      }
    }
  } else if (!rows.empty()) {
    warn(dir.string() + ": rows present without a schema; ignored");
  }

  const auto rules_path = dir / kRules;
  if (fs::exists(rules_path)) {
    const auto lines = split_log(read_file(rules_path), rules_path);
    if (lines.torn) warn(rules_path.string() + ": dropped torn trailing record");
    for (const auto& line : lines.complete) {
      try {
        StoredRule stored;
        stored.rule = rule_from_json(Json::parse(line), &stored.active);
        ctx.rules.push_back(std::move(stored));
      } catch (const std::exception& e) {
        throw Error(errc::corrupt_log, rules_path.string() + ": " + e.what());
      }
    }
  }
  return ctx;
}

void Store::write_atomically(const fs::path& file, const std::string& contents) {
  if (options_.read_only) throw Error(errc::io_error, "store opened read-only");
  const auto tmp = fs::path(file.string() + ".tmp");
  {
    Fd fd(tmp, O_WRONLY | O_CREAT | O_TRUNC);
    fd.write_all(tmp, contents);
    if (options_.sync) fd.sync(tmp);
  }
  if (::rename(tmp.c_str(), file.c_str()) != 0) io_failure(file, "cannot rename onto");
  if (options_.sync) {
    Fd dir(file.parent_path(), O_RDONLY | O_DIRECTORY);
    dir.sync(file.parent_path());
  }
}

void Store::persist_context(const AppContext& ctx) {
  const auto dir = app_dir(ctx.key);
  std::string rules;
  for (const auto& r : ctx.rules) {
    rules += rule_to_json(r.rule, r.active).dump();
    rules += '\n';
  }
  write_atomically(dir / kRules, rules);
  write_atomically(dir / kMeta, meta_to_json(ctx).dump() + "\n");
}

void Store::append_row(const IdentificationKey& key, const TrainingRow& row) {
  append_rows(key, std::span(&row, 1));
}

void Store::append_rows(const IdentificationKey& key, std::span<const TrainingRow> rows) {
  if (options_.read_only) throw Error(errc::io_error, "store opened read-only");
  const auto dir = app_dir(key);
  if (!fs::exists(dir / kMeta)) throw Error(errc::unknown_key, "no stored application under this key");
  const auto path = dir / kRows;
  Fd fd(path, O_WRONLY | O_CREAT | O_APPEND);
  fd.write_all(path, rows_text(rows));
  if (options_.sync) fd.sync(path);
}

void Store::compact(const AppContext& ctx) {
  const auto dir = app_dir(ctx.key);
  write_atomically(dir / kQuarantine, rows_text(ctx.quarantine));
  write_atomically(dir / kRows, ctx.data ? rows_text(ctx.data->rows) : std::string());
}

void Store::context_created(const AppContext& ctx) {
  if (options_.read_only) throw Error(errc::io_error, "store opened read-only");
  const auto dir = app_dir(ctx.key);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(errc::io_error, "cannot create " + dir.string() + ": " + ec.message());
  write_atomically(dir / kRows, "");
  persist_context(ctx);
}

void Store::rows_appended(const AppContext& ctx, std::span<const TrainingRow> rows) {
  append_rows(ctx.key, rows);
}

}  // namespace arl
