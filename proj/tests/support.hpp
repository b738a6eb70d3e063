#pragma once

// Test-side oracles and fixtures. The oracles here work directly on row maps
// and deliberately share no code with the miners they check.

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "arl/codec.hpp"
#include "arl/engine.hpp"
#include "arl/error.hpp"
#include "arl/miner.hpp"
#include "arl/model.hpp"

#ifndef ARL_FIXTURE_DIR
#define ARL_FIXTURE_DIR "tests/fixtures"
#endif

namespace arl::test {

/// Asserts that `stmt` throws `arl::Error` with the given code.
#define EXPECT_ARL_CODE(stmt, expected_code)                                        \
  do {                                                                              \
    try {                                                                           \
      stmt;                                                                         \
      ADD_FAILURE() << #stmt " did not throw; expected " << (expected_code);        \
    } catch (const ::arl::Error& arl_error_) {                                      \
      EXPECT_EQ(arl_error_.code(), std::string(expected_code)) << arl_error_.what(); \
    }                                                                               \
  } while (0)

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(ARL_FIXTURE_DIR) / name;
}

inline AttributeSchema input(std::string name, std::vector<std::string> domain) {
  return {std::move(name), AttributeKind::input, std::move(domain)};
}
inline AttributeSchema output(std::string name, std::vector<std::string> domain) {
  return {std::move(name), AttributeKind::output, std::move(domain)};
}

inline TrainingRow row(std::map<std::string, std::string> in, std::map<std::string, std::string> out,
                       std::uint64_t weight = 1) {
  return {std::move(in), std::move(out), weight};
}

/// headphones x hour -> app, five rows.
inline Dataset f1_dataset() {
  Schema schema({input("headphones", {"yes", "no"}), input("hour", {"morning", "evening"})},
                {output("app", {"music", "none"})});
  return Dataset{schema,
                 {row({{"headphones", "yes"}, {"hour", "morning"}}, {{"app", "music"}}),
                  row({{"headphones", "yes"}, {"hour", "morning"}}, {{"app", "music"}}),
                  row({{"headphones", "no"}, {"hour", "morning"}}, {{"app", "none"}}),
                  row({{"headphones", "yes"}, {"hour", "evening"}}, {{"app", "music"}}),
                  row({{"headphones", "no"}, {"hour", "evening"}}, {{"app", "none"}})}};
}

/// Random dataset with at most `max_items` distinct items overall. Inputs may
/// be unbound; weights are small positive integers.
inline Dataset random_dataset(std::mt19937_64& rng, std::size_t max_items = 12, std::size_t max_rows = 200) {
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  // Domain sizes chosen so the total item count stays within max_items.
  std::size_t budget = pick(3, max_items);
  std::vector<std::size_t> sizes;
  while (budget >= 1 && sizes.size() < 6) {
    std::size_t take = std::min<std::size_t>(budget, pick(1, 3));
    sizes.push_back(take);
    budget -= take;
    if (budget == 0) break;
  }
  if (sizes.size() < 2) sizes.push_back(1);
  std::vector<AttributeSchema> inputs, outputs;
  const std::size_t n_outputs = sizes.size() > 2 ? pick(1, 2) : 1;
  for (std::size_t a = 0; a < sizes.size(); ++a) {
    std::vector<std::string> domain;
    for (std::size_t v = 0; v < sizes[a]; ++v) domain.push_back("v" + std::to_string(v));
    if (a < n_outputs) outputs.push_back(output("o" + std::to_string(a), domain));
    else inputs.push_back(input("i" + std::to_string(a), domain));
  }
  Dataset data{Schema(inputs, outputs), {}};
  const std::size_t rows = pick(1, max_rows);
  for (std::size_t r = 0; r < rows; ++r) {
    TrainingRow tr;
    for (const auto& a : inputs) {
      if (pick(0, 5) == 0) continue;  // unbound
      tr.inputs[a.name] = a.domain[pick(0, a.domain.size() - 1)];
    }
    for (const auto& a : outputs) tr.outputs[a.name] = a.domain[pick(0, a.domain.size() - 1)];
    tr.weight = pick(1, 3);
    data.rows.push_back(std::move(tr));
  }
  return data;
}

/// Ten binary inputs and one output. `planted` rows carry a fixed length-8
/// pattern (a0..a6 = 1 plus out = yes); the rest are uniform noise.
inline Dataset planted_dataset(std::uint64_t seed, std::size_t rows = 400, std::size_t planted = 240) {
  std::vector<AttributeSchema> inputs;
  for (int a = 0; a < 10; ++a) inputs.push_back(input("a" + std::to_string(a), {"0", "1"}));
  Dataset data{Schema(inputs, {output("out", {"yes", "no"})}), {}};
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t r = 0; r < rows; ++r) {
    TrainingRow tr;
    for (int a = 0; a < 10; ++a) {
      const bool planted_attr = r < planted && a < 7;
      tr.inputs["a" + std::to_string(a)] = planted_attr || coin(rng) ? "1" : "0";
    }
    tr.outputs["out"] = r < planted || coin(rng) ? "yes" : "no";
    data.rows.push_back(std::move(tr));
  }
  return data;
}

using OracleItem = std::pair<std::string, std::string>;
using OracleSet = std::set<OracleItem>;

inline bool row_has(const TrainingRow& r, const OracleItem& item) {
  auto find = [&](const std::map<std::string, std::string>& m) {
    auto it = m.find(item.first);
    return it != m.end() && it->second == item.second;
  };
  return find(r.inputs) || find(r.outputs);
}

inline std::uint64_t oracle_count(const Dataset& data, const OracleSet& set) {
  std::uint64_t n = 0;
  for (const auto& r : data.rows) {
    bool all = true;
    for (const auto& item : set) all = all && row_has(r, item);
    if (all) n += r.weight;
  }
  return n;
}

inline std::uint64_t oracle_total(const Dataset& data) {
  std::uint64_t n = 0;
  for (const auto& r : data.rows) n += r.weight;
  return n;
}

/// Every frequent itemset with its weighted count, by subset enumeration.
inline std::map<OracleSet, std::uint64_t> oracle_frequent(const Dataset& data, double min_support) {
  std::vector<OracleItem> items;
  {
    std::set<OracleItem> seen;
    for (const auto& r : data.rows) {
      for (const auto& kv : r.inputs) seen.insert(kv);
      for (const auto& kv : r.outputs) seen.insert(kv);
    }
    items.assign(seen.begin(), seen.end());
  }
  const auto total = static_cast<double>(oracle_total(data));
  std::map<OracleSet, std::uint64_t> out;
  if (total == 0) return out;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << items.size()); ++mask) {
    OracleSet set;
    std::set<std::string> attrs;
    bool ok = true;
    for (std::size_t i = 0; i < items.size() && ok; ++i) {
      if (!(mask >> i & 1)) continue;
      ok = attrs.insert(items[i].first).second;
      set.insert(items[i]);
    }
    if (!ok) continue;
    const auto n = oracle_count(data, set);
    if (static_cast<double>(n) / total >= min_support) out.emplace(set, n);
  }
  return out;
}

inline OracleSet to_oracle(const ItemSet& s) {
  OracleSet out;
  for (const auto& i : s) out.emplace(i.attribute, i.value);
  return out;
}

inline std::map<OracleSet, std::uint64_t> to_oracle(const std::vector<FrequentItemSet>& family) {
  std::map<OracleSet, std::uint64_t> out;
  for (const auto& f : family) out.emplace(to_oracle(f.items), f.support_count);
  return out;
}

/// Members of `family` with no proper superset in `family`.
inline std::set<OracleSet> oracle_maximal(const std::map<OracleSet, std::uint64_t>& family) {
  std::set<OracleSet> out;
  for (const auto& [set, n] : family) {
    bool maximal = true;
    for (const auto& [other, m] : family) {
      if (other.size() > set.size() && std::includes(other.begin(), other.end(), set.begin(), set.end())) {
        maximal = false;
        break;
      }
    }
    if (maximal) out.insert(set);
  }
  return out;
}

struct OracleRule {
  OracleSet antecedent, consequent;
  double support, confidence;
  bool operator<(const OracleRule& o) const {
    return std::tie(antecedent, consequent) < std::tie(o.antecedent, o.consequent);
  }
  bool operator==(const OracleRule&) const = default;
};

/// Every input-only => output-only split of every frequent set that clears
/// `min_confidence`.
inline std::set<OracleRule> oracle_rules(const Dataset& data, double min_support, double min_confidence) {
  const auto family = oracle_frequent(data, min_support);
  const auto total = static_cast<double>(oracle_total(data));
  std::set<OracleRule> out;
  for (const auto& [set, n] : family) {
    OracleSet a, c;
    for (const auto& item : set) (data.schema.is_input(item.first) ? a : c).insert(item);
    if (a.empty() || c.empty()) continue;
    const double conf = static_cast<double>(n) / static_cast<double>(oracle_count(data, a));
    if (conf >= min_confidence) out.insert({a, c, static_cast<double>(n) / total, conf});
  }
  return out;
}

inline std::set<OracleRule> to_oracle(const std::vector<Rule>& rules) {
  std::set<OracleRule> out;
  for (const auto& r : rules) out.insert({to_oracle(r.antecedent), to_oracle(r.consequent), r.support, r.confidence});
  return out;
}

/// Shannon entropy in bits, written out longhand.
inline double oracle_entropy(const std::vector<double>& counts) {
  double total = 0;
  for (double c : counts) total += c;
  double h = 0;
  for (double c : counts) {
    if (c == 0) continue;
    const double p = c / total;
    h -= p * std::log2(p);
  }
  return h;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("arl-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Writes the `mine` input format: schema header, then one row per line.
inline void write_data_file(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  out << Json{{"schema", schema_to_json(data.schema)}}.dump() << "\n";
  for (const auto& row : data.rows) out << row_to_json(row).dump() << "\n";
}

// Drives an engine through a random request stream.
inline void random_workload(Engine& engine, std::mt19937_64& rng, int steps) {
  std::vector<IdentificationKey> keys;
  std::vector<Dataset> data;
  for (int a = 0; a < 3; ++a) {
    data.push_back(random_dataset(rng, 10, 20));
    keys.push_back(engine.register_app("app" + std::to_string(a)));
    if (a < 2) engine.set_input_output(keys[a], data[a].schema.inputs(), data[a].schema.outputs());
  }
  for (int step = 0; step < steps; ++step) {
    const auto a = rng() % 3;
    const auto& d = data[a];
    const auto& k = keys[a];
    try {
      switch (rng() % 9) {
        case 0: case 1: engine.set_training_data_row(k, d.rows[rng() % d.rows.size()]); break;
        case 2: engine.load_training_data(k, d.rows); break;
        case 3: engine.generate_rules(k, Thresholds::make(0.1 + 0.1 * (rng() % 5), 0.3), static_cast<RuleSource>(rng() % 3)); break;
        case 4: {
          ItemSet q;
          for (const auto& [n, v] : d.rows[rng() % d.rows.size()].inputs) q.insert({n, v});
          engine.get_current_output(k, q);
          break;
        }
        case 5: engine.send_feedback_last_gco(k, rng() % 2 ? Verdict::positive : Verdict::negative); break;
        case 6: engine.set_generation_mode(k, rng() % 2 ? GenerationMode::automated : GenerationMode::manual); break;
        case 7: engine.delete_training_data_row(k, {}, DeleteMode::first); break;
        case 8: {
          auto outputs = d.schema.outputs();
          if (rng() % 2) outputs.push_back(output("extra", {"p", "q"}));
          engine.change_inputs_outputs(k, d.schema.inputs(), outputs);
          break;
        }
      }
    } catch (const Error&) {
    }
  }
}

}  // namespace arl::test
