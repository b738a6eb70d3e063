#include "arl/miner.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>

namespace arl {

namespace {

bool meets(std::uint64_t count, std::uint64_t total, double threshold) {
  return count > 0 && static_cast<double>(count) / static_cast<double>(total) >= threshold;
}

void require_nonempty(const TransactionDb& db) {
  if (db.size() == 0 || db.total_weight() == 0) throw Error(errc::empty_dataset, "training data set is empty");
}

std::vector<TransactionDb::Transaction> transactions_of(const Dataset& data) {
  std::vector<TransactionDb::Transaction> out;
  out.reserve(data.rows.size());
  for (const auto& row : data.rows) out.push_back({row_to_itemset(row), row.weight});
  return out;
}

bool is_subset(const TransactionDb::IdSet& small, const TransactionDb::IdSet& big) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

TransactionDb::IdSet with_item(TransactionDb::IdSet set, TransactionDb::ItemId id) {
  set.insert(std::lower_bound(set.begin(), set.end(), id), id);
  return set;
}

void sort_family(std::vector<FrequentItemSet>& family) {
  std::sort(family.begin(), family.end(),
            [](const FrequentItemSet& a, const FrequentItemSet& b) { return a.items < b.items; });
}

}  // namespace

// ---------------------------------------------------------------------------
// TransactionDb

TransactionDb::TransactionDb(const Dataset& data) {
  auto txs = transactions_of(data);
  build(txs);
}

TransactionDb::TransactionDb(std::span<const Transaction> transactions) { build(transactions); }

void TransactionDb::build(std::span<const Transaction> transactions) {
  std::set<Item> universe;
  for (const auto& t : transactions)
    for (const auto& item : t.items) universe.insert(item);
  items_.assign(universe.begin(), universe.end());

  attribute_of_.reserve(items_.size());
  std::uint32_t attribute_index = 0;
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (i > 0 && items_[i].attribute != items_[i - 1].attribute) ++attribute_index;
    attribute_of_.push_back(attribute_index);
  }

  words_ = std::max<std::size_t>(1, (items_.size() + 63) / 64);
  bits_.assign(transactions.size() * words_, 0);
  weights_.reserve(transactions.size());
  for (std::size_t row = 0; row < transactions.size(); ++row) {
    for (const auto& item : transactions[row].items) {
      const auto id = *id_of(item);
      bits_[row * words_ + id / 64] |= std::uint64_t{1} << (id % 64);
    }
    weights_.push_back(transactions[row].weight);
    total_weight_ += transactions[row].weight;
  }
}

std::optional<TransactionDb::ItemId> TransactionDb::id_of(const Item& item) const {
  auto it = std::lower_bound(items_.begin(), items_.end(), item);
  if (it == items_.end() || *it != item) return std::nullopt;
  return static_cast<ItemId>(it - items_.begin());
}

std::uint64_t TransactionDb::count(const IdSet& set) const {
  std::vector<std::uint64_t> mask(words_, 0);
  for (auto id : set) mask[id / 64] |= std::uint64_t{1} << (id % 64);
  std::uint64_t total = 0;
  for (std::size_t row = 0; row < weights_.size(); ++row) {
    const auto* words = &bits_[row * words_];
    bool all = true;
    for (std::size_t w = 0; w < words_ && all; ++w) all = (words[w] & mask[w]) == mask[w];
    if (all) total += weights_[row];
  }
  return total;
}

std::uint64_t TransactionDb::count(const ItemSet& set) const {
  IdSet ids;
  ids.reserve(set.size());
  for (const auto& item : set) {
    auto id = id_of(item);
    if (!id) return 0;
    ids.push_back(*id);
  }
  std::sort(ids.begin(), ids.end());
  return count(ids);
}

ItemSet TransactionDb::to_itemset(const IdSet& set) const {
  std::vector<Item> items;
  items.reserve(set.size());
  for (auto id : set) items.push_back(items_[id]);
  return ItemSet(std::move(items));
}

FrequentItemSet TransactionDb::make_frequent(const IdSet& set, std::uint64_t count) const {
  return {to_itemset(set), count, static_cast<double>(count) / static_cast<double>(total_weight_)};
}

TransactionDb::IdSet TransactionDb::transaction_ids(std::size_t index) const {
  IdSet out;
  for (std::size_t w = 0; w < words_; ++w) {
    auto word = bits_[index * words_ + w];
    while (word) {
      const int bit = std::countr_zero(word);
      out.push_back(static_cast<ItemId>(w * 64 + bit));
      word &= word - 1;
    }
  }
  return out;
}

std::uint64_t support_count(const ItemSet& target, const Dataset& data) {
  for (const auto& item : target) {
    if (!data.schema.find(item.attribute)) {
      throw Error(errc::unknown_attribute, "attribute '" + item.attribute + "' is not in the schema");
    }
  }
  std::uint64_t total = 0;
  for (const auto& row : data.rows) {
    if (target.is_subset_of(row_to_itemset(row))) total += row.weight;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Apriori

std::vector<FrequentItemSet> apriori(const TransactionDb& db, double min_support, MiningStats* stats) {
  require_nonempty(db);
  MiningStats local;
  MiningStats& st = stats ? *stats : local;
  const auto total = db.total_weight();
  using IdSet = TransactionDb::IdSet;

  std::vector<FrequentItemSet> result;
  std::vector<IdSet> level;

  ++st.support_counting_passes;
  for (TransactionDb::ItemId id = 0; id < db.item_count(); ++id) {
    ++st.candidates_generated;
    const IdSet single{id};
    const auto c = db.count(single);
    if (meets(c, total, min_support)) {
      level.push_back(single);
      result.push_back(db.make_frequent(single, c));
    }
  }

  while (level.size() > 1) {
    // `level` is lexicographically sorted, so sets sharing a (k-1)-prefix
    // are contiguous.
    const std::set<IdSet> previous(level.begin(), level.end());
    std::vector<IdSet> candidates;
    for (std::size_t i = 0; i < level.size(); ++i) {
      for (std::size_t j = i + 1; j < level.size(); ++j) {
        if (!std::equal(level[i].begin(), level[i].end() - 1, level[j].begin())) break;
        const auto a = level[i].back();
        const auto b = level[j].back();
        if (db.same_attribute(a, b)) continue;
        IdSet candidate = level[i];
        candidate.push_back(b);
        bool closed = true;
        for (std::size_t drop = 0; drop + 2 < candidate.size() && closed; ++drop) {
          IdSet subset;
          subset.reserve(candidate.size() - 1);
          for (std::size_t k = 0; k < candidate.size(); ++k)
            if (k != drop) subset.push_back(candidate[k]);
          closed = previous.contains(subset);
        }
        if (closed) candidates.push_back(std::move(candidate));
      }
    }
    if (candidates.empty()) break;

    ++st.support_counting_passes;
    st.candidates_generated += candidates.size();
    std::vector<IdSet> next;
    for (auto& candidate : candidates) {
      const auto c = db.count(candidate);
      if (meets(c, total, min_support)) {
        result.push_back(db.make_frequent(candidate, c));
        next.push_back(std::move(candidate));
      }
    }
    level = std::move(next);
  }

  sort_family(result);
  return result;
}

std::vector<FrequentItemSet> apriori(const Dataset& data, double min_support, MiningStats* stats) {
  return apriori(TransactionDb(data), min_support, stats);
}

// ---------------------------------------------------------------------------
// Max-Miner

namespace {

using IdSet = TransactionDb::IdSet;
using ItemId = TransactionDb::ItemId;

struct CandidateGroup {
  IdSet head;                  // sorted
  std::vector<ItemId> tail;    // ascending support order
  std::uint64_t head_count = 0;
};

class MaxMinerSearch {
 public:
  MaxMinerSearch(const TransactionDb& db, double min_support, MiningStats& stats)
      : db_(db), min_support_(min_support), stats_(stats) {}

  std::vector<FrequentItemSet> run() {
    std::vector<CandidateGroup> groups = initial_groups();
    prune_candidates(groups);
    while (!groups.empty()) {
      groups = expand(groups);
      prune_candidates(groups);
    }
    std::vector<FrequentItemSet> out;
    out.reserve(found_.size());
    for (const auto& [set, c] : found_) out.push_back(db_.make_frequent(set, c));
    sort_family(out);
    return out;
  }

 private:
  bool frequent(std::uint64_t c) const { return meets(c, db_.total_weight(), min_support_); }

  std::uint64_t count(const IdSet& set) {
    ++stats_.candidates_generated;
    return db_.count(set);
  }

  // Tail items compatible with every head item, in the given order.
  std::vector<ItemId> compatible_tail(ItemId added, std::span<const ItemId> rest) const {
    std::vector<ItemId> out;
    for (auto id : rest)
      if (!db_.same_attribute(added, id)) out.push_back(id);
    return out;
  }

  bool tail_conflicts(const std::vector<ItemId>& tail) const {
    for (std::size_t i = 0; i < tail.size(); ++i)
      for (std::size_t j = i + 1; j < tail.size(); ++j)
        if (db_.same_attribute(tail[i], tail[j])) return true;
    return false;
  }

  // Adds a frequent set as a maximal candidate.
  void record(IdSet set, std::uint64_t c) { found_.emplace(std::move(set), c); }

  std::vector<CandidateGroup> initial_groups() {
    ++stats_.support_counting_passes;
    std::vector<std::pair<std::uint64_t, ItemId>> ordered;
    for (ItemId id = 0; id < db_.item_count(); ++id) {
      const auto c = count(IdSet{id});
      if (frequent(c)) ordered.emplace_back(c, id);
    }
    std::sort(ordered.begin(), ordered.end());

    std::vector<ItemId> order;
    for (const auto& [c, id] : ordered) order.push_back(id);

    std::vector<CandidateGroup> groups;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
      const auto id = ordered[i].second;
      auto tail = compatible_tail(id, std::span(order).subspan(i + 1));
      if (tail.empty()) {
        record(IdSet{id}, ordered[i].first);
      } else {
        groups.push_back({IdSet{id}, std::move(tail), ordered[i].first});
      }
    }
    collapse_found();
    return groups;
  }

  std::vector<CandidateGroup> expand(const std::vector<CandidateGroup>& groups) {
    ++stats_.support_counting_passes;

    struct Counted {
      std::optional<std::uint64_t> whole;  // head ∪ tail, unless the tail conflicts
      std::vector<std::uint64_t> extensions;
    };
    std::vector<Counted> counted(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const auto& group = groups[g];
      if (!tail_conflicts(group.tail)) {
        IdSet whole = group.head;
        whole.insert(whole.end(), group.tail.begin(), group.tail.end());
        std::sort(whole.begin(), whole.end());
        counted[g].whole = count(whole);
      }
      for (auto id : group.tail) counted[g].extensions.push_back(count(with_item(group.head, id)));
    }

    std::vector<CandidateGroup> next;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const auto& group = groups[g];
      if (counted[g].whole && frequent(*counted[g].whole)) {
        IdSet whole = group.head;
        whole.insert(whole.end(), group.tail.begin(), group.tail.end());
        std::sort(whole.begin(), whole.end());
        record(std::move(whole), *counted[g].whole);
        continue;
      }

      std::vector<std::pair<std::uint64_t, ItemId>> survivors;
      for (std::size_t k = 0; k < group.tail.size(); ++k) {
        if (frequent(counted[g].extensions[k])) survivors.emplace_back(counted[g].extensions[k], group.tail[k]);
      }
      if (survivors.empty()) {
        record(group.head, group.head_count);
        continue;
      }
      std::sort(survivors.begin(), survivors.end());
      std::vector<ItemId> tail;
      for (const auto& [c, id] : survivors) tail.push_back(id);

      for (std::size_t k = 0; k + 1 < survivors.size(); ++k) {
        const auto [c, id] = survivors[k];
        auto sub_tail = compatible_tail(id, std::span(tail).subspan(k + 1));
        auto sub_head = with_item(group.head, id);
        if (sub_tail.empty()) {
          record(std::move(sub_head), c);
        } else {
          next.push_back({std::move(sub_head), std::move(sub_tail), c});
        }
      }
      const auto [last_count, last] = survivors.back();
      record(with_item(group.head, last), last_count);
    }
    collapse_found();
    return next;
  }

  // Drops every recorded set that has a recorded proper superset.
  void collapse_found() {
    std::map<IdSet, std::uint64_t> kept;
    for (const auto& [set, c] : found_) {
      bool subsumed = false;
      for (const auto& [other, oc] : found_) {
        if (other.size() > set.size() && is_subset(set, other)) {
          subsumed = true;
          break;
        }
      }
      if (!subsumed) kept.emplace(set, c);
    }
    found_ = std::move(kept);
  }

  // Removes groups whose whole subtree lies under a recorded set.
  void prune_candidates(std::vector<CandidateGroup>& groups) const {
    std::erase_if(groups, [&](const CandidateGroup& group) {
      IdSet whole = group.head;
      whole.insert(whole.end(), group.tail.begin(), group.tail.end());
      std::sort(whole.begin(), whole.end());
      for (const auto& [set, c] : found_)
        if (is_subset(whole, set)) return true;
      return false;
    });
  }

  const TransactionDb& db_;
  double min_support_;
  MiningStats& stats_;
  std::map<IdSet, std::uint64_t> found_;
};

}  // namespace

std::vector<FrequentItemSet> max_miner(const TransactionDb& db, double min_support, MiningStats* stats) {
  require_nonempty(db);
  MiningStats local;
  return MaxMinerSearch(db, min_support, stats ? *stats : local).run();
}

std::vector<FrequentItemSet> max_miner(const Dataset& data, double min_support, MiningStats* stats) {
  return max_miner(TransactionDb(data), min_support, stats);
}

std::vector<FrequentItemSet> expand_maximal(std::span<const FrequentItemSet> maximal, const TransactionDb& db,
                                            double min_support) {
  std::set<IdSet> subsets;
  for (const auto& m : maximal) {
    IdSet ids;
    bool present = true;
    for (const auto& item : m.items) {
      auto id = db.id_of(item);
      if (!id) {
        present = false;
        break;
      }
      ids.push_back(*id);
    }
    if (!present) continue;
    if (ids.size() >= 32) throw Error(errc::too_many_items, "maximal itemset too long to expand");
    const std::uint32_t limit = std::uint32_t{1} << ids.size();
    for (std::uint32_t mask = 1; mask < limit; ++mask) {
      IdSet subset;
      for (std::size_t k = 0; k < ids.size(); ++k)
        if (mask & (std::uint32_t{1} << k)) subset.push_back(ids[k]);
      subsets.insert(std::move(subset));
    }
  }
  std::vector<FrequentItemSet> out;
  for (const auto& s : subsets) {
    const auto c = db.count(s);
    if (meets(c, db.total_weight(), min_support)) out.push_back(db.make_frequent(s, c));
  }
  sort_family(out);
  return out;
}

std::vector<FrequentItemSet> expand_maximal(std::span<const FrequentItemSet> maximal, const Dataset& data,
                                            double min_support) {
  return expand_maximal(maximal, TransactionDb(data), min_support);
}

std::vector<Rule> derive_rules(std::span<const FrequentItemSet> frequent, const Schema& schema,
                               double min_confidence, RuleSource source, MiningStats* stats) {
  std::map<ItemSet, std::uint64_t> counts;
  for (const auto& f : frequent) counts.emplace(f.items, f.support_count);

  std::vector<Rule> rules;
  for (const auto& z : frequent) {
    ItemSet antecedent, consequent;
    bool known = true;
    for (const auto& item : z.items) {
      if (schema.is_input(item.attribute)) {
        antecedent.insert(item);
      } else if (schema.is_output(item.attribute)) {
        consequent.insert(item);
      } else {
        known = false;
      }
    }
    if (!known || antecedent.empty() || consequent.empty()) continue;
    auto a = counts.find(antecedent);
    if (a == counts.end() || a->second == 0) continue;
    const double confidence = static_cast<double>(z.support_count) / static_cast<double>(a->second);
    if (confidence >= min_confidence) {
      rules.push_back({std::move(antecedent), std::move(consequent), z.support, confidence, source});
    }
  }
  std::sort(rules.begin(), rules.end(),
            [](const Rule& x, const Rule& y) { return x.identity() < y.identity(); });
  if (stats) stats->rules_emitted += rules.size();
  return rules;
}

std::vector<FrequentItemSet> brute_force_frequent(const TransactionDb& db, double min_support,
                                                  std::size_t max_items) {
  if (db.size() == 0 || db.total_weight() == 0) return {};
  const auto n = db.item_count();
  if (n > max_items || n > 30) {
    throw Error(errc::too_many_items, std::to_string(n) + " distinct items exceed the oracle bound");
  }
  std::map<std::uint32_t, std::uint64_t> rows;  // distinct transaction masks
  for (std::size_t t = 0; t < db.size(); ++t) {
    std::uint32_t mask = 0;
    for (auto id : db.transaction_ids(t)) mask |= std::uint32_t{1} << id;
    rows[mask] += db.weight(t);
  }
  std::vector<FrequentItemSet> out;
  const std::uint32_t limit = std::uint32_t{1} << n;
  for (std::uint32_t mask = 1; mask < limit; ++mask) {
    std::uint64_t c = 0;
    for (const auto& [row, w] : rows)
      if ((row & mask) == mask) c += w;
    if (!meets(c, db.total_weight(), min_support)) continue;
    IdSet ids;
    for (std::uint32_t k = 0; k < n; ++k)
      if (mask & (std::uint32_t{1} << k)) ids.push_back(k);
    out.push_back(db.make_frequent(ids, c));
  }
  sort_family(out);
  return out;
}

std::vector<FrequentItemSet> brute_force_frequent(const Dataset& data, double min_support,
                                                  std::size_t max_items) {
  return brute_force_frequent(TransactionDb(data), min_support, max_items);
}

// ---------------------------------------------------------------------------
// ID3

double entropy(const std::map<std::string, std::uint64_t>& class_counts) {
  std::uint64_t total = 0;
  for (const auto& [cls, c] : class_counts) total += c;
  if (total == 0) throw Error(errc::all_zero_counts, "entropy of an empty distribution");
  double h = 0.0;
  for (const auto& [cls, c] : class_counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

namespace {

using RowRefs = std::vector<const TrainingRow*>;

std::map<std::string, std::uint64_t> class_counts(const RowRefs& rows, std::string_view target) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto* r : rows) counts[r->outputs.at(std::string(target))] += r->weight;
  return counts;
}

std::uint64_t weight_of(const RowRefs& rows) {
  std::uint64_t w = 0;
  for (const auto* r : rows) w += r->weight;
  return w;
}

std::map<std::optional<std::string>, RowRefs> partition(const RowRefs& rows, const std::string& attribute) {
  std::map<std::optional<std::string>, RowRefs> parts;
  for (const auto* r : rows) {
    auto it = r->inputs.find(attribute);
    parts[it == r->inputs.end() ? std::nullopt : std::optional(it->second)].push_back(r);
  }
  return parts;
}

double gain_over(const RowRefs& rows, const std::string& attribute, std::string_view target) {
  const double total = static_cast<double>(weight_of(rows));
  double remainder = 0.0;
  for (const auto& [value, part] : partition(rows, attribute)) {
    remainder += static_cast<double>(weight_of(part)) / total * entropy(class_counts(part, target));
  }
  return std::max(0.0, entropy(class_counts(rows, target)) - remainder);
}

RowRefs all_rows(const Dataset& data) {
  RowRefs rows;
  rows.reserve(data.rows.size());
  for (const auto& r : data.rows) rows.push_back(&r);
  return rows;
}

std::string majority(const std::map<std::string, std::uint64_t>& counts, const AttributeSchema& target) {
  std::string best;
  std::uint64_t best_count = 0;
  for (const auto& value : target.domain) {
    auto it = counts.find(value);
    const auto c = it == counts.end() ? 0 : it->second;
    if (best.empty() || c > best_count) {
      best = value;
      best_count = c;
    }
  }
  return best;
}

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const AttributeSchema& target) : data_(data), target_(target) {}

  std::unique_ptr<DecisionNode> build(const RowRefs& rows, std::vector<std::size_t> available,
                                      const std::string& parent_majority) {
    auto node = std::make_unique<DecisionNode>();
    node->target = target_.name;
    if (rows.empty()) {
      node->node = DecisionNode::Leaf{parent_majority, {}};
      return node;
    }
    auto counts = class_counts(rows, target_.name);
    const auto top = majority(counts, target_);
    const bool pure = counts.size() <= 1;
    if (pure || available.empty()) {
      node->node = DecisionNode::Leaf{top, std::move(counts)};
      return node;
    }

    std::size_t best = 0;
    double best_gain = -1.0;
    for (std::size_t k = 0; k < available.size(); ++k) {
      const double g = gain_over(rows, data_.schema.inputs()[available[k]].name, target_.name);
      if (g > best_gain) {
        best_gain = g;
        best = k;
      }
    }
    const auto& attribute = data_.schema.inputs()[available[best]];
    available.erase(available.begin() + static_cast<std::ptrdiff_t>(best));

    auto parts = partition(rows, attribute.name);
    DecisionNode::Split split;
    split.attribute = attribute.name;
    for (const auto& value : attribute.domain) {
      split.children.emplace_back(value, build(parts[value], available, top));
    }
    split.null_child = build(parts[std::nullopt], available, top);
    node->node = std::move(split);
    return node;
  }

 private:
  const Dataset& data_;
  const AttributeSchema& target_;
};

void collect_paths(const DecisionNode& node, std::vector<Item>& path,
                   std::vector<std::pair<ItemSet, Item>>& out) {
  if (node.is_leaf()) {
    out.emplace_back(ItemSet(path), Item{node.target, node.leaf().value});
    return;
  }
  const auto& split = node.split();
  for (const auto& [value, child] : split.children) {
    path.push_back({split.attribute, value});
    collect_paths(*child, path, out);
    path.pop_back();
  }
  collect_paths(*split.null_child, path, out);
}

}  // namespace

double information_gain(const Dataset& data, std::string_view attribute, std::string_view target) {
  if (!data.schema.is_input(attribute)) {
    throw Error(errc::unknown_attribute, "'" + std::string(attribute) + "' is not an input attribute");
  }
  if (!data.schema.is_output(target)) {
    throw Error(errc::unknown_attribute, "'" + std::string(target) + "' is not an output attribute");
  }
  if (data.total_weight() == 0) throw Error(errc::empty_dataset, "training data set is empty");
  return gain_over(all_rows(data), std::string(attribute), target);
}

const DecisionNode::Leaf& DecisionNode::classify(const std::map<std::string, std::string>& inputs) const {
  const DecisionNode* at = this;
  while (!at->is_leaf()) {
    const auto& s = at->split();
    auto it = inputs.find(s.attribute);
    const DecisionNode* next = s.null_child.get();
    if (it != inputs.end()) {
      for (const auto& [value, child] : s.children)
        if (value == it->second) next = child.get();
    }
    at = next;
  }
  return at->leaf();
}

std::size_t DecisionNode::depth() const {
  if (is_leaf()) return 0;
  std::size_t d = split().null_child->depth();
  for (const auto& [value, child] : split().children) d = std::max(d, child->depth());
  return d + 1;
}

bool DecisionNode::operator==(const DecisionNode& other) const {
  if (target != other.target || is_leaf() != other.is_leaf()) return false;
  if (is_leaf()) return leaf() == other.leaf();
  const auto& a = split();
  const auto& b = other.split();
  if (a.attribute != b.attribute || a.children.size() != b.children.size()) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i) {
    if (a.children[i].first != b.children[i].first || !(*a.children[i].second == *b.children[i].second)) {
      return false;
    }
  }
  return *a.null_child == *b.null_child;
}

std::unique_ptr<DecisionNode> id3_build(const Dataset& data, std::string_view target) {
  const auto* target_schema = data.schema.find_output(target);
  if (!target_schema) {
    throw Error(errc::unknown_attribute, "'" + std::string(target) + "' is not an output attribute");
  }
  if (data.total_weight() == 0) throw Error(errc::empty_dataset, "training data set is empty");
  std::vector<std::size_t> available(data.schema.inputs().size());
  for (std::size_t i = 0; i < available.size(); ++i) available[i] = i;
  return TreeBuilder(data, *target_schema).build(all_rows(data), std::move(available), target_schema->domain.front());
}

std::vector<Rule> id3_rules(const DecisionNode& tree, const Dataset& data, const Thresholds& thresholds) {
  std::vector<Item> path;
  std::vector<std::pair<ItemSet, Item>> paths;
  collect_paths(tree, path, paths);

  const TransactionDb db(data);
  std::map<std::string, Rule> unique;
  for (auto& [antecedent, outcome] : paths) {
    if (antecedent.empty()) continue;
    const auto a = db.count(antecedent);
    if (a == 0) continue;
    ItemSet consequent{outcome};
    const auto z = db.count(antecedent.union_with(consequent));
    if (!meets(z, db.total_weight(), thresholds.min_support)) continue;
    const double confidence = static_cast<double>(z) / static_cast<double>(a);
    if (confidence < thresholds.min_confidence) continue;
    Rule rule{std::move(antecedent), std::move(consequent),
              static_cast<double>(z) / static_cast<double>(db.total_weight()), confidence, RuleSource::id3};
    unique.emplace(rule.identity(), std::move(rule));
  }
  std::vector<Rule> out;
  for (auto& [id, rule] : unique) out.push_back(std::move(rule));
  return out;
}

std::vector<Rule> mine_rules(const Dataset& data, const Thresholds& thresholds, RuleSource algorithm,
                             MiningStats* stats) {
  std::vector<Rule> rules;
  switch (algorithm) {
    case RuleSource::apriori: {
      const TransactionDb db(data);
      const auto frequent = apriori(db, thresholds.min_support, stats);
      rules = derive_rules(frequent, data.schema, thresholds.min_confidence, algorithm, stats);
      break;
    }
    case RuleSource::maxminer: {
      const TransactionDb db(data);
      const auto maximal = max_miner(db, thresholds.min_support, stats);
      const auto frequent = expand_maximal(maximal, db, thresholds.min_support);
      rules = derive_rules(frequent, data.schema, thresholds.min_confidence, algorithm, stats);
      break;
    }
    case RuleSource::id3: {
      if (data.total_weight() == 0) throw Error(errc::empty_dataset, "training data set is empty");
      std::map<std::string, Rule> merged;
      for (const auto& output : data.schema.outputs()) {
        const auto tree = id3_build(data, output.name);
        for (auto& rule : id3_rules(*tree, data, thresholds)) merged.emplace(rule.identity(), std::move(rule));
      }
      for (auto& [id, rule] : merged) rules.push_back(std::move(rule));
      if (stats) stats->rules_emitted += rules.size();
      break;
    }
  }
  return rules;
}

}  // namespace arl
