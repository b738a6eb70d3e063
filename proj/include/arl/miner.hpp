#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "arl/model.hpp"

namespace arl {

/// Counters describing how much work a mining run did. Every counter only
/// grows while a run is in progress.
struct MiningStats {
  std::uint64_t candidates_generated = 0;
  std::uint64_t support_counting_passes = 0;
  std::uint64_t rules_emitted = 0;
};

struct FrequentItemSet {
  ItemSet items;
  std::uint64_t support_count = 0;
  double support = 0.0;

  bool operator==(const FrequentItemSet&) const = default;
};

/// Weighted transactions over a dense item numbering. Item ids follow the
/// canonical item order, so id order and `ItemSet` order agree.
class TransactionDb {
 public:
  using ItemId = std::uint32_t;
  using IdSet = std::vector<ItemId>;  // sorted ascending

  struct Transaction {
    ItemSet items;
    std::uint64_t weight = 1;
  };

  explicit TransactionDb(const Dataset& data);
  explicit TransactionDb(std::span<const Transaction> transactions);

  const std::vector<Item>& items() const { return items_; }
  std::size_t item_count() const { return items_.size(); }
  std::size_t size() const { return weights_.size(); }
  std::uint64_t total_weight() const { return total_weight_; }

  std::optional<ItemId> id_of(const Item& item) const;
  const Item& item(ItemId id) const { return items_[id]; }
  /// True when the two items bind the same attribute (and so never co-occur).
  bool same_attribute(ItemId a, ItemId b) const { return attribute_of_[a] == attribute_of_[b]; }

  /// Weighted count of transactions containing every id in `set`.
  std::uint64_t count(const IdSet& set) const;
  /// Items not present in the database give a count of zero.
  std::uint64_t count(const ItemSet& set) const;

  ItemSet to_itemset(const IdSet& set) const;
  FrequentItemSet make_frequent(const IdSet& set, std::uint64_t count) const;

  /// Per-transaction item ids, for callers that need to enumerate directly.
  IdSet transaction_ids(std::size_t index) const;
  std::uint64_t weight(std::size_t index) const { return weights_[index]; }

 private:
  void build(std::span<const Transaction> transactions);

  std::vector<Item> items_;
  std::vector<std::uint32_t> attribute_of_;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> bits_;  // size() rows of words_ words each
  std::vector<std::uint64_t> weights_;
  std::uint64_t total_weight_ = 0;
};

/// Weighted number of rows whose items include `target`. Throws
/// `unknown-attribute` if `target` names an attribute outside the schema.
std::uint64_t support_count(const ItemSet& target, const Dataset& data);

/// Level-wise frequent itemset mining with downward-closure pruning.
/// Throws `empty-dataset` on an empty (or zero-weight) database.
std::vector<FrequentItemSet> apriori(const TransactionDb& db, double min_support,
                                     MiningStats* stats = nullptr);
std::vector<FrequentItemSet> apriori(const Dataset& data, double min_support,
                                     MiningStats* stats = nullptr);

/// Maximal frequent itemsets by set-enumeration (head/tail) search with
/// superset-frequency lookahead and per-node reordering of tails by
/// ascending support. Throws `empty-dataset`.
std::vector<FrequentItemSet> max_miner(const TransactionDb& db, double min_support,
                                       MiningStats* stats = nullptr);
std::vector<FrequentItemSet> max_miner(const Dataset& data, double min_support,
                                       MiningStats* stats = nullptr);

/// Every nonempty subset of the given maximal sets, with exact supports.
std::vector<FrequentItemSet> expand_maximal(std::span<const FrequentItemSet> maximal,
                                            const TransactionDb& db, double min_support);
std::vector<FrequentItemSet> expand_maximal(std::span<const FrequentItemSet> maximal,
                                            const Dataset& data, double min_support);

/// Input-only antecedent => output-only consequent rules from a frequent
/// family carrying exact supports.
std::vector<Rule> derive_rules(std::span<const FrequentItemSet> frequent, const Schema& schema,
                               double min_confidence, RuleSource source = RuleSource::apriori,
                               MiningStats* stats = nullptr);

/// Exhaustive enumeration over all itemsets of the distinct items present.
/// Test oracle; throws `too-many-items` above `max_items` distinct items.
std::vector<FrequentItemSet> brute_force_frequent(const TransactionDb& db, double min_support,
                                                  std::size_t max_items = 20);
std::vector<FrequentItemSet> brute_force_frequent(const Dataset& data, double min_support,
                                                  std::size_t max_items = 20);

// ---------------------------------------------------------------------------
// ID3

/// Entropy in bits. Throws `all-zero-counts` if every count is zero.
double entropy(const std::map<std::string, std::uint64_t>& class_counts);

/// Gain of splitting `data` on input `attribute` for output `target`. Rows
/// with the attribute unbound form their own branch.
double information_gain(const Dataset& data, std::string_view attribute, std::string_view target);

struct DecisionNode {
  struct Leaf {
    std::string value;                            // majority class
    std::map<std::string, std::uint64_t> counts;  // weighted rows per class
    bool operator==(const Leaf&) const = default;
  };
  struct Split {
    std::string attribute;
    /// One child per domain value, in domain order.
    std::vector<std::pair<std::string, std::unique_ptr<DecisionNode>>> children;
    /// Rows with the attribute unbound.
    std::unique_ptr<DecisionNode> null_child;
  };

  std::string target;
  std::variant<Leaf, Split> node;

  bool is_leaf() const { return std::holds_alternative<Leaf>(node); }
  const Leaf& leaf() const { return std::get<Leaf>(node); }
  const Split& split() const { return std::get<Split>(node); }
  /// Walks `inputs` down to a leaf.
  const Leaf& classify(const std::map<std::string, std::string>& inputs) const;
  std::size_t depth() const;
  bool operator==(const DecisionNode& other) const;
};

/// Top-down induction on the maximum-gain input attribute; ties go to the
/// earlier-declared attribute, majority ties to the earlier domain value.
/// Throws `empty-dataset`, or `unknown-attribute` for a non-output target.
std::unique_ptr<DecisionNode> id3_build(const Dataset& data, std::string_view target);

/// One rule per root-to-leaf path, statistics recomputed against `data`,
/// filtered by `thresholds`. Null-branch conditions are left out of the
/// antecedent; paths with an empty antecedent are dropped.
std::vector<Rule> id3_rules(const DecisionNode& tree, const Dataset& data, const Thresholds& thresholds);

// ---------------------------------------------------------------------------

/// Full pipeline used by the engine: frequent family (or tree) then rules.
/// Rules come back sorted by identity.
std::vector<Rule> mine_rules(const Dataset& data, const Thresholds& thresholds, RuleSource algorithm,
                             MiningStats* stats = nullptr);

}  // namespace arl
