#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "arl/error.hpp"

namespace arl {

enum class AttributeKind { input, output };

std::string_view to_string(AttributeKind kind);
AttributeKind parse_attribute_kind(std::string_view text);

/// A named categorical attribute with a finite, ordered value domain.
struct AttributeSchema {
  std::string name;
  AttributeKind kind = AttributeKind::input;
  std::vector<std::string> domain;

  bool allows(std::string_view value) const;
  bool operator==(const AttributeSchema&) const = default;
};

/// Parses the `name:kind:{v1,v2,...}` literal.
AttributeSchema parse_attribute_literal(std::string_view literal);
std::string format_attribute_literal(const AttributeSchema& attribute);

/// The input and output attributes of one application, in declaration order.
///
/// Construction enforces: at least one input and one output, attribute names
/// unique across both lists, nonempty domains with unique values, and each
/// attribute's kind matching the list it was declared in. Violations throw
/// `invalid-schema`.
class Schema {
 public:
  Schema(std::vector<AttributeSchema> inputs, std::vector<AttributeSchema> outputs);

  const std::vector<AttributeSchema>& inputs() const { return inputs_; }
  const std::vector<AttributeSchema>& outputs() const { return outputs_; }

  const AttributeSchema* find(std::string_view name) const;
  const AttributeSchema* find_input(std::string_view name) const;
  const AttributeSchema* find_output(std::string_view name) const;
  bool is_input(std::string_view name) const { return find_input(name) != nullptr; }
  bool is_output(std::string_view name) const { return find_output(name) != nullptr; }

  bool operator==(const Schema&) const = default;

 private:
  std::vector<AttributeSchema> inputs_;
  std::vector<AttributeSchema> outputs_;
};

/// One `attribute=value` binding.
struct Item {
  std::string attribute;
  std::string value;

  auto operator<=>(const Item&) const = default;
};

/// A set of items binding each attribute at most once, kept sorted by
/// attribute name so that equality and ordering are structural.
class ItemSet {
 public:
  ItemSet() = default;
  /// Throws `conflicting-items` if an attribute is bound to two values.
  ItemSet(std::initializer_list<Item> items);
  explicit ItemSet(std::vector<Item> items);

  /// Adds `item`; returns false (and leaves the set unchanged) if the
  /// attribute is already bound to a different value.
  bool insert(Item item);

  bool contains(const Item& item) const;
  std::optional<std::string_view> value_of(std::string_view attribute) const;
  bool is_subset_of(const ItemSet& other) const;
  /// True when no attribute is bound to different values in the two sets.
  bool compatible_with(const ItemSet& other) const;
  /// Throws `conflicting-items` when the sets are incompatible.
  ItemSet union_with(const ItemSet& other) const;

  const std::vector<Item>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  auto operator<=>(const ItemSet&) const = default;

 private:
  std::vector<Item> items_;
};

/// Deterministic, injective text form of an item set, e.g. `{a=2,b=1}`.
/// Reserved characters inside names and values are backslash-escaped. The
/// empty set encodes as `{}`.
std::string canonical_encode(const ItemSet& set);

/// One complete observation. Unbound inputs are null; every output is bound.
struct TrainingRow {
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> outputs;
  std::uint64_t weight = 1;

  bool operator==(const TrainingRow&) const = default;
};

struct RowIssue {
  std::string code;  // unknown-attribute | out-of-domain-value | missing-output | invalid-weight
  std::string attribute;
};

std::optional<RowIssue> validate_row(const Schema& schema, const TrainingRow& row);

/// All bound items of a row, inputs and outputs together.
ItemSet row_to_itemset(const TrainingRow& row);

/// Rows in insertion order, all valid against `schema`.
struct Dataset {
  Schema schema;
  std::vector<TrainingRow> rows;

  std::uint64_t total_weight() const;
  bool empty() const { return rows.empty(); }
  bool operator==(const Dataset&) const = default;
};

enum class RuleSource { apriori, maxminer, id3 };

std::string_view to_string(RuleSource source);
RuleSource parse_rule_source(std::string_view text);

/// Antecedent (inputs only) implies consequent (outputs only).
struct Rule {
  ItemSet antecedent;
  ItemSet consequent;
  double support = 0.0;
  double confidence = 0.0;
  RuleSource source = RuleSource::apriori;

  /// `{antecedent}=>{consequent}`; identifies a rule independent of its
  /// statistics.
  std::string identity() const;
  bool operator==(const Rule&) const = default;
};

struct Thresholds {
  double min_support = 0.0;
  double min_confidence = 0.0;

  /// Throws `invalid-thresholds` unless both values are in (0, 1].
  static Thresholds make(double min_support, double min_confidence);
  bool operator==(const Thresholds&) const = default;
};

/// 32 characters from [A-Za-z0-9].
class IdentificationKey {
 public:
  static constexpr std::size_t length = 32;

  /// Throws `unknown-key` when `text` is not a well-formed key.
  explicit IdentificationKey(std::string text);
  /// Draws a fresh key from the operating system's entropy source.
  static IdentificationKey generate();
  static bool well_formed(std::string_view text);

  const std::string& str() const { return text_; }
  auto operator<=>(const IdentificationKey&) const = default;

 private:
  std::string text_;
};

}  // namespace arl
