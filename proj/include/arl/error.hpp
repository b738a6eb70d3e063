#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace arl {

// Stable error identifiers. These travel verbatim over the wire protocol, so
// never rename one.
namespace errc {
inline constexpr std::string_view unknown_attribute = "unknown-attribute";
inline constexpr std::string_view out_of_domain_value = "out-of-domain-value";
inline constexpr std::string_view missing_output = "missing-output";
inline constexpr std::string_view invalid_weight = "invalid-weight";
inline constexpr std::string_view conflicting_items = "conflicting-items";
inline constexpr std::string_view invalid_schema = "invalid-schema";
inline constexpr std::string_view invalid_thresholds = "invalid-thresholds";
inline constexpr std::string_view malformed_row = "malformed-row";

inline constexpr std::string_view empty_dataset = "empty-dataset";
inline constexpr std::string_view too_many_items = "too-many-items";
inline constexpr std::string_view all_zero_counts = "all-zero-counts";

inline constexpr std::string_view empty_name = "empty-name";
inline constexpr std::string_view duplicate_name = "duplicate-name";
inline constexpr std::string_view unknown_key = "unknown-key";
inline constexpr std::string_view schema_already_set = "schema-already-set";
inline constexpr std::string_view no_schema = "no-schema";
inline constexpr std::string_view validation_error = "validation-error";
inline constexpr std::string_view empty_training_data = "empty-training-data";
inline constexpr std::string_view no_generation_config = "no-generation-config";
inline constexpr std::string_view no_rules_generated = "no-rules-generated";
inline constexpr std::string_view no_pending_gco = "no-pending-gco";
inline constexpr std::string_view rule_evicted = "rule-evicted";
inline constexpr std::string_view invalid_attribute = "invalid-attribute";

inline constexpr std::string_view unreadable_root = "unreadable-root";
inline constexpr std::string_view corrupt_meta = "corrupt-meta";
inline constexpr std::string_view corrupt_log = "corrupt-log";
inline constexpr std::string_view io_error = "io-error";

inline constexpr std::string_view malformed_line = "malformed-line";
inline constexpr std::string_view timestamp_regression = "timestamp-regression";
inline constexpr std::string_view unbinnable_value = "unbinnable-value";
inline constexpr std::string_view invalid_binning = "invalid-binning";
inline constexpr std::string_view schema_mismatch = "schema-mismatch";
inline constexpr std::string_view invalid_spec = "invalid-spec";

inline constexpr std::string_view malformed_request = "malformed-request";
inline constexpr std::string_view unknown_request = "unknown-request";
inline constexpr std::string_view malformed_params = "malformed-params";
inline constexpr std::string_view bind_failure = "bind-failure";
inline constexpr std::string_view unknown_app = "unknown-app";
}  // namespace errc

/// Error carrying one of the `errc` codes plus a human-readable message.
class Error : public std::runtime_error {
 public:
  Error(std::string_view code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace arl
