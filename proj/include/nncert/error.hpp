#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nncert {

enum class ErrorCode {
  bad_magic,
  count_mismatch,
  truncated_file,
  label_out_of_range,
  ragged_row,
  non_numeric_field,
  dimension_mismatch,
  trigger_too_large,
  image_too_small,
  dataset_too_small,
  empty_test_set,
  duplicate_predicted_label,
  knn_not_supported,
  groups_not_partition,
  budget_too_large,
  io_error,
  invalid_argument,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::bad_magic: return "BadMagic";
    case ErrorCode::count_mismatch: return "CountMismatch";
    case ErrorCode::truncated_file: return "TruncatedFile";
    case ErrorCode::label_out_of_range: return "LabelOutOfRange";
    case ErrorCode::ragged_row: return "RaggedRow";
    case ErrorCode::non_numeric_field: return "NonNumericField";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::trigger_too_large: return "TriggerTooLarge";
    case ErrorCode::image_too_small: return "ImageTooSmall";
    case ErrorCode::dataset_too_small: return "DatasetTooSmall";
    case ErrorCode::empty_test_set: return "EmptyTestSet";
    case ErrorCode::duplicate_predicted_label: return "DuplicatePredictedLabel";
    case ErrorCode::knn_not_supported: return "KnnNotSupported";
    case ErrorCode::groups_not_partition: return "GroupsNotPartition";
    case ErrorCode::budget_too_large: return "BudgetTooLarge";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::invalid_argument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above; the
/// message is a single line suitable for CLI diagnostics.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace nncert
