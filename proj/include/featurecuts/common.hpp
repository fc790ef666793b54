#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace featurecuts {

inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr int kReportSchema = 1;

/// Stand-in for an infinite F statistic so scores stay finite and totally ordered.
inline constexpr double kLargeSentinel = 1e30;

enum class TaskKind { BinaryClassification, MulticlassClassification, Regression };

inline bool is_classification(TaskKind t) { return t != TaskKind::Regression; }

std::string to_string(TaskKind t);
TaskKind parse_task_kind(std::string_view s);

/// Base for all runtime failures raised by the toolkit. Precondition
/// violations on plain arguments throw std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IngestError : public Error {
 public:
  using Error::Error;
};

class EvaluatorError : public Error {
 public:
  using Error::Error;
};

}  // namespace featurecuts
