#include "featurecuts/common.hpp"

namespace featurecuts {

std::string to_string(TaskKind t) {
  switch (t) {
    case TaskKind::BinaryClassification: return "binary";
    case TaskKind::MulticlassClassification: return "multiclass";
    case TaskKind::Regression: return "regression";
  }
  return "unknown";
}

TaskKind parse_task_kind(std::string_view s) {
  if (s == "binary") return TaskKind::BinaryClassification;
  if (s == "multiclass") return TaskKind::MulticlassClassification;
  // "classif" resolves to binary or multiclass from the label count at load time.
  if (s == "classif" || s == "classification") return TaskKind::BinaryClassification;
  if (s == "regress" || s == "regression") return TaskKind::Regression;
  throw std::invalid_argument("unknown task kind: " + std::string(s));
}

}  // namespace featurecuts
