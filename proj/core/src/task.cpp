#include "edm/task.hpp"

#include "edm/error.hpp"

namespace edm {

std::string_view task_name(Task task) noexcept {
  return task == Task::binary ? "binary" : "multi";
}

Task parse_task(std::string_view name) {
  if (name == "binary") return Task::binary;
  if (name == "multi") return Task::multi;
  throw_error(ErrorKind::data, "unknown task '" + std::string(name) + "' (expected binary|multi)");
}

std::size_t class_count(Task task) noexcept { return task == Task::binary ? 2 : 4; }

LabelMap LabelMap::for_task(Task task) {
  if (task == Task::binary) return {task, {"normal", "fault"}};
  return {task, {"layer_shift", "strings", "under_extrusion", "warping"}};
}

}  // namespace edm
