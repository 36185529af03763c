#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace edm {

// binary: normal vs fault (2 outputs). multi: the four fault types (4 outputs).
enum class Task { binary, multi };

std::string_view task_name(Task task) noexcept;
// Throws a data error for anything other than "binary" or "multi".
Task parse_task(std::string_view name);

std::size_t class_count(Task task) noexcept;

// Ordered class names; a class id is its position in this list.
struct LabelMap {
  Task task = Task::binary;
  std::vector<std::string> classes;

  static LabelMap for_task(Task task);
  std::size_t size() const noexcept { return classes.size(); }
};

// Directory names recognised under a dataset root.
inline constexpr std::string_view kNormalDir = "normal";
inline constexpr std::string_view kFaultDirs[] = {"layer_shift", "strings", "under_extrusion",
                                                  "warping"};

}  // namespace edm
