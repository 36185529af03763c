#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "edm/dataset.hpp"
#include "edm/error.hpp"

namespace fs = std::filesystem;

namespace edm {

namespace {

// Collects image files directly under dir; returns how many were found.
std::size_t collect(const fs::path& dir, std::string_view name, int class_id,
                    std::vector<LabeledSample>& out, std::size_t& skipped) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return 0;
  std::size_t found = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && has_image_extension(entry.path())) {
      out.push_back({entry.path(), class_id, std::string(name)});
      ++found;
    } else {
      ++skipped;
    }
  }
  return found;
}

}  // namespace

ScanResult scan_dataset(const fs::path& root, Task task) {
  std::error_code ec;
  if (!fs::is_directory(root, ec))
    throw_error(ErrorKind::data, "dataset root " + root.string() + " is not a directory");

  ScanResult result;
  result.labels = LabelMap::for_task(task);
  std::vector<std::string> missing;
  if (task == Task::binary) {
    if (collect(root / kNormalDir, kNormalDir, 0, result.samples, result.skipped) == 0)
      missing.push_back(std::string(kNormalDir) + "/");
    std::size_t faults = 0;
    for (auto dir : kFaultDirs) faults += collect(root / dir, dir, 1, result.samples, result.skipped);
    if (faults == 0)
      missing.emplace_back("any of layer_shift/, strings/, under_extrusion/, warping/");
  } else {
    int id = 0;
    for (auto dir : kFaultDirs) {
      if (collect(root / dir, dir, id, result.samples, result.skipped) == 0)
        missing.push_back(std::string(dir) + "/");
      ++id;
    }
  }
  if (!missing.empty()) {
    std::string msg = root.string() + ": no images for " + std::string(task_name(task)) + " task in ";
    for (std::size_t i = 0; i < missing.size(); ++i) msg += (i ? ", " : "") + missing[i];
    throw_error(ErrorKind::data, msg);
  }
  std::sort(result.samples.begin(), result.samples.end(),
            [](const LabeledSample& a, const LabeledSample& b) { return a.path < b.path; });
  return result;
}

std::vector<std::size_t> class_counts(std::span<const LabeledSample> samples, std::size_t num_classes) {
  std::vector<std::size_t> counts(num_classes, 0);
  for (const auto& s : samples) {
    if (s.class_id < 0 || static_cast<std::size_t>(s.class_id) >= num_classes)
      throw_error(ErrorKind::data, "class id " + std::to_string(s.class_id) + " out of range for " +
                                       s.path.string());
    ++counts[static_cast<std::size_t>(s.class_id)];
  }
  return counts;
}

Split stratified_split(std::span<const LabeledSample> samples, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw_error(ErrorKind::data, "split ratio must lie strictly between 0 and 1");
  std::map<int, std::vector<LabeledSample>> by_class;
  for (const auto& s : samples) by_class[s.class_id].push_back(s);

  Split split;
  split.seed = seed;
  split.ratio = ratio;
  for (auto& [id, members] : by_class) {
    const std::size_t n = members.size();
    if (n < 2)
      throw_error(ErrorKind::data, "class " + std::to_string(id) + " has " + std::to_string(n) +
                                       " sample(s); stratified split needs at least 2");
    Rng rng(seed ^ static_cast<std::uint64_t>(id));
    shuffle(rng, members);
    auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.insert(split.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  }
  return split;
}

}  // namespace edm
