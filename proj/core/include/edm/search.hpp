#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "edm/train.hpp"

namespace edm {

struct DepthRecord {
  std::size_t depth = 0;
  std::size_t parameter_count = 0;
  double test_accuracy = 0.0;
  bool passed = false;
  bool diverged = false;
};

struct SearchReport {
  std::vector<DepthRecord> records;  // search order: max_depth down to 1
  std::size_t selected_depth = 0;
  bool fallback_used = false;
  double threshold = 0.0;
};

struct SearchResult {
  Model model;
  SearchReport report;
};

struct Selection {
  std::size_t depth = 0;
  bool fallback = false;
};

// Smallest passing depth; otherwise the most accurate non-diverged depth (ties to
// the smaller one) with fallback set. Throws a numeric error if every depth diverged.
Selection select_depth(const std::vector<DepthRecord>& records);

using DepthCallback = std::function<void(const DepthRecord&)>;

// Trains depth max_depth, max_depth-1, ..., 1 independently (seed ^ depth per run),
// records test accuracy against config.threshold and returns the selected model.
// With workers > 1 depths are trained concurrently; results do not depend on it.
SearchResult depth_search(const TrainConfig& config, const Split& split, std::size_t max_depth = 10,
                          std::size_t workers = 1, const DepthCallback& on_depth = {});

// header "depth,params,test_accuracy,passed", one row per record, trailer
// "selected=<d>,fallback=<bool>".
std::string report_csv(const SearchReport& report);

}  // namespace edm
