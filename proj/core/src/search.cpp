#include "edm/search.hpp"

#include <atomic>
#include <mutex>
#include <optional>
#include <thread>

#include <fmt/format.h>

#include "edm/error.hpp"

namespace edm {

Selection select_depth(const std::vector<DepthRecord>& records) {
  std::optional<std::size_t> smallest_pass;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.diverged) continue;
    if (r.passed && (!smallest_pass || r.depth < records[*smallest_pass].depth)) smallest_pass = i;
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = records[*best];
    if (r.test_accuracy > b.test_accuracy || (r.test_accuracy == b.test_accuracy && r.depth < b.depth))
      best = i;
  }
  if (smallest_pass) return {records[*smallest_pass].depth, false};
  if (!best) throw_error(ErrorKind::numeric, "depth search: every depth diverged");
  return {records[*best].depth, true};
}

SearchResult depth_search(const TrainConfig& config, const Split& split, std::size_t max_depth,
                          std::size_t workers, const DepthCallback& on_depth) {
  config.validate();
  if (max_depth < 1 || max_depth > kMaxDepth)
    throw_error(ErrorKind::data, "max depth " + std::to_string(max_depth) + " outside 1..10");
  if (split.train.empty() || split.test.empty())
    throw_error(ErrorKind::data, "depth search: both train and test sets must be non-empty");

  const auto train_set = prepare_samples(split.train, config.input_size);
  const auto test_set = prepare_samples(split.test, config.input_size);

  // Slot i holds depth max_depth - i.
  std::vector<DepthRecord> records(max_depth);
  std::vector<std::optional<Model>> models(max_depth);
  std::mutex callback_mutex;

  auto run_slot = [&](std::size_t slot) {
    const std::size_t depth = max_depth - slot;
    TrainConfig cfg = config;
    cfg.depth = depth;
    cfg.seed = config.seed ^ depth;
    DepthRecord rec;
    rec.depth = depth;
    rec.parameter_count = ModelConfig::for_depth(cfg.task, cfg.input_size, depth).parameter_count();
    try {
      auto result = train(cfg, train_set, test_set);
      rec.test_accuracy = result.metrics.accuracy;
      rec.passed = rec.test_accuracy >= config.threshold;
      models[slot] = std::move(result.model);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::numeric) throw;
      rec.diverged = true;
    }
    records[slot] = rec;
    if (on_depth) {
      std::lock_guard lock(callback_mutex);
      on_depth(rec);
    }
  };

  if (workers <= 1) {
    for (std::size_t slot = 0; slot < max_depth; ++slot) run_slot(slot);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(max_depth);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, max_depth); ++w) {
      pool.emplace_back([&] {
        for (std::size_t slot = next++; slot < max_depth; slot = next++) {
          try {
            run_slot(slot);
          } catch (...) {
            errors[slot] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  SearchReport report;
  report.records = records;
  report.threshold = config.threshold;
  const Selection sel = select_depth(records);
  report.selected_depth = sel.depth;
  report.fallback_used = sel.fallback;
  return {std::move(*models[max_depth - sel.depth]), std::move(report)};
}

std::string report_csv(const SearchReport& report) {
  std::string out = "depth,params,test_accuracy,passed\n";
  for (const auto& r : report.records)
    out += fmt::format("{},{},{:.6f},{}\n", r.depth, r.parameter_count, r.test_accuracy, r.passed);
  out += fmt::format("selected={},fallback={}\n", report.selected_depth, report.fallback_used);
  return out;
}

}  // namespace edm
