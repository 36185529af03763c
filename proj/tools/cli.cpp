#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "edm/dataset.hpp"
#include "edm/error.hpp"
#include "edm/model_io.hpp"
#include "edm/search.hpp"
#include "edm/train.hpp"

namespace edm::cli {

namespace {

struct TrainFlags {
  std::string data;
  std::string task;
  std::optional<std::size_t> epochs;
  std::string out;
  std::size_t depth = 5;
  double lr = 0.01;
  double momentum = 0.9;
  std::size_t batch = 32;
  std::uint64_t seed = 42;
  std::size_t input_size = 256;
  double ratio = 0.8;
};

struct SearchFlags {
  std::size_t max_depth = 10;
  double threshold = 0.90;
  std::string report;
  std::size_t workers = 1;
};

struct EvalFlags {
  std::string model;
  std::string data;
  std::string subset = "all";
  double ratio = 0.8;
  std::uint64_t seed = 42;
};

struct PredictFlags {
  std::string model;
  std::string image;
};

struct StatsFlags {
  std::string data;
  std::string task;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f, bool with_depth) {
  cmd->add_option("--data", f.data, "Dataset root (one directory per class)")->required();
  cmd->add_option("--task", f.task, "binary | multi")->required()->check(CLI::IsMember({"binary", "multi"}));
  cmd->add_option("--epochs", f.epochs, "Training epochs")->required();
  cmd->add_option("--out", f.out, "Output model file")->required();
  if (with_depth)
    cmd->add_option("--depth", f.depth, "Convolutional layers")->capture_default_str()->check(CLI::Range(1, 10));
  cmd->add_option("--lr", f.lr, "Learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--momentum", f.momentum, "SGD momentum in [0, 1)")->capture_default_str()->check(CLI::Range(0.0, 0.999999));
  cmd->add_option("--batch", f.batch, "Batch size")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "Random seed")->capture_default_str();
  cmd->add_option("--input-size", f.input_size, "Model input side in pixels")->capture_default_str()->check(CLI::Range(8, 4096));
  cmd->add_option("--ratio", f.ratio, "Train fraction of the stratified split")->capture_default_str()->check(CLI::Range(0.01, 0.99));
}

TrainConfig to_config(const TrainFlags& f) {
  TrainConfig c;
  c.learning_rate = f.lr;
  c.momentum = f.momentum;
  c.batch_size = f.batch;
  c.epochs = f.epochs.value_or(0);
  c.seed = f.seed;
  c.task = parse_task(f.task);
  c.input_size = f.input_size;
  c.depth = f.depth;
  return c;
}

Split load_split(const TrainFlags& f, Task task, std::ostream& err) {
  const auto scan = scan_dataset(f.data, task);
  if (scan.skipped) err << fmt::format("warning: skipped {} non-image entries\n", scan.skipped);
  return stratified_split(scan.samples, f.ratio, f.seed);
}

int run_train(const TrainFlags& f, std::ostream& out, std::ostream& err) {
  const TrainConfig config = to_config(f);
  const Split split = load_split(f, config.task, err);
  auto result = train(config, split, [&out](const EpochRecord& r) {
    out << fmt::format("epoch={} loss={:.6f} test_acc={:.6f}\n", r.epoch, r.train_loss, r.test_accuracy);
  });
  save_model(result.model, std::filesystem::path(f.out));
  out << fmt::format("final_test_acc={:.6f}\n", result.metrics.accuracy);
  return kExitOk;
}

int run_search(const TrainFlags& f, const SearchFlags& s, std::ostream& out, std::ostream& err) {
  TrainConfig config = to_config(f);
  config.threshold = s.threshold;
  const Split split = load_split(f, config.task, err);
  auto result = depth_search(config, split, s.max_depth, s.workers);
  for (const auto& r : result.report.records)
    out << fmt::format("depth={} params={} test_acc={:.6f} passed={}{}\n", r.depth, r.parameter_count,
                       r.test_accuracy, r.passed, r.diverged ? " diverged=true" : "");
  save_model(result.model, std::filesystem::path(f.out));
  std::ofstream report(s.report);
  report << report_csv(result.report);
  report.close();
  if (!report) throw_error(ErrorKind::io, "cannot write report " + s.report);
  out << fmt::format("selected_depth={} fallback={}\n", result.report.selected_depth,
                     result.report.fallback_used);
  return kExitOk;
}

int run_eval(const EvalFlags& f, std::ostream& out, std::ostream& err) {
  const Model model = load_model(std::filesystem::path(f.model));
  const auto scan = scan_dataset(f.data, model.config().task);
  if (scan.skipped) err << fmt::format("warning: skipped {} non-image entries\n", scan.skipped);
  std::vector<LabeledSample> samples = scan.samples;
  if (f.subset == "test") samples = stratified_split(scan.samples, f.ratio, f.seed).test;
  const Metrics m = evaluate(model, samples);
  out << fmt::format("accuracy={:.6f}\n", m.accuracy);
  const auto& names = model.config().class_names;
  for (std::size_t i = 0; i < m.confusion.size(); ++i)
    out << fmt::format("{}\t{}\n", names[i], fmt::join(m.confusion[i], "\t"));
  return kExitOk;
}

int run_predict(const PredictFlags& f, std::ostream& out) {
  const Model model = load_model(std::filesystem::path(f.model));
  const Image img = decode_image(f.image);
  const std::size_t s = model.config().input_size;
  const Tensor logits = model.predict(to_eval_tensor(img, s).reshaped({1, 3, s, s}));
  const Tensor probs = softmax(logits);
  std::vector<std::size_t> order(logits.dim(1));
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Logit order equals probability order; stable sort keeps lower ids first on ties.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return logits[a] > logits[b]; });
  const auto& names = model.config().class_names;
  for (auto c : order) out << fmt::format("{}\t{:.6f}\n", names[c], probs[c]);
  out << fmt::format("predicted={}\n", names[argmax_row(logits, 0)]);
  return kExitOk;
}

int run_dataset_stats(const StatsFlags& f, std::ostream& out, std::ostream& err) {
  const auto scan = scan_dataset(f.data, parse_task(f.task));
  if (scan.skipped) err << fmt::format("warning: skipped {} non-image entries\n", scan.skipped);
  const auto counts = class_counts(scan.samples, scan.labels.size());
  for (std::size_t i = 0; i < counts.size(); ++i) out << fmt::format("{}\t{}\n", scan.labels.classes[i], counts[i]);
  out << fmt::format("total\t{}\n", scan.samples.size());
  return kExitOk;
}

int exit_code_for(ErrorKind kind) {
  return kind == ErrorKind::numeric ? kExitNumeric : kExitData;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Early fault detection for FDM 3D prints: train, search, evaluate and run CNN classifiers", "edm"};
  app.require_subcommand(1);

  TrainFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "Train one model and write it to --out");
  add_train_flags(train_cmd, train_flags, true);

  TrainFlags search_train_flags;
  SearchFlags search_flags;
  auto* search_cmd = app.add_subcommand("search", "Depth search: train max-depth..1 and keep the smallest passing model");
  add_train_flags(search_cmd, search_train_flags, false);
  search_cmd->add_option("--max-depth", search_flags.max_depth, "Deepest candidate")->capture_default_str()->check(CLI::Range(1, 10));
  search_cmd->add_option("--threshold", search_flags.threshold, "Test accuracy a depth must reach")->capture_default_str()->check(CLI::NonNegativeNumber);
  search_cmd->add_option("--report", search_flags.report, "CSV report path")->required();
  search_cmd->add_option("--workers", search_flags.workers, "Depths trained concurrently")->capture_default_str()->check(CLI::Range(1, 64));

  EvalFlags eval_flags;
  auto* eval_cmd = app.add_subcommand("eval", "Accuracy and confusion matrix of a model on a dataset");
  eval_cmd->add_option("--model", eval_flags.model, "Model file")->required();
  eval_cmd->add_option("--data", eval_flags.data, "Dataset root")->required();
  eval_cmd->add_option("--subset", eval_flags.subset, "all | test")->capture_default_str()->check(CLI::IsMember({"all", "test"}));
  eval_cmd->add_option("--ratio", eval_flags.ratio, "Split ratio used for --subset test")->capture_default_str()->check(CLI::Range(0.01, 0.99));
  eval_cmd->add_option("--seed", eval_flags.seed, "Split seed used for --subset test")->capture_default_str();

  PredictFlags predict_flags;
  auto* predict_cmd = app.add_subcommand("predict", "Class probabilities for one image");
  predict_cmd->add_option("--model", predict_flags.model, "Model file")->required();
  predict_cmd->add_option("--image", predict_flags.image, "Image file (.ppm, .png, .jpg)")->required();

  StatsFlags stats_flags;
  auto* stats_cmd = app.add_subcommand("dataset-stats", "Per-class image counts for a task");
  stats_cmd->add_option("--data", stats_flags.data, "Dataset root")->required();
  stats_cmd->add_option("--task", stats_flags.task, "binary | multi")->required()->check(CLI::IsMember({"binary", "multi"}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    err << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitUsage;
  }

  try {
    if (*train_cmd) return run_train(train_flags, out, err);
    if (*search_cmd) return run_search(search_train_flags, search_flags, out, err);
    if (*eval_cmd) return run_eval(eval_flags, out, err);
    if (*predict_cmd) return run_predict(predict_flags, out);
    if (*stats_cmd) return run_dataset_stats(stats_flags, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace edm::cli
