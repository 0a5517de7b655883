#ifndef PBES_HARNESS_HPP
#define PBES_HARNESS_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pbes/augmentation.hpp"
#include "pbes/dataset.hpp"
#include "pbes/model.hpp"
#include "pbes/sampling.hpp"

namespace pbes {

struct Task {
  std::vector<int> classes;
  LabeledDataset train;
  LabeledDataset test;
};

/// Class-incremental stream: disjoint class sets of equal size per task.
struct TaskStream {
  std::size_t dims = 0;
  std::vector<Task> tasks;

  /// Throws ValidationError on overlapping class sets, unequal task sizes,
  /// labels outside their task, or width mismatches.
  void validate() const;
};

/// Groups classes (ascending id) into consecutive tasks of `classes_per_task`.
TaskStream make_task_stream(const LabeledDataset& train, const LabeledDataset& test,
                            std::size_t classes_per_task);

enum class Provenance { original, augmented };

struct StoredExemplar {
  std::size_t source_index = 0;
  std::vector<double> point;
  Provenance provenance = Provenance::original;
};

/// A new class's ordered selection together with the rows it indexes.
struct ClassSelection {
  int class_id = 0;
  ExemplarSelection selection;
  std::vector<std::vector<double>> source_points;
};

/// Fixed-budget exemplar store. Each class list is a prefix of the class's
/// ordered selection.
class RehearsalMemory {
 public:
  explicit RehearsalMemory(std::size_t budget = 0) : budget_(budget) {}

  std::size_t budget() const { return budget_; }
  const std::vector<int>& arrival_order() const { return arrival_; }
  bool contains(int cls) const { return store_.count(cls) != 0; }
  /// Throws ValidationError for unknown classes.
  const std::vector<StoredExemplar>& exemplars(int cls) const;
  std::size_t total_stored() const;

  /// Mean of each class's stored points; classes with no exemplars are skipped.
  std::map<int, std::vector<double>> class_means() const;
  /// Stored points in arrival order.
  LabeledDataset as_dataset(std::size_t dims) const;

 private:
  friend RehearsalMemory rebalance_memory(const RehearsalMemory&, std::span<const ClassSelection>, std::size_t);
  std::size_t budget_;
  std::vector<int> arrival_;
  std::map<int, std::vector<StoredExemplar>> store_;
};

/// Per-class quotas for `classes` classes in arrival order: floor(M/k), with
/// the remainder handed out one each to the earliest classes.
std::vector<std::size_t> memory_quotas(std::size_t budget, std::size_t classes);

/// Inserts new classes (in the given order) and truncates every list to its
/// quota under budget M. Throws ValidationError on duplicate classes.
RehearsalMemory rebalance_memory(const RehearsalMemory& memory,
                                 std::span<const ClassSelection> new_selections,
                                 std::size_t budget);

struct EvalMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double gmean = 0.0;
};

/// Accuracy, macro-F1 and G-mean over the classes present in `labels`.
EvalMetrics compute_metrics(std::span<const int> labels, std::span<const int> predictions);

EvalMetrics evaluate(const SoftmaxModel& model, const std::map<int, std::vector<double>>& class_means,
                     const LabeledDataset& test, ClassifierMode mode);

struct MetricsRow {
  std::size_t task = 0;
  double accuracy = 0.0;
  double avg_accuracy = 0.0;
  double macro_f1 = 0.0;
  double gmean = 0.0;
  double wall_ms = 0.0;
  bool operator==(const MetricsRow&) const = default;
};

struct SyntheticParams {
  std::size_t classes = 10;
  std::size_t tasks = 5;
  std::size_t dims = 8;
  /// Size of the largest class.
  std::size_t max_class_size = 100;
  /// Largest over smallest class size; sizes fall geometrically with class id.
  double imbalance_ratio = 1.0;
  /// Explicit sizes per class; overrides max_class_size/imbalance_ratio.
  std::vector<std::size_t> class_sizes;
  double sigma = 1.0;
  double radius = 6.0;
  double outlier_fraction = 0.0;
  double outlier_multiplier = 20.0;
};

/// Per-class sizes implied by the parameters.
std::vector<std::size_t> synthetic_class_sizes(const SyntheticParams& params);

TaskStream generate_synthetic_stream(const SyntheticParams& params, std::uint64_t seed);

enum class BaselineMode { finetune, method, upperbound };

const char* to_string(BaselineMode mode);
BaselineMode parse_baseline_mode(const std::string& name);

struct AugmentationConfig {
  bool enabled = false;
  AugmentParams params;
  /// Feature rows are viewed as c×h×w images; all zero means 1×1×dims.
  std::array<std::size_t, 3> image_shape{0, 0, 0};
};

struct StreamSource {
  std::optional<SyntheticParams> synthetic;
  std::string train_csv;
  std::string test_csv;
  std::size_t classes_per_task = 0;
};

struct ExperimentConfig {
  SamplerSpec sampler;
  std::size_t memory_budget = 40;
  AugmentationConfig augmentation;
  LossConfig loss;
  ClassifierMode classifier = ClassifierMode::argmax_logits;
  StreamSource stream;
  std::uint64_t seed = 0;
  BaselineMode mode = BaselineMode::method;
  bool record_wall_time = false;

  void validate() const;
};

/// Loads the configured stream (synthetic or CSV files).
TaskStream load_stream(const ExperimentConfig& config);

/// Full class-incremental run; one row per task. Deterministic given the
/// config unless record_wall_time is set. `final_model`, if given, receives
/// the model after the last task.
std::vector<MetricsRow> run_experiment(const ExperimentConfig& config, const TaskStream& stream,
                                       SoftmaxModel* final_model = nullptr);
std::vector<MetricsRow> run_experiment(const ExperimentConfig& config);

struct SweepBlock {
  std::size_t budget = 0;
  std::vector<MetricsRow> rows;
};

/// Runs the experiment once per budget on up to `workers` threads. Output is
/// ordered by budget as given, independent of completion order.
std::vector<SweepBlock> run_sweep(const ExperimentConfig& config, const TaskStream& stream,
                                  std::span<const std::size_t> budgets, std::size_t workers);

/// Removes repeated budgets, keeping first occurrences; duplicates are returned
/// through `dropped`.
std::vector<std::size_t> dedupe_budgets(std::span<const std::size_t> budgets,
                                        std::vector<std::size_t>* dropped = nullptr);

struct DatasetStats {
  /// Population variance per class and channel.
  std::map<int, std::vector<double>> variance;
  /// Per-channel mean of the class variances.
  std::vector<double> average;
  std::map<int, std::size_t> counts;
};

DatasetStats dataset_stats(const ImageDataset& data);

/// Rows <-> images used when augmenting feature vectors.
ImageTensor row_to_image(std::span<const double> row, const std::array<std::size_t, 3>& shape);

}  // namespace pbes

#endif  // PBES_HARNESS_HPP
