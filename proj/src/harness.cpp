#include "pbes/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <thread>

#include "pbes/errors.hpp"
#include "pbes/io.hpp"

namespace pbes {

// ---- dataset ---------------------------------------------------------------

void LabeledDataset::add(std::span<const double> point, int label) {
  if (point.size() != dims_) throw ValidationError("LabeledDataset: point width mismatch");
  values_.insert(values_.end(), point.begin(), point.end());
  labels_.push_back(label);
}

void LabeledDataset::append(const LabeledDataset& other) {
  for (std::size_t i = 0; i < other.size(); ++i) add(other.point(i), other.label(i));
}

std::map<int, std::size_t> LabeledDataset::class_counts() const {
  std::map<int, std::size_t> counts;
  for (int l : labels_) ++counts[l];
  return counts;
}

std::vector<std::size_t> LabeledDataset::indices_of(int cls) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == cls) idx.push_back(i);
  }
  return idx;
}

DataMatrix LabeledDataset::class_matrix(int cls) const {
  const auto idx = indices_of(cls);
  if (idx.empty()) throw ValidationError("LabeledDataset: class " + std::to_string(cls) + " has no points");
  std::vector<double> values;
  for (std::size_t i : idx) {
    const auto p = point(i);
    values.insert(values.end(), p.begin(), p.end());
  }
  return DataMatrix(idx.size(), dims_, std::move(values));
}

DataMatrix LabeledDataset::as_matrix() const { return DataMatrix(size(), dims_, values_); }

// ---- stream ----------------------------------------------------------------

void TaskStream::validate() const {
  if (tasks.empty()) throw ValidationError("stream: no tasks");
  if (dims == 0) throw ValidationError("stream: zero feature width");
  std::set<int> seen;
  const std::size_t per_task = tasks.front().classes.size();
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto& task = tasks[t];
    const std::string where = "stream: task " + std::to_string(t + 1) + ": ";
    if (task.classes.empty()) throw ValidationError(where + "no classes");
    if (task.classes.size() != per_task) throw ValidationError(where + "class count differs from the first task");
    const std::set<int> own(task.classes.begin(), task.classes.end());
    if (own.size() != task.classes.size()) throw ValidationError(where + "repeated class id");
    for (int c : task.classes) {
      if (!seen.insert(c).second) throw ValidationError(where + "class " + std::to_string(c) + " already appeared");
    }
    for (const auto* split : {&task.train, &task.test}) {
      if (split->dims() != dims) throw ValidationError(where + "feature width mismatch");
      for (int l : split->labels()) {
        if (!own.count(l)) throw ValidationError(where + "label " + std::to_string(l) + " is not a task class");
      }
    }
    for (int c : task.classes) {
      if (task.train.indices_of(c).empty()) {
        throw ValidationError(where + "class " + std::to_string(c) + " has no training points");
      }
    }
  }
}

TaskStream make_task_stream(const LabeledDataset& train, const LabeledDataset& test,
                            std::size_t classes_per_task) {
  if (classes_per_task == 0) throw ValidationError("stream: classes_per_task must be positive");
  if (train.empty()) throw ValidationError("stream: empty training set");
  if (test.dims() != train.dims()) throw ValidationError("stream: train/test feature widths differ");
  std::vector<int> classes;
  for (const auto& [c, n] : train.class_counts()) classes.push_back(c);
  if (classes.size() % classes_per_task != 0) {
    throw ValidationError("stream: " + std::to_string(classes.size()) + " classes cannot be split into tasks of " +
                          std::to_string(classes_per_task));
  }
  std::map<int, std::size_t> task_of;
  TaskStream stream;
  stream.dims = train.dims();
  for (std::size_t k = 0; k < classes.size(); ++k) {
    if (k % classes_per_task == 0) {
      stream.tasks.push_back({{}, LabeledDataset(train.dims(), SplitTag::train),
                              LabeledDataset(train.dims(), SplitTag::test)});
    }
    stream.tasks.back().classes.push_back(classes[k]);
    task_of[classes[k]] = stream.tasks.size() - 1;
  }
  for (std::size_t i = 0; i < train.size(); ++i) stream.tasks[task_of[train.label(i)]].train.add(train.point(i), train.label(i));
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto it = task_of.find(test.label(i));
    if (it == task_of.end()) {
      throw ValidationError("stream: test label " + std::to_string(test.label(i)) + " has no training data");
    }
    stream.tasks[it->second].test.add(test.point(i), test.label(i));
  }
  stream.validate();
  return stream;
}

// ---- memory ----------------------------------------------------------------

const std::vector<StoredExemplar>& RehearsalMemory::exemplars(int cls) const {
  const auto it = store_.find(cls);
  if (it == store_.end()) throw ValidationError("memory: unknown class " + std::to_string(cls));
  return it->second;
}

std::size_t RehearsalMemory::total_stored() const {
  std::size_t total = 0;
  for (const auto& [c, list] : store_) total += list.size();
  return total;
}

std::map<int, std::vector<double>> RehearsalMemory::class_means() const {
  std::map<int, std::vector<double>> means;
  for (const auto& [c, list] : store_) {
    if (list.empty()) continue;
    std::vector<double> mu(list.front().point.size(), 0.0);
    for (const auto& e : list) {
      for (std::size_t j = 0; j < mu.size(); ++j) mu[j] += e.point[j];
    }
    for (double& v : mu) v /= static_cast<double>(list.size());
    means.emplace(c, std::move(mu));
  }
  return means;
}

LabeledDataset RehearsalMemory::as_dataset(std::size_t dims) const {
  LabeledDataset out(dims);
  for (int c : arrival_) {
    for (const auto& e : store_.at(c)) out.add(e.point, c);
  }
  return out;
}

std::vector<std::size_t> memory_quotas(std::size_t budget, std::size_t classes) {
  std::vector<std::size_t> q(classes, 0);
  if (classes == 0) return q;
  for (std::size_t i = 0; i < classes; ++i) q[i] = budget / classes + (i < budget % classes ? 1 : 0);
  return q;
}

RehearsalMemory rebalance_memory(const RehearsalMemory& memory,
                                 std::span<const ClassSelection> new_selections,
                                 std::size_t budget) {
  RehearsalMemory out = memory;
  out.budget_ = budget;
  for (const auto& sel : new_selections) {
    if (out.contains(sel.class_id)) {
      throw ValidationError("memory: class " + std::to_string(sel.class_id) + " is already stored");
    }
    out.arrival_.push_back(sel.class_id);
    out.store_[sel.class_id];
  }
  const auto quotas = memory_quotas(budget, out.arrival_.size());
  std::map<int, std::size_t> quota_of;
  for (std::size_t i = 0; i < out.arrival_.size(); ++i) quota_of[out.arrival_[i]] = quotas[i];

  for (auto& [c, list] : out.store_) {
    if (list.size() > quota_of[c]) list.resize(quota_of[c]);
  }
  for (const auto& sel : new_selections) {
    auto& list = out.store_[sel.class_id];
    const auto& order = sel.selection.ordered_indices;
    const std::size_t keep = std::min(quota_of[sel.class_id], order.size());
    for (std::size_t k = 0; k < keep; ++k) {
      const std::size_t idx = order[k];
      if (idx >= sel.source_points.size()) throw ValidationError("memory: selection index outside its class data");
      list.push_back({idx, sel.source_points[idx], Provenance::original});
    }
  }
  return out;
}

// ---- metrics ---------------------------------------------------------------

EvalMetrics compute_metrics(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.empty()) throw ValidationError("evaluate: empty test set");
  if (labels.size() != predictions.size()) throw ValidationError("evaluate: label/prediction count mismatch");
  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0;
  };
  std::map<int, Counts> per_class;
  for (int l : labels) per_class[l];
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == predictions[i]) {
      ++correct;
      ++per_class[labels[i]].tp;
    } else {
      ++per_class[labels[i]].fn;
      const auto it = per_class.find(predictions[i]);
      if (it != per_class.end()) ++it->second.fp;
    }
  }
  EvalMetrics m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  double f1_sum = 0.0;
  double log_recall = 0.0;
  bool zero_recall = false;
  for (const auto& [c, k] : per_class) {
    const std::size_t denom = 2 * k.tp + k.fp + k.fn;
    f1_sum += k.tp == 0 ? 0.0 : 2.0 * static_cast<double>(k.tp) / static_cast<double>(denom);
    if (k.tp == 0) {
      zero_recall = true;
    } else {
      log_recall += std::log(static_cast<double>(k.tp) / static_cast<double>(k.tp + k.fn));
    }
  }
  const double k = static_cast<double>(per_class.size());
  m.macro_f1 = f1_sum / k;
  m.gmean = zero_recall ? 0.0 : std::exp(log_recall / k);
  return m;
}

EvalMetrics evaluate(const SoftmaxModel& model, const std::map<int, std::vector<double>>& class_means,
                     const LabeledDataset& test, ClassifierMode mode) {
  if (test.empty()) throw ValidationError("evaluate: empty test set");
  const std::set<int> known(model.class_ids.begin(), model.class_ids.end());
  std::vector<int> predictions;
  predictions.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (!known.count(test.label(i))) {
      throw ValidationError("evaluate: test label " + std::to_string(test.label(i)) + " is not a seen class");
    }
    predictions.push_back(classify(model, test.point(i), mode, class_means));
  }
  return compute_metrics(test.labels(), predictions);
}

// ---- synthetic data --------------------------------------------------------

std::vector<std::size_t> synthetic_class_sizes(const SyntheticParams& params) {
  if (!params.class_sizes.empty()) {
    if (params.class_sizes.size() != params.classes) throw ValidationError("synthetic: class_sizes length must equal classes");
    return params.class_sizes;
  }
  if (!(params.imbalance_ratio >= 1.0)) throw ValidationError("synthetic: imbalance_ratio must be >= 1");
  std::vector<std::size_t> sizes(params.classes);
  for (std::size_t k = 0; k < params.classes; ++k) {
    const double frac = params.classes > 1 ? static_cast<double>(k) / static_cast<double>(params.classes - 1) : 0.0;
    const double s = static_cast<double>(params.max_class_size) / std::pow(params.imbalance_ratio, frac);
    sizes[k] = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(s)));
  }
  return sizes;
}

namespace {

std::vector<double> random_unit(std::size_t d, Rng& rng) {
  return random_unit_directions(d, 1, rng).directions.front();
}

}  // namespace

TaskStream generate_synthetic_stream(const SyntheticParams& params, std::uint64_t seed) {
  if (params.classes == 0 || params.tasks == 0 || params.classes % params.tasks != 0) {
    throw ValidationError("synthetic: " + std::to_string(params.classes) + " classes cannot be split into " +
                          std::to_string(params.tasks) + " equal tasks");
  }
  if (params.dims < 2) throw ValidationError("synthetic: dims must be at least 2");
  if (!(params.outlier_fraction >= 0.0 && params.outlier_fraction < 1.0)) {
    throw ValidationError("synthetic: outlier_fraction must lie in [0, 1)");
  }
  if (!(params.sigma >= 0.0) || !(params.radius >= 0.0) || !(params.outlier_multiplier >= 0.0)) {
    throw ValidationError("synthetic: sigma, radius and outlier_multiplier must be non-negative");
  }
  const auto sizes = synthetic_class_sizes(params);
  for (std::size_t s : sizes) {
    if (s == 0) throw ValidationError("synthetic: class sizes must be positive");
  }

  const std::size_t d = params.dims;
  Rng layout(derive_seed(seed, 0));
  // Orthonormal pair spanning the plane of class means.
  auto u = random_unit(d, layout);
  std::vector<double> v;
  for (;;) {
    v = random_unit(d, layout);
    const double proj = dot(u, v);
    for (std::size_t j = 0; j < d; ++j) v[j] -= proj * u[j];
    const double n = norm2(v);
    if (n > 1e-6) {
      for (double& x : v) x /= n;
      break;
    }
  }

  const std::size_t per_task = params.classes / params.tasks;
  TaskStream stream;
  stream.dims = d;
  const double pi = std::acos(-1.0);
  for (std::size_t c = 0; c < params.classes; ++c) {
    if (c % per_task == 0) {
      stream.tasks.push_back({{}, LabeledDataset(d, SplitTag::train), LabeledDataset(d, SplitTag::test)});
    }
    const int cls = static_cast<int>(c);
    auto& task = stream.tasks.back();
    task.classes.push_back(cls);

    const double angle = 2.0 * pi * static_cast<double>(c) / static_cast<double>(params.classes);
    std::vector<double> mean(d);
    for (std::size_t j = 0; j < d; ++j) mean[j] = params.radius * (std::cos(angle) * u[j] + std::sin(angle) * v[j]);

    Rng rng(derive_seed(seed, 1 + c));
    const std::size_t n = sizes[c];
    std::vector<std::vector<double>> points(n, mean);
    for (auto& p : points) {
      for (std::size_t j = 0; j < d; ++j) p[j] += params.sigma * rng.normal();
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
    const auto outliers = static_cast<std::size_t>(std::floor(params.outlier_fraction * static_cast<double>(n)));
    for (std::size_t k = 0; k < outliers; ++k) {
      const auto dir = random_unit(d, rng);
      for (std::size_t j = 0; j < d; ++j) points[perm[k]][j] += params.outlier_multiplier * params.sigma * dir[j];
    }

    // 80/20 split on a fresh shuffle; train rows keep generation order.
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
    const std::size_t n_test = n / 5;
    std::vector<char> is_test(n, 0);
    for (std::size_t k = 0; k < n_test; ++k) is_test[perm[k]] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      (is_test[i] ? task.test : task.train).add(points[i], cls);
    }
  }
  stream.validate();
  return stream;
}

// ---- config ----------------------------------------------------------------

const char* to_string(BaselineMode mode) {
  switch (mode) {
    case BaselineMode::finetune: return "finetune";
    case BaselineMode::method: return "method";
    case BaselineMode::upperbound: return "upperbound";
  }
  return "unknown";
}

BaselineMode parse_baseline_mode(const std::string& name) {
  if (name == "finetune") return BaselineMode::finetune;
  if (name == "method") return BaselineMode::method;
  if (name == "upperbound") return BaselineMode::upperbound;
  throw ValidationError("unknown mode '" + name + "'");
}

void ExperimentConfig::validate() const {
  loss.validate();
  if (mode == BaselineMode::finetune && memory_budget != 0) {
    throw ValidationError("config: finetune mode stores no exemplars; memory_budget must be 0");
  }
  if (mode == BaselineMode::finetune && classifier == ClassifierMode::nearest_class_mean) {
    throw ValidationError("config: nearest-class-mean needs exemplars, unavailable in finetune mode");
  }
  if (!stream.synthetic && (stream.train_csv.empty() || stream.test_csv.empty() || stream.classes_per_task == 0)) {
    throw ValidationError("config: stream needs synthetic parameters or train_csv, test_csv and classes_per_task");
  }
  const auto& s = augmentation.image_shape;
  const bool any = s[0] || s[1] || s[2];
  if (any && !(s[0] && s[1] && s[2])) throw ValidationError("config: image_shape entries must all be positive");
  if (!(augmentation.params.search.tau >= 0.0 && augmentation.params.search.tau <= 1.0)) {
    throw ValidationError("config: augmentation tau must lie in [0, 1]");
  }
}

TaskStream load_stream(const ExperimentConfig& config) {
  if (config.stream.synthetic) return generate_synthetic_stream(*config.stream.synthetic, config.seed);
  const auto train = io::read_feature_csv(config.stream.train_csv, SplitTag::train);
  const auto test = io::read_feature_csv(config.stream.test_csv, SplitTag::test);
  return make_task_stream(train, test, config.stream.classes_per_task);
}

// ---- experiment ------------------------------------------------------------

ImageTensor row_to_image(std::span<const double> row, const std::array<std::size_t, 3>& shape) {
  std::array<std::size_t, 3> s = shape;
  if (!s[0]) s = {1, 1, row.size()};
  if (s[0] * s[1] * s[2] != row.size()) {
    throw ValidationError("augmentation: image_shape does not match the feature width");
  }
  return ImageTensor(s[0], s[1], s[2], std::vector<double>(row.begin(), row.end()));
}

namespace {

constexpr std::uint64_t kSamplerStream = 0x73616d70;
constexpr std::uint64_t kAugmentStream = 0x61756731;

// Selective-cut augmentation of one task's training rows.
LabeledDataset augment_task(const LabeledDataset& train, const ExperimentConfig& config) {
  LabeledDataset out(train.dims());
  const auto plan = balance_plan(train.class_counts());
  for (const auto& [cls, count] : plan.counts) {
    if (count == 0) continue;
    std::vector<ImageTensor> images;
    for (std::size_t i : train.indices_of(cls)) images.push_back(row_to_image(train.point(i), config.augmentation.image_shape));
    Rng rng(derive_seed(derive_seed(config.seed, kAugmentStream), static_cast<std::uint64_t>(cls)));
    for (const auto& a : augment_class(images, {}, count, config.augmentation.params, rng)) {
      out.add(a.image.values, cls);
    }
  }
  return out;
}

TrainingBatch make_batch(const std::vector<const LabeledDataset*>& parts, std::size_t remembered_from,
                         const std::vector<int>& classes, std::size_t dims) {
  std::map<int, std::size_t> column;
  for (std::size_t k = 0; k < classes.size(); ++k) column[classes[k]] = k;
  std::vector<double> values;
  std::vector<std::size_t> labels;
  std::vector<char> mask;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto& part = *parts[p];
    values.insert(values.end(), part.values().begin(), part.values().end());
    for (int l : part.labels()) {
      labels.push_back(column.at(l));
      mask.push_back(p >= remembered_from ? 1 : 0);
    }
  }
  return TrainingBatch{DataMatrix(labels.size(), dims, std::move(values)), std::move(labels), classes, std::move(mask)};
}

}  // namespace

std::vector<MetricsRow> run_experiment(const ExperimentConfig& config, const TaskStream& stream,
                                       SoftmaxModel* final_model) {
  config.validate();
  stream.validate();
  const std::size_t dims = stream.dims;
  if (config.augmentation.enabled) row_to_image(std::vector<double>(dims), config.augmentation.image_shape);

  const bool method = config.mode == BaselineMode::method;
  const bool upper = config.mode == BaselineMode::upperbound;
  const std::size_t budget = method ? config.memory_budget : 0;

  SoftmaxModel model({}, dims);
  RehearsalMemory memory(budget);
  std::vector<int> seen;
  LabeledDataset all_train(dims);
  LabeledDataset all_test(dims, SplitTag::test);
  std::vector<MetricsRow> rows;
  double acc_sum = 0.0;

  for (std::size_t t = 0; t < stream.tasks.size(); ++t) {
    const auto start = std::chrono::steady_clock::now();
    const Task& task = stream.tasks[t];
    for (int c : task.classes) seen.push_back(c);
    all_train.append(task.train);
    all_test.append(task.test);

    LabeledDataset augmented(dims);
    if (method && config.augmentation.enabled) augmented = augment_task(task.train, config);
    const LabeledDataset remembered = memory.as_dataset(dims);

    std::vector<const LabeledDataset*> parts;
    std::size_t remembered_from = 0;
    if (upper) {
      parts = {&all_train};
      remembered_from = 1;
    } else if (method) {
      parts = {&task.train, &augmented, &remembered};
      remembered_from = 2;
    } else {
      parts = {&task.train};
      remembered_from = 1;
    }
    const TrainingBatch batch = make_batch(parts, remembered_from, seen, dims);

    std::optional<TeacherSnapshot> teacher;
    if (method && t > 0) teacher.emplace(model);
    model = train_task(model, teacher ? &*teacher : nullptr, batch, config.loss);

    if (method) {
      const auto quotas = memory_quotas(budget, seen.size());
      std::vector<ClassSelection> selections;
      for (std::size_t k = 0; k < task.classes.size(); ++k) {
        const int cls = task.classes[k];
        const std::size_t quota = quotas[seen.size() - task.classes.size() + k];
        const DataMatrix data = task.train.class_matrix(cls);
        ClassSelection sel;
        sel.class_id = cls;
        sel.selection.method = config.sampler.method;
        const std::size_t m = std::min(quota, data.rows());
        if (m > 0) {
          Rng rng(derive_seed(derive_seed(config.seed, kSamplerStream), static_cast<std::uint64_t>(cls)));
          sel.selection = sample(config.sampler, data, m, rng);
        }
        for (std::size_t i = 0; i < data.rows(); ++i) {
          const auto r = data.row(i);
          sel.source_points.emplace_back(r.begin(), r.end());
        }
        selections.push_back(std::move(sel));
      }
      memory = rebalance_memory(memory, selections, budget);
    }

    std::map<int, std::vector<double>> means;
    if (config.classifier == ClassifierMode::nearest_class_mean) {
      if (upper) {
        for (int c : seen) means.emplace(c, mean_vector(all_train.class_matrix(c)));
      } else {
        means = memory.class_means();
      }
    }
    const EvalMetrics m = evaluate(model, means, all_test, config.classifier);
    acc_sum += m.accuracy;

    MetricsRow row;
    row.task = t + 1;
    row.accuracy = m.accuracy;
    row.avg_accuracy = acc_sum / static_cast<double>(t + 1);
    row.macro_f1 = m.macro_f1;
    row.gmean = m.gmean;
    if (config.record_wall_time) {
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    rows.push_back(row);
  }
  if (final_model) *final_model = model;
  return rows;
}

std::vector<MetricsRow> run_experiment(const ExperimentConfig& config) {
  config.validate();
  return run_experiment(config, load_stream(config));
}

std::vector<std::size_t> dedupe_budgets(std::span<const std::size_t> budgets, std::vector<std::size_t>* dropped) {
  std::vector<std::size_t> out;
  std::set<std::size_t> seen;
  for (std::size_t b : budgets) {
    if (seen.insert(b).second) {
      out.push_back(b);
    } else if (dropped) {
      dropped->push_back(b);
    }
  }
  return out;
}

std::vector<SweepBlock> run_sweep(const ExperimentConfig& config, const TaskStream& stream,
                                  std::span<const std::size_t> budgets, std::size_t workers) {
  if (budgets.empty()) throw ValidationError("sweep: no budgets");
  std::vector<ExperimentConfig> configs;
  for (std::size_t b : budgets) {
    ExperimentConfig c = config;
    c.memory_budget = b;
    c.validate();
    configs.push_back(std::move(c));
  }
  stream.validate();

  std::vector<SweepBlock> blocks(budgets.size());
  std::vector<std::exception_ptr> errors(budgets.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < budgets.size(); i = next++) {
      try {
        blocks[i] = {budgets[i], run_experiment(configs[i], stream)};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::clamp<std::size_t>(workers, 1, budgets.size());
  if (n == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(work);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return blocks;
}

// ---- statistics ------------------------------------------------------------

DatasetStats dataset_stats(const ImageDataset& data) {
  if (data.images.size() != data.labels.size()) throw ValidationError("stats: one label per image required");
  if (data.images.empty()) throw ValidationError("stats: empty dataset");
  const std::size_t channels = data.images.front().channels;
  std::map<int, std::vector<const ImageTensor*>> by_class;
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    if (data.images[i].channels != channels) throw ValidationError("stats: images have mixed channel counts");
    by_class[data.labels[i]].push_back(&data.images[i]);
  }
  DatasetStats stats;
  stats.average.assign(channels, 0.0);
  for (const auto& [cls, images] : by_class) {
    std::vector<double> var(channels, 0.0);
    for (std::size_t c = 0; c < channels; ++c) {
      double sum = 0.0;
      std::size_t count = 0;
      for (const auto* img : images) {
        const std::size_t plane = img->height * img->width;
        for (std::size_t k = 0; k < plane; ++k) sum += img->values[c * plane + k];
        count += plane;
      }
      const double mean = sum / static_cast<double>(count);
      double sq = 0.0;
      for (const auto* img : images) {
        const std::size_t plane = img->height * img->width;
        for (std::size_t k = 0; k < plane; ++k) {
          const double dv = img->values[c * plane + k] - mean;
          sq += dv * dv;
        }
      }
      var[c] = sq / static_cast<double>(count);
      stats.average[c] += var[c];
    }
    stats.variance.emplace(cls, std::move(var));
    stats.counts.emplace(cls, images.size());
  }
  for (double& v : stats.average) v /= static_cast<double>(by_class.size());
  return stats;
}

}  // namespace pbes
