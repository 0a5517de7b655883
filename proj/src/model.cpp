#include "pbes/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pbes/errors.hpp"

namespace pbes {

SoftmaxModel::SoftmaxModel(std::vector<int> classes, std::size_t features)
    : weights(classes.size(), features), bias(classes.size(), 0.0), class_ids(std::move(classes)) {}

std::vector<double> SoftmaxModel::logits(std::span<const double> x) const {
  if (x.size() != num_features()) {
    throw ValidationError("SoftmaxModel: input has " + std::to_string(x.size()) +
                          " features, model expects " + std::to_string(num_features()));
  }
  std::vector<double> z(num_classes());
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = dot(weights.row(k), x) + bias[k];
  return z;
}

SoftmaxModel SoftmaxModel::extended_to(const std::vector<int>& classes) const {
  if (classes.size() < class_ids.size() ||
      !std::equal(class_ids.begin(), class_ids.end(), classes.begin())) {
    throw ValidationError("SoftmaxModel: known classes must be a prefix of the new class list");
  }
  SoftmaxModel out = *this;
  const std::vector<double> zeros(num_features(), 0.0);
  for (std::size_t k = class_ids.size(); k < classes.size(); ++k) {
    out.weights.append_row(zeros);
    out.bias.push_back(0.0);
    out.class_ids.push_back(classes[k]);
  }
  return out;
}

void SoftmaxModel::validate() const {
  if (weights.rows() != class_ids.size() || bias.size() != class_ids.size()) {
    throw ValidationError("SoftmaxModel: weight rows, bias and class ids disagree");
  }
  for (double v : weights.values()) {
    if (!std::isfinite(v)) throw NumericalError("SoftmaxModel: non-finite weight");
  }
  for (double v : bias) {
    if (!std::isfinite(v)) throw NumericalError("SoftmaxModel: non-finite bias");
  }
}

TeacherSnapshot::TeacherSnapshot(SoftmaxModel model) : model_(std::move(model)) { model_.validate(); }

void LossConfig::validate() const {
  if (!(temperature > 1.0) || !std::isfinite(temperature)) throw ValidationError("loss: temperature must be > 1");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ValidationError("loss: beta must lie in [0, 1]");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("loss: learning_rate must be > 0");
}

Matrix TrainingBatch::one_hot() const {
  Matrix y(labels.size(), class_ids.size());
  for (std::size_t i = 0; i < labels.size(); ++i) y(i, labels[i]) = 1.0;
  return y;
}

void TrainingBatch::validate() const {
  if (labels.size() != inputs.rows()) throw ValidationError("TrainingBatch: one label per input row required");
  for (std::size_t l : labels) {
    if (l >= class_ids.size()) throw ValidationError("TrainingBatch: label outside the class list");
  }
  if (!distill_mask.empty() && distill_mask.size() != labels.size()) {
    throw ValidationError("TrainingBatch: distill mask length mismatch");
  }
}

std::vector<double> softmax_with_temperature(std::span<const double> logits, double temperature) {
  if (logits.empty()) throw ValidationError("softmax: empty logits");
  if (!(temperature >= 1.0)) throw ValidationError("softmax: temperature must be >= 1");
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = std::exp((logits[k] - top) / temperature);
    total += p[k];
  }
  for (double& v : p) v /= total;
  return p;
}

namespace {

double safe_log(double p) { return std::log(std::max(p, kProbabilityFloor)); }

void check_student(const TrainingBatch& batch, const SoftmaxModel& model) {
  batch.validate();
  if (model.class_ids != batch.class_ids) {
    throw ValidationError("loss: model classes do not match the batch label space");
  }
  if (model.num_features() != batch.inputs.cols()) throw ValidationError("loss: feature width mismatch");
}

void check_teacher(const SoftmaxModel& model, const TeacherSnapshot& teacher) {
  const auto& t = teacher.model();
  if (t.num_classes() == 0 || t.num_classes() > model.num_classes() ||
      !std::equal(t.class_ids.begin(), t.class_ids.end(), model.class_ids.begin())) {
    throw ValidationError("loss: teacher classes must be a non-empty prefix of the student's");
  }
  if (t.num_features() != model.num_features()) throw ValidationError("loss: teacher feature width mismatch");
}

Matrix teacher_logits(const TeacherSnapshot& teacher, const DataMatrix& inputs) {
  Matrix out(inputs.rows(), teacher.model().num_classes());
  for (std::size_t i = 0; i < inputs.rows(); ++i) {
    const auto z = teacher.model().logits(inputs.row(i));
    std::copy(z.begin(), z.end(), out.row(i).begin());
  }
  return out;
}

bool distills_row(const TrainingBatch& batch, const LossConfig& config, std::size_t i) {
  return config.distill_scope == DistillScope::all ||
         (!batch.distill_mask.empty() && batch.distill_mask[i] != 0);
}

// Loss of the combined objective and, when grad is non-null, its gradient.
// `teacher_z` is empty when there is no teacher.
double evaluate_objective(const TrainingBatch& batch, const SoftmaxModel& model,
                          const Matrix& teacher_z, const LossConfig& config, Gradient* grad) {
  const bool has_teacher = teacher_z.cols() > 0;
  const double beta = has_teacher ? config.beta : 0.0;
  const double ce_t = config.ce_uses_temperature ? config.temperature : 1.0;
  const double t = config.temperature;
  const std::size_t k_all = model.num_classes();
  const std::size_t k_old = teacher_z.cols();
  const std::size_t d = model.num_features();

  if (grad) {
    grad->weights = Matrix(k_all, d);
    grad->bias.assign(k_all, 0.0);
  }
  double ce_total = 0.0;
  double kd_total = 0.0;
  std::vector<double> g(k_all);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto x = batch.inputs.row(i);
    const auto z = model.logits(x);
    const auto p = softmax_with_temperature(z, ce_t);
    const std::size_t y = batch.labels[i];
    ce_total -= safe_log(p[y]);
    for (std::size_t k = 0; k < k_all; ++k) g[k] = (1.0 - beta) * (p[k] - (k == y ? 1.0 : 0.0)) / ce_t;

    if (has_teacher && distills_row(batch, config, i)) {
      const auto ps = softmax_with_temperature(std::span<const double>(z).first(k_old), t);
      const auto pt = softmax_with_temperature(teacher_z.row(i), t);
      double mass = 0.0;
      for (std::size_t k = 0; k < k_old; ++k) {
        kd_total -= pt[k] * safe_log(ps[k]);
        mass += pt[k];
      }
      for (std::size_t k = 0; k < k_old; ++k) g[k] += beta * (ps[k] * mass - pt[k]) / t;
    }

    if (grad) {
      for (std::size_t k = 0; k < k_all; ++k) {
        if (g[k] == 0.0) continue;
        auto wr = grad->weights.row(k);
        for (std::size_t j = 0; j < d; ++j) wr[j] += g[k] * x[j];
        grad->bias[k] += g[k];
      }
    }
  }
  return has_teacher ? combine_losses(kd_total, ce_total, beta) : ce_total;
}

}  // namespace

double cross_entropy_loss(const TrainingBatch& batch, const SoftmaxModel& model, double temperature) {
  check_student(batch, model);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto p = softmax_with_temperature(model.logits(batch.inputs.row(i)), temperature);
    total -= safe_log(p[batch.labels[i]]);
  }
  return total;
}

double distillation_loss(const Matrix& student_old_logits, const Matrix& teacher_logits,
                         double temperature) {
  if (student_old_logits.rows() != teacher_logits.rows() ||
      student_old_logits.cols() != teacher_logits.cols()) {
    throw ValidationError("distillation_loss: student and teacher logit blocks differ in shape");
  }
  if (!(temperature > 1.0)) throw ValidationError("distillation_loss: temperature must be > 1");
  double total = 0.0;
  for (std::size_t i = 0; i < teacher_logits.rows(); ++i) {
    if (teacher_logits.cols() == 0) throw ValidationError("distillation_loss: no old classes");
    const auto ps = softmax_with_temperature(student_old_logits.row(i), temperature);
    const auto pt = softmax_with_temperature(teacher_logits.row(i), temperature);
    for (std::size_t k = 0; k < ps.size(); ++k) total -= pt[k] * safe_log(ps[k]);
  }
  return total;
}

double combine_losses(double distillation, double cross_entropy, double beta) {
  return beta * distillation + (1.0 - beta) * cross_entropy;
}

double combined_loss(const TrainingBatch& batch, const SoftmaxModel& model,
                     const TeacherSnapshot* teacher, const LossConfig& config) {
  config.validate();
  check_student(batch, model);
  if (!teacher) return evaluate_objective(batch, model, Matrix(), config, nullptr);
  check_teacher(model, *teacher);
  return evaluate_objective(batch, model, teacher_logits(*teacher, batch.inputs), config, nullptr);
}

Gradient loss_gradient(const TrainingBatch& batch, const SoftmaxModel& model,
                       const TeacherSnapshot* teacher, const LossConfig& config) {
  config.validate();
  check_student(batch, model);
  Matrix tz;
  if (teacher) {
    check_teacher(model, *teacher);
    tz = teacher_logits(*teacher, batch.inputs);
  }
  Gradient g;
  evaluate_objective(batch, model, tz, config, &g);
  return g;
}

namespace {

struct Chunk {
  TrainingBatch batch;
  Matrix teacher_z;
};

Chunk make_chunk(const TrainingBatch& batch, const Matrix& tz, std::size_t begin, std::size_t end) {
  std::vector<std::size_t> idx;
  for (std::size_t i = begin; i < end; ++i) idx.push_back(i);
  Chunk c{TrainingBatch{batch.inputs.select(idx), {}, batch.class_ids, {}}, Matrix()};
  for (std::size_t i : idx) {
    c.batch.labels.push_back(batch.labels[i]);
    if (!batch.distill_mask.empty()) c.batch.distill_mask.push_back(batch.distill_mask[i]);
    if (tz.cols() > 0) c.teacher_z.append_row(tz.row(i));
  }
  return c;
}

}  // namespace

SoftmaxModel train_task(const SoftmaxModel& model, const TeacherSnapshot* teacher,
                        const TrainingBatch& batch, const LossConfig& config,
                        std::vector<double>* epoch_losses) {
  config.validate();
  SoftmaxModel current = model.extended_to(batch.class_ids);
  check_student(batch, current);
  if (config.epochs == 0) return current;

  Matrix tz;
  if (teacher) {
    check_teacher(current, *teacher);
    tz = teacher_logits(*teacher, batch.inputs);
  }

  std::vector<Chunk> chunks;
  const std::size_t n = batch.size();
  const std::size_t step = config.batch_size == 0 ? n : config.batch_size;
  for (std::size_t begin = 0; begin < n; begin += step) {
    chunks.push_back(make_chunk(batch, tz, begin, std::min(n, begin + step)));
  }

  Gradient g;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& chunk : chunks) {
      const double loss = evaluate_objective(chunk.batch, current, chunk.teacher_z, config, &g);
      if (!std::isfinite(loss)) {
        throw NumericalError("train_task: loss became non-finite at epoch " + std::to_string(epoch));
      }
      const double scale = config.learning_rate / static_cast<double>(chunk.batch.size());
      auto& w = current.weights.values();
      const auto& gw = g.weights.values();
      for (std::size_t k = 0; k < w.size(); ++k) w[k] -= scale * gw[k];
      for (std::size_t k = 0; k < current.bias.size(); ++k) current.bias[k] -= scale * g.bias[k];
    }
    if (epoch_losses) epoch_losses->push_back(evaluate_objective(batch, current, tz, config, nullptr));
  }
  current.validate();
  return current;
}

int classify_argmax(const SoftmaxModel& model, std::span<const double> x) {
  if (model.num_classes() == 0) throw ValidationError("classify: model has no classes");
  const auto z = model.logits(x);
  std::size_t best = 0;
  for (std::size_t k = 1; k < z.size(); ++k) {
    if (z[k] > z[best] || (z[k] == z[best] && model.class_ids[k] < model.class_ids[best])) best = k;
  }
  return model.class_ids[best];
}

int classify_ncm(const std::map<int, std::vector<double>>& means, std::span<const double> x) {
  if (means.empty()) throw ValidationError("classify: nearest-class-mean needs a non-empty memory");
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& [cls, mu] : means) {
    if (mu.size() != x.size()) throw ValidationError("classify: class mean width mismatch");
    double dist = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) dist += (x[j] - mu[j]) * (x[j] - mu[j]);
    if (dist < best_dist) {
      best_dist = dist;
      best = cls;
    }
  }
  return best;
}

int classify(const SoftmaxModel& model, std::span<const double> x, ClassifierMode mode,
             const std::map<int, std::vector<double>>& means) {
  return mode == ClassifierMode::argmax_logits ? classify_argmax(model, x) : classify_ncm(means, x);
}

}  // namespace pbes
