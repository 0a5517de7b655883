#ifndef PBES_MODEL_HPP
#define PBES_MODEL_HPP

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "pbes/numerics.hpp"

namespace pbes {

/// Linear softmax classifier over the identity feature map. Row k of
/// `weights` and entry k of `bias` belong to class_ids[k].
struct SoftmaxModel {
  Matrix weights;
  std::vector<double> bias;
  std::vector<int> class_ids;

  SoftmaxModel() = default;
  /// Zero model.
  SoftmaxModel(std::vector<int> classes, std::size_t features);

  std::size_t num_classes() const { return class_ids.size(); }
  std::size_t num_features() const { return weights.cols(); }

  std::vector<double> logits(std::span<const double> x) const;

  /// Copy with zero rows appended for classes in `classes` beyond the current
  /// ids. The current ids must be a prefix of `classes`.
  SoftmaxModel extended_to(const std::vector<int>& classes) const;

  void validate() const;
  bool operator==(const SoftmaxModel&) const = default;
};

/// Frozen copy of the model after the previous task.
class TeacherSnapshot {
 public:
  explicit TeacherSnapshot(SoftmaxModel model);
  const SoftmaxModel& model() const { return model_; }

 private:
  SoftmaxModel model_;
};

enum class DistillScope {
  /// Distill on every training row.
  all,
  /// Distill only on rows flagged as exemplars.
  exemplars_only,
};

struct LossConfig {
  double temperature = 2.0;
  double beta = 0.5;
  /// Step size per sample: each update moves by learning_rate * grad / rows,
  /// where grad is the gradient of the summed batch loss.
  double learning_rate = 0.05;
  std::size_t epochs = 300;
  /// 0 means full batch.
  std::size_t batch_size = 0;
  /// When set, cross-entropy also uses the distillation temperature.
  bool ce_uses_temperature = false;
  DistillScope distill_scope = DistillScope::all;

  void validate() const;
};

/// Training rows with labels given as column indices into class_ids (the
/// one-hot position). distill_mask, when non-empty, flags rows that carry
/// the distillation term under DistillScope::exemplars_only.
struct TrainingBatch {
  DataMatrix inputs;
  std::vector<std::size_t> labels;
  std::vector<int> class_ids;
  std::vector<char> distill_mask;

  std::size_t size() const { return labels.size(); }
  Matrix one_hot() const;
  void validate() const;
};

/// Max-subtracted softmax of logits / T. T must be at least 1.
std::vector<double> softmax_with_temperature(std::span<const double> logits, double temperature);

/// Floor applied before taking log of a probability.
inline constexpr double kProbabilityFloor = 1e-300;

/// Summed cross-entropy over all current classes.
double cross_entropy_loss(const TrainingBatch& batch, const SoftmaxModel& model,
                          double temperature = 1.0);

/// Summed distillation loss; both blocks hold old-class logits, one row per
/// sample, and are normalized over that block only.
double distillation_loss(const Matrix& student_old_logits, const Matrix& teacher_logits,
                         double temperature);

double combine_losses(double distillation, double cross_entropy, double beta);

/// beta * L_D + (1 - beta) * L_C; teacher may be null (first task), in which
/// case the result is L_C.
double combined_loss(const TrainingBatch& batch, const SoftmaxModel& model,
                     const TeacherSnapshot* teacher, const LossConfig& config);

struct Gradient {
  Matrix weights;
  std::vector<double> bias;
};

/// Analytic gradient of combined_loss with respect to weights and bias.
Gradient loss_gradient(const TrainingBatch& batch, const SoftmaxModel& model,
                       const TeacherSnapshot* teacher, const LossConfig& config);

/// Gradient descent on combined_loss. The model is first extended with zero
/// rows for any new classes in batch.class_ids. Mini-batches, when enabled,
/// are taken in row order. If `epoch_losses` is given it receives the full
/// batch loss after every epoch. Throws NumericalError if the loss becomes
/// non-finite.
SoftmaxModel train_task(const SoftmaxModel& model, const TeacherSnapshot* teacher,
                        const TrainingBatch& batch, const LossConfig& config,
                        std::vector<double>* epoch_losses = nullptr);

enum class ClassifierMode { argmax_logits, nearest_class_mean };

/// Class id of the largest logit; lowest id on ties.
int classify_argmax(const SoftmaxModel& model, std::span<const double> x);

/// Class id of the nearest mean; lowest id on ties. Throws ValidationError if
/// `means` is empty.
int classify_ncm(const std::map<int, std::vector<double>>& means, std::span<const double> x);

int classify(const SoftmaxModel& model, std::span<const double> x, ClassifierMode mode,
             const std::map<int, std::vector<double>>& means);

}  // namespace pbes

#endif  // PBES_MODEL_HPP
