#include "pbes/harness.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "pbes/errors.hpp"

namespace {

using pbes::ClassSelection;
using pbes::RehearsalMemory;

ClassSelection fake_selection(int cls, std::size_t n, pbes::Rng& rng) {
  ClassSelection sel;
  sel.class_id = cls;
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < n; ++i) rows.push_back({static_cast<double>(cls), rng.normal()});
  const auto x = pbes::DataMatrix::from_rows(rows);
  sel.selection = pbes::random_sample(x, n, rng);
  sel.source_points = rows;
  return sel;
}

pbes::ExperimentConfig small_config(std::uint64_t seed) {
  pbes::ExperimentConfig cfg;
  pbes::SyntheticParams sp;
  sp.classes = 4;
  sp.tasks = 2;
  sp.dims = 3;
  sp.max_class_size = 30;
  cfg.stream.synthetic = sp;
  cfg.seed = seed;
  cfg.memory_budget = 10;
  cfg.loss.epochs = 50;
  return cfg;
}

TEST(MemoryQuotaTest, FloorPlusRemainder) {
  EXPECT_EQ(pbes::memory_quotas(6, 2), (std::vector<std::size_t>{3, 3}));
  EXPECT_EQ(pbes::memory_quotas(7, 3), (std::vector<std::size_t>{3, 2, 2}));
  EXPECT_EQ(pbes::memory_quotas(0, 3), (std::vector<std::size_t>{0, 0, 0}));
  EXPECT_TRUE(pbes::memory_quotas(5, 0).empty());
}

TEST(RebalanceTest, ShrinkingQuotasKeepPrefixes) {
  pbes::Rng rng(51);
  const std::vector<ClassSelection> first{fake_selection(0, 5, rng), fake_selection(1, 5, rng)};
  const auto two = pbes::rebalance_memory(RehearsalMemory(6), first, 6);
  EXPECT_EQ(two.exemplars(0).size(), 3u);
  EXPECT_EQ(two.exemplars(1).size(), 3u);
  const std::vector<ClassSelection> second{fake_selection(2, 5, rng)};
  const auto three = pbes::rebalance_memory(two, second, 6);
  EXPECT_EQ(three.arrival_order(), (std::vector<int>{0, 1, 2}));
  for (int cls : {0, 1}) {
    ASSERT_EQ(three.exemplars(cls).size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
      EXPECT_EQ(three.exemplars(cls)[i].source_index, two.exemplars(cls)[i].source_index);
      EXPECT_EQ(three.exemplars(cls)[i].point, two.exemplars(cls)[i].point);
    }
  }
  EXPECT_EQ(three.exemplars(2).size(), 2u);
  EXPECT_THROW(pbes::rebalance_memory(three, second, 6), pbes::ValidationError);
}

TEST(RebalanceTest, StoredListsFollowSelectionOrder) {
  pbes::Rng rng(52);
  const std::vector<ClassSelection> sel{fake_selection(4, 6, rng)};
  const auto mem = pbes::rebalance_memory(RehearsalMemory(4), sel, 4);
  const auto& stored = mem.exemplars(4);
  ASSERT_EQ(stored.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto idx = sel[0].selection.ordered_indices[i];
    EXPECT_EQ(stored[i].source_index, idx);
    EXPECT_EQ(stored[i].point, sel[0].source_points[idx]);
    EXPECT_EQ(stored[i].provenance, pbes::Provenance::original);
  }
}

TEST(RebalanceTest, BudgetNeverExceeded) {
  pbes::Rng rng(53);
  for (std::size_t budget = 0; budget <= 50; ++budget) {
    RehearsalMemory mem(budget);
    int next = 0;
    for (int task = 0; task < 5; ++task) {
      std::vector<ClassSelection> fresh;
      const auto arriving = pbes::memory_quotas(budget, mem.arrival_order().size() + 2);
      for (int c = 0; c < 2; ++c) {
        const std::size_t q = arriving[mem.arrival_order().size() + static_cast<std::size_t>(c)];
        fresh.push_back(fake_selection(next++, std::max<std::size_t>(q, 1) + rng.uniform_index(3), rng));
        fresh.back().selection.ordered_indices.resize(std::max<std::size_t>(q, 1));
      }
      mem = pbes::rebalance_memory(mem, fresh, budget);
      EXPECT_LE(mem.total_stored(), budget) << "M=" << budget << " task=" << task;
    }
  }
}

TEST(MetricsTest, HandConfusionMatrix) {
  const std::vector<int> labels{0, 0, 1}, preds{0, 1, 1};
  const auto m = pbes::compute_metrics(labels, preds);
  EXPECT_NEAR(m.accuracy, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(m.macro_f1, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(m.gmean, std::sqrt(0.5), 1e-12);
}

TEST(MetricsTest, PerfectAndZeroRecall) {
  const std::vector<int> labels{3, 3, 5, 8};
  const auto perfect = pbes::compute_metrics(labels, labels);
  EXPECT_EQ(perfect.accuracy, 1.0);
  EXPECT_EQ(perfect.macro_f1, 1.0);
  EXPECT_EQ(perfect.gmean, 1.0);
  const std::vector<int> never8{3, 3, 5, 5};
  EXPECT_EQ(pbes::compute_metrics(labels, never8).gmean, 0.0);
  EXPECT_THROW(pbes::compute_metrics(std::vector<int>{}, std::vector<int>{}), pbes::ValidationError);
}

TEST(MetricsTest, AbsentClassesAreExcludedFromMacroF1) {
  // Predicting an unseen id 9 counts as a miss but adds no F1 term for 9.
  const std::vector<int> labels{0, 1}, preds{0, 9};
  const auto m = pbes::compute_metrics(labels, preds);
  EXPECT_NEAR(m.macro_f1, 0.5, 1e-12);
  EXPECT_EQ(m.accuracy, 0.5);
}

TEST(SyntheticStreamTest, GeometricSizes) {
  pbes::SyntheticParams p;
  p.imbalance_ratio = 2.0;
  const auto sizes = pbes::synthetic_class_sizes(p);
  ASSERT_EQ(sizes.size(), 10u);
  EXPECT_EQ(sizes.front(), 100u);
  EXPECT_EQ(sizes.back(), 50u);
  for (std::size_t k = 1; k < sizes.size(); ++k) EXPECT_LE(sizes[k], sizes[k - 1]);
  p.imbalance_ratio = 1.0;
  for (auto s : pbes::synthetic_class_sizes(p)) EXPECT_EQ(s, 100u);
}

TEST(SyntheticStreamTest, ZeroSpreadCollapsesToClassMeans) {
  pbes::SyntheticParams p;
  p.classes = 4;
  p.tasks = 2;
  p.dims = 5;
  p.max_class_size = 10;
  p.sigma = 0.0;
  const auto stream = pbes::generate_synthetic_stream(p, 3);
  ASSERT_EQ(stream.tasks.size(), 2u);
  for (const auto& task : stream.tasks) {
    for (int cls : task.classes) {
      const auto rows = task.train.indices_of(cls);
      ASSERT_FALSE(rows.empty());
      const auto first = task.train.point(rows[0]);
      double r2 = 0.0;
      for (double v : first) r2 += v * v;
      EXPECT_NEAR(std::sqrt(r2), 6.0, 1e-9);
      for (auto i : rows) {
        const auto pt = task.train.point(i);
        EXPECT_TRUE(std::equal(pt.begin(), pt.end(), first.begin()));
      }
    }
  }
}

TEST(SyntheticStreamTest, SplitDeterminismAndValidation) {
  pbes::SyntheticParams p;
  p.imbalance_ratio = 2.0;
  p.outlier_fraction = 0.1;
  const auto a = pbes::generate_synthetic_stream(p, 17);
  const auto b = pbes::generate_synthetic_stream(p, 17);
  const auto c = pbes::generate_synthetic_stream(p, 18);
  ASSERT_EQ(a.tasks.size(), 5u);
  for (std::size_t t = 0; t < 5; ++t) {
    EXPECT_EQ(a.tasks[t].train, b.tasks[t].train);
    EXPECT_EQ(a.tasks[t].test, b.tasks[t].test);
  }
  EXPECT_NE(a.tasks[0].train, c.tasks[0].train);
  const auto sizes = pbes::synthetic_class_sizes(p);
  for (const auto& task : a.tasks) {
    for (int cls : task.classes) {
      const std::size_t n = sizes[static_cast<std::size_t>(cls)];
      EXPECT_EQ(task.test.indices_of(cls).size(), n / 5);
      EXPECT_EQ(task.train.indices_of(cls).size(), n - n / 5);
    }
  }
  a.validate();
  p.tasks = 3;
  EXPECT_THROW(pbes::generate_synthetic_stream(p, 1), pbes::ValidationError);
  p.tasks = 5;
  p.outlier_fraction = 1.0;
  EXPECT_THROW(pbes::generate_synthetic_stream(p, 1), pbes::ValidationError);
}

TEST(TaskStreamTest, OverlappingClassesRejected) {
  auto stream = pbes::generate_synthetic_stream(small_config(1).stream.synthetic.value(), 1);
  stream.tasks[1].classes = stream.tasks[0].classes;
  EXPECT_THROW(stream.validate(), pbes::ValidationError);
}

TEST(TaskStreamTest, GroupsClassesInAscendingOrder) {
  pbes::LabeledDataset train(1), test(1, pbes::SplitTag::test);
  for (int cls : {5, 2, 9, 7}) {
    train.add(std::vector<double>{1.0 * cls}, cls);
    test.add(std::vector<double>{1.0 * cls}, cls);
  }
  const auto stream = pbes::make_task_stream(train, test, 2);
  ASSERT_EQ(stream.tasks.size(), 2u);
  EXPECT_EQ(stream.tasks[0].classes, (std::vector<int>{2, 5}));
  EXPECT_EQ(stream.tasks[1].classes, (std::vector<int>{7, 9}));
  EXPECT_THROW(pbes::make_task_stream(train, test, 3), pbes::ValidationError);
}

TEST(ExperimentTest, TwoTaskRunIsStructuredAndDeterministic) {
  for (auto mode : {pbes::BaselineMode::method, pbes::BaselineMode::upperbound}) {
    auto cfg = small_config(4);
    cfg.mode = mode;
    const auto rows = pbes::run_experiment(cfg);
    ASSERT_EQ(rows.size(), 2u);
    for (std::size_t t = 0; t < 2; ++t) {
      EXPECT_EQ(rows[t].task, t + 1);
      for (double v : {rows[t].accuracy, rows[t].avg_accuracy, rows[t].macro_f1, rows[t].gmean}) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
      EXPECT_EQ(rows[t].wall_ms, 0.0);
    }
    EXPECT_NEAR(rows[1].avg_accuracy, (rows[0].accuracy + rows[1].accuracy) / 2.0, 1e-12);
    EXPECT_EQ(pbes::run_experiment(cfg), rows);
  }
}

TEST(ExperimentTest, EverySamplerAndClassifierRuns) {
  for (auto method : {pbes::SamplerMethod::pbes, pbes::SamplerMethod::randp, pbes::SamplerMethod::herding,
                      pbes::SamplerMethod::random}) {
    for (auto clf : {pbes::ClassifierMode::argmax_logits, pbes::ClassifierMode::nearest_class_mean}) {
      auto cfg = small_config(5);
      cfg.sampler.method = method;
      cfg.classifier = clf;
      EXPECT_EQ(pbes::run_experiment(cfg).size(), 2u);
    }
  }
}

TEST(ExperimentTest, AugmentationChangesTrainingOnImbalancedData) {
  auto cfg = small_config(6);
  cfg.stream.synthetic->imbalance_ratio = 3.0;
  const auto stream = pbes::load_stream(cfg);
  pbes::SoftmaxModel plain, augmented, again;
  pbes::run_experiment(cfg, stream, &plain);
  cfg.augmentation.enabled = true;
  EXPECT_EQ(pbes::run_experiment(cfg, stream, &augmented).size(), 2u);
  pbes::run_experiment(cfg, stream, &again);
  EXPECT_NE(plain, augmented);
  EXPECT_EQ(again, augmented);
}

TEST(ExperimentTest, FinetuneStoresNothing) {
  auto cfg = small_config(7);
  cfg.mode = pbes::BaselineMode::finetune;
  EXPECT_THROW(cfg.validate(), pbes::ValidationError);
  cfg.memory_budget = 0;
  cfg.validate();
  EXPECT_EQ(pbes::run_experiment(cfg).size(), 2u);
  cfg.classifier = pbes::ClassifierMode::nearest_class_mean;
  EXPECT_THROW(cfg.validate(), pbes::ValidationError);
}

TEST(ExperimentTest, ZeroBudgetWithoutDistillationMatchesFinetune) {
  auto cfg = small_config(8);
  cfg.memory_budget = 0;
  cfg.loss.beta = 0.0;
  const auto method = pbes::run_experiment(cfg);
  cfg.mode = pbes::BaselineMode::finetune;
  EXPECT_EQ(pbes::run_experiment(cfg), method);
}

TEST(SweepTest, ParallelMatchesSequential) {
  const auto cfg = small_config(9);
  const auto stream = pbes::load_stream(cfg);
  const std::vector<std::size_t> budgets{4, 0, 12, 8};
  const auto one = pbes::run_sweep(cfg, stream, budgets, 1);
  const auto many = pbes::run_sweep(cfg, stream, budgets, 4);
  ASSERT_EQ(one.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(one[i].budget, budgets[i]);
    EXPECT_EQ(many[i].budget, budgets[i]);
    EXPECT_EQ(one[i].rows, many[i].rows);
  }
}

TEST(SweepTest, DedupeKeepsFirstOccurrence) {
  std::vector<std::size_t> dropped;
  const std::vector<std::size_t> in{8, 16, 8, 4, 16};
  EXPECT_EQ(pbes::dedupe_budgets(in, &dropped), (std::vector<std::size_t>{8, 16, 4}));
  EXPECT_EQ(dropped, (std::vector<std::size_t>{8, 16}));
}

TEST(DatasetStatsTest, TwoImageFixture) {
  pbes::ImageDataset data;
  data.images = {pbes::ImageTensor(1, 1, 1, {0.0}), pbes::ImageTensor(1, 1, 1, {1.0})};
  data.labels = {0, 0};
  const auto stats = pbes::dataset_stats(data);
  EXPECT_DOUBLE_EQ(stats.variance.at(0)[0], 0.25);
  EXPECT_DOUBLE_EQ(stats.average[0], 0.25);
  EXPECT_EQ(stats.counts.at(0), 2u);
}

TEST(DatasetStatsTest, IdenticalImagesAndCountsPartition) {
  pbes::ImageDataset data;
  const pbes::ImageTensor img(2, 2, 2, {1, 2, 3, 4, 5, 6, 7, 8});
  data.images = {img, img, img, pbes::ImageTensor(2, 2, 2, std::vector<double>(8, 1.0))};
  data.labels = {3, 3, 3, 9};
  const auto stats = pbes::dataset_stats(data);
  EXPECT_DOUBLE_EQ(stats.variance.at(3)[0], 1.25);
  EXPECT_DOUBLE_EQ(stats.variance.at(9)[1], 0.0);
  std::size_t total = 0;
  for (const auto& [cls, n] : stats.counts) total += n;
  EXPECT_EQ(total, data.images.size());
  data.images[3] = pbes::ImageTensor(1, 2, 2, std::vector<double>(4, 1.0));
  EXPECT_THROW(pbes::dataset_stats(data), pbes::ValidationError);
}

}  // namespace
