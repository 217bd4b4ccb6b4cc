#pragma once

// Leave-one-user-out evaluation and repeated-run metric distributions.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "skillfuse/features.hpp"
#include "skillfuse/nnet.hpp"
#include "skillfuse/parallel.hpp"
#include "skillfuse/random.hpp"
#include "skillfuse/trust.hpp"

namespace skillfuse {

struct Fold {
  std::string held_out_subject;
  std::vector<std::size_t> train;  // indices into the trial list
  std::vector<std::size_t> val;
};

// One fold per subject, in order of first appearance.
inline std::vector<Fold> louo_folds(std::span<const TrialRecord> trials) {
  std::vector<std::string> subjects;
  for (const auto& t : trials) {
    if (t.subject_id.empty()) throw std::invalid_argument("louo_folds: trial without subject id");
    if (std::find(subjects.begin(), subjects.end(), t.subject_id) == subjects.end()) subjects.push_back(t.subject_id);
  }
  if (subjects.size() < 2) throw std::invalid_argument("louo_folds: need at least 2 subjects");
  std::vector<Fold> folds;
  for (const auto& s : subjects) {
    Fold f{s, {}, {}};
    for (std::size_t i = 0; i < trials.size(); ++i) (trials[i].subject_id == s ? f.val : f.train).push_back(i);
    folds.push_back(std::move(f));
  }
  return folds;
}

using Predictor = std::function<Prediction(const Matrix&)>;
using Learner = std::function<Predictor(std::span<const TrainingExample>, std::uint64_t seed)>;

inline Learner nnet_learner(const VbaNetConfig& base) {
  return [base](std::span<const TrainingExample> data, std::uint64_t seed) -> Predictor {
    auto cfg = base;
    cfg.rng_seed = seed;
    auto model = std::make_shared<const TrainedModel>(train(cfg, data));
    return [model](const Matrix& x) { return forward(*model, x); };
  };
}

struct PooledPrediction {
  std::string trial_id;
  std::string subject_id;
  int true_label = 0;
  double true_score = 0.0;
  int predicted_class = -1;
  double confidence = 0.0;
  std::vector<double> probabilities;
  double predicted_score = 0.0;
};

inline double accuracy(std::span<const PooledPrediction> p) {
  if (p.empty()) throw std::invalid_argument("accuracy: no predictions");
  std::size_t ok = 0;
  for (const auto& r : p) ok += r.predicted_class == r.true_label;
  return static_cast<double>(ok) / static_cast<double>(p.size());
}

inline double r_squared(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size() || y.empty()) throw std::invalid_argument("r_squared: size mismatch");
  const double m = mean(y);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    ss_tot += (y[i] - m) * (y[i] - m);
  }
  if (!(ss_tot > 0)) throw std::domain_error("r_squared: targets have zero variance");
  return 1.0 - ss_res / ss_tot;
}

inline double r_squared(std::span<const PooledPrediction> p) {
  std::vector<double> y, yhat;
  for (const auto& r : p) {
    y.push_back(r.true_score);
    yhat.push_back(r.predicted_score);
  }
  return r_squared(y, yhat);
}

inline std::vector<PredictionRecord> prediction_records(std::span<const PooledPrediction> p) {
  std::vector<PredictionRecord> out;
  for (const auto& r : p) out.push_back({r.trial_id, r.true_label, r.predicted_class, r.confidence});
  return out;
}

struct AssessmentResult {
  HeadKind head = HeadKind::classify;
  std::uint64_t seed = 0;
  std::vector<PooledPrediction> predictions;  // in trial order
  double metric = 0.0;                        // accuracy or R^2, pooled over folds
};

inline TrainingExample training_example(const TrialRecord& t, Modality m, HeadKind head) {
  return {model_input(t, m).data, head == HeadKind::classify ? static_cast<double>(t.label) : t.score};
}

// Trains one model per fold (seed derived from `seed` and the fold index) and
// pools the held-out predictions.
inline AssessmentResult run_assessment(std::span<const TrialRecord> trials, Modality modality, HeadKind head,
                                       const Learner& learner, std::uint64_t seed) {
  const auto folds = louo_folds(trials);
  std::vector<TrainingExample> examples;
  examples.reserve(trials.size());
  for (const auto& t : trials) examples.push_back(training_example(t, modality, head));

  AssessmentResult res;
  res.head = head;
  res.seed = seed;
  res.predictions.resize(trials.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<TrainingExample> train_set;
    for (std::size_t i : folds[f].train) train_set.push_back(examples[i]);
    const auto predict = learner(train_set, derive_seed(seed, f));
    for (std::size_t i : folds[f].val) {
      const auto pr = predict(examples[i].x);
      auto& out = res.predictions[i];
      out.trial_id = trials[i].trial_id;
      out.subject_id = trials[i].subject_id;
      out.true_label = trials[i].label;
      out.true_score = trials[i].score;
      out.predicted_class = pr.predicted_class;
      out.confidence = pr.confidence;
      out.probabilities = pr.probabilities;
      out.predicted_score = pr.score;
    }
  }
  res.metric = head == HeadKind::classify ? accuracy(res.predictions) : r_squared(res.predictions);
  return res;
}

// n assessments with seeds master_seed + i, run on up to `jobs` threads and
// returned in seed order.
inline std::vector<AssessmentResult> repeat_runs(std::span<const TrialRecord> trials, Modality modality, HeadKind head,
                                                 const Learner& learner, std::size_t n, std::uint64_t master_seed,
                                                 std::size_t jobs = 1) {
  if (n < 2) throw std::invalid_argument("repeat_runs: need at least 2 iterations");
  std::vector<AssessmentResult> out(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    out[i] = run_assessment(trials, modality, head, learner, master_seed + i);
  });
  return out;
}

struct MetricDistribution {
  std::string metric;  // "accuracy", "r_squared" or "nts_<class>"
  Modality modality = Modality::fused;
  Task task = Task::pattern_cutting;
  std::vector<double> values;
};

inline MetricDistribution metric_distribution(std::span<const AssessmentResult> runs, Modality m, Task task) {
  if (runs.empty()) throw std::invalid_argument("metric_distribution: no runs");
  MetricDistribution d{runs.front().head == HeadKind::classify ? "accuracy" : "r_squared", m, task, {}};
  for (const auto& r : runs) d.values.push_back(r.metric);
  return d;
}

// Per-class NTS distributions over classification runs, keyed by class index.
inline std::map<int, MetricDistribution> nts_distributions(std::span<const AssessmentResult> runs, Modality m, Task task,
                                                           bool correct_only = false) {
  std::map<int, MetricDistribution> out;
  for (const auto& r : runs) {
    if (r.head != HeadKind::classify) throw std::invalid_argument("nts_distributions: regression runs");
    const auto recs = prediction_records(r.predictions);
    for (const auto& [cls, v] : net_trust_score(recs, correct_only)) {
      auto& d = out[cls];
      d.metric = "nts_" + std::string(class_name(task, cls));
      d.modality = m;
      d.task = task;
      d.values.push_back(v);
    }
  }
  return out;
}

}  // namespace skillfuse
