#pragma once

// Deterministic desk-scale sequence-recognition testbed: a Markov reference
// generator with context-dependent confusability, a tiny softmax model that
// conditions on the previous token, and a full-batch trainer for the
// CE/LS/SLS/CASLS losses.

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seqcal/alignment.hpp"
#include "seqcal/confusion.hpp"
#include "seqcal/core.hpp"
#include "seqcal/metrics.hpp"
#include "seqcal/smoothing.hpp"
#include "seqcal/temperature.hpp"

namespace seqcal {

// Observation corruption for one (previous reference class, current class)
// pair. A context of kAnyContext applies to every context; an exact match
// wins over the wildcard. Positions not covered by any rule fall back to the
// spec's base noise, which replaces the token with a uniform other class.
inline constexpr ClassId kAnyContext = -1;

struct CorruptionRule {
  ClassId context = kAnyContext;
  ClassId cls = 0;
  double rate = 0.0;
  ClassId replacement = 0;
};

struct SynthTaskSpec {
  int k = 10;
  std::vector<std::vector<double>> transition;  // k x k row-stochastic; empty means uniform
  double base_noise = 0.0;
  std::vector<CorruptionRule> rules;
  int min_len = 3;
  int max_len = 8;
  int train_count = 1000;
  int support_count = 500;
  int test_count = 500;
  std::uint64_t seed = 7;

  Alphabet alphabet() const { return Alphabet(k); }

  void validate() const {
    if (k < 2) throw Error(ErrorCode::SpecInvalid, "k must be at least 2");
    if (min_len < 1) throw Error(ErrorCode::SpecInvalid, "min_len must be at least 1");
    if (max_len < min_len) throw Error(ErrorCode::SpecInvalid, "max_len must be >= min_len");
    if (train_count < 1 || support_count < 1 || test_count < 1)
      throw Error(ErrorCode::SpecInvalid, "sample counts must be positive");
    if (base_noise < 0.0 || base_noise > 1.0)
      throw Error(ErrorCode::SpecInvalid, "base_noise must lie in [0, 1]");
    if (!transition.empty()) {
      if (static_cast<int>(transition.size()) != k)
        throw Error(ErrorCode::SpecInvalid, "transition must have k rows");
      for (const auto& row : transition) {
        if (static_cast<int>(row.size()) != k)
          throw Error(ErrorCode::SpecInvalid, "transition rows must have k entries");
        double sum = 0.0;
        for (double p : row) {
          if (p < 0.0) throw Error(ErrorCode::SpecInvalid, "transition entries must be >= 0");
          sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
          throw Error(ErrorCode::SpecInvalid, "transition rows must sum to 1");
      }
    }
    const Alphabet a = alphabet();
    for (const auto& rule : rules) {
      const bool context_ok =
          rule.context == kAnyContext || a.is_ordinary(rule.context) || rule.context == a.sos_id();
      if (!context_ok)
        throw Error(ErrorCode::SpecInvalid, "rule context must be ordinary, SOS or wildcard");
      if (!a.is_ordinary(rule.cls) || !a.is_ordinary(rule.replacement))
        throw Error(ErrorCode::SpecInvalid, "rule class and replacement must be ordinary");
      if (rule.rate < 0.0 || rule.rate > 1.0)
        throw Error(ErrorCode::SpecInvalid, "rule rate must lie in [0, 1]");
      if (rule.replacement == rule.cls)
        throw Error(ErrorCode::SpecInvalid, "rule replacement must differ from its class");
    }
    std::map<std::pair<ClassId, ClassId>, int> seen;
    for (const auto& rule : rules)
      if (++seen[{rule.context, rule.cls}] > 1)
        throw Error(ErrorCode::SpecInvalid, "duplicate corruption rule");
  }
};

struct SynthExample {
  std::vector<ClassId> observations;
  std::vector<ClassId> reference;
};

struct SynthDataset {
  std::vector<SynthExample> train;
  std::vector<SynthExample> support;
  std::vector<SynthExample> test;
};

namespace detail {

// mt19937_64 with hand-rolled draws, so identical seeds give identical
// datasets on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  int uniform_int(int n) {
    const int v = static_cast<int>(uniform() * n);
    return v >= n ? n - 1 : v;
  }

  int categorical(std::span<const double> weights) {
    double r = uniform();
    for (std::size_t i = 0; i < weights.size(); ++i) {
      r -= weights[i];
      if (r < 0.0) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace detail

inline SynthDataset generate(const SynthTaskSpec& spec) {
  spec.validate();
  const Alphabet alphabet = spec.alphabet();
  detail::Rng rng(spec.seed);

  std::map<std::pair<ClassId, ClassId>, const CorruptionRule*> rule_index;
  for (const auto& rule : spec.rules) rule_index[{rule.context, rule.cls}] = &rule;
  const auto find_rule = [&](ClassId context, ClassId cls) -> const CorruptionRule* {
    auto it = rule_index.find({context, cls});
    if (it != rule_index.end()) return it->second;
    it = rule_index.find({kAnyContext, cls});
    return it == rule_index.end() ? nullptr : it->second;
  };

  // First tokens follow the column average of the transition matrix, an
  // approximation of the chain's stationary mix, so sequence starts look
  // like sequence middles.
  std::vector<double> start_weights(static_cast<std::size_t>(spec.k),
                                    1.0 / static_cast<double>(spec.k));
  if (!spec.transition.empty()) {
    for (int j = 0; j < spec.k; ++j) {
      double sum = 0.0;
      for (int i = 0; i < spec.k; ++i)
        sum += spec.transition[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      start_weights[static_cast<std::size_t>(j)] = sum / static_cast<double>(spec.k);
    }
  }

  const auto make_example = [&]() {
    SynthExample example;
    const int length = spec.min_len + rng.uniform_int(spec.max_len - spec.min_len + 1);
    example.reference.reserve(length);
    example.observations.reserve(length);
    ClassId context = alphabet.sos_id();
    for (int t = 0; t < length; ++t) {
      ClassId token;
      if (spec.transition.empty()) {
        token = static_cast<ClassId>(rng.uniform_int(spec.k));
      } else if (t == 0) {
        token = static_cast<ClassId>(rng.categorical(start_weights));
      } else {
        token = static_cast<ClassId>(rng.categorical(spec.transition[example.reference.back()]));
      }
      example.reference.push_back(token);

      ClassId observed = token;
      if (const CorruptionRule* rule = find_rule(context, token)) {
        if (rng.uniform() < rule->rate) observed = rule->replacement;
      } else if (spec.base_noise > 0.0 && rng.uniform() < spec.base_noise) {
        ClassId other = static_cast<ClassId>(rng.uniform_int(spec.k - 1));
        if (other >= token) ++other;
        observed = other;
      }
      example.observations.push_back(observed);
      context = token;
    }
    return example;
  };

  SynthDataset data;
  data.train.reserve(spec.train_count);
  data.support.reserve(spec.support_count);
  data.test.reserve(spec.test_count);
  for (int i = 0; i < spec.train_count; ++i) data.train.push_back(make_example());
  for (int i = 0; i < spec.support_count; ++i) data.support.push_back(make_example());
  for (int i = 0; i < spec.test_count; ++i) data.test.push_back(make_example());
  return data;
}

// Linear softmax over concatenated one-hot features (observation, previous
// token), the minimal model whose predictions depend on context.
class ToyModel {
 public:
  explicit ToyModel(const Alphabet& alphabet)
      : alphabet_(alphabet),
        feature_dim_(alphabet.k() + alphabet.k_total()),
        weights_(static_cast<std::size_t>(alphabet.k_total()) * feature_dim_, 0.0),
        bias_(static_cast<std::size_t>(alphabet.k_total()), 0.0) {}

  const Alphabet& alphabet() const noexcept { return alphabet_; }

  std::vector<double> logits(ClassId observation, ClassId previous) const {
    std::vector<double> out(bias_);
    const std::size_t obs_index = static_cast<std::size_t>(observation);
    const std::size_t prev_index = static_cast<std::size_t>(alphabet_.k() + previous);
    for (std::size_t c = 0; c < out.size(); ++c) {
      const double* row = weights_.data() + c * feature_dim_;
      out[c] += row[obs_index] + row[prev_index];
    }
    return out;
  }

  std::size_t feature_dim() const noexcept { return feature_dim_; }
  std::vector<double>& weights() noexcept { return weights_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  std::vector<double>& bias() noexcept { return bias_; }
  const std::vector<double>& bias() const noexcept { return bias_; }

 private:
  Alphabet alphabet_;
  std::size_t feature_dim_;
  std::vector<double> weights_;  // k_total x feature_dim, row-major
  std::vector<double> bias_;
};

// Greedy decoding with the previous *predicted* token fed back as context.
inline PredictionRecord decode(const ToyModel& model, const SynthExample& example,
                               std::string id) {
  const Alphabet& alphabet = model.alphabet();
  PredictionRecord record;
  record.id = std::move(id);
  record.reference = example.reference;
  record.mode = ConfidenceMode::Full;
  record.predicted.reserve(example.observations.size());
  record.dists.reserve(example.observations.size());

  ClassId previous = alphabet.sos_id();
  for (ClassId observation : example.observations) {
    std::vector<double> p = softmax(model.logits(observation, previous));
    std::size_t best = 0;
    for (std::size_t c = 1; c < p.size(); ++c)
      if (p[c] > p[best]) best = c;
    record.predicted.push_back(static_cast<ClassId>(best));
    record.dists.push_back(TokenDistribution{std::move(p)});
    previous = static_cast<ClassId>(best);
  }
  return record;
}

enum class LossMode { CE, LS, SLS, CASLS };

struct TrainOptions {
  LossMode mode = LossMode::CE;
  int epochs = 100;
  double learning_rate = 1.0;
  SmoothingConfig smoothing;  // strength/normalization for the smoothed modes
};

struct TrainResult {
  std::vector<double> loss_curve;  // mean loss per epoch, at pre-update weights
};

// Full-batch gradient descent with teacher forcing: the context feature is
// the previous reference token. Targets are frozen before the first epoch.
inline TrainResult train(ToyModel& model, const std::vector<SynthExample>& data,
                         const TrainOptions& options,
                         const ContextConfusionStats* stats = nullptr,
                         const ErrorProneSets* sets = nullptr) {
  if (data.empty()) throw Error(ErrorCode::EmptyInput, "no training sequences");
  const bool needs_stats = options.mode == LossMode::SLS || options.mode == LossMode::CASLS;
  if (needs_stats && (stats == nullptr || sets == nullptr))
    throw Error(ErrorCode::MissingStats, "SLS/CASLS training requires frozen confusion stats");

  const Alphabet& alphabet = model.alphabet();
  const int k_total = alphabet.k_total();

  std::vector<std::vector<SoftTarget>> targets;
  targets.reserve(data.size());
  for (const auto& example : data) {
    switch (options.mode) {
      case LossMode::CE: {
        std::vector<SoftTarget> seq;
        seq.reserve(example.reference.size());
        for (ClassId token : example.reference) seq.push_back(one_hot(token, k_total));
        targets.push_back(std::move(seq));
        break;
      }
      case LossMode::LS: {
        options.smoothing.validate();
        const double alpha =
            options.smoothing.adaptive
                ? adaptive_alpha(options.smoothing.alpha_prime,
                                 static_cast<int>(example.reference.size()))
                : options.smoothing.alpha_prime;
        std::vector<SoftTarget> seq;
        seq.reserve(example.reference.size());
        for (ClassId token : example.reference) seq.push_back(smooth_ls(token, alpha, k_total));
        targets.push_back(std::move(seq));
        break;
      }
      case LossMode::SLS:
      case LossMode::CASLS: {
        SmoothingConfig config = options.smoothing;
        config.mode = options.mode == LossMode::SLS ? SmoothingMode::SLS : SmoothingMode::CASLS;
        targets.push_back(sequence_targets(example.reference, config, *stats, *sets, alphabet));
        break;
      }
    }
  }

  TrainResult result;
  result.loss_curve.reserve(options.epochs);
  std::vector<double> grad_w(model.weights().size());
  std::vector<double> grad_b(model.bias().size());

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
    double loss_sum = 0.0;

    for (std::size_t s = 0; s < data.size(); ++s) {
      const auto& example = data[s];
      std::vector<std::vector<double>> logit_rows;
      logit_rows.reserve(example.reference.size());
      ClassId previous = alphabet.sos_id();
      for (std::size_t t = 0; t < example.reference.size(); ++t) {
        logit_rows.push_back(model.logits(example.observations[t], previous));
        previous = example.reference[t];
      }
      const LossResult loss = smoothed_cross_entropy(logit_rows, targets[s]);
      loss_sum += loss.loss;

      previous = alphabet.sos_id();
      for (std::size_t t = 0; t < example.reference.size(); ++t) {
        const std::size_t obs_index = static_cast<std::size_t>(example.observations[t]);
        const std::size_t prev_index = static_cast<std::size_t>(alphabet.k() + previous);
        for (int c = 0; c < k_total; ++c) {
          const double g = loss.gradient[t][static_cast<std::size_t>(c)];
          double* row = grad_w.data() + static_cast<std::size_t>(c) * model.feature_dim();
          row[obs_index] += g;
          row[prev_index] += g;
          grad_b[static_cast<std::size_t>(c)] += g;
        }
        previous = example.reference[t];
      }
    }

    const double scale = options.learning_rate / static_cast<double>(data.size());
    for (std::size_t i = 0; i < grad_w.size(); ++i) model.weights()[i] -= scale * grad_w[i];
    for (std::size_t i = 0; i < grad_b.size(); ++i) model.bias()[i] -= scale * grad_b[i];
    result.loss_curve.push_back(loss_sum / static_cast<double>(data.size()));
  }
  return result;
}

struct ExperimentProtocol {
  int train_epochs = 1000;
  double train_lr = 6.0;
  int finetune_epochs = 300;
  double finetune_lr = 4.0;
  double threshold = 0.25;      // error-prone threshold for the support stats
  double ls_alpha = 0.2;        // LS arm: fixed per-token strength
  double alpha_prime = 0.22;    // SLS/CASLS arms: smoothing strength
  bool adaptive = false;        // per-token strength, matching the error rates
  Normalization normalization = Normalization::Renormalized;
  int bins = 15;
};

struct MethodResult {
  std::string name;
  CalibrationReport report;
  double mean_confidence = 0.0;
};

struct ExperimentResult {
  std::vector<MethodResult> methods;  // uncalibrated, ls, ts, sls, casls
  std::string stats_json;             // frozen support statistics
  double temperature = 1.0;           // fitted tau for the TS arm

  const MethodResult& method(const std::string& name) const {
    for (const auto& m : methods)
      if (m.name == name) return m;
    throw Error(ErrorCode::DomainError, "no method " + name);
  }
};

namespace detail {

inline std::vector<PredictionRecord> decode_all(const ToyModel& model,
                                                const std::vector<SynthExample>& examples,
                                                const std::string& prefix) {
  std::vector<PredictionRecord> records;
  records.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i)
    records.push_back(decode(model, examples[i], prefix + std::to_string(i)));
  return records;
}

}  // namespace detail

// Full protocol: train an uncalibrated model, freeze support-set confusion
// statistics from its predictions, fine-tune one copy per smoothing mode,
// fit the temperature baseline, and evaluate everything on the test split.
inline ExperimentResult run_experiment(const SynthTaskSpec& spec,
                                       const ExperimentProtocol& protocol) {
  const SynthDataset data = generate(spec);
  const Alphabet alphabet = spec.alphabet();

  ToyModel base(alphabet);
  TrainOptions base_options;
  base_options.mode = LossMode::CE;
  base_options.epochs = protocol.train_epochs;
  base_options.learning_rate = protocol.train_lr;
  train(base, data.train, base_options);

  // Frozen statistics from the uncalibrated model on the support split.
  const auto support_records = detail::decode_all(base, data.support, "support-");
  ContextConfusionStats stats(alphabet);
  for (const auto& record : support_records) {
    validate_record(record, alphabet);
    stats.accumulate(align(record.reference, record.predicted, alphabet));
  }
  const ErrorProneSets sets = error_prone_sets(stats, protocol.threshold);
  const std::string stats_json = stats_to_json(stats);

  SmoothingConfig finetune_smoothing;
  finetune_smoothing.alpha_prime = protocol.alpha_prime;
  finetune_smoothing.threshold = protocol.threshold;
  finetune_smoothing.adaptive = protocol.adaptive;
  finetune_smoothing.normalization = protocol.normalization;

  const auto finetune = [&](LossMode mode, const SmoothingConfig& smoothing) {
    ToyModel model = base;
    TrainOptions options;
    options.mode = mode;
    options.epochs = protocol.finetune_epochs;
    options.learning_rate = protocol.finetune_lr;
    options.smoothing = smoothing;
    train(model, data.train, options, &stats, &sets);
    return model;
  };

  SmoothingConfig ls_smoothing = finetune_smoothing;
  ls_smoothing.mode = SmoothingMode::LS;
  ls_smoothing.alpha_prime = protocol.ls_alpha;
  ls_smoothing.adaptive = false;  // plain label smoothing, one strength per token

  const ToyModel ls_model = finetune(LossMode::LS, ls_smoothing);
  const ToyModel sls_model = finetune(LossMode::SLS, finetune_smoothing);
  const ToyModel casls_model = finetune(LossMode::CASLS, finetune_smoothing);

  const TemperatureFit ts_fit = fit_temperature(support_records, alphabet);

  ExperimentResult result;
  result.stats_json = stats_json;
  result.temperature = ts_fit.temperature.value;

  const auto add_method = [&](const std::string& name, std::vector<PredictionRecord> records) {
    MethodResult method;
    method.name = name;
    method.report = evaluate(records, protocol.bins);
    method.mean_confidence = mean_sequence_confidence(records);
    result.methods.push_back(std::move(method));
  };

  const auto uncalibrated_test = detail::decode_all(base, data.test, "test-");
  add_method("uncalibrated", uncalibrated_test);
  add_method("ls", detail::decode_all(ls_model, data.test, "test-"));
  {
    std::vector<PredictionRecord> ts_records;
    ts_records.reserve(uncalibrated_test.size());
    for (const auto& record : uncalibrated_test)
      ts_records.push_back(rescale_record(record, ts_fit.temperature.value));
    add_method("ts", std::move(ts_records));
  }
  add_method("sls", detail::decode_all(sls_model, data.test, "test-"));
  add_method("casls", detail::decode_all(casls_model, data.test, "test-"));
  return result;
}

// Percent change against a baseline, rounded to whole percent, in the style
// "(+0%)" / "(-62%)".
inline std::string format_relative_change(double value, double baseline) {
  if (baseline == 0.0) return "(+0%)";
  const double pct = 100.0 * (value - baseline) / baseline;
  const long rounded = std::lround(pct);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "(%+ld%%)", rounded);
  return buf;
}

inline std::string experiment_summary_csv(const ExperimentResult& result) {
  const CalibrationReport& base = result.method("uncalibrated").report;
  std::string csv = "method,accuracy,wer,ece,ece_vs_uncalibrated,brier,brier_vs_uncalibrated\n";
  for (const auto& method : result.methods) {
    const CalibrationReport& r = method.report;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%.4f,%.4f,%.4f,%s,%.4f,%s\n", method.name.c_str(),
                  r.sequence_accuracy, r.wer, r.ece,
                  format_relative_change(r.ece, base.ece).c_str(), r.brier,
                  format_relative_change(r.brier, base.brier).c_str());
    csv += buf;
  }
  return csv;
}

// Default desk-scale task: a near-uniform Markov chain with one globally
// confusable class (a 7 reads as an 8 everywhere) and three symmetric class
// pairs that corrupt into each other only after one particular context
// (after a 5, 1 and 3 read as each other, and so on). A model that is
// additive in observation and context cannot hedge a symmetric pair — the
// two cells would need opposite context corrections — so its confidence
// stays pinned by the clean occurrences of those classes elsewhere, well
// above the pair cells' true accuracy. The resulting over-confidence sits
// exactly where the per-context confusion rows point.
inline SynthTaskSpec default_task_spec() {
  SynthTaskSpec spec;
  spec.k = 10;
  spec.base_noise = 0.02;
  spec.min_len = 3;
  spec.max_len = 9;
  spec.train_count = 5000;
  spec.support_count = 2000;
  spec.test_count = 2000;
  spec.seed = 37;

  // Mostly uniform transitions with a boost toward the confusable pair of
  // each context, so the per-context statistics have solid support.
  spec.transition.assign(spec.k, std::vector<double>(spec.k, 1.0));
  const auto boost = [&](ClassId from, ClassId to, double extra) {
    spec.transition[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)] += extra;
  };
  boost(5, 1, 4.0);
  boost(5, 3, 4.0);
  boost(6, 0, 4.0);
  boost(6, 4, 4.0);
  boost(8, 2, 4.0);
  boost(8, 9, 4.0);
  for (auto& row : spec.transition) {
    double sum = 0.0;
    for (double v : row) sum += v;
    for (double& v : row) v /= sum;
  }

  // Globally confusable class, visible to context-free statistics.
  spec.rules.push_back({kAnyContext, 7, 0.4, 8});
  // Symmetric context-conditional pairs, diluted below the threshold in
  // the global rows.
  spec.rules.push_back({5, 1, 0.5, 3});
  spec.rules.push_back({5, 3, 0.5, 1});
  spec.rules.push_back({6, 0, 0.5, 4});
  spec.rules.push_back({6, 4, 0.5, 0});
  spec.rules.push_back({8, 2, 0.5, 9});
  spec.rules.push_back({8, 9, 0.5, 2});
  return spec;
}

}  // namespace seqcal
