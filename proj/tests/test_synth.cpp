#include <doctest.h>

#include <cmath>

#include "seqcal/synth.hpp"

using namespace seqcal;

namespace {

SynthTaskSpec small_spec() {
  SynthTaskSpec spec;
  spec.k = 5;
  spec.base_noise = 0.05;
  spec.rules = {{2, 1, 0.5, 3}};
  spec.min_len = 2;
  spec.max_len = 5;
  spec.train_count = 300;
  spec.support_count = 150;
  spec.test_count = 150;
  spec.seed = 11;
  return spec;
}

// Test-side dataset loss with teacher forcing, for gradient checks.
double dataset_loss(const ToyModel& model, const std::vector<SynthExample>& data,
                    const std::vector<std::vector<SoftTarget>>& targets) {
  double total = 0.0;
  for (std::size_t s = 0; s < data.size(); ++s) {
    std::vector<std::vector<double>> logit_rows;
    ClassId previous = model.alphabet().sos_id();
    for (std::size_t t = 0; t < data[s].reference.size(); ++t) {
      logit_rows.push_back(model.logits(data[s].observations[t], previous));
      previous = data[s].reference[t];
    }
    total += smoothed_cross_entropy(logit_rows, targets[s]).loss;
  }
  return total / static_cast<double>(data.size());
}

bool datasets_equal(const SynthDataset& a, const SynthDataset& b) {
  const auto split_equal = [](const std::vector<SynthExample>& x,
                              const std::vector<SynthExample>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i].reference != y[i].reference || x[i].observations != y[i].observations) return false;
    return true;
  };
  return split_equal(a.train, b.train) && split_equal(a.support, b.support) &&
         split_equal(a.test, b.test);
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("zero corruption reproduces the reference as the observation") {
  SynthTaskSpec spec = small_spec();
  spec.base_noise = 0.0;
  spec.rules.clear();
  const SynthDataset data = generate(spec);
  for (const auto* split : {&data.train, &data.support, &data.test})
    for (const auto& example : *split) CHECK(example.observations == example.reference);
}

TEST_CASE("generation is deterministic in the seed") {
  const SynthTaskSpec spec = small_spec();
  CHECK(datasets_equal(generate(spec), generate(spec)));

  SynthTaskSpec other = spec;
  other.seed = 12;
  CHECK_FALSE(datasets_equal(generate(spec), generate(other)));
}

TEST_CASE("sequence lengths stay inside the configured range") {
  const SynthDataset data = generate(small_spec());
  for (const auto& example : data.train) {
    CHECK(example.reference.size() >= 2);
    CHECK(example.reference.size() <= 5);
    CHECK(example.observations.size() == example.reference.size());
  }
}

TEST_CASE("rule corruption frequency matches its rate empirically") {
  SynthTaskSpec spec;
  spec.k = 10;
  spec.base_noise = 0.0;
  spec.rules = {{2, 5, 0.3, 6}};
  // boost the (2, 5) transition so the pair occurs often
  spec.transition.assign(10, std::vector<double>(10, 0.1));
  for (auto& v : spec.transition[2]) v = 0.5 / 9.0;
  spec.transition[2][5] = 0.5;
  spec.min_len = 6;
  spec.max_len = 8;
  spec.train_count = 40000;
  spec.support_count = 1;
  spec.test_count = 1;
  spec.seed = 3;

  const SynthDataset data = generate(spec);
  std::size_t pairs = 0, corrupted = 0;
  for (const auto& example : data.train) {
    for (std::size_t t = 1; t < example.reference.size(); ++t) {
      if (example.reference[t - 1] == 2 && example.reference[t] == 5) {
        ++pairs;
        if (example.observations[t] != example.reference[t]) {
          ++corrupted;
          CHECK(example.observations[t] == 6);
        }
      }
    }
  }
  REQUIRE(pairs >= 10000);
  const double frequency = static_cast<double>(corrupted) / static_cast<double>(pairs);
  CHECK(std::abs(frequency - 0.3) < 0.03);
}

TEST_CASE("spec validation rejects malformed tasks") {
  SynthTaskSpec bad = small_spec();
  bad.min_len = 0;
  CHECK_THROWS_AS(generate(bad), Error);

  bad = small_spec();
  bad.rules = {{2, 1, 1.5, 3}};
  CHECK_THROWS_AS(generate(bad), Error);

  bad = small_spec();
  bad.transition.assign(5, std::vector<double>(5, 0.3));  // rows sum to 1.5
  try {
    generate(bad);
    FAIL("expected SpecInvalid");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SpecInvalid);
  }
}

TEST_CASE("a noiseless task trains to perfect token accuracy under CE") {
  SynthTaskSpec spec = small_spec();
  spec.base_noise = 0.0;
  spec.rules.clear();
  const SynthDataset data = generate(spec);

  ToyModel model(spec.alphabet());
  TrainOptions options;
  options.mode = LossMode::CE;
  options.epochs = 200;
  options.learning_rate = 2.0;
  const TrainResult result = train(model, data.train, options);
  CHECK(result.loss_curve.back() <= result.loss_curve.front());

  for (const auto& example : data.test) {
    const PredictionRecord record = decode(model, example, "x");
    CHECK(record.predicted == example.reference);
  }
}

TEST_CASE("a zero learning rate leaves the model untouched") {
  const SynthDataset data = generate(small_spec());
  ToyModel model(small_spec().alphabet());
  model.weights()[3] = 0.25;  // make the state non-trivial
  const auto weights_before = model.weights();
  const auto bias_before = model.bias();

  TrainOptions options;
  options.mode = LossMode::CE;
  options.epochs = 1;
  options.learning_rate = 0.0;
  train(model, data.train, options);
  CHECK(model.weights() == weights_before);
  CHECK(model.bias() == bias_before);
}

TEST_CASE("SLS and CASLS training demand frozen statistics") {
  const SynthDataset data = generate(small_spec());
  ToyModel model(small_spec().alphabet());
  TrainOptions options;
  options.mode = LossMode::CASLS;
  options.epochs = 1;
  try {
    train(model, data.train, options);
    FAIL("expected MissingStats");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingStats);
  }
}

TEST_CASE("one CASLS training step follows the finite-difference gradient") {
  SynthTaskSpec spec = small_spec();
  spec.train_count = 40;
  const SynthDataset data = generate(spec);
  const Alphabet alphabet = spec.alphabet();

  // stats from a briefly trained model so error-prone sets are non-trivial
  ToyModel warm(alphabet);
  TrainOptions warm_options;
  warm_options.mode = LossMode::CE;
  warm_options.epochs = 30;
  warm_options.learning_rate = 2.0;
  train(warm, data.train, warm_options);

  ContextConfusionStats stats(alphabet);
  for (const auto& example : data.support) {
    const PredictionRecord record = decode(warm, example, "s");
    stats.accumulate(align(record.reference, record.predicted, alphabet));
  }
  const ErrorProneSets sets = error_prone_sets(stats, 0.2);

  SmoothingConfig smoothing;
  smoothing.mode = SmoothingMode::CASLS;
  smoothing.alpha_prime = 0.2;
  smoothing.adaptive = true;

  std::vector<std::vector<SoftTarget>> targets;
  for (const auto& example : data.train)
    targets.push_back(sequence_targets(example.reference, smoothing, stats, sets, alphabet));

  // analytic gradient from one unit-rate step
  ToyModel stepped = warm;
  TrainOptions step_options;
  step_options.mode = LossMode::CASLS;
  step_options.epochs = 1;
  step_options.learning_rate = 1.0;
  step_options.smoothing = smoothing;
  train(stepped, data.train, step_options, &stats, &sets);

  const double eps = 1e-4;
  for (std::size_t p = 0; p < warm.weights().size(); p += 7) {
    ToyModel up = warm, down = warm;
    up.weights()[p] += eps;
    down.weights()[p] -= eps;
    const double numeric = (dataset_loss(up, data.train, targets) -
                            dataset_loss(down, data.train, targets)) /
                           (2 * eps);
    const double analytic = warm.weights()[p] - stepped.weights()[p];
    CHECK(std::abs(analytic - numeric) < 1e-6);
  }
  for (std::size_t p = 0; p < warm.bias().size(); ++p) {
    ToyModel up = warm, down = warm;
    up.bias()[p] += eps;
    down.bias()[p] -= eps;
    const double numeric = (dataset_loss(up, data.train, targets) -
                            dataset_loss(down, data.train, targets)) /
                           (2 * eps);
    const double analytic = warm.bias()[p] - stepped.bias()[p];
    CHECK(std::abs(analytic - numeric) < 1e-6);
  }
}

TEST_CASE("decode is deterministic and emits a valid full-mode record") {
  const SynthTaskSpec spec = small_spec();
  const SynthDataset data = generate(spec);
  ToyModel model(spec.alphabet());
  TrainOptions options;
  options.mode = LossMode::CE;
  options.epochs = 40;
  options.learning_rate = 2.0;
  train(model, data.train, options);

  const PredictionRecord a = decode(model, data.test[0], "d0");
  const PredictionRecord b = decode(model, data.test[0], "d0");
  CHECK(a == b);
  CHECK(a.full_mode());
  CHECK_NOTHROW(validate_record(a, spec.alphabet()));
  CHECK(a.predicted.size() == data.test[0].observations.size());
}

TEST_CASE("run_experiment is deterministic and keeps the stats frozen") {
  SynthTaskSpec spec = small_spec();
  spec.train_count = 250;
  spec.support_count = 120;
  spec.test_count = 120;
  ExperimentProtocol protocol;
  protocol.train_epochs = 60;
  protocol.finetune_epochs = 30;
  protocol.threshold = 0.2;

  const ExperimentResult first = run_experiment(spec, protocol);
  const ExperimentResult second = run_experiment(spec, protocol);

  REQUIRE(first.methods.size() == 5);
  CHECK(first.stats_json == second.stats_json);
  CHECK(first.temperature == second.temperature);
  for (std::size_t i = 0; i < first.methods.size(); ++i) {
    CHECK(first.methods[i].name == second.methods[i].name);
    CHECK(report_to_json(first.methods[i].report) == report_to_json(second.methods[i].report));
  }

  // the emitted statistics equal an independent re-derivation from the
  // uncalibrated model, so fine-tuning cannot have touched them
  ToyModel base(spec.alphabet());
  TrainOptions base_options;
  base_options.mode = LossMode::CE;
  base_options.epochs = protocol.train_epochs;
  base_options.learning_rate = protocol.train_lr;
  const SynthDataset data = generate(spec);
  train(base, data.train, base_options);
  ContextConfusionStats stats(spec.alphabet());
  for (std::size_t i = 0; i < data.support.size(); ++i) {
    const PredictionRecord record = decode(base, data.support[i], "s");
    stats.accumulate(align(record.reference, record.predicted, spec.alphabet()));
  }
  CHECK(stats_to_json(stats) == first.stats_json);
}

TEST_CASE("with zero corruption every method is nearly perfectly calibrated") {
  SynthTaskSpec spec = small_spec();
  spec.base_noise = 0.0;
  spec.rules.clear();
  spec.train_count = 400;
  spec.support_count = 150;
  spec.test_count = 150;

  // long enough for the separable task to saturate its confidences
  ExperimentProtocol protocol;
  protocol.train_epochs = 800;
  protocol.finetune_epochs = 400;
  // standard label smoothing distorts confidence by construction, so the
  // noiseless check runs its arm at a near-zero strength
  protocol.ls_alpha = 0.003;

  const ExperimentResult result = run_experiment(spec, protocol);
  for (const auto& method : result.methods) {
    CAPTURE(method.name);
    CAPTURE(method.report.ece);
    CHECK(method.report.ece <= 0.02);
    CHECK(method.report.sequence_accuracy == 1.0);
  }
}

TEST_CASE("the summary csv lists all methods with relative changes") {
  SynthTaskSpec spec = small_spec();
  spec.train_count = 200;
  spec.support_count = 100;
  spec.test_count = 100;
  ExperimentProtocol protocol;
  protocol.train_epochs = 40;
  protocol.finetune_epochs = 20;

  const ExperimentResult result = run_experiment(spec, protocol);
  const std::string csv = experiment_summary_csv(result);
  CHECK(csv.find("method,accuracy,wer,ece,ece_vs_uncalibrated,brier,brier_vs_uncalibrated") == 0);
  for (const char* name : {"uncalibrated", "ls", "ts", "sls", "casls"})
    CHECK(csv.find(name) != std::string::npos);
  CHECK(csv.find("(+0%)") != std::string::npos);  // uncalibrated row relative to itself
}

TEST_CASE("format_relative_change mirrors the signed percent style") {
  CHECK(format_relative_change(0.38, 1.0) == "(-62%)");
  CHECK(format_relative_change(6.15, 1.0) == "(+515%)");
  CHECK(format_relative_change(1.0, 1.0) == "(+0%)");
}

}  // TEST_SUITE
