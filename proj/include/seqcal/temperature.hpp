#pragma once

// Temperature-scaling baseline: softmax(logits / tau) with a scalar tau
// fitted on full-mode support records by minimizing mean per-token negative
// log-likelihood of the aligned reference tokens.

#include <cmath>
#include <span>
#include <vector>

#include "seqcal/alignment.hpp"
#include "seqcal/core.hpp"
#include "seqcal/smoothing.hpp"

namespace seqcal {

struct Temperature {
  double value = 1.0;
};

inline std::vector<std::vector<double>> apply_temperature(
    const std::vector<std::vector<double>>& logit_rows, double tau) {
  if (!(tau > 0.0)) throw Error(ErrorCode::DomainError, "temperature must be positive");
  std::vector<std::vector<double>> probs;
  probs.reserve(logit_rows.size());
  for (const auto& row : logit_rows) {
    std::vector<double> scaled(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) scaled[i] = row[i] / tau;
    probs.push_back(softmax(scaled));
  }
  return probs;
}

// Rescales a full-mode record's distributions in place of its logits, which
// are recovered as log probabilities. Argmax, and hence the predicted
// sequence, is unchanged for any tau > 0.
inline PredictionRecord rescale_record(const PredictionRecord& record, double tau) {
  if (!(tau > 0.0)) throw Error(ErrorCode::DomainError, "temperature must be positive");
  if (!record.full_mode())
    throw Error(ErrorCode::NeedsFullMode,
                "record '" + record.id + "' carries no full distributions");
  PredictionRecord out = record;
  for (auto& dist : out.dists) {
    std::vector<double> logits(dist.probs.size());
    for (std::size_t i = 0; i < logits.size(); ++i)
      logits[i] = std::log(std::max(dist.probs[i], 1e-300)) / tau;
    dist.probs = softmax(logits);
  }
  return out;
}

struct TemperatureFit {
  Temperature temperature;
  double nll_before = 0.0;  // mean token NLL at tau = 1
  double nll_after = 0.0;   // mean token NLL at the fitted tau
};

namespace detail {

// Token-level (logits, aligned reference target) pairs for the NLL
// objective. Positions the prediction omitted have no distribution and are
// skipped; redundant positions score the blank class.
struct NllSample {
  std::vector<double> logits;
  std::size_t target;
};

inline std::vector<NllSample> nll_samples(std::span<const PredictionRecord> records,
                                          const Alphabet& alphabet) {
  std::vector<NllSample> samples;
  for (const auto& record : records) {
    if (!record.full_mode())
      throw Error(ErrorCode::NeedsFullMode,
                  "record '" + record.id + "' carries no full distributions");
    const AlignedPair aligned = align(record.reference, record.predicted, alphabet);
    std::size_t pred_pos = 0;
    for (std::size_t t = 0; t < aligned.size(); ++t) {
      if (aligned.pred_aligned[t] == alphabet.blank_id()) continue;  // omission: no logits
      NllSample sample;
      const auto& probs = record.dists[pred_pos].probs;
      sample.logits.resize(probs.size());
      for (std::size_t i = 0; i < probs.size(); ++i)
        sample.logits[i] = std::log(std::max(probs[i], 1e-300));
      sample.target = static_cast<std::size_t>(aligned.ref_aligned[t]);
      samples.push_back(std::move(sample));
      ++pred_pos;
    }
  }
  return samples;
}

inline double mean_nll(const std::vector<NllSample>& samples, double tau) {
  double sum = 0.0;
  for (const auto& sample : samples) {
    std::vector<double> scaled(sample.logits.size());
    for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = sample.logits[i] / tau;
    const std::vector<double> p = softmax(scaled);
    sum -= std::log(std::max(p[sample.target], 1e-300));
  }
  return sum / static_cast<double>(samples.size());
}

}  // namespace detail

inline constexpr double kTemperatureSearchLow = 0.05;
inline constexpr double kTemperatureSearchHigh = 20.0;

// Golden-section search over [0.05, 20] to |delta tau| < 1e-4. The NLL is
// unimodal in tau, and the best point ever evaluated (seeded with the
// bracket ends and tau = 1) is returned, so the fit never loses to the
// identity transform.
inline TemperatureFit fit_temperature(std::span<const PredictionRecord> records,
                                      const Alphabet& alphabet) {
  const auto samples = detail::nll_samples(records, alphabet);
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "no scored tokens to fit on");

  const auto objective = [&](double tau) { return detail::mean_nll(samples, tau); };

  double best_tau = 1.0;
  double best_nll = objective(1.0);
  const double nll_before = best_nll;
  const auto consider = [&](double tau, double nll) {
    if (nll < best_nll) {
      best_nll = nll;
      best_tau = tau;
    }
  };

  double lo = kTemperatureSearchLow, hi = kTemperatureSearchHigh;
  consider(lo, objective(lo));
  consider(hi, objective(hi));

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - inv_phi * (hi - lo);
  double b = lo + inv_phi * (hi - lo);
  double fa = objective(a);
  double fb = objective(b);
  consider(a, fa);
  consider(b, fb);
  while (hi - lo > 1e-4) {
    if (fa <= fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - inv_phi * (hi - lo);
      fa = objective(a);
      consider(a, fa);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + inv_phi * (hi - lo);
      fb = objective(b);
      consider(b, fb);
    }
  }

  TemperatureFit fit;
  fit.temperature.value = best_tau;
  fit.nll_before = nll_before;
  fit.nll_after = best_nll;
  return fit;
}

}  // namespace seqcal
