#pragma once

// Sequence-level calibration metrics: sequence confidence, accuracy, Brier
// score, ECE with reliability-diagram bins, and word error rate.
//
// Correctness of a sequence is exact full match against the reference. An
// empty prediction asserts nothing, so it counts as wrong with confidence 0.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "seqcal/alignment.hpp"
#include "seqcal/core.hpp"
#include "seqcal/detail/json_out.hpp"

namespace seqcal {

struct ReliabilityBin {
  double lower = 0.0;
  double upper = 1.0;
  std::size_t count = 0;
  double accuracy = 0.0;
  double confidence = 0.0;
};

struct CalibrationReport {
  std::size_t n = 0;
  double sequence_accuracy = 0.0;
  double brier = 0.0;
  double ece = 0.0;
  double wer = 0.0;
  std::vector<ReliabilityBin> bins;
};

// Product of the chosen-token confidences.
inline double sequence_confidence(const PredictionRecord& record) {
  if (record.predicted.empty())
    throw Error(ErrorCode::EmptyPrediction, "record '" + record.id + "' predicts no tokens");
  double product = 1.0;
  for (std::size_t t = 0; t < record.predicted.size(); ++t)
    product *= record.chosen_confidence(t);
  return product;
}

inline bool exact_match(const PredictionRecord& record) {
  return record.predicted == record.reference;
}

namespace detail {

// Confidence used by the aggregate metrics; empty predictions score 0.
inline double metric_confidence(const PredictionRecord& record) {
  return record.predicted.empty() ? 0.0 : sequence_confidence(record);
}

}  // namespace detail

inline double brier_score(std::span<const PredictionRecord> records) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no records to score");
  double sum = 0.0;
  for (const auto& record : records) {
    const double gap = (exact_match(record) ? 1.0 : 0.0) - detail::metric_confidence(record);
    sum += gap * gap;
  }
  return sum / static_cast<double>(records.size());
}

// Equal-width bins over [0, 1]; bin m covers ((m-1)/M, m/M] with the first
// bin closed at 0. Returns all M bins; empty bins contribute nothing.
inline std::pair<double, std::vector<ReliabilityBin>> ece(std::span<const PredictionRecord> records,
                                                          int num_bins) {
  if (num_bins < 1) throw Error(ErrorCode::DomainError, "bin count must be positive");
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no records to bin");

  std::vector<ReliabilityBin> bins(static_cast<std::size_t>(num_bins));
  std::vector<double> conf_sum(bins.size(), 0.0);
  std::vector<std::size_t> correct(bins.size(), 0);
  for (std::size_t m = 0; m < bins.size(); ++m) {
    bins[m].lower = static_cast<double>(m) / num_bins;
    bins[m].upper = static_cast<double>(m + 1) / num_bins;
  }

  for (const auto& record : records) {
    const double confidence = detail::metric_confidence(record);
    // First bin whose upper bound covers the confidence, so membership is
    // exact with respect to the reported bin edges.
    std::size_t m = 0;
    while (m + 1 < bins.size() && confidence > bins[m].upper) ++m;
    bins[m].count += 1;
    conf_sum[m] += confidence;
    if (exact_match(record)) correct[m] += 1;
  }

  double total = 0.0;
  for (std::size_t m = 0; m < bins.size(); ++m) {
    if (bins[m].count == 0) continue;
    bins[m].accuracy = static_cast<double>(correct[m]) / static_cast<double>(bins[m].count);
    bins[m].confidence = conf_sum[m] / static_cast<double>(bins[m].count);
    total += static_cast<double>(bins[m].count) / static_cast<double>(records.size()) *
             std::abs(bins[m].accuracy - bins[m].confidence);
  }
  return {total, std::move(bins)};
}

// Total edit distance over total reference length.
inline double wer(std::span<const PredictionRecord> records) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no records to score");
  std::uint64_t errors = 0;
  std::uint64_t ref_tokens = 0;
  for (const auto& record : records) {
    errors += static_cast<std::uint64_t>(edit_distance(record.reference, record.predicted));
    ref_tokens += record.reference.size();
  }
  if (ref_tokens == 0) throw Error(ErrorCode::EmptyInput, "references contain no tokens");
  return static_cast<double>(errors) / static_cast<double>(ref_tokens);
}

inline CalibrationReport evaluate(std::span<const PredictionRecord> records, int num_bins) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no records to evaluate");
  CalibrationReport report;
  report.n = records.size();
  std::size_t correct = 0;
  for (const auto& record : records) correct += exact_match(record) ? 1 : 0;
  report.sequence_accuracy = static_cast<double>(correct) / static_cast<double>(records.size());
  report.brier = brier_score(records);
  auto [ece_value, bins] = ece(records, num_bins);
  report.ece = ece_value;
  report.bins = std::move(bins);
  report.wer = wer(records);
  return report;
}

inline double mean_sequence_confidence(std::span<const PredictionRecord> records) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no records");
  double sum = 0.0;
  for (const auto& record : records) sum += detail::metric_confidence(record);
  return sum / static_cast<double>(records.size());
}

inline std::string report_to_json(const CalibrationReport& report) {
  detail::JsonWriter w;
  w.begin_object();
  w.key("n").value(report.n);
  w.key("sequence_accuracy").value(report.sequence_accuracy);
  w.key("brier").value(report.brier);
  w.key("ece").value(report.ece);
  w.key("wer").value(report.wer);
  w.key("bins").begin_array();
  for (const auto& bin : report.bins) {
    w.begin_object();
    w.key("lower").value(bin.lower);
    w.key("upper").value(bin.upper);
    w.key("count").value(bin.count);
    w.key("accuracy").value(bin.accuracy);
    w.key("confidence").value(bin.confidence);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str();
}

}  // namespace seqcal
