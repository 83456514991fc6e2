#pragma once

// Token vocabulary, per-token probability distributions and the prediction
// record data model shared by every other component of the toolkit.
//
// The full class space has K_total = K + 2 indices: K ordinary classes in
// [0, K), then the blank filler used by sequence alignment, then the
// start-of-sequence class used as the context of the first token.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace seqcal {

using ClassId = std::int32_t;

enum class ErrorCode {
  IndexOutOfRange,
  LengthMismatch,
  NotADistribution,
  ArgmaxMismatch,
  BlankInInput,
  AlphabetMismatch,
  EmptyRow,
  DomainError,
  NeedsFullMode,
  MissingStats,
  EmptyInput,
  EmptyPrediction,
  SpecInvalid,
  ParseError,
  IoError,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NotADistribution: return "NotADistribution";
    case ErrorCode::ArgmaxMismatch: return "ArgmaxMismatch";
    case ErrorCode::BlankInInput: return "BlankInInput";
    case ErrorCode::AlphabetMismatch: return "AlphabetMismatch";
    case ErrorCode::EmptyRow: return "EmptyRow";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::NeedsFullMode: return "NeedsFullMode";
    case ErrorCode::MissingStats: return "MissingStats";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyPrediction: return "EmptyPrediction";
    case ErrorCode::SpecInvalid: return "SpecInvalid";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// K ordinary classes plus blank and start-of-sequence as the last two
// indices, so confusion matrices and soft targets need no special-case
// dimensions. Class indices are dense over [0, k_total()).
class Alphabet {
 public:
  explicit Alphabet(int k, std::vector<std::string> names = {}) : k_(k), names_(std::move(names)) {
    if (k_ < 2) throw Error(ErrorCode::DomainError, "alphabet needs at least 2 ordinary classes");
    if (!names_.empty() && static_cast<int>(names_.size()) != k_)
      throw Error(ErrorCode::LengthMismatch, "expected one display name per ordinary class");
  }

  int k() const noexcept { return k_; }
  int k_total() const noexcept { return k_ + 2; }
  ClassId blank_id() const noexcept { return k_; }
  ClassId sos_id() const noexcept { return k_ + 1; }

  bool contains(ClassId c) const noexcept { return c >= 0 && c < k_total(); }
  bool is_ordinary(ClassId c) const noexcept { return c >= 0 && c < k_; }
  bool is_reserved(ClassId c) const noexcept { return c == blank_id() || c == sos_id(); }

  std::string name(ClassId c) const {
    if (!contains(c)) throw Error(ErrorCode::IndexOutOfRange, "class id " + std::to_string(c));
    if (c == blank_id()) return "<blank>";
    if (c == sos_id()) return "<sos>";
    if (!names_.empty()) return names_[static_cast<std::size_t>(c)];
    return std::to_string(c);
  }

 private:
  int k_;
  std::vector<std::string> names_;
};

// A probability vector over the full class space.
struct TokenDistribution {
  std::vector<double> probs;

  std::size_t argmax() const {
    return static_cast<std::size_t>(
        std::max_element(probs.begin(), probs.end()) - probs.begin());
  }
};

inline constexpr double kDistributionSumTolerance = 1e-9;

enum class ConfidenceMode { Scalar, Full };

// One sequence sample from a prediction log. Scalar mode keeps only the
// chosen-token confidence per position; full mode keeps the whole
// distribution and is required for temperature scaling and loss work.
struct PredictionRecord {
  std::string id;
  std::vector<ClassId> reference;
  std::vector<ClassId> predicted;
  ConfidenceMode mode = ConfidenceMode::Scalar;
  std::vector<double> confidences;          // scalar mode, one per predicted token
  std::vector<TokenDistribution> dists;     // full mode, one per predicted token

  bool full_mode() const noexcept { return mode == ConfidenceMode::Full; }

  // Chosen-token confidence at position t, valid in either mode.
  double chosen_confidence(std::size_t t) const {
    if (full_mode()) return dists[t].probs[static_cast<std::size_t>(predicted[t])];
    return confidences[t];
  }
};

inline bool operator==(const TokenDistribution& a, const TokenDistribution& b) {
  return a.probs == b.probs;
}

inline bool operator==(const PredictionRecord& a, const PredictionRecord& b) {
  return a.id == b.id && a.reference == b.reference && a.predicted == b.predicted &&
         a.mode == b.mode && a.confidences == b.confidences && a.dists == b.dists;
}

// Checks every record invariant against the alphabet and returns the record
// unchanged. Idempotent by construction.
inline const PredictionRecord& validate_record(const PredictionRecord& record,
                                               const Alphabet& alphabet) {
  if (record.reference.empty())
    throw Error(ErrorCode::EmptyInput, "record '" + record.id + "' has an empty reference");
  for (ClassId c : record.reference) {
    if (!alphabet.is_ordinary(c))
      throw Error(ErrorCode::IndexOutOfRange,
                  "record '" + record.id + "' reference contains class " + std::to_string(c));
  }
  for (ClassId c : record.predicted) {
    if (!alphabet.contains(c))
      throw Error(ErrorCode::IndexOutOfRange,
                  "record '" + record.id + "' prediction contains class " + std::to_string(c));
  }

  const std::size_t n = record.predicted.size();
  if (record.full_mode()) {
    if (record.dists.size() != n)
      throw Error(ErrorCode::LengthMismatch,
                  "record '" + record.id + "' has " + std::to_string(record.dists.size()) +
                      " distributions for " + std::to_string(n) + " predicted tokens");
    for (std::size_t t = 0; t < n; ++t) {
      const auto& probs = record.dists[t].probs;
      if (probs.size() != static_cast<std::size_t>(alphabet.k_total()))
        throw Error(ErrorCode::LengthMismatch,
                    "record '" + record.id + "' distribution " + std::to_string(t) + " has " +
                        std::to_string(probs.size()) + " entries, expected " +
                        std::to_string(alphabet.k_total()));
      double sum = 0.0;
      for (double p : probs) {
        if (!(p >= 0.0))
          throw Error(ErrorCode::NotADistribution,
                      "record '" + record.id + "' distribution " + std::to_string(t) +
                          " has a negative entry");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kDistributionSumTolerance)
        throw Error(ErrorCode::NotADistribution,
                    "record '" + record.id + "' distribution " + std::to_string(t) +
                        " sums to " + std::to_string(sum));
      const double max_p = *std::max_element(probs.begin(), probs.end());
      if (probs[static_cast<std::size_t>(record.predicted[t])] != max_p)
        throw Error(ErrorCode::ArgmaxMismatch,
                    "record '" + record.id + "' distribution " + std::to_string(t) +
                        " does not peak at predicted class " +
                        std::to_string(record.predicted[t]));
    }
  } else {
    if (record.confidences.size() != n)
      throw Error(ErrorCode::LengthMismatch,
                  "record '" + record.id + "' has " + std::to_string(record.confidences.size()) +
                      " confidences for " + std::to_string(n) + " predicted tokens");
    for (double c : record.confidences) {
      if (!(c > 0.0) || c > 1.0)
        throw Error(ErrorCode::NotADistribution,
                    "record '" + record.id + "' confidence " + std::to_string(c) +
                        " is outside (0, 1]");
    }
  }
  return record;
}

}  // namespace seqcal
