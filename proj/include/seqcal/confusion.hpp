#pragma once

// Confusion statistics over aligned prediction/reference pairs: a global
// matrix plus one matrix per previous-token class, and the error-prone sets
// derived from their row error rates.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "seqcal/alignment.hpp"
#include "seqcal/core.hpp"
#include "seqcal/detail/json_out.hpp"

namespace seqcal {

// Sparse count matrix: rows and columns absent until observed. counts(i, j)
// is the number of aligned positions with reference class i predicted as j.
class ConfusionMatrix {
 public:
  using Row = std::map<ClassId, std::uint64_t>;

  explicit ConfusionMatrix(int k_total) : k_total_(k_total) {}

  int k_total() const noexcept { return k_total_; }

  void add(ClassId ref, ClassId pred, std::uint64_t count = 1) {
    check_index(ref);
    check_index(pred);
    rows_[ref][pred] += count;
    total_ += count;
  }

  std::uint64_t counts(ClassId ref, ClassId pred) const {
    auto row = rows_.find(ref);
    if (row == rows_.end()) return 0;
    auto cell = row->second.find(pred);
    return cell == row->second.end() ? 0 : cell->second;
  }

  std::uint64_t row_total(ClassId ref) const {
    auto row = rows_.find(ref);
    if (row == rows_.end()) return 0;
    std::uint64_t sum = 0;
    for (const auto& [pred, count] : row->second) sum += count;
    return sum;
  }

  std::uint64_t off_diagonal_row_total(ClassId ref) const {
    return row_total(ref) - counts(ref, ref);
  }

  std::uint64_t total() const noexcept { return total_; }

  // 1 - c[i][i] / sum_j c[i][j]; undefined for rows never observed.
  std::optional<double> row_error_rate(ClassId ref) const {
    const std::uint64_t sum = row_total(ref);
    if (sum == 0) return std::nullopt;
    return 1.0 - static_cast<double>(counts(ref, ref)) / static_cast<double>(sum);
  }

  const std::map<ClassId, Row>& rows() const noexcept { return rows_; }

  void merge_from(const ConfusionMatrix& other) {
    if (other.k_total_ != k_total_)
      throw Error(ErrorCode::AlphabetMismatch,
                  "cannot merge confusion matrices over " + std::to_string(other.k_total_) +
                      " and " + std::to_string(k_total_) + " classes");
    for (const auto& [ref, row] : other.rows_)
      for (const auto& [pred, count] : row) add(ref, pred, count);
  }

  friend bool operator==(const ConfusionMatrix& a, const ConfusionMatrix& b) {
    return a.k_total_ == b.k_total_ && a.rows_ == b.rows_;
  }

 private:
  void check_index(ClassId c) const {
    if (c < 0 || c >= k_total_)
      throw Error(ErrorCode::IndexOutOfRange, "class id " + std::to_string(c));
  }

  int k_total_;
  std::uint64_t total_ = 0;
  std::map<ClassId, Row> rows_;
};

// Per-previous-class confusion matrices plus the global matrix as their
// running sum. The context of an aligned position is the nearest preceding
// non-blank reference token, or start-of-sequence when there is none.
class ContextConfusionStats {
 public:
  explicit ContextConfusionStats(const Alphabet& alphabet)
      : alphabet_(alphabet), global_(alphabet.k_total()) {}

  const Alphabet& alphabet() const noexcept { return alphabet_; }
  const ConfusionMatrix& global() const noexcept { return global_; }
  const std::map<ClassId, ConfusionMatrix>& per_context() const noexcept { return per_context_; }

  const ConfusionMatrix* context(ClassId k) const {
    auto it = per_context_.find(k);
    return it == per_context_.end() ? nullptr : &it->second;
  }

  void add_count(ClassId context, ClassId ref, ClassId pred, std::uint64_t count = 1) {
    context_matrix(context).add(ref, pred, count);
    global_.add(ref, pred, count);
  }

  void accumulate(const AlignedPair& aligned) {
    const ClassId blank = alphabet_.blank_id();
    ClassId context = alphabet_.sos_id();
    for (std::size_t t = 0; t < aligned.size(); ++t) {
      const ClassId ref = aligned.ref_aligned[t];
      add_count(context, ref, aligned.pred_aligned[t]);
      if (ref != blank) context = ref;
    }
  }

  void merge_from(const ContextConfusionStats& other) {
    if (other.alphabet_.k_total() != alphabet_.k_total())
      throw Error(ErrorCode::AlphabetMismatch, "cannot merge stats over different alphabets");
    global_.merge_from(other.global_);
    for (const auto& [k, matrix] : other.per_context_) context_matrix(k).merge_from(matrix);
  }

 private:
  ConfusionMatrix& context_matrix(ClassId k) {
    auto it = per_context_.find(k);
    if (it == per_context_.end())
      it = per_context_.emplace(k, ConfusionMatrix(alphabet_.k_total())).first;
    return it->second;
  }

  Alphabet alphabet_;
  ConfusionMatrix global_;
  std::map<ClassId, ConfusionMatrix> per_context_;
};

inline ContextConfusionStats merge(const ContextConfusionStats& a, const ContextConfusionStats& b) {
  ContextConfusionStats out = a;
  out.merge_from(b);
  return out;
}

// Classes whose confusion row has positive support and an error rate
// strictly above the threshold.
struct ErrorProneSets {
  double threshold = 0.0;
  std::set<ClassId> global_set;
  std::map<ClassId, std::set<ClassId>> per_context;

  bool context_contains(ClassId context, ClassId cls) const {
    auto it = per_context.find(context);
    return it != per_context.end() && it->second.count(cls) > 0;
  }
};

inline std::set<ClassId> error_prone_set(const ConfusionMatrix& matrix, double threshold) {
  std::set<ClassId> out;
  for (const auto& [ref, row] : matrix.rows()) {
    const auto rate = matrix.row_error_rate(ref);
    if (rate && *rate > threshold) out.insert(ref);
  }
  return out;
}

inline ErrorProneSets error_prone_sets(const ContextConfusionStats& stats, double threshold) {
  if (threshold < 0.0 || threshold >= 1.0)
    throw Error(ErrorCode::DomainError, "error-prone threshold must lie in [0, 1)");
  ErrorProneSets out;
  out.threshold = threshold;
  out.global_set = error_prone_set(stats.global(), threshold);
  for (const auto& [k, matrix] : stats.per_context()) {
    auto set = error_prone_set(matrix, threshold);
    if (!set.empty()) out.per_context.emplace(k, std::move(set));
  }
  return out;
}

// Serialized stats file: sparse, string-keyed, contexts sorted numerically.
// The global matrix is not stored; it is rebuilt as the sum over contexts.
inline std::string stats_to_json(const ContextConfusionStats& stats) {
  detail::JsonWriter w;
  w.begin_object();
  w.key("K_total").value(stats.alphabet().k_total());
  w.key("contexts").begin_object();
  for (const auto& [k, matrix] : stats.per_context()) {
    w.key(std::to_string(k)).begin_object();
    w.key("rows").begin_object();
    for (const auto& [ref, row] : matrix.rows()) {
      w.key(std::to_string(ref)).begin_object();
      for (const auto& [pred, count] : row) w.key(std::to_string(pred)).value(count);
      w.end_object();
    }
    w.end_object();
    w.end_object();
  }
  w.end_object();
  w.end_object();
  return w.str();
}

inline ContextConfusionStats stats_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad stats file: ") + e.what());
  }
  try {
    const int k_total = j.at("K_total").get<int>();
    if (k_total < 4) throw Error(ErrorCode::ParseError, "stats K_total must be at least 4");
    ContextConfusionStats stats{Alphabet(k_total - 2)};
    for (const auto& [context_key, context_value] : j.at("contexts").items()) {
      const ClassId context = static_cast<ClassId>(std::stol(context_key));
      for (const auto& [ref_key, row] : context_value.at("rows").items()) {
        const ClassId ref = static_cast<ClassId>(std::stol(ref_key));
        for (const auto& [pred_key, count] : row.items()) {
          const ClassId pred = static_cast<ClassId>(std::stol(pred_key));
          stats.add_count(context, ref, pred, count.get<std::uint64_t>());
        }
      }
    }
    return stats;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad stats field: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw Error(ErrorCode::ParseError, "stats file keys must be integers");
  } catch (const std::out_of_range&) {
    throw Error(ErrorCode::ParseError, "stats file key out of range");
  }
}

}  // namespace seqcal
