#pragma once

// Aligns a predicted sequence to its reference via edit-distance backtrace,
// filling omissions and redundancies with the blank class.

#include <span>
#include <vector>

#include "seqcal/core.hpp"

namespace seqcal {

enum class EditOp : std::uint8_t { Match, Substitute, Insert, Delete };

inline char edit_op_letter(EditOp op) {
  switch (op) {
    case EditOp::Match: return 'M';
    case EditOp::Substitute: return 'S';
    case EditOp::Insert: return 'I';
    case EditOp::Delete: return 'D';
  }
  return '?';
}

// Equal-length aligned views of the two sequences. A blank in pred_aligned
// marks a token the prediction omitted (Delete); a blank in ref_aligned
// marks a redundant predicted token (Insert). No position is blank on both
// sides, and stripping blanks recovers the original sequences.
struct AlignedPair {
  std::vector<ClassId> ref_aligned;
  std::vector<ClassId> pred_aligned;
  std::vector<EditOp> ops;

  std::size_t size() const noexcept { return ops.size(); }
};

// Unit-cost Levenshtein distance.
inline int edit_distance(std::span<const ClassId> a, std::span<const ClassId> b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::vector<int> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

// Levenshtein alignment with a deterministic trace. The DP table holds
// suffix distances so the trace can walk the sequences left to right,
// preferring Match/Substitute over Delete over Insert at every tie; the op
// count therefore always equals the edit distance.
inline AlignedPair align(std::span<const ClassId> reference, std::span<const ClassId> predicted,
                         const Alphabet& alphabet) {
  for (ClassId c : reference)
    if (alphabet.is_reserved(c))
      throw Error(ErrorCode::BlankInInput, "reference contains reserved class " + std::to_string(c));
  for (ClassId c : predicted)
    if (alphabet.is_reserved(c))
      throw Error(ErrorCode::BlankInInput, "prediction contains reserved class " + std::to_string(c));

  const std::size_t n = reference.size();
  const std::size_t m = predicted.size();

  // dist[i][j] = edit distance between reference[i..n) and predicted[j..m).
  std::vector<std::vector<int>> dist(n + 1, std::vector<int>(m + 1));
  for (std::size_t j = 0; j <= m; ++j) dist[n][j] = static_cast<int>(m - j);
  for (std::size_t i = n; i-- > 0;) {
    dist[i][m] = static_cast<int>(n - i);
    for (std::size_t j = m; j-- > 0;) {
      const int sub = dist[i + 1][j + 1] + (reference[i] == predicted[j] ? 0 : 1);
      dist[i][j] = std::min({sub, dist[i + 1][j] + 1, dist[i][j + 1] + 1});
    }
  }

  AlignedPair out;
  out.ref_aligned.reserve(n + m);
  out.pred_aligned.reserve(n + m);
  out.ops.reserve(n + m);

  std::size_t i = 0, j = 0;
  const ClassId blank = alphabet.blank_id();
  while (i < n || j < m) {
    const int here = dist[i][j];
    if (i < n && j < m &&
        here == dist[i + 1][j + 1] + (reference[i] == predicted[j] ? 0 : 1)) {
      out.ref_aligned.push_back(reference[i]);
      out.pred_aligned.push_back(predicted[j]);
      out.ops.push_back(reference[i] == predicted[j] ? EditOp::Match : EditOp::Substitute);
      ++i, ++j;
    } else if (i < n && here == dist[i + 1][j] + 1) {
      out.ref_aligned.push_back(reference[i]);
      out.pred_aligned.push_back(blank);
      out.ops.push_back(EditOp::Delete);
      ++i;
    } else {
      out.ref_aligned.push_back(blank);
      out.pred_aligned.push_back(predicted[j]);
      out.ops.push_back(EditOp::Insert);
      ++j;
    }
  }
  return out;
}

}  // namespace seqcal
