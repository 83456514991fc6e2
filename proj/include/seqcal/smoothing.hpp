#pragma once

// Soft-target generation for the three smoothing modes, the per-sequence
// adaptive smoothing strength, and the smoothed cross-entropy loss with its
// logit gradient.
//
// Selective modes move off-target mass in proportion to the confusion row of
// the target class. As written, that row weighting is alpha * c[y][k] /
// rowsum(y) including the diagonal, so the target sums to less than one
// whenever the class was ever predicted correctly. Renormalized mode divides
// by the off-diagonal row sum instead, which always yields a probability
// distribution; both behaviors are kept behind the config flag.

#include <cmath>
#include <span>
#include <vector>

#include "seqcal/confusion.hpp"
#include "seqcal/core.hpp"

namespace seqcal {

using SoftTarget = std::vector<double>;

enum class SmoothingMode { LS, SLS, CASLS };
enum class Normalization { AsWritten, Renormalized };

struct SmoothingConfig {
  SmoothingMode mode = SmoothingMode::CASLS;
  double alpha_prime = 0.05;  // sequence-level strength
  double threshold = 0.5;     // error-prone threshold used when deriving sets
  bool adaptive = true;       // per-token alpha from sequence length
  Normalization normalization = Normalization::Renormalized;

  void validate() const {
    if (!(alpha_prime > 0.0) || !(alpha_prime < 1.0))
      throw Error(ErrorCode::DomainError, "alpha_prime must lie in (0, 1)");
    if (threshold < 0.0 || threshold >= 1.0)
      throw Error(ErrorCode::DomainError, "threshold must lie in [0, 1)");
  }
};

// Per-sequence strength alpha = 1 - (1 - alpha')^(1/L), so that the product
// of per-token retained mass (1 - alpha)^L equals 1 - alpha'.
inline double adaptive_alpha(double alpha_prime, int length) {
  if (!(alpha_prime > 0.0) || !(alpha_prime < 1.0))
    throw Error(ErrorCode::DomainError, "alpha_prime must lie in (0, 1)");
  if (length < 1) throw Error(ErrorCode::DomainError, "sequence length must be positive");
  return 1.0 - std::pow(1.0 - alpha_prime, 1.0 / static_cast<double>(length));
}

// Uniform smoothing: 1 - alpha on the target class, alpha / (K_total - 1)
// elsewhere.
inline SoftTarget smooth_ls(ClassId target, double alpha, int k_total) {
  if (target < 0 || target >= k_total)
    throw Error(ErrorCode::IndexOutOfRange, "class id " + std::to_string(target));
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw Error(ErrorCode::DomainError, "alpha must lie in (0, 1)");
  SoftTarget q(static_cast<std::size_t>(k_total), alpha / static_cast<double>(k_total - 1));
  q[static_cast<std::size_t>(target)] = 1.0 - alpha;
  return q;
}

inline SoftTarget one_hot(ClassId target, int k_total) {
  SoftTarget q(static_cast<std::size_t>(k_total), 0.0);
  q[static_cast<std::size_t>(target)] = 1.0;
  return q;
}

// Selective smoothing against one confusion matrix: classes outside the
// error-prone set keep their one-hot target; error-prone classes give up
// alpha, spread over the row's confusions.
inline SoftTarget smooth_sls(ClassId target, double alpha, const ConfusionMatrix& matrix,
                             const std::set<ClassId>& error_prone, Normalization normalization) {
  const int k_total = matrix.k_total();
  if (target < 0 || target >= k_total)
    throw Error(ErrorCode::IndexOutOfRange, "class id " + std::to_string(target));
  if (error_prone.count(target) == 0) return one_hot(target, k_total);
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw Error(ErrorCode::DomainError, "alpha must lie in (0, 1)");

  const std::uint64_t denominator = normalization == Normalization::AsWritten
                                        ? matrix.row_total(target)
                                        : matrix.off_diagonal_row_total(target);
  if (denominator == 0)
    throw Error(ErrorCode::EmptyRow,
                "class " + std::to_string(target) + " is error-prone but has no confusion mass");

  SoftTarget q(static_cast<std::size_t>(k_total), 0.0);
  const auto& rows = matrix.rows();
  const auto row = rows.find(target);
  for (const auto& [pred, count] : row->second) {
    if (pred == target) continue;
    q[static_cast<std::size_t>(pred)] =
        alpha * static_cast<double>(count) / static_cast<double>(denominator);
  }
  q[static_cast<std::size_t>(target)] = 1.0 - alpha;
  return q;
}

// Context-aware selective smoothing: same arithmetic on the confusion slice
// of the preceding token's class. Unseen contexts fall back to one-hot.
inline SoftTarget smooth_casls(ClassId target, ClassId previous, double alpha,
                               const ContextConfusionStats& stats, const ErrorProneSets& sets,
                               Normalization normalization) {
  const ConfusionMatrix* matrix = stats.context(previous);
  if (matrix == nullptr) return one_hot(target, stats.alphabet().k_total());
  auto it = sets.per_context.find(previous);
  static const std::set<ClassId> kEmpty;
  const std::set<ClassId>& error_prone = it == sets.per_context.end() ? kEmpty : it->second;
  return smooth_sls(target, alpha, *matrix, error_prone, normalization);
}

// Emits one target per reference token, with the preceding reference token
// (start-of-sequence at t=0) as the context and a single per-sequence alpha.
inline std::vector<SoftTarget> sequence_targets(std::span<const ClassId> reference,
                                                const SmoothingConfig& config,
                                                const ContextConfusionStats& stats,
                                                const ErrorProneSets& sets,
                                                const Alphabet& alphabet) {
  if (reference.empty())
    throw Error(ErrorCode::EmptyInput, "cannot build targets for an empty reference");
  for (ClassId c : reference)
    if (!alphabet.is_ordinary(c))
      throw Error(ErrorCode::IndexOutOfRange,
                  "reference contains non-ordinary class " + std::to_string(c));
  config.validate();

  const double alpha = config.adaptive
                           ? adaptive_alpha(config.alpha_prime, static_cast<int>(reference.size()))
                           : config.alpha_prime;

  std::vector<SoftTarget> targets;
  targets.reserve(reference.size());
  ClassId previous = alphabet.sos_id();
  for (ClassId token : reference) {
    switch (config.mode) {
      case SmoothingMode::LS:
        targets.push_back(smooth_ls(token, alpha, alphabet.k_total()));
        break;
      case SmoothingMode::SLS:
        targets.push_back(
            smooth_sls(token, alpha, stats.global(), sets.global_set, config.normalization));
        break;
      case SmoothingMode::CASLS:
        targets.push_back(
            smooth_casls(token, previous, alpha, stats, sets, config.normalization));
        break;
    }
    previous = token;
  }
  return targets;
}

struct LossResult {
  double loss = 0.0;
  std::vector<std::vector<double>> gradient;  // d loss / d logit, per token
};

inline std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  double max_logit = logits[0];
  for (double v : logits) max_logit = std::max(max_logit, v);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - max_logit);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

// Smoothed cross entropy: -(1/L) sum_t sum_k q_t(k) log softmax(logits_t)(k),
// with gradient (softmax - q) / L per token.
inline LossResult smoothed_cross_entropy(const std::vector<std::vector<double>>& logit_rows,
                                         const std::vector<SoftTarget>& targets) {
  if (logit_rows.size() != targets.size())
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(logit_rows.size()) + " logit rows for " +
                    std::to_string(targets.size()) + " targets");
  if (logit_rows.empty()) throw Error(ErrorCode::EmptyInput, "no tokens to score");

  const double length = static_cast<double>(logit_rows.size());
  LossResult result;
  result.gradient.reserve(logit_rows.size());
  for (std::size_t t = 0; t < logit_rows.size(); ++t) {
    const auto& logits = logit_rows[t];
    const auto& q = targets[t];
    if (logits.size() != q.size())
      throw Error(ErrorCode::LengthMismatch, "logit row and target sizes differ at token " +
                                                 std::to_string(t));
    std::vector<double> p = softmax(logits);
    std::vector<double> grad(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (q[k] != 0.0) result.loss -= q[k] * std::log(std::max(p[k], 1e-300));
      grad[k] = (p[k] - q[k]) / length;
    }
    result.gradient.push_back(std::move(grad));
  }
  result.loss /= length;
  return result;
}

}  // namespace seqcal
