#include <algorithm>
#include <cmath>

#include "larc/error.hpp"
#include "larc/learn.hpp"

namespace larc {
namespace {

double relu(double x) { return x > 0.0 ? x : 0.0; }

std::size_t square_side(const Tensor& p, const char* op) {
  if (p.rank() != 2 || p.dim(0) != p.dim(1)) {
    fail(ErrorCode::kNonSquare, std::string(op) + ": expected a square matrix");
  }
  return p.dim(0);
}

}  // namespace

double prediction_loss(std::span<const double> scores, std::size_t answer) {
  if (answer >= scores.size()) {
    fail(ErrorCode::kOutOfRange, "answer " + std::to_string(answer) + " out of range for " +
                                     std::to_string(scores.size()) + " objects");
  }
  const double m = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double s : scores) z += std::exp(s - m);
  return m + std::log(z) - scores[answer];
}

double symmetry_loss(const Tensor& p) {
  const std::size_t n = square_side(p, "symmetry_loss");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d = p.at(i, j) - p.at(j, i);
      sum += d * d;
    }
  }
  return sum;
}

double exclusivity_loss(const Tensor& p) {
  const std::size_t n = square_side(p, "exclusivity_loss");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) sum += relu(p.at(i, j)) * relu(p.at(j, i));
    }
  }
  return sum;
}

double sparsity_loss(const Tensor& t) {
  double sum = 0.0;
  if (t.rank() == 2) {
    const std::size_t n = square_side(t, "sparsity_loss");
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) sum += std::abs(t.at(i, j));
      }
    }
  } else if (t.rank() == 3) {
    const std::size_t n = t.dim(0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k) {
          if (!is_masked_slot(i, j, k)) sum += std::abs(t.at(i, j, k));
        }
      }
    }
  } else {
    for (double v : t.data) sum += std::abs(v);
  }
  return sum;
}

void LossWeights::validate() const {
  for (double w : {alpha, beta, gamma}) {
    if (!std::isfinite(w) || w < 0.0) {
      fail(ErrorCode::kInvalidConfig, "loss weights must be finite and non-negative");
    }
  }
  if (!(synonym_aug_prob >= 0.0 && synonym_aug_prob <= 1.0)) {
    fail(ErrorCode::kInvalidConfig, "synonym augmentation probability must lie in [0, 1]");
  }
}

LossTerms total_loss(ad::Tape& tape, const ExecutionTrace& trace, std::size_t answer,
                     const RuleSet& rules, const LossWeights& weights) {
  for (const auto& c : rules.symmetric) {
    if (rules.is_exclusive(c)) {
      fail(ErrorCode::kInconsistentRules, "'" + c + "' is both symmetric and exclusive");
    }
  }
  LossTerms out;
  std::vector<ad::Var> terms{tape.cross_entropy(trace.final, answer)};
  std::vector<double> coeffs{1.0};
  out.prediction = tape.value(terms[0])[0];

  for (const RelationUse& use : trace.relation_uses) {
    if (use.arity == 2 && rules.is_symmetric(use.concept_name)) {
      terms.push_back(tape.symmetry_loss(use.scores));
      coeffs.push_back(weights.alpha);
      out.symmetry += tape.value(terms.back())[0];
    }
    if (use.arity == 2 && rules.is_exclusive(use.concept_name)) {
      terms.push_back(tape.exclusivity_loss(use.scores));
      coeffs.push_back(weights.beta);
      out.exclusivity += tape.value(terms.back())[0];
    }
    terms.push_back(tape.sparsity_loss(use.scores));
    coeffs.push_back(weights.gamma);
    out.sparsity += tape.value(terms.back())[0];
  }
  out.total = tape.weighted_sum(terms, coeffs);
  out.value = tape.value(out.total)[0];
  return out;
}

}  // namespace larc
