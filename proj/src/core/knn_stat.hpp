#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "core/descriptor.hpp"

namespace stam {

/// Chi-square distance between two bin-count histograms:
/// 0.5 * sum_n (h_p(n) - h_q(n))^2 / (h_p(n) + h_q(n)),
/// skipping bins where both counts are zero. Symmetric, non-negative, and
/// zero exactly when the histograms are equal.
double chi2(std::span<const std::uint32_t> p, std::span<const std::uint32_t> q);
double chi2(const ShapeHistogram& p, const ShapeHistogram& q);

/// Indices of the K pool entries with the smallest chi2 distance to the
/// query, ordered by ascending (distance, index); ties break toward the
/// lower pool index.
std::vector<std::uint32_t> knn_retrieve(const ShapeHistogram& query,
                                        std::span<const ShapeHistogram> pool, int k);

/// Gaussian over the pairwise chi2 similarities of a neighbor set.
struct KnnGaussian {
  double mu = 0.0;
  double sigma2 = 0.0;
  int k = 0;
};

/// Mean and population variance of the K*(K-1)/2 pairwise similarities,
/// with the variance floored at sigma2_min so degenerate (all-identical)
/// neighbor sets cannot produce infinite standardized scores.
KnnGaussian fit_gaussian(std::span<const ShapeHistogram> neighbors,
                         double sigma2_min = 1e-6);

enum class TailMode {
  one_sided,  // only excessive dissimilarity counts as unlikely
  two_sided,  // deviation in either direction counts
};

/// Joint log-probability of the query's similarities to its neighbors under
/// the Gaussian. Per neighbor, p = P(similarity as extreme as observed);
/// with the one-sided tail, similarities at or below the mean get p = 1.
/// Probabilities are floored at p_min, so the sum of logs stays finite.
/// Always <= 0.
struct AnomalyScore {
  double log_probability = 0.0;
};

AnomalyScore joint_score(const ShapeHistogram& query,
                         std::span<const ShapeHistogram> neighbors, const KnnGaussian& g,
                         TailMode tail = TailMode::one_sided, double p_min = 1e-12);

/// Strict threshold test: anomalous iff L < threshold.
inline bool is_anomalous(const AnomalyScore& score, double threshold) {
  return score.log_probability < threshold;
}

/// Full scoring result of one (query, pool) instance.
struct InstanceScore {
  std::vector<std::uint32_t> neighbor_indices;  // ascending (distance, index)
  std::vector<double> standardized;             // (s_k - mu) / sigma per neighbor
  KnnGaussian gaussian;                          // fitted in the scale-canonical domain
  double log_probability = 0.0;
};

struct ScoreParams {
  int k = 20;
  double sigma2_min = 1e-6;
  double p_min = 1e-12;
  TailMode tail = TailMode::one_sided;
};

/// Retrieve-fit-score pipeline over one query and its candidate pool.
///
/// Before any arithmetic, every count is divided by the joint GCD of all
/// counts in the instance. Multiplying all counts by a common integer
/// multiplies that GCD by the same integer, so the scaled instance reduces
/// to bit-identical inputs: rankings, standardized scores, log-probabilities
/// and threshold decisions are exactly invariant under global count scaling
/// (the chi2 distance itself is equivariant: scaling counts by c scales it
/// by c). The variance floor is applied after reduction for the same reason.
InstanceScore score_instance(const ShapeHistogram& query,
                             std::span<const ShapeHistogram> pool,
                             const ScoreParams& params);

/// Upper-tail survival probability of the standard normal at z.
double normal_survival(double z);

}  // namespace stam
