#include "core/knn_stat.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace stam {

double chi2(std::span<const std::uint32_t> p, std::span<const std::uint32_t> q) {
  if (p.size() != q.size())
    fail(Err::bin_count_mismatch, "chi2: histograms have different bin counts");
  double sum = 0.0;
  for (std::size_t n = 0; n < p.size(); ++n) {
    const double a = p[n];
    const double b = q[n];
    const double s = a + b;
    if (s > 0.0) {
      const double d = a - b;
      sum += d * d / s;
    }
  }
  return 0.5 * sum;
}

double chi2(const ShapeHistogram& p, const ShapeHistogram& q) {
  return chi2(std::span<const std::uint32_t>(p.counts),
              std::span<const std::uint32_t>(q.counts));
}

namespace {

std::vector<std::uint32_t> rank_by_distance(const std::vector<double>& dist, int k) {
  std::vector<std::uint32_t> order(dist.size());
  std::iota(order.begin(), order.end(), 0u);
  const auto cmp = [&](std::uint32_t a, std::uint32_t b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    return a < b;
  };
  const auto kth = order.begin() + k;
  std::nth_element(order.begin(), kth - 1, order.end(), cmp);
  std::sort(order.begin(), kth, cmp);
  order.resize(static_cast<std::size_t>(k));
  return order;
}

}  // namespace

std::vector<std::uint32_t> knn_retrieve(const ShapeHistogram& query,
                                        std::span<const ShapeHistogram> pool, int k) {
  if (k < 2) fail(Err::degenerate_k, "knn_retrieve: K must be >= 2");
  if (pool.size() < static_cast<std::size_t>(k))
    fail(Err::pool_too_small, "knn_retrieve: pool smaller than K");
  std::vector<double> dist(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) dist[i] = chi2(query, pool[i]);
  return rank_by_distance(dist, k);
}

namespace {

KnnGaussian fit_gaussian_from_pairs(const std::vector<double>& sims, int k, double sigma2_min) {
  // Eq-style population moments over all K*(K-1)/2 pairwise similarities,
  // accumulated in pair enumeration order (i < j).
  double mean = 0.0;
  for (double s : sims) mean += s;
  mean /= static_cast<double>(sims.size());
  double var = 0.0;
  for (double s : sims) {
    const double d = s - mean;
    var += d * d;
  }
  var /= static_cast<double>(sims.size());

  KnnGaussian g;
  g.mu = mean;
  g.sigma2 = std::max(var, sigma2_min);
  g.k = k;
  return g;
}

std::vector<double> pairwise_sims(std::span<const ShapeHistogram> neighbors) {
  const std::size_t k = neighbors.size();
  std::vector<double> sims;
  sims.reserve(k * (k - 1) / 2);
  for (std::size_t i = 0; i + 1 < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) sims.push_back(chi2(neighbors[i], neighbors[j]));
  return sims;
}

}  // namespace

KnnGaussian fit_gaussian(std::span<const ShapeHistogram> neighbors, double sigma2_min) {
  if (neighbors.size() < 2)
    fail(Err::degenerate_k, "fit_gaussian: need at least 2 neighbors");
  return fit_gaussian_from_pairs(pairwise_sims(neighbors), static_cast<int>(neighbors.size()),
                                 sigma2_min);
}

double normal_survival(double z) {
  return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

namespace {

double tail_probability(double s, const KnnGaussian& g, TailMode tail, double p_min) {
  const double sigma = std::sqrt(g.sigma2);
  double p;
  if (tail == TailMode::one_sided) {
    p = s <= g.mu ? 1.0 : normal_survival((s - g.mu) / sigma);
  } else {
    p = std::erfc(std::abs(s - g.mu) / (sigma * std::numbers::sqrt2));
  }
  return std::max(p, p_min);
}

}  // namespace

AnomalyScore joint_score(const ShapeHistogram& query,
                         std::span<const ShapeHistogram> neighbors, const KnnGaussian& g,
                         TailMode tail, double p_min) {
  double log_prob = 0.0;
  for (const ShapeHistogram& nb : neighbors)
    log_prob += std::log(tail_probability(chi2(query, nb), g, tail, p_min));
  return AnomalyScore{std::min(log_prob, 0.0)};
}

namespace {

std::uint32_t joint_gcd(const ShapeHistogram& query, std::span<const ShapeHistogram> pool) {
  std::uint32_t g = 0;
  for (std::uint32_t c : query.counts) g = std::gcd(g, c);
  for (const ShapeHistogram& h : pool)
    for (std::uint32_t c : h.counts) {
      g = std::gcd(g, c);
      if (g == 1) return 1;
    }
  return g == 0 ? 1 : g;  // all-zero instance: nothing to reduce
}

std::vector<std::uint32_t> reduced_counts(const ShapeHistogram& h, std::uint32_t g) {
  std::vector<std::uint32_t> out(h.counts.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = h.counts[i] / g;
  return out;
}

}  // namespace

InstanceScore score_instance(const ShapeHistogram& query,
                             std::span<const ShapeHistogram> pool,
                             const ScoreParams& params) {
  if (params.k < 2) fail(Err::degenerate_k, "score_instance: K must be >= 2");
  if (pool.size() < static_cast<std::size_t>(params.k))
    fail(Err::pool_too_small, "score_instance: pool smaller than K");

  // Scale canonicalization: all downstream floating point sees the reduced
  // integer counts only, so globally scaled instances compute identically.
  const std::uint32_t g = joint_gcd(query, pool);
  const std::vector<std::uint32_t> q = reduced_counts(query, g);
  std::vector<std::vector<std::uint32_t>> reduced;
  reduced.reserve(pool.size());
  for (const ShapeHistogram& h : pool) reduced.push_back(reduced_counts(h, g));

  std::vector<double> dist(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i)
    dist[i] = chi2(std::span<const std::uint32_t>(q), std::span<const std::uint32_t>(reduced[i]));

  InstanceScore result;
  result.neighbor_indices = rank_by_distance(dist, params.k);

  std::vector<double> sims;
  sims.reserve(static_cast<std::size_t>(params.k) * (params.k - 1) / 2);
  for (int i = 0; i + 1 < params.k; ++i)
    for (int j = i + 1; j < params.k; ++j)
      sims.push_back(chi2(std::span<const std::uint32_t>(reduced[result.neighbor_indices[i]]),
                          std::span<const std::uint32_t>(reduced[result.neighbor_indices[j]])));
  result.gaussian = fit_gaussian_from_pairs(sims, params.k, params.sigma2_min);

  const double sigma = std::sqrt(result.gaussian.sigma2);
  result.standardized.reserve(static_cast<std::size_t>(params.k));
  double log_prob = 0.0;
  for (int i = 0; i < params.k; ++i) {
    const double s = dist[result.neighbor_indices[i]];
    result.standardized.push_back((s - result.gaussian.mu) / sigma);
    log_prob += std::log(tail_probability(s, result.gaussian, params.tail, params.p_min));
  }
  result.log_probability = std::min(log_prob, 0.0);
  return result;
}

}  // namespace stam
