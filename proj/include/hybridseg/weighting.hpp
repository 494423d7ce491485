// hybridseg - point-cloud primitive segmentation and implicit-field toolkit
// SPDX-License-Identifier: MIT
//
// Entropy-based adaptive feature weighting. Features whose rows form tight
// clusters have low kernel-density entropy and receive large weights:
//   w_l = (1/H_l) / sqrt(sum_l (1/H_l)^2),  so  sum w_l^2 = 1.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "hybridseg/parallel.hpp"
#include "hybridseg/rng.hpp"

namespace hybridseg {

struct Feature {
  std::string name;
  Eigen::MatrixXd values;  // N x m_l
  double sigma = 0.0;      // kernel bandwidth; <= 0 requests the default
  int group = 0;           // weighting group (one descriptor family each)
};

struct FeatureSet {
  std::vector<Feature> features;

  Eigen::Index rows() const {
    return features.empty() ? 0 : features.front().values.rows();
  }

  void validate() const {
    if (features.empty()) throw std::invalid_argument("empty feature set");
    for (const auto& f : features) {
      if (f.values.rows() != rows())
        throw std::invalid_argument("feature " + f.name + " row mismatch");
      if (f.values.cols() < 1)
        throw std::invalid_argument("feature " + f.name + " has no columns");
    }
  }
};

namespace detail {

inline std::vector<Eigen::Index> row_sample(Eigen::Index n, Eigen::Index cap,
                                            std::uint64_t seed) {
  std::vector<Eigen::Index> pick;
  if (n <= cap) {
    pick.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) pick[static_cast<std::size_t>(i)] = i;
  } else {
    Rng rng(seed);
    pick.resize(static_cast<std::size_t>(cap));
    for (auto& p : pick) p = static_cast<Eigen::Index>(rng.uniform_index(n));
  }
  return pick;
}

}  // namespace detail

/// Median pairwise row distance over at most `sample` rows; the default
/// mean-shift bandwidth scale.
inline double median_pairwise_distance(const Eigen::MatrixXd& rows,
                                       Eigen::Index sample = 2000,
                                       std::uint64_t seed = 11) {
  const auto pick = detail::row_sample(rows.rows(), sample, seed);
  std::vector<double> dists;
  dists.reserve(pick.size() * (pick.size() - 1) / 2);
  for (std::size_t i = 0; i < pick.size(); ++i)
    for (std::size_t j = i + 1; j < pick.size(); ++j)
      dists.push_back((rows.row(pick[i]) - rows.row(pick[j])).norm());
  if (dists.empty()) return 0.0;
  auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
  std::nth_element(dists.begin(), mid, dists.end());
  return *mid;
}

/// Mean pairwise row distance over at most `sample` rows. Unlike the median,
/// a feature where half the rows coincide cannot pull this to zero, which
/// matters when the value feeds a kernel bandwidth.
inline double mean_pairwise_distance(const Eigen::MatrixXd& rows,
                                     Eigen::Index sample = 2000,
                                     std::uint64_t seed = 11) {
  const auto pick = detail::row_sample(rows.rows(), sample, seed);
  if (pick.size() < 2) return 0.0;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < pick.size(); ++i)
    for (std::size_t j = i + 1; j < pick.size(); ++j) {
      sum += (rows.row(pick[i]) - rows.row(pick[j])).norm();
      ++count;
    }
  return sum / static_cast<double>(count);
}

/// Entropy of the Gaussian kernel density estimate evaluated at the feature
/// rows themselves: H = -sum_i P(row_i) log P(row_i), densities floored at
/// 1e-300 before the log.
inline double feature_entropy(const Eigen::MatrixXd& f, double sigma,
                              unsigned threads = 0) {
  const Eigen::Index n = f.rows();
  const Eigen::Index m = f.cols();
  if (n < 2) throw std::invalid_argument("feature_entropy: needs N >= 2");
  if (!(sigma > 0.0))
    throw std::invalid_argument("feature_entropy: sigma must be positive");

  const double log_norm = -0.5 * static_cast<double>(m) *
                              std::log(2.0 * std::numbers::pi) -
                          static_cast<double>(m) * std::log(sigma) -
                          std::log(static_cast<double>(n));
  const double inv = 1.0 / (2.0 * sigma * sigma);

  std::vector<double> terms(static_cast<std::size_t>(n));
  parallel_for(
      0, static_cast<std::size_t>(n),
      [&](std::size_t e) {
        const auto i = static_cast<Eigen::Index>(e);
        double acc = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
          acc += std::exp(-(f.row(i) - f.row(j)).squaredNorm() * inv);
        double density = std::exp(log_norm) * acc;
        density = std::max(density, 1e-300);
        terms[e] = density * std::log(density);
      },
      threads);

  double h = 0.0;
  for (double t : terms) h -= t;
  return h;
}

/// Weights inversely proportional to feature entropy, normalized so that
/// sum w_l^2 = 1. Kernel-density entropies of tight low-dimensional features
/// come out large and negative, where a raw shift by (1 - min H) parks the
/// minimum at 1 and everything else thousands away, i.e. a winner-take-all
/// weighting; instead, when any H <= 0.1 the entropies are mapped affinely
/// onto [1, 2], which keeps the ordering (the contract) and bounds the
/// weight ratio.
inline std::vector<double> adaptive_weights(const std::vector<double>& entropies) {
  if (entropies.empty())
    throw std::invalid_argument("adaptive_weights: no entropies");
  for (double h : entropies)
    if (!std::isfinite(h))
      throw std::invalid_argument("adaptive_weights: non-finite entropy");

  std::vector<double> shifted = entropies;
  const auto [min_it, max_it] =
      std::minmax_element(shifted.begin(), shifted.end());
  const double min_h = *min_it, max_h = *max_it;
  if (min_h <= 0.1) {
    const double span = max_h - min_h;
    for (double& h : shifted)
      h = span > 0.0 ? 1.0 + (h - min_h) / span : 1.0;
  }

  std::vector<double> weights(shifted.size());
  double sum_sq = 0.0;
  for (std::size_t l = 0; l < shifted.size(); ++l) {
    weights[l] = 1.0 / shifted[l];
    sum_sq += weights[l] * weights[l];
  }
  const double norm = std::sqrt(sum_sq);
  for (double& w : weights) w /= norm;
  return weights;
}

}  // namespace hybridseg
