// hybridseg - point-cloud primitive segmentation and implicit-field toolkit
// SPDX-License-Identifier: MIT
//
// Leading-eigenvector descriptors of affinity matrices. Column i of the
// descriptor matrix is sqrt(lambda_1 / lambda_i) * u_i, so later columns get
// amplified toward a common scale. Dense solves up to 4096 points; beyond
// that a thick-restart Lanczos iteration with a deterministic start vector.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hybridseg/adjacency.hpp"

namespace hybridseg {

struct SpectralDescriptor {
  Eigen::VectorXd eigenvalues;  // descending, all > 1e-12
  Eigen::MatrixXd basis;        // orthonormal eigenvectors u_i (columns)
  Eigen::MatrixXd descriptors;  // column i = sqrt(l1/li) * u_i

  Eigen::Index count() const { return eigenvalues.size(); }
};

namespace detail {

// Fixes each eigenvector's sign so its largest-magnitude entry is positive
// (lowest index wins among equal magnitudes).
inline void canonicalize_sign(Eigen::MatrixXd& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
      const double mag = std::abs(vectors(r, c));
      if (mag > best) {
        best = mag;
        arg = r;
      }
    }
    if (vectors(arg, c) < 0.0) vectors.col(c) = -vectors.col(c);
  }
}

inline SpectralDescriptor descriptor_from_pairs(Eigen::VectorXd values,
                                                Eigen::MatrixXd vectors) {
  const Eigen::Index d = values.size();
  if (d < 1) throw std::invalid_argument("descriptor needs d >= 1");
  if (values[d - 1] <= 1e-12)
    throw std::runtime_error(
        "leading_eigs: matrix rank is below the requested descriptor count");
  canonicalize_sign(vectors);
  SpectralDescriptor out;
  out.eigenvalues = std::move(values);
  out.basis = std::move(vectors);
  out.descriptors = out.basis;
  for (Eigen::Index c = 0; c < d; ++c)
    out.descriptors.col(c) *=
        std::sqrt(out.eigenvalues[0] / out.eigenvalues[c]);
  return out;
}

// Thick-restart Lanczos for the largest algebraic eigenvalues of a symmetric
// operator. Full reorthogonalization inside the window keeps the small
// projected problem trustworthy; the start vector is all-ones, with basis
// vectors e_j as deterministic fallbacks on breakdown.
inline void lanczos_topk(const AdjacencyMatrix& a, int want, double tol,
                         Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
  const Eigen::Index n = a.size();
  const int window = static_cast<int>(
      std::min<Eigen::Index>(n, std::max(2 * want + 32, 64)));
  if (window < want)
    throw std::invalid_argument("leading_eigs: window smaller than d");

  Eigen::MatrixXd v(n, window + 1);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(window, window);
  v.col(0) = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));

  int kept = 0;       // locked Ritz directions at the front of the window
  int fallback = 0;   // next deterministic replacement direction
  double residual_beta = 0.0;
  const int max_restarts = 500;

  for (int restart = 0; restart < max_restarts; ++restart) {
    for (int j = kept; j < window; ++j) {
      Eigen::VectorXd w = a.multiply(v.col(j));
      t(j, j) = v.col(j).dot(w);
      for (int pass = 0; pass < 2; ++pass)  // full reorthogonalization
        for (int i = 0; i <= j; ++i) w -= v.col(i).dot(w) * v.col(i);

      double beta = w.norm();
      if (beta < 1e-13) {
        // Breakdown: the Krylov space is invariant. Continue from a fresh
        // deterministic direction with zero coupling.
        beta = 0.0;
        bool replaced = false;
        while (fallback < n) {
          w.setZero();
          w[fallback++] = 1.0;
          for (int pass = 0; pass < 2; ++pass)
            for (int i = 0; i <= j; ++i) w -= v.col(i).dot(w) * v.col(i);
          const double norm = w.norm();
          if (norm > 1e-8) {
            w /= norm;
            replaced = true;
            break;
          }
        }
        if (!replaced) w.setZero();  // whole space spanned (tiny n)
      } else {
        w /= beta;
      }

      v.col(j + 1) = w;
      if (j + 1 < window) {
        t(j + 1, j) = beta;
        t(j, j + 1) = beta;
      } else {
        residual_beta = beta;
      }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t);
    const Eigen::VectorXd& theta = eig.eigenvalues();  // ascending
    const Eigen::MatrixXd& s = eig.eigenvectors();

    const double scale = std::max(
        {std::abs(theta[0]), std::abs(theta[window - 1]), 1.0});
    bool converged = true;
    for (int i = 0; i < want && converged; ++i)
      if (std::abs(residual_beta * s(window - 1, window - 1 - i)) > tol * scale)
        converged = false;

    if (converged) {
      values.resize(want);
      vectors.resize(n, want);
      for (int i = 0; i < want; ++i) {
        values[i] = theta[window - 1 - i];
        vectors.col(i) = v.leftCols(window) * s.col(window - 1 - i);
      }
      return;
    }

    // Thick restart: lock the best Ritz pairs, keep the residual vector as
    // the continuation direction, couple them through an arrowhead row.
    const int keep = std::min(window - 2, std::max(want + 8, 2 * want));
    const Eigen::MatrixXd ritz = v.leftCols(window) * s.rightCols(keep);
    const Eigen::VectorXd ritz_vals = theta.tail(keep);
    const Eigen::VectorXd residual_vec = v.col(window);
    t.setZero();
    for (int i = 0; i < keep; ++i) {
      v.col(i) = ritz.col(i);
      t(i, i) = ritz_vals[i];
      const double coupling = residual_beta * s(window - 1, window - keep + i);
      t(keep, i) = coupling;
      t(i, keep) = coupling;
    }
    v.col(keep) = residual_vec;
    kept = keep;
  }
  throw std::runtime_error("leading_eigs: Lanczos failed to converge");
}

}  // namespace detail

/// Top-d eigenpairs of a symmetric affinity matrix as scaled descriptors.
/// Throws if the d-th eigenvalue falls below 1e-12.
inline SpectralDescriptor leading_eigs_dense(const Eigen::MatrixXd& a, int d) {
  if (d < 1 || d > a.rows())
    throw std::invalid_argument("leading_eigs: d out of range");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  Eigen::VectorXd values(d);
  Eigen::MatrixXd vectors(a.rows(), d);
  for (int i = 0; i < d; ++i) {
    values[i] = eig.eigenvalues()[a.rows() - 1 - i];
    vectors.col(i) = eig.eigenvectors().col(a.rows() - 1 - i);
  }
  return detail::descriptor_from_pairs(std::move(values), std::move(vectors));
}

inline SpectralDescriptor leading_eigs_lanczos(const AdjacencyMatrix& a, int d,
                                               double tol = 1e-8) {
  if (d < 1 || d > a.size())
    throw std::invalid_argument("leading_eigs: d out of range");
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  detail::lanczos_topk(a, d, tol, values, vectors);
  return detail::descriptor_from_pairs(std::move(values), std::move(vectors));
}

inline SpectralDescriptor leading_eigs(const AdjacencyMatrix& a, int d) {
  if (a.is_dense() && a.size() <= kDenseAdjacencyLimit)
    return leading_eigs_dense(a.dense(), d);
  return leading_eigs_lanczos(a, d);
}

/// Descriptor with an automatically chosen column count: computes up to 16
/// leading eigenpairs, drops rank-deficient tails (eigenvalues <= 1e-12),
/// then applies the eigengap heuristic (or the caller's requested d, capped
/// at the usable rank).
inline SpectralDescriptor auto_descriptor(const AdjacencyMatrix& a,
                                          int requested_d = 0);

/// Eigengap heuristic: the descriptor count is the position of the largest
/// relative gap among the top (up to) 16 eigenvalues.
inline int choose_descriptor_count(const Eigen::VectorXd& eigenvalues_desc) {
  const int limit = static_cast<int>(
      std::min<Eigen::Index>(16, eigenvalues_desc.size()));
  if (limit <= 1) return 1;
  int best_d = 1;
  double best_gap = -1.0;
  for (int i = 0; i < limit - 1; ++i) {
    const double head = std::max(eigenvalues_desc[i], 1e-300);
    const double gap = (eigenvalues_desc[i] - eigenvalues_desc[i + 1]) / head;
    if (gap > best_gap) {
      best_gap = gap;
      best_d = i + 1;
    }
  }
  return best_d;
}

inline SpectralDescriptor auto_descriptor(const AdjacencyMatrix& a,
                                          int requested_d) {
  const int probe = static_cast<int>(std::min<Eigen::Index>(16, a.size()));
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  if (a.is_dense() && a.size() <= kDenseAdjacencyLimit) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a.dense());
    const auto n = a.size();
    values.resize(probe);
    vectors.resize(n, probe);
    for (int i = 0; i < probe; ++i) {
      values[i] = eig.eigenvalues()[n - 1 - i];
      vectors.col(i) = eig.eigenvectors().col(n - 1 - i);
    }
  } else {
    detail::lanczos_topk(a, probe, 1e-8, values, vectors);
  }

  int rank = 0;
  while (rank < probe && values[rank] > 1e-12) ++rank;
  if (rank == 0)
    throw std::runtime_error("auto_descriptor: matrix is numerically zero");

  int d = requested_d;
  if (d <= 0) {
    // include one below-rank eigenvalue so the heuristic can see the cliff
    const int consider = std::min(probe, rank + 1);
    d = choose_descriptor_count(values.head(consider));
    // On noisy spectra the single largest gap often sits before the last
    // meaningful block eigenvalue; keep every eigenvalue that is still a
    // sizable fraction of the leading one.
    int significant = 0;
    while (significant < rank && values[significant] > 0.3 * values[0])
      ++significant;
    d = std::max(d, significant);
  }
  d = std::min(d, rank);
  return detail::descriptor_from_pairs(values.head(d),
                                       vectors.leftCols(d));
}

struct DavisKahanReport {
  double lhs = 0.0;     // min_R |U R - U_good|_F (orthogonal Procrustes)
  double rhs = 0.0;     // sqrt(lambda_1(A_good)) |E|_F / (l_K - l_{K+1})
  double lambda1 = 0.0;
  double gap = 0.0;
  double e_norm = 0.0;
  bool holds = false;
};

/// Verifies the eigenspace perturbation bound on a block-diagonal affinity
/// matrix plus a symmetric perturbation, using the scaled descriptors and a
/// Procrustes-aligned left side.
inline DavisKahanReport davis_kahan_check(const AdjacencyMatrix& a_good,
                                          const Eigen::MatrixXd& e, int K) {
  const Eigen::Index n = a_good.size();
  if (e.rows() != n || e.cols() != n)
    throw std::invalid_argument("davis_kahan_check: size mismatch");
  if (K < 1 || K + 1 > n)
    throw std::invalid_argument("davis_kahan_check: K out of range");

  const Eigen::MatrixXd good = a_good.dense();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_good(good);
  const double lambda1 = eig_good.eigenvalues()[n - 1];
  const double lambda_k = eig_good.eigenvalues()[n - K];
  const double lambda_k1 = eig_good.eigenvalues()[n - K - 1];
  const double gap = lambda_k - lambda_k1;
  if (!(gap > 0.0))
    throw std::runtime_error("davis_kahan_check: zero spectral gap");

  const SpectralDescriptor u_good = leading_eigs_dense(good, K);
  const SpectralDescriptor u_pert = leading_eigs_dense(good + e, K);

  // min over O(K): R* = W Z^T from the SVD of U^T U_good.
  const Eigen::MatrixXd m =
      u_pert.descriptors.transpose() * u_good.descriptors;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::MatrixXd rot = svd.matrixU() * svd.matrixV().transpose();

  DavisKahanReport report;
  report.lambda1 = lambda1;
  report.gap = gap;
  report.e_norm = e.norm();
  report.lhs = (u_pert.descriptors * rot - u_good.descriptors).norm();
  report.rhs = std::sqrt(std::max(lambda1, 0.0)) * report.e_norm / gap;
  report.holds = report.lhs <= report.rhs;
  return report;
}

}  // namespace hybridseg
