// hybridseg - point-cloud primitive segmentation and implicit-field toolkit
// SPDX-License-Identifier: MIT
//
// Numerical laboratory for the linear-autoencoder analysis. Clean data X
// lives in an m-dimensional subspace L of R^n, perturbations eps live in the
// orthogonal complement, X' = X + eps. The closed-form reconstruction-to-
// clean optimum collects the top-m eigenvectors of
//   (X' X^T)^T (X' X'^T)^+ (X' X^T),
// which is insensitive to eps; the reconstruct-the-input optimum (top-m
// eigenvectors of X' X'^T) moves at a rate given in closed form, checked here
// against central finite differences.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hybridseg/rng.hpp"

namespace hybridseg {

struct LinearAEProblem {
  int n = 0;  // ambient dimension
  int m = 0;  // subspace / code dimension
  int N = 0;  // sample count
  Eigen::MatrixXd basis;  // n x m, orthonormal columns spanning L
  Eigen::MatrixXd X;      // n x N, columns in L
  Eigen::MatrixXd eps;    // n x N, columns in the orthogonal complement
  Eigen::MatrixXd Xp;     // X + eps

  void validate() const {
    if (!(N > n && n > m && m >= 1))
      throw std::invalid_argument("LinearAEProblem: requires N > n > m >= 1");
    if ((basis.transpose() * basis - Eigen::MatrixXd::Identity(m, m))
            .cwiseAbs()
            .maxCoeff() > 1e-10)
      throw std::invalid_argument("LinearAEProblem: basis is not orthonormal");
    if ((basis.transpose() * eps).cwiseAbs().maxCoeff() > 1e-10)
      throw std::invalid_argument("LinearAEProblem: eps is not orthogonal to L");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
    if (svd.singularValues()[m - 1] <= 1e-8)
      throw std::invalid_argument("LinearAEProblem: X is rank deficient");
  }
};

/// Random problem instance: orthonormal basis from the QR of a seeded
/// Gaussian matrix, coefficients ~ coef_scale * N(0,1), noise projected onto
/// the orthogonal complement (skip the projection only to build negative
/// controls, which intentionally violate the hypothesis).
inline LinearAEProblem make_problem(int n, int m, int N, double noise_scale,
                                    std::uint64_t seed,
                                    bool project_noise = true,
                                    double coef_scale = 1.0) {
  if (!(N > n && n > m && m >= 1))
    throw std::invalid_argument("make_problem: requires N > n > m >= 1");
  Rng rng(seed);
  auto gaussian_matrix = [&rng](int rows, int cols) {
    Eigen::MatrixXd g(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) g(i, j) = rng.gaussian();
    return g;
  };

  LinearAEProblem problem;
  problem.n = n;
  problem.m = m;
  problem.N = N;
  const Eigen::MatrixXd g = gaussian_matrix(n, m);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  problem.basis =
      Eigen::MatrixXd(qr.householderQ()) .leftCols(m);

  problem.X = problem.basis * (coef_scale * gaussian_matrix(m, N));
  Eigen::MatrixXd noise = noise_scale * gaussian_matrix(n, N);
  if (project_noise)
    noise -= problem.basis * (problem.basis.transpose() * noise);
  problem.eps = noise;
  problem.Xp = problem.X + problem.eps;
  return problem;
}

namespace detail {

// Top-m eigenpairs of a symmetric matrix, eigenvalues descending, each
// eigenvector's sign fixed so its largest-magnitude entry is positive.
inline void top_eigenpairs(const Eigen::MatrixXd& c, int m,
                           Eigen::MatrixXd& vectors, Eigen::VectorXd& values) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
  const auto n = c.rows();
  vectors.resize(n, m);
  values.resize(m);
  for (int i = 0; i < m; ++i) {
    values[i] = eig.eigenvalues()[n - 1 - i];
    Eigen::VectorXd v = eig.eigenvectors().col(n - 1 - i);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0.0) v = -v;
    vectors.col(i) = v;
  }
}

inline Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& a,
                                      double rel_cutoff = 1e-10) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cutoff = rel_cutoff * s[0];
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > cutoff) inv[i] = 1.0 / s[i];
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace detail

struct SubspaceDeviation {
  Eigen::MatrixXd value;     // Q1 - Q2 R*
  Eigen::MatrixXd rotation;  // R* in O(m)

  double frobenius() const { return value.norm(); }
};

/// Orthogonal-Procrustes deviation between two orthonormal frames:
/// R* = U V^T from the SVD of Q2^T Q1, D = Q1 - Q2 R*.
inline SubspaceDeviation deviation(const Eigen::MatrixXd& q1,
                                   const Eigen::MatrixXd& q2) {
  if (q1.rows() != q2.rows() || q1.cols() != q2.cols())
    throw std::invalid_argument("deviation: shape mismatch");
  const auto m = q1.cols();
  for (const auto* q : {&q1, &q2})
    if ((q->transpose() * *q - Eigen::MatrixXd::Identity(m, m))
            .cwiseAbs()
            .maxCoeff() > 1e-8)
      throw std::invalid_argument("deviation: input is not orthonormal");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      q2.transpose() * q1, Eigen::ComputeFullU | Eigen::ComputeFullV);
  SubspaceDeviation dev;
  dev.rotation = svd.matrixU() * svd.matrixV().transpose();
  dev.value = q1 - q2 * dev.rotation;
  return dev;
}

struct IaeSolution {
  Eigen::MatrixXd R;  // n x m, orthonormal columns
  Eigen::MatrixXd B;  // n x m
  double objective = 0.0;  // sum_k |R B^T x'_k - x_k|^2
};

/// Closed-form optimum of min |R B^T X' - X|_F^2 over R^T R = I:
/// R* = top-m eigenvectors of (X'X^T)^T (X'X'^T)^+ (X'X^T),
/// B* = (X'X'^T)^+ (X'X^T) R*.
inline IaeSolution solve_iae_closed_form(const LinearAEProblem& problem) {
  const Eigen::MatrixXd xpxt = problem.Xp * problem.X.transpose();
  const Eigen::MatrixXd pinv =
      detail::pseudo_inverse(problem.Xp * problem.Xp.transpose());
  Eigen::MatrixXd core = xpxt.transpose() * pinv * xpxt;
  core = 0.5 * (core + core.transpose());  // symmetrize numerical residue

  IaeSolution sol;
  Eigen::VectorXd values;
  detail::top_eigenpairs(core, problem.m, sol.R, values);
  sol.B = pinv * xpxt * sol.R;
  sol.objective =
      (sol.R * sol.B.transpose() * problem.Xp - problem.X).squaredNorm();
  return sol;
}

struct Prop1Report {
  double deviation_fro = 0.0;   // |D(Q*_iae, Q)|_F
  double encoder_decoder_gap = 0.0;  // |B* - R*|_F, zero under the hypothesis
  double spectral_gap = 0.0;    // lambda_m - lambda_{m+1} of C
  double reading_residual = 0.0;  // |(X X'^T) Q - Q Lambda| / |Lambda|
  bool gap_ok = false;
  bool readings_agree = false;
  bool passed = false;

  /// Scalar a negative control can threshold: the full claim R* = B* = Q.
  /// The subspace deviation alone cannot see the hypothesis: the closed-form
  /// matrix (X'X^T)^T (X'X'^T)^+ (X'X^T) has range inside span(X) for any
  /// noise, so only the encoder/decoder agreement breaks without it.
  double claim_violation() const {
    return std::max(deviation_fro, encoder_decoder_gap);
  }
};

/// Checks that the reconstruction-to-clean optimum spans the same subspace as
/// the top-m eigenvectors of C = X X^T (up to the deviation metric), that the
/// encoder equals the decoder, and that both readings of the covariance
/// (X X^T vs X X'^T) share that eigenspace.
inline Prop1Report verify_prop1(const LinearAEProblem& problem,
                                double tolerance = 1e-8,
                                double gap_threshold = 1e-6) {
  const Eigen::MatrixXd c = problem.X * problem.X.transpose();
  Eigen::MatrixXd q;
  Eigen::VectorXd lambda;
  detail::top_eigenpairs(c, problem.m, q, lambda);

  Prop1Report report;
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> full(c);
    const auto n = c.rows();
    report.spectral_gap =
        full.eigenvalues()[n - problem.m] -
        (problem.m < n ? full.eigenvalues()[n - problem.m - 1] : 0.0);
  }
  report.gap_ok = report.spectral_gap > gap_threshold;

  const IaeSolution sol = solve_iae_closed_form(problem);
  report.deviation_fro = deviation(sol.R, q).frobenius();
  report.encoder_decoder_gap = (sol.B - sol.R).norm();

  // Mixed reading C = sum_k x_k x'_k^T: Q must stay an invariant subspace.
  const Eigen::MatrixXd mixed = problem.X * problem.Xp.transpose();
  report.reading_residual =
      (mixed * q - q * lambda.asDiagonal()).norm() / std::max(lambda.norm(), 1e-300);
  report.readings_agree = report.reading_residual < 1e-8;

  report.passed = report.gap_ok && report.deviation_fro < tolerance &&
                  report.encoder_decoder_gap < tolerance;
  return report;
}

struct Prop2Probe {
  int sample = 0;      // k
  int coordinate = 0;  // i
  double relative_error = 0.0;   // |FD - analytic|_F / |analytic|_F
  double order = 0.0;            // observed convergence order between h and 10h
  double iae_deviation = 0.0;    // |D(R*(perturbed), Q)|_F, expected ~ 0
};

struct Prop2Report {
  std::vector<Prop2Probe> probes;
  double max_relative_error = 0.0;
  double median_order = 0.0;
  double max_iae_deviation = 0.0;
  int skipped = 0;  // eigenvalue collisions or in-subspace directions
  bool passed = false;
};

namespace detail {

// D(Qhat(t dir in column k), Q) as a matrix function of t, with Qhat the
// top-m eigenvectors of the perturbed second-moment matrix.
inline Eigen::MatrixXd deviation_at(const LinearAEProblem& problem,
                                    const Eigen::MatrixXd& q, int k,
                                    const Eigen::VectorXd& dir, double t) {
  Eigen::MatrixXd xp = problem.X;
  xp.col(k) += t * dir;
  const Eigen::MatrixXd cp = xp * xp.transpose();
  Eigen::MatrixXd qhat;
  Eigen::VectorXd values;
  top_eigenpairs(cp, problem.m, qhat, values);
  return deviation(qhat, q).value;
}

}  // namespace detail

/// Finite-difference check of the eigenvector sensitivity formula
///   dD(Qhat, Q)/d eps_ki = (I - Q Q^T) e_i x_k^T Q Lambda^+ .
/// Probes start from eps = 0 and step along the L-orthogonal part of e_i, so
/// the hypothesis eps in L-perp holds along the whole probe path. The same
/// perturbation is pushed through the closed-form IAE solve, which must not
/// move.
inline Prop2Report verify_prop2(const LinearAEProblem& problem, int probes = 50,
                                double h = 1e-5, std::uint64_t seed = 99,
                                double tolerance = 1e-4,
                                double gap_threshold = 1e-6) {
  const Eigen::MatrixXd c = problem.X * problem.X.transpose();
  Eigen::MatrixXd q;
  Eigen::VectorXd lambda;
  detail::top_eigenpairs(c, problem.m, q, lambda);

  Prop2Report report;
  for (int i = 0; i + 1 < problem.m; ++i)
    if (lambda[i] - lambda[i + 1] <= gap_threshold) {
      ++report.skipped;  // repeated top eigenvalues: trial not probed
      return report;
    }
  if (lambda[problem.m - 1] <= gap_threshold) {
    ++report.skipped;
    return report;
  }

  const Eigen::MatrixXd projector =
      Eigen::MatrixXd::Identity(problem.n, problem.n) - q * q.transpose();
  Rng rng(seed);

  std::vector<double> orders;
  for (int p = 0; p < probes; ++p) {
    Prop2Probe probe;
    probe.sample = static_cast<int>(rng.uniform_index(problem.N));
    probe.coordinate = static_cast<int>(rng.uniform_index(problem.n));

    Eigen::VectorXd dir =
        projector * Eigen::VectorXd::Unit(problem.n, probe.coordinate);
    if (dir.norm() < 1e-10) {
      ++report.skipped;  // e_i essentially inside L
      continue;
    }

    const Eigen::MatrixXd analytic = dir *
                                     (problem.X.col(probe.sample).transpose() *
                                      q * lambda.cwiseInverse().asDiagonal());

    auto fd_at = [&](double step) {
      const Eigen::MatrixXd plus =
          detail::deviation_at(problem, q, probe.sample, dir, step);
      const Eigen::MatrixXd minus =
          detail::deviation_at(problem, q, probe.sample, dir, -step);
      return Eigen::MatrixXd((plus - minus) / (2.0 * step));
    };

    const double analytic_norm = std::max(analytic.norm(), 1e-300);
    const double err_h = (fd_at(h) - analytic).norm() / analytic_norm;
    const double err_10h = (fd_at(10.0 * h) - analytic).norm() / analytic_norm;
    probe.relative_error = err_h;
    probe.order = std::log(err_10h / std::max(err_h, 1e-300)) / std::log(10.0);
    orders.push_back(probe.order);

    // IAE-side contrast: the same perturbation leaves the closed form fixed.
    LinearAEProblem perturbed = problem;
    perturbed.eps = Eigen::MatrixXd::Zero(problem.n, problem.N);
    perturbed.eps.col(probe.sample) = 10.0 * h * dir;
    perturbed.Xp = perturbed.X + perturbed.eps;
    const IaeSolution sol = solve_iae_closed_form(perturbed);
    probe.iae_deviation = deviation(sol.R, q).frobenius();

    report.max_relative_error =
        std::max(report.max_relative_error, probe.relative_error);
    report.max_iae_deviation =
        std::max(report.max_iae_deviation, probe.iae_deviation);
    report.probes.push_back(probe);
  }

  if (!orders.empty()) {
    std::nth_element(orders.begin(), orders.begin() + orders.size() / 2,
                     orders.end());
    report.median_order = orders[orders.size() / 2];
  }
  report.passed = !report.probes.empty() &&
                  report.max_relative_error < tolerance &&
                  report.max_iae_deviation < 1e-8;
  return report;
}

}  // namespace hybridseg
