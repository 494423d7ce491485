// SPDX-License-Identifier: MIT
#include <catch2/catch_amalgamated.hpp>

#include "hybridseg/linear_ae.hpp"
#include "hybridseg/rng.hpp"

using namespace hybridseg;

TEST_CASE("problem construction") {
  SECTION("invariants hold across 100 seeds") {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      const auto problem = make_problem(12, 3, 50, 0.5, seed);
      REQUIRE_NOTHROW(problem.validate());
    }
  }

  SECTION("zero noise means X' == X") {
    const auto problem = make_problem(10, 2, 30, 0.0, 3);
    REQUIRE((problem.Xp - problem.X).cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("minimal-gap dimension m = n - 1 constructs") {
    const auto problem = make_problem(6, 5, 40, 0.1, 9);
    REQUIRE_NOTHROW(problem.validate());
  }

  SECTION("dimension violations are rejected") {
    REQUIRE_THROWS_AS(make_problem(5, 5, 10, 0.1, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(make_problem(5, 2, 5, 0.1, 1), std::invalid_argument);
  }
}

TEST_CASE("subspace deviation") {
  Rng rng(5);
  const auto problem = make_problem(15, 4, 60, 0.2, 7);
  const Eigen::MatrixXd q = problem.basis;

  SECTION("identical frames deviate by zero") {
    REQUIRE(deviation(q, q).frobenius() == Catch::Approx(0.0).margin(1e-14));
  }

  SECTION("a rotation is absorbed by the alignment") {
    // random rotation in O(m) via QR of a Gaussian matrix
    Eigen::MatrixXd g(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) g(i, j) = rng.gaussian();
    const Eigen::MatrixXd rot =
        Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
    REQUIRE(deviation(Eigen::MatrixXd(q * rot), q).frobenius() < 1e-10);
  }

  SECTION("procrustes beats 1e5 random rotations") {
    const auto other = make_problem(15, 4, 60, 0.2, 8);
    const SubspaceDeviation dev = deviation(other.basis, q);
    const double optimal = dev.frobenius();
    REQUIRE((dev.rotation.transpose() * dev.rotation -
             Eigen::MatrixXd::Identity(4, 4))
                .cwiseAbs()
                .maxCoeff() < 1e-10);
    for (int trial = 0; trial < 100000; ++trial) {
      Eigen::MatrixXd g(4, 4);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) g(i, j) = rng.gaussian();
      Eigen::MatrixXd rot =
          Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
      if (trial % 2 == 0) rot.col(0) = -rot.col(0);  // cover reflections
      const double value = (other.basis - q * rot).norm();
      REQUIRE(optimal <= value + 1e-12);
    }
  }

  SECTION("non-orthonormal inputs are rejected") {
    Eigen::MatrixXd bad = q;
    bad.col(0) *= 2.0;
    REQUIRE_THROWS_AS(deviation(bad, q), std::invalid_argument);
  }
}

TEST_CASE("closed-form solve") {
  SECTION("zero noise reconstructs exactly") {
    const auto problem = make_problem(12, 3, 80, 0.0, 11);
    const IaeSolution sol = solve_iae_closed_form(problem);
    REQUIRE(sol.objective < 1e-16 * problem.X.squaredNorm());
    // R* spans L
    const Eigen::MatrixXd residual =
        sol.R - problem.basis * (problem.basis.transpose() * sol.R);
    REQUIRE(residual.cwiseAbs().maxCoeff() < 1e-9);
  }

  SECTION("objective beats 1000 random feasible pairs") {
    Rng rng(13);
    const auto problem = make_problem(10, 3, 50, 0.4, 17);
    const IaeSolution sol = solve_iae_closed_form(problem);
    for (int trial = 0; trial < 1000; ++trial) {
      Eigen::MatrixXd g(10, 3), b(10, 3);
      for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 3; ++j) {
          g(i, j) = rng.gaussian();
          b(i, j) = rng.gaussian();
        }
      const Eigen::MatrixXd r =
          Eigen::MatrixXd(Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ())
              .leftCols(3);
      const double objective =
          (r * b.transpose() * problem.Xp - problem.X).squaredNorm();
      REQUIRE(sol.objective <= objective + 1e-12);
    }
  }

  SECTION("projected gradient descent cannot improve the optimum") {
    const auto problem = make_problem(10, 3, 50, 0.4, 19);
    const IaeSolution sol = solve_iae_closed_form(problem);

    Eigen::MatrixXd r = sol.R, b = sol.B;
    double objective = sol.objective;
    double step = 1e-3;
    for (int iter = 0; iter < 400; ++iter) {
      const Eigen::MatrixXd z = r * b.transpose() * problem.Xp - problem.X;
      const Eigen::MatrixXd grad_r =
          2.0 * z * problem.Xp.transpose() * b;
      const Eigen::MatrixXd grad_b =
          2.0 * problem.Xp * z.transpose() * r;
      bool improved = false;
      while (step > 1e-14) {
        Eigen::MatrixXd r_new = r - step * grad_r;
        // reproject to the Stiefel manifold
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(r_new);
        r_new = Eigen::MatrixXd(qr.householderQ()).leftCols(3);
        const Eigen::MatrixXd b_new = b - step * grad_b;
        const double candidate =
            (r_new * b_new.transpose() * problem.Xp - problem.X).squaredNorm();
        if (candidate < objective - 1e-15) {
          r = r_new;
          b = b_new;
          objective = candidate;
          improved = true;
          break;
        }
        step *= 0.5;
      }
      if (!improved) break;
    }
    REQUIRE(sol.objective <= objective + 1e-8);
  }

  SECTION("objective is invariant under sample permutation") {
    // unprojected noise keeps the optimum strictly positive
    const auto problem = make_problem(9, 2, 40, 0.3, 23, false);
    LinearAEProblem permuted = problem;
    for (int k = 0; k < 40; ++k) {
      permuted.X.col(k) = problem.X.col(39 - k);
      permuted.eps.col(k) = problem.eps.col(39 - k);
    }
    permuted.Xp = permuted.X + permuted.eps;
    const double a = solve_iae_closed_form(problem).objective;
    const double b = solve_iae_closed_form(permuted).objective;
    REQUIRE(a > 0.0);
    REQUIRE(a == Catch::Approx(b).epsilon(1e-9));
  }
}

TEST_CASE("proposition 1") {
  SECTION("orthogonal noise: deviation below 1e-8 over 100 seeds") {
    int passed = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      auto problem = make_problem(20, 4, 200, 0.5, seed);
      auto report = verify_prop1(problem);
      int resample = 0;
      while (!report.gap_ok && resample < 5) {
        problem = make_problem(20, 4, 200, 0.5, seed + 7919 * ++resample);
        report = verify_prop1(problem);
      }
      REQUIRE(report.gap_ok);
      REQUIRE(report.readings_agree);
      if (report.passed) ++passed;
    }
    REQUIRE(passed == 100);
  }

  SECTION("non-orthogonal noise is detected by the negative control") {
    int exceeded = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      const auto control =
          make_problem(20, 4, 200, 0.5, seed, /*project_noise=*/false);
      if (verify_prop1(control).claim_violation() > 1e-3) ++exceeded;
    }
    REQUIRE(exceeded >= 95);
  }

  SECTION("encoder equals decoder only under the hypothesis") {
    const auto clean = make_problem(20, 4, 200, 0.5, 3);
    REQUIRE(verify_prop1(clean).encoder_decoder_gap < 1e-10);
    const auto control = make_problem(20, 4, 200, 0.5, 3, false);
    REQUIRE(verify_prop1(control).encoder_decoder_gap > 1e-3);
  }
}

TEST_CASE("proposition 2") {
  // Coefficient scale 0.01 keeps finite-difference truncation above the
  // eigensolver noise floor, which the order measurement needs.
  const auto problem = make_problem(20, 4, 200, 0.5, 41, true, 0.01);

  SECTION("analytic derivative matches central differences") {
    const Prop2Report report = verify_prop2(problem, 50, 1e-5, 7);
    REQUIRE(report.probes.size() == 50);
    REQUIRE(report.max_relative_error < 1e-4);
    REQUIRE(report.median_order > 1.8);
    REQUIRE(report.median_order < 2.2);
    REQUIRE(report.max_iae_deviation < 1e-8);
    REQUIRE(report.passed);
  }

  SECTION("derivative scales inversely with the data (Lambda quadratically)") {
    LinearAEProblem doubled = problem;
    doubled.X *= 2.0;
    doubled.eps *= 2.0;
    doubled.Xp = doubled.X + doubled.eps;

    Eigen::MatrixXd q1, q2;
    Eigen::VectorXd l1, l2;
    hybridseg::detail::top_eigenpairs(problem.X * problem.X.transpose(), 4, q1,
                                      l1);
    hybridseg::detail::top_eigenpairs(doubled.X * doubled.X.transpose(), 4, q2,
                                      l2);
    REQUIRE((l2 - 4.0 * l1).cwiseAbs().maxCoeff() < 1e-9 * l1[0]);

    // analytic derivative for the same (k, i): halves when data doubles
    const Eigen::MatrixXd p1 =
        Eigen::MatrixXd::Identity(20, 20) - q1 * q1.transpose();
    const Eigen::VectorXd dir = p1 * Eigen::VectorXd::Unit(20, 3);
    const Eigen::MatrixXd d_base =
        dir * (problem.X.col(5).transpose() * q1 * l1.cwiseInverse().asDiagonal());
    const Eigen::MatrixXd d_doubled =
        dir * (doubled.X.col(5).transpose() * q2 * l2.cwiseInverse().asDiagonal());
    REQUIRE((d_doubled - 0.5 * d_base).cwiseAbs().maxCoeff() <
            1e-9 * d_base.cwiseAbs().maxCoeff());
  }
}
