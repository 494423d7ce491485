// SPDX-License-Identifier: MIT
#include <catch2/catch_amalgamated.hpp>

#include <numbers>

#include "hybridseg/kdtree.hpp"
#include "hybridseg/local_features.hpp"
#include "support/synthetic.hpp"

using namespace hybridseg;
using namespace testsupport;

TEST_CASE("local covariance") {
  Rng rng(2);

  SECTION("coincident neighborhood is the zero matrix") {
    PointCloud cloud = make_cloud(Matrix3Xr::Ones(8, 3));
    const NeighborIndex index(cloud);
    const auto cov = local_covariance(cloud, index, 0, KnnOf{8});
    REQUIRE(cov.matrix.cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(cov.eigenvalues.cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(cov.degenerate());
  }

  SECTION("collinear neighborhood is rank one") {
    Matrix3Xr pts(3, 3);
    pts.row(0) << 0, 0, 0;
    pts.row(1) << 1e-3, 0, 0;
    pts.row(2) << -1e-3, 0, 0;
    PointCloud cloud = make_cloud(pts);
    const NeighborIndex index(cloud);
    const auto cov = local_covariance(cloud, index, 0, KnnOf{3});
    REQUIRE(cov.eigenvalues[2] > 0.0);
    REQUIRE(cov.eigenvalues[0] == Catch::Approx(0.0).margin(1e-18));
    REQUIRE(cov.eigenvalues[1] == Catch::Approx(0.0).margin(1e-18));
  }

  SECTION("uniform ball is isotropic within 10%") {
    const Eigen::Index n = 1000;
    Matrix3Xr pts(n + 1, 3);
    pts.row(0).setZero();  // query point at the center
    for (Eigen::Index i = 1; i <= n; ++i) {
      Vector3 dir(rng.gaussian(), rng.gaussian(), rng.gaussian());
      dir.normalize();
      const double radius = std::cbrt(rng.uniform());
      pts.row(i) = (radius * dir).transpose();
    }
    PointCloud cloud = make_cloud(pts);
    const NeighborIndex index(cloud);
    const auto cov =
        local_covariance(cloud, index, 0, KnnOf{static_cast<int>(n + 1)});
    const double mean = cov.eigenvalues.mean();
    for (int i = 0; i < 3; ++i)
      REQUIRE(std::abs(cov.eigenvalues[i] - mean) / mean < 0.10);
  }

  SECTION("eigen decomposition satisfies C v = lambda v") {
    PointCloud cloud = make_cloud(sphere_samples(200, Vector3::Zero(), 1, rng));
    const NeighborIndex index(cloud);
    for (int id : {0, 17, 110}) {
      const auto cov = local_covariance(cloud, index, id, KnnOf{32});
      for (int i = 0; i < 3; ++i) {
        const Vector3 v = cov.eigenvectors.col(i);
        REQUIRE((cov.matrix * v - cov.eigenvalues[i] * v).norm() < 1e-9);
      }
      REQUIRE((cov.eigenvectors.transpose() * cov.eigenvectors -
               Eigen::Matrix3d::Identity())
                  .cwiseAbs()
                  .maxCoeff() < 1e-9);
    }
  }

  SECTION("too few neighbors") {
    PointCloud cloud = make_cloud(Matrix3Xr::Random(5, 3));
    const NeighborIndex index(cloud);
    REQUIRE_THROWS_WITH(local_covariance(cloud, index, 0, RadiusOf{1e-12}),
                        Catch::Matchers::ContainsSubstring("insufficient"));
  }
}

TEST_CASE("surface variation") {
  LocalCovariance cov;

  SECTION("direct arithmetic") {
    cov.eigenvalues = Vector3(1, 2, 5);
    REQUIRE(surface_variation(cov) == Catch::Approx(0.125));
  }

  SECTION("isotropic hits the 1/3 bound") {
    cov.eigenvalues = Vector3(2, 2, 2);
    REQUIRE(surface_variation(cov) == Catch::Approx(1.0 / 3.0));
  }

  SECTION("planar neighborhood scores zero") {
    cov.eigenvalues = Vector3(0, 1, 1);
    REQUIRE(surface_variation(cov) == 0.0);
  }

  SECTION("degenerate returns zero") {
    cov.eigenvalues = Vector3::Zero();
    REQUIRE(surface_variation(cov) == 0.0);
    REQUIRE(cov.degenerate());
  }
}

TEST_CASE("normal estimation") {
  Rng rng(9);

  SECTION("exact plane gives +z everywhere") {
    PointCloud cloud =
        make_cloud(plane_samples(300, Vector3::UnitZ(), 0.0, rng));
    const NeighborIndex index(cloud);
    const FeatureField field = estimate_normals(cloud, index, KnnOf{16});
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
      REQUIRE(field.normals(i, 2) == Catch::Approx(1.0).margin(1e-6));
      REQUIRE(field.variations[i] == Catch::Approx(0.0).margin(1e-9));
    }
  }

  SECTION("sphere normals are radial within 3 degrees") {
    PointCloud cloud =
        make_cloud(sphere_samples(2000, Vector3::Zero(), 1.0, rng));
    const NeighborIndex index(cloud);
    const FeatureField field = estimate_normals(cloud, index, KnnOf{128});
    int good = 0;
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
      const Vector3 radial = cloud.point(i).normalized();
      const double cosang =
          std::abs(field.normals.row(i).dot(radial.transpose()));
      if (std::acos(std::clamp(cosang, 0.0, 1.0)) < 3.0 * std::numbers::pi / 180.0)
        ++good;
    }
    REQUIRE(static_cast<double>(good) / static_cast<double>(cloud.size()) >= 0.99);
  }

  SECTION("distant components stay internally consistent") {
    PointCloud cloud = make_cloud(
        concat({plane_samples(200, Vector3::UnitZ(), 0.0, rng, 0.5),
                plane_samples(200, Vector3::UnitZ(), 50.0, rng, 0.5)}));
    const NeighborIndex index(cloud);
    const FeatureField field = estimate_normals(cloud, index, KnnOf{12});
    for (Eigen::Index part = 0; part < 2; ++part) {
      const Eigen::Index base = part * 200;
      for (Eigen::Index i = 1; i < 200; ++i)
        REQUIRE(field.normals.row(base).dot(field.normals.row(base + i)) > 0.0);
    }
  }
}

TEST_CASE("feature field properties") {
  Rng rng(23);

  SECTION("variations stay in [0, 1/3]") {
    PointCloud cloud = make_cloud(
        concat({sphere_samples(300, Vector3::Zero(), 0.5, rng, 0.02),
                gaussian_blob(100, Vector3(2, 0, 0), 0.3, rng)}));
    const NeighborIndex index(cloud);
    const FeatureField field = feature_field(cloud, index, KnnOf{24});
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
      REQUIRE(field.variations[i] >= 0.0);
      REQUIRE(field.variations[i] <= 1.0 / 3.0 + 1e-12);
    }
  }

  SECTION("cube edges score higher variation than faces") {
    // unit cube surface: +z face interior vs the band along the x=+0.5 edge
    std::vector<Eigen::Index> face_ids, edge_ids;
    Matrix3Xr pts(4000, 3);
    for (Eigen::Index i = 0; i < 4000; ++i) {
      const int side = static_cast<int>(rng.uniform_index(6));
      const double u = rng.uniform(-0.5, 0.5), v = rng.uniform(-0.5, 0.5);
      Vector3 p;
      switch (side) {
        case 0: p = {u, v, 0.5}; break;
        case 1: p = {u, v, -0.5}; break;
        case 2: p = {u, 0.5, v}; break;
        case 3: p = {u, -0.5, v}; break;
        case 4: p = {0.5, u, v}; break;
        default: p = {-0.5, u, v}; break;
      }
      pts.row(i) = p.transpose();
      if (side == 0 && std::abs(u) < 0.25 && std::abs(v) < 0.25)
        face_ids.push_back(i);
      if (side == 0 && u > 0.45) edge_ids.push_back(i);
    }
    PointCloud cloud = make_cloud(pts);
    const NeighborIndex index(cloud);
    const FeatureField field = feature_field(cloud, index, RadiusOf{0.1});
    auto mean_of = [&](const std::vector<Eigen::Index>& ids) {
      double acc = 0.0;
      for (auto id : ids) acc += field.variations[id];
      return acc / static_cast<double>(ids.size());
    };
    REQUIRE(mean_of(face_ids) < mean_of(edge_ids));
  }

  SECTION("rigid motion equivariance") {
    PointCloud cloud =
        make_cloud(sphere_samples(400, Vector3(0, 0, 2), 1.0, rng, 0.01));
    const NeighborIndex index(cloud);
    const FeatureField base = feature_field(cloud, index, KnnOf{24});

    // a small rotation keeps every MST root on the same hemisphere sign
    const Eigen::Matrix3d rot = rotation(0.05, Vector3(1, 2, 3));
    PointCloud moved = cloud;
    moved.positions = (rot * cloud.positions.transpose()).transpose();
    const NeighborIndex moved_index(moved);
    const FeatureField rotated = feature_field(moved, moved_index, KnnOf{24});

    REQUIRE((rotated.variations - base.variations).cwiseAbs().maxCoeff() < 1e-9);
    const Matrix3Xr expected = (rot * base.normals.transpose()).transpose();
    REQUIRE((rotated.normals - expected).cwiseAbs().maxCoeff() < 1e-6);
  }

  SECTION("variation is invariant to uniform scaling") {
    PointCloud cloud =
        make_cloud(cylinder_samples(900, Vector3::UnitZ(), Vector3::Zero(),
                                    0.5, 1.0, rng));
    const NeighborIndex index(cloud);
    const FeatureField base = feature_field(cloud, index, RadiusOf{0.25});

    PointCloud scaled = cloud;
    scaled.positions = 3.0 * cloud.positions;
    const NeighborIndex scaled_index(scaled);
    const FeatureField big = feature_field(scaled, scaled_index, RadiusOf{0.75});
    REQUIRE((big.variations - base.variations).cwiseAbs().maxCoeff() < 1e-9);
  }
}
