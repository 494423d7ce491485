// SPDX-License-Identifier: MIT
#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hybridseg/io.hpp"
#include "hybridseg/kdtree.hpp"
#include "hybridseg/point_cloud.hpp"
#include "support/synthetic.hpp"

using namespace hybridseg;
using testsupport::make_cloud;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

// O(N) reference for the index queries; ties resolved toward lower index.
std::vector<Neighbor> brute_knn(const Matrix3Xr& pts, const Vector3& q, int k) {
  std::vector<Neighbor> all;
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    all.push_back({static_cast<int>(i), (pts.row(i).transpose() - q).norm()});
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance ||
           (a.distance == b.distance && a.index < b.index);
  });
  all.resize(std::min<std::size_t>(static_cast<std::size_t>(k), all.size()));
  return all;
}

}  // namespace

TEST_CASE("xyz loading") {
  const auto path = temp_file("core_basic.xyz");

  SECTION("positions only") {
    write_file(path, "0 0 0\n1 0 0\n");
    const PointCloud cloud = load_xyz(path.string());
    REQUIRE(cloud.size() == 2);
    REQUIRE_FALSE(cloud.has_normals());
    REQUIRE(cloud.positions(1, 0) == 1.0);
  }

  SECTION("non-unit normals are renormalized") {
    write_file(path, "0 0 0 0 0 2\n");
    const PointCloud cloud = load_xyz(path.string());
    REQUIRE(cloud.has_normals());
    REQUIRE((*cloud.normals)(0, 2) == Catch::Approx(1.0));
  }

  SECTION("empty file reports zero points") {
    write_file(path, "");
    REQUIRE_THROWS_WITH(load_xyz(path.string()),
                        Catch::Matchers::ContainsSubstring("zero points"));
  }

  SECTION("comma separators") {
    write_file(path, "1,2,3\n4,5,6\n");
    const PointCloud cloud = load_xyz(path.string());
    REQUIRE(cloud.size() == 2);
    REQUIRE(cloud.positions(1, 1) == 5.0);
  }

  SECTION("non-finite values rejected") {
    write_file(path, "1 2 nan\n");
    REQUIRE_THROWS_AS(load_xyz(path.string()), ParseError);
  }

  SECTION("inconsistent column count rejected") {
    write_file(path, "1 2 3\n1 2 3 0 0 1\n");
    REQUIRE_THROWS_AS(load_xyz(path.string()), ParseError);
  }
}

TEST_CASE("round trips") {
  Rng rng(5);
  PointCloud cloud;
  cloud.positions.resize(64, 3);
  cloud.normals.emplace(64, 3);
  for (int i = 0; i < 64; ++i) {
    for (int c = 0; c < 3; ++c) cloud.positions(i, c) = rng.uniform(-2, 2);
    Vector3 n(rng.gaussian(), rng.gaussian(), rng.gaussian());
    cloud.normals->row(i) = n.normalized().transpose();
  }

  SECTION("binary ply is bit-exact") {
    const auto path = temp_file("core_roundtrip.ply");
    save_cloud(cloud, path.string(), CloudFormat::PlyBinary);
    const PointCloud back = load_ply(path.string());
    REQUIRE(back.positions == cloud.positions);
    REQUIRE(back.has_normals());
    REQUIRE(*back.normals == *cloud.normals);
  }

  SECTION("ascii formats are close") {
    for (CloudFormat fmt : {CloudFormat::Xyz, CloudFormat::PlyAscii}) {
      const auto path =
          temp_file(fmt == CloudFormat::Xyz ? "rt.xyz" : "rt_ascii.ply");
      save_cloud(cloud, path.string(), fmt);
      const PointCloud back = load_cloud(path.string());
      REQUIRE((back.positions - cloud.positions).cwiseAbs().maxCoeff() < 1e-6);
    }
  }

  SECTION("fmat is bit-exact") {
    const auto path = temp_file("core_matrix.fmat");
    Eigen::MatrixXd m(7, 5);
    for (int i = 0; i < 7; ++i)
      for (int j = 0; j < 5; ++j) m(i, j) = rng.gaussian();
    save_fmat(m, path.string());
    REQUIRE(load_fmat(path.string()) == m);
  }

  SECTION("ply with unknown properties and a face element") {
    const auto path = temp_file("core_extra.ply");
    write_file(path,
               "ply\nformat ascii 1.0\nelement vertex 2\n"
               "property float x\nproperty float y\nproperty float z\n"
               "property float confidence\n"
               "element face 1\nproperty list uchar int vertex_indices\n"
               "end_header\n0 0 0 0.5\n1 0 0 0.9\n3 0 1 0\n");
    const PointCloud back = load_ply(path.string());
    REQUIRE(back.size() == 2);
    REQUIRE(back.positions(1, 0) == 1.0);
  }
}

TEST_CASE("normalize_cloud") {
  SECTION("two-point case") {
    PointCloud cloud = make_cloud(Matrix3Xr::Zero(2, 3));
    cloud.positions(1, 0) = 2.0;
    const PointCloud out = normalize_cloud(cloud);
    REQUIRE(out.positions(0, 0) == Catch::Approx(-0.5));
    REQUIRE(out.positions(1, 0) == Catch::Approx(0.5));
  }

  SECTION("idempotent within 1e-9") {
    Rng rng(3);
    PointCloud cloud;
    cloud.positions.resize(200, 3);
    for (int i = 0; i < 200; ++i)
      for (int c = 0; c < 3; ++c) cloud.positions(i, c) = rng.uniform(-5, 9);
    const PointCloud once = normalize_cloud(cloud);
    const PointCloud twice = normalize_cloud(once);
    REQUIRE((once.positions - twice.positions).cwiseAbs().maxCoeff() < 1e-9);
    REQUIRE(once.positions.colwise().mean().norm() < 1e-9);
    REQUIRE(cloud_diameter(once.positions) == Catch::Approx(1.0).margin(1e-6));
  }

  SECTION("degenerate inputs") {
    PointCloud single = make_cloud(Matrix3Xr::Zero(1, 3));
    REQUIRE_THROWS_AS(normalize_cloud(single), std::invalid_argument);
    PointCloud coincident = make_cloud(Matrix3Xr::Ones(5, 3));
    REQUIRE_THROWS_AS(normalize_cloud(coincident), std::invalid_argument);
  }
}

TEST_CASE("neighbor index basics") {
  Rng rng(11);
  Matrix3Xr pts(50, 3);
  for (int i = 0; i < 50; ++i)
    for (int c = 0; c < 3; ++c) pts(i, c) = rng.uniform();
  const NeighborIndex index(pts);

  SECTION("self query") {
    const auto nb = index.knn(pts.row(7).transpose(), 1);
    REQUIRE(nb[0].index == 7);
    REQUIRE(nb[0].distance == 0.0);
  }

  SECTION("k beyond N clamps by default, throws when asked") {
    REQUIRE(index.knn(Vector3::Zero(), 100).size() == 50);
    REQUIRE_THROWS_AS(index.knn(Vector3::Zero(), 100, /*clamp=*/false),
                      std::invalid_argument);
  }

  SECTION("radius on a unit grid") {
    Matrix3Xr grid(27, 3);
    int at = 0;
    for (int x = -1; x <= 1; ++x)
      for (int y = -1; y <= 1; ++y)
        for (int z = -1; z <= 1; ++z) grid.row(at++) << x, y, z;
    const NeighborIndex grid_index(grid);
    const auto within = grid_index.radius(Vector3::Zero(), 1.5);
    // |p| <= 1.5 covers norms 0, 1, and sqrt(2): 1 + 6 + 12 points
    REQUIRE(within.size() == 19);
  }
}

TEST_CASE("index queries match brute force") {
  Rng rng(17);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 20 + static_cast<int>(rng.uniform_index(480));
    Matrix3Xr pts(n, 3);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < 3; ++c)
        pts(i, c) = std::round(rng.uniform(-1, 1) * 20.0) / 20.0;  // force ties
    const NeighborIndex index(pts);

    for (int q = 0; q < 25; ++q) {
      const Vector3 query(rng.uniform(-1, 1), rng.uniform(-1, 1),
                          rng.uniform(-1, 1));
      const int k = 1 + static_cast<int>(rng.uniform_index(n));
      const auto got = index.knn(query, k);
      const auto want = brute_knn(pts, query, k);
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < want.size(); ++i) {
        REQUIRE(got[i].index == want[i].index);
        REQUIRE(got[i].distance == Catch::Approx(want[i].distance).margin(1e-15));
      }

      const double radius = rng.uniform(0.0, 1.0);
      const auto in_radius = index.radius(query, radius);
      std::vector<int> brute;
      for (Eigen::Index i = 0; i < pts.rows(); ++i)
        if ((pts.row(i).transpose() - query).norm() <= radius)
          brute.push_back(static_cast<int>(i));
      REQUIRE(in_radius.size() == brute.size());
      for (std::size_t i = 0; i < brute.size(); ++i)
        REQUIRE(in_radius[i].index == brute[i]);
    }
  }

  SECTION("knn with k = N returns every index once") {
    Matrix3Xr pts(40, 3);
    for (int i = 0; i < 40; ++i)
      for (int c = 0; c < 3; ++c) pts(i, c) = rng.uniform();
    const NeighborIndex index(pts);
    const auto all = index.knn(Vector3(0.3, 0.3, 0.3), 40);
    std::vector<char> seen(40, 0);
    for (const auto& nb : all) seen[static_cast<std::size_t>(nb.index)] += 1;
    for (char c : seen) REQUIRE(c == 1);
  }
}

TEST_CASE("label files") {
  const auto path = temp_file("core_labels.txt");
  save_labels({0, 1, 1, 2}, path.string());
  REQUIRE(load_labels(path.string()) == std::vector<int>{0, 1, 1, 2});
  write_file(path, "abc\n");
  REQUIRE_THROWS_AS(load_labels(path.string()), ParseError);
}
