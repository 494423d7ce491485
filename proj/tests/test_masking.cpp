// SPDX-License-Identifier: MIT
#include <catch2/catch_amalgamated.hpp>

#include "hybridseg/masking.hpp"
#include "support/synthetic.hpp"

using namespace hybridseg;
using namespace testsupport;

TEST_CASE("farthest point sampling") {
  Rng rng(3);

  SECTION("K = N selects every index") {
    PointCloud cloud = make_cloud(gaussian_blob(25, Vector3::Zero(), 1, rng));
    auto picked = farthest_point_sample(cloud, 25, 7);
    std::sort(picked.begin(), picked.end());
    for (int i = 0; i < 25; ++i) REQUIRE(picked[static_cast<std::size_t>(i)] == i);
  }

  SECTION("K = 2 on a segment returns the brute-force farthest pair point") {
    Matrix3Xr pts(101, 3);
    for (int i = 0; i <= 100; ++i) pts.row(i) << i / 100.0, 0, 0;
    PointCloud cloud = make_cloud(pts);
    for (std::uint64_t seed : {1ULL, 5ULL, 9ULL}) {
      const auto picked = farthest_point_sample(cloud, 2, seed);
      // second pick must be the true farthest point from the first
      double best = -1.0;
      int want = -1;
      for (int i = 0; i <= 100; ++i) {
        const double d = (pts.row(i) - pts.row(picked[0])).norm();
        if (d > best) {
          best = d;
          want = i;
        }
      }
      REQUIRE(picked[1] == want);
    }
  }

  SECTION("deterministic per seed") {
    PointCloud cloud = make_cloud(gaussian_blob(300, Vector3::Zero(), 1, rng));
    REQUIRE(farthest_point_sample(cloud, 32, 11) ==
            farthest_point_sample(cloud, 32, 11));
  }

  SECTION("spreads better than random subsets") {
    PointCloud cloud = make_cloud(gaussian_blob(400, Vector3::Zero(), 1, rng));
    const int K = 24;
    auto min_pairwise = [&](const std::vector<int>& ids) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = i + 1; j < ids.size(); ++j)
          best = std::min(best, (cloud.positions.row(ids[i]) -
                                 cloud.positions.row(ids[j]))
                                    .norm());
      return best;
    };
    const double fps_spread = min_pairwise(farthest_point_sample(cloud, K, 3));
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<int> random_ids;
      while (static_cast<int>(random_ids.size()) < K) {
        const int pick = static_cast<int>(rng.uniform_index(400));
        if (std::find(random_ids.begin(), random_ids.end(), pick) ==
            random_ids.end())
          random_ids.push_back(pick);
      }
      REQUIRE(fps_spread >= min_pairwise(random_ids));
    }
  }

  SECTION("K out of range") {
    PointCloud cloud = make_cloud(gaussian_blob(10, Vector3::Zero(), 1, rng));
    REQUIRE_THROWS_AS(farthest_point_sample(cloud, 11, 1),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(farthest_point_sample(cloud, 0, 1), std::invalid_argument);
  }
}

TEST_CASE("patch construction") {
  Rng rng(5);

  SECTION("k = 1 keeps only the centers") {
    PointCloud cloud = make_cloud(gaussian_blob(50, Vector3::Zero(), 1, rng));
    const NeighborIndex index(cloud);
    const auto centers = farthest_point_sample(cloud, 8, 3);
    const auto mask = build_patches(cloud, index, centers, 1);
    for (std::size_t p = 0; p < mask.patches.size(); ++p) {
      REQUIRE(mask.patches[p].size() == 1);
      REQUIRE(mask.patches[p][0] == centers[p]);
    }
  }

  SECTION("patches never cross well-separated clusters") {
    PointCloud cloud = make_cloud(
        concat({gaussian_blob(100, Vector3::Zero(), 0.1, rng),
                gaussian_blob(100, Vector3(50, 0, 0), 0.1, rng)}));
    const NeighborIndex index(cloud);
    const auto mask = build_patches(cloud, index, {10, 150}, 32);
    for (int id : mask.patches[0]) REQUIRE(id < 100);
    for (int id : mask.patches[1]) REQUIRE(id >= 100);
  }

  SECTION("every member is among the center's k nearest (brute force)") {
    PointCloud cloud = make_cloud(gaussian_blob(200, Vector3::Zero(), 1, rng));
    const NeighborIndex index(cloud);
    const auto centers = farthest_point_sample(cloud, 16, 5);
    const int k = 20;
    const auto mask = build_patches(cloud, index, centers, k);
    for (std::size_t p = 0; p < mask.patches.size(); ++p) {
      const Vector3 c = cloud.point(centers[p]);
      std::vector<double> dists;
      for (Eigen::Index i = 0; i < cloud.size(); ++i)
        dists.push_back((cloud.point(i) - c).norm());
      std::vector<double> sorted = dists;
      std::nth_element(sorted.begin(), sorted.begin() + k - 1, sorted.end());
      const double kth = sorted[static_cast<std::size_t>(k - 1)];
      for (int id : mask.patches[p])
        REQUIRE(dists[static_cast<std::size_t>(id)] <= kth + 1e-12);
    }
  }

  SECTION("duplicates are flagged when N < k") {
    PointCloud cloud = make_cloud(gaussian_blob(5, Vector3::Zero(), 1, rng));
    const NeighborIndex index(cloud);
    const auto mask = build_patches(cloud, index, {0, 2}, 8);
    REQUIRE(mask.has_duplicates);
    for (const auto& patch : mask.patches) REQUIRE(patch.size() == 8);
  }

  SECTION("coverage bookkeeping") {
    PointCloud cloud = make_cloud(gaussian_blob(64, Vector3::Zero(), 1, rng));
    const NeighborIndex index(cloud);
    const auto all = build_patches(cloud, index,
                                   farthest_point_sample(cloud, 64, 1), 1);
    REQUIRE(all.coverage(64) == Catch::Approx(1.0));
    const auto partial = build_patches(cloud, index, {0}, 16);
    REQUIRE(partial.coverage(64) == Catch::Approx(16.0 / 64.0));
  }
}

TEST_CASE("mask selection") {
  Rng rng(9);
  PointCloud cloud = make_cloud(gaussian_blob(500, Vector3::Zero(), 1, rng));
  const NeighborIndex index(cloud);

  SECTION("the masking formula: K=128, m_r=0.6 gives M=77") {
    const auto centers = farthest_point_sample(cloud, 128, 3);
    const auto mask =
        select_mask(build_patches(cloud, index, centers, 32), 0.6, 5);
    REQUIRE(mask.masked_count == 77);
    int flagged = 0;
    for (auto m : mask.masked) flagged += m;
    REQUIRE(flagged == 77);
  }

  SECTION("cap at K - 1 as the ratio approaches one") {
    const auto centers = farthest_point_sample(cloud, 10, 3);
    const auto mask =
        select_mask(build_patches(cloud, index, centers, 8), 0.999, 5);
    REQUIRE(mask.masked_count == 9);
  }

  SECTION("a single patch cannot satisfy 0 < M < K") {
    const auto patches = build_patches(cloud, index, {0}, 8);
    REQUIRE_THROWS_AS(select_mask(patches, 0.5, 1), std::invalid_argument);
  }

  SECTION("masked and unmasked partition the patches, deterministically") {
    const auto centers = farthest_point_sample(cloud, 64, 3);
    const auto patches = build_patches(cloud, index, centers, 16);
    const auto a = select_mask(patches, 0.4, 11);
    const auto b = select_mask(patches, 0.4, 11);
    REQUIRE(a.masked == b.masked);
    REQUIRE(a.masked_count == 26);  // ceil(0.4 * 64)
    int masked = 0, unmasked = 0;
    for (auto m : a.masked) (m ? masked : unmasked) += 1;
    REQUIRE(masked == a.masked_count);
    REQUIRE(masked + unmasked == 64);
  }
}
