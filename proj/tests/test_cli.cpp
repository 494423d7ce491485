// SPDX-License-Identifier: MIT
//
// End-to-end checks of the command-line tool; each case runs the built
// binary in a scratch directory.
#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hybridseg/io.hpp"
#include "support/synthetic.hpp"

using namespace hybridseg;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() / "hybridseg_cli_tests";
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(HYBRIDSEG_CLI_PATH) + " " + args +
                          " > /dev/null 2> /dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

json read_json(const fs::path& path) {
  json doc;
  std::ifstream in(path);
  REQUIRE(in.good());
  in >> doc;
  return doc;
}

fs::path write_two_plane_fixture(std::vector<int>& gt) {
  Rng rng(2024);
  const PointCloud cloud = testsupport::two_plane_scene(150, rng, &gt);
  const auto dir = scratch_dir();
  save_cloud(cloud, (dir / "two_planes.xyz").string(), CloudFormat::Xyz);
  save_labels(gt, (dir / "two_planes_gt.txt").string());
  return dir / "two_planes.xyz";
}

}  // namespace

TEST_CASE("cli basics") {
  REQUIRE(run("--version") == 0);
  REQUIRE(run("definitely-not-a-command") != 0);
  REQUIRE(run("features --input /nonexistent.xyz --out /tmp/hs_none") == 2);
}

TEST_CASE("cli features") {
  const auto dir = scratch_dir();
  Rng rng(5);
  save_cloud(testsupport::make_cloud(
                 testsupport::sphere_samples(300, Vector3::Zero(), 1.0, rng)),
             (dir / "sphere.xyz").string(), CloudFormat::Xyz);

  const auto out = dir / "features_out";
  REQUIRE(run("features --input " + (dir / "sphere.xyz").string() +
              " --k 32 --out " + out.string()) == 0);
  const Eigen::MatrixXd normals = load_fmat((out / "normals.fmat").string());
  const Eigen::MatrixXd variations =
      load_fmat((out / "variations.fmat").string());
  REQUIRE(normals.rows() == 300);
  REQUIRE(normals.cols() == 3);
  REQUIRE(variations.rows() == 300);
  REQUIRE(variations.maxCoeff() <= 1.0 / 3.0 + 1e-12);
  REQUIRE(fs::exists(out / "manifest.json"));

  const json manifest = read_json(out / "manifest.json");
  REQUIRE(manifest.at("command") == "features");
  REQUIRE(manifest.at("inputs").size() == 1);
}

TEST_CASE("cli implicit determinism") {
  const auto dir = scratch_dir();
  Rng rng(6);
  save_cloud(testsupport::make_cloud(
                 testsupport::gaussian_blob(2000, Vector3::Zero(), 1.0, rng)),
             (dir / "blob.xyz").string(), CloudFormat::Xyz);

  const auto out_a = dir / "imp_a";
  const auto out_b = dir / "imp_b";
  const std::string args = "implicit --input " + (dir / "blob.xyz").string() +
                           " --count 500 --crop-ratio 0.2 --seed 42 --out ";
  REQUIRE(run(args + out_a.string()) == 0);
  REQUIRE(run(args + out_b.string()) == 0);
  REQUIRE(load_fmat((out_a / "udf.fmat").string()) ==
          load_fmat((out_b / "udf.fmat").string()));
  REQUIRE(load_fmat((out_a / "queries.fmat").string()) ==
          load_fmat((out_b / "queries.fmat").string()));
}

TEST_CASE("cli mask arithmetic") {
  const auto dir = scratch_dir();
  Rng rng(7);
  save_cloud(testsupport::make_cloud(
                 testsupport::gaussian_blob(600, Vector3::Zero(), 1.0, rng)),
             (dir / "mask_cloud.xyz").string(), CloudFormat::Xyz);
  const auto out = dir / "mask_out";
  REQUIRE(run("mask --input " + (dir / "mask_cloud.xyz").string() +
              " --K 128 --k 32 --m-r 0.6 --seed 3 --out " + out.string()) == 0);
  const json mask = read_json(out / "mask.json");
  REQUIRE(mask.at("M") == 77);
  REQUIRE(mask.at("centers").size() == 128);
  REQUIRE(mask.at("masked_ids").size() == 77);
}

TEST_CASE("cli eval on identical labels") {
  const auto dir = scratch_dir();
  save_labels({0, 0, 1, 1, 2, 2}, (dir / "eval_labels.txt").string());
  const auto out = dir / "eval_out";
  REQUIRE(run("eval --pred " + (dir / "eval_labels.txt").string() + " --gt " +
              (dir / "eval_labels.txt").string() + " --out " + out.string()) ==
          0);
  const json report = read_json(out / "report.json");
  REQUIRE(report.at("seg_iou").get<double>() == 1.0);
}

TEST_CASE("cli segment on the two-plane fixture") {
  std::vector<int> gt;
  const auto input = write_two_plane_fixture(gt);
  const auto dir = input.parent_path();
  const auto out = dir / "segment_out";

  REQUIRE(run("segment --input " + input.string() + " --gt " +
              (dir / "two_planes_gt.txt").string() + " --seed 7 --out " +
              out.string()) == 0);

  const json metrics = read_json(out / "metrics.json");
  REQUIRE(metrics.at("seg_iou").get<double>() == 1.0);
  REQUIRE(metrics.at("K_pred") == 2);

  const json segments = read_json(out / "segments.json");
  REQUIRE(segments.at("segments").size() == 2);
  for (const auto& segment : segments.at("segments"))
    REQUIRE(segment.at("type") == "plane");

  const auto labels = load_labels((out / "labels.txt").string());
  REQUIRE(labels.size() == gt.size());

  // resolved config and manifest accompany every run
  REQUIRE(fs::exists(out / "resolved.cfg"));
  const json manifest = read_json(out / "manifest.json");
  REQUIRE(manifest.at("config").contains("sigma_edge"));
}

TEST_CASE("cli segment leaves inputs untouched and ignores thread count") {
  std::vector<int> gt;
  const auto input = write_two_plane_fixture(gt);
  const auto dir = input.parent_path();

  const auto read_bytes = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const std::string before = read_bytes(input);

  const std::string base = "segment --input " + input.string() + " --seed 11 ";
  REQUIRE(run(base + "--threads 1 --out " + (dir / "seg_t1").string()) == 0);
  REQUIRE(run(base + "--threads 4 --out " + (dir / "seg_t4").string()) == 0);

  REQUIRE(read_bytes(input) == before);
  REQUIRE(load_labels((dir / "seg_t1" / "labels.txt").string()) ==
          load_labels((dir / "seg_t4" / "labels.txt").string()));
  REQUIRE(read_bytes(dir / "seg_t1" / "descriptors_consistency.fmat") ==
          read_bytes(dir / "seg_t4" / "descriptors_consistency.fmat"));
}

TEST_CASE("cli segment rejects unknown config keys") {
  std::vector<int> gt;
  const auto input = write_two_plane_fixture(gt);
  const auto dir = input.parent_path();
  std::ofstream(dir / "bad.cfg") << "not_a_key = 1\n";
  REQUIRE(run("segment --input " + input.string() + " --config " +
              (dir / "bad.cfg").string() + " --out " +
              (dir / "segment_bad").string()) == 2);
}

TEST_CASE("cli ae-verify") {
  const auto out = scratch_dir() / "ae_out";
  REQUIRE(run("ae-verify --n 12 --m 3 --N 80 --trials 10 --seed 5 --out " +
              out.string()) == 0);
  const json report = read_json(out / "ae_report.json");
  REQUIRE(report.at("pass") == true);
  REQUIRE(report.at("prop1_passes") == 10);
}
