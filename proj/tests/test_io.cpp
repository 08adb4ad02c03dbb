#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "fp/errors.hpp"
#include "fp/io.hpp"
#include "test_support.hpp"

using namespace fp;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("fp_io_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

DiffusionMap sample_map(Rng& rng) {
  DiffusionMap map;
  map.d = 3;
  map.t = 2;
  map.coords.resize(9, 3);
  for (Eigen::Index i = 0; i < 9; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) map.coords(i, j) = rng.normal();
  map.eigenvalues.resize(4);
  map.eigenvalues << 1.0, 0.8, 0.25, 0.125;
  return map;
}

}  // namespace

TEST_CASE("map.bin round trips bit-exactly and refuses foreign files") {
  TempDir tmp;
  Rng rng(1);
  const DiffusionMap map = sample_map(rng);
  const fs::path path = tmp.path / "map.bin";
  write_map(map, path);
  const DiffusionMap back = read_map(path);
  CHECK(back.d == map.d);
  CHECK(back.t == map.t);
  CHECK((back.coords - map.coords).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.eigenvalues - map.eigenvalues).cwiseAbs().maxCoeff() == 0.0);

  // bad magic
  {
    std::ofstream out(tmp.path / "bad.bin", std::ios::binary);
    out << "NOPE1234567890";
  }
  CHECK_THROWS_WITH_AS(read_map(tmp.path / "bad.bin"), doctest::Contains("magic"), DataError);

  // version refusal
  {
    std::ofstream out(tmp.path / "vers.bin", std::ios::binary);
    out << "FPDM";
    const std::uint32_t version = 99;
    out.write(reinterpret_cast<const char*>(&version), 4);
  }
  CHECK_THROWS_WITH_AS(read_map(tmp.path / "vers.bin"), doctest::Contains("version"), DataError);

  // truncation
  {
    std::ofstream out(tmp.path / "trunc.bin", std::ios::binary);
    out << "FPDM";
    const std::uint32_t version = 1;
    out.write(reinterpret_cast<const char*>(&version), 4);
  }
  CHECK_THROWS_AS(read_map(tmp.path / "trunc.bin"), DataError);
}

TEST_CASE("cb.bin round trips and validates assignments") {
  TempDir tmp;
  Codebook cb;
  cb.k = 3;
  cb.inertia = 1.25;
  cb.centroids.resize(3, 2);
  cb.centroids << 1, 2, 3, 4, 5, 6;
  cb.assignment = {0, 1, 2, 1, 0};
  const fs::path path = tmp.path / "cb.bin";
  write_codebook(cb, path);
  const Codebook back = read_codebook(path);
  CHECK(back.k == 3);
  CHECK(back.inertia == cb.inertia);
  CHECK(back.assignment == cb.assignment);
  CHECK((back.centroids - cb.centroids).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("histogram and distance CSV round trips") {
  TempDir tmp;
  Rng rng(2);
  HistogramTable table;
  for (int i = 0; i < 4; ++i) {
    table.sample_ids.push_back("sample, " + std::to_string(i));  // comma forces quoting
    table.labels.push_back(i % 2 ? "air" : "ground");
    table.hists.push_back(Histogram{oracle::random_simplex(rng, 6)});
  }
  table.labels[0] = "multi\nline \"label\"";  // quoted newline and escaped quote
  write_histograms(table, tmp.path / "hist.csv");
  const HistogramTable back = read_histograms(tmp.path / "hist.csv");
  CHECK(back.sample_ids == table.sample_ids);
  CHECK(back.labels == table.labels);
  for (int i = 0; i < 4; ++i)
    CHECK((back.hists[i].values - table.hists[i].values).cwiseAbs().maxCoeff() == 0.0);

  DistanceMatrix dm;
  dm.sample_ids = {"a", "b", "c"};
  dm.values.setZero(3, 3);
  dm.values(0, 1) = dm.values(1, 0) = 0.5;
  dm.values(0, 2) = dm.values(2, 0) = 1.25;
  dm.values(1, 2) = dm.values(2, 1) = 0.75;
  write_distance_matrix(dm, tmp.path / "dist.csv");
  const DistanceMatrix dback = read_distance_matrix(tmp.path / "dist.csv");
  CHECK(dback.sample_ids == dm.sample_ids);
  CHECK((dback.values - dm.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("distance matrix validation on read") {
  TempDir tmp;
  write_text_file("a,b\n0,0.5\n0.6,0\n", tmp.path / "asym.csv");
  CHECK_THROWS_WITH_AS(read_distance_matrix(tmp.path / "asym.csv"),
                       doctest::Contains("symmetric"), DataError);
  write_text_file("a,b\n0.1,0.5\n0.5,0\n", tmp.path / "diag.csv");
  CHECK_THROWS_AS(read_distance_matrix(tmp.path / "diag.csv"), DataError);
  write_text_file("a,b\n0,0.5\n", tmp.path / "short.csv");
  CHECK_THROWS_AS(read_distance_matrix(tmp.path / "short.csv"), DataError);
}

TEST_CASE("labels and curve files") {
  TempDir tmp;
  write_text_file("sample_id,label\ns0,air\ns1,ground\n", tmp.path / "labels.csv");
  const auto labels = read_labels(tmp.path / "labels.csv");
  REQUIRE(labels.size() == 2);
  CHECK(labels[0] == std::pair<std::string, std::string>{"s0", "air"});

  write_curve({{1, 0.5}, {10, 0.01}}, tmp.path / "curve.csv");
  std::ifstream in(tmp.path / "curve.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "k,max_abs_gap");
  std::getline(in, line);
  CHECK(line == "1,0.5");
}

TEST_CASE("fnv1a64 matches the reference test vectors") {
  CHECK(fnv1a64_hex("") == "cbf29ce484222325");
  CHECK(fnv1a64_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a64_hex("foobar") == "85944171f73967e8");
}
