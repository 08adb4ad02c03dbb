#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "fp/embed.hpp"
#include "fp/errors.hpp"
#include "test_support.hpp"

using namespace fp;

namespace {

Codebook codebook_3d() {
  Codebook cb;
  cb.k = 5;
  cb.centroids.resize(5, 3);
  cb.centroids << 0, 0, 1, 1, 0, 2, 0, 1, 3, 1, 1, 4, 0.5, 0.5, 5;
  cb.assignment.assign(5, 0);
  return cb;
}

Histogram one_hot(Eigen::Index k, Eigen::Index at) {
  Histogram h;
  h.values = Eigen::VectorXd::Zero(k);
  h.values[at] = 1.0;
  return h;
}

}  // namespace

TEST_CASE("one-hot histograms land on their word; uniform lands on the mean") {
  const Codebook cb = codebook_3d();
  std::vector<Histogram> hists = {one_hot(5, 3)};
  Histogram uniform;
  uniform.values = Eigen::VectorXd::Constant(5, 0.2);
  hists.push_back(uniform);

  const SampleEmbedding emb = embed_samples(hists, {"a", "b"}, {"air", "ground"}, cb, {0, 1});
  CHECK(emb.coords(0, 0) == cb.centroids(3, 0));
  CHECK(emb.coords(0, 1) == cb.centroids(3, 1));
  CHECK(emb.coords(1, 0) == doctest::Approx(cb.centroids.col(0).mean()).epsilon(1e-15));
  CHECK(emb.coords(1, 1) == doctest::Approx(cb.centroids.col(1).mean()).epsilon(1e-15));
}

TEST_CASE("samples stay inside the per-axis bounds of the words") {
  Rng rng(5);
  const Codebook cb = codebook_3d();
  std::vector<Histogram> hists;
  std::vector<std::string> ids, labels;
  for (int i = 0; i < 100; ++i) {
    hists.push_back(Histogram{oracle::random_simplex(rng, 5)});
    ids.push_back("s" + std::to_string(i));
    labels.push_back(i % 2 ? "air" : "ground");
  }
  const SampleEmbedding emb = embed_samples(hists, ids, labels, cb, {1, 2});
  for (Eigen::Index axis = 0; axis < 2; ++axis) {
    const double lo = emb.word_coords.col(axis).minCoeff();
    const double hi = emb.word_coords.col(axis).maxCoeff();
    CHECK(emb.coords.col(axis).minCoeff() >= lo - 1e-12);
    CHECK(emb.coords.col(axis).maxCoeff() <= hi + 1e-12);
  }

  // barycentric identity: histogram times word coords reproduces the sample
  for (std::size_t i = 0; i < hists.size(); ++i) {
    const double x = hists[i].values.dot(emb.word_coords.col(0));
    const double y = hists[i].values.dot(emb.word_coords.col(1));
    CHECK(emb.coords(static_cast<Eigen::Index>(i), 0) == x);
    CHECK(emb.coords(static_cast<Eigen::Index>(i), 1) == y);
  }
}

TEST_CASE("csv export: row counts and coordinate round trip") {
  const Codebook cb = codebook_3d();
  Codebook two_words;
  two_words.k = 2;
  two_words.centroids.resize(2, 2);
  two_words.centroids << 0.123456789012345, 1, 2, 3;
  two_words.assignment.assign(2, 0);
  const SampleEmbedding emb =
      embed_samples({one_hot(2, 0)}, {"s0"}, {"air"}, two_words, {0, 1});
  const std::string csv = export_embedding_csv(emb);

  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "kind,id,label,x,y");
  int rows = 0;
  double first_x = 0.0;
  while (std::getline(lines, line)) {
    if (rows == 0) {
      const auto c1 = line.find(',', line.find(',', line.find(',') + 1) + 1);
      first_x = std::stod(line.substr(c1 + 1, line.find(',', c1 + 1) - c1 - 1));
    }
    ++rows;
  }
  CHECK(rows == 3);  // 2 words + 1 sample
  CHECK(std::abs(first_x - 0.123456789012345) <= 1e-9);  // 12 significant digits
}

TEST_CASE("svg export is deterministic, well formed, one marker per point") {
  Rng rng(9);
  const Codebook cb = codebook_3d();
  std::vector<Histogram> hists;
  std::vector<std::string> ids, labels;
  for (int i = 0; i < 7; ++i) {
    hists.push_back(Histogram{oracle::random_simplex(rng, 5)});
    ids.push_back("s" + std::to_string(i));
    labels.push_back(i % 2 ? "air" : "ground");
  }
  const SampleEmbedding emb = embed_samples(hists, ids, labels, cb, {0, 1});
  const std::string svg = export_embedding_svg(emb);
  CHECK(svg == export_embedding_svg(emb));  // byte determinism
  CHECK(oracle::xml_well_formed(svg));
  CHECK(oracle::count_occurrences(svg, "class=\"word\"") == 5);
  CHECK(oracle::count_occurrences(svg, "class=\"sample\"") == 7);
}

TEST_CASE("dims out of range are rejected") {
  const Codebook cb = codebook_3d();
  CHECK_THROWS_AS(embed_samples({one_hot(5, 0)}, {"s"}, {"l"}, cb, {0, 3}), UsageError);
  CHECK_THROWS_AS(embed_samples({one_hot(5, 0)}, {"s"}, {"l"}, cb, {-1, 1}), UsageError);
}
