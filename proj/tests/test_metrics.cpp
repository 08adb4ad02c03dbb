#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fp/errors.hpp"
#include "fp/ingest.hpp"
#include "fp/metrics.hpp"
#include "fp/pipeline.hpp"
#include "test_support.hpp"

using namespace fp;

namespace {

Codebook codebook_from(const Eigen::MatrixXd& centroids) {
  Codebook cb;
  cb.centroids = centroids;
  cb.k = centroids.rows();
  cb.assignment.assign(static_cast<std::size_t>(centroids.rows()), 0);
  return cb;
}

Codebook random_codebook(Rng& rng, Eigen::Index k, Eigen::Index d) {
  Eigen::MatrixXd c(k, d);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < d; ++j) c(i, j) = rng.normal();
  return codebook_from(c);
}

Histogram simplex_hist(Rng& rng, Eigen::Index k) {
  Histogram h;
  h.values = oracle::random_simplex(rng, k);
  return h;
}

}  // namespace

TEST_CASE("gdd closed form on a two-word codebook") {
  Eigen::MatrixXd centroids(2, 2);
  centroids << 0, 0, 1, 0;
  const Codebook cb = codebook_from(centroids);
  Histogram f, g;
  f.values = Eigen::Vector2d(1, 0);
  g.values = Eigen::Vector2d(0, 1);
  CHECK(gdd(f, g, cb) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(gdd(f, f, cb) == 0.0);
}

TEST_CASE("gdd is invariant under centroid translation") {
  Rng rng(9);
  const Codebook cb = random_codebook(rng, 6, 3);
  Codebook shifted = cb;
  shifted.centroids.rowwise() += Eigen::RowVector3d(3.5, -2.0, 0.25);
  for (int rep = 0; rep < 20; ++rep) {
    const Histogram f = simplex_hist(rng, 6);
    const Histogram g = simplex_hist(rng, 6);
    CHECK(gdd(f, g, cb) == doctest::Approx(gdd(f, g, shifted)).epsilon(1e-12));
  }
}

TEST_CASE("gdd is a pseudometric over random triples") {
  Rng rng(41);
  for (const Eigen::Index k : {2, 10, 100}) {
    const Codebook cb = random_codebook(rng, k, 3);
    for (int rep = 0; rep < 40; ++rep) {
      const Histogram f = simplex_hist(rng, k);
      const Histogram g = simplex_hist(rng, k);
      const Histogram h = simplex_hist(rng, k);
      const double fg = gdd(f, g, cb);
      const double gh = gdd(g, h, cb);
      const double fh = gdd(f, h, cb);
      CHECK(fg >= 0.0);
      CHECK(fg == gdd(g, f, cb));
      CHECK(gdd(f, f, cb) <= 1e-9);
      CHECK(fh <= fg + gh + 1e-9);
    }
  }
}

TEST_CASE("gdd vanishes when the histogram difference is in the centroid kernel") {
  Eigen::MatrixXd centroids(3, 2);
  centroids << 1, 2, 1, 2, 0, 0;  // duplicated word: f != g but same barycenter
  const Codebook cb = codebook_from(centroids);
  Histogram f, g;
  f.values = Eigen::Vector3d(1, 0, 0);
  g.values = Eigen::Vector3d(0, 1, 0);
  CHECK(gdd(f, g, cb) <= 1e-15);
}

TEST_CASE("gdd_pairwise matches element-wise calls") {
  Rng rng(15);
  const Codebook cb = random_codebook(rng, 8, 4);
  std::vector<Histogram> hists;
  std::vector<std::string> ids;
  for (int i = 0; i < 7; ++i) {
    hists.push_back(simplex_hist(rng, 8));
    ids.push_back("s" + std::to_string(i));
  }
  const DistanceMatrix dm = gdd_pairwise(hists, ids, cb);
  for (Eigen::Index i = 0; i < 7; ++i) {
    CHECK(dm.values(i, i) == 0.0);
    for (Eigen::Index j = i + 1; j < 7; ++j) {
      const double direct = gdd(hists[static_cast<std::size_t>(i)],
                                hists[static_cast<std::size_t>(j)], cb);
      CHECK(dm.values(i, j) == direct);  // bitwise match to element-wise calls
      CHECK(dm.values(j, i) == direct);
    }
  }

  const DistanceMatrix single = gdd_pairwise({hists[0]}, {"s0"}, cb);
  CHECK(single.values.rows() == 1);
  CHECK(single.values(0, 0) == 0.0);

  const DistanceMatrix dup = gdd_pairwise({hists[0], hists[0]}, {"a", "b"}, cb);
  CHECK(dup.values(0, 1) == 0.0);
}

TEST_CASE("mmd equals the expanded kernel-sum form and the point distance") {
  SynthConfig cfg;
  cfg.clusters = 2;
  cfg.compounds = 40;
  cfg.dim = 8;
  cfg.samples_per_group = 3;
  const Dataset ds = generate_synthetic_dataset(cfg, 19);
  const DiffusionMap map = build_map(ds, MapSettings{});

  CHECK(mmd(ds.fingerprints[0], ds.fingerprints[0], map) == 0.0);

  // single-compound fingerprints reduce to the compound diffusion distance
  Fingerprint fx, fy;
  fx.sample_id = "x";
  fx.entries = {{3, 1.0}};
  fy.sample_id = "y";
  fy.entries = {{17, 1.0}};
  CHECK(mmd(fx, fy, map) == doctest::Approx(diffusion_distance(3, 17, map)).epsilon(1e-14));

  // kernel-sum oracle with k(x,y) = <Psi(x), Psi(y)>
  const Fingerprint& sa = ds.fingerprints[0];
  const Fingerprint& sb = ds.fingerprints[4];
  auto kernel = [&](std::size_t i, std::size_t j) {
    return map.coords.row(static_cast<Eigen::Index>(i))
        .dot(map.coords.row(static_cast<Eigen::Index>(j)));
  };
  double aa = 0.0, bb = 0.0, ab = 0.0;
  for (const auto& ea : sa.entries)
    for (const auto& eb : sa.entries) aa += ea.weight * eb.weight * kernel(ea.compound, eb.compound);
  for (const auto& ea : sb.entries)
    for (const auto& eb : sb.entries) bb += ea.weight * eb.weight * kernel(ea.compound, eb.compound);
  for (const auto& ea : sa.entries)
    for (const auto& eb : sb.entries) ab += ea.weight * eb.weight * kernel(ea.compound, eb.compound);
  const double reference = std::sqrt(std::max(0.0, aa + bb - 2.0 * ab));
  CHECK(mmd(sa, sb, map) == doctest::Approx(reference).epsilon(1e-8));
}

TEST_CASE("convergence curve: no-binning limit and single-bin collapse") {
  SynthConfig cfg;
  cfg.clusters = 3;
  cfg.compounds = 60;
  cfg.dim = 10;
  cfg.samples_per_group = 3;
  cfg.mixing_a = {0.7, 0.2, 0.1};
  cfg.mixing_b = {0.1, 0.2, 0.7};
  const Dataset ds = generate_synthetic_dataset(cfg, 23);
  const DiffusionMap map = build_map(ds, MapSettings{});
  const Eigen::Index m = map.coords.rows();

  const auto curve = convergence_curve(ds, map, {1, 3, 20, m}, 7);
  REQUIRE(curve.size() == 4);
  CHECK(curve.back().k == m);
  CHECK(curve.back().max_abs_gap <= 1e-8);  // K = m: GDD reduces to MMD
  CHECK(curve.back().max_abs_gap <= curve.front().max_abs_gap);

  // K = 1: every gdd is zero, so the gap is the largest pairwise mmd
  const DistanceMatrix reference = mmd_pairwise(ds, map);
  CHECK(curve.front().max_abs_gap ==
        doctest::Approx(reference.values.maxCoeff()).epsilon(1e-12));

  // composition oracle: chain the public gdd and mmd operations per K
  const Codebook cb = diffusion_kmeans(map, 3, 7);
  std::vector<Histogram> hists;
  std::vector<std::string> ids;
  for (const auto& fprint : ds.fingerprints) {
    hists.push_back(histogram(fprint, map, cb));
    ids.push_back(fprint.sample_id);
  }
  double gap = 0.0;
  for (std::size_t i = 0; i < hists.size(); ++i)
    for (std::size_t j = i + 1; j < hists.size(); ++j)
      gap = std::max(gap, std::abs(gdd(hists[i], hists[j], cb) -
                                   mmd(ds.fingerprints[i], ds.fingerprints[j], map)));
  CHECK(curve[1].max_abs_gap == doctest::Approx(gap).epsilon(1e-12));

  CHECK_THROWS_AS(convergence_curve(ds, map, {3, 1}, 7), UsageError);      // not ascending
  CHECK_THROWS_AS(convergence_curve(ds, map, {m + 1}, 7), UsageError);     // out of range
  CHECK_THROWS_AS(convergence_curve(ds, map, {}, 7), UsageError);
}

TEST_CASE("centroid ground matrix is the pairwise Euclidean metric") {
  Rng rng(3);
  const Codebook cb = random_codebook(rng, 5, 3);
  const Eigen::MatrixXd ground = centroid_ground(cb);
  CHECK(ground.diagonal().cwiseAbs().maxCoeff() == 0.0);
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 5; ++j)
      CHECK(ground(i, j) ==
            doctest::Approx((cb.centroids.row(i) - cb.centroids.row(j)).norm()).epsilon(1e-14));
}

TEST_CASE("gdd argument validation") {
  Rng rng(1);
  const Codebook cb = random_codebook(rng, 4, 2);
  Histogram wrong;
  wrong.values = Eigen::VectorXd::Ones(5) / 5.0;
  CHECK_THROWS_AS(gdd(wrong, wrong, cb), DataError);
  CHECK_THROWS_AS(gdd_pairwise({}, {}, cb), DataError);
}
