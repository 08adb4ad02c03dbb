#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "fp/errors.hpp"
#include "fp/ingest.hpp"
#include "test_support.hpp"

using namespace fp;

namespace {

const char* kCompounds =
    "id,rt_boiling,rt_polarity,s_0,s_1,s_2\n"
    "c0,100,1.5,1,0,0\n"
    "c1,200,2.5,0,1,0\n";

Dataset parse(const std::string& compounds, const std::string& fingerprints,
              ParseOptions opts = {}) {
  std::istringstream c(compounds), f(fingerprints);
  return parse_csv_pair(c, f, opts);
}

}  // namespace

TEST_CASE("csv pair round trip preserves the dataset") {
  const Dataset ds = parse(kCompounds,
                           "sample_id,label,compound_id,weight\n"
                           "s1,air,c0,0.5\n"
                           "s1,air,c1,0.5\n");
  CHECK(ds.p == 3);
  CHECK(ds.compounds.size() == 2);
  REQUIRE(ds.fingerprints.size() == 1);
  CHECK(ds.fingerprints[0].entries.size() == 2);
  CHECK(ds.fingerprints[0].entries[0].weight == 0.5);
  CHECK(ds.fingerprints[0].label == "air");
  CHECK(ds.compounds[1].rt_polarity == 2.5);
}

TEST_CASE("weight sums beyond tolerance are rejected unless renormalize is set") {
  const std::string fps =
      "sample_id,label,compound_id,weight\n"
      "s1,air,c0,0.7\n"
      "s1,air,c1,0.7\n";
  CHECK_THROWS_WITH_AS(parse(kCompounds, fps), doctest::Contains("weights sum to 1.4"), DataError);

  ParseOptions opts;
  opts.renormalize = true;
  const Dataset ds = parse(kCompounds, fps, opts);
  CHECK(ds.fingerprints[0].entries[0].weight == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("unknown compound references name the offending sample") {
  CHECK_THROWS_WITH_AS(parse(kCompounds,
                             "sample_id,label,compound_id,weight\n"
                             "s9,air,c99,1.0\n"),
                       doctest::Contains("'s9'"), DataError);
}

TEST_CASE("json fingerprints reference compounds by index") {
  std::string doc = R"({
    "p": 2,
    "compounds": [
      {"id": "c0", "rt_boiling": 1, "rt_polarity": 1, "spectrum": [1, 0]},
      {"id": "c1", "rt_boiling": 1, "rt_polarity": 1, "spectrum": [0, 1]}
    ],
    "fingerprints": [
      {"sample_id": "s1", "label": "air", "entries": [{"compound": 0, "weight": 1.0}]}
    ]
  })";
  std::istringstream in(doc);
  const Dataset ds = parse_json(in);
  CHECK(ds.fingerprints[0].entries[0].compound == 0);

  std::string bad = doc;
  bad.replace(bad.find("\"compound\": 0"), 13, "\"compound\": 99");
  std::istringstream bad_in(bad);
  CHECK_THROWS_WITH_AS(parse_json(bad_in), doctest::Contains("'s1'"), DataError);
}

TEST_CASE("malformed rows report line numbers") {
  CHECK_THROWS_WITH_AS(parse("id,rt_boiling,rt_polarity,s_0,s_1,s_2\n"
                             "c0,100,1.5,1,zebra,0\n",
                             "sample_id,label,compound_id,weight\n"),
                       doctest::Contains("line 2"), DataError);
}

TEST_CASE("normalize_weights rescales proportionally") {
  Fingerprint f;
  f.sample_id = "s";
  f.entries = {{0, 0.2}, {1, 0.2}};
  auto out = normalize_weights(f);
  CHECK(out.entries[0].weight == doctest::Approx(0.5).epsilon(1e-15));

  f.entries = {{0, 1.0}};
  CHECK(normalize_weights(f).entries[0].weight == 1.0);

  // hand division oracle
  f.entries = {{0, 3.0}, {1, 1.0}, {2, 0.0}};
  out = normalize_weights(f);
  const double sum = 3.0 + 1.0 + 0.0;
  CHECK(out.entries[0].weight == doctest::Approx(3.0 / sum).epsilon(1e-15));
  CHECK(out.entries[1].weight == doctest::Approx(1.0 / sum).epsilon(1e-15));
  CHECK(out.entries[2].weight == 0.0);

  f.entries = {{0, 0.0}, {1, 0.0}};
  CHECK_THROWS_AS(normalize_weights(f), DataError);
}

TEST_CASE("normalize_weights is idempotent") {
  Rng rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    Fingerprint f;
    f.sample_id = "s";
    for (std::size_t i = 0; i < 8; ++i) f.entries.push_back({i, rng.uniform(0.0, 5.0)});
    f.entries[0].weight += 1e-3;  // keep the sum positive
    const Fingerprint once = normalize_weights(f);
    const Fingerprint twice = normalize_weights(once);
    CHECK(std::abs(once.weight_sum() - 1.0) <= 1e-12);
    for (std::size_t i = 0; i < f.entries.size(); ++i)
      CHECK(twice.entries[i].weight == doctest::Approx(once.entries[i].weight).epsilon(1e-12));
  }
}

TEST_CASE("validate_dataset reports every violated invariant") {
  Dataset ds = parse(kCompounds,
                     "sample_id,label,compound_id,weight\n"
                     "s1,air,c0,0.5\n"
                     "s1,air,c1,0.5\n"
                     "s2,ground,c0,1.0\n");
  CHECK(validate_dataset(ds).ok());

  SUBCASE("negative spectrum entry names the compound") {
    ds.compounds[1].spectrum[2] = -1.0;
    const auto report = validate_dataset(ds);
    REQUIRE(report.errors.size() == 1);
    CHECK(report.errors[0].location == "compound 'c1'");
  }
  SUBCASE("duplicate compound index in a fingerprint") {
    ds.fingerprints[0].entries = {{0, 0.5}, {0, 0.5}};
    const auto report = validate_dataset(ds);
    REQUIRE(report.errors.size() == 1);
    CHECK(report.errors[0].message == "duplicate compound index 0");
  }
  SUBCASE("out-of-range compound index") {
    ds.fingerprints[1].entries = {{7, 1.0}};
    const auto report = validate_dataset(ds);
    REQUIRE(report.errors.size() == 1);
    CHECK(report.errors[0].location == "fingerprint 's2'");
  }
}

TEST_CASE("serialize then parse reproduces the dataset") {
  SynthConfig cfg;
  cfg.clusters = 2;
  cfg.compounds = 20;
  cfg.dim = 5;
  cfg.samples_per_group = 3;
  const Dataset ds = generate_synthetic_dataset(cfg, 42);

  std::ostringstream c, f;
  write_csv_pair(ds, c, f);
  const Dataset back = parse(c.str(), f.str());
  REQUIRE(back.compounds.size() == ds.compounds.size());
  REQUIRE(back.fingerprints.size() == ds.fingerprints.size());
  for (std::size_t i = 0; i < ds.compounds.size(); ++i) {
    CHECK(back.compounds[i].id == ds.compounds[i].id);
    CHECK((back.compounds[i].spectrum - ds.compounds[i].spectrum).cwiseAbs().maxCoeff() == 0.0);
  }
  for (std::size_t i = 0; i < ds.fingerprints.size(); ++i)
    for (std::size_t e = 0; e < ds.fingerprints[i].entries.size(); ++e)
      CHECK(std::abs(back.fingerprints[i].entries[e].weight -
                     ds.fingerprints[i].entries[e].weight) <= 1e-12);

  std::ostringstream j;
  write_json(ds, j);
  std::istringstream jin(j.str());
  const Dataset jback = parse_json(jin);
  CHECK(jback.compounds.size() == ds.compounds.size());
  for (std::size_t i = 0; i < ds.fingerprints.size(); ++i)
    for (std::size_t e = 0; e < ds.fingerprints[i].entries.size(); ++e)
      CHECK(std::abs(jback.fingerprints[i].entries[e].weight -
                     ds.fingerprints[i].entries[e].weight) <= 1e-12);
}

TEST_CASE("synthetic generation is a pure function of config and seed") {
  SynthConfig cfg;
  cfg.clusters = 3;
  cfg.compounds = 30;
  cfg.dim = 8;
  cfg.samples_per_group = 4;
  const Dataset a = generate_synthetic_dataset(cfg, 7);
  const Dataset b = generate_synthetic_dataset(cfg, 7);
  std::ostringstream ca, fa, cb, fb;
  write_csv_pair(a, ca, fa);
  write_csv_pair(b, cb, fb);
  CHECK(ca.str() == cb.str());
  CHECK(fa.str() == fb.str());

  const Dataset other = generate_synthetic_dataset(cfg, 8);
  std::ostringstream co, fo;
  write_csv_pair(other, co, fo);
  CHECK(fa.str() != fo.str());
}

TEST_CASE("synthetic datasets satisfy all invariants") {
  SynthConfig cfg;
  cfg.clusters = 3;
  cfg.compounds = 50;
  cfg.dim = 12;
  cfg.noise = 0.2;
  cfg.samples_per_group = 5;
  cfg.mixing_a = {0.8, 0.1, 0.1};
  cfg.mixing_b = {0.1, 0.1, 0.8};
  cfg.structure = "arc";
  const Dataset ds = generate_synthetic_dataset(cfg, 3);
  CHECK(validate_dataset(ds).ok());
  CHECK(ds.compounds.size() == 50);
  CHECK(ds.fingerprints.size() == 10);
  for (const auto& c : ds.compounds) CHECK(c.spectrum.minCoeff() >= 0.0);
}

TEST_CASE("synthetic generator rejects nonpositive counts and dimensions") {
  SynthConfig cfg;
  cfg.clusters = 0;
  CHECK_THROWS_AS(generate_synthetic_dataset(cfg, 1), UsageError);
  cfg = SynthConfig{};
  cfg.dim = 0;
  CHECK_THROWS_AS(generate_synthetic_dataset(cfg, 1), UsageError);
  cfg = SynthConfig{};
  cfg.compounds = 2;
  cfg.clusters = 3;
  CHECK_THROWS_AS(generate_synthetic_dataset(cfg, 1), UsageError);
}

TEST_CASE("error types carry the CLI exit-code contract") {
  CHECK(UsageError("u").exit_code() == 1);
  CHECK(DataError("d").exit_code() == 2);
  CHECK(NumericalError("n").exit_code() == 3);
}

TEST_CASE("synth config parser handles keys, comments and errors") {
  std::istringstream in(
      "# desk-scale null dataset\n"
      "clusters = 3\n"
      "compounds = 60\n"
      "dim = 10\n"
      "noise = 0.05\n"
      "mixing_a = 0.8,0.1,0.1\n"
      "label_b = ground\n");
  const SynthConfig cfg = parse_synth_config(in);
  CHECK(cfg.clusters == 3);
  CHECK(cfg.compounds == 60);
  CHECK(cfg.mixing_a == std::vector<double>{0.8, 0.1, 0.1});
  CHECK(cfg.label_b == "ground");

  std::istringstream bad("cluster_count = 3\n");
  CHECK_THROWS_AS(parse_synth_config(bad), UsageError);
}
