#include <doctest.h>

#include <cstring>
#include <random>

#include "hiersearch/dataset.hpp"
#include "hiersearch/io.hpp"
#include "hiersearch/manifest.hpp"
#include "test_util.hpp"

using namespace hiersearch;
using test_util::error_kind_of;

TEST_CASE("f64 blob round trip is bit exact") {
  test_util::TempDir dir("blob");
  std::mt19937_64 rng(1);
  std::normal_distribution<double> gauss;
  std::vector<double> values(257);
  for (double& v : values) v = gauss(rng);
  values[0] = 0.0;
  values[1] = -0.0;
  values[2] = std::numeric_limits<double>::quiet_NaN();
  write_f64_blob(dir.str("x.f64"), values);
  std::vector<double> back = read_f64_blob(dir.str("x.f64"));
  REQUIRE(back.size() == values.size());
  CHECK(std::memcmp(back.data(), values.data(),
                    values.size() * sizeof(double)) == 0);
  CHECK(error_kind_of([&] { read_f64_blob(dir.str("missing.f64")); }) ==
        ErrorKind::IoError);
}

TEST_CASE("fnv1a64 known vectors") {
  CHECK(fnv1a64_hex("") == "cbf29ce484222325");
  CHECK(fnv1a64_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a64_hex("hello") == "a430d84680aabd0b");
}

TEST_CASE("feature jsonl round trip with optional fields") {
  test_util::TempDir dir("jsonl");
  std::vector<FeatureRecord> records(3);
  records[0].image_id = "a";
  records[0].label = "leaf_x";
  records[0].features = Eigen::Vector3d(1.0, 2.5, -3.0);
  records[1].image_id = "b";
  records[1].features = Eigen::Vector3d(0.0, 0.25, 0.125);
  records[1].rerank_descriptor = Eigen::Vector2d(7.0, -8.0);
  records[2].image_id = "c";
  records[2].label = "leaf_y";
  records[2].features = Eigen::Vector3d(4.0, 5.0, 6.0);

  write_feature_jsonl(dir.str("data.jsonl"), records);
  std::vector<FeatureRecord> back = read_feature_jsonl(dir.str("data.jsonl"));
  REQUIRE(back.size() == 3);
  CHECK(back[0].label == "leaf_x");
  CHECK_FALSE(back[1].label);
  CHECK(back[0].features == records[0].features);
  REQUIRE(back[1].rerank_descriptor);
  CHECK(*back[1].rerank_descriptor == *records[1].rerank_descriptor);
  CHECK_FALSE(back[0].rerank_descriptor);

  write_text_file(dir.str("bad.jsonl"), "{\"image_id\": 3}\n");
  CHECK(error_kind_of([&] { read_feature_jsonl(dir.str("bad.jsonl")); }) ==
        ErrorKind::ParseError);
}

TEST_CASE("synthetic generation: sigma 0 reproduces the class embeddings") {
  Taxonomy t0 = test_util::make_t0();
  ClassEmbeddingTable table = compute_class_embeddings(t0);
  SynthConfig config;
  config.per_class = 4;
  config.sigma = 0.0;
  SynthDataset data = generate_synthetic(t0, table, config);
  CHECK(data.train.size() == 5 * 3);  // floor(0.8 * 4 + 0.5) = 3 per class
  CHECK(data.test.size() == 5 * 1);
  for (const FeatureRecord& r : data.train) {
    int row = table.class_index(*r.label);
    CHECK((r.features - table.row(row)).norm() == 0.0);
    CHECK((r.features.normalized() - table.row(row)).norm() <= 1e-12);
  }

  SynthConfig bad = config;
  bad.sigma = -1.0;
  CHECK(error_kind_of([&] { generate_synthetic(t0, table, bad); }) ==
        ErrorKind::BadSigma);
}

TEST_CASE("synthetic generation is deterministic per seed and split is 8:2") {
  Taxonomy t0 = test_util::make_t0();
  ClassEmbeddingTable table = compute_class_embeddings(t0);
  SynthConfig config;
  config.per_class = 50;
  config.sigma = 0.1;
  config.seed = 12;
  SynthDataset a = generate_synthetic(t0, table, config);
  SynthDataset b = generate_synthetic(t0, table, config);
  CHECK(a.train.size() == 5 * 40);
  CHECK(a.test.size() == 5 * 10);
  REQUIRE(a.train.size() == b.train.size());
  for (size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train[i].image_id == b.train[i].image_id);
    CHECK(a.train[i].features == b.train[i].features);
  }
  config.seed = 13;
  SynthDataset c = generate_synthetic(t0, table, config);
  CHECK(a.train[0].features != c.train[0].features);
}

TEST_CASE("unseen classes are planted at a type centroid and unlabeled") {
  Taxonomy t0 = test_util::make_t0();
  ClassEmbeddingTable table = compute_class_embeddings(t0);
  SynthConfig config;
  config.per_class = 4;
  config.sigma = 0.0;
  config.unseen_classes = 2;
  config.unseen_per_class = 3;
  config.unseen_level = "type";
  SynthDataset data = generate_synthetic(t0, table, config);
  REQUIRE(data.unseen_info.size() == 2);
  CHECK(data.unseen.size() == 6);
  for (const FeatureRecord& r : data.unseen) CHECK_FALSE(r.label);
  for (const UnseenClassInfo& info : data.unseen_info) {
    int anchor = t0.node_id(info.planted_node);
    CHECK(t0.node(anchor).level == "type");
    CHECK(info.image_ids.size() == 3);
  }
  // sigma 0: every sample sits exactly on the planted centroid, which has
  // unit dot products ordered by the anchor's subtree.
  const UnseenClassInfo& info = data.unseen_info[0];
  const FeatureRecord& sample = data.unseen.front();
  Eigen::VectorXd direction = sample.features.normalized();
  Eigen::VectorXd dots = unseen_similarity(table, direction);
  // The planted type's leaves dominate the similarity profile.
  int anchor = t0.node_id(info.planted_node);
  double best_inside = -2.0, best_outside = -2.0;
  for (size_t i = 0; i < table.class_ids.size(); ++i) {
    int leaf = t0.node_id(table.class_ids[i]);
    bool inside = t0.lowest_common_subsumer(leaf, anchor) == anchor;
    (inside ? best_inside : best_outside) =
        std::max(inside ? best_inside : best_outside, dots(i));
  }
  CHECK(best_inside > best_outside);

  SynthConfig bad = config;
  bad.unseen_level = "galaxy";
  CHECK(error_kind_of([&] { generate_synthetic(t0, table, bad); }) ==
        ErrorKind::LevelNotOnPath);
}

TEST_CASE("run manifest hash ignores the timestamp") {
  RunManifest a;
  a.command = "embed";
  a.config = {{"csv", true}};
  a.input_hashes["taxonomy"] = "0123456789abcdef";
  a.seed = 7;
  a.timestamp = "2026-01-01T00:00:00Z";
  RunManifest b = a;
  b.timestamp = "2026-12-31T23:59:59Z";
  CHECK(a.hash() == b.hash());
  b.seed = 8;
  CHECK(a.hash() != b.hash());
}

TEST_CASE("toml subset config files") {
  test_util::TempDir dir("config");
  write_text_file(dir.str("c.toml"),
                  "# training setup\n"
                  "epochs = 20\n"
                  "lr_max = 0.05 # peak\n"
                  "use_correlation = false\n"
                  "name = \"run one\"\n"
                  "restart_epochs = [5, 10, 20]\n");
  nlohmann::json cfg = load_config_file(dir.str("c.toml"));
  CHECK(cfg["epochs"] == 20);
  CHECK(cfg["lr_max"] == 0.05);
  CHECK(cfg["use_correlation"] == false);
  CHECK(cfg["name"] == "run one");
  CHECK(cfg["restart_epochs"] == nlohmann::json({5, 10, 20}));

  write_text_file(dir.str("c.json"), "{\"epochs\": 7}");
  CHECK(load_config_file(dir.str("c.json"))["epochs"] == 7);

  write_text_file(dir.str("bad.toml"), "[section]\nx = 1\n");
  CHECK(error_kind_of([&] { load_config_file(dir.str("bad.toml")); }) ==
        ErrorKind::ParseError);
}
