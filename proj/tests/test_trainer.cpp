#include <doctest.h>

#include <fstream>
#include <random>

#include "hiersearch/trainer.hpp"
#include "test_util.hpp"

using namespace hiersearch;
using test_util::error_kind_of;

TEST_CASE("sgdr: restart boundaries and decay") {
  TrainConfig cfg;  // defaults: 180 epochs, restarts 12/36/84/180
  CHECK(sgdr_learning_rate(0.0, cfg) == doctest::Approx(cfg.lr_max).epsilon(1e-12));
  CHECK(sgdr_learning_rate(12.0, cfg) ==
        doctest::Approx(cfg.lr_max).epsilon(1e-12));
  CHECK(sgdr_learning_rate(36.0, cfg) ==
        doctest::Approx(cfg.lr_max).epsilon(1e-12));
  CHECK(sgdr_learning_rate(84.0, cfg) ==
        doctest::Approx(cfg.lr_max).epsilon(1e-12));
  CHECK(sgdr_learning_rate(180.0, cfg) ==
        doctest::Approx(cfg.lr_max).epsilon(1e-12));

  // Just below a restart the rate has decayed to (nearly) the floor.
  double range = cfg.lr_max - cfg.lr_min;
  for (double boundary : {12.0, 36.0, 84.0, 180.0}) {
    double lr = sgdr_learning_rate(boundary - 0.01, cfg);
    CHECK(lr >= cfg.lr_min);
    CHECK(lr - cfg.lr_min <= 0.01 * range);
  }

  // Midpoint of the first segment sits halfway between floor and peak.
  CHECK(sgdr_learning_rate(6.0, cfg) ==
        doctest::Approx(cfg.lr_min + 0.5 * range).epsilon(1e-12));
}

TEST_CASE("sgdr: continuity inside segments") {
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.restart_epochs = {10, 25, 40};
  double prev = sgdr_learning_rate(0.0, cfg);
  double segment_start = 0.0;
  for (double e = 0.005; e < 40.0; e += 0.005) {
    double lr = sgdr_learning_rate(e, cfg);
    bool crossed = (e >= 10.0 && segment_start < 10.0) ||
                   (e >= 25.0 && segment_start < 25.0);
    if (!crossed)
      CHECK(std::abs(lr - prev) <= 0.01 * (cfg.lr_max - cfg.lr_min));
    else
      segment_start = e;
    prev = lr;
  }
}

TEST_CASE("sgdr: trailing segment is implied when restarts stop early") {
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.restart_epochs = {12, 36};
  CHECK(sgdr_learning_rate(36.0, cfg) ==
        doctest::Approx(cfg.lr_max).epsilon(1e-12));
  double near_end = sgdr_learning_rate(49.99, cfg);
  CHECK(near_end - cfg.lr_min <= 0.01 * (cfg.lr_max - cfg.lr_min));
}

TEST_CASE("sgdr: domain and config validation") {
  TrainConfig cfg;
  CHECK(error_kind_of([&] { sgdr_learning_rate(-1.0, cfg); }) ==
        ErrorKind::OutOfRangeEpoch);
  CHECK(error_kind_of([&] { sgdr_learning_rate(181.0, cfg); }) ==
        ErrorKind::OutOfRangeEpoch);

  TrainConfig bad;
  bad.restart_epochs = {36, 12};
  CHECK(error_kind_of([&] { sgdr_learning_rate(0.0, bad); }) ==
        ErrorKind::InvalidConfig);
  TrainConfig beyond;
  beyond.epochs = 20;
  beyond.restart_epochs = {12, 36};
  CHECK(error_kind_of([&] { beyond.validate(); }) == ErrorKind::InvalidConfig);
}

namespace {

// Two linearly separable clusters in R^4.
std::vector<LabeledFeature> separable_set() {
  std::mt19937_64 rng(2023);
  std::normal_distribution<double> gauss;
  std::vector<LabeledFeature> out;
  for (int i = 0; i < 10; ++i) {
    Eigen::VectorXd a(4), b(4);
    for (int j = 0; j < 4; ++j) {
      a(j) = gauss(rng) * 0.05;
      b(j) = gauss(rng) * 0.05;
    }
    a(0) += 1.0;
    b(1) += 1.0;
    out.push_back({a, 0});
    out.push_back({b, 1});
  }
  return out;
}

ClassEmbeddingTable two_class_table() {
  Eigen::MatrixXd s(2, 2);
  s << 1.0, 0.5, 0.5, 1.0;
  return compute_class_embeddings(s);
}

}  // namespace

TEST_CASE("training separates a separable two-class set") {
  ClassEmbeddingTable table = two_class_table();
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.restart_epochs = {12, 36, 60};
  cfg.seed = 1;
  TrainResult result = train_mapper(separable_set(), table, cfg);

  int correct = 0;
  std::vector<LabeledFeature> data = separable_set();
  for (const LabeledFeature& s : data)
    if (result.mapper.classify(s.x).class_index == s.label) ++correct;
  CHECK(correct == static_cast<int>(data.size()));
  CHECK(result.final_loss <= result.initial_loss);
  CHECK(result.history.size() == 60);
}

TEST_CASE("lambda=0 with features equal to targets reaches near-zero loss") {
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2, 2);
  ClassEmbeddingTable table = compute_class_embeddings(s);
  std::vector<LabeledFeature> data;
  for (int i = 0; i < 10; ++i) {
    data.push_back({table.row(0), 0});
    data.push_back({table.row(1), 1});
  }
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.restart_epochs = {12, 36, 50};
  cfg.lambda = 0.0;
  cfg.lr_max = 0.5;  // the example pins the budget, not the rate
  cfg.seed = 3;
  TrainResult result = train_mapper(data, table, cfg);
  CHECK(result.final_loss <= 1e-3);
}

TEST_CASE("training input validation") {
  ClassEmbeddingTable table = two_class_table();
  TrainConfig cfg;
  CHECK(error_kind_of([&] { train_mapper({}, table, cfg); }) ==
        ErrorKind::NoData);
  std::vector<LabeledFeature> bad = {{Eigen::VectorXd::Ones(3), 7}};
  CHECK(error_kind_of([&] { train_mapper(bad, table, cfg); }) ==
        ErrorKind::UnknownClassIndex);
}

TEST_CASE("training is deterministic per seed") {
  ClassEmbeddingTable table = two_class_table();
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.restart_epochs = {5, 15};
  cfg.seed = 42;
  std::vector<LabeledFeature> data = separable_set();
  TrainResult a = train_mapper(data, table, cfg);
  TrainResult b = train_mapper(data, table, cfg);
  CHECK(a.mapper.map_weights() == b.mapper.map_weights());
  CHECK(a.mapper.map_bias() == b.mapper.map_bias());
  CHECK(a.mapper.head_weights() == b.mapper.head_weights());
  CHECK(a.mapper.head_bias() == b.mapper.head_bias());
  CHECK(a.final_loss == b.final_loss);

  cfg.seed = 43;
  TrainResult c = train_mapper(data, table, cfg);
  CHECK(a.mapper.map_weights() != c.mapper.map_weights());
}

TEST_CASE("loss history rows match the CSV schema") {
  ClassEmbeddingTable table = two_class_table();
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.restart_epochs = {5};
  TrainResult result = train_mapper(separable_set(), table, cfg);
  test_util::TempDir dir("history");
  save_loss_history(result.history, dir.str("loss.csv"));
  std::ifstream in(dir.str("loss.csv"));
  std::string header;
  std::getline(in, header);
  CHECK(header == "epoch,lr,correlation,cross_entropy,total");
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 5);
}

TEST_CASE("baseline mode drops the correlation term") {
  ClassEmbeddingTable table = two_class_table();
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.restart_epochs = {10};
  cfg.use_correlation = false;
  TrainResult result = train_mapper(separable_set(), table, cfg);
  for (const EpochStats& s : result.history) {
    CHECK(s.correlation == 0.0);
    CHECK(s.total == doctest::Approx(cfg.lambda * s.cross_entropy));
  }
}
