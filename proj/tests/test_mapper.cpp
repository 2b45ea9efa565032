#include <doctest.h>

#include <random>

#include "hiersearch/mapper.hpp"
#include "test_util.hpp"

using namespace hiersearch;
using test_util::error_kind_of;

namespace {

ClassEmbeddingTable two_class_table() {
  Eigen::MatrixXd s(2, 2);
  s << 1.0, 0.5, 0.5, 1.0;
  return compute_class_embeddings(s);
}

Mapper identity_mapper(const ClassEmbeddingTable& table) {
  Mapper m(table.dim, table.dim, table.dim, 1.0);
  m.set_map(Eigen::MatrixXd::Identity(table.dim, table.dim),
            Eigen::VectorXd::Zero(table.dim));
  m.set_head(Eigen::MatrixXd::Identity(table.dim, table.dim),
             Eigen::VectorXd::Zero(table.dim));
  return m;
}

}  // namespace

TEST_CASE("forward: identity map reproduces class embeddings") {
  ClassEmbeddingTable table = two_class_table();
  Mapper m = identity_mapper(table);
  ForwardResult fwd = m.forward(table.row(0));
  CHECK((fwd.embedding - table.row(0)).norm() <= 1e-15);
  CHECK_FALSE(fwd.degenerate);

  // Scale invariance of the normalization.
  ForwardResult scaled = m.forward(Eigen::VectorXd(2.0 * table.row(0)));
  CHECK((scaled.embedding - table.row(0)).norm() <= 1e-12);
}

TEST_CASE("forward: zero pre-normalization falls back to the first basis vector") {
  ClassEmbeddingTable table = two_class_table();
  Mapper m(2, 2, 2, 1.0);  // all-zero parameters
  ForwardResult fwd = m.forward(Eigen::VectorXd::Ones(2));
  CHECK(fwd.degenerate);
  CHECK(fwd.embedding(0) == 1.0);
  CHECK(fwd.embedding(1) == 0.0);
}

TEST_CASE("forward: input validation") {
  Mapper m(3, 2, 2, 1.0);
  CHECK(error_kind_of([&] { m.forward(Eigen::VectorXd::Ones(2)); }) ==
        ErrorKind::DimensionMismatch);
  Eigen::VectorXd bad = Eigen::VectorXd::Ones(3);
  bad(1) = std::numeric_limits<double>::quiet_NaN();
  CHECK(error_kind_of([&] { m.forward(bad); }) == ErrorKind::NonFiniteInput);
}

TEST_CASE("normalization invariance under positive scaling") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss;
  Mapper m = Mapper::random_init(4, 3, 3, 1.0, 21);
  m.set_map(m.map_weights(), Eigen::VectorXd::Zero(3));  // zero bias
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd x(4);
    for (int i = 0; i < 4; ++i) x(i) = gauss(rng);
    double alpha = std::exp(gauss(rng));
    Eigen::VectorXd a = m.forward(x).embedding;
    Eigen::VectorXd b = m.forward(Eigen::VectorXd(alpha * x)).embedding;
    CHECK((a - b).norm() <= 1e-12);
  }
}

TEST_CASE("correlation loss endpoints") {
  Eigen::VectorXd e(2), t(2);
  e << 1.0, 0.0;
  t << 1.0, 0.0;
  CHECK(correlation_loss(e, t) == 0.0);
  t << 0.0, 1.0;
  CHECK(correlation_loss(e, t) == 1.0);
  t << -1.0, 0.0;
  CHECK(correlation_loss(e, t) == 2.0);
  t << 0.5, 0.5;
  CHECK(error_kind_of([&] { correlation_loss(e, t); }) ==
        ErrorKind::NotUnitNorm);
}

TEST_CASE("combined loss worked examples") {
  ClassEmbeddingTable table = two_class_table();

  // Perfect mapper, lambda = 0: zero loss.
  Mapper perfect(table.dim, table.dim, table.dim, 0.0);
  perfect.set_map(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2));
  perfect.set_head(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2));
  std::vector<LabeledFeature> one = {{table.row(0), 0}};
  CHECK(combined_loss(perfect, one, table) == doctest::Approx(0.0).epsilon(1e-12));

  // lambda = 0, embedding orthogonal to target: loss 1.
  Eigen::MatrixXd s1(1, 1);
  s1 << 1.0;
  Eigen::MatrixXd rot(2, 2);
  rot << 0.0, -1.0, 1.0, 0.0;  // 90 degree rotation
  ClassEmbeddingTable table2 = two_class_table();
  Mapper rotated(2, 2, 2, 0.0);
  rotated.set_map(rot, Eigen::VectorXd::Zero(2));
  rotated.set_head(Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Zero(2));
  Eigen::VectorXd x = table2.row(0);
  LossTerms terms = combined_loss_terms(rotated, {{x, 0}}, table2, true);
  CHECK(terms.correlation == doctest::Approx(1.0).epsilon(1e-12));

  // Uniform logits over 4 classes with zero correlation: ln 4.
  Eigen::MatrixXd s4 = Eigen::MatrixXd::Identity(4, 4);
  ClassEmbeddingTable table4 = compute_class_embeddings(s4);
  Mapper uniform(4, 4, 4, 1.0);
  uniform.set_map(Eigen::MatrixXd::Identity(4, 4), Eigen::VectorXd::Zero(4));
  uniform.set_head(Eigen::MatrixXd::Zero(4, 4), Eigen::VectorXd::Zero(4));
  std::vector<LabeledFeature> batch = {{table4.row(2), 2}};
  LossTerms uniform_terms = combined_loss_terms(uniform, batch, table4, true);
  CHECK(uniform_terms.correlation == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(uniform_terms.cross_entropy ==
        doctest::Approx(1.3862943611198906).epsilon(1e-12));
  CHECK(uniform_terms.total ==
        doctest::Approx(1.3862943611198906).epsilon(1e-12));

  CHECK(error_kind_of([&] { combined_loss(uniform, {}, table4); }) ==
        ErrorKind::EmptyBatch);
  CHECK(error_kind_of([&] {
          combined_loss(uniform, {{table4.row(0), 9}}, table4);
        }) == ErrorKind::UnknownClassIndex);
}

TEST_CASE("gradient vanishes at a lambda=0 minimizer") {
  ClassEmbeddingTable table = two_class_table();
  Mapper m(2, 2, 2, 0.0);
  m.set_map(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2));
  m.set_head(Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Zero(2));
  std::vector<LabeledFeature> batch = {{table.row(1), 1}};
  Gradients g = loss_gradient(m, batch, table);
  CHECK(g.map_weights.norm() <= 1e-8);
  CHECK(g.map_bias.norm() <= 1e-8);
}

TEST_CASE("gradient matches central finite differences") {
  std::mt19937_64 rng(31337);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd s(3, 3);
  s << 1.0, 0.5, 0.25, 0.5, 1.0, 0.25, 0.25, 0.25, 1.0;
  ClassEmbeddingTable table = compute_class_embeddings(s);

  for (int trial = 0; trial < 25; ++trial) {
    Mapper m = Mapper::random_init(3, 3, 3, 0.5 + (trial % 3), rng());
    std::vector<LabeledFeature> batch;
    int batch_size = 1 + static_cast<int>(rng() % 4);
    for (int b = 0; b < batch_size; ++b) {
      Eigen::VectorXd x(3);
      for (int i = 0; i < 3; ++i) x(i) = gauss(rng);
      batch.push_back({x, static_cast<int>(rng() % 3)});
    }
    std::vector<double> analytic = test_util::flatten(
        loss_gradient(m, batch, table, trial % 2 == 0));
    std::vector<double> numeric = test_util::finite_difference_gradient(
        m, batch, table, 1e-5, trial % 2 == 0);
    CHECK(test_util::max_relative_error(analytic, numeric) <= 1e-4);
  }
}

TEST_CASE("duplicated sample leaves the mean gradient unchanged") {
  ClassEmbeddingTable table = two_class_table();
  Mapper m = Mapper::random_init(2, 2, 2, 1.0, 77);
  Eigen::VectorXd x(2);
  x << 0.3, -1.2;
  Gradients single = loss_gradient(m, {{x, 1}}, table);
  Gradients doubled = loss_gradient(m, {{x, 1}, {x, 1}}, table);
  CHECK((single.map_weights - doubled.map_weights).norm() <= 1e-15);
  CHECK((single.head_weights - doubled.head_weights).norm() <= 1e-15);
}

TEST_CASE("classify: simplex output, argmax, tie rule") {
  ClassEmbeddingTable table = two_class_table();
  std::mt19937_64 rng(4);
  std::normal_distribution<double> gauss;
  Mapper m = Mapper::random_init(2, 2, 2, 1.0, 9);
  for (int trial = 0; trial < 30; ++trial) {
    Eigen::VectorXd x(2);
    x << gauss(rng), gauss(rng);
    Classification c = m.classify(x);
    CHECK(std::abs(c.probabilities.sum() - 1.0) <= 1e-9);
    CHECK(c.probabilities.minCoeff() >= 0.0);
    CHECK(c.class_index == [&] {
      int best = 0;
      for (int i = 1; i < c.probabilities.size(); ++i)
        if (c.probabilities(i) > c.probabilities(best)) best = i;
      return best;
    }());
  }

  // One dominant logit wins.
  Mapper biased(2, 2, 3, 1.0);
  biased.set_map(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2));
  Eigen::MatrixXd head = Eigen::MatrixXd::Zero(3, 2);
  Eigen::VectorXd head_bias(3);
  head_bias << 0.0, 10.0, 0.0;
  biased.set_head(head, head_bias);
  CHECK(biased.classify(Eigen::VectorXd::Ones(2)).class_index == 1);

  // Uniform logits tie-break to class 0.
  Mapper flat(2, 2, 4, 1.0);
  flat.set_map(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2));
  flat.set_head(Eigen::MatrixXd::Zero(4, 2), Eigen::VectorXd::Zero(4));
  CHECK(flat.classify(Eigen::VectorXd::Ones(2)).class_index == 0);
}

TEST_CASE("checkpoint round trip is bit exact") {
  test_util::TempDir dir("mapper");
  Mapper m = Mapper::random_init(5, 3, 3, 0.7, 123);
  m.save(dir.str(), "beef", {{"epochs", 10}});
  Mapper loaded = Mapper::load(dir.str());
  CHECK(loaded.input_dim() == 5);
  CHECK(loaded.output_dim() == 3);
  CHECK(loaded.num_classes() == 3);
  CHECK(loaded.loss_mix() == 0.7);
  CHECK(loaded.map_weights() == m.map_weights());
  CHECK(loaded.map_bias() == m.map_bias());
  CHECK(loaded.head_weights() == m.head_weights());
  CHECK(loaded.head_bias() == m.head_bias());
}
