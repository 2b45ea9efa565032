#include <doctest.h>

#include <cstring>
#include <random>

#include <Eigen/QR>

#include "hiersearch/class_embedding.hpp"
#include "test_util.hpp"

using namespace hiersearch;
using test_util::error_kind_of;

TEST_CASE("single class") {
  Eigen::MatrixXd s(1, 1);
  s << 1.0;
  ClassEmbeddingTable table = compute_class_embeddings(s);
  CHECK(table.dim == 1);
  CHECK(table.vectors(0, 0) == 1.0);
}

TEST_CASE("two classes, similarity 0.5") {
  Eigen::MatrixXd s(2, 2);
  s << 1.0, 0.5, 0.5, 1.0;
  ClassEmbeddingTable table = compute_class_embeddings(s);
  CHECK(table.vectors(0, 0) == 1.0);
  CHECK(table.vectors(0, 1) == 0.0);
  CHECK(table.vectors(1, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(table.vectors(1, 1) ==
        doctest::Approx(0.8660254037844386).epsilon(1e-12));
  CHECK(gram_reconstruction_error(table, s) <= 1e-12);
}

TEST_CASE("T0 three-class subset") {
  Eigen::MatrixXd s(3, 3);
  s << 1.0, 0.75, 0.5, 0.75, 1.0, 0.5, 0.5, 0.5, 1.0;
  ClassEmbeddingTable table = compute_class_embeddings(s);
  CHECK(table.vectors(1, 0) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(table.vectors(1, 1) ==
        doctest::Approx(0.6614378277661477).epsilon(1e-12));
  CHECK(table.vectors(2, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(table.vectors(2, 1) ==
        doctest::Approx(0.1889822365046136).epsilon(1e-12));
  CHECK(table.vectors(2, 2) ==
        doctest::Approx(0.8451542547285166).epsilon(1e-12));
  CHECK(gram_reconstruction_error(table, s) <= 1e-12);
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(table.row(i).norm() - 1.0) <= 1e-9);
}

TEST_CASE("duplicated-similarity classes get a zero pivot") {
  Eigen::MatrixXd s(2, 2);
  s << 1.0, 1.0, 1.0, 1.0;
  ClassEmbeddingTable table = compute_class_embeddings(s);
  CHECK(table.vectors(1, 0) == 1.0);
  CHECK(table.vectors(1, 1) == 0.0);
  CHECK(gram_reconstruction_error(table, s) <= 1e-12);
}

TEST_CASE("validation errors") {
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.4, 0.5, 1.0;
  CHECK(error_kind_of([&] { compute_class_embeddings(asym); }) ==
        ErrorKind::NotSymmetric);

  Eigen::MatrixXd diag(2, 2);
  diag << 0.9, 0.5, 0.5, 1.0;
  CHECK(error_kind_of([&] { compute_class_embeddings(diag); }) ==
        ErrorKind::BadDiagonal);

  Eigen::MatrixXd range(2, 2);
  range << 1.0, -0.5, -0.5, 1.0;
  CHECK(error_kind_of([&] { compute_class_embeddings(range); }) ==
        ErrorKind::BadValue);

  // Entries in [0,1] but indefinite.
  Eigen::MatrixXd notpsd(3, 3);
  notpsd << 1.0, 0.9, 0.0, 0.9, 1.0, 0.9, 0.0, 0.9, 1.0;
  try {
    compute_class_embeddings(notpsd);
    FAIL("expected NotPSD");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotPSD);
    CHECK(std::string(e.what()).find("eigenvalue") != std::string::npos);
  }

  CHECK(error_kind_of([&] {
          compute_class_embeddings(Eigen::MatrixXd::Identity(2, 2), {"a"});
        }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("gram_reconstruction_error cases") {
  Taxonomy t0 = test_util::make_t0();
  Eigen::MatrixXd s = t0.similarity_matrix();
  ClassEmbeddingTable table = compute_class_embeddings(t0);
  CHECK(gram_reconstruction_error(table, s) <= 1e-12);

  // Zeroing one row loses that class's unit diagonal entirely.
  ClassEmbeddingTable broken = table;
  broken.vectors.row(2).setZero();
  CHECK(gram_reconstruction_error(broken, s) == doctest::Approx(1.0));

  // A random orthonormal basis reproduces the identity.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd random(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) random(i, j) = gauss(rng);
  Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(random)
                          .householderQ();
  ClassEmbeddingTable ortho;
  ortho.dim = 6;
  ortho.class_ids = {"a", "b", "c", "d", "e", "f"};
  ortho.vectors = q;
  CHECK(gram_reconstruction_error(ortho, Eigen::MatrixXd::Identity(6, 6)) <=
        1e-12);

  CHECK(error_kind_of([&] {
          gram_reconstruction_error(table, Eigen::MatrixXd::Identity(3, 3));
        }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("unseen_similarity") {
  Eigen::MatrixXd s(2, 2);
  s << 1.0, 0.5, 0.5, 1.0;
  ClassEmbeddingTable table = compute_class_embeddings(s);

  // A known class embedding reproduces its row of S.
  Eigen::VectorXd q = table.row(1);
  Eigen::VectorXd dots = unseen_similarity(table, q);
  CHECK(dots(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(dots(1) == doctest::Approx(1.0).epsilon(1e-12));

  Eigen::VectorXd negated = unseen_similarity(table, Eigen::VectorXd(-q));
  CHECK(negated(0) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(negated(1) == doctest::Approx(-1.0).epsilon(1e-12));

  // Normalized mean of the two embeddings: both dots are cos(30 deg).
  Eigen::VectorXd mean = (table.row(0) + table.row(1)) / 2.0;
  mean.normalize();
  Eigen::VectorXd mixed = unseen_similarity(table, mean);
  CHECK(mixed(0) == doctest::Approx(0.8660254037844387).epsilon(1e-12));
  CHECK(mixed(1) == doctest::Approx(0.8660254037844387).epsilon(1e-12));

  CHECK(error_kind_of([&] {
          unseen_similarity(table, Eigen::VectorXd::Zero(2));
        }) == ErrorKind::NotUnitNorm);
  CHECK(error_kind_of([&] {
          unseen_similarity(table, Eigen::VectorXd::Ones(3));
        }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("random trees: existence, unit rows, gram error, structure") {
  std::mt19937_64 rng(20240812);
  for (int trial = 0; trial < 40; ++trial) {
    test_util::RandomTree rt = test_util::random_tree_nontrivial(rng, 45);
    Taxonomy t = Taxonomy::parse(rt.to_edge_text());
    if (static_cast<int>(t.leaves().size()) > 30) continue;
    Eigen::MatrixXd s = t.similarity_matrix();
    ClassEmbeddingTable table = compute_class_embeddings(t);
    const int n = table.dim;
    for (int i = 0; i < n; ++i) {
      CHECK(std::abs(table.row(i).norm() - 1.0) <= 1e-9);
      CHECK(table.vectors(i, i) >= 0.0);
      for (int j = i + 1; j < n; ++j) CHECK(table.vectors(i, j) == 0.0);
    }
    CHECK(gram_reconstruction_error(table, s) <= 1e-6);
  }
}

TEST_CASE("determinism: identical S gives bit-identical factors") {
  Taxonomy t0 = test_util::make_t0();
  ClassEmbeddingTable a = compute_class_embeddings(t0);
  ClassEmbeddingTable b = compute_class_embeddings(t0);
  REQUIRE(a.vectors.size() == b.vectors.size());
  CHECK(std::memcmp(a.vectors.data(), b.vectors.data(),
                    sizeof(double) * a.vectors.size()) == 0);
}

TEST_CASE("save and load round trip") {
  test_util::TempDir dir("embtable");
  ClassEmbeddingTable table = compute_class_embeddings(test_util::make_t0());
  save_embedding_table(table, dir.str(), "cafe0123", true);
  ClassEmbeddingTable loaded = load_embedding_table(dir.str());
  CHECK(loaded.class_ids == table.class_ids);
  CHECK(loaded.dim == table.dim);
  CHECK(std::memcmp(loaded.vectors.data(), table.vectors.data(),
                    sizeof(double) * table.vectors.size()) == 0);
}
