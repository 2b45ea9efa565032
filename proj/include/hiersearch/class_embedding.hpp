#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "hiersearch/taxonomy.hpp"

namespace hiersearch {

// Unit-norm class embeddings whose pairwise dot products reproduce the
// taxonomy similarity matrix. Row i of `vectors` is the embedding of
// class_ids[i]; rows follow the taxonomy leaf order.
struct ClassEmbeddingTable {
  std::vector<std::string> class_ids;
  int dim = 0;               // embedding dimension n == number of classes
  Eigen::MatrixXd vectors;   // n x n, lower triangular with nonneg diagonal

  Eigen::VectorXd row(int i) const { return vectors.row(i).transpose(); }
  int class_index(std::string_view class_id) const;  // UnknownNode if absent
};

// Factors S = Phi Phi^T with Phi lower triangular (Cholesky construction).
// S must be symmetric with unit diagonal, entries in [0,1], and positive
// semidefinite within a -1e-9 eigenvalue floor. Pivots inside
// [-1e-12, 1e-12] are treated as zero and produce a zero tail for that row,
// which keeps the Gram product exact for duplicated-similarity classes.
ClassEmbeddingTable compute_class_embeddings(
    const Eigen::MatrixXd& similarity,
    std::vector<std::string> class_ids = {});

// Convenience: build S from the taxonomy and factor it.
ClassEmbeddingTable compute_class_embeddings(const Taxonomy& taxonomy);

// Max-abs entry of Phi Phi^T - S.
double gram_reconstruction_error(const ClassEmbeddingTable& table,
                                 const Eigen::MatrixXd& similarity);

// Dot products of a unit query vector against every class embedding,
// clamped to [-1, 1] for reporting.
Eigen::VectorXd unseen_similarity(const ClassEmbeddingTable& table,
                                  const Eigen::VectorXd& query_vec);

// On-disk form: `<dir>/embeddings.json` manifest plus a row-major
// little-endian float64 blob; optionally a CSV rendering for <= 32 classes.
void save_embedding_table(const ClassEmbeddingTable& table,
                          const std::string& dir,
                          const std::string& run_manifest_hash = "",
                          bool write_csv = false);
ClassEmbeddingTable load_embedding_table(const std::string& dir);

}  // namespace hiersearch
