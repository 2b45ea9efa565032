#include "hiersearch/class_embedding.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "hiersearch/error.hpp"
#include "hiersearch/io.hpp"

namespace hiersearch {

namespace {

constexpr double kEigenvalueFloor = -1e-9;
constexpr double kPivotZeroBand = 1e-12;

void validate_similarity(const Eigen::MatrixXd& s) {
  if (s.rows() != s.cols())
    fail(ErrorKind::DimensionMismatch,
         "similarity matrix must be square, got " + std::to_string(s.rows()) +
             "x" + std::to_string(s.cols()));
  const int n = static_cast<int>(s.rows());
  if (n == 0) fail(ErrorKind::EmptyInput, "similarity matrix is empty");
  for (int i = 0; i < n; ++i) {
    if (std::abs(s(i, i) - 1.0) > 1e-9)
      fail(ErrorKind::BadDiagonal, "S[" + std::to_string(i) + "][" +
                                       std::to_string(i) + "] = " +
                                       std::to_string(s(i, i)) + ", expected 1");
    for (int j = 0; j < n; ++j) {
      if (!std::isfinite(s(i, j)) || s(i, j) < -1e-9 || s(i, j) > 1.0 + 1e-9)
        fail(ErrorKind::BadValue, "S[" + std::to_string(i) + "][" +
                                      std::to_string(j) + "] = " +
                                      std::to_string(s(i, j)) +
                                      " is outside [0,1]");
      if (std::abs(s(i, j) - s(j, i)) > 1e-12)
        fail(ErrorKind::NotSymmetric, "S[" + std::to_string(i) + "][" +
                                          std::to_string(j) +
                                          "] != S[" + std::to_string(j) +
                                          "][" + std::to_string(i) + "]");
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      s, Eigen::EigenvaluesOnly);
  double min_eig = solver.eigenvalues().minCoeff();
  if (min_eig < kEigenvalueFloor) {
    std::ostringstream msg;
    msg << "most negative eigenvalue " << min_eig << " is below the "
        << kEigenvalueFloor << " floor";
    fail(ErrorKind::NotPSD, msg.str());
  }
}

}  // namespace

int ClassEmbeddingTable::class_index(std::string_view class_id) const {
  for (size_t i = 0; i < class_ids.size(); ++i)
    if (class_ids[i] == class_id) return static_cast<int>(i);
  fail(ErrorKind::UnknownNode, "no class '" + std::string(class_id) + "'");
}

ClassEmbeddingTable compute_class_embeddings(
    const Eigen::MatrixXd& similarity, std::vector<std::string> class_ids) {
  validate_similarity(similarity);
  const int n = static_cast<int>(similarity.rows());
  if (class_ids.empty()) {
    class_ids.reserve(n);
    for (int i = 0; i < n; ++i) class_ids.push_back("class_" + std::to_string(i));
  }
  if (static_cast<int>(class_ids.size()) != n)
    fail(ErrorKind::DimensionMismatch,
         std::to_string(class_ids.size()) + " class ids for a " +
             std::to_string(n) + "-class similarity matrix");

  // Cholesky with a zero band for semidefinite pivots. Zeroing a pivot
  // forces the rest of its column to zero, which is exact for PSD input.
  Eigen::MatrixXd factor = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double sum = similarity(i, j);
      for (int k = 0; k < j; ++k) sum -= factor(i, k) * factor(j, k);
      if (j < i) {
        factor(i, j) = factor(j, j) == 0.0 ? 0.0 : sum / factor(j, j);
      } else {
        factor(i, i) = sum > kPivotZeroBand ? std::sqrt(sum) : 0.0;
      }
    }
  }

  ClassEmbeddingTable table;
  table.class_ids = std::move(class_ids);
  table.dim = n;
  table.vectors = std::move(factor);
  return table;
}

ClassEmbeddingTable compute_class_embeddings(const Taxonomy& taxonomy) {
  std::vector<std::string> ids;
  ids.reserve(taxonomy.leaves().size());
  for (int leaf : taxonomy.leaves()) ids.push_back(taxonomy.node(leaf).name);
  return compute_class_embeddings(taxonomy.similarity_matrix(),
                                  std::move(ids));
}

double gram_reconstruction_error(const ClassEmbeddingTable& table,
                                 const Eigen::MatrixXd& similarity) {
  if (table.vectors.rows() != similarity.rows() ||
      table.vectors.cols() != similarity.cols())
    fail(ErrorKind::DimensionMismatch,
         "table is " + std::to_string(table.vectors.rows()) + "x" +
             std::to_string(table.vectors.cols()) + ", S is " +
             std::to_string(similarity.rows()) + "x" +
             std::to_string(similarity.cols()));
  return (table.vectors * table.vectors.transpose() - similarity)
      .cwiseAbs()
      .maxCoeff();
}

Eigen::VectorXd unseen_similarity(const ClassEmbeddingTable& table,
                                  const Eigen::VectorXd& query_vec) {
  if (query_vec.size() != table.dim)
    fail(ErrorKind::DimensionMismatch,
         "query has " + std::to_string(query_vec.size()) +
             " dims, table expects " + std::to_string(table.dim));
  if (std::abs(query_vec.norm() - 1.0) > 1e-6)
    fail(ErrorKind::NotUnitNorm,
         "query norm is " + std::to_string(query_vec.norm()));
  Eigen::VectorXd dots = table.vectors * query_vec;
  return dots.cwiseMax(-1.0).cwiseMin(1.0);
}

void save_embedding_table(const ClassEmbeddingTable& table,
                          const std::string& dir,
                          const std::string& run_manifest_hash,
                          bool write_csv) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  fs::path blob_path = fs::path(dir) / "embeddings.f64";

  std::vector<double> flat(static_cast<size_t>(table.dim) * table.dim);
  for (int i = 0; i < table.dim; ++i)
    for (int j = 0; j < table.dim; ++j)
      flat[static_cast<size_t>(i) * table.dim + j] = table.vectors(i, j);
  write_f64_blob(blob_path, flat);

  nlohmann::json manifest = {
      {"class_ids", table.class_ids},
      {"dim", table.dim},
      {"blob", "embeddings.f64"},
      {"blob_fnv1a64", fnv1a64_hex_file(blob_path)},
  };
  if (!run_manifest_hash.empty())
    manifest["run_manifest_hash"] = run_manifest_hash;
  write_json_file(fs::path(dir) / "embeddings.json", manifest);

  if (write_csv) {
    if (table.dim > 32)
      fail(ErrorKind::BadArgument,
           "CSV mode is limited to 32 classes, table has " +
               std::to_string(table.dim));
    std::ostringstream csv;
    csv << "class_id";
    for (int j = 0; j < table.dim; ++j) csv << ",v" << j;
    csv << "\n";
    csv.precision(17);
    for (int i = 0; i < table.dim; ++i) {
      csv << table.class_ids[i];
      for (int j = 0; j < table.dim; ++j) csv << "," << table.vectors(i, j);
      csv << "\n";
    }
    write_text_file(fs::path(dir) / "embeddings.csv", csv.str());
  }
}

ClassEmbeddingTable load_embedding_table(const std::string& dir) {
  namespace fs = std::filesystem;
  nlohmann::json manifest = read_json_file(fs::path(dir) / "embeddings.json");
  ClassEmbeddingTable table;
  table.class_ids = manifest.at("class_ids").get<std::vector<std::string>>();
  table.dim = manifest.at("dim").get<int>();
  std::vector<double> flat =
      read_f64_blob(fs::path(dir) / manifest.value("blob", "embeddings.f64"));
  if (flat.size() != static_cast<size_t>(table.dim) * table.dim)
    fail(ErrorKind::IoError, "embedding blob size does not match manifest dim");
  table.vectors.resize(table.dim, table.dim);
  for (int i = 0; i < table.dim; ++i)
    for (int j = 0; j < table.dim; ++j)
      table.vectors(i, j) = flat[static_cast<size_t>(i) * table.dim + j];
  return table;
}

}  // namespace hiersearch
