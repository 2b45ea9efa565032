#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hiersearch/error.hpp"

namespace hiersearch {

struct ImageRecord {
  std::string image_id;
  Eigen::VectorXd raw_features;  // may be empty when loaded from disk
  Eigen::VectorXd embedding;     // unit norm within 1e-6
  std::optional<Eigen::VectorXd> rerank_descriptor;
  std::optional<std::string> label;  // leaf class id; absent for unseen images
};

struct ScoredId {
  std::string image_id;
  double score = 0.0;  // embedding dot product with the query
};

struct RankedItem {
  std::string image_id;
  double score = 0.0;
  std::optional<double> rerank_score;  // descriptor cosine, window items only
};

struct IndexManifest {
  std::string version = "hiersearch-index/1";
  std::string taxonomy_hash;
  std::string mapper_hash;
  std::string run_manifest_hash;
};

// Immutable dictionary of images. Records are kept sorted by image id, which
// fixes every tie-break and makes saved indexes reproducible.
class Index {
 public:
  static Index build(std::vector<ImageRecord> records,
                     IndexManifest manifest = {});

  const std::vector<ImageRecord>& records() const { return records_; }
  const IndexManifest& manifest() const { return manifest_; }
  int dim() const { return dim_; }
  std::optional<int> rerank_dim() const { return rerank_dim_; }
  size_t size() const { return records_.size(); }
  const ImageRecord* find(std::string_view image_id) const;

  // Exact top-N by dot product, descending; ties broken by ascending image
  // id; `exclude_id` is removed from the pool before ranking.
  std::vector<ScoredId> query_topn(
      const Eigen::VectorXd& query, int n,
      const std::optional<std::string>& exclude_id = std::nullopt) const;

  void save(const std::string& dir) const;
  static Index load(const std::string& dir);

 private:
  Index() = default;
  std::vector<ImageRecord> records_;
  IndexManifest manifest_;
  int dim_ = 0;
  std::optional<int> rerank_dim_;
};

// Reorders the first `window` candidates by descending cosine similarity
// between the query descriptor and each candidate's descriptor; everything
// beyond the window keeps its order, and the window's membership set is
// unchanged. Candidates without a descriptor sink to the end of the window,
// stable among themselves; cosine ties are also stable.
std::vector<RankedItem> rerank_topn(const Index& index,
                                    const std::vector<ScoredId>& candidates,
                                    const Eigen::VectorXd& query_descriptor,
                                    int window);

}  // namespace hiersearch
