#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hiersearch/pipeline.hpp"
#include "hiersearch/taxonomy.hpp"

namespace hiersearch {

// Similarity between two class labels, in [0,1].
using SimilarityFn =
    std::function<double(const std::string&, const std::string&)>;

// Caches the taxonomy leaf similarity matrix behind a SimilarityFn.
SimilarityFn taxonomy_similarity(const Taxonomy& taxonomy);

struct RetrievalRun {
  std::string query_label;
  std::vector<std::string> ranked_labels;   // retrieved order
  std::vector<std::string> dataset_labels;  // full candidate pool (multiset)

  void validate() const;  // ranked must be a sub-multiset of the pool
};

// Eq. of hierarchical precision at k: the sum of the top-k retrieved
// similarities over the best achievable top-k sum across the whole pool
// (sorted-descending oracle).
double hp_at_k(const RetrievalRun& run, int k, const SimilarityFn& similarity);

// Unit-spaced discrete mean of HP@k for k = 1..K.
double ahp_at_K(const RetrievalRun& run, int K, const SimilarityFn& similarity);
double mahp_at_K(const std::vector<RetrievalRun>& runs, int K,
                 const SimilarityFn& similarity);

// Classical metrics; relevance is exact leaf-label match.
double precision_at_k(const RetrievalRun& run, int k);
double average_precision(const RetrievalRun& run);  // NoRelevantItems if none
double mean_average_precision(const std::vector<RetrievalRun>& runs,
                              std::vector<std::string>* warnings = nullptr);

struct LevelConfusion {
  std::vector<std::string> node_names;  // level nodes, taxonomy order
  Eigen::MatrixXi counts;               // rows: true, cols: predicted
  double accuracy = 0.0;
};

// Projects (true, predicted) leaf pairs to `level` and tallies a confusion
// matrix. Accuracy is trace over total.
LevelConfusion level_confusion(
    const std::vector<std::pair<std::string, std::string>>& predictions,
    const Taxonomy& taxonomy, const std::string& level);

struct MetricSet {
  std::vector<double> hp_curve;  // mean HP@k over queries, k = 1..K
  double mahp = 0.0;
  std::vector<double> p_at_k;  // mean P@k over queries, k = 1..K
  double map = 0.0;
};

struct EvalReport {
  int K = 0;
  size_t queries = 0;
  MetricSet pre_rerank;
  MetricSet post_rerank;  // equals pre_rerank when reranking is off
  bool reranked = false;
  std::map<std::string, LevelConfusion> per_level;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  std::string hp_curve_csv() const;  // k,hp_pre,hp_post
};

// Leave-query-out protocol: every test record queries the index with itself
// excluded; metrics are computed pre- and post-rerank, plus per-level
// classification accuracy from the softmax head.
EvalReport evaluate_retrieval(const Index& index, const Mapper& mapper,
                              const Taxonomy& taxonomy,
                              const std::vector<FeatureRecord>& test_set,
                              int K = 40, RerankMode rerank = RerankMode::Off,
                              bool include_self = false);

}  // namespace hiersearch
