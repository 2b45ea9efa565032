#pragma once

#include <optional>

#include "hiersearch/dataset.hpp"
#include "hiersearch/index.hpp"
#include "hiersearch/mapper.hpp"

namespace hiersearch {

// How retrieve() treats the re-ranking stage.
enum class RerankMode {
  Off,
  Auto,     // rerank only when the query carries a descriptor
  Require,  // MissingQueryDescriptor when it does not
};

struct RetrievalResult {
  std::vector<RankedItem> pre_rerank;
  std::vector<RankedItem> post_rerank;  // equals pre_rerank when not reranked
  bool reranked = false;
  bool degenerate_embedding = false;
  Eigen::VectorXd query_embedding;
};

// Maps raw features through the mapper and builds index records; descriptors
// and labels pass through. When a taxonomy is given, labels must be leaves.
Index build_index_from_features(const std::vector<FeatureRecord>& records,
                                const Mapper& mapper,
                                const Taxonomy* taxonomy = nullptr,
                                IndexManifest manifest = {});

// forward -> query_topn -> optional rerank_topn. Both orders are kept so
// evaluation can compare them.
RetrievalResult retrieve(const Index& index, const Mapper& mapper,
                         const FeatureRecord& query, int n,
                         RerankMode rerank = RerankMode::Auto,
                         const std::optional<std::string>& exclude_id =
                             std::nullopt,
                         std::optional<int> rerank_window = std::nullopt,
                         const Taxonomy* taxonomy = nullptr);

}  // namespace hiersearch
