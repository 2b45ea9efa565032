#include "hiersearch/pipeline.hpp"

namespace hiersearch {

Index build_index_from_features(const std::vector<FeatureRecord>& records,
                                const Mapper& mapper,
                                const Taxonomy* taxonomy,
                                IndexManifest manifest) {
  std::vector<ImageRecord> out;
  out.reserve(records.size());
  for (const FeatureRecord& r : records) {
    if (taxonomy && r.label) {
      int id = taxonomy->node_id(*r.label);
      if (!taxonomy->is_leaf(id))
        fail(ErrorKind::NotALeaf,
             "label '" + *r.label + "' of '" + r.image_id + "'");
    }
    ImageRecord rec;
    rec.image_id = r.image_id;
    rec.raw_features = r.features;
    rec.embedding = mapper.forward(r.features).embedding;
    rec.rerank_descriptor = r.rerank_descriptor;
    rec.label = r.label;
    out.push_back(std::move(rec));
  }
  return Index::build(std::move(out), std::move(manifest));
}

RetrievalResult retrieve(const Index& index, const Mapper& mapper,
                         const FeatureRecord& query, int n, RerankMode rerank,
                         const std::optional<std::string>& exclude_id,
                         std::optional<int> rerank_window,
                         const Taxonomy* taxonomy) {
  if (taxonomy && query.label) {
    int id = taxonomy->node_id(*query.label);
    if (!taxonomy->is_leaf(id))
      fail(ErrorKind::NotALeaf, "query label '" + *query.label + "'");
  }

  RetrievalResult result;
  ForwardResult fwd = mapper.forward(query.features);
  result.degenerate_embedding = fwd.degenerate;
  result.query_embedding = fwd.embedding;

  std::vector<ScoredId> ranked =
      index.query_topn(result.query_embedding, n, exclude_id);
  result.pre_rerank.reserve(ranked.size());
  for (const ScoredId& s : ranked)
    result.pre_rerank.push_back({s.image_id, s.score, std::nullopt});

  bool want_rerank = rerank == RerankMode::Require ||
                     (rerank == RerankMode::Auto && query.rerank_descriptor);
  if (want_rerank) {
    if (!query.rerank_descriptor)
      fail(ErrorKind::MissingQueryDescriptor,
           "'" + query.image_id + "' has no rerank descriptor");
    int window = rerank_window
                     ? std::min<int>(*rerank_window,
                                     static_cast<int>(ranked.size()))
                     : static_cast<int>(ranked.size());
    result.post_rerank =
        rerank_topn(index, ranked, *query.rerank_descriptor, window);
    result.reranked = true;
  } else {
    result.post_rerank = result.pre_rerank;
  }
  return result;
}

}  // namespace hiersearch
