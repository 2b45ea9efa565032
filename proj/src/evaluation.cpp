#include "hiersearch/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <unordered_map>

#include "hiersearch/error.hpp"

namespace hiersearch {

SimilarityFn taxonomy_similarity(const Taxonomy& taxonomy) {
  struct Cache {
    Eigen::MatrixXd matrix;
    std::unordered_map<std::string, int> index;
  };
  auto cache = std::make_shared<Cache>();
  cache->matrix = taxonomy.similarity_matrix();
  for (size_t i = 0; i < taxonomy.leaves().size(); ++i)
    cache->index.emplace(taxonomy.node(taxonomy.leaves()[i]).name,
                         static_cast<int>(i));
  return [cache](const std::string& a, const std::string& b) {
    auto ia = cache->index.find(a);
    auto ib = cache->index.find(b);
    if (ia == cache->index.end())
      fail(ErrorKind::UnknownNode, "no leaf named '" + a + "'");
    if (ib == cache->index.end())
      fail(ErrorKind::UnknownNode, "no leaf named '" + b + "'");
    return cache->matrix(ia->second, ib->second);
  };
}

void RetrievalRun::validate() const {
  if (ranked_labels.empty())
    fail(ErrorKind::EmptyInput, "run has no ranked labels");
  std::unordered_map<std::string, int> pool;
  for (const std::string& label : dataset_labels) ++pool[label];
  for (const std::string& label : ranked_labels) {
    auto it = pool.find(label);
    if (it == pool.end() || it->second == 0)
      fail(ErrorKind::BadValue,
           "ranked label '" + label + "' is not in the candidate pool");
    --it->second;
  }
}

double hp_at_k(const RetrievalRun& run, int k, const SimilarityFn& similarity) {
  const int m = static_cast<int>(run.ranked_labels.size());
  if (k < 1 || k > m)
    fail(ErrorKind::KOutOfRange,
         "k = " + std::to_string(k) + " outside [1, " + std::to_string(m) + "]");

  double numerator = 0.0;
  for (int i = 0; i < k; ++i)
    numerator += similarity(run.query_label, run.ranked_labels[i]);

  // Best achievable top-k sum: all pool similarities, sorted descending.
  std::vector<double> sims;
  sims.reserve(run.dataset_labels.size());
  for (const std::string& label : run.dataset_labels)
    sims.push_back(similarity(run.query_label, label));
  std::partial_sort(sims.begin(), sims.begin() + k, sims.end(),
                    std::greater<double>());
  double denominator = 0.0;
  for (int i = 0; i < k; ++i) denominator += sims[i];

  if (denominator <= 0.0)
    fail(ErrorKind::ZeroDenominator,
         "every candidate has similarity 0 to '" + run.query_label + "'");
  return numerator / denominator;
}

double ahp_at_K(const RetrievalRun& run, int K, const SimilarityFn& similarity) {
  if (K < 1 || K > static_cast<int>(run.ranked_labels.size()))
    fail(ErrorKind::KOutOfRange, "K = " + std::to_string(K));
  double sum = 0.0;
  for (int k = 1; k <= K; ++k) sum += hp_at_k(run, k, similarity);
  return sum / static_cast<double>(K);
}

double mahp_at_K(const std::vector<RetrievalRun>& runs, int K,
                 const SimilarityFn& similarity) {
  if (runs.empty()) fail(ErrorKind::EmptyInput, "no runs");
  double sum = 0.0;
  for (const RetrievalRun& run : runs) sum += ahp_at_K(run, K, similarity);
  return sum / static_cast<double>(runs.size());
}

double precision_at_k(const RetrievalRun& run, int k) {
  if (k < 1 || k > static_cast<int>(run.ranked_labels.size()))
    fail(ErrorKind::KOutOfRange, "k = " + std::to_string(k));
  int relevant = 0;
  for (int i = 0; i < k; ++i)
    if (run.ranked_labels[i] == run.query_label) ++relevant;
  return static_cast<double>(relevant) / static_cast<double>(k);
}

double average_precision(const RetrievalRun& run) {
  int total_relevant = 0;
  for (const std::string& label : run.dataset_labels)
    if (label == run.query_label) ++total_relevant;
  if (total_relevant == 0)
    fail(ErrorKind::NoRelevantItems,
         "no candidate shares class '" + run.query_label + "'");
  double sum = 0.0;
  int hits = 0;
  for (size_t i = 0; i < run.ranked_labels.size(); ++i) {
    if (run.ranked_labels[i] == run.query_label) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(total_relevant);
}

double mean_average_precision(const std::vector<RetrievalRun>& runs,
                              std::vector<std::string>* warnings) {
  if (runs.empty()) fail(ErrorKind::EmptyInput, "no runs");
  double sum = 0.0;
  size_t counted = 0;
  for (size_t i = 0; i < runs.size(); ++i) {
    try {
      sum += average_precision(runs[i]);
      ++counted;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoRelevantItems) throw;
      if (warnings)
        warnings->push_back("query " + std::to_string(i) +
                            " excluded from mAP: " + e.what());
    }
  }
  if (counted == 0)
    fail(ErrorKind::NoRelevantItems, "AP undefined for every run");
  return sum / static_cast<double>(counted);
}

LevelConfusion level_confusion(
    const std::vector<std::pair<std::string, std::string>>& predictions,
    const Taxonomy& taxonomy, const std::string& level) {
  if (predictions.empty())
    fail(ErrorKind::EmptyPredictions, "no predictions");

  std::vector<int> level_nodes;
  std::unordered_map<int, int> column;
  for (const TaxNode& node : taxonomy.nodes())
    if (node.level && *node.level == level) {
      column.emplace(node.id, static_cast<int>(level_nodes.size()));
      level_nodes.push_back(node.id);
    }
  if (level_nodes.empty())
    fail(ErrorKind::LevelNotOnPath, "no node carries level '" + level + "'");

  LevelConfusion out;
  for (int id : level_nodes) out.node_names.push_back(taxonomy.node(id).name);
  out.counts = Eigen::MatrixXi::Zero(static_cast<int>(level_nodes.size()),
                                     static_cast<int>(level_nodes.size()));
  for (const auto& [true_leaf, predicted_leaf] : predictions) {
    int t = taxonomy.project_to_level(taxonomy.node_id(true_leaf), level);
    int p = taxonomy.project_to_level(taxonomy.node_id(predicted_leaf), level);
    out.counts(column.at(t), column.at(p)) += 1;
  }
  out.accuracy = static_cast<double>(out.counts.trace()) /
                 static_cast<double>(predictions.size());
  return out;
}

namespace {

MetricSet metric_set_from_runs(const std::vector<RetrievalRun>& runs, int K,
                               const SimilarityFn& similarity,
                               std::vector<std::string>& warnings,
                               const std::string& tag) {
  MetricSet set;
  set.hp_curve.assign(K, 0.0);
  set.p_at_k.assign(K, 0.0);
  size_t hp_counted = 0;
  for (size_t i = 0; i < runs.size(); ++i) {
    const RetrievalRun& run = runs[i];
    try {
      std::vector<double> curve(K);
      for (int k = 1; k <= K; ++k) curve[k - 1] = hp_at_k(run, k, similarity);
      for (int k = 0; k < K; ++k) set.hp_curve[k] += curve[k];
      ++hp_counted;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ZeroDenominator) throw;
      warnings.push_back(tag + " query " + std::to_string(i) +
                         " excluded from HP/mAHP: " + e.what());
    }
    for (int k = 1; k <= K; ++k) set.p_at_k[k - 1] += precision_at_k(run, k);
  }
  if (hp_counted == 0)
    fail(ErrorKind::ZeroDenominator, "HP undefined for every query");
  for (int k = 0; k < K; ++k) {
    set.hp_curve[k] /= static_cast<double>(hp_counted);
    set.p_at_k[k] /= static_cast<double>(runs.size());
  }
  set.mahp = 0.0;
  for (double hp : set.hp_curve) set.mahp += hp;
  set.mahp /= static_cast<double>(K);
  set.map = mean_average_precision(runs, &warnings);
  return set;
}

}  // namespace

EvalReport evaluate_retrieval(const Index& index, const Mapper& mapper,
                              const Taxonomy& taxonomy,
                              const std::vector<FeatureRecord>& test_set,
                              int K, RerankMode rerank, bool include_self) {
  if (test_set.empty()) fail(ErrorKind::NoData, "empty test set");
  if (K < 1) fail(ErrorKind::KOutOfRange, "K must be >= 1");
  if (mapper.num_classes() != static_cast<int>(taxonomy.leaves().size()))
    fail(ErrorKind::DimensionMismatch,
         "mapper predicts " + std::to_string(mapper.num_classes()) +
             " classes, taxonomy has " +
             std::to_string(taxonomy.leaves().size()) + " leaves");

  EvalReport report;
  report.K = K;
  SimilarityFn similarity = taxonomy_similarity(taxonomy);

  // Candidate labels come from the index; records without labels cannot
  // contribute to metrics and are skipped.
  std::unordered_map<std::string, std::string> label_of;
  size_t unlabeled = 0;
  for (const ImageRecord& r : index.records()) {
    if (r.label)
      label_of.emplace(r.image_id, *r.label);
    else
      ++unlabeled;
  }
  if (unlabeled > 0)
    report.warnings.push_back(std::to_string(unlabeled) +
                              " unlabeled index records ignored");
  if (label_of.empty())
    fail(ErrorKind::NoData, "index has no labeled records");

  // Queries sorted by id for a deterministic aggregation order.
  std::vector<const FeatureRecord*> queries;
  for (const FeatureRecord& r : test_set) {
    if (!r.label) {
      report.warnings.push_back("query '" + r.image_id +
                                "' skipped: no label");
      continue;
    }
    taxonomy.node_id(*r.label);  // UnknownNode on bad labels
    queries.push_back(&r);
  }
  if (queries.empty()) fail(ErrorKind::NoData, "no labeled queries");
  std::sort(queries.begin(), queries.end(),
            [](const FeatureRecord* a, const FeatureRecord* b) {
              return a->image_id < b->image_id;
            });

  std::vector<RetrievalRun> pre_runs, post_runs;
  std::vector<std::pair<std::string, std::string>> predictions;
  bool any_reranked = false;

  for (const FeatureRecord* q : queries) {
    std::optional<std::string> exclude;
    if (!include_self) exclude = q->image_id;

    RetrievalResult r =
        retrieve(index, mapper, *q, static_cast<int>(index.size()), rerank,
                 exclude, K, &taxonomy);
    any_reranked = any_reranked || r.reranked;

    auto to_run = [&](const std::vector<RankedItem>& ranked) {
      RetrievalRun run;
      run.query_label = *q->label;
      for (const RankedItem& item : ranked) {
        auto it = label_of.find(item.image_id);
        if (it != label_of.end()) run.ranked_labels.push_back(it->second);
      }
      for (const ImageRecord& rec : index.records()) {
        if (exclude && rec.image_id == *exclude) continue;
        if (rec.label) run.dataset_labels.push_back(*rec.label);
      }
      return run;
    };
    RetrievalRun pre = to_run(r.pre_rerank);
    if (static_cast<int>(pre.ranked_labels.size()) < K)
      fail(ErrorKind::KOutOfRange,
           "K = " + std::to_string(K) + " exceeds the " +
               std::to_string(pre.ranked_labels.size()) +
               " labeled candidates for query '" + q->image_id + "'");
    post_runs.push_back(to_run(r.post_rerank));
    pre_runs.push_back(std::move(pre));

    predictions.emplace_back(*q->label,
                             taxonomy.node(taxonomy.leaves().at(
                                 mapper.classify(q->features).class_index))
                                 .name);
  }

  report.queries = pre_runs.size();
  report.pre_rerank = metric_set_from_runs(pre_runs, K, similarity,
                                           report.warnings, "pre-rerank");
  report.reranked = any_reranked;
  report.post_rerank =
      any_reranked ? metric_set_from_runs(post_runs, K, similarity,
                                          report.warnings, "post-rerank")
                   : report.pre_rerank;

  for (const std::string& level : taxonomy.levels_on_all_leaf_paths())
    report.per_level.emplace(level,
                             level_confusion(predictions, taxonomy, level));
  return report;
}

nlohmann::json EvalReport::to_json() const {
  auto metric_json = [](const MetricSet& m) {
    return nlohmann::json{{"hp_curve", m.hp_curve},
                          {"mahp", m.mahp},
                          {"p_at_k", m.p_at_k},
                          {"map", m.map}};
  };
  nlohmann::json per_level_json = nlohmann::json::object();
  for (const auto& [level, confusion] : per_level) {
    nlohmann::json matrix = nlohmann::json::array();
    for (int i = 0; i < confusion.counts.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (int j = 0; j < confusion.counts.cols(); ++j)
        row.push_back(confusion.counts(i, j));
      matrix.push_back(row);
    }
    per_level_json[level] = {{"accuracy", confusion.accuracy},
                             {"nodes", confusion.node_names},
                             {"confusion", matrix}};
  }
  return {{"K", K},
          {"queries", queries},
          {"reranked", reranked},
          {"pre_rerank", metric_json(pre_rerank)},
          {"post_rerank", metric_json(post_rerank)},
          {"per_level", per_level_json},
          {"warnings", warnings}};
}

std::string EvalReport::hp_curve_csv() const {
  std::ostringstream csv;
  csv.precision(12);
  csv << "k,hp_pre,hp_post\n";
  for (int k = 0; k < K; ++k)
    csv << (k + 1) << "," << pre_rerank.hp_curve[k] << ","
        << post_rerank.hp_curve[k] << "\n";
  return csv.str();
}

}  // namespace hiersearch
