#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hiersearch/class_embedding.hpp"
#include "hiersearch/taxonomy.hpp"

namespace hiersearch {

// One line of the feature dataset format:
//   {"image_id": ..., "label"?: ..., "features": [...],
//    "rerank_descriptor"?: [...]}
struct FeatureRecord {
  std::string image_id;
  std::optional<std::string> label;
  Eigen::VectorXd features;
  std::optional<Eigen::VectorXd> rerank_descriptor;
};

std::vector<FeatureRecord> read_feature_jsonl(const std::string& path);
void write_feature_jsonl(const std::string& path,
                         const std::vector<FeatureRecord>& records);

struct SynthConfig {
  int per_class = 50;
  double sigma = 0.1;
  double train_fraction = 0.8;  // 8:2 train/test split
  uint64_t seed = 0;
  int descriptor_dim = 0;  // 0 disables rerank descriptors
  double descriptor_sigma = 0.05;
  int unseen_classes = 0;
  std::string unseen_level = "type";
  int unseen_per_class = 10;
};

struct UnseenClassInfo {
  std::string class_name;
  std::string planted_node;  // internal node whose region the class occupies
  std::vector<std::string> image_ids;
};

struct SynthDataset {
  std::vector<FeatureRecord> train;
  std::vector<FeatureRecord> test;
  std::vector<FeatureRecord> unseen;  // labels absent
  std::vector<UnseenClassInfo> unseen_info;
};

// Gaussian clusters around each class embedding: x = phi(c) + sigma * noise
// in R^n. Sample ids are `<leaf>_<k>`; the first ceil(train_fraction *
// per_class) of each class go to train. Unseen classes are planted at the
// normalized centroid of a `unseen_level` subtree's leaf embeddings and
// emitted without labels.
SynthDataset generate_synthetic(const Taxonomy& taxonomy,
                                const ClassEmbeddingTable& table,
                                const SynthConfig& config);

}  // namespace hiersearch
