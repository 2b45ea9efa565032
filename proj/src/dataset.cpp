#include "hiersearch/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include <json.hpp>

#include "hiersearch/error.hpp"
#include "hiersearch/io.hpp"

namespace hiersearch {

namespace {

Eigen::VectorXd to_vector(const nlohmann::json& array, const char* what) {
  if (!array.is_array())
    fail(ErrorKind::ParseError, std::string(what) + " must be a JSON array");
  Eigen::VectorXd v(array.size());
  for (size_t i = 0; i < array.size(); ++i) {
    if (!array[i].is_number())
      fail(ErrorKind::ParseError, std::string(what) + " must hold numbers");
    v(static_cast<Eigen::Index>(i)) = array[i].get<double>();
  }
  return v;
}

nlohmann::json from_vector(const Eigen::VectorXd& v) {
  nlohmann::json array = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) array.push_back(v(i));
  return array;
}

}  // namespace

std::vector<FeatureRecord> read_feature_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open '" + path + "'");
  std::vector<FeatureRecord> records;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      fail(ErrorKind::ParseError,
           path + " line " + std::to_string(number) + ": invalid JSON");
    FeatureRecord r;
    if (!j.contains("image_id") || !j["image_id"].is_string())
      fail(ErrorKind::ParseError,
           path + " line " + std::to_string(number) + ": missing image_id");
    r.image_id = j["image_id"].get<std::string>();
    if (j.contains("label") && !j["label"].is_null())
      r.label = j["label"].get<std::string>();
    if (!j.contains("features"))
      fail(ErrorKind::ParseError,
           path + " line " + std::to_string(number) + ": missing features");
    r.features = to_vector(j["features"], "features");
    if (j.contains("rerank_descriptor") && !j["rerank_descriptor"].is_null())
      r.rerank_descriptor = to_vector(j["rerank_descriptor"], "rerank_descriptor");
    records.push_back(std::move(r));
  }
  return records;
}

void write_feature_jsonl(const std::string& path,
                         const std::vector<FeatureRecord>& records) {
  std::ostringstream out;
  for (const FeatureRecord& r : records) {
    nlohmann::json j = {{"image_id", r.image_id},
                        {"features", from_vector(r.features)}};
    if (r.label) j["label"] = *r.label;
    if (r.rerank_descriptor)
      j["rerank_descriptor"] = from_vector(*r.rerank_descriptor);
    out << j.dump() << "\n";
  }
  write_text_file(path, out.str());
}

SynthDataset generate_synthetic(const Taxonomy& taxonomy,
                                const ClassEmbeddingTable& table,
                                const SynthConfig& config) {
  if (config.sigma < 0.0)
    fail(ErrorKind::BadSigma, "sigma must be >= 0, got " +
                                  std::to_string(config.sigma));
  if (config.descriptor_sigma < 0.0)
    fail(ErrorKind::BadSigma, "descriptor sigma must be >= 0");
  if (config.per_class < 1)
    fail(ErrorKind::BadArgument, "per-class count must be >= 1");
  if (config.train_fraction < 0.0 || config.train_fraction > 1.0)
    fail(ErrorKind::BadArgument, "train fraction must be in [0, 1]");

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int dim = table.dim;

  // Per-class descriptor prototypes: unit directions so descriptor cosine
  // separates classes the same way embeddings do.
  std::vector<Eigen::VectorXd> descriptor_prototypes;
  if (config.descriptor_dim > 0) {
    descriptor_prototypes.reserve(table.class_ids.size());
    for (size_t c = 0; c < table.class_ids.size(); ++c) {
      Eigen::VectorXd p(config.descriptor_dim);
      for (int j = 0; j < config.descriptor_dim; ++j) p(j) = gauss(rng);
      p.normalize();
      descriptor_prototypes.push_back(std::move(p));
    }
  }

  SynthDataset out;
  const int train_count = static_cast<int>(
      std::floor(config.train_fraction * config.per_class + 0.5));

  auto sample_around = [&](const Eigen::VectorXd& center, double sigma) {
    Eigen::VectorXd x = center;
    for (Eigen::Index j = 0; j < x.size(); ++j) x(j) += sigma * gauss(rng);
    return x;
  };

  for (size_t c = 0; c < table.class_ids.size(); ++c) {
    const std::string& leaf = table.class_ids[c];
    Eigen::VectorXd center = table.row(static_cast<int>(c));
    for (int k = 0; k < config.per_class; ++k) {
      FeatureRecord r;
      std::ostringstream id;
      id << leaf << "_" << std::setw(4) << std::setfill('0') << k;
      r.image_id = id.str();
      r.label = leaf;
      r.features = sample_around(center, config.sigma);
      if (config.descriptor_dim > 0)
        r.rerank_descriptor =
            sample_around(descriptor_prototypes[c], config.descriptor_sigma);
      (k < train_count ? out.train : out.test).push_back(std::move(r));
    }
  }

  if (config.unseen_classes > 0) {
    std::vector<int> anchors;
    for (const TaxNode& node : taxonomy.nodes())
      if (node.level && *node.level == config.unseen_level &&
          !node.children.empty())
        anchors.push_back(node.id);
    if (anchors.empty())
      fail(ErrorKind::LevelNotOnPath,
           "no internal node carries level '" + config.unseen_level + "'");

    for (int u = 0; u < config.unseen_classes; ++u) {
      int anchor = anchors[rng() % anchors.size()];
      // Centroid of the anchor subtree's leaf embeddings, renormalized.
      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
      int count = 0;
      for (int leaf : taxonomy.leaves()) {
        int cur = leaf;
        bool under = false;
        while (true) {
          if (cur == anchor) {
            under = true;
            break;
          }
          const auto& parent = taxonomy.node(cur).parent;
          if (!parent) break;
          cur = *parent;
        }
        if (under) {
          centroid += table.row(table.class_index(taxonomy.node(leaf).name));
          ++count;
        }
      }
      internal_check(count > 0, "anchor subtree has no leaves");
      centroid /= static_cast<double>(count);
      double norm = centroid.norm();
      internal_check(norm > 0, "anchor centroid is zero");
      centroid /= norm;

      UnseenClassInfo info;
      info.class_name = "unseen_" + std::to_string(u);
      info.planted_node = taxonomy.node(anchor).name;
      for (int k = 0; k < config.unseen_per_class; ++k) {
        FeatureRecord r;
        std::ostringstream id;
        id << info.class_name << "_" << std::setw(4) << std::setfill('0') << k;
        r.image_id = id.str();
        r.features = sample_around(centroid, config.sigma);
        info.image_ids.push_back(r.image_id);
        out.unseen.push_back(std::move(r));
      }
      out.unseen_info.push_back(std::move(info));
    }
  }

  return out;
}

}  // namespace hiersearch
