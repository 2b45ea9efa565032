#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "hiersearch/class_embedding.hpp"

namespace hiersearch {

struct LabeledFeature {
  Eigen::VectorXd x;
  int label = 0;  // class index into the embedding table / softmax head
};

struct ForwardResult {
  Eigen::VectorXd embedding;  // unit norm
  Eigen::VectorXd logits;
  bool degenerate = false;  // pre-normalization vector was zero
};

struct Classification {
  int class_index = 0;  // ties broken by lowest index
  Eigen::VectorXd probabilities;
  bool degenerate = false;
};

struct LossTerms {
  double correlation = 0.0;    // mean over batch; 0 when disabled
  double cross_entropy = 0.0;  // mean over batch, unweighted
  double total = 0.0;          // correlation + lambda * cross_entropy
};

struct Gradients {
  Eigen::MatrixXd map_weights;
  Eigen::VectorXd map_bias;
  Eigen::MatrixXd head_weights;
  Eigen::VectorXd head_bias;

  double norm() const;
};

// Affine map into the class-embedding space followed by L2 normalization,
// with a softmax classification head on top of the embedding.
class Mapper {
 public:
  Mapper(int input_dim, int output_dim, int num_classes, double loss_mix);
  static Mapper random_init(int input_dim, int output_dim, int num_classes,
                            double loss_mix, uint64_t seed);

  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }
  int num_classes() const { return num_classes_; }
  double loss_mix() const { return loss_mix_; }

  const Eigen::MatrixXd& map_weights() const { return map_weights_; }
  const Eigen::VectorXd& map_bias() const { return map_bias_; }
  const Eigen::MatrixXd& head_weights() const { return head_weights_; }
  const Eigen::VectorXd& head_bias() const { return head_bias_; }

  void set_map(Eigen::MatrixXd weights, Eigen::VectorXd bias);
  void set_head(Eigen::MatrixXd weights, Eigen::VectorXd bias);
  void apply_step(const Gradients& direction, double scale);

  // embedding = normalize(W x + b); logits = head(embedding). A zero
  // pre-normalization vector maps to the first basis vector and sets the
  // degenerate flag.
  ForwardResult forward(const Eigen::VectorXd& x) const;

  Classification classify(const Eigen::VectorXd& x) const;

  void save(const std::string& dir, const std::string& run_manifest_hash = "",
            const nlohmann::json& config_snapshot = {}) const;
  static Mapper load(const std::string& dir);

 private:
  int input_dim_;
  int output_dim_;
  int num_classes_;
  double loss_mix_;
  Eigen::MatrixXd map_weights_;   // n x D
  Eigen::VectorXd map_bias_;      // n
  Eigen::MatrixXd head_weights_;  // C x n
  Eigen::VectorXd head_bias_;     // C
};

// 1 - dot(embedding, target); both arguments must be unit norm within 1e-6.
double correlation_loss(const Eigen::VectorXd& embedding,
                        const Eigen::VectorXd& target);

// Mean over the batch of correlation_loss(psi(x), phi(c)) +
// lambda * cross_entropy(logits, c). `use_correlation = false` drops the
// correlation term (the classification-only baseline).
LossTerms combined_loss_terms(const Mapper& mapper,
                              const std::vector<LabeledFeature>& batch,
                              const ClassEmbeddingTable& table,
                              bool use_correlation = true);
double combined_loss(const Mapper& mapper,
                     const std::vector<LabeledFeature>& batch,
                     const ClassEmbeddingTable& table);

// Analytic gradients of the combined loss w.r.t. every mapper parameter,
// including the path through the L2 normalization.
Gradients loss_gradient(const Mapper& mapper,
                        const std::vector<LabeledFeature>& batch,
                        const ClassEmbeddingTable& table,
                        bool use_correlation = true);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

}  // namespace hiersearch
