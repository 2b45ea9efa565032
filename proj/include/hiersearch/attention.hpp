#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "hiersearch/error.hpp"

namespace hiersearch {

// Attention-weighted aggregation of local features into one global
// descriptor: y = W * sum_n alpha(f_n) * f_n. The score function alpha is a
// two-layer perceptron (ReLU hidden, softplus output), so every attention
// weight is positive and the pooled vector lies in the cone of the inputs.
class AttentionPooler {
 public:
  AttentionPooler(Eigen::MatrixXd hidden_weights, Eigen::VectorXd hidden_bias,
                  Eigen::VectorXd output_weights, double output_bias,
                  Eigen::MatrixXd projection);
  static AttentionPooler random_init(int feature_dim, int hidden_dim,
                                     int num_outputs, uint64_t seed);

  int feature_dim() const { return static_cast<int>(hidden_weights_.cols()); }
  int num_outputs() const { return static_cast<int>(projection_.rows()); }

  // softplus(w2 . relu(W1 f + b1) + b2), always > 0.
  double score(const Eigen::VectorXd& feature) const;

  struct Aggregate {
    Eigen::VectorXd pooled;     // sum_n alpha(f_n) * f_n, the image descriptor
    Eigen::VectorXd projected;  // W * pooled
    std::vector<double> weights;
  };
  Aggregate aggregate(const std::vector<Eigen::VectorXd>& local_features) const;

 private:
  Eigen::MatrixXd hidden_weights_;  // h x d
  Eigen::VectorXd hidden_bias_;     // h
  Eigen::VectorXd output_weights_;  // h
  double output_bias_;
  Eigen::MatrixXd projection_;      // M x d
};

double softplus(double x);

}  // namespace hiersearch
