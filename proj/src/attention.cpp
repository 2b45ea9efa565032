#include "hiersearch/attention.hpp"

#include <cmath>
#include <random>

namespace hiersearch {

double softplus(double x) {
  // log(1 + e^x) without overflow on large |x|.
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

AttentionPooler::AttentionPooler(Eigen::MatrixXd hidden_weights,
                                 Eigen::VectorXd hidden_bias,
                                 Eigen::VectorXd output_weights,
                                 double output_bias,
                                 Eigen::MatrixXd projection)
    : hidden_weights_(std::move(hidden_weights)),
      hidden_bias_(std::move(hidden_bias)),
      output_weights_(std::move(output_weights)),
      output_bias_(output_bias),
      projection_(std::move(projection)) {
  if (hidden_bias_.size() != hidden_weights_.rows() ||
      output_weights_.size() != hidden_weights_.rows() ||
      projection_.cols() != hidden_weights_.cols())
    fail(ErrorKind::DimensionMismatch, "attention pooler parameter shapes");
}

AttentionPooler AttentionPooler::random_init(int feature_dim, int hidden_dim,
                                             int num_outputs, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double scale = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  Eigen::MatrixXd w1(hidden_dim, feature_dim);
  for (int i = 0; i < hidden_dim; ++i)
    for (int j = 0; j < feature_dim; ++j) w1(i, j) = gauss(rng) * scale;
  Eigen::VectorXd b1 = Eigen::VectorXd::Zero(hidden_dim);
  Eigen::VectorXd w2(hidden_dim);
  for (int i = 0; i < hidden_dim; ++i)
    w2(i) = gauss(rng) / std::sqrt(static_cast<double>(hidden_dim));
  Eigen::MatrixXd proj(num_outputs, feature_dim);
  for (int i = 0; i < num_outputs; ++i)
    for (int j = 0; j < feature_dim; ++j) proj(i, j) = gauss(rng) * scale;
  return AttentionPooler(std::move(w1), std::move(b1), std::move(w2), 0.0,
                         std::move(proj));
}

double AttentionPooler::score(const Eigen::VectorXd& feature) const {
  if (feature.size() != feature_dim())
    fail(ErrorKind::DimensionMismatch,
         "feature has " + std::to_string(feature.size()) + " dims, expected " +
             std::to_string(feature_dim()));
  Eigen::VectorXd hidden =
      (hidden_weights_ * feature + hidden_bias_).cwiseMax(0.0);
  return softplus(output_weights_.dot(hidden) + output_bias_);
}

AttentionPooler::Aggregate AttentionPooler::aggregate(
    const std::vector<Eigen::VectorXd>& local_features) const {
  if (local_features.empty())
    fail(ErrorKind::EmptyFeatureSet, "attention aggregation over no features");
  Aggregate out;
  out.pooled = Eigen::VectorXd::Zero(feature_dim());
  out.weights.reserve(local_features.size());
  for (const Eigen::VectorXd& f : local_features) {
    double alpha = score(f);
    out.weights.push_back(alpha);
    out.pooled += alpha * f;
  }
  out.projected = projection_ * out.pooled;
  return out;
}

}  // namespace hiersearch
