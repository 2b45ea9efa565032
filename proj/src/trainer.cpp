#include "hiersearch/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "hiersearch/error.hpp"
#include "hiersearch/io.hpp"

namespace hiersearch {

void TrainConfig::validate() const {
  if (epochs < 1) fail(ErrorKind::InvalidConfig, "epochs must be >= 1");
  if (batch_size < 1) fail(ErrorKind::InvalidConfig, "batch_size must be >= 1");
  if (lr_max <= 0 || lr_min < 0 || lr_min > lr_max)
    fail(ErrorKind::InvalidConfig, "need 0 <= lr_min <= lr_max, lr_max > 0");
  if (lambda < 0) fail(ErrorKind::InvalidConfig, "lambda must be >= 0");
  if (momentum < 0 || momentum >= 1)
    fail(ErrorKind::InvalidConfig, "momentum must be in [0, 1)");
  int prev = 0;
  for (int r : restart_epochs) {
    if (r <= prev)
      fail(ErrorKind::InvalidConfig, "restart_epochs must be strictly increasing and positive");
    prev = r;
  }
  if (!restart_epochs.empty() && restart_epochs.back() > epochs)
    fail(ErrorKind::InvalidConfig, "last restart epoch exceeds total epochs");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"restart_epochs", restart_epochs},
          {"lr_max", lr_max},
          {"lr_min", lr_min},
          {"seed", seed},
          {"lambda", lambda},
          {"momentum", momentum},
          {"use_correlation", use_correlation}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  if (j.contains("restart_epochs"))
    c.restart_epochs = j.at("restart_epochs").get<std::vector<int>>();
  c.lr_max = j.value("lr_max", c.lr_max);
  c.lr_min = j.value("lr_min", c.lr_min);
  c.seed = j.value("seed", c.seed);
  c.lambda = j.value("lambda", c.lambda);
  c.momentum = j.value("momentum", c.momentum);
  c.use_correlation = j.value("use_correlation", c.use_correlation);
  return c;
}

double sgdr_learning_rate(double epoch, const TrainConfig& config) {
  config.validate();
  if (!(epoch >= 0.0) || epoch > static_cast<double>(config.epochs))
    fail(ErrorKind::OutOfRangeEpoch,
         "epoch " + std::to_string(epoch) + " outside [0, " +
             std::to_string(config.epochs) + "]");

  std::vector<int> boundaries = {0};
  for (int r : config.restart_epochs) boundaries.push_back(r);
  if (boundaries.back() < config.epochs) boundaries.push_back(config.epochs);

  // A boundary starts a fresh segment, so lr there is lr_max. The final
  // boundary has no segment after it; restart semantics still apply.
  if (epoch >= static_cast<double>(boundaries.back())) return config.lr_max;

  size_t seg = 0;
  while (static_cast<double>(boundaries[seg + 1]) <= epoch) ++seg;
  double t = epoch - static_cast<double>(boundaries[seg]);
  double span = static_cast<double>(boundaries[seg + 1] - boundaries[seg]);
  return config.lr_min +
         0.5 * (config.lr_max - config.lr_min) *
             (1.0 + std::cos(std::numbers::pi * t / span));
}

TrainResult train_mapper(const std::vector<LabeledFeature>& features,
                         const ClassEmbeddingTable& table,
                         const TrainConfig& config) {
  config.validate();
  if (features.empty()) fail(ErrorKind::NoData, "no training samples");

  const int input_dim = static_cast<int>(features.front().x.size());
  const int num_classes = table.dim;
  for (const LabeledFeature& f : features) {
    if (static_cast<int>(f.x.size()) != input_dim)
      fail(ErrorKind::DimensionMismatch, "inconsistent feature dimensions");
    if (f.label < 0 || f.label >= num_classes)
      fail(ErrorKind::UnknownClassIndex, std::to_string(f.label));
  }

  std::mt19937_64 rng(config.seed);
  TrainResult result{
      Mapper::random_init(input_dim, table.dim, num_classes, config.lambda,
                          rng()),
      {},
      0.0,
      0.0};
  Mapper& mapper = result.mapper;
  result.initial_loss =
      combined_loss_terms(mapper, features, table, config.use_correlation)
          .total;

  Gradients velocity;
  velocity.map_weights = Eigen::MatrixXd::Zero(table.dim, input_dim);
  velocity.map_bias = Eigen::VectorXd::Zero(table.dim);
  velocity.head_weights = Eigen::MatrixXd::Zero(num_classes, table.dim);
  velocity.head_bias = Eigen::VectorXd::Zero(num_classes);

  std::vector<size_t> order(features.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  const size_t batches_per_epoch =
      (features.size() + config.batch_size - 1) / config.batch_size;
  result.history.reserve(config.epochs);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = sgdr_learning_rate(static_cast<double>(epoch), config);

    size_t batch_index = 0;
    for (size_t start = 0; start < order.size();
         start += config.batch_size, ++batch_index) {
      size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<LabeledFeature> batch;
      batch.reserve(end - start);
      for (size_t i = start; i < end; ++i) batch.push_back(features[order[i]]);

      double epoch_f =
          static_cast<double>(epoch) +
          static_cast<double>(batch_index) / static_cast<double>(batches_per_epoch);
      double lr = sgdr_learning_rate(epoch_f, config);

      Gradients grad =
          loss_gradient(mapper, batch, table, config.use_correlation);
      LossTerms terms =
          combined_loss_terms(mapper, batch, table, config.use_correlation);
      double weight =
          static_cast<double>(batch.size()) / static_cast<double>(features.size());
      stats.correlation += terms.correlation * weight;
      stats.cross_entropy += terms.cross_entropy * weight;
      stats.total += terms.total * weight;

      if (config.momentum > 0.0) {
        velocity.map_weights =
            config.momentum * velocity.map_weights - lr * grad.map_weights;
        velocity.map_bias =
            config.momentum * velocity.map_bias - lr * grad.map_bias;
        velocity.head_weights =
            config.momentum * velocity.head_weights - lr * grad.head_weights;
        velocity.head_bias =
            config.momentum * velocity.head_bias - lr * grad.head_bias;
        mapper.apply_step(velocity, 1.0);
      } else {
        mapper.apply_step(grad, -lr);
      }
    }
    result.history.push_back(stats);
  }

  result.final_loss =
      combined_loss_terms(mapper, features, table, config.use_correlation)
          .total;
  return result;
}

void save_loss_history(const std::vector<EpochStats>& history,
                       const std::string& path) {
  std::ostringstream csv;
  csv.precision(12);
  csv << "epoch,lr,correlation,cross_entropy,total\n";
  for (const EpochStats& s : history)
    csv << s.epoch << "," << s.lr << "," << s.correlation << ","
        << s.cross_entropy << "," << s.total << "\n";
  write_text_file(path, csv.str());
}

}  // namespace hiersearch
