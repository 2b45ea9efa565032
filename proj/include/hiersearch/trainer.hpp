#pragma once

#include <cstdint>
#include <vector>

#include "hiersearch/mapper.hpp"

namespace hiersearch {

struct TrainConfig {
  int epochs = 180;
  int batch_size = 8;
  // Cumulative restart boundaries; the learning rate is reset to lr_max at
  // each of them. A final boundary at `epochs` is implied when absent.
  std::vector<int> restart_epochs = {12, 36, 84, 180};
  double lr_max = 0.1;
  double lr_min = 1e-5;
  uint64_t seed = 0;
  double lambda = 1.0;
  double momentum = 0.0;
  bool use_correlation = true;  // false trains the classification baseline

  void validate() const;  // InvalidConfig
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// Cosine decay within each restart segment:
//   lr = lr_min + (lr_max - lr_min) * (1 + cos(pi * t / T)) / 2
// where t is progress inside the current segment. Epochs may be fractional;
// a restart boundary belongs to the segment it starts.
double sgdr_learning_rate(double epoch, const TrainConfig& config);

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double correlation = 0.0;
  double cross_entropy = 0.0;
  double total = 0.0;
};

struct TrainResult {
  Mapper mapper;
  std::vector<EpochStats> history;  // one entry per epoch
  double initial_loss = 0.0;        // full-data combined loss before training
  double final_loss = 0.0;
};

// Deterministic SGD (optional momentum) over shuffled mini-batches with the
// SGDR schedule, all randomness drawn from config.seed.
TrainResult train_mapper(const std::vector<LabeledFeature>& features,
                         const ClassEmbeddingTable& table,
                         const TrainConfig& config);

void save_loss_history(const std::vector<EpochStats>& history,
                       const std::string& path);

}  // namespace hiersearch
