#include "hiersearch/mapper.hpp"

#include <cmath>
#include <random>

#include "hiersearch/error.hpp"
#include "hiersearch/io.hpp"

namespace hiersearch {

namespace {

// Below this squared norm the pre-normalization vector counts as zero;
// dividing by anything smaller risks overflow.
constexpr double kDegenerateNormSq = 1e-280;

void check_unit(const Eigen::VectorXd& v, const char* what) {
  if (std::abs(v.norm() - 1.0) > 1e-6)
    fail(ErrorKind::NotUnitNorm,
         std::string(what) + " norm is " + std::to_string(v.norm()));
}

double cross_entropy(const Eigen::VectorXd& logits, int label) {
  double max_logit = logits.maxCoeff();
  double log_sum = std::log((logits.array() - max_logit).exp().sum());
  return -(logits(label) - max_logit - log_sum);
}

}  // namespace

double Gradients::norm() const {
  return std::sqrt(map_weights.squaredNorm() + map_bias.squaredNorm() +
                   head_weights.squaredNorm() + head_bias.squaredNorm());
}

Mapper::Mapper(int input_dim, int output_dim, int num_classes,
               double loss_mix)
    : input_dim_(input_dim),
      output_dim_(output_dim),
      num_classes_(num_classes),
      loss_mix_(loss_mix),
      map_weights_(Eigen::MatrixXd::Zero(output_dim, input_dim)),
      map_bias_(Eigen::VectorXd::Zero(output_dim)),
      head_weights_(Eigen::MatrixXd::Zero(num_classes, output_dim)),
      head_bias_(Eigen::VectorXd::Zero(num_classes)) {
  if (input_dim < 1 || output_dim < 1 || num_classes < 1)
    fail(ErrorKind::InvalidConfig, "mapper dimensions must be positive");
  if (loss_mix < 0.0)
    fail(ErrorKind::InvalidConfig, "loss mix lambda must be >= 0");
}

Mapper Mapper::random_init(int input_dim, int output_dim, int num_classes,
                           double loss_mix, uint64_t seed) {
  Mapper m(input_dim, output_dim, num_classes, loss_mix);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double map_scale = 1.0 / std::sqrt(static_cast<double>(input_dim));
  double head_scale = 1.0 / std::sqrt(static_cast<double>(output_dim));
  for (int i = 0; i < output_dim; ++i)
    for (int j = 0; j < input_dim; ++j)
      m.map_weights_(i, j) = gauss(rng) * map_scale;
  for (int i = 0; i < num_classes; ++i)
    for (int j = 0; j < output_dim; ++j)
      m.head_weights_(i, j) = gauss(rng) * head_scale;
  return m;
}

void Mapper::set_map(Eigen::MatrixXd weights, Eigen::VectorXd bias) {
  if (weights.rows() != output_dim_ || weights.cols() != input_dim_ ||
      bias.size() != output_dim_)
    fail(ErrorKind::DimensionMismatch, "map parameter shapes do not match");
  map_weights_ = std::move(weights);
  map_bias_ = std::move(bias);
}

void Mapper::set_head(Eigen::MatrixXd weights, Eigen::VectorXd bias) {
  if (weights.rows() != num_classes_ || weights.cols() != output_dim_ ||
      bias.size() != num_classes_)
    fail(ErrorKind::DimensionMismatch, "head parameter shapes do not match");
  head_weights_ = std::move(weights);
  head_bias_ = std::move(bias);
}

void Mapper::apply_step(const Gradients& direction, double scale) {
  map_weights_ += scale * direction.map_weights;
  map_bias_ += scale * direction.map_bias;
  head_weights_ += scale * direction.head_weights;
  head_bias_ += scale * direction.head_bias;
}

ForwardResult Mapper::forward(const Eigen::VectorXd& x) const {
  if (x.size() != input_dim_)
    fail(ErrorKind::DimensionMismatch,
         "input has " + std::to_string(x.size()) + " dims, mapper expects " +
             std::to_string(input_dim_));
  if (!x.allFinite()) fail(ErrorKind::NonFiniteInput, "input vector");

  ForwardResult result;
  Eigen::VectorXd pre = map_weights_ * x + map_bias_;
  double norm_sq = pre.squaredNorm();
  if (norm_sq < kDegenerateNormSq) {
    result.embedding = Eigen::VectorXd::Zero(output_dim_);
    result.embedding(0) = 1.0;
    result.degenerate = true;
  } else {
    result.embedding = pre / std::sqrt(norm_sq);
  }
  result.logits = head_weights_ * result.embedding + head_bias_;
  return result;
}

Classification Mapper::classify(const Eigen::VectorXd& x) const {
  ForwardResult fwd = forward(x);
  Classification out;
  out.probabilities = softmax(fwd.logits);
  out.degenerate = fwd.degenerate;
  out.class_index = 0;
  for (int i = 1; i < out.probabilities.size(); ++i)
    if (out.probabilities(i) > out.probabilities(out.class_index))
      out.class_index = i;
  return out;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd shifted =
      (logits.array() - logits.maxCoeff()).exp().matrix();
  return shifted / shifted.sum();
}

double correlation_loss(const Eigen::VectorXd& embedding,
                        const Eigen::VectorXd& target) {
  if (embedding.size() != target.size())
    fail(ErrorKind::DimensionMismatch, "embedding and target sizes differ");
  check_unit(embedding, "embedding");
  check_unit(target, "target");
  return 1.0 - embedding.dot(target);
}

LossTerms combined_loss_terms(const Mapper& mapper,
                              const std::vector<LabeledFeature>& batch,
                              const ClassEmbeddingTable& table,
                              bool use_correlation) {
  if (batch.empty()) fail(ErrorKind::EmptyBatch, "combined loss over no samples");
  if (table.dim != mapper.output_dim())
    fail(ErrorKind::DimensionMismatch,
         "embedding table dim " + std::to_string(table.dim) +
             " vs mapper output dim " + std::to_string(mapper.output_dim()));
  LossTerms terms;
  for (const LabeledFeature& sample : batch) {
    if (sample.label < 0 || sample.label >= mapper.num_classes() ||
        sample.label >= table.dim)
      fail(ErrorKind::UnknownClassIndex, std::to_string(sample.label));
    ForwardResult fwd = mapper.forward(sample.x);
    if (use_correlation)
      terms.correlation += 1.0 - fwd.embedding.dot(table.row(sample.label));
    terms.cross_entropy += cross_entropy(fwd.logits, sample.label);
  }
  terms.correlation /= static_cast<double>(batch.size());
  terms.cross_entropy /= static_cast<double>(batch.size());
  terms.total = terms.correlation + mapper.loss_mix() * terms.cross_entropy;
  return terms;
}

double combined_loss(const Mapper& mapper,
                     const std::vector<LabeledFeature>& batch,
                     const ClassEmbeddingTable& table) {
  return combined_loss_terms(mapper, batch, table, true).total;
}

Gradients loss_gradient(const Mapper& mapper,
                        const std::vector<LabeledFeature>& batch,
                        const ClassEmbeddingTable& table,
                        bool use_correlation) {
  if (batch.empty()) fail(ErrorKind::EmptyBatch, "gradient over no samples");
  if (table.dim != mapper.output_dim())
    fail(ErrorKind::DimensionMismatch,
         "embedding table dim " + std::to_string(table.dim) +
             " vs mapper output dim " + std::to_string(mapper.output_dim()));

  Gradients g;
  g.map_weights =
      Eigen::MatrixXd::Zero(mapper.output_dim(), mapper.input_dim());
  g.map_bias = Eigen::VectorXd::Zero(mapper.output_dim());
  g.head_weights =
      Eigen::MatrixXd::Zero(mapper.num_classes(), mapper.output_dim());
  g.head_bias = Eigen::VectorXd::Zero(mapper.num_classes());

  const double lambda = mapper.loss_mix();
  for (const LabeledFeature& sample : batch) {
    if (sample.label < 0 || sample.label >= mapper.num_classes() ||
        sample.label >= table.dim)
      fail(ErrorKind::UnknownClassIndex, std::to_string(sample.label));
    if (sample.x.size() != mapper.input_dim())
      fail(ErrorKind::DimensionMismatch, "sample feature size");
    if (!sample.x.allFinite()) fail(ErrorKind::NonFiniteInput, "sample features");

    Eigen::VectorXd pre = mapper.map_weights() * sample.x + mapper.map_bias();
    double norm_sq = pre.squaredNorm();
    bool degenerate = norm_sq < kDegenerateNormSq;
    Eigen::VectorXd embedding;
    if (degenerate) {
      embedding = Eigen::VectorXd::Zero(mapper.output_dim());
      embedding(0) = 1.0;
    } else {
      embedding = pre / std::sqrt(norm_sq);
    }
    Eigen::VectorXd logits =
        mapper.head_weights() * embedding + mapper.head_bias();
    Eigen::VectorXd probs = softmax(logits);

    // d(loss)/d(logits) and head parameters.
    Eigen::VectorXd g_logits = lambda * probs;
    g_logits(sample.label) -= lambda;
    g.head_weights += g_logits * embedding.transpose();
    g.head_bias += g_logits;

    // d(loss)/d(embedding): correlation pulls toward the class prototype,
    // cross entropy flows back through the head.
    Eigen::VectorXd g_embedding = mapper.head_weights().transpose() * g_logits;
    if (use_correlation) g_embedding -= table.row(sample.label);

    // Through the normalization: de/dz = (I - e e^T) / ||z||. The fallback
    // embedding is constant, so nothing flows into the affine map there.
    if (!degenerate) {
      Eigen::VectorXd g_pre =
          (g_embedding - g_embedding.dot(embedding) * embedding) /
          std::sqrt(norm_sq);
      g.map_weights += g_pre * sample.x.transpose();
      g.map_bias += g_pre;
    }
  }

  const double inv = 1.0 / static_cast<double>(batch.size());
  g.map_weights *= inv;
  g.map_bias *= inv;
  g.head_weights *= inv;
  g.head_bias *= inv;
  return g;
}

void Mapper::save(const std::string& dir, const std::string& run_manifest_hash,
                  const nlohmann::json& config_snapshot) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  fs::path blob_path = fs::path(dir) / "mapper.f64";

  // Blob layout: map weights (n x D row-major), map bias, head weights
  // (C x n row-major), head bias.
  std::vector<double> flat;
  flat.reserve(static_cast<size_t>(output_dim_) * input_dim_ + output_dim_ +
               static_cast<size_t>(num_classes_) * output_dim_ + num_classes_);
  for (int i = 0; i < output_dim_; ++i)
    for (int j = 0; j < input_dim_; ++j) flat.push_back(map_weights_(i, j));
  for (int i = 0; i < output_dim_; ++i) flat.push_back(map_bias_(i));
  for (int i = 0; i < num_classes_; ++i)
    for (int j = 0; j < output_dim_; ++j) flat.push_back(head_weights_(i, j));
  for (int i = 0; i < num_classes_; ++i) flat.push_back(head_bias_(i));
  write_f64_blob(blob_path, flat);

  nlohmann::json manifest = {
      {"input_dim", input_dim_},
      {"output_dim", output_dim_},
      {"num_classes", num_classes_},
      {"lambda", loss_mix_},
      {"blob", "mapper.f64"},
      {"blob_fnv1a64", fnv1a64_hex_file(blob_path)},
  };
  if (!config_snapshot.is_null() && !config_snapshot.empty()) {
    manifest["config"] = config_snapshot;
    if (config_snapshot.contains("seed"))
      manifest["seed"] = config_snapshot["seed"];
  }
  if (!run_manifest_hash.empty())
    manifest["run_manifest_hash"] = run_manifest_hash;
  write_json_file(fs::path(dir) / "mapper.json", manifest);
}

Mapper Mapper::load(const std::string& dir) {
  namespace fs = std::filesystem;
  nlohmann::json manifest = read_json_file(fs::path(dir) / "mapper.json");
  int input_dim = manifest.at("input_dim").get<int>();
  int output_dim = manifest.at("output_dim").get<int>();
  int num_classes = manifest.at("num_classes").get<int>();
  double lambda = manifest.at("lambda").get<double>();
  Mapper m(input_dim, output_dim, num_classes, lambda);

  std::vector<double> flat =
      read_f64_blob(fs::path(dir) / manifest.value("blob", "mapper.f64"));
  size_t expected = static_cast<size_t>(output_dim) * input_dim + output_dim +
                    static_cast<size_t>(num_classes) * output_dim +
                    num_classes;
  if (flat.size() != expected)
    fail(ErrorKind::IoError, "mapper blob size does not match manifest dims");
  size_t pos = 0;
  for (int i = 0; i < output_dim; ++i)
    for (int j = 0; j < input_dim; ++j) m.map_weights_(i, j) = flat[pos++];
  for (int i = 0; i < output_dim; ++i) m.map_bias_(i) = flat[pos++];
  for (int i = 0; i < num_classes; ++i)
    for (int j = 0; j < output_dim; ++j) m.head_weights_(i, j) = flat[pos++];
  for (int i = 0; i < num_classes; ++i) m.head_bias_(i) = flat[pos++];
  return m;
}

}  // namespace hiersearch
