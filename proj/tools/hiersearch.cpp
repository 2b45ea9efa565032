// Command-line surface for the hiersearch pipeline: validate a taxonomy,
// solve class embeddings, generate synthetic feature data, train the
// embedding mapper, build an index, query it, and evaluate retrieval.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>

#include "hiersearch/class_embedding.hpp"
#include "hiersearch/dataset.hpp"
#include "hiersearch/evaluation.hpp"
#include "hiersearch/index.hpp"
#include "hiersearch/io.hpp"
#include "hiersearch/manifest.hpp"
#include "hiersearch/pipeline.hpp"
#include "hiersearch/taxonomy.hpp"
#include "hiersearch/trainer.hpp"

namespace fs = std::filesystem;
using namespace hiersearch;

namespace {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::IoError: return 2;
    case ErrorKind::InternalError: return 3;
    default: return 1;  // validation failure
  }
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::string text = read_text_file(path);
  std::istringstream in(text);
  std::vector<std::vector<double>> rows;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        fail(ErrorKind::ParseError, path + " line " + std::to_string(number) +
                                        ": bad number '" + cell + "'");
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorKind::EmptyInput, path + " holds no matrix rows");
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size())
      fail(ErrorKind::ParseError, path + ": ragged rows");
    for (size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

RerankMode parse_rerank_mode(const std::string& mode) {
  if (mode == "off") return RerankMode::Off;
  if (mode == "auto") return RerankMode::Auto;
  if (mode == "require") return RerankMode::Require;
  fail(ErrorKind::BadArgument, "rerank mode must be off, auto or require");
}

std::string join_csv(const std::vector<std::string>& items) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  return out;
}

// Map dataset labels onto embedding-table class indices.
std::vector<LabeledFeature> to_labeled(const std::vector<FeatureRecord>& records,
                                       const ClassEmbeddingTable& table) {
  std::unordered_map<std::string, int> index;
  for (size_t i = 0; i < table.class_ids.size(); ++i)
    index.emplace(table.class_ids[i], static_cast<int>(i));
  std::vector<LabeledFeature> out;
  out.reserve(records.size());
  for (const FeatureRecord& r : records) {
    if (!r.label)
      fail(ErrorKind::BadValue,
           "record '" + r.image_id + "' has no label and cannot be trained on");
    auto it = index.find(*r.label);
    if (it == index.end())
      fail(ErrorKind::UnknownClassIndex,
           "label '" + *r.label + "' of record '" + r.image_id +
               "' is not an embedding-table class");
    out.push_back({r.features, it->second});
  }
  return out;
}

struct GlobalOptions {
  uint64_t seed = 0;
  std::string config_path;
  std::string out;
};

// CLI value wins over config file wins over the built-in default.
template <typename T>
void apply_config(const nlohmann::json& cfg, CLI::App* cmd,
                  const std::string& flag, const std::string& key, T& value) {
  if (cmd->count(flag) > 0) return;
  if (cfg.contains(key)) value = cfg.at(key).get<T>();
}

int cmd_taxonomy_check(const std::string& path) {
  Taxonomy taxonomy = Taxonomy::parse(read_text_file(path));
  std::cout << "nodes: " << taxonomy.size() << "\n"
            << "leaves: " << taxonomy.leaves().size() << "\n"
            << "max height: " << taxonomy.max_height() << "\n";
  std::vector<std::string> levels = taxonomy.level_tags();
  if (!levels.empty()) std::cout << "levels: " << join_csv(levels) << "\n";
  if (taxonomy.max_height() == 0) {
    std::cout << "S: undefined (single-node taxonomy)\n";
  } else {
    Eigen::MatrixXd s = taxonomy.similarity_matrix();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        s, Eigen::EigenvaluesOnly);
    double min_eig = solver.eigenvalues().minCoeff();
    std::cout << "S: " << (min_eig >= -1e-9 ? "PSD" : "NOT PSD")
              << " (min eigenvalue " << min_eig << ")\n";
    if (min_eig < -1e-9)
      fail(ErrorKind::NotPSD, "taxonomy similarity matrix");
  }
  std::cout << "OK\n";
  return 0;
}

int cmd_embed(const GlobalOptions& global, const std::string& taxonomy_path,
              const std::string& override_path, bool csv) {
  if (global.out.empty()) fail(ErrorKind::BadArgument, "--out is required");
  Taxonomy taxonomy = Taxonomy::parse(read_text_file(taxonomy_path));

  std::vector<std::string> ids;
  for (int leaf : taxonomy.leaves()) ids.push_back(taxonomy.node(leaf).name);

  Eigen::MatrixXd similarity;
  if (!override_path.empty()) {
    similarity = read_matrix_csv(override_path);
    if (similarity.rows() != static_cast<Eigen::Index>(ids.size()))
      fail(ErrorKind::DimensionMismatch,
           "override matrix is " + std::to_string(similarity.rows()) +
               "x" + std::to_string(similarity.cols()) + " but taxonomy has " +
               std::to_string(ids.size()) + " leaves");
  } else {
    similarity = taxonomy.similarity_matrix();
  }

  ClassEmbeddingTable table = compute_class_embeddings(similarity, ids);
  double gram_error = gram_reconstruction_error(table, similarity);

  RunManifest manifest;
  manifest.command = "embed";
  manifest.seed = global.seed;
  manifest.timestamp = iso8601_utc_now();
  manifest.config = {{"csv", csv}};
  manifest.input_hashes["taxonomy"] = fnv1a64_hex_file(taxonomy_path);
  if (!override_path.empty())
    manifest.input_hashes["similarity_override"] =
        fnv1a64_hex_file(override_path);

  save_embedding_table(table, global.out, manifest.hash(), csv);
  manifest.write((fs::path(global.out) / "run_manifest.json").string());

  std::cout << "classes: " << table.dim << "\n";
  std::cout << "gram error: " << gram_error << "\n";
  std::cout << "wrote " << global.out << "\n";
  return 0;
}

int cmd_synth(const GlobalOptions& global, const std::string& taxonomy_path,
              const SynthConfig& synth) {
  if (global.out.empty()) fail(ErrorKind::BadArgument, "--out is required");
  Taxonomy taxonomy = Taxonomy::parse(read_text_file(taxonomy_path));
  ClassEmbeddingTable table = compute_class_embeddings(taxonomy);
  SynthDataset data = generate_synthetic(taxonomy, table, synth);

  fs::create_directories(global.out);
  write_feature_jsonl((fs::path(global.out) / "train.jsonl").string(),
                      data.train);
  write_feature_jsonl((fs::path(global.out) / "test.jsonl").string(),
                      data.test);
  if (!data.unseen.empty())
    write_feature_jsonl((fs::path(global.out) / "unseen.jsonl").string(),
                        data.unseen);

  RunManifest manifest;
  manifest.command = "synth";
  manifest.seed = synth.seed;
  manifest.timestamp = iso8601_utc_now();
  manifest.config = {{"per_class", synth.per_class},
                     {"sigma", synth.sigma},
                     {"train_fraction", synth.train_fraction},
                     {"descriptor_dim", synth.descriptor_dim},
                     {"descriptor_sigma", synth.descriptor_sigma},
                     {"unseen_classes", synth.unseen_classes},
                     {"unseen_level", synth.unseen_level},
                     {"unseen_per_class", synth.unseen_per_class}};
  manifest.input_hashes["taxonomy"] = fnv1a64_hex_file(taxonomy_path);

  nlohmann::json sidecar = manifest.to_json();
  sidecar["manifest_hash"] = manifest.hash();
  sidecar["counts"] = {{"train", data.train.size()},
                       {"test", data.test.size()},
                       {"unseen", data.unseen.size()}};
  nlohmann::json unseen_json = nlohmann::json::array();
  for (const UnseenClassInfo& info : data.unseen_info)
    unseen_json.push_back({{"class_name", info.class_name},
                           {"planted_node", info.planted_node},
                           {"image_ids", info.image_ids}});
  sidecar["unseen_info"] = unseen_json;
  write_json_file(fs::path(global.out) / "manifest.json", sidecar);

  std::cout << "train records: " << data.train.size() << "\n"
            << "test records: " << data.test.size() << "\n";
  if (!data.unseen.empty())
    std::cout << "unseen records: " << data.unseen.size() << "\n";
  std::cout << "wrote " << global.out << "\n";
  return 0;
}

int cmd_train(const GlobalOptions& global, const std::string& features_path,
              const std::string& embeddings_dir, const TrainConfig& config) {
  if (global.out.empty()) fail(ErrorKind::BadArgument, "--out is required");
  ClassEmbeddingTable table = load_embedding_table(embeddings_dir);
  std::vector<FeatureRecord> records = read_feature_jsonl(features_path);
  std::vector<LabeledFeature> samples = to_labeled(records, table);

  TrainResult result = train_mapper(samples, table, config);

  RunManifest manifest;
  manifest.command = "train";
  manifest.seed = config.seed;
  manifest.timestamp = iso8601_utc_now();
  manifest.config = config.to_json();
  manifest.input_hashes["features"] = fnv1a64_hex_file(features_path);
  manifest.input_hashes["embeddings"] =
      fnv1a64_hex_file(fs::path(embeddings_dir) / "embeddings.f64");

  result.mapper.save(global.out, manifest.hash(), config.to_json());
  save_loss_history(result.history,
                    (fs::path(global.out) / "loss_history.csv").string());
  manifest.write((fs::path(global.out) / "run_manifest.json").string());

  int correct = 0;
  for (const LabeledFeature& s : samples)
    if (result.mapper.classify(s.x).class_index == s.label) ++correct;

  std::cout << "samples: " << samples.size() << "\n"
            << "initial loss: " << result.initial_loss << "\n"
            << "final loss: " << result.final_loss << "\n"
            << "train accuracy: "
            << static_cast<double>(correct) / static_cast<double>(samples.size())
            << "\n"
            << "wrote " << global.out << "\n";
  return 0;
}

int cmd_index(const GlobalOptions& global, const std::string& features_path,
              const std::string& mapper_dir, const std::string& taxonomy_path) {
  if (global.out.empty()) fail(ErrorKind::BadArgument, "--out is required");
  Mapper mapper = Mapper::load(mapper_dir);
  std::vector<FeatureRecord> records = read_feature_jsonl(features_path);

  std::optional<Taxonomy> taxonomy;
  if (!taxonomy_path.empty())
    taxonomy = Taxonomy::parse(read_text_file(taxonomy_path));

  RunManifest run;
  run.command = "index";
  run.seed = global.seed;
  run.timestamp = iso8601_utc_now();
  run.input_hashes["features"] = fnv1a64_hex_file(features_path);
  run.input_hashes["mapper"] =
      fnv1a64_hex_file(fs::path(mapper_dir) / "mapper.f64");
  if (!taxonomy_path.empty())
    run.input_hashes["taxonomy"] = fnv1a64_hex_file(taxonomy_path);

  IndexManifest meta;
  meta.mapper_hash = run.input_hashes["mapper"];
  if (!taxonomy_path.empty()) meta.taxonomy_hash = run.input_hashes["taxonomy"];
  meta.run_manifest_hash = run.hash();

  Index index = build_index_from_features(
      records, mapper, taxonomy ? &*taxonomy : nullptr, std::move(meta));
  index.save(global.out);
  run.write((fs::path(global.out) / "run_manifest.json").string());

  std::cout << "records: " << index.size() << "\n"
            << "dim: " << index.dim() << "\n";
  if (index.rerank_dim())
    std::cout << "rerank dim: " << *index.rerank_dim() << "\n";
  std::cout << "wrote " << global.out << "\n";
  return 0;
}

int cmd_query(const GlobalOptions& global, const std::string& index_dir,
              const std::string& mapper_dir, const std::string& query_path,
              int n, const std::string& rerank_mode, int rerank_window,
              bool include_self) {
  Index index = Index::load(index_dir);
  Mapper mapper = Mapper::load(mapper_dir);
  std::vector<FeatureRecord> queries = read_feature_jsonl(query_path);
  if (queries.empty()) fail(ErrorKind::NoData, "no query records");
  RerankMode mode = parse_rerank_mode(rerank_mode);

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!global.out.empty()) {
    file.open(global.out);
    if (!file) fail(ErrorKind::IoError, "cannot open '" + global.out + "'");
    out = &file;
  }

  for (const FeatureRecord& q : queries) {
    std::optional<std::string> exclude;
    if (!include_self) exclude = q.image_id;
    std::optional<int> window;
    if (rerank_window >= 0) window = rerank_window;
    RetrievalResult r = retrieve(index, mapper, q, n, mode, exclude, window);
    const std::vector<RankedItem>& ranked = r.post_rerank;
    for (size_t i = 0; i < ranked.size(); ++i) {
      nlohmann::json row = {{"query_id", q.image_id},
                            {"rank", i + 1},
                            {"image_id", ranked[i].image_id},
                            {"score", ranked[i].score}};
      if (ranked[i].rerank_score) row["rerank_score"] = *ranked[i].rerank_score;
      *out << row.dump() << "\n";
    }
  }
  return 0;
}

int cmd_eval(const GlobalOptions& global, const std::string& index_dir,
             const std::string& mapper_dir, const std::string& taxonomy_path,
             const std::string& test_path, int k,
             const std::string& rerank_mode) {
  if (global.out.empty()) fail(ErrorKind::BadArgument, "--out is required");
  Index index = Index::load(index_dir);
  Mapper mapper = Mapper::load(mapper_dir);
  Taxonomy taxonomy = Taxonomy::parse(read_text_file(taxonomy_path));
  std::vector<FeatureRecord> test_set = read_feature_jsonl(test_path);
  RerankMode mode = parse_rerank_mode(rerank_mode);

  size_t labeled = 0;
  for (const ImageRecord& r : index.records())
    if (r.label) ++labeled;
  if (labeled < 2) fail(ErrorKind::NoData, "index has too few labeled records");
  int bound = static_cast<int>(labeled) - 1;  // leave-query-out
  if (k > bound) {
    std::cout << "note: K clamped from " << k << " to " << bound << "\n";
    k = bound;
  }

  EvalReport report =
      evaluate_retrieval(index, mapper, taxonomy, test_set, k, mode);

  RunManifest run;
  run.command = "eval";
  run.seed = global.seed;
  run.timestamp = iso8601_utc_now();
  run.config = {{"K", k}, {"rerank", rerank_mode}};
  run.input_hashes["index"] =
      fnv1a64_hex_file(fs::path(index_dir) / "embeddings.f64");
  run.input_hashes["mapper"] =
      fnv1a64_hex_file(fs::path(mapper_dir) / "mapper.f64");
  run.input_hashes["taxonomy"] = fnv1a64_hex_file(taxonomy_path);
  run.input_hashes["test"] = fnv1a64_hex_file(test_path);

  fs::create_directories(global.out);
  nlohmann::json report_json = report.to_json();
  report_json["run_manifest_hash"] = run.hash();
  write_json_file(fs::path(global.out) / "report.json", report_json);
  write_text_file(fs::path(global.out) / "hp_curve.csv", report.hp_curve_csv());
  run.write((fs::path(global.out) / "run_manifest.json").string());

  std::cout << "queries: " << report.queries << "\n";
  std::cout << "mAHP@" << report.K << " (pre-rerank): " << report.pre_rerank.mahp
            << "\n";
  if (report.reranked)
    std::cout << "mAHP@" << report.K
              << " (post-rerank): " << report.post_rerank.mahp << "\n";
  std::cout << "mAP: " << report.pre_rerank.map << "\n";
  std::cout << "P@1: " << report.pre_rerank.p_at_k.front() << "\n";
  for (const auto& [level, confusion] : report.per_level)
    std::cout << "accuracy@" << level << ": " << confusion.accuracy << "\n";
  for (const std::string& w : report.warnings)
    std::cout << "warning: " << w << "\n";
  std::cout << "wrote " << global.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"taxonomy-aware semantic retrieval pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  app.add_option("--seed", global.seed, "Seed for all randomness");
  app.add_option("--config", global.config_path,
                 "JSON or TOML config file (flat keys)");
  app.add_option("--out", global.out, "Output file or directory");

  // taxonomy-check
  std::string tc_path;
  CLI::App* tc = app.add_subcommand("taxonomy-check",
                                    "Validate a taxonomy file");
  tc->add_option("taxonomy", tc_path, "Taxonomy file")->required();

  // embed
  std::string em_taxonomy, em_override;
  bool em_csv = false;
  CLI::App* em = app.add_subcommand("embed", "Solve class embeddings");
  em->add_option("--taxonomy", em_taxonomy, "Taxonomy file")->required();
  em->add_option("--similarity-override", em_override,
                 "CSV matrix replacing the taxonomy similarities");
  em->add_flag("--csv", em_csv, "Also write a CSV table (<= 32 classes)");

  // synth
  std::string sy_taxonomy;
  SynthConfig synth;
  CLI::App* sy = app.add_subcommand("synth", "Generate synthetic features");
  sy->add_option("--taxonomy", sy_taxonomy, "Taxonomy file")->required();
  sy->add_option("--per-class", synth.per_class, "Samples per class");
  sy->add_option("--sigma", synth.sigma, "Feature noise sigma");
  sy->add_option("--split", synth.train_fraction, "Train fraction");
  sy->add_option("--descriptor-dim", synth.descriptor_dim,
                 "Rerank descriptor dim (0 = none)");
  sy->add_option("--descriptor-sigma", synth.descriptor_sigma,
                 "Descriptor noise sigma");
  sy->add_option("--unseen", synth.unseen_classes, "Unseen class count");
  sy->add_option("--unseen-level", synth.unseen_level,
                 "Level tag anchoring unseen classes");
  sy->add_option("--unseen-per-class", synth.unseen_per_class,
                 "Samples per unseen class");

  // train
  std::string tr_features, tr_embeddings;
  TrainConfig train_config;
  bool tr_no_correlation = false;
  CLI::App* tr = app.add_subcommand("train", "Train the embedding mapper");
  tr->add_option("--features", tr_features, "Training JSONL")->required();
  tr->add_option("--embeddings", tr_embeddings, "Embedding table dir")
      ->required();
  tr->add_option("--epochs", train_config.epochs, "Training epochs");
  tr->add_option("--batch-size", train_config.batch_size, "Batch size");
  tr->add_option("--restarts", train_config.restart_epochs,
                 "Warm-restart epochs, comma separated")
      ->delimiter(',');
  tr->add_option("--lr-max", train_config.lr_max, "Peak learning rate");
  tr->add_option("--lr-min", train_config.lr_min, "Floor learning rate");
  tr->add_option("--lambda", train_config.lambda, "Cross-entropy weight");
  tr->add_option("--momentum", train_config.momentum, "SGD momentum");
  tr->add_flag("--no-correlation", tr_no_correlation,
               "Drop the correlation term (classification baseline)");

  // index
  std::string ix_features, ix_mapper, ix_taxonomy;
  CLI::App* ix = app.add_subcommand("index", "Build an image index");
  ix->add_option("--features", ix_features, "Feature JSONL")->required();
  ix->add_option("--mapper", ix_mapper, "Mapper checkpoint dir")->required();
  ix->add_option("--taxonomy", ix_taxonomy, "Taxonomy file (label check)");

  // query
  std::string qy_index, qy_mapper, qy_query, qy_rerank = "auto";
  int qy_n = 10, qy_window = -1;
  bool qy_include_self = false, qy_no_rerank = false;
  CLI::App* qy = app.add_subcommand("query", "Query an index");
  qy->add_option("--index", qy_index, "Index dir")->required();
  qy->add_option("--mapper", qy_mapper, "Mapper checkpoint dir")->required();
  qy->add_option("--query", qy_query, "Query JSONL")->required();
  qy->add_option("--n", qy_n, "Results per query");
  qy->add_option("--rerank", qy_rerank, "off | auto | require");
  qy->add_flag("--no-rerank", qy_no_rerank, "Same as --rerank off");
  qy->add_option("--rerank-window", qy_window, "Window size (default all)");
  qy->add_flag("--include-self", qy_include_self,
               "Keep the query image in its own results");

  // eval
  std::string ev_index, ev_mapper, ev_taxonomy, ev_test, ev_rerank = "off";
  int ev_k = 40;
  bool ev_no_rerank = false;
  CLI::App* ev = app.add_subcommand("eval", "Evaluate retrieval quality");
  ev->add_option("--index", ev_index, "Index dir")->required();
  ev->add_option("--mapper", ev_mapper, "Mapper checkpoint dir")->required();
  ev->add_option("--taxonomy", ev_taxonomy, "Taxonomy file")->required();
  ev->add_option("--test", ev_test, "Test JSONL")->required();
  ev->add_option("--k", ev_k, "Curve depth K");
  ev->add_option("--rerank", ev_rerank, "off | auto | require");
  ev->add_flag("--no-rerank", ev_no_rerank, "Same as --rerank off");

  try {
    app.parse(argc, argv);

    nlohmann::json cfg = nlohmann::json::object();
    if (!global.config_path.empty()) cfg = load_config_file(global.config_path);

    if (tc->parsed()) return cmd_taxonomy_check(tc_path);
    if (em->parsed()) return cmd_embed(global, em_taxonomy, em_override, em_csv);
    if (sy->parsed()) {
      apply_config(cfg, sy, "--per-class", "per_class", synth.per_class);
      apply_config(cfg, sy, "--sigma", "sigma", synth.sigma);
      apply_config(cfg, sy, "--split", "train_fraction", synth.train_fraction);
      apply_config(cfg, sy, "--descriptor-dim", "descriptor_dim",
                   synth.descriptor_dim);
      apply_config(cfg, sy, "--unseen", "unseen_classes", synth.unseen_classes);
      apply_config(cfg, sy, "--unseen-level", "unseen_level",
                   synth.unseen_level);
      synth.seed = global.seed;
      return cmd_synth(global, sy_taxonomy, synth);
    }
    if (tr->parsed()) {
      apply_config(cfg, tr, "--epochs", "epochs", train_config.epochs);
      apply_config(cfg, tr, "--batch-size", "batch_size",
                   train_config.batch_size);
      apply_config(cfg, tr, "--restarts", "restart_epochs",
                   train_config.restart_epochs);
      apply_config(cfg, tr, "--lr-max", "lr_max", train_config.lr_max);
      apply_config(cfg, tr, "--lr-min", "lr_min", train_config.lr_min);
      apply_config(cfg, tr, "--lambda", "lambda", train_config.lambda);
      apply_config(cfg, tr, "--momentum", "momentum", train_config.momentum);
      if (tr->count("--no-correlation") == 0 && cfg.contains("use_correlation"))
        train_config.use_correlation = cfg.at("use_correlation").get<bool>();
      if (tr_no_correlation) train_config.use_correlation = false;
      // With a custom epoch count but default restarts, keep only the
      // restarts that fit.
      if (tr->count("--restarts") == 0 && !cfg.contains("restart_epochs")) {
        std::erase_if(train_config.restart_epochs,
                      [&](int r) { return r > train_config.epochs; });
      }
      train_config.seed = global.seed;
      train_config.validate();
      return cmd_train(global, tr_features, tr_embeddings, train_config);
    }
    if (ix->parsed())
      return cmd_index(global, ix_features, ix_mapper, ix_taxonomy);
    if (qy->parsed())
      return cmd_query(global, qy_index, qy_mapper, qy_query, qy_n, qy_rerank,
                       qy_window, qy_include_self);
    if (ev->parsed())
      return cmd_eval(global, ev_index, ev_mapper, ev_taxonomy, ev_test, ev_k,
                      ev_rerank);
    return 0;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed artifact: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
