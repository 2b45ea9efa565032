#include "hiersearch/index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hiersearch/io.hpp"

namespace hiersearch {

namespace {

bool csv_safe(const std::string& s) {
  return s.find_first_of(",\"\n\r") == std::string::npos;
}

}  // namespace

Index Index::build(std::vector<ImageRecord> records, IndexManifest manifest) {
  if (records.empty()) fail(ErrorKind::EmptyInput, "no records to index");

  Index index;
  index.dim_ = static_cast<int>(records.front().embedding.size());
  for (const ImageRecord& r : records) {
    if (r.image_id.empty())
      fail(ErrorKind::BadValue, "record with empty image id");
    if (!csv_safe(r.image_id) || (r.label && !csv_safe(*r.label)))
      fail(ErrorKind::BadValue,
           "'" + r.image_id + "': ids and labels must not contain commas, "
           "quotes or newlines");
    if (static_cast<int>(r.embedding.size()) != index.dim_)
      fail(ErrorKind::DimensionMismatch,
           "'" + r.image_id + "' has embedding dim " +
               std::to_string(r.embedding.size()) + ", expected " +
               std::to_string(index.dim_));
    if (std::abs(r.embedding.norm() - 1.0) > 1e-6)
      fail(ErrorKind::NotUnitNorm, "'" + r.image_id + "' embedding norm is " +
                                       std::to_string(r.embedding.norm()));
    if (r.rerank_descriptor) {
      if (!r.rerank_descriptor->allFinite())
        fail(ErrorKind::BadValue,
             "'" + r.image_id + "' has a non-finite rerank descriptor");
      int d = static_cast<int>(r.rerank_descriptor->size());
      if (!index.rerank_dim_) index.rerank_dim_ = d;
      if (*index.rerank_dim_ != d)
        fail(ErrorKind::DimensionMismatch,
             "'" + r.image_id + "' has descriptor dim " + std::to_string(d) +
                 ", expected " + std::to_string(*index.rerank_dim_));
    }
  }

  std::sort(records.begin(), records.end(),
            [](const ImageRecord& a, const ImageRecord& b) {
              return a.image_id < b.image_id;
            });
  for (size_t i = 1; i < records.size(); ++i)
    if (records[i].image_id == records[i - 1].image_id)
      fail(ErrorKind::DuplicateId, "'" + records[i].image_id + "'");

  index.records_ = std::move(records);
  index.manifest_ = std::move(manifest);
  return index;
}

const ImageRecord* Index::find(std::string_view image_id) const {
  auto it = std::lower_bound(
      records_.begin(), records_.end(), image_id,
      [](const ImageRecord& r, std::string_view id) { return r.image_id < id; });
  if (it == records_.end() || it->image_id != image_id) return nullptr;
  return &*it;
}

std::vector<ScoredId> Index::query_topn(
    const Eigen::VectorXd& query, int n,
    const std::optional<std::string>& exclude_id) const {
  if (records_.empty()) fail(ErrorKind::EmptyIndex, "index has no records");
  if (n < 1) fail(ErrorKind::BadArgument, "N must be >= 1");
  if (query.size() != dim_)
    fail(ErrorKind::DimensionMismatch,
         "query has " + std::to_string(query.size()) + " dims, index has " +
             std::to_string(dim_));
  if (std::abs(query.norm() - 1.0) > 1e-6)
    fail(ErrorKind::NotUnitNorm, "query norm is " + std::to_string(query.norm()));

  std::vector<ScoredId> scored;
  scored.reserve(records_.size());
  for (const ImageRecord& r : records_) {
    if (exclude_id && r.image_id == *exclude_id) continue;
    scored.push_back({r.image_id, r.embedding.dot(query)});
  }
  size_t keep = std::min<size_t>(static_cast<size_t>(n), scored.size());
  // Records are id-sorted, so (score desc, id asc) is a strict total order.
  std::partial_sort(scored.begin(), scored.begin() + keep, scored.end(),
                    [](const ScoredId& a, const ScoredId& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.image_id < b.image_id;
                    });
  scored.resize(keep);
  return scored;
}

std::vector<RankedItem> rerank_topn(const Index& index,
                                    const std::vector<ScoredId>& candidates,
                                    const Eigen::VectorXd& query_descriptor,
                                    int window) {
  if (window < 0) fail(ErrorKind::BadArgument, "window must be >= 0");
  if (static_cast<size_t>(window) > candidates.size())
    fail(ErrorKind::WindowTooLarge,
         "window " + std::to_string(window) + " exceeds " +
             std::to_string(candidates.size()) + " candidates");
  if (query_descriptor.size() == 0)
    fail(ErrorKind::MissingQueryDescriptor, "query has no rerank descriptor");
  double query_norm = query_descriptor.norm();
  if (!query_descriptor.allFinite() || query_norm == 0.0)
    fail(ErrorKind::BadValue, "query descriptor must be finite and nonzero");
  if (index.rerank_dim() &&
      query_descriptor.size() != *index.rerank_dim())
    fail(ErrorKind::DimensionMismatch,
         "query descriptor has " + std::to_string(query_descriptor.size()) +
             " dims, index expects " + std::to_string(*index.rerank_dim()));

  struct WindowItem {
    RankedItem item;
    bool has_descriptor = false;
    double cosine = -std::numeric_limits<double>::infinity();
  };
  std::vector<WindowItem> head;
  head.reserve(window);
  for (int i = 0; i < window; ++i) {
    const ScoredId& c = candidates[i];
    const ImageRecord* record = index.find(c.image_id);
    if (!record)
      fail(ErrorKind::UnknownNode,
           "candidate '" + c.image_id + "' is not in the index");
    WindowItem w;
    w.item = {c.image_id, c.score, std::nullopt};
    if (record->rerank_descriptor) {
      double norm = record->rerank_descriptor->norm();
      if (norm > 0.0) {
        w.has_descriptor = true;
        w.cosine = record->rerank_descriptor->dot(query_descriptor) /
                   (norm * query_norm);
        w.item.rerank_score = w.cosine;
      }
    }
    head.push_back(std::move(w));
  }

  std::stable_sort(head.begin(), head.end(),
                   [](const WindowItem& a, const WindowItem& b) {
                     if (a.has_descriptor != b.has_descriptor)
                       return a.has_descriptor;  // missing ones sink
                     return a.cosine > b.cosine;
                   });

  std::vector<RankedItem> out;
  out.reserve(candidates.size());
  for (WindowItem& w : head) out.push_back(std::move(w.item));
  for (size_t i = window; i < candidates.size(); ++i)
    out.push_back({candidates[i].image_id, candidates[i].score, std::nullopt});
  return out;
}

void Index::save(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  std::vector<double> embeddings;
  embeddings.reserve(records_.size() * dim_);
  for (const ImageRecord& r : records_)
    for (int j = 0; j < dim_; ++j) embeddings.push_back(r.embedding(j));
  write_f64_blob(fs::path(dir) / "embeddings.f64", embeddings);

  // Missing descriptors are stored as a NaN row so the blob keeps a fixed
  // stride; the loader turns NaN rows back into absent descriptors.
  if (rerank_dim_) {
    std::vector<double> descriptors;
    descriptors.reserve(records_.size() * *rerank_dim_);
    for (const ImageRecord& r : records_) {
      if (r.rerank_descriptor) {
        for (int j = 0; j < *rerank_dim_; ++j)
          descriptors.push_back((*r.rerank_descriptor)(j));
      } else {
        for (int j = 0; j < *rerank_dim_; ++j)
          descriptors.push_back(std::numeric_limits<double>::quiet_NaN());
      }
    }
    write_f64_blob(fs::path(dir) / "descriptors.f64", descriptors);
  }

  std::ostringstream labels;
  labels << "image_id,label\n";
  for (const ImageRecord& r : records_)
    labels << r.image_id << "," << (r.label ? *r.label : "") << "\n";
  write_text_file(fs::path(dir) / "labels.csv", labels.str());

  nlohmann::json manifest = {
      {"version", manifest_.version},
      {"dim", dim_},
      {"count", records_.size()},
      {"embeddings_fnv1a64",
       fnv1a64_hex_file(fs::path(dir) / "embeddings.f64")},
  };
  if (rerank_dim_) {
    manifest["rerank_dim"] = *rerank_dim_;
    manifest["descriptors_fnv1a64"] =
        fnv1a64_hex_file(fs::path(dir) / "descriptors.f64");
  } else {
    manifest["rerank_dim"] = nullptr;
  }
  if (!manifest_.taxonomy_hash.empty())
    manifest["taxonomy_hash"] = manifest_.taxonomy_hash;
  if (!manifest_.mapper_hash.empty())
    manifest["mapper_hash"] = manifest_.mapper_hash;
  if (!manifest_.run_manifest_hash.empty())
    manifest["run_manifest_hash"] = manifest_.run_manifest_hash;
  write_json_file(fs::path(dir) / "manifest.json", manifest);
}

Index Index::load(const std::string& dir) {
  namespace fs = std::filesystem;
  nlohmann::json manifest = read_json_file(fs::path(dir) / "manifest.json");
  std::string version = manifest.value("version", "");
  if (version != "hiersearch-index/1")
    fail(ErrorKind::IoError,
         "unsupported index version '" + version + "' in " + dir);
  const int dim = manifest.at("dim").get<int>();
  const size_t count = manifest.at("count").get<size_t>();

  std::vector<double> embeddings =
      read_f64_blob(fs::path(dir) / "embeddings.f64");
  if (embeddings.size() != count * static_cast<size_t>(dim))
    fail(ErrorKind::IoError, "embeddings blob does not match manifest");

  std::optional<int> rerank_dim;
  std::vector<double> descriptors;
  if (manifest.contains("rerank_dim") && !manifest["rerank_dim"].is_null()) {
    rerank_dim = manifest["rerank_dim"].get<int>();
    descriptors = read_f64_blob(fs::path(dir) / "descriptors.f64");
    if (descriptors.size() != count * static_cast<size_t>(*rerank_dim))
      fail(ErrorKind::IoError, "descriptors blob does not match manifest");
  }

  std::string labels_text = read_text_file(fs::path(dir) / "labels.csv");
  std::istringstream labels(labels_text);
  std::string line;
  if (!std::getline(labels, line) || line != "image_id,label")
    fail(ErrorKind::IoError, "labels.csv is missing its header");

  std::vector<ImageRecord> records;
  records.reserve(count);
  size_t row = 0;
  while (std::getline(labels, line)) {
    if (line.empty()) continue;
    if (row >= count) fail(ErrorKind::IoError, "labels.csv has extra rows");
    size_t comma = line.find(',');
    if (comma == std::string::npos)
      fail(ErrorKind::IoError, "labels.csv row without a comma");
    ImageRecord r;
    r.image_id = line.substr(0, comma);
    std::string label = line.substr(comma + 1);
    if (!label.empty() && label.back() == '\r') label.pop_back();
    if (!label.empty()) r.label = label;
    r.embedding.resize(dim);
    for (int j = 0; j < dim; ++j) r.embedding(j) = embeddings[row * dim + j];
    if (rerank_dim) {
      Eigen::VectorXd d(*rerank_dim);
      bool all_nan = true;
      for (int j = 0; j < *rerank_dim; ++j) {
        d(j) = descriptors[row * *rerank_dim + j];
        if (!std::isnan(d(j))) all_nan = false;
      }
      if (!all_nan) r.rerank_descriptor = std::move(d);
    }
    records.push_back(std::move(r));
    ++row;
  }
  if (row != count) fail(ErrorKind::IoError, "labels.csv has missing rows");

  IndexManifest meta;
  meta.version = version;
  meta.taxonomy_hash = manifest.value("taxonomy_hash", "");
  meta.mapper_hash = manifest.value("mapper_hash", "");
  meta.run_manifest_hash = manifest.value("run_manifest_hash", "");
  return Index::build(std::move(records), std::move(meta));
}

}  // namespace hiersearch
