#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "hiersearch/error.hpp"

namespace hiersearch {

// Canonical order of the four well-known level tags, coarse to fine. Custom
// tags are allowed; only the known ones are checked for ordering.
extern const std::vector<std::string> kKnownLevels;

struct TaxNode {
  int id = -1;
  std::string name;
  std::optional<std::string> level;
  std::optional<int> parent;
  std::vector<int> children;
  int height = 0;  // edge distance to the deepest descendant leaf; 0 for leaves
  int depth = 0;   // edge distance from the root
};

// Rooted class hierarchy. Immutable after parse; all queries are read-only
// and safe for concurrent use.
class Taxonomy {
 public:
  // Parses the line-oriented taxonomy format. Two shapes are auto-detected:
  //   indented:  `name[:level]` with 2-space indentation encoding parenthood
  //   edges:     `parent -> child [level]`
  // `#` starts a comment. Leaf order (and therefore class index order) is
  // the order in which leaves first appear in the file.
  static Taxonomy parse(std::string_view source_text);

  size_t size() const { return nodes_.size(); }
  const std::vector<TaxNode>& nodes() const { return nodes_; }
  const TaxNode& node(int id) const;
  int node_id(std::string_view name) const;  // UnknownNode if absent
  bool has_node(std::string_view name) const;

  int root() const { return root_id_; }
  const std::vector<int>& leaves() const { return leaf_ids_; }
  int max_height() const { return max_height_; }
  bool is_leaf(int id) const { return node(id).children.empty(); }

  // Deepest node that is an ancestor of both u and v (a node is its own
  // ancestor). Unique because the hierarchy is a tree.
  int lowest_common_subsumer(int u, int v) const;

  // height(LCS(u,v)) / max_height, in [0,1]. DegenerateTree when the
  // taxonomy is a single node (max_height = 0).
  double class_dissimilarity(int u, int v) const;
  double class_similarity(int u, int v) const;

  // S[i][j] = class_similarity(leaf_i, leaf_j) over leaves in class order.
  Eigen::MatrixXd similarity_matrix() const;

  // The unique ancestor of `leaf` carrying `level` (the leaf itself counts).
  int project_to_level(int leaf, std::string_view level) const;

  // Distinct level tags present, ordered coarse to fine by node depth.
  std::vector<std::string> level_tags() const;
  // Tags carried by some ancestor-or-self of every leaf.
  std::vector<std::string> levels_on_all_leaf_paths() const;

  // Name-based conveniences used by the CLI and evaluation layers.
  int lowest_common_subsumer(std::string_view u, std::string_view v) const;
  double class_similarity(std::string_view u, std::string_view v) const;

 private:
  Taxonomy() = default;
  void finalize();  // heights, depths, leaf list, validation of level tags

  std::vector<TaxNode> nodes_;
  std::unordered_map<std::string, int> by_name_;
  std::vector<int> leaf_ids_;
  int root_id_ = -1;
  int max_height_ = 0;
};

}  // namespace hiersearch
