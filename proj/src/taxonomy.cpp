#include "hiersearch/taxonomy.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace hiersearch {

const std::vector<std::string> kKnownLevels = {"era", "type", "dynasty",
                                               "monument"};

namespace {

std::string trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string join(const std::vector<std::string>& names) {
  std::string out;
  for (size_t i = 0; i < names.size(); ++i) {
    if (i) out += ", ";
    out += names[i];
  }
  return out;
}

struct Line {
  int number;
  std::string text;  // comment-stripped, not yet trimmed (indent matters)
};

std::vector<Line> content_lines(std::string_view text) {
  std::vector<Line> out;
  int number = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    std::string_view raw =
        text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    ++number;
    std::string line(raw);
    if (size_t hash = line.find('#'); hash != std::string::npos)
      line.resize(hash);
    if (!trim(line).empty()) out.push_back({number, line});
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

// `name[:level]`, both parts trimmed.
std::pair<std::string, std::optional<std::string>> split_level(
    const std::string& token, int line_number) {
  size_t colon = token.find(':');
  if (colon == std::string::npos) return {trim(token), std::nullopt};
  std::string name = trim(token.substr(0, colon));
  std::string level = trim(token.substr(colon + 1));
  if (name.empty())
    fail(ErrorKind::ParseError,
         "line " + std::to_string(line_number) + ": empty node name");
  if (level.empty())
    fail(ErrorKind::ParseError, "line " + std::to_string(line_number) +
                                    ": empty level tag after ':'");
  return {name, level};
}

int rank_of_known_level(const std::string& level) {
  for (size_t i = 0; i < kKnownLevels.size(); ++i)
    if (kKnownLevels[i] == level) return static_cast<int>(i);
  return -1;
}

}  // namespace

const TaxNode& Taxonomy::node(int id) const {
  if (id < 0 || static_cast<size_t>(id) >= nodes_.size())
    fail(ErrorKind::UnknownNode, "node id " + std::to_string(id));
  return nodes_[id];
}

int Taxonomy::node_id(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end())
    fail(ErrorKind::UnknownNode, "no node named '" + std::string(name) + "'");
  return it->second;
}

bool Taxonomy::has_node(std::string_view name) const {
  return by_name_.count(std::string(name)) > 0;
}

Taxonomy Taxonomy::parse(std::string_view source_text) {
  std::vector<Line> lines = content_lines(source_text);
  if (lines.empty()) fail(ErrorKind::EmptyInput, "taxonomy source is empty");

  bool edge_form = false;
  for (const Line& line : lines)
    if (line.text.find("->") != std::string::npos) {
      edge_form = true;
      break;
    }

  Taxonomy t;
  auto add_node = [&t](const std::string& name,
                       std::optional<std::string> level) {
    TaxNode n;
    n.id = static_cast<int>(t.nodes_.size());
    n.name = name;
    n.level = std::move(level);
    t.nodes_.push_back(std::move(n));
    t.by_name_.emplace(name, t.nodes_.back().id);
    return t.nodes_.back().id;
  };

  if (!edge_form) {
    // Indented form. A stack of ancestor ids, one per depth.
    std::vector<int> stack;
    for (const Line& line : lines) {
      size_t spaces = 0;
      while (spaces < line.text.size() && line.text[spaces] == ' ') ++spaces;
      if (line.text[spaces] == '\t')
        fail(ErrorKind::ParseError, "line " + std::to_string(line.number) +
                                        ": tabs are not allowed in indents");
      if (spaces % 2 != 0)
        fail(ErrorKind::ParseError,
             "line " + std::to_string(line.number) +
                 ": indentation must be a multiple of 2 spaces");
      size_t depth = spaces / 2;
      auto [name, level] = split_level(trim(line.text), line.number);
      if (t.by_name_.count(name))
        fail(ErrorKind::DuplicateName, "node '" + name + "' (line " +
                                           std::to_string(line.number) + ")");
      if (depth == 0) {
        if (t.root_id_ >= 0)
          fail(ErrorKind::MultipleRoots,
               "'" + t.nodes_[t.root_id_].name + "' and '" + name + "'");
        int id = add_node(name, level);
        t.root_id_ = id;
        stack.assign(1, id);
      } else {
        if (depth > stack.size())
          fail(ErrorKind::OrphanNode,
               "line " + std::to_string(line.number) + ": node '" + name +
                   "' is indented past its nearest ancestor");
        int parent = stack[depth - 1];
        int id = add_node(name, level);
        t.nodes_[id].parent = parent;
        t.nodes_[parent].children.push_back(id);
        stack.resize(depth);
        stack.push_back(id);
      }
    }
  } else {
    // Edge form: `parent -> child [level]`.
    std::set<std::pair<int, int>> seen_edges;
    for (const Line& line : lines) {
      std::string text = trim(line.text);
      size_t arrow = text.find("->");
      if (arrow == std::string::npos)
        fail(ErrorKind::ParseError, "line " + std::to_string(line.number) +
                                        ": expected 'parent -> child'");
      std::string parent_name = trim(text.substr(0, arrow));
      std::string child_part = trim(text.substr(arrow + 2));
      std::optional<std::string> level;
      if (!child_part.empty() && child_part.back() == ']') {
        size_t open = child_part.rfind('[');
        if (open == std::string::npos)
          fail(ErrorKind::ParseError, "line " + std::to_string(line.number) +
                                          ": unmatched ']' in level tag");
        level = trim(child_part.substr(open + 1,
                                       child_part.size() - open - 2));
        child_part = trim(child_part.substr(0, open));
      }
      if (parent_name.empty() || child_part.empty())
        fail(ErrorKind::ParseError, "line " + std::to_string(line.number) +
                                        ": missing parent or child name");

      int parent = t.by_name_.count(parent_name)
                       ? t.by_name_[parent_name]
                       : add_node(parent_name, std::nullopt);
      int child = t.by_name_.count(child_part)
                      ? t.by_name_[child_part]
                      : add_node(child_part, std::nullopt);
      if (parent == child)
        fail(ErrorKind::CycleDetected, "self edge on '" + parent_name + "'");
      if (!seen_edges.emplace(parent, child).second)
        fail(ErrorKind::ParseError, "line " + std::to_string(line.number) +
                                        ": duplicate edge '" + parent_name +
                                        " -> " + child_part + "'");
      if (t.nodes_[child].parent) {
        if (*t.nodes_[child].parent != parent)
          fail(ErrorKind::MultiParent,
               "node '" + child_part + "' has parents '" +
                   t.nodes_[*t.nodes_[child].parent].name + "' and '" +
                   parent_name + "' (a tree is required)");
      }
      t.nodes_[child].parent = parent;
      t.nodes_[parent].children.push_back(child);
      if (level) {
        if (t.nodes_[child].level && *t.nodes_[child].level != *level)
          fail(ErrorKind::ParseError, "line " + std::to_string(line.number) +
                                          ": conflicting level tags for '" +
                                          child_part + "'");
        t.nodes_[child].level = level;
      }
    }

    std::vector<std::string> roots;
    for (const TaxNode& n : t.nodes_)
      if (!n.parent) roots.push_back(n.name);
    if (roots.empty()) {
      // Every node has a parent, so following parent pointers must loop.
      std::vector<int> state(t.nodes_.size(), 0);
      int cur = 0;
      while (state[cur] == 0) {
        state[cur] = 1;
        cur = *t.nodes_[cur].parent;
      }
      std::vector<std::string> cycle;
      int walk = cur;
      do {
        cycle.push_back(t.nodes_[walk].name);
        walk = *t.nodes_[walk].parent;
      } while (walk != cur);
      std::sort(cycle.begin(), cycle.end());
      fail(ErrorKind::CycleDetected, "cycle through nodes: " + join(cycle));
    }
    if (roots.size() > 1)
      fail(ErrorKind::MultipleRoots, join(roots));
    t.root_id_ = t.node_id(roots[0]);
  }

  if (t.root_id_ < 0)
    fail(ErrorKind::InternalError, "parse produced no root");
  t.finalize();
  return t;
}

void Taxonomy::finalize() {
  const size_t n = nodes_.size();

  // Reachability from the root. With single-parent nodes, anything
  // unreachable must sit on (or under) a parent-pointer cycle.
  std::vector<char> reachable(n, 0);
  std::vector<int> order;  // pre-order; reversed it is a valid post-order
  order.reserve(n);
  std::vector<int> stack = {root_id_};
  reachable[root_id_] = 1;
  while (!stack.empty()) {
    int cur = stack.back();
    stack.pop_back();
    order.push_back(cur);
    for (int c : nodes_[cur].children) {
      if (reachable[c])
        fail(ErrorKind::CycleDetected, "node '" + nodes_[c].name +
                                           "' is reached twice from the root");
      reachable[c] = 1;
      nodes_[c].depth = nodes_[cur].depth + 1;
      stack.push_back(c);
    }
  }
  if (order.size() != n) {
    std::vector<int> state(n, 0);
    int start = -1;
    for (size_t i = 0; i < n; ++i)
      if (!reachable[i]) {
        start = static_cast<int>(i);
        break;
      }
    int cur = start;
    while (state[cur] == 0) {
      state[cur] = 1;
      cur = *nodes_[cur].parent;
    }
    std::vector<std::string> cycle;
    int walk = cur;
    do {
      cycle.push_back(nodes_[walk].name);
      walk = *nodes_[walk].parent;
    } while (walk != cur);
    std::sort(cycle.begin(), cycle.end());
    fail(ErrorKind::CycleDetected, "cycle through nodes: " + join(cycle));
  }

  // Heights bottom-up.
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TaxNode& node = nodes_[*it];
    node.height = 0;
    for (int c : node.children)
      node.height = std::max(node.height, nodes_[c].height + 1);
  }
  max_height_ = nodes_[root_id_].height;

  // Leaves in first-appearance (id) order.
  leaf_ids_.clear();
  for (const TaxNode& node : nodes_)
    if (node.children.empty()) leaf_ids_.push_back(node.id);

  // Level tags must not repeat along a root-to-leaf path, and the four
  // known tags must appear coarse-to-fine.
  for (const TaxNode& node : nodes_) {
    if (!node.level) continue;
    int rank = rank_of_known_level(*node.level);
    std::optional<int> cur = node.parent;
    while (cur) {
      const TaxNode& anc = nodes_[*cur];
      if (anc.level) {
        if (*anc.level == *node.level)
          fail(ErrorKind::ParseError,
               "level tag '" + *node.level + "' repeats along the path of '" +
                   node.name + "' (also on '" + anc.name + "')");
        int anc_rank = rank_of_known_level(*anc.level);
        if (rank >= 0 && anc_rank >= 0 && anc_rank >= rank)
          fail(ErrorKind::ParseError,
               "level tag '" + *anc.level + "' on '" + anc.name +
                   "' must not appear above '" + *node.level + "' on '" +
                   node.name + "'");
      }
      cur = anc.parent;
    }
  }
}

int Taxonomy::lowest_common_subsumer(int u, int v) const {
  node(u);
  node(v);
  while (nodes_[u].depth > nodes_[v].depth) u = *nodes_[u].parent;
  while (nodes_[v].depth > nodes_[u].depth) v = *nodes_[v].parent;
  while (u != v) {
    u = *nodes_[u].parent;
    v = *nodes_[v].parent;
  }
  return u;
}

double Taxonomy::class_dissimilarity(int u, int v) const {
  if (max_height_ == 0)
    fail(ErrorKind::DegenerateTree,
         "single-node taxonomy has no defined similarity");
  return static_cast<double>(nodes_[lowest_common_subsumer(u, v)].height) /
         static_cast<double>(max_height_);
}

double Taxonomy::class_similarity(int u, int v) const {
  return 1.0 - class_dissimilarity(u, v);
}

Eigen::MatrixXd Taxonomy::similarity_matrix() const {
  if (max_height_ == 0)
    fail(ErrorKind::DegenerateTree,
         "single-node taxonomy has no defined similarity");
  const int n = static_cast<int>(leaf_ids_.size());
  Eigen::MatrixXd s(n, n);
  for (int i = 0; i < n; ++i) {
    s(i, i) = 1.0;
    for (int j = 0; j < i; ++j) {
      double value = class_similarity(leaf_ids_[i], leaf_ids_[j]);
      s(i, j) = value;
      s(j, i) = value;
    }
  }
  return s;
}

int Taxonomy::project_to_level(int leaf, std::string_view level) const {
  const TaxNode& start = node(leaf);
  if (!start.children.empty())
    fail(ErrorKind::NotALeaf, "'" + start.name + "' is not a leaf");
  std::optional<int> cur = leaf;
  while (cur) {
    const TaxNode& n = nodes_[*cur];
    if (n.level && *n.level == level) return n.id;
    cur = n.parent;
  }
  fail(ErrorKind::LevelNotOnPath, "no ancestor of '" + start.name +
                                      "' carries level '" +
                                      std::string(level) + "'");
}

std::vector<std::string> Taxonomy::level_tags() const {
  std::map<int, std::string> by_depth;  // first depth seen per tag
  std::set<std::string> seen;
  for (const TaxNode& node : nodes_) {
    if (!node.level || seen.count(*node.level)) continue;
    seen.insert(*node.level);
    by_depth.emplace(node.depth, *node.level);
  }
  std::vector<std::string> out;
  for (auto& [depth, tag] : by_depth) out.push_back(tag);
  return out;
}

std::vector<std::string> Taxonomy::levels_on_all_leaf_paths() const {
  std::vector<std::string> out;
  for (const std::string& tag : level_tags()) {
    bool everywhere = true;
    for (int leaf : leaf_ids_) {
      std::optional<int> cur = leaf;
      bool found = false;
      while (cur && !found) {
        if (nodes_[*cur].level == tag) found = true;
        cur = nodes_[*cur].parent;
      }
      if (!found) {
        everywhere = false;
        break;
      }
    }
    if (everywhere) out.push_back(tag);
  }
  return out;
}

int Taxonomy::lowest_common_subsumer(std::string_view u,
                                     std::string_view v) const {
  return lowest_common_subsumer(node_id(u), node_id(v));
}

double Taxonomy::class_similarity(std::string_view u,
                                  std::string_view v) const {
  return class_similarity(node_id(u), node_id(v));
}

}  // namespace hiersearch
