#pragma once

// Constituency trees rebuilt from the per-token parse-bit column, plus the
// noun-phrase head rules used by mention detection.

#include <cctype>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "coref/corpus.hpp"

namespace coref {

class TreeError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TreeNode {
  std::string label;  // constituent label, or POS tag for leaves
  int parent = -1;
  std::vector<int> children;
  int first_token = -1;
  int last_token = -1;
  int leaf_token = -1;
  bool is_leaf() const { return leaf_token >= 0; }
};

struct SentenceTree {
  std::vector<TreeNode> nodes;  // preorder
  std::vector<int> roots;
};

// NP-SBJ-1 -> NP; leading '-' labels (traces) are kept whole.
inline std::string strip_function_tags(std::string_view raw) {
  if (raw.size() <= 1) return std::string(raw);
  auto cut = raw.find_first_of("-=", 1);
  return std::string(raw.substr(0, cut));
}

// A fragment of "-" counts as a bare leaf (no parse information for the
// token); anything else must be balanced bracket text with '*' at the leaf.
inline SentenceTree build_tree(const Sentence& sent) {
  SentenceTree tree;
  std::vector<int> stack;
  auto add_node = [&](TreeNode&& node) {
    int idx = static_cast<int>(tree.nodes.size());
    node.parent = stack.empty() ? -1 : stack.back();
    if (node.parent >= 0)
      tree.nodes[node.parent].children.push_back(idx);
    else
      tree.roots.push_back(idx);
    tree.nodes.push_back(std::move(node));
    return idx;
  };

  for (std::size_t t = 0; t < sent.tokens.size(); ++t) {
    const std::string& frag = sent.tokens[t].parse_fragment;
    if (frag == "-") {
      add_node(TreeNode{sent.tokens[t].pos, -1, {}, static_cast<int>(t),
                        static_cast<int>(t), static_cast<int>(t)});
      continue;
    }
    std::size_t i = 0;
    while (i < frag.size()) {
      char c = frag[i];
      if (c == '(') {
        std::size_t j = i + 1;
        while (j < frag.size() && frag[j] != '(' && frag[j] != ')' && frag[j] != '*') ++j;
        std::string label = strip_function_tags(std::string_view(frag).substr(i + 1, j - i - 1));
        if (label.empty())
          throw TreeError("empty constituent label in fragment '" + frag + "'");
        int idx = add_node(TreeNode{std::move(label), -1, {}, -1, -1, -1});
        stack.push_back(idx);
        i = j;
      } else if (c == '*') {
        add_node(TreeNode{sent.tokens[t].pos, -1, {}, static_cast<int>(t),
                          static_cast<int>(t), static_cast<int>(t)});
        ++i;
      } else if (c == ')') {
        if (stack.empty())
          throw TreeError("unbalanced ')' in sentence " + std::to_string(sent.index));
        stack.pop_back();
        ++i;
      } else {
        throw TreeError("unexpected character '" + std::string(1, c) + "' in parse fragment");
      }
    }
  }
  if (!stack.empty())
    throw TreeError("unbalanced '(' in sentence " + std::to_string(sent.index));

  // Token spans, bottom-up (children always follow their parent in preorder).
  for (int idx = static_cast<int>(tree.nodes.size()) - 1; idx >= 0; --idx) {
    TreeNode& n = tree.nodes[idx];
    if (n.is_leaf()) continue;
    for (int c : n.children) {
      const TreeNode& ch = tree.nodes[c];
      if (ch.first_token < 0) continue;
      if (n.first_token < 0 || ch.first_token < n.first_token) n.first_token = ch.first_token;
      if (ch.last_token > n.last_token) n.last_token = ch.last_token;
    }
  }
  return tree;
}

namespace detail {

template <std::size_t N>
bool label_in(const std::string& label, const char* const (&set)[N]) {
  for (const char* s : set)
    if (label == s) return true;
  return false;
}

}  // namespace detail

// Collins-style NP head child selection; rightmost noun-like child wins,
// falling back through the standard priority list to the last child.
inline int np_head_child(const SentenceTree& tree, const TreeNode& node) {
  static constexpr const char* nounish[] = {"NN", "NNS", "NNP", "NNPS", "NX", "POS", "JJR"};
  static constexpr const char* phrasal[] = {"NP", "NML"};
  static constexpr const char* adjish[] = {"$", "ADJP", "PRN"};
  static constexpr const char* cardinal[] = {"CD"};
  static constexpr const char* modish[] = {"JJ", "JJS", "RB", "QP"};

  const auto& kids = node.children;
  if (kids.empty()) return -1;
  if (tree.nodes[kids.back()].label == "POS") return kids.back();
  for (auto it = kids.rbegin(); it != kids.rend(); ++it)
    if (detail::label_in(tree.nodes[*it].label, nounish)) return *it;
  for (int c : kids)
    if (detail::label_in(tree.nodes[c].label, phrasal)) return c;
  for (auto it = kids.rbegin(); it != kids.rend(); ++it)
    if (detail::label_in(tree.nodes[*it].label, adjish)) return *it;
  for (auto it = kids.rbegin(); it != kids.rend(); ++it)
    if (detail::label_in(tree.nodes[*it].label, cardinal)) return *it;
  for (auto it = kids.rbegin(); it != kids.rend(); ++it)
    if (detail::label_in(tree.nodes[*it].label, modish)) return *it;
  return kids.back();
}

inline int head_token_of_node(const SentenceTree& tree, int node_idx) {
  int idx = node_idx;
  while (!tree.nodes[idx].is_leaf()) {
    int child = np_head_child(tree, tree.nodes[idx]);
    if (child < 0) return tree.nodes[idx].last_token;  // childless constituent
    idx = child;
  }
  return tree.nodes[idx].leaf_token;
}

// Head for a bare token range with no covering constituent: rightmost
// noun-tagged token, else the last token.
inline int head_token_of_span(const Sentence& sent, int start, int end) {
  for (int t = end; t >= start; --t)
    if (sent.tokens[t].pos.rfind("NN", 0) == 0) return t;
  return end;
}

}  // namespace coref
