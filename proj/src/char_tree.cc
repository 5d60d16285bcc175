#include "headfilt/char_tree.h"

#include <fstream>
#include <sstream>

#include "headfilt/error.h"
#include "headfilt/utf8.h"

namespace headfilt {

int idc_arity(char32_t op) {
  if (op == kIdcLeftMiddleRight || op == kIdcAboveMiddleBelow) return 3;
  return 2;
}

char32_t binarized_op(char32_t op) {
  if (op == kIdcLeftMiddleRight) return kIdcLeftToRight;
  if (op == kIdcAboveMiddleBelow) return kIdcAboveToBelow;
  return op;
}

CharTree CharTree::leaf(char32_t component) {
  auto n = std::make_shared<Node>();
  n->component = component;
  return CharTree(std::move(n));
}

CharTree CharTree::node(char32_t op, CharTree left, CharTree right) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->depth = 1 + std::max(left.depth(), right.depth());
  n->leaves = left.leaf_count() + right.leaf_count();
  n->left = std::move(left.node_);
  n->right = std::move(right.node_);
  return CharTree(std::move(n));
}

int CharTree::node_count() const {
  if (is_leaf()) return 1;
  return 1 + left().node_count() + right().node_count();
}

std::u32string CharTree::to_ids() const {
  if (is_leaf()) return std::u32string(1, component());
  std::u32string out(1, op());
  out += left().to_ids();
  out += right().to_ids();
  return out;
}

std::string CharTree::to_ids_utf8() const { return utf8_encode(to_ids()); }

bool CharTree::operator==(const CharTree& other) const {
  if (node_ == other.node_) return true;
  if (is_leaf() != other.is_leaf()) return false;
  if (is_leaf()) return component() == other.component();
  return op() == other.op() && depth() == other.depth() &&
         left() == other.left() && right() == other.right();
}

namespace {

class IdsParser {
 public:
  IdsParser(std::u32string_view ids, int max_depth)
      : ids_(ids), max_depth_(max_depth) {}

  CharTree parse() {
    if (ids_.empty()) throw Error(ErrorCode::kEmptyInput, "empty IDS");
    CharTree root = parse_node(1);
    if (pos_ != ids_.size()) {
      throw Error(ErrorCode::kTrailingInput,
                  "unconsumed input after position " + std::to_string(pos_) +
                      " in \"" + utf8_encode(ids_) + "\"");
    }
    return root;
  }

 private:
  CharTree parse_node(int nesting) {
    if (nesting > max_depth_) {
      throw Error(ErrorCode::kDepthExceeded,
                  "IDS nests deeper than " + std::to_string(max_depth_));
    }
    if (pos_ >= ids_.size()) {
      throw Error(ErrorCode::kMissingOperand,
                  "input ends before operator arity is satisfied in \"" +
                      utf8_encode(ids_) + "\"");
    }
    char32_t cp = ids_[pos_++];
    if (!is_idc(cp)) return CharTree::leaf(cp);

    const char32_t op = binarized_op(cp);
    CharTree acc = parse_node(nesting + 1);
    for (int k = 1; k < idc_arity(cp); ++k) {
      CharTree next = parse_node(nesting + 1);
      acc = CharTree::node(op, std::move(acc), std::move(next));
      if (acc.depth() > max_depth_) {
        throw Error(ErrorCode::kDepthExceeded,
                    "binarized tree deeper than " + std::to_string(max_depth_));
      }
    }
    return acc;
  }

  std::u32string_view ids_;
  int max_depth_;
  size_t pos_ = 0;
};

// Drops a trailing region tag such as "[GTJ]" used by public databases.
std::string_view strip_region_tag(std::string_view ids) {
  if (!ids.empty() && ids.back() == ']') {
    auto open = ids.rfind('[');
    if (open != std::string_view::npos) ids = ids.substr(0, open);
  }
  return ids;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

bool parse_codepoint_label(std::string_view label, char32_t* out) {
  if (label.size() < 3 || label.substr(0, 2) != "U+") return false;
  unsigned long value = 0;
  for (char c : label.substr(2)) {
    int digit;
    if (c >= '0' && c <= '9') digit = c - '0';
    else if (c >= 'A' && c <= 'F') digit = c - 'A' + 10;
    else if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
    else return false;
    value = value * 16 + digit;
    if (value > 0x10FFFF) return false;
  }
  *out = static_cast<char32_t>(value);
  return true;
}

CharTree expand_leaves(const CharTree& tree,
                       const std::map<char32_t, CharTree>& db) {
  if (tree.is_leaf()) {
    auto it = db.find(tree.component());
    if (it != db.end() && !it->second.is_leaf()) return it->second;
    return tree;
  }
  return CharTree::node(tree.op(), expand_leaves(tree.left(), db),
                        expand_leaves(tree.right(), db));
}

}  // namespace

CharTree parse_ids(std::u32string_view ids, int max_depth) {
  return IdsParser(ids, max_depth).parse();
}

CharTree parse_ids(std::string_view ids_utf8, int max_depth) {
  return parse_ids(utf8_decode(ids_utf8), max_depth);
}

void TreeRegistry::insert(char32_t ch, CharTree tree) {
  auto [it, inserted] = trees_.insert_or_assign(ch, std::move(tree));
  if (inserted) {
    collect(it->second);
    return;
  }
  components_.clear();
  operators_.clear();
  for (const auto& [c, t] : trees_) collect(t);
}

CharTree TreeRegistry::tree_for(char32_t ch) const {
  auto it = trees_.find(ch);
  return it == trees_.end() ? CharTree::leaf(ch) : it->second;
}

void TreeRegistry::cover(const std::u32string& chars) {
  for (char32_t ch : chars) {
    if (!contains(ch)) insert(ch, CharTree::leaf(ch));
  }
}

void TreeRegistry::collect(const CharTree& tree) {
  if (tree.is_leaf()) {
    components_.insert(tree.component());
    return;
  }
  operators_.insert(tree.op());
  collect(tree.left());
  collect(tree.right());
}

TreeRegistry parse_ids_db(std::string_view contents, const IdsLoadOptions& options) {
  TreeRegistry registry;
  size_t records = 0, failed = 0, line_no = 0;
  size_t start = 0;
  while (start < contents.size()) {
    auto end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    // UTF-8 byte order mark on the first line.
    if (line_no == 1 && line.substr(0, 3) == "\xEF\xBB\xBF") line.remove_prefix(3);

    ++records;
    auto fields = split_tabs(line);
    if (fields.size() < 3) {
      ++failed;
      registry.add_issue({line_no, "MalformedLine: expected 3 tab-separated fields, got " +
                                       std::to_string(fields.size())});
      continue;
    }
    char32_t labelled = 0;
    std::u32string ch;
    try {
      ch = utf8_decode(fields[1]);
    } catch (const Error& e) {
      ++failed;
      registry.add_issue({line_no, e.what()});
      continue;
    }
    if (ch.size() != 1 || !parse_codepoint_label(fields[0], &labelled) ||
        labelled != ch[0]) {
      ++failed;
      registry.add_issue({line_no, "MalformedLine: code point label and character disagree"});
      continue;
    }
    try {
      registry.insert(ch[0], parse_ids(strip_region_tag(fields[2]), options.max_depth));
    } catch (const Error& e) {
      ++failed;
      registry.add_issue({line_no, e.what()});
      registry.insert(ch[0], CharTree::leaf(ch[0]));
    }
  }
  if (records == 0) throw Error(ErrorCode::kEmptyDatabase, "IDS database has no records");
  if (failed == records) {
    throw Error(ErrorCode::kMalformedLine,
                "all " + std::to_string(records) + " IDS records failed to parse");
  }

  if (options.expand_one_level) {
    const auto original = registry.trees();
    for (const auto& [ch, tree] : original) {
      CharTree expanded = expand_leaves(tree, original);
      if (expanded.depth() > options.max_depth) {
        registry.add_issue({0, "DepthExceeded: expansion of " + codepoint_label(ch) +
                                   " skipped"});
        continue;
      }
      if (expanded != tree) registry.insert(ch, expanded);
    }
  }
  return registry;
}

TreeRegistry load_ids_db(const std::string& path, const IdsLoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open IDS database " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_ids_db(buf.str(), options);
}

}  // namespace headfilt
