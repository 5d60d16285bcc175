#ifndef HEADFILT_CHAR_TREE_H_
#define HEADFILT_CHAR_TREE_H_

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace headfilt {

// Ideographic Description Characters U+2FF0..U+2FFB.
constexpr char32_t kIdcFirst = 0x2FF0;
constexpr char32_t kIdcLast = 0x2FFB;
constexpr char32_t kIdcLeftToRight = 0x2FF0;          // ⿰
constexpr char32_t kIdcAboveToBelow = 0x2FF1;         // ⿱
constexpr char32_t kIdcLeftMiddleRight = 0x2FF2;      // ⿲
constexpr char32_t kIdcAboveMiddleBelow = 0x2FF3;     // ⿳

constexpr int kDefaultMaxDepth = 16;

inline bool is_idc(char32_t cp) { return cp >= kIdcFirst && cp <= kIdcLast; }

// Number of operands an IDC takes.
int idc_arity(char32_t op);

// The binary operator a ternary IDC is re-labelled with after binarization.
char32_t binarized_op(char32_t op);

// Immutable binary tree of sub-character components (leaves) and layout
// operators (internal nodes). Subtrees are shared, so copies are cheap.
class CharTree {
 public:
  static CharTree leaf(char32_t component);
  static CharTree node(char32_t op, CharTree left, CharTree right);

  bool is_leaf() const { return node_->op == 0; }
  char32_t component() const { return node_->component; }
  char32_t op() const { return node_->op; }
  CharTree left() const { return CharTree(node_->left); }
  CharTree right() const { return CharTree(node_->right); }

  // Height; a single leaf has depth 1.
  int depth() const { return node_->depth; }
  int leaf_count() const { return node_->leaves; }
  int node_count() const;

  // Binarized IDS in prefix notation; parse_ids(to_ids()) == *this.
  std::u32string to_ids() const;
  std::string to_ids_utf8() const;

  bool operator==(const CharTree& other) const;
  bool operator!=(const CharTree& other) const { return !(*this == other); }

 private:
  struct Node {
    char32_t component = 0;
    char32_t op = 0;
    int depth = 1;
    int leaves = 1;
    std::shared_ptr<const Node> left, right;
  };
  explicit CharTree(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  std::shared_ptr<const Node> node_;
};

// Parses a prefix-notation IDS. Ternary operators are binarized
// left-associatively (⿲ABC -> ⿰(⿰(A,B),C)). Errors: kEmptyInput,
// kMissingOperand, kTrailingInput, kDepthExceeded.
CharTree parse_ids(std::u32string_view ids, int max_depth = kDefaultMaxDepth);
CharTree parse_ids(std::string_view ids_utf8, int max_depth = kDefaultMaxDepth);

struct IdsLoadIssue {
  size_t line = 0;
  std::string message;
};

struct IdsLoadOptions {
  int max_depth = kDefaultMaxDepth;
  // Replace leaves that have their own database entry by that entry's tree,
  // one level deep.
  bool expand_one_level = false;
};

// Character -> tree map plus the component and operator inventories of all
// trees in it. Immutable once built.
class TreeRegistry {
 public:
  TreeRegistry() = default;

  // Inserts or replaces a tree; inventories are kept in sync.
  void insert(char32_t ch, CharTree tree);

  bool contains(char32_t ch) const { return trees_.count(ch) != 0; }

  // The tree for ch, or a single-leaf tree of ch when absent.
  CharTree tree_for(char32_t ch) const;

  // Adds single-leaf entries for every character of chars not yet present.
  void cover(const std::u32string& chars);

  const std::map<char32_t, CharTree>& trees() const { return trees_; }
  const std::set<char32_t>& components() const { return components_; }
  const std::set<char32_t>& operators() const { return operators_; }
  size_t size() const { return trees_.size(); }

  const std::vector<IdsLoadIssue>& issues() const { return issues_; }
  void add_issue(IdsLoadIssue issue) { issues_.push_back(std::move(issue)); }

 private:
  void collect(const CharTree& tree);

  std::map<char32_t, CharTree> trees_;
  std::set<char32_t> components_;
  std::set<char32_t> operators_;
  std::vector<IdsLoadIssue> issues_;
};

// Reads an IDS database: `U+XXXX<TAB>char<TAB>IDS` per line, `#` comments.
// Malformed or unparsable lines are recorded in issues() and the character
// (when known) falls back to a single leaf. Throws kIoError when the file
// cannot be read, kEmptyDatabase when it has no records, and kMalformedLine
// when every record failed.
TreeRegistry load_ids_db(const std::string& path, const IdsLoadOptions& options = {});
TreeRegistry parse_ids_db(std::string_view contents, const IdsLoadOptions& options = {});

}  // namespace headfilt

#endif  // HEADFILT_CHAR_TREE_H_
