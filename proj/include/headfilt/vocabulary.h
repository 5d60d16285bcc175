#ifndef HEADFILT_VOCABULARY_H_
#define HEADFILT_VOCABULARY_H_

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace headfilt {

// Ordered list of distinct characters c_1..c_N with an index map.
class Vocabulary {
 public:
  Vocabulary() = default;
  // Throws kInvalidArgument on duplicates.
  explicit Vocabulary(std::vector<char32_t> chars);

  // Sorted by code point, duplicates dropped.
  static Vocabulary from_chars(const std::u32string& chars);

  size_t size() const { return chars_.size(); }
  bool empty() const { return chars_.empty(); }
  char32_t at(size_t index) const { return chars_.at(index); }
  const std::vector<char32_t>& chars() const { return chars_; }

  bool contains(char32_t ch) const { return index_.count(ch) != 0; }
  std::optional<size_t> find(char32_t ch) const;
  // Throws kUnknownCharacter.
  size_t index(char32_t ch) const;

  // FNV-1a over the code points in order.
  uint64_t hash() const;

  bool operator==(const Vocabulary& other) const { return chars_ == other.chars_; }

 private:
  std::vector<char32_t> chars_;
  std::unordered_map<char32_t, size_t> index_;
};

}  // namespace headfilt

#endif  // HEADFILT_VOCABULARY_H_
