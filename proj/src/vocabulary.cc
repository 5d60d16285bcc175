#include "headfilt/vocabulary.h"

#include <algorithm>

#include "headfilt/error.h"
#include "headfilt/utf8.h"

namespace headfilt {

Vocabulary::Vocabulary(std::vector<char32_t> chars) : chars_(std::move(chars)) {
  index_.reserve(chars_.size());
  for (size_t i = 0; i < chars_.size(); ++i) {
    if (!index_.emplace(chars_[i], i).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate vocabulary character " + codepoint_label(chars_[i]));
    }
  }
}

Vocabulary Vocabulary::from_chars(const std::u32string& chars) {
  std::vector<char32_t> sorted(chars.begin(), chars.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  return Vocabulary(std::move(sorted));
}

std::optional<size_t> Vocabulary::find(char32_t ch) const {
  auto it = index_.find(ch);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

size_t Vocabulary::index(char32_t ch) const {
  auto it = index_.find(ch);
  if (it == index_.end()) {
    throw Error(ErrorCode::kUnknownCharacter,
                codepoint_label(ch) + " (" + utf8_encode(ch) + ") is not in the vocabulary");
  }
  return it->second;
}

uint64_t Vocabulary::hash() const {
  uint64_t h = 0xcbf29ce484222325ull;
  for (char32_t ch : chars_) {
    for (int shift = 0; shift < 32; shift += 8) {
      h ^= (ch >> shift) & 0xFF;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

}  // namespace headfilt
