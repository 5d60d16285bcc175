#ifndef HEADFILT_CORPUS_H_
#define HEADFILT_CORPUS_H_

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "headfilt/error.h"

namespace headfilt {

struct GoldEdit {
  size_t position = 0;  // 1-based
  char32_t wrong = 0;
  char32_t correct = 0;

  bool operator==(const GoldEdit&) const = default;
};

struct CorpusSentence {
  std::string id;
  std::u32string text;
  std::vector<GoldEdit> edits;

  // text with every gold edit applied.
  std::u32string corrected() const;
  bool operator==(const CorpusSentence&) const = default;
};

struct CorpusIssue {
  size_t line = 0;
  ErrorCode code = ErrorCode::kFormatError;
  std::string message;
};

// Canonical corpus: one `id<TAB>text<TAB>pos,correct;pos,correct` per line,
// positions 1-based, third field empty for error-free sentences. Invalid
// records are skipped and reported in `issues`.
struct LabeledCorpus {
  std::vector<CorpusSentence> sentences;
  std::vector<CorpusIssue> issues;
};

LabeledCorpus parse_corpus(std::string_view contents);
// Throws kIoError when unreadable.
LabeledCorpus load_corpus(const std::string& path);

std::string format_corpus(const LabeledCorpus& corpus);
void save_corpus(const LabeledCorpus& corpus, const std::string& path);

// Unordered character pair, stored with first <= second.
using CharPair = std::pair<char32_t, char32_t>;
inline CharPair make_unordered(char32_t a, char32_t b) {
  return a <= b ? CharPair{a, b} : CharPair{b, a};
}

// Unique unordered (wrong, correct) pairs with occurrence counts.
std::map<CharPair, size_t> extract_error_pairs(const LabeledCorpus& corpus);

// Reads a whole file; throws kIoError.
std::string read_file(const std::string& path);

}  // namespace headfilt

#endif  // HEADFILT_CORPUS_H_
