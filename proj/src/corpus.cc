#include "headfilt/corpus.h"

#include <fstream>
#include <sstream>

#include "headfilt/utf8.h"

namespace headfilt {

std::u32string CorpusSentence::corrected() const {
  std::u32string out = text;
  for (const auto& e : edits) out[e.position - 1] = e.correct;
  return out;
}

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

bool parse_size(std::string_view s, size_t* out) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty() || s.size() > 18) return false;
  size_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  *out = v;
  return true;
}

}  // namespace

LabeledCorpus parse_corpus(std::string_view contents) {
  LabeledCorpus corpus;
  size_t line_no = 0, start = 0;
  while (start < contents.size()) {
    auto end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1 && line.substr(0, 3) == "\xEF\xBB\xBF") line.remove_prefix(3);
    if (line.empty() || line.front() == '#') continue;

    auto issue = [&](ErrorCode code, std::string msg) {
      corpus.issues.push_back({line_no, code, std::move(msg)});
    };
    auto fields = split(line, '\t');
    if (fields.size() == 2) fields.emplace_back();
    if (fields.size() != 3 || fields[0].empty()) {
      issue(ErrorCode::kFormatError, "expected id<TAB>text<TAB>edits");
      continue;
    }
    CorpusSentence sentence;
    sentence.id = std::string(fields[0]);
    try {
      sentence.text = utf8_decode(fields[1]);
    } catch (const Error& e) {
      issue(ErrorCode::kFormatError, e.what());
      continue;
    }
    if (sentence.text.empty()) {
      issue(ErrorCode::kFormatError, "empty sentence text");
      continue;
    }
    bool ok = true;
    if (!fields[2].empty()) {
      for (std::string_view group : split(fields[2], ';')) {
        if (group.empty()) continue;
        auto parts = split(group, ',');
        size_t pos = 0;
        std::u32string correct;
        if (parts.size() != 2 || !parse_size(parts[0], &pos)) {
          issue(ErrorCode::kFormatError, "malformed edit `" + std::string(group) + "`");
          ok = false;
          break;
        }
        try {
          correct = utf8_decode(parts[1]);
        } catch (const Error& e) {
          issue(ErrorCode::kFormatError, e.what());
          ok = false;
          break;
        }
        if (correct.size() != 1) {
          issue(ErrorCode::kFormatError, "edit correction must be one character");
          ok = false;
          break;
        }
        if (pos == 0 || pos > sentence.text.size()) {
          issue(ErrorCode::kPositionOutOfRange,
                "edit position " + std::to_string(pos) + " outside 1.." +
                    std::to_string(sentence.text.size()));
          ok = false;
          break;
        }
        const char32_t wrong = sentence.text[pos - 1];
        if (wrong == correct[0]) {
          issue(ErrorCode::kFormatError,
                "edit at position " + std::to_string(pos) + " does not change the character");
          ok = false;
          break;
        }
        sentence.edits.push_back({pos, wrong, correct[0]});
      }
    }
    if (ok) corpus.sentences.push_back(std::move(sentence));
  }
  return corpus;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

LabeledCorpus load_corpus(const std::string& path) { return parse_corpus(read_file(path)); }

std::string format_corpus(const LabeledCorpus& corpus) {
  std::string out;
  for (const auto& s : corpus.sentences) {
    out += s.id;
    out += '\t';
    out += utf8_encode(s.text);
    out += '\t';
    for (size_t k = 0; k < s.edits.size(); ++k) {
      if (k > 0) out += ';';
      out += std::to_string(s.edits[k].position);
      out += ',';
      out += utf8_encode(s.edits[k].correct);
    }
    out += '\n';
  }
  return out;
}

void save_corpus(const LabeledCorpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out << format_corpus(corpus);
}

std::map<CharPair, size_t> extract_error_pairs(const LabeledCorpus& corpus) {
  std::map<CharPair, size_t> counts;
  for (const auto& s : corpus.sentences) {
    for (const auto& e : s.edits) ++counts[make_unordered(e.wrong, e.correct)];
  }
  return counts;
}

}  // namespace headfilt
