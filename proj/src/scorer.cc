#include "headfilt/scorer.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "headfilt/corpus.h"
#include "headfilt/error.h"
#include "headfilt/utf8.h"

namespace headfilt {

void check_distribution(const CandidateDistribution& dist, double tol) {
  double sum = 0.0;
  for (double v : dist.values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument, "distribution has a negative or non-finite entry");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > tol) {
    throw Error(ErrorCode::kInvalidArgument, "distribution sums to " + std::to_string(sum));
  }
}

namespace {

void normalize_or_uniform(std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    std::fill(values.begin(), values.end(), 1.0 / static_cast<double>(values.size()));
    return;
  }
  for (double& v : values) v /= sum;
}

}  // namespace

NgramModel::NgramModel(Vocabulary vocab, int order, double discount, std::vector<Table> tables)
    : vocab_(std::move(vocab)), order_(order), discount_(discount), tables_(std::move(tables)) {
  if (order_ < 1 || static_cast<int>(tables_.size()) != order_) {
    throw Error(ErrorCode::kInvalidArgument, "n-gram order and tables disagree");
  }
  if (!(discount_ > 0.0 && discount_ < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "discount must lie in (0, 1)");
  }
}

int NgramModel::token(char32_t ch) const {
  auto idx = vocab_.find(ch);
  return idx ? static_cast<int>(*idx) : unk_id();
}

NgramModel NgramModel::train(const std::vector<std::u32string>& sentences, int order,
                             const Vocabulary& vocab, double discount) {
  if (order < 1) throw Error(ErrorCode::kInvalidArgument, "n-gram order must be >= 1");
  size_t tokens = 0;
  for (const auto& s : sentences) tokens += s.size();
  if (tokens == 0) throw Error(ErrorCode::kEmptyCorpus, "no characters to train the n-gram model on");

  NgramModel model(vocab, order, discount, std::vector<Table>(order));
  for (const auto& s : sentences) {
    std::vector<int> ids(order - 1, model.bos_id());
    for (char32_t ch : s) ids.push_back(model.token(ch));
    for (size_t j = order - 1; j < ids.size(); ++j) {
      for (int k = 1; k <= order; ++k) {
        std::vector<int> ctx(ids.begin() + (j - (k - 1)), ids.begin() + j);
        auto& stats = model.tables_[k - 1][ctx];
        ++stats.total;
        ++stats.next[ids[j]];
      }
    }
  }
  return model;
}

double NgramModel::prob_at(std::span<const int> context, int w, int level) const {
  if (level == 0) return 1.0 / static_cast<double>(event_count());
  const double lower = prob_at(context.subspan(context.size() > 0 ? 1 : 0), w, level - 1);
  // context here has exactly level-1 tokens.
  const auto& table = tables_[level - 1];
  auto it = table.find(std::vector<int>(context.begin(), context.end()));
  if (it == table.end() || it->second.total == 0) return lower;
  const ContextStats& stats = it->second;
  const double total = static_cast<double>(stats.total);
  double count = 0.0;
  if (auto c = stats.next.find(w); c != stats.next.end()) count = static_cast<double>(c->second);
  const double types = static_cast<double>(stats.next.size());
  return std::max(count - discount_, 0.0) / total + discount_ * types / total * lower;
}

double NgramModel::prob(std::span<const int> context, int w) const {
  const size_t keep = std::min<size_t>(context.size(), order_ - 1);
  auto ctx = context.subspan(context.size() - keep);
  return prob_at(ctx, w, static_cast<int>(keep) + 1);
}

CandidateDistribution NgramModel::score_position(const std::u32string& sentence, size_t i) const {
  if (i >= sentence.size()) {
    throw Error(ErrorCode::kPositionOutOfRange,
                "position " + std::to_string(i) + " outside sentence of length " +
                    std::to_string(sentence.size()));
  }
  const size_t pad = order_ - 1;
  std::vector<int> ids(pad, bos_id());
  for (char32_t ch : sentence) ids.push_back(token(ch));
  const size_t target = i + pad;
  const size_t last = std::min(target + pad, ids.size() - 1);

  CandidateDistribution dist{i, std::vector<double>(vocab_.size())};
  std::vector<double> logp(vocab_.size());
  double best = -std::numeric_limits<double>::infinity();
  for (size_t c = 0; c < vocab_.size(); ++c) {
    ids[target] = static_cast<int>(c);
    double lp = 0.0;
    for (size_t j = target; j <= last; ++j) {
      std::span<const int> ctx(ids.data() + (j - pad), pad);
      lp += std::log(prob(ctx, ids[j]));
    }
    logp[c] = lp;
    best = std::max(best, lp);
  }
  for (size_t c = 0; c < vocab_.size(); ++c) {
    dist.values[c] = std::isfinite(best) ? std::exp(logp[c] - best) : 0.0;
  }
  normalize_or_uniform(dist.values);
  return dist;
}

CandidateDistribution NgramScorer::score(const Sentence& sentence, size_t position) const {
  return model_->score_position(sentence.chars, position);
}

std::vector<ExternalSentence> parse_external(std::string_view contents, const Vocabulary& vocab,
                                             ExternalLoadReport* report) {
  using nlohmann::json;
  ExternalLoadReport local;
  ExternalLoadReport& rep = report != nullptr ? *report : local;
  std::vector<ExternalSentence> out;
  size_t line_no = 0, start = 0;
  while (start < contents.size()) {
    auto end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    auto fail = [&](const std::string& msg) -> Error {
      return Error(ErrorCode::kFormatError, "line " + std::to_string(line_no) + ": " + msg);
    };

    ExternalSentence sentence;
    try {
      const json obj = json::parse(line);
      if (!obj.is_object() || !obj.contains("id") || !obj.contains("text")) {
        throw fail("expected an object with \"id\", \"text\" and \"positions\"");
      }
      sentence.id = obj.at("id").is_string() ? obj.at("id").get<std::string>()
                                             : obj.at("id").dump();
      sentence.text = utf8_decode(obj.at("text").get<std::string>());
      if (sentence.text.empty()) throw fail("empty text");
      std::vector<bool> seen(sentence.text.size(), false);
      sentence.positions.resize(sentence.text.size());
      const json positions = obj.value("positions", json::object());
      if (!positions.is_object()) throw fail("\"positions\" must be an object");
      for (const auto& [key, entries] : positions.items()) {
        size_t pos = 0;
        try {
          size_t used = 0;
          pos = std::stoul(key, &used);
          if (used != key.size()) throw std::invalid_argument(key);
        } catch (const std::exception&) {
          throw fail("position key `" + key + "` is not an integer");
        }
        if (pos == 0 || pos > sentence.text.size()) {
          throw fail("position " + key + " outside 1.." + std::to_string(sentence.text.size()));
        }
        CandidateDistribution dist{pos - 1, std::vector<double>(vocab.size(), 0.0)};
        for (const auto& entry : entries) {
          if (!entry.is_array() || entry.size() != 2 || !entry[0].is_string() ||
              !entry[1].is_number()) {
            throw fail("entries must be [character, probability] pairs");
          }
          const std::u32string ch = utf8_decode(entry[0].get<std::string>());
          const double p = entry[1].get<double>();
          if (ch.size() != 1) throw fail("candidate must be a single character");
          if (!(p >= 0.0) || !std::isfinite(p)) throw fail("probabilities must be finite and >= 0");
          if (auto idx = vocab.find(ch[0])) {
            dist.values[*idx] += p;
          } else {
            ++rep.out_of_vocab_entries;
          }
        }
        normalize_or_uniform(dist.values);
        sentence.positions[pos - 1] = std::move(dist);
        seen[pos - 1] = true;
      }
      for (size_t i = 0; i < sentence.text.size(); ++i) {
        if (seen[i]) continue;
        ++rep.filled_positions;
        CandidateDistribution dist{i, std::vector<double>(vocab.size(), 0.0)};
        if (auto idx = vocab.find(sentence.text[i])) {
          dist.values[*idx] = 1.0;
        } else {
          normalize_or_uniform(dist.values);
        }
        sentence.positions[i] = std::move(dist);
      }
    } catch (const json::exception& e) {
      throw fail(e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kFormatError &&
          std::string(e.what()).find("line ") != std::string::npos) {
        throw;
      }
      throw fail(e.what());
    }
    out.push_back(std::move(sentence));
  }
  return out;
}

std::vector<ExternalSentence> load_external(const std::string& path, const Vocabulary& vocab,
                                            ExternalLoadReport* report) {
  return parse_external(read_file(path), vocab, report);
}

std::u32string external_characters(std::string_view contents) {
  std::u32string chars;
  size_t line_no = 0, start = 0;
  while (start < contents.size()) {
    auto end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const auto obj = nlohmann::json::parse(line);
      chars += utf8_decode(obj.at("text").get<std::string>());
      const auto positions = obj.value("positions", nlohmann::json::object());
      for (const auto& [key, entries] : positions.items()) {
        for (const auto& entry : entries) chars += utf8_decode(entry.at(0).get<std::string>());
      }
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kFormatError, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return chars;
}

ExternalScorer::ExternalScorer(Vocabulary vocab, std::vector<ExternalSentence> sentences)
    : vocab_(std::move(vocab)), sentences_(std::move(sentences)) {
  for (size_t k = 0; k < sentences_.size(); ++k) by_id_.emplace(sentences_[k].id, k);
}

CandidateDistribution ExternalScorer::score(const Sentence& sentence, size_t position) const {
  auto it = by_id_.find(sentence.id);
  if (it == by_id_.end()) {
    throw Error(ErrorCode::kIdMismatch, "no external distributions for sentence " + sentence.id);
  }
  const ExternalSentence& ext = sentences_[it->second];
  if (ext.text != sentence.chars) {
    throw Error(ErrorCode::kIdMismatch, "external text differs for sentence " + sentence.id);
  }
  if (position >= ext.positions.size()) {
    throw Error(ErrorCode::kPositionOutOfRange, "position " + std::to_string(position));
  }
  return ext.positions[position];
}

ProjectedScorer::ProjectedScorer(std::shared_ptr<const CandidateScorer> base, Vocabulary target)
    : base_(std::move(base)), target_(std::move(target)) {
  source_index_.reserve(target_.size());
  for (char32_t ch : target_.chars()) {
    auto idx = base_->vocab().find(ch);
    source_index_.push_back(idx ? static_cast<long>(*idx) : -1);
  }
}

CandidateDistribution ProjectedScorer::score(const Sentence& sentence, size_t position) const {
  const CandidateDistribution src = base_->score(sentence, position);
  CandidateDistribution out{position, std::vector<double>(target_.size(), 0.0)};
  for (size_t k = 0; k < target_.size(); ++k) {
    if (source_index_[k] >= 0) out.values[k] = src.values[source_index_[k]];
  }
  normalize_or_uniform(out.values);
  return out;
}

}  // namespace headfilt
