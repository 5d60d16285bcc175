#include "headfilt/model_io.h"

#include <cstring>
#include <fstream>

#include <zlib.h>

#include <nlohmann/json.hpp>

#include "headfilt/corpus.h"
#include "headfilt/error.h"
#include "headfilt/utf8.h"

namespace headfilt {

namespace {

constexpr char kModelMagic[8] = {'H', 'F', 'M', 'O', 'D', 'E', 'L', '\0'};
constexpr char kNgramMagic[8] = {'H', 'F', 'N', 'G', 'R', 'A', 'M', '\0'};
constexpr size_t kHeaderSize = 12;  // magic + version

class Writer {
 public:
  Writer(const char (&magic)[8], uint32_t version) {
    buf_.append(magic, 8);
    u32(version);
  }
  void u32(uint32_t v) {
    for (int k = 0; k < 4; ++k) buf_.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
  }
  void u64(uint64_t v) {
    for (int k = 0; k < 8; ++k) buf_.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
  }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    u64(bits);
  }
  void str(std::string_view s) {
    u64(s.size());
    buf_.append(s);
  }
  void chars(const std::vector<char32_t>& cs) {
    u64(cs.size());
    for (char32_t c : cs) u32(c);
  }
  std::string finish() {
    u32(static_cast<uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(buf_.data()), static_cast<uInt>(buf_.size()))));
    return std::move(buf_);
  }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& bytes, const char (&magic)[8], uint32_t supported, const char* what)
      : bytes_(bytes) {
    if (bytes.size() < kHeaderSize + 4 || std::memcmp(bytes.data(), magic, 8) != 0) {
      throw Error(ErrorCode::kCorruptFile, std::string("not a ") + what + " file");
    }
    pos_ = 8;
    const uint32_t version = u32();
    if (version != supported) {
      throw Error(ErrorCode::kVersionMismatch,
                  std::string(what) + " file has format version " + std::to_string(version) +
                      ", this build reads version " + std::to_string(supported));
    }
    end_ = bytes.size() - 4;
    const auto stored = static_cast<uint32_t>(
        static_cast<unsigned char>(bytes[end_]) |
        static_cast<unsigned char>(bytes[end_ + 1]) << 8 |
        static_cast<unsigned char>(bytes[end_ + 2]) << 16 |
        static_cast<uint32_t>(static_cast<unsigned char>(bytes[end_ + 3])) << 24);
    const auto actual = static_cast<uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(end_)));
    if (stored != actual) {
      throw Error(ErrorCode::kCorruptFile, std::string(what) + " checksum mismatch (truncated or damaged)");
    }
  }

  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= uint32_t(static_cast<unsigned char>(bytes_[pos_++])) << (8 * k);
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= uint64_t(static_cast<unsigned char>(bytes_[pos_++])) << (8 * k);
    return v;
  }
  double f64() {
    const uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::string str() {
    const uint64_t n = u64();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<char32_t> chars() {
    const uint64_t n = u64();
    need(n * 4);
    std::vector<char32_t> out(n);
    for (auto& c : out) c = u32();
    return out;
  }
  size_t count(size_t elem_size) {
    const uint64_t n = u64();
    need(n * elem_size);
    return n;
  }
  void done() const {
    if (pos_ != end_) throw Error(ErrorCode::kCorruptFile, "trailing bytes in payload");
  }

 private:
  void need(uint64_t n) const {
    if (n > end_ - pos_) throw Error(ErrorCode::kCorruptFile, "payload ends early");
  }

  const std::string& bytes_;
  size_t pos_ = 0;
  size_t end_ = 0;
};

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path);
}

nlohmann::json provenance_json(const Provenance& p) {
  nlohmann::json hashes = nlohmann::json::array();
  for (const auto& [label, digest] : p.data_hashes) hashes.push_back({label, digest});
  return {{"stages", p.stages},
          {"seed", p.seed},
          {"stage1_steps", p.stage1_steps},
          {"stage2_steps", p.stage2_steps},
          {"data_hashes", hashes}};
}

Provenance provenance_from_json(const nlohmann::json& j) {
  Provenance p;
  p.stages = j.at("stages").get<std::vector<std::string>>();
  p.seed = j.at("seed").get<uint64_t>();
  p.stage1_steps = j.at("stage1_steps").get<int>();
  p.stage2_steps = j.at("stage2_steps").get<int>();
  for (const auto& h : j.at("data_hashes")) {
    p.data_hashes.emplace_back(h.at(0).get<std::string>(), h.at(1).get<std::string>());
  }
  return p;
}

}  // namespace

std::string serialize_model(const ModelBundle& bundle) {
  Writer w(kModelMagic, kModelFormatVersion);
  const EmbedParams& p = bundle.params;
  w.u32(static_cast<uint32_t>(p.input_dim()));
  w.u32(static_cast<uint32_t>(p.hidden_dim()));
  w.chars(bundle.vocab.chars());
  w.u64(bundle.vocab.hash());
  w.u64(bundle.trees.size());
  for (const auto& t : bundle.trees) {
    const std::u32string ids = t.to_ids();
    w.chars(std::vector<char32_t>(ids.begin(), ids.end()));
  }
  w.chars(p.components());
  w.chars(p.operators());
  w.u64(p.values().size());
  for (double v : p.values()) w.f64(v);
  w.f64(bundle.config.margin);
  w.f64(bundle.config.beta);
  w.str(provenance_json(bundle.provenance).dump());
  return w.finish();
}

ModelBundle deserialize_model(const std::string& bytes) {
  Reader r(bytes, kModelMagic, kModelFormatVersion, "model");
  ModelBundle b;
  const int input_dim = static_cast<int>(r.u32());
  const int hidden_dim = static_cast<int>(r.u32());
  try {
    b.vocab = Vocabulary(r.chars());
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorruptFile, e.what());
  }
  if (r.u64() != b.vocab.hash()) throw Error(ErrorCode::kCorruptFile, "vocabulary hash mismatch");
  const size_t n_trees = r.count(8);
  if (n_trees != b.vocab.size()) throw Error(ErrorCode::kCorruptFile, "tree count != vocabulary size");
  for (size_t k = 0; k < n_trees; ++k) {
    const auto ids = r.chars();
    try {
      b.trees.push_back(parse_ids(std::u32string_view(ids.data(), ids.size())));
    } catch (const Error& e) {
      throw Error(ErrorCode::kCorruptFile, std::string("stored tree: ") + e.what());
    }
  }
  auto comps = r.chars();
  auto ops = r.chars();
  try {
    b.params = EmbedParams(std::move(comps), std::move(ops), input_dim, hidden_dim);
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorruptFile, e.what());
  }
  const size_t n_values = r.count(8);
  if (n_values != b.params.size()) throw Error(ErrorCode::kCorruptFile, "parameter count mismatch");
  for (double& v : b.params.values()) v = r.f64();
  b.config.margin = r.f64();
  b.config.beta = r.f64();
  try {
    b.provenance = provenance_from_json(nlohmann::json::parse(r.str()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptFile, std::string("provenance: ") + e.what());
  }
  r.done();
  return b;
}

void save_model(const ModelBundle& bundle, const std::string& path) {
  write_file(path, serialize_model(bundle));
}

ModelBundle load_model(const std::string& path) { return deserialize_model(read_file(path)); }

std::string model_sidecar_json(const ModelBundle& bundle) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(bundle.vocab.hash()));
  nlohmann::json j = {{"beta", bundle.config.beta},
                      {"margin", bundle.config.margin},
                      {"vocab_hash", hash},
                      {"vocab_size", bundle.vocab.size()},
                      {"provenance", provenance_json(bundle.provenance)}};
  return j.dump(2) + "\n";
}

void save_model_sidecar(const ModelBundle& bundle, const std::string& path) {
  write_file(path, model_sidecar_json(bundle));
}

std::string serialize_ngram(const NgramModel& model) {
  Writer w(kNgramMagic, kNgramFormatVersion);
  w.u32(static_cast<uint32_t>(model.order()));
  w.f64(model.discount());
  w.chars(model.vocab().chars());
  for (const auto& table : model.tables()) {
    w.u64(table.size());
    for (const auto& [ctx, stats] : table) {
      w.u64(ctx.size());
      for (int t : ctx) w.u32(static_cast<uint32_t>(t));
      w.u64(stats.total);
      w.u64(stats.next.size());
      for (const auto& [tok, count] : stats.next) {
        w.u32(static_cast<uint32_t>(tok));
        w.u64(count);
      }
    }
  }
  return w.finish();
}

NgramModel deserialize_ngram(const std::string& bytes) {
  Reader r(bytes, kNgramMagic, kNgramFormatVersion, "n-gram");
  const int order = static_cast<int>(r.u32());
  const double discount = r.f64();
  Vocabulary vocab;
  try {
    vocab = Vocabulary(r.chars());
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorruptFile, e.what());
  }
  if (order < 1 || order > 16) throw Error(ErrorCode::kCorruptFile, "bad n-gram order");
  std::vector<NgramModel::Table> tables(order);
  for (auto& table : tables) {
    const size_t n = r.count(8);
    for (size_t k = 0; k < n; ++k) {
      std::vector<int> ctx(r.count(4));
      for (int& t : ctx) t = static_cast<int>(r.u32());
      NgramModel::ContextStats stats;
      stats.total = r.u64();
      const size_t m = r.count(12);
      for (size_t j = 0; j < m; ++j) {
        const int tok = static_cast<int>(r.u32());
        stats.next[tok] = r.u64();
      }
      table.emplace(std::move(ctx), std::move(stats));
    }
  }
  r.done();
  try {
    return NgramModel(std::move(vocab), order, discount, std::move(tables));
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorruptFile, e.what());
  }
}

void save_ngram(const NgramModel& model, const std::string& path) {
  write_file(path, serialize_ngram(model));
}

NgramModel load_ngram(const std::string& path) { return deserialize_ngram(read_file(path)); }

std::string format_check_result(const CheckResult& result) {
  nlohmann::json edits = nlohmann::json::array();
  for (const auto& e : result.edits) {
    edits.push_back({{"pos", e.position},
                     {"wrong", utf8_encode(e.wrong)},
                     {"correction", utf8_encode(e.correction)}});
  }
  return nlohmann::json{{"id", result.id}, {"edits", edits}}.dump();
}

std::vector<PredictedEdits> parse_predictions(std::string_view contents) {
  std::vector<PredictedEdits> out;
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
      PredictedEdits p;
      p.id = obj.at("id").get<std::string>();
      for (const auto& e : obj.at("edits")) {
        const auto wrong = utf8_decode(e.at("wrong").get<std::string>());
        const auto corr = utf8_decode(e.at("correction").get<std::string>());
        const auto pos = e.at("pos").get<long long>();
        if (wrong.size() != 1 || corr.size() != 1 || pos < 1) {
          throw Error(ErrorCode::kFormatError, "bad edit");
        }
        p.edits.push_back({static_cast<size_t>(pos), wrong[0], corr[0]});
      }
      out.push_back(std::move(p));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kFormatError, "predictions line " + std::to_string(line_no) + ": " +
                                               e.what());
    }
  }
  return out;
}

std::vector<PredictedEdits> load_predictions(const std::string& path) {
  return parse_predictions(read_file(path));
}

std::string content_hash(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace headfilt
