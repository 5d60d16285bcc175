#ifndef HEADFILT_MODEL_IO_H_
#define HEADFILT_MODEL_IO_H_

#include <cstdint>
#include <string>
#include <vector>

#include "headfilt/filt_train.h"
#include "headfilt/pipeline.h"
#include "headfilt/scorer.h"

namespace headfilt {

// A trained filter as stored on disk. Provenance travels inside the model.
using ModelBundle = FilterModel;

constexpr uint32_t kModelFormatVersion = 1;
constexpr uint32_t kNgramFormatVersion = 1;

// Binary container, little-endian; see docs/formats.md. The last four bytes
// are a CRC32 of everything before them.
std::string serialize_model(const ModelBundle& bundle);
// Throws kCorruptFile (bad magic, truncation, checksum) or kVersionMismatch.
ModelBundle deserialize_model(const std::string& bytes);

void save_model(const ModelBundle& bundle, const std::string& path);
// Throws kIoError when unreadable, then as deserialize_model.
ModelBundle load_model(const std::string& path);

// JSON sidecar with beta, margin, vocabulary hash and stage provenance.
std::string model_sidecar_json(const ModelBundle& bundle);
void save_model_sidecar(const ModelBundle& bundle, const std::string& path);

std::string serialize_ngram(const NgramModel& model);
NgramModel deserialize_ngram(const std::string& bytes);
void save_ngram(const NgramModel& model, const std::string& path);
NgramModel load_ngram(const std::string& path);

// One JSON object per line: {"id": ..., "edits": [{"pos", "wrong", "correction"}]}.
std::string format_check_result(const CheckResult& result);

struct PredictedEdits {
  std::string id;
  std::vector<Edit> edits;
};

// Reads the format written by format_check_result. Throws kFormatError.
std::vector<PredictedEdits> parse_predictions(std::string_view contents);
std::vector<PredictedEdits> load_predictions(const std::string& path);

// Hex FNV-1a digest of a byte string, for provenance records.
std::string content_hash(std::string_view bytes);

}  // namespace headfilt

#endif  // HEADFILT_MODEL_IO_H_
