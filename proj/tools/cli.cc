#include "cli.h"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "headfilt/char_tree.h"
#include "headfilt/corpus.h"
#include "headfilt/error.h"
#include "headfilt/eval.h"
#include "headfilt/filt_train.h"
#include "headfilt/model_io.h"
#include "headfilt/pipeline.h"
#include "headfilt/scorer.h"
#include "headfilt/utf8.h"

namespace headfilt::cli {

namespace {

struct TrainArgs {
  std::string ids, sets, corpus, out;
  int steps1 = 150000, steps2 = 50000, dim = 512, input_dim = 0, batch = 500, negatives = 1;
  double lr = 3e-3, margin = kDefaultMargin;
  uint64_t seed = 1;
  size_t calib_pairs = 100000;
  int checkpoint_every = 0;
  int max_depth = kDefaultMaxDepth;
  bool expand_ids = false;
};

struct CheckArgs {
  std::string model, lm, external, sets, input = "-", output = "-", mode = "headfilt",
                                         format = "text";
  double min_confidence = 0.0;
};

struct EvaluateArgs {
  std::string gold, pred, task = "detection";
  bool json = false;
};

struct CoverageArgs {
  std::string corpus, sets;
  bool json = false;
};

struct CalibrateArgs {
  std::string model, out, sets, corpus;
  size_t pairs = 100000;
  uint64_t seed = 1;
};

struct LmTrainArgs {
  std::string corpus, out, format = "corpus";
  int order = 3;
  double discount = NgramModel::kDefaultDiscount;
};

// Reads sentences from a file or "-" (the given stream).
std::string read_input(const std::string& path, std::istream& in) {
  if (path == "-") {
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }
  return read_file(path);
}

std::vector<Sentence> parse_sentences(const std::string& contents, const std::string& format,
                                      std::ostream& err) {
  std::vector<Sentence> out;
  if (format == "corpus") {
    LabeledCorpus corpus = parse_corpus(contents);
    for (const auto& issue : corpus.issues) {
      err << "warning: line " << issue.line << ": " << issue.message << "\n";
    }
    for (auto& s : corpus.sentences) out.push_back({s.id, s.text});
    return out;
  }
  size_t line_no = 0, start = 0;
  while (start < contents.size()) {
    auto end = contents.find('\n', start);
    if (end == std::string::npos) end = contents.size();
    std::string line = contents.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out.push_back({std::to_string(line_no), utf8_decode(line)});
  }
  return out;
}

void report_corpus_issues(const LabeledCorpus& corpus, const std::string& path, std::ostream& err) {
  for (const auto& issue : corpus.issues) {
    err << "warning: " << path << ":" << issue.line << ": " << error_code_name(issue.code) << ": "
        << issue.message << "\n";
  }
}

int cmd_train(const TrainArgs& a, int threads, int verbosity, std::ostream& out,
              std::ostream& err) {
  TreeRegistry registry;
  IdsLoadOptions ids_options;
  ids_options.max_depth = a.max_depth;
  ids_options.expand_one_level = a.expand_ids;
  Provenance prov;
  if (!a.ids.empty()) {
    const std::string bytes = read_file(a.ids);
    registry = parse_ids_db(bytes, ids_options);
    prov.data_hashes.emplace_back("ids", content_hash(bytes));
    if (verbosity > 0 && !registry.issues().empty()) {
      err << registry.issues().size() << " IDS lines fell back to single leaves\n";
    }
  }
  const std::string sets_bytes = read_file(a.sets);
  const ConfusionSets sets = parse_confusion_sets(sets_bytes);
  prov.data_hashes.emplace_back("sets", content_hash(sets_bytes));

  std::u32string chars = sets.characters();
  LabeledCorpus corpus;
  if (!a.corpus.empty()) {
    const std::string bytes = read_file(a.corpus);
    corpus = parse_corpus(bytes);
    report_corpus_issues(corpus, a.corpus, err);
    prov.data_hashes.emplace_back("corpus", content_hash(bytes));
    for (const auto& s : corpus.sentences) {
      chars += s.text;
      for (const auto& e : s.edits) chars.push_back(e.correct);
    }
  }
  const Vocabulary vocab = Vocabulary::from_chars(chars);

  TrainConfig config;
  config.margin = a.margin;
  config.learning_rate = a.lr;
  config.batch_size = a.batch;
  config.stage1_steps = a.steps1;
  config.stage2_steps = a.steps2;
  config.negatives_per_positive = a.negatives;
  config.seed = a.seed;
  config.hidden_dim = a.dim;
  config.input_dim = a.input_dim > 0 ? a.input_dim : a.dim;
  config.calibration_pairs = a.calib_pairs;
  config.threads = threads;
  if (verbosity > 0) config.log = [&err](const std::string& line) { err << line << "\n"; };
  if (a.checkpoint_every > 0) {
    config.checkpoint_every = a.checkpoint_every;
    config.on_checkpoint = [&](const FilterModel& model, const std::string& stage, int step) {
      ModelBundle snapshot = model;
      snapshot.provenance.data_hashes = prov.data_hashes;
      snapshot.provenance.stages.push_back(stage + "@" + std::to_string(step));
      const std::string path = a.out + "." + stage + "-" + std::to_string(step) + ".ckpt";
      save_model(snapshot, path);
      save_model_sidecar(snapshot, path + ".json");
      if (verbosity > 0) err << "checkpoint " << path << "\n";
    };
  }
  if (verbosity > 0) {
    err << "vocabulary " << vocab.size() << " characters, " << registry.size()
        << " IDS entries\n";
  }

  TrainResult result = train(registry, vocab, sets, a.corpus.empty() ? nullptr : &corpus, config);
  result.model.provenance.data_hashes = prov.data_hashes;
  save_model(result.model, a.out);
  save_model_sidecar(result.model, a.out + ".json");

  const auto& r = result.report;
  if (verbosity > 0) {
    err << "positives within margin " << r.positive_within_margin << ", negatives beyond margin "
        << r.negative_beyond_margin << ", d* " << r.calibration.d_star << ", " << r.wall_seconds
        << " s\n";
  }
  out << "beta " << result.model.config.beta << "\n";
  return kExitOk;
}

int cmd_check(const CheckArgs& a, int threads, std::istream& in, std::ostream& out,
              std::ostream& err) {
  if (a.lm.empty() == a.external.empty()) {
    err << "error: exactly one of --lm or --external is required\n";
    return kExitUsage;
  }
  if (a.mode == "headfilt" && a.model.empty()) {
    err << "error: --mode headfilt needs --model\n";
    return kExitUsage;
  }
  if (a.mode == "sets" && a.sets.empty()) {
    err << "error: --mode sets needs --sets\n";
    return kExitUsage;
  }

  std::optional<ModelBundle> bundle;
  if (!a.model.empty()) bundle = load_model(a.model);
  const std::vector<Sentence> sentences = parse_sentences(read_input(a.input, in), a.format, err);

  std::shared_ptr<const CandidateScorer> scorer;
  if (!a.lm.empty()) {
    scorer = std::make_shared<NgramScorer>(std::make_shared<const NgramModel>(load_ngram(a.lm)));
  } else {
    const std::string contents = read_file(a.external);
    Vocabulary vocab;
    if (bundle) {
      vocab = bundle->vocab;
    } else {
      std::u32string chars = external_characters(contents);
      for (const auto& s : sentences) chars += s.chars;
      vocab = Vocabulary::from_chars(chars);
    }
    ExternalLoadReport rep;
    auto ext = parse_external(contents, vocab, &rep);
    if (rep.out_of_vocab_entries > 0) {
      err << "warning: VocabMismatch: " << rep.out_of_vocab_entries
          << " candidate entries outside the vocabulary were dropped\n";
    }
    scorer = std::make_shared<ExternalScorer>(vocab, std::move(ext));
  }
  if (bundle && !(scorer->vocab() == bundle->vocab)) {
    scorer = std::make_shared<ProjectedScorer>(scorer, bundle->vocab);
  }

  std::unique_ptr<SimilarityFilter> filter;
  if (a.mode == "sets") {
    filter = std::make_unique<ConfusionSetFilter>(load_confusion_sets(a.sets), scorer->vocab());
  } else if (a.mode == "headfilt") {
    filter = std::make_unique<HeadFilter>(*bundle, threads);
  }

  std::ofstream file_out;
  std::ostream* sink = &out;
  if (a.output != "-") {
    file_out.open(a.output, std::ios::binary | std::ios::trunc);
    if (!file_out) throw Error(ErrorCode::kIoError, "cannot write " + a.output);
    sink = &file_out;
  }
  CheckOptions options;
  options.min_confidence = a.min_confidence;
  for (const auto& s : sentences) {
    *sink << format_check_result(check_sentence(s, *scorer, filter.get(), options)) << "\n";
  }
  return kExitOk;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  LabeledCorpus gold = load_corpus(a.gold);
  report_corpus_issues(gold, a.gold, err);
  const auto predicted = load_predictions(a.pred);
  const MetricReport report =
      sentence_metrics(gold, predicted, a.task == "correction" ? Task::kCorrection : Task::kDetection);
  out << (a.json ? format_metrics_json(report) + "\n" : format_metrics_table(report));
  return kExitOk;
}

int cmd_coverage(const CoverageArgs& a, std::ostream& out, std::ostream& err) {
  LabeledCorpus corpus = load_corpus(a.corpus);
  report_corpus_issues(corpus, a.corpus, err);
  const CoverageReport report = coverage(extract_error_pairs(corpus), load_confusion_sets(a.sets));
  out << (a.json ? format_coverage_json(report) : report.summary()) << "\n";
  return kExitOk;
}

int cmd_calibrate(const CalibrateArgs& a, int threads, std::ostream& out, std::ostream& err) {
  ModelBundle bundle = load_model(a.model);
  PositivePairs positives;
  if (!a.sets.empty()) positives = build_stage1_pairs(load_confusion_sets(a.sets));
  if (!a.corpus.empty()) {
    LabeledCorpus corpus = load_corpus(a.corpus);
    report_corpus_issues(corpus, a.corpus, err);
    positives = build_stage2_pairs(positives, corpus);
  }
  const Calibration cal = calibrate_model(bundle, positives, a.pairs, a.seed, threads);
  bundle.config.beta = cal.beta;
  bundle.provenance.stages.push_back("calibrate");
  const std::string target = a.out.empty() ? a.model : a.out;
  save_model(bundle, target);
  save_model_sidecar(bundle, target + ".json");
  err << "d* " << cal.d_star << " over " << cal.pairs << " pairs, unclamped beta " << cal.raw_beta
      << "\n";
  out << "beta " << cal.beta << "\n";
  return kExitOk;
}

int cmd_lm_train(const LmTrainArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<std::u32string> sentences;
  std::u32string chars;
  const std::string contents = read_file(a.corpus);
  if (a.format == "corpus") {
    LabeledCorpus corpus = parse_corpus(contents);
    report_corpus_issues(corpus, a.corpus, err);
    for (const auto& s : corpus.sentences) {
      sentences.push_back(s.corrected());
      chars += s.text;
      chars += sentences.back();
    }
  } else {
    for (auto& s : parse_sentences(contents, "text", err)) {
      chars += s.chars;
      sentences.push_back(std::move(s.chars));
    }
  }
  const NgramModel model =
      NgramModel::train(sentences, a.order, Vocabulary::from_chars(chars), a.discount);
  save_ngram(model, a.out);
  out << "order " << model.order() << ", vocabulary " << model.vocab().size() << "\n";
  return kExitOk;
}

// Config reader that yields to environment variables, so the precedence is
// command line, then HEADFILT_* variables, then the config file.
class EnvFirstConfig : public CLI::ConfigBase {
 public:
  explicit EnvFirstConfig(const CLI::App* app) : app_(app) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::vector<CLI::ConfigItem> items = CLI::ConfigBase::from_config(input);
    std::erase_if(items, [&](const CLI::ConfigItem& item) { return env_overrides(item); });
    return items;
  }

 private:
  bool env_overrides(const CLI::ConfigItem& item) const {
    const CLI::App* scope = app_;
    for (const auto& parent : item.parents) {
      scope = scope->get_subcommand_no_throw(parent);
      if (scope == nullptr) return false;
    }
    const CLI::Option* opt = scope->get_option_no_throw("--" + item.name);
    if (opt == nullptr || opt->get_envname().empty()) return false;
    return std::getenv(opt->get_envname().c_str()) != nullptr;
  }

  const CLI::App* app_;
};

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Adaptable spell-check filtering with hierarchical character embeddings",
               "headfilt"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value configuration file (lowest precedence)");
  app.config_formatter(std::make_shared<EnvFirstConfig>(&app));
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  int verbosity = 1;
  app.add_option("--threads", threads, "Worker threads for batch phases")
      ->envname("HEADFILT_THREADS")
      ->check(CLI::Range(1, 1024));
  app.add_flag("-q,--quiet", [&](int64_t) { verbosity = 0; }, "No progress output");

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train the filter (stage 1, plus stage 2 with --corpus)");
  train_cmd->add_option("--ids", ta.ids, "IDS database")->envname("HEADFILT_IDS")->check(CLI::ExistingFile);
  train_cmd->add_option("--sets", ta.sets, "Confusion sets")->envname("HEADFILT_SETS")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--corpus", ta.corpus, "Labeled corpus for stage 2")->envname("HEADFILT_CORPUS")->check(CLI::ExistingFile);
  train_cmd->add_option("--out", ta.out, "Output model path")->envname("HEADFILT_OUT")->required();
  train_cmd->add_option("--steps1", ta.steps1, "Stage 1 steps")->envname("HEADFILT_STEPS1")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--steps2", ta.steps2, "Stage 2 steps")->envname("HEADFILT_STEPS2")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--dim", ta.dim, "Embedding dimension")->envname("HEADFILT_DIM")->check(CLI::Range(1, 65536));
  train_cmd->add_option("--input-dim", ta.input_dim, "Input table dimension (default: --dim)")->envname("HEADFILT_INPUT_DIM")->check(CLI::Range(1, 65536));
  train_cmd->add_option("--lr", ta.lr, "Learning rate")->envname("HEADFILT_LR")->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch", ta.batch, "Positive pairs per step")->envname("HEADFILT_BATCH")->check(CLI::Range(1, 1 << 24));
  train_cmd->add_option("--negatives", ta.negatives, "Negatives per positive")->envname("HEADFILT_NEGATIVES")->check(CLI::Range(1, 1024));
  train_cmd->add_option("--margin", ta.margin, "Margin m")->envname("HEADFILT_MARGIN")->check(CLI::Range(1e-9, 2.0 - 1e-9));
  train_cmd->add_option("--seed", ta.seed, "Random seed")->envname("HEADFILT_SEED");
  train_cmd->add_option("--calib-pairs", ta.calib_pairs, "Dissimilar pairs sampled for beta")->envname("HEADFILT_CALIB_PAIRS")->check(CLI::PositiveNumber);
  train_cmd->add_option("--checkpoint-every", ta.checkpoint_every, "Checkpoint interval in steps (0: off)")->envname("HEADFILT_CHECKPOINT_EVERY")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--max-depth", ta.max_depth, "Maximum character tree depth")->envname("HEADFILT_MAX_DEPTH")->check(CLI::Range(1, 64));
  train_cmd->add_flag("--expand-ids", ta.expand_ids, "Expand decomposable leaves one level");

  CheckArgs ca;
  auto* check_cmd = app.add_subcommand("check", "Spell-check sentences, one JSON line per sentence");
  check_cmd->add_option("--model", ca.model, "Trained model")->envname("HEADFILT_MODEL");
  check_cmd->add_option("--lm", ca.lm, "n-gram model from lm-train")->envname("HEADFILT_LM");
  check_cmd->add_option("--external", ca.external, "External candidate distributions (JSON lines)")->envname("HEADFILT_EXTERNAL");
  check_cmd->add_option("--mode", ca.mode, "Filter: none, sets or headfilt")->envname("HEADFILT_MODE")->check(CLI::IsMember({"none", "sets", "headfilt"}));
  check_cmd->add_option("--sets", ca.sets, "Confusion sets for --mode sets")->envname("HEADFILT_SETS");
  check_cmd->add_option("--input", ca.input, "Input file, - for stdin");
  check_cmd->add_option("--output", ca.output, "Output file, - for stdout");
  check_cmd->add_option("--format", ca.format, "Input format: text or corpus")->check(CLI::IsMember({"text", "corpus"}));
  check_cmd->add_option("--min-confidence", ca.min_confidence, "Flag threshold on filtered mass (0: off)")->check(CLI::Range(0.0, 1.0));

  EvaluateArgs ea;
  auto* eval_cmd = app.add_subcommand("evaluate", "Sentence-level metrics");
  eval_cmd->add_option("--gold", ea.gold, "Gold corpus")->required();
  eval_cmd->add_option("--pred", ea.pred, "Predictions from check")->required();
  eval_cmd->add_option("--task", ea.task, "detection or correction")->check(CLI::IsMember({"detection", "correction"}));
  eval_cmd->add_flag("--json", ea.json, "Machine-readable output");

  CoverageArgs cva;
  auto* cov_cmd = app.add_subcommand("coverage", "Error pairs covered by confusion sets");
  cov_cmd->add_option("--corpus", cva.corpus, "Labeled corpus")->required();
  cov_cmd->add_option("--sets", cva.sets, "Confusion sets")->envname("HEADFILT_SETS")->required();
  cov_cmd->add_flag("--json", cva.json, "Machine-readable output");

  CalibrateArgs cla;
  auto* cal_cmd = app.add_subcommand("calibrate", "Recalibrate beta of a trained model");
  cal_cmd->add_option("--model", cla.model, "Model to update")->envname("HEADFILT_MODEL")->required();
  cal_cmd->add_option("--out", cla.out, "Write here instead of updating --model");
  cal_cmd->add_option("--pairs", cla.pairs, "Dissimilar pairs to sample")->check(CLI::PositiveNumber);
  cal_cmd->add_option("--seed", cla.seed, "Random seed")->envname("HEADFILT_SEED");
  cal_cmd->add_option("--sets", cla.sets, "Confusion sets excluded from the negatives")->envname("HEADFILT_SETS");
  cal_cmd->add_option("--corpus", cla.corpus, "Corpus whose error pairs are excluded");

  LmTrainArgs la;
  auto* lm_cmd = app.add_subcommand("lm-train", "Train the character n-gram scorer");
  lm_cmd->add_option("--corpus", la.corpus, "Training text")->required();
  lm_cmd->add_option("--out", la.out, "Output path")->required();
  lm_cmd->add_option("--order", la.order, "n-gram order")->check(CLI::Range(1, 16));
  lm_cmd->add_option("--discount", la.discount, "Absolute discount")->check(CLI::Range(1e-9, 1.0 - 1e-9));
  lm_cmd->add_option("--format", la.format, "corpus (corrected text) or text")->check(CLI::IsMember({"corpus", "text"}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    for (auto* sub : app.get_subcommands()) err << sub->help();
    if (app.get_subcommands().empty()) err << app.help();
    return kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(ta, threads, verbosity, out, err);
    if (check_cmd->parsed()) return cmd_check(ca, threads, in, out, err);
    if (eval_cmd->parsed()) return cmd_evaluate(ea, out, err);
    if (cov_cmd->parsed()) return cmd_coverage(cva, out, err);
    if (cal_cmd->parsed()) return cmd_calibrate(cla, threads, out, err);
    if (lm_cmd->parsed()) return cmd_lm_train(la, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::kInvalidArgument ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace headfilt::cli
