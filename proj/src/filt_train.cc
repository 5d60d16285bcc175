#include "headfilt/filt_train.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "headfilt/error.h"
#include "headfilt/utf8.h"

namespace headfilt {

using Eigen::VectorXd;

Eigen::MatrixXd FilterModel::embeddings(int threads) const {
  TreeRegistry registry;
  for (size_t i = 0; i < vocab.size(); ++i) registry.insert(vocab.at(i), trees.at(i));
  return embed_all(registry, vocab, params, threads);
}

PairLoss pair_loss(int label, double d, double margin) {
  if (label == 1) {
    if (d > margin) return {d - margin, 1.0};
    return {0.0, 0.0};
  }
  if (d < margin) return {margin - d, -1.0};
  return {0.0, 0.0};
}

PairLoss pair_loss(const TrainPair& pair, const Vocabulary& vocab,
                   const Eigen::MatrixXd& embeddings, double margin) {
  const size_t a = vocab.index(pair.a), b = vocab.index(pair.b);
  const double d = distance(embeddings.row(a).transpose(), embeddings.row(b).transpose());
  return pair_loss(pair.label, d, margin);
}

uint64_t PositivePairs::key(char32_t a, char32_t b) {
  const CharPair p = make_unordered(a, b);
  return (static_cast<uint64_t>(p.first) << 32) | p.second;
}

void PositivePairs::add(char32_t a, char32_t b) {
  if (a == b) return;
  if (!keys_.insert(key(a, b)).second) return;
  const CharPair p = make_unordered(a, b);
  list_.insert(std::upper_bound(list_.begin(), list_.end(), p), p);
}

bool PositivePairs::contains(char32_t a, char32_t b) const { return keys_.count(key(a, b)) != 0; }

PositivePairs build_stage1_pairs(const ConfusionSets& sets) {
  if (sets.empty()) throw Error(ErrorCode::kEmptySets, "no confusion sets given");
  PositivePairs pairs;
  for (const auto& [head, members] : sets.sets()) {
    std::vector<char32_t> group(members.begin(), members.end());
    group.push_back(head);
    for (size_t i = 0; i < group.size(); ++i) {
      for (size_t j = i + 1; j < group.size(); ++j) pairs.add(group[i], group[j]);
    }
  }
  return pairs;
}

PositivePairs build_stage2_pairs(const PositivePairs& stage1, const LabeledCorpus& corpus) {
  PositivePairs pairs = stage1;
  for (const auto& s : corpus.sentences) {
    for (const auto& e : s.edits) pairs.add(e.wrong, e.correct);
  }
  return pairs;
}

NegativeSampler::NegativeSampler(const Vocabulary& vocab, const PositivePairs& positives)
    : vocab_(vocab), positives_(positives) {}

std::pair<size_t, size_t> NegativeSampler::sample(Rng& rng) const {
  const size_t n = vocab_.size();
  const size_t all_pairs = n * (n - 1) / 2;
  if (n < 2 || positives_.size() >= all_pairs) {
    throw Error(ErrorCode::kInvalidArgument, "vocabulary has no dissimilar pair to sample");
  }
  while (true) {
    const size_t a = rng.index(n), b = rng.index(n);
    if (a == b || positives_.contains(vocab_.at(a), vocab_.at(b))) continue;
    return {a, b};
  }
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kInvalidArgument, msg); };
  if (!(margin > 0.0 && margin < 2.0)) fail("margin must lie in (0, 2)");
  if (!(learning_rate > 0.0)) fail("learning rate must be positive");
  if (batch_size <= 0) fail("batch size must be positive");
  if (stage1_steps < 0 || stage2_steps < 0) fail("step counts must be non-negative");
  if (negatives_per_positive < 1) fail("negatives per positive must be at least 1");
  if (input_dim <= 0 || hidden_dim <= 0) fail("dimensions must be positive");
  if (calibration_pairs == 0) fail("calibration pairs must be positive");
  if (threads < 1) fail("threads must be at least 1");
}

namespace {

// Gradients are reduced over a fixed number of shards so results do not
// depend on the worker count.
constexpr size_t kGradShards = 4;

std::vector<std::pair<size_t, size_t>> to_indices(const PositivePairs& positives,
                                                  const Vocabulary& vocab) {
  std::vector<std::pair<size_t, size_t>> out;
  out.reserve(positives.size());
  for (const auto& [a, b] : positives.list()) {
    auto ia = vocab.find(a), ib = vocab.find(b);
    if (ia && ib) out.emplace_back(*ia, *ib);
  }
  return out;
}

template <typename Fn>
void parallel_shards(int threads, Fn&& fn) {
  if (threads <= 1) {
    for (size_t s = 0; s < kGradShards; ++s) fn(s);
    return;
  }
  std::vector<std::exception_ptr> errors(kGradShards);
  std::vector<std::thread> pool;
  const size_t workers = std::min<size_t>(threads, kGradShards);
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (size_t s = w; s < kGradShards; s += workers) {
        try {
          fn(s);
        } catch (...) {
          errors[s] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

class StageRunner {
 public:
  StageRunner(FilterModel& model, const TrainConfig& config) : model_(model), config_(config) {}

  void run(const std::string& stage, const PositivePairs& positives, int steps, Rng& rng,
           TrainReport& report) {
    if (steps == 0) return;
    const auto pos = to_indices(positives, model_.vocab);
    if (pos.empty()) {
      throw Error(ErrorCode::kEmptySets, "no positive pair lies inside the vocabulary");
    }
    NegativeSampler sampler(model_.vocab, positives);
    const size_t n_params = model_.params.size();
    std::vector<double> adam_m(n_params, 0.0), adam_v(n_params, 0.0), grad(n_params);
    std::vector<std::vector<double>> shard_grad(kGradShards, std::vector<double>(n_params));
    const int steps_per_epoch =
        std::max<int>(1, static_cast<int>((pos.size() + config_.batch_size - 1) / config_.batch_size));
    double epoch_sum = 0.0;
    int epoch_steps = 0;

    struct Item {
      size_t a, b;
      int label;
    };
    std::vector<Item> batch;
    std::vector<int> slot(model_.vocab.size(), -1);
    for (int step = 1; step <= steps; ++step) {
      batch.clear();
      for (int k = 0; k < config_.batch_size; ++k) {
        const auto& p = pos[rng.index(pos.size())];
        batch.push_back({p.first, p.second, 1});
        for (int j = 0; j < config_.negatives_per_positive; ++j) {
          auto [a, b] = sampler.sample(rng);
          batch.push_back({a, b, 0});
        }
      }

      std::vector<size_t> ids;
      for (const auto& it : batch) {
        ids.push_back(it.a);
        ids.push_back(it.b);
      }
      std::sort(ids.begin(), ids.end());
      ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
      for (size_t k = 0; k < ids.size(); ++k) slot[ids[k]] = static_cast<int>(k);

      std::vector<VectorXd> h(ids.size());
      for (size_t k = 0; k < ids.size(); ++k) h[k] = embed(model_.trees[ids[k]], model_.params).h;

      std::vector<VectorXd> dh(ids.size(), VectorXd::Zero(model_.params.hidden_dim()));
      const double scale = 1.0 / static_cast<double>(batch.size());
      double loss = 0.0;
      VectorXd ga, gb;
      for (const auto& it : batch) {
        const VectorXd& ha = h[slot[it.a]];
        const VectorXd& hb = h[slot[it.b]];
        const PairLoss pl = pair_loss(it.label, distance(ha, hb), config_.margin);
        loss += pl.loss;
        if (pl.grad_d == 0.0) continue;
        distance_grad(ha, hb, &ga, &gb);
        dh[slot[it.a]] += (pl.grad_d * scale) * ga;
        dh[slot[it.b]] += (pl.grad_d * scale) * gb;
      }
      loss *= scale;

      parallel_shards(config_.threads, [&](size_t s) {
        auto& buf = shard_grad[s];
        std::fill(buf.begin(), buf.end(), 0.0);
        const size_t begin = ids.size() * s / kGradShards, end = ids.size() * (s + 1) / kGradShards;
        for (size_t k = begin; k < end; ++k) {
          if (dh[k].isZero(0.0)) continue;
          embed_grad_accumulate(model_.trees[ids[k]], model_.params,
                                std::span<const double>(dh[k].data(), dh[k].size()), buf);
        }
      });
      std::fill(grad.begin(), grad.end(), 0.0);
      for (const auto& buf : shard_grad) {
        for (size_t i = 0; i < n_params; ++i) grad[i] += buf[i];
      }
      for (size_t id : ids) slot[id] = -1;

      adam_step(grad, adam_m, adam_v, step);

      epoch_sum += loss;
      if (++epoch_steps == steps_per_epoch || step == steps) {
        report.epoch_loss.push_back(epoch_sum / epoch_steps);
        epoch_sum = 0.0;
        epoch_steps = 0;
      }
      if (config_.log && (step % 500 == 0 || step == steps)) {
        config_.log(stage + " step " + std::to_string(step) + "/" + std::to_string(steps) +
                    " loss " + std::to_string(loss));
      }
      if (config_.checkpoint_every > 0 && config_.on_checkpoint &&
          step % config_.checkpoint_every == 0) {
        config_.on_checkpoint(model_, stage, step);
      }
    }
  }

 private:
  void adam_step(const std::vector<double>& grad, std::vector<double>& m, std::vector<double>& v,
                 int t) {
    const double b1 = config_.adam_beta1, b2 = config_.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, t), c2 = 1.0 - std::pow(b2, t);
    auto& p = model_.params.values();
    for (size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
      v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
      p[i] -= config_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.adam_epsilon);
    }
  }

  FilterModel& model_;
  const TrainConfig& config_;
};

void finish_report(const FilterModel& model, const PositivePairs& positives,
                   const TrainConfig& config, Rng rng, TrainReport& report) {
  const Eigen::MatrixXd unit = normalize_rows(model.embeddings(config.threads));
  auto dist = [&](size_t a, size_t b) { return (unit.row(a) - unit.row(b)).norm(); };

  const auto pos = to_indices(positives, model.vocab);
  size_t within = 0, counted = 0;
  if (pos.size() <= config.report_pairs) {
    for (const auto& [a, b] : pos) within += dist(a, b) < config.margin;
    counted = pos.size();
  } else {
    for (size_t k = 0; k < config.report_pairs; ++k) {
      const auto& [a, b] = pos[rng.index(pos.size())];
      within += dist(a, b) < config.margin;
    }
    counted = config.report_pairs;
  }
  report.positive_within_margin = counted == 0 ? 0.0 : double(within) / double(counted);

  NegativeSampler sampler(model.vocab, positives);
  size_t beyond = 0;
  for (size_t k = 0; k < config.report_pairs; ++k) {
    auto [a, b] = sampler.sample(rng);
    beyond += dist(a, b) > config.margin;
  }
  report.negative_beyond_margin =
      config.report_pairs == 0 ? 0.0 : double(beyond) / double(config.report_pairs);
}

Calibration recalibrate(FilterModel& model, const PositivePairs& positives,
                        const TrainConfig& config, uint64_t seed) {
  Calibration cal = calibrate_model(model, positives, config.calibration_pairs, seed, config.threads);
  model.config.margin = config.margin;
  model.config.beta = cal.beta;
  return cal;
}

// Fixed stream layout: init, stage 1, stage 2, calibration, report.
struct Streams {
  explicit Streams(uint64_t seed) {
    Rng master(seed);
    init = master.next_u64();
    stage1 = master.next_u64();
    stage2 = master.next_u64();
    calibration1 = master.next_u64();
    calibration2 = master.next_u64();
    report = master.next_u64();
  }
  uint64_t init, stage1, stage2, calibration1, calibration2, report;
};

}  // namespace

Calibration calibrate_model(const FilterModel& model, const PositivePairs& positives,
                            size_t count, uint64_t seed, int threads) {
  NegativeSampler sampler(model.vocab, positives);
  Rng rng(seed);
  std::vector<std::pair<size_t, size_t>> pairs;
  pairs.reserve(count);
  for (size_t k = 0; k < count; ++k) pairs.push_back(sampler.sample(rng));
  return calibrate_beta(model.embeddings(threads), pairs, model.vocab.size(), model.config.margin);
}

TrainResult train(const TreeRegistry& registry, const Vocabulary& vocab,
                  const ConfusionSets& sets, const LabeledCorpus* corpus,
                  const TrainConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  if (vocab.size() < 2) throw Error(ErrorCode::kInvalidArgument, "vocabulary needs >= 2 characters");
  const Streams streams(config.seed);

  TrainResult result;
  FilterModel& model = result.model;
  model.vocab = vocab;
  TreeRegistry used;
  for (char32_t ch : vocab.chars()) {
    model.trees.push_back(registry.tree_for(ch));
    used.insert(ch, model.trees.back());
  }
  model.params = EmbedParams::initialized(used, config.input_dim, config.hidden_dim, streams.init);
  model.config.margin = config.margin;
  model.provenance.seed = config.seed;

  const PositivePairs stage1 = build_stage1_pairs(sets);
  StageRunner runner(model, config);
  Rng rng1(streams.stage1);
  runner.run("stage1", stage1, config.stage1_steps, rng1, result.report);
  model.provenance.stages.push_back("stage1");
  model.provenance.stage1_steps = config.stage1_steps;
  result.report.calibration = recalibrate(model, stage1, config, streams.calibration1);

  const PositivePairs* final_pairs = &stage1;
  PositivePairs stage2;
  if (corpus != nullptr) {
    stage2 = build_stage2_pairs(stage1, *corpus);
    Rng rng2(streams.stage2);
    runner.run("stage2", stage2, config.stage2_steps, rng2, result.report);
    model.provenance.stages.push_back("stage2");
    model.provenance.stage2_steps = config.stage2_steps;
    result.report.calibration = recalibrate(model, stage2, config, streams.calibration2);
    final_pairs = &stage2;
  }

  finish_report(model, *final_pairs, config, Rng(streams.report), result.report);
  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

TrainResult adapt(const FilterModel& model, const ConfusionSets& sets,
                  const LabeledCorpus& corpus, const TrainConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const Streams streams(config.seed);
  TrainResult result{model, {}};
  result.model.config.margin = config.margin;

  const PositivePairs stage2 = build_stage2_pairs(build_stage1_pairs(sets), corpus);
  StageRunner runner(result.model, config);
  Rng rng2(streams.stage2);
  runner.run("stage2", stage2, config.stage2_steps, rng2, result.report);
  result.model.provenance.stages.push_back("stage2");
  result.model.provenance.stage2_steps += config.stage2_steps;
  result.report.calibration = recalibrate(result.model, stage2, config, streams.calibration2);

  finish_report(result.model, stage2, config, Rng(streams.report), result.report);
  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace headfilt
