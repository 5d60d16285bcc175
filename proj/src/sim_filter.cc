#include "headfilt/sim_filter.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "headfilt/error.h"
#include "headfilt/utf8.h"

namespace headfilt {

using Eigen::VectorXd;

void FilterConfig::validate() const {
  if (!(margin > 0.0 && margin < 2.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "margin must lie in (0, 2), got " + std::to_string(margin));
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw Error(ErrorCode::kInvalidArgument, "beta must be positive, got " + std::to_string(beta));
  }
}

void ConfusionSets::add(char32_t head, char32_t member) {
  auto& set = sets_[head];
  if (member != head) set.insert(member);
}

const std::set<char32_t>* ConfusionSets::find(char32_t head) const {
  auto it = sets_.find(head);
  return it == sets_.end() ? nullptr : &it->second;
}

std::u32string ConfusionSets::characters() const {
  std::set<char32_t> all;
  for (const auto& [head, members] : sets_) {
    all.insert(head);
    all.insert(members.begin(), members.end());
  }
  return std::u32string(all.begin(), all.end());
}

ConfusionSets parse_confusion_sets(std::string_view contents) {
  ConfusionSets sets;
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

    std::u32string chars;
    try {
      chars = utf8_decode(line);
    } catch (const Error& e) {
      throw Error(ErrorCode::kFormatError, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (chars.size() < 2 || chars[1] != U':') {
      throw Error(ErrorCode::kFormatError,
                  "line " + std::to_string(line_no) + ": expected `head:members`");
    }
    const char32_t head = chars[0];
    sets.add(head, head);  // registers the head even with no members
    for (size_t k = 2; k < chars.size(); ++k) {
      if (chars[k] == U' ' || chars[k] == U'\t') continue;
      sets.add(head, chars[k]);
    }
  }
  return sets;
}

ConfusionSets load_confusion_sets(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open confusion sets " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_confusion_sets(buf.str());
}

namespace {

VectorXd normalized(const Eigen::Ref<const VectorXd>& h) {
  return h / std::max(h.norm(), kNormFloor);
}

void require_finite(const Eigen::Ref<const VectorXd>& h) {
  if (!h.allFinite()) throw Error(ErrorCode::kNonFiniteInput, "embedding has NaN or Inf");
}

}  // namespace

double distance(const Eigen::Ref<const VectorXd>& h_a, const Eigen::Ref<const VectorXd>& h_b) {
  require_finite(h_a);
  require_finite(h_b);
  if (h_a.size() != h_b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "embeddings differ in dimension");
  }
  return std::min(2.0, (normalized(h_a) - normalized(h_b)).norm());
}

void distance_grad(const Eigen::Ref<const VectorXd>& h_a, const Eigen::Ref<const VectorXd>& h_b,
                   VectorXd* grad_a, VectorXd* grad_b) {
  const double norm_a = std::max(h_a.norm(), kNormFloor);
  const double norm_b = std::max(h_b.norm(), kNormFloor);
  const VectorXd u_a = h_a / norm_a, u_b = h_b / norm_b;
  const VectorXd diff = u_a - u_b;
  const double d = diff.norm();
  if (d == 0.0) {
    *grad_a = VectorXd::Zero(h_a.size());
    *grad_b = VectorXd::Zero(h_b.size());
    return;
  }
  const VectorXd e = diff / d;
  // d(h/|h|)/dh = (I - u u^T) / |h|; below the norm floor the map is linear.
  *grad_a = h_a.norm() > kNormFloor ? VectorXd((e - u_a * u_a.dot(e)) / norm_a)
                                    : VectorXd(e / norm_a);
  *grad_b = h_b.norm() > kNormFloor ? VectorXd(-(e - u_b * u_b.dot(e)) / norm_b)
                                    : VectorXd(-e / norm_b);
}

double similarity(double d, const FilterConfig& config) {
  const double z = std::clamp(config.beta * (d - config.margin), -kExpClamp, kExpClamp);
  return 1.0 / (1.0 + std::exp(z));
}

Calibration calibrate_beta(const Eigen::MatrixXd& embeddings,
                           std::span<const std::pair<size_t, size_t>> pairs, size_t vocab_size,
                           double margin) {
  if (pairs.empty()) {
    throw Error(ErrorCode::kDegenerateCalibration, "no dissimilar pairs to calibrate on");
  }
  const Eigen::MatrixXd unit = normalize_rows(embeddings);
  double sum = 0.0;
  for (const auto& [a, b] : pairs) {
    sum += std::min(2.0, (unit.row(a) - unit.row(b)).norm());
  }
  const double d_star = sum / static_cast<double>(pairs.size());
  if (!(d_star > margin)) {
    throw Error(ErrorCode::kDegenerateCalibration,
                "mean dissimilar distance " + std::to_string(d_star) +
                    " does not exceed the margin " + std::to_string(margin) +
                    "; train longer or set beta explicitly");
  }
  const double n = static_cast<double>(std::max<size_t>(vocab_size, 2));
  const double raw = std::log(n - 1.0) / (d_star - margin);
  return {std::clamp(raw, kBetaMin, kBetaMax), raw, d_star, pairs.size()};
}

Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& embeddings) {
  if (!embeddings.allFinite()) throw Error(ErrorCode::kNonFiniteInput, "embedding has NaN or Inf");
  Eigen::MatrixXd unit = embeddings;
  for (Eigen::Index i = 0; i < unit.rows(); ++i) {
    unit.row(i) /= std::max(unit.row(i).norm(), kNormFloor);
  }
  return unit;
}

SimilarityVector headfilt_vector(char32_t ch, const Vocabulary& vocab,
                                 const Eigen::MatrixXd& embeddings, const FilterConfig& config) {
  const size_t self = vocab.index(ch);
  if (static_cast<size_t>(embeddings.rows()) != vocab.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "embedding rows do not match the vocabulary");
  }
  const VectorXd h = embeddings.row(self).transpose();
  SimilarityVector out{SimilarityVector::Kind::kReal, std::vector<double>(vocab.size())};
  for (size_t k = 0; k < vocab.size(); ++k) {
    out.values[k] = similarity(distance(h, embeddings.row(k).transpose()), config);
  }
  return out;
}

SimilarityVector confusion_vector(char32_t ch, const ConfusionSets& sets, const Vocabulary& vocab,
                                  size_t* ignored) {
  SimilarityVector out{SimilarityVector::Kind::kBinary, std::vector<double>(vocab.size(), 0.0)};
  out.values[vocab.index(ch)] = 1.0;
  if (const auto* members = sets.find(ch)) {
    for (char32_t m : *members) {
      if (auto idx = vocab.find(m)) {
        out.values[*idx] = 1.0;
      } else if (ignored != nullptr) {
        ++*ignored;
      }
    }
  }
  return out;
}

}  // namespace headfilt
