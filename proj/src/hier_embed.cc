#include "headfilt/hier_embed.h"

#include <cmath>
#include <thread>

#include "headfilt/error.h"
#include "headfilt/random.h"
#include "headfilt/utf8.h"

namespace headfilt {

using Eigen::VectorXd;

EmbedParams::EmbedParams(std::vector<char32_t> components, std::vector<char32_t> operators,
                         int input_dim, int hidden_dim)
    : components_(std::move(components)),
      operators_(std::move(operators)),
      input_dim_(input_dim),
      hidden_dim_(hidden_dim) {
  if (input_dim <= 0 || hidden_dim <= 0) {
    throw Error(ErrorCode::kDimensionMismatch, "embedding dimensions must be positive");
  }
  for (size_t i = 0; i < components_.size(); ++i) {
    if (!component_index_.emplace(components_[i], static_cast<int>(i)).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate component " + codepoint_label(components_[i]));
    }
  }
  for (size_t i = 0; i < operators_.size(); ++i) {
    if (!operator_index_.emplace(operators_[i], static_cast<int>(i)).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate operator " + codepoint_label(operators_[i]));
    }
  }
  values_.assign(gate_offset(kGateInput) + kNumGates * gate_block_size(), 0.0);
}

EmbedParams EmbedParams::initialized(const TreeRegistry& registry, int input_dim,
                                     int hidden_dim, uint64_t seed) {
  std::vector<char32_t> comps(registry.components().begin(), registry.components().end());
  std::vector<char32_t> ops(registry.operators().begin(), registry.operators().end());
  EmbedParams p(std::move(comps), std::move(ops), input_dim, hidden_dim);

  Rng rng(seed);
  auto fill = [&](size_t offset, size_t count, double fan_in, double fan_out) {
    const double s = std::sqrt(6.0 / (fan_in + fan_out));
    for (size_t k = 0; k < count; ++k) p.values_[offset + k] = rng.uniform(-s, s);
  };
  const size_t rows = p.components_.size() + p.operators_.size();
  fill(0, rows * input_dim, static_cast<double>(rows), input_dim);
  const size_t d = hidden_dim;
  for (int g = 0; g < kNumGates; ++g) {
    const auto gate = static_cast<Gate>(g);
    const double fan_in = input_dim + 2.0 * hidden_dim;
    fill(p.gate_w_offset(gate), d * input_dim, fan_in, hidden_dim);
    fill(p.gate_ul_offset(gate), 2 * d * d, fan_in, hidden_dim);
  }
  return p;
}

int EmbedParams::component_row(char32_t c) const {
  auto it = component_index_.find(c);
  return it == component_index_.end() ? -1 : it->second;
}

int EmbedParams::operator_row(char32_t op) const {
  auto it = operator_index_.find(op);
  return it == operator_index_.end() ? -1 : it->second;
}

size_t EmbedParams::gate_block_size() const {
  const size_t d = hidden_dim_;
  return d * input_dim_ + 2 * d * d + d;
}

size_t EmbedParams::gate_offset(Gate g) const {
  return (components_.size() + operators_.size()) * input_dim_ + g * gate_block_size();
}

EmbedParams::ConstVecMap EmbedParams::component_vec(int row) const {
  return ConstVecMap(values_.data() + component_offset(row), input_dim_);
}

EmbedParams::ConstVecMap EmbedParams::operator_vec(int row) const {
  return ConstVecMap(values_.data() + operator_offset(row), input_dim_);
}

EmbedParams::ConstMatMap EmbedParams::w(Gate g) const {
  return ConstMatMap(values_.data() + gate_w_offset(g), hidden_dim_, input_dim_);
}

EmbedParams::ConstMatMap EmbedParams::u_left(Gate g) const {
  return ConstMatMap(values_.data() + gate_ul_offset(g), hidden_dim_, hidden_dim_);
}

EmbedParams::ConstMatMap EmbedParams::u_right(Gate g) const {
  return ConstMatMap(values_.data() + gate_ur_offset(g), hidden_dim_, hidden_dim_);
}

EmbedParams::ConstVecMap EmbedParams::b(Gate g) const {
  return ConstVecMap(values_.data() + gate_b_offset(g), hidden_dim_);
}

void EmbedParams::check_finite() const {
  for (size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw Error(ErrorCode::kNonFiniteInput,
                  "non-finite parameter at flat index " + std::to_string(i));
    }
  }
}

bool EmbedParams::operator==(const EmbedParams& other) const {
  return input_dim_ == other.input_dim_ && hidden_dim_ == other.hidden_dim_ &&
         components_ == other.components_ && operators_ == other.operators_ &&
         values_ == other.values_;
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Post-order record of one forward pass, kept for the reverse sweep.
struct TapeNode {
  size_t x_offset;        // flat offset of the input row
  int left = -1, right = -1;
  VectorXd gate[kNumGates];  // activations: sigmoid for i/f/o, tanh for u
  VectorXd c, h, tanh_c;
};

class Tape {
 public:
  Tape(const CharTree& tree, const EmbedParams& params) : params_(params) {
    nodes_.reserve(tree.node_count());
    record(tree);
  }

  const TapeNode& root() const { return nodes_.back(); }

  void backward(std::span<const double> upstream, std::span<double> grad) const {
    const int d = params_.hidden_dim();
    const int din = params_.input_dim();
    std::vector<VectorXd> dh(nodes_.size(), VectorXd::Zero(d));
    std::vector<VectorXd> dc(nodes_.size(), VectorXd::Zero(d));
    dh.back() = Eigen::Map<const VectorXd>(upstream.data(), d);

    VectorXd dz[kNumGates];
    for (int n = static_cast<int>(nodes_.size()) - 1; n >= 0; --n) {
      const TapeNode& node = nodes_[n];
      const VectorXd zero = VectorXd::Zero(d);
      const VectorXd& c_left = node.left >= 0 ? nodes_[node.left].c : zero;
      const VectorXd& c_right = node.right >= 0 ? nodes_[node.right].c : zero;
      const VectorXd& h_left = node.left >= 0 ? nodes_[node.left].h : zero;
      const VectorXd& h_right = node.right >= 0 ? nodes_[node.right].h : zero;
      const auto& g = node.gate;

      // h = o * tanh(c)
      VectorXd dcell = dc[n].array() +
                       dh[n].array() * g[kGateOutput].array() *
                           (1.0 - node.tanh_c.array().square());
      VectorXd d_out = dh[n].array() * node.tanh_c.array();
      // c = i*u + f_l*c_l + f_r*c_r
      dz[kGateInput] = dcell.array() * g[kGateUpdate].array() *
                       g[kGateInput].array() * (1.0 - g[kGateInput].array());
      dz[kGateUpdate] = dcell.array() * g[kGateInput].array() *
                        (1.0 - g[kGateUpdate].array().square());
      dz[kGateForgetLeft] = dcell.array() * c_left.array() *
                            g[kGateForgetLeft].array() * (1.0 - g[kGateForgetLeft].array());
      dz[kGateForgetRight] = dcell.array() * c_right.array() *
                             g[kGateForgetRight].array() * (1.0 - g[kGateForgetRight].array());
      dz[kGateOutput] = d_out.array() * g[kGateOutput].array() * (1.0 - g[kGateOutput].array());

      Eigen::Map<const VectorXd> x(params_.values().data() + node.x_offset, din);
      Eigen::Map<VectorXd> dx(grad.data() + node.x_offset, din);
      VectorXd dh_left = VectorXd::Zero(d), dh_right = VectorXd::Zero(d);
      for (int k = 0; k < kNumGates; ++k) {
        const auto gate = static_cast<Gate>(k);
        Eigen::Map<Eigen::MatrixXd>(grad.data() + params_.gate_w_offset(gate), d, din)
            .noalias() += dz[k] * x.transpose();
        Eigen::Map<VectorXd>(grad.data() + params_.gate_b_offset(gate), d) += dz[k];
        dx.noalias() += params_.w(gate).transpose() * dz[k];
        if (node.left >= 0) {
          Eigen::Map<Eigen::MatrixXd>(grad.data() + params_.gate_ul_offset(gate), d, d)
              .noalias() += dz[k] * h_left.transpose();
          Eigen::Map<Eigen::MatrixXd>(grad.data() + params_.gate_ur_offset(gate), d, d)
              .noalias() += dz[k] * h_right.transpose();
          dh_left.noalias() += params_.u_left(gate).transpose() * dz[k];
          dh_right.noalias() += params_.u_right(gate).transpose() * dz[k];
        }
      }
      if (node.left >= 0) {
        dh[node.left] += dh_left;
        dh[node.right] += dh_right;
        dc[node.left].array() += dcell.array() * g[kGateForgetLeft].array();
        dc[node.right].array() += dcell.array() * g[kGateForgetRight].array();
      }
    }
  }

 private:
  int record(const CharTree& tree) {
    TapeNode node;
    if (tree.is_leaf()) {
      const int row = params_.component_row(tree.component());
      if (row < 0) {
        throw Error(ErrorCode::kUnknownComponent,
                    codepoint_label(tree.component()) + " (" + utf8_encode(tree.component()) +
                        ") has no component embedding");
      }
      node.x_offset = params_.component_offset(row);
    } else {
      const int row = params_.operator_row(tree.op());
      if (row < 0) {
        throw Error(ErrorCode::kUnknownOperator,
                    codepoint_label(tree.op()) + " has no operator embedding");
      }
      node.x_offset = params_.operator_offset(row);
      node.left = record(tree.left());
      node.right = record(tree.right());
    }
    compute(node);
    nodes_.push_back(std::move(node));
    return static_cast<int>(nodes_.size()) - 1;
  }

  void compute(TapeNode& node) const {
    Eigen::Map<const VectorXd> x(params_.values().data() + node.x_offset, params_.input_dim());
    for (int k = 0; k < kNumGates; ++k) {
      const auto gate = static_cast<Gate>(k);
      VectorXd z = params_.b(gate) + params_.w(gate) * x;
      if (node.left >= 0) {
        z.noalias() += params_.u_left(gate) * nodes_[node.left].h;
        z.noalias() += params_.u_right(gate) * nodes_[node.right].h;
      }
      node.gate[k] = gate == kGateUpdate ? VectorXd(z.array().tanh())
                                         : VectorXd(z.unaryExpr(&sigmoid));
    }
    node.c = node.gate[kGateInput].cwiseProduct(node.gate[kGateUpdate]);
    if (node.left >= 0) {
      node.c.array() += node.gate[kGateForgetLeft].array() * nodes_[node.left].c.array() +
                        node.gate[kGateForgetRight].array() * nodes_[node.right].c.array();
    }
    node.tanh_c = node.c.array().tanh();
    node.h = node.gate[kGateOutput].cwiseProduct(node.tanh_c);
  }

  const EmbedParams& params_;
  std::vector<TapeNode> nodes_;
};

}  // namespace

HierEmbedding embed(const CharTree& tree, const EmbedParams& params) {
  Tape tape(tree, params);
  return {tape.root().h, tape.root().c};
}

void embed_grad_accumulate(const CharTree& tree, const EmbedParams& params,
                           std::span<const double> upstream, std::span<double> grad) {
  if (upstream.size() != static_cast<size_t>(params.hidden_dim())) {
    throw Error(ErrorCode::kDimensionMismatch,
                "upstream has " + std::to_string(upstream.size()) + " entries, hidden dim is " +
                    std::to_string(params.hidden_dim()));
  }
  if (grad.size() != params.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "gradient buffer does not match parameters");
  }
  Tape tape(tree, params);
  tape.backward(upstream, grad);
}

std::vector<double> embed_grad(const CharTree& tree, const EmbedParams& params,
                               std::span<const double> upstream) {
  std::vector<double> grad(params.size(), 0.0);
  embed_grad_accumulate(tree, params, upstream, grad);
  return grad;
}

Eigen::MatrixXd embed_all(const TreeRegistry& registry, const Vocabulary& vocab,
                          const EmbedParams& params, int threads) {
  Eigen::MatrixXd out(vocab.size(), params.hidden_dim());
  auto run = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      const char32_t ch = vocab.at(i);
      try {
        out.row(i) = embed(registry.tree_for(ch), params).h.transpose();
      } catch (const Error& e) {
        throw Error(e.code(), "embedding " + codepoint_label(ch) + " (" + utf8_encode(ch) +
                                  "): " + e.what());
      }
    }
  };
  if (threads <= 1 || vocab.size() < 2) {
    run(0, vocab.size());
    return out;
  }
  const size_t workers = std::min<size_t>(threads, vocab.size());
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (size_t w = 0; w < workers; ++w) {
    const size_t begin = vocab.size() * w / workers, end = vocab.size() * (w + 1) / workers;
    pool.emplace_back([&, w, begin, end] {
      try {
        run(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace headfilt
