#ifndef HEADFILT_HIER_EMBED_H_
#define HEADFILT_HIER_EMBED_H_

#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "headfilt/char_tree.h"
#include "headfilt/vocabulary.h"

namespace headfilt {

// Gate transforms of the binary TreeLSTM cell. Each maps
// (x: input_dim, h_left: hidden_dim, h_right: hidden_dim) -> hidden_dim.
enum Gate { kGateInput = 0, kGateForgetLeft, kGateForgetRight, kGateOutput, kGateUpdate, kNumGates };

// Component table, operator table and cell weights, stored in one flat
// buffer so optimizers, gradients and serialization share a layout:
//
//   component rows (n_components x input_dim)
//   operator rows  (n_operators x input_dim)
//   per gate: W (hidden x input), U_left (hidden x hidden),
//             U_right (hidden x hidden), b (hidden)
//
// Matrices are column-major.
class EmbedParams {
 public:
  using MatMap = Eigen::Map<Eigen::MatrixXd>;
  using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
  using VecMap = Eigen::Map<Eigen::VectorXd>;
  using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

  EmbedParams() = default;
  // All-zero parameters. Inventories must not contain duplicates.
  EmbedParams(std::vector<char32_t> components, std::vector<char32_t> operators,
              int input_dim, int hidden_dim);

  // Components and operators of the registry, uniform init in [-s, s] with
  // s = sqrt(6 / (fan_in + fan_out)) per block; biases zero.
  static EmbedParams initialized(const TreeRegistry& registry, int input_dim,
                                 int hidden_dim, uint64_t seed);

  int input_dim() const { return input_dim_; }
  int hidden_dim() const { return hidden_dim_; }
  const std::vector<char32_t>& components() const { return components_; }
  const std::vector<char32_t>& operators() const { return operators_; }

  // Row index in the respective table, or -1.
  int component_row(char32_t c) const;
  int operator_row(char32_t op) const;

  // Offsets into the flat buffer.
  size_t component_offset(int row) const { return static_cast<size_t>(row) * input_dim_; }
  size_t operator_offset(int row) const {
    return (components_.size() + static_cast<size_t>(row)) * input_dim_;
  }
  size_t gate_offset(Gate g) const;
  size_t gate_w_offset(Gate g) const { return gate_offset(g); }
  size_t gate_ul_offset(Gate g) const { return gate_w_offset(g) + size_t(hidden_dim_) * input_dim_; }
  size_t gate_ur_offset(Gate g) const { return gate_ul_offset(g) + size_t(hidden_dim_) * hidden_dim_; }
  size_t gate_b_offset(Gate g) const { return gate_ur_offset(g) + size_t(hidden_dim_) * hidden_dim_; }
  size_t gate_block_size() const;

  size_t size() const { return values_.size(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  ConstVecMap component_vec(int row) const;
  ConstVecMap operator_vec(int row) const;
  ConstMatMap w(Gate g) const;
  ConstMatMap u_left(Gate g) const;
  ConstMatMap u_right(Gate g) const;
  ConstVecMap b(Gate g) const;

  // Throws kNonFiniteInput on NaN/Inf entries.
  void check_finite() const;

  bool operator==(const EmbedParams& other) const;

 private:
  std::vector<char32_t> components_, operators_;
  std::unordered_map<char32_t, int> component_index_, operator_index_;
  int input_dim_ = 0, hidden_dim_ = 0;
  std::vector<double> values_;
};

// Root state of the TreeLSTM pass.
struct HierEmbedding {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

// Bottom-up binary TreeLSTM pass. Leaves take their component vector and zero
// child states; internal nodes take their operator vector and both children's
// states. Errors: kUnknownComponent, kUnknownOperator.
HierEmbedding embed(const CharTree& tree, const EmbedParams& params);

// Gradient of <upstream, h> with respect to every parameter, in the flat
// layout of EmbedParams. Errors as embed, plus kDimensionMismatch when
// upstream.size() != hidden_dim.
std::vector<double> embed_grad(const CharTree& tree, const EmbedParams& params,
                               std::span<const double> upstream);

// Adds the gradient of <upstream, h> into grad (size params.size()).
void embed_grad_accumulate(const CharTree& tree, const EmbedParams& params,
                           std::span<const double> upstream, std::span<double> grad);

// One row per vocabulary character, in vocabulary order. Characters missing
// from the registry use their single-leaf tree. threads <= 1 runs serially;
// the result does not depend on the thread count.
Eigen::MatrixXd embed_all(const TreeRegistry& registry, const Vocabulary& vocab,
                          const EmbedParams& params, int threads = 1);

}  // namespace headfilt

#endif  // HEADFILT_HIER_EMBED_H_
