#ifndef RRM_TENSOR_HPP
#define RRM_TENSOR_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rrm::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

namespace detail {
struct Node {
  Matrix value;
  Matrix grad; ///< empty until the first backward pass reaches this node
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  /// Pushes this node's grad into its parents. Empty for leaves.
  std::function<void(Node &)> backward;
};
} // namespace detail

/// Rank-2 tensor (rows x cols) in a define-by-run reverse-mode graph. Copies share the node.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(Matrix value, bool requires_grad = false);

  static Tensor constant(Matrix value) { return Tensor(std::move(value), false); }
  static Tensor parameter(Matrix value) { return Tensor(std::move(value), true); }
  static Tensor scalar(double v);

  bool defined() const { return static_cast<bool>(node_); }
  const Matrix &value() const { return node_->value; }
  /// Direct write access for optimizers and checkpoint loading.
  Matrix &mutable_value() { return node_->value; }
  const Matrix &grad() const { return node_->grad; }
  Matrix &mutable_grad() { return node_->grad; }
  bool has_grad() const { return node_->grad.size() == node_->value.size() && node_->value.size() > 0; }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  std::array<Index, 2> shape() const { return {rows(), cols()}; }
  double item() const;

  void zero_grad();
  /// Accumulates d(this)/d(leaf) into every reachable leaf with requires_grad.
  /// Throws ContractViolation unless this tensor is 1x1.
  void backward() const;

  /// Detached copy: same values, no graph, no grad.
  Tensor detach() const { return constant(value()); }

  /// Builds a result node. Internal to the op library.
  static Tensor make_result(Matrix value, std::vector<Tensor> parents, std::function<void(detail::Node &)> backward);

  detail::Node *node() const { return node_.get(); }

private:
  std::shared_ptr<detail::Node> node_;
};

std::string shape_string(const Tensor &t);

// Arithmetic. `add`, `sub` and `mul` broadcast a 1 x c right operand over the rows of the left one.
Tensor matmul(const Tensor &a, const Tensor &b);
Tensor add(const Tensor &a, const Tensor &b);
Tensor sub(const Tensor &a, const Tensor &b);
Tensor mul(const Tensor &a, const Tensor &b);
Tensor div(const Tensor &a, const Tensor &b);
Tensor scale(const Tensor &a, double factor);
Tensor add_scalar(const Tensor &a, double value);
Tensor neg(const Tensor &a);

inline Tensor operator+(const Tensor &a, const Tensor &b) { return add(a, b); }
inline Tensor operator-(const Tensor &a, const Tensor &b) { return sub(a, b); }
inline Tensor operator*(const Tensor &a, double f) { return scale(a, f); }

// Elementwise nonlinearities.
Tensor relu(const Tensor &a);
Tensor sigmoid(const Tensor &a);
Tensor tanh(const Tensor &a);
Tensor exp(const Tensor &a);
Tensor log(const Tensor &a);

// Row-wise normalizations. Masked entries (mask == false) get probability exactly 0;
// a row with no unmasked entry yields all zeros.
Tensor row_softmax(const Tensor &a);
Tensor masked_row_softmax(const Tensor &a, const Mask &mask);
/// log of masked_row_softmax on unmasked entries, 0 on masked ones.
Tensor masked_row_log_softmax(const Tensor &a, const Mask &mask);
/// Row-wise layer normalization with learnable 1 x c gain and bias.
Tensor layer_norm(const Tensor &a, const Tensor &gain, const Tensor &bias, double eps = 1e-5);

// Reductions. axis 0 reduces over rows (result 1 x c), axis 1 over columns (result r x 1).
Tensor sum(const Tensor &a);
Tensor sum(const Tensor &a, int axis);
Tensor mean(const Tensor &a);
Tensor mean(const Tensor &a, int axis);

// Structure.
/// axis 0 stacks rows, axis 1 stacks columns.
Tensor concat(std::span<const Tensor> parts, int axis);
Tensor concat(std::initializer_list<Tensor> parts, int axis);
/// Gathers rows (indices may repeat).
Tensor index_select(const Tensor &a, std::span<const Index> rows);
/// out[index[r]] += a[r]; `n_out` rows in the result.
Tensor index_add(const Tensor &a, std::span<const Index> index, Index n_out);
/// Row-major reshape.
Tensor reshape(const Tensor &a, Index rows, Index cols);
Tensor element(const Tensor &a, Index row, Index col);
Tensor transpose(const Tensor &a);

/// Adam with bias correction. `step()` zeroes the gradients afterwards.
class Adam {
public:
  struct Options {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam(std::vector<Tensor> params, Options opts);

  /// Throws ContractViolation if a parameter has no gradient buffer.
  void step();
  std::int64_t steps() const { return t_; }
  void set_steps(std::int64_t t) { t_ = t; }
  const Options &options() const { return opts_; }

private:
  std::vector<Tensor> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  Options opts_;
  std::int64_t t_ = 0;
};

/// One Adam update of `params` with fresh moments, matching a single-step optimizer.
void adam_step(std::span<Tensor> params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

struct GradCheckReport {
  double max_rel_error = 0.0;
  Index checked = 0;
  Index excluded = 0; ///< coordinates at a kink (one-sided differences disagree)
  bool passed = false;
};

/// Compares backward() against central differences (step h) for every coordinate of `inputs`.
/// The relative error uses max(|analytic|, |numeric|, 1e-4) as denominator. A coordinate counts as a
/// kink, and is excluded, when its one-sided differences jump or its central differences at steps h and
/// h/2 disagree by more than `kink_tol` relative.
GradCheckReport grad_check(const std::function<Tensor(std::span<const Tensor>)> &f, std::span<Tensor> inputs,
                           double tolerance, double h = 1e-5, double kink_tol = 1e-5);

} // namespace rrm::ad

#endif // RRM_TENSOR_HPP
