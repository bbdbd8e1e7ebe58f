#include "rrm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "rrm/errors.hpp"

namespace rrm::ad {

using detail::Node;

Tensor::Tensor(Matrix value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return constant(std::move(m));
}

double Tensor::item() const {
  if (rows() != 1 || cols() != 1)
    throw ContractViolation("item() needs a 1x1 tensor, got " + shape_string(*this));
  return value()(0, 0);
}

void Tensor::zero_grad() {
  if (node_->grad.size() > 0)
    node_->grad.setZero();
}

Tensor Tensor::make_result(Matrix value, std::vector<Tensor> parents, std::function<void(Node &)> backward) {
  Tensor out(std::move(value), false);
  const bool any = std::any_of(parents.begin(), parents.end(), [](const Tensor &p) { return p.requires_grad(); });
  if (any) {
    out.node_->requires_grad = true;
    out.node_->parents.reserve(parents.size());
    for (auto &p : parents)
      out.node_->parents.push_back(p.node_);
    out.node_->backward = std::move(backward);
  }
  return out;
}

void Tensor::backward() const {
  if (rows() != 1 || cols() != 1)
    throw ContractViolation("backward() needs a scalar root, got " + shape_string(*this));
  if (!node_->requires_grad)
    return;

  // Iterative post-order DFS gives a topological order (parents before children).
  std::vector<Node *> order;
  std::unordered_set<Node *> seen;
  std::vector<std::pair<Node *, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto &[node, next] = stack.back();
    if (next < node->parents.size()) {
      Node *parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second)
        stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior gradients are per-pass; leaves accumulate across passes.
  // The first contribution to an emptied grad is assigned rather than added.
  for (Node *n : order)
    if (n->backward)
      n->grad.resize(0, 0);
  if (node_->grad.size() == 0)
    node_->grad = Matrix::Zero(1, 1);
  node_->grad(0, 0) += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node &n = **it;
    if (!n.backward)
      continue;
    if (n.grad.size() == 0)
      n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    n.backward(n);
  }
}

std::string shape_string(const Tensor &t) {
  if (!t.defined())
    return "[undefined]";
  return "[" + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) + "]";
}

namespace {

void accumulate(Node &parent, const Matrix &g) {
  if (!parent.requires_grad)
    return;
  if (parent.grad.size() == 0)
    parent.grad = g;
  else
    parent.grad += g;
}

void accumulate(Node &parent, Matrix &&g) {
  if (!parent.requires_grad)
    return;
  if (parent.grad.size() == 0)
    parent.grad = std::move(g);
  else
    parent.grad += g;
}

template <typename Expr> void accumulate(Node &parent, const Expr &g) {
  if (!parent.requires_grad)
    return;
  if (parent.grad.size() == 0)
    parent.grad = g;
  else
    parent.grad += g;
}

Node &parent(Node &n, std::size_t i) { return *n.parents[i]; }

[[noreturn]] void shape_error(const char *op, const Tensor &a, const Tensor &b) {
  throw ContractViolation(std::string(op) + ": incompatible shapes " + shape_string(a) + " and " + shape_string(b));
}

enum class Broadcast { None, Rows };

Broadcast check_binary(const char *op, const Tensor &a, const Tensor &b) {
  if (a.rows() == b.rows() && a.cols() == b.cols())
    return Broadcast::None;
  if (b.rows() == 1 && b.cols() == a.cols())
    return Broadcast::Rows;
  shape_error(op, a, b);
}

template <typename F, typename D> Tensor unary(const Tensor &a, F &&forward, D &&derivative) {
  Matrix y = forward(a.value());
  return Tensor::make_result(std::move(y), {a}, [derivative](Node &n) {
    const Matrix &x = parent(n, 0).value;
    accumulate(parent(n, 0), Matrix((n.grad.array() * derivative(x.array(), n.value.array())).matrix()));
  });
}

} // namespace

Tensor matmul(const Tensor &a, const Tensor &b) {
  if (a.cols() != b.rows())
    shape_error("matmul", a, b);
  return Tensor::make_result(a.value() * b.value(), {a, b}, [](Node &n) {
    Node &pa = parent(n, 0);
    Node &pb = parent(n, 1);
    if (pa.requires_grad)
      accumulate(pa, Matrix(n.grad * pb.value.transpose()));
    if (pb.requires_grad)
      accumulate(pb, Matrix(pa.value.transpose() * n.grad));
  });
}

Tensor add(const Tensor &a, const Tensor &b) {
  const auto bc = check_binary("add", a, b);
  Matrix y = bc == Broadcast::None ? Matrix(a.value() + b.value()) : Matrix(a.value().rowwise() + b.value().row(0));
  return Tensor::make_result(std::move(y), {a, b}, [bc](Node &n) {
    accumulate(parent(n, 0), n.grad);
    if (bc == Broadcast::None)
      accumulate(parent(n, 1), n.grad);
    else
      accumulate(parent(n, 1), Matrix(n.grad.colwise().sum()));
  });
}

Tensor sub(const Tensor &a, const Tensor &b) {
  const auto bc = check_binary("sub", a, b);
  Matrix y = bc == Broadcast::None ? Matrix(a.value() - b.value()) : Matrix(a.value().rowwise() - b.value().row(0));
  return Tensor::make_result(std::move(y), {a, b}, [bc](Node &n) {
    accumulate(parent(n, 0), n.grad);
    if (bc == Broadcast::None)
      accumulate(parent(n, 1), Matrix(-n.grad));
    else
      accumulate(parent(n, 1), Matrix(-n.grad.colwise().sum()));
  });
}

Tensor mul(const Tensor &a, const Tensor &b) {
  const auto bc = check_binary("mul", a, b);
  Matrix y = bc == Broadcast::None ? Matrix(a.value().cwiseProduct(b.value()))
                                   : Matrix(a.value().array().rowwise() * b.value().row(0).array());
  return Tensor::make_result(std::move(y), {a, b}, [bc](Node &n) {
    Node &pa = parent(n, 0);
    Node &pb = parent(n, 1);
    if (bc == Broadcast::None) {
      if (pa.requires_grad)
        accumulate(pa, Matrix(n.grad.cwiseProduct(pb.value)));
      if (pb.requires_grad)
        accumulate(pb, Matrix(n.grad.cwiseProduct(pa.value)));
    } else {
      if (pa.requires_grad)
        accumulate(pa, Matrix(n.grad.array().rowwise() * pb.value.row(0).array()));
      if (pb.requires_grad)
        accumulate(pb, Matrix(n.grad.cwiseProduct(pa.value).colwise().sum()));
    }
  });
}

Tensor div(const Tensor &a, const Tensor &b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    shape_error("div", a, b);
  return Tensor::make_result(a.value().cwiseQuotient(b.value()), {a, b}, [](Node &n) {
    Node &pa = parent(n, 0);
    Node &pb = parent(n, 1);
    if (pa.requires_grad)
      accumulate(pa, Matrix(n.grad.cwiseQuotient(pb.value)));
    if (pb.requires_grad)
      accumulate(pb, Matrix(-(n.grad.array() * pa.value.array() / pb.value.array().square()).matrix()));
  });
}

Tensor scale(const Tensor &a, double factor) {
  return Tensor::make_result(a.value() * factor, {a}, [factor](Node &n) { accumulate(parent(n, 0), Matrix(n.grad * factor)); });
}

Tensor add_scalar(const Tensor &a, double value) {
  return Tensor::make_result((a.value().array() + value).matrix(), {a},
                             [](Node &n) { accumulate(parent(n, 0), n.grad); });
}

Tensor neg(const Tensor &a) { return scale(a, -1.0); }

Tensor relu(const Tensor &a) {
  return unary(
      a, [](const Matrix &x) { return Matrix(x.cwiseMax(0.0)); },
      [](const auto &x, const auto &) { return (x > 0.0).template cast<double>(); });
}

Tensor sigmoid(const Tensor &a) {
  return unary(
      a, [](const Matrix &x) { return Matrix((1.0 / (1.0 + (-x.array()).exp())).matrix()); },
      [](const auto &, const auto &y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor &a) {
  return unary(
      a, [](const Matrix &x) { return Matrix(x.array().tanh().matrix()); },
      [](const auto &, const auto &y) { return 1.0 - y.square(); });
}

Tensor exp(const Tensor &a) {
  return unary(
      a, [](const Matrix &x) { return Matrix(x.array().exp().matrix()); }, [](const auto &, const auto &y) { return y; });
}

Tensor log(const Tensor &a) {
  return unary(
      a, [](const Matrix &x) { return Matrix(x.array().log().matrix()); },
      [](const auto &x, const auto &) { return x.inverse(); });
}

namespace {

Matrix softmax_rows(const Matrix &x, const Mask *mask) {
  Matrix y = Matrix::Zero(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    double hi = -std::numeric_limits<double>::infinity();
    for (Index c = 0; c < x.cols(); ++c)
      if (!mask || (*mask)(r, c))
        hi = std::max(hi, x(r, c));
    if (hi == -std::numeric_limits<double>::infinity())
      continue;
    double total = 0.0;
    for (Index c = 0; c < x.cols(); ++c)
      if (!mask || (*mask)(r, c)) {
        y(r, c) = std::exp(x(r, c) - hi);
        total += y(r, c);
      }
    y.row(r) /= total;
  }
  return y;
}

Tensor softmax_impl(const Tensor &a, const Mask *mask) {
  Matrix y = softmax_rows(a.value(), mask);
  return Tensor::make_result(std::move(y), {a}, [](Node &n) {
    const Matrix &y = n.value;
    const Eigen::VectorXd dot = n.grad.cwiseProduct(y).rowwise().sum();
    accumulate(parent(n, 0), Matrix(y.array() * (n.grad.colwise() - dot).array()));
  });
}

void check_mask(const Tensor &a, const Mask &mask) {
  if (mask.rows() != a.rows() || mask.cols() != a.cols())
    throw ContractViolation("mask shape [" + std::to_string(mask.rows()) + "x" + std::to_string(mask.cols()) +
                            "] does not match " + shape_string(a));
}

} // namespace

Tensor row_softmax(const Tensor &a) { return softmax_impl(a, nullptr); }

Tensor masked_row_softmax(const Tensor &a, const Mask &mask) {
  check_mask(a, mask);
  return softmax_impl(a, &mask);
}

Tensor masked_row_log_softmax(const Tensor &a, const Mask &mask) {
  check_mask(a, mask);
  const Matrix &x = a.value();
  Matrix y = Matrix::Zero(x.rows(), x.cols());
  Matrix p = Matrix::Zero(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    double hi = -std::numeric_limits<double>::infinity();
    for (Index c = 0; c < x.cols(); ++c)
      if (mask(r, c))
        hi = std::max(hi, x(r, c));
    if (hi == -std::numeric_limits<double>::infinity())
      continue;
    double total = 0.0;
    for (Index c = 0; c < x.cols(); ++c)
      if (mask(r, c))
        total += std::exp(x(r, c) - hi);
    const double lse = hi + std::log(total);
    for (Index c = 0; c < x.cols(); ++c)
      if (mask(r, c)) {
        y(r, c) = x(r, c) - lse;
        p(r, c) = std::exp(y(r, c));
      }
  }
  return Tensor::make_result(std::move(y), {a}, [p, mask](Node &n) {
    Matrix g = Matrix::Zero(n.grad.rows(), n.grad.cols());
    for (Index r = 0; r < g.rows(); ++r) {
      double total = 0.0;
      for (Index c = 0; c < g.cols(); ++c)
        if (mask(r, c))
          total += n.grad(r, c);
      for (Index c = 0; c < g.cols(); ++c)
        if (mask(r, c))
          g(r, c) = n.grad(r, c) - p(r, c) * total;
    }
    accumulate(parent(n, 0), std::move(g));
  });
}

Tensor layer_norm(const Tensor &a, const Tensor &gain, const Tensor &bias, double eps) {
  if (gain.rows() != 1 || gain.cols() != a.cols())
    shape_error("layer_norm gain", a, gain);
  if (bias.rows() != 1 || bias.cols() != a.cols())
    shape_error("layer_norm bias", a, bias);
  const Matrix &x = a.value();
  const Index d = x.cols();
  const Eigen::VectorXd mu = x.rowwise().mean();
  Matrix centered = x.colwise() - mu;
  const Eigen::VectorXd inv_std =
      ((centered.array().square().rowwise().sum() / static_cast<double>(d)) + eps).sqrt().inverse().matrix();
  Matrix xhat = centered.array().colwise() * inv_std.array();
  Matrix y = (xhat.array().rowwise() * gain.value().row(0).array()).rowwise() + bias.value().row(0).array();
  return Tensor::make_result(std::move(y), {a, gain, bias}, [xhat = std::move(xhat), inv_std, d](Node &n) {
    Node &px = parent(n, 0);
    Node &pg = parent(n, 1);
    Node &pb = parent(n, 2);
    if (px.requires_grad) {
      Matrix dxhat = n.grad.array().rowwise() * pg.value.row(0).array();
      const Eigen::VectorXd m1 = dxhat.rowwise().mean();
      const Eigen::VectorXd m2 = dxhat.cwiseProduct(xhat).rowwise().sum() / static_cast<double>(d);
      Matrix dx = ((dxhat.colwise() - m1).array() - xhat.array().colwise() * m2.array()).colwise() * inv_std.array();
      accumulate(px, std::move(dx));
    }
    if (pg.requires_grad)
      accumulate(pg, Matrix(n.grad.cwiseProduct(xhat).colwise().sum()));
    if (pb.requires_grad)
      accumulate(pb, Matrix(n.grad.colwise().sum()));
  });
}

Tensor sum(const Tensor &a) {
  Matrix y(1, 1);
  y(0, 0) = a.value().sum();
  return Tensor::make_result(std::move(y), {a}, [](Node &n) {
    const Node &p = parent(n, 0);
    accumulate(parent(n, 0), Matrix(Matrix::Constant(p.value.rows(), p.value.cols(), n.grad(0, 0))));
  });
}

Tensor sum(const Tensor &a, int axis) {
  if (axis == 0)
    return Tensor::make_result(a.value().colwise().sum(), {a}, [](Node &n) {
      const Index rows = parent(n, 0).value.rows();
      accumulate(parent(n, 0), Matrix(n.grad.replicate(rows, 1)));
    });
  if (axis == 1)
    return Tensor::make_result(a.value().rowwise().sum(), {a}, [](Node &n) {
      const Index cols = parent(n, 0).value.cols();
      accumulate(parent(n, 0), Matrix(n.grad.replicate(1, cols)));
    });
  throw ContractViolation("sum: axis must be 0 or 1");
}

Tensor mean(const Tensor &a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Tensor mean(const Tensor &a, int axis) {
  const Index n = axis == 0 ? a.rows() : a.cols();
  return scale(sum(a, axis), 1.0 / static_cast<double>(n));
}

Tensor concat(std::span<const Tensor> parts, int axis) {
  if (parts.empty())
    throw ContractViolation("concat: no inputs");
  if (axis != 0 && axis != 1)
    throw ContractViolation("concat: axis must be 0 or 1");
  Index rows = 0, cols = 0;
  for (const auto &p : parts) {
    if (axis == 0) {
      if (p.cols() != parts[0].cols())
        shape_error("concat", parts[0], p);
      rows += p.rows();
    } else {
      if (p.rows() != parts[0].rows())
        shape_error("concat", parts[0], p);
      cols += p.cols();
    }
  }
  if (axis == 0)
    cols = parts[0].cols();
  else
    rows = parts[0].rows();

  Matrix y(rows, cols);
  std::vector<Index> offsets;
  Index offset = 0;
  for (const auto &p : parts) {
    offsets.push_back(offset);
    if (axis == 0)
      y.middleRows(offset, p.rows()) = p.value();
    else
      y.middleCols(offset, p.cols()) = p.value();
    offset += axis == 0 ? p.rows() : p.cols();
  }
  std::vector<Tensor> parents(parts.begin(), parts.end());
  return Tensor::make_result(std::move(y), std::move(parents), [offsets, axis](Node &n) {
    for (std::size_t i = 0; i < n.parents.size(); ++i) {
      Node &p = parent(n, i);
      if (!p.requires_grad)
        continue;
      if (axis == 0)
        accumulate(p, Matrix(n.grad.middleRows(offsets[i], p.value.rows())));
      else
        accumulate(p, Matrix(n.grad.middleCols(offsets[i], p.value.cols())));
    }
  });
}

Tensor concat(std::initializer_list<Tensor> parts, int axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

Tensor index_select(const Tensor &a, std::span<const Index> rows) {
  Matrix y(static_cast<Index>(rows.size()), a.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || rows[r] >= a.rows())
      throw ContractViolation("index_select: row " + std::to_string(rows[r]) + " out of range for " + shape_string(a));
    y.row(static_cast<Index>(r)) = a.value().row(rows[r]);
  }
  std::vector<Index> idx(rows.begin(), rows.end());
  return Tensor::make_result(std::move(y), {a}, [idx](Node &n) {
    Node &p = parent(n, 0);
    if (!p.requires_grad)
      return;
    if (p.grad.size() == 0)
      p.grad = Matrix::Zero(p.value.rows(), p.value.cols());
    for (std::size_t r = 0; r < idx.size(); ++r)
      p.grad.row(idx[r]) += n.grad.row(static_cast<Index>(r));
  });
}

Tensor index_add(const Tensor &a, std::span<const Index> index, Index n_out) {
  if (static_cast<Index>(index.size()) != a.rows())
    throw ContractViolation("index_add: " + std::to_string(index.size()) + " indices for " + shape_string(a));
  Matrix y = Matrix::Zero(n_out, a.cols());
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] < 0 || index[r] >= n_out)
      throw ContractViolation("index_add: target row out of range");
    y.row(index[r]) += a.value().row(static_cast<Index>(r));
  }
  std::vector<Index> idx(index.begin(), index.end());
  return Tensor::make_result(std::move(y), {a}, [idx](Node &n) {
    Node &p = parent(n, 0);
    Matrix g(p.value.rows(), p.value.cols());
    for (std::size_t r = 0; r < idx.size(); ++r)
      g.row(static_cast<Index>(r)) = n.grad.row(idx[r]);
    accumulate(p, std::move(g));
  });
}

Tensor reshape(const Tensor &a, Index rows, Index cols) {
  if (rows * cols != a.value().size())
    throw ContractViolation("reshape: cannot view " + shape_string(a) + " as [" + std::to_string(rows) + "x" +
                            std::to_string(cols) + "]");
  Matrix y = Eigen::Map<const Matrix>(a.value().data(), rows, cols);
  return Tensor::make_result(std::move(y), {a}, [](Node &n) {
    const Node &p = parent(n, 0);
    accumulate(parent(n, 0), Matrix(Eigen::Map<const Matrix>(n.grad.data(), p.value.rows(), p.value.cols())));
  });
}

Tensor element(const Tensor &a, Index row, Index col) {
  if (row < 0 || row >= a.rows() || col < 0 || col >= a.cols())
    throw ContractViolation("element: index out of range for " + shape_string(a));
  Matrix y(1, 1);
  y(0, 0) = a.value()(row, col);
  return Tensor::make_result(std::move(y), {a}, [row, col](Node &n) {
    const Node &p = parent(n, 0);
    Matrix g = Matrix::Zero(p.value.rows(), p.value.cols());
    g(row, col) = n.grad(0, 0);
    accumulate(parent(n, 0), std::move(g));
  });
}

Tensor transpose(const Tensor &a) {
  return Tensor::make_result(a.value().transpose(), {a},
                             [](Node &n) { accumulate(parent(n, 0), Matrix(n.grad.transpose())); });
}

Adam::Adam(std::vector<Tensor> params, Options opts) : params_(std::move(params)), opts_(opts) {
  for (const auto &p : params_) {
    m_.push_back(Matrix::Zero(p.rows(), p.cols()));
    v_.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
}

void Adam::step() {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (!params_[i].requires_grad() || !params_[i].has_grad())
      throw ContractViolation("adam: parameter " + std::to_string(i) + " " + shape_string(params_[i]) +
                              " has no gradient");
  ++t_;
  const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto &p = params_[i];
    const Matrix &g = p.grad();
    m_[i] = opts_.beta1 * m_[i] + (1.0 - opts_.beta1) * g;
    v_[i] = opts_.beta2 * v_[i] + (1.0 - opts_.beta2) * g.cwiseProduct(g);
    p.mutable_value().array() -=
        opts_.lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + opts_.eps);
    p.zero_grad();
  }
}

void adam_step(std::span<Tensor> params, double lr, double beta1, double beta2, double eps) {
  Adam opt(std::vector<Tensor>(params.begin(), params.end()), {lr, beta1, beta2, eps});
  opt.step();
}

GradCheckReport grad_check(const std::function<Tensor(std::span<const Tensor>)> &f, std::span<Tensor> inputs,
                           double tolerance, double h, double kink_tol) {
  for (auto &x : inputs) {
    if (!x.requires_grad())
      throw ContractViolation("grad_check: every input must require grad");
    x.zero_grad();
  }
  const Tensor root = f(inputs);
  root.backward();
  std::vector<Matrix> analytic;
  for (const auto &x : inputs)
    analytic.push_back(x.has_grad() ? x.grad() : Matrix::Zero(x.rows(), x.cols()));
  const double f0 = root.item();

  GradCheckReport report;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    Matrix &v = inputs[t].mutable_value();
    for (Index i = 0; i < v.size(); ++i) {
      const double original = v.data()[i];
      v.data()[i] = original + h;
      const double fp = f(inputs).item();
      v.data()[i] = original - h;
      const double fm = f(inputs).item();
      v.data()[i] = original;

      v.data()[i] = original + 0.5 * h;
      const double fp_half = f(inputs).item();
      v.data()[i] = original - 0.5 * h;
      const double fm_half = f(inputs).item();
      v.data()[i] = original;

      const double central = (fp - fm) / (2.0 * h);
      const double central_half = (fp_half - fm_half) / h;
      const double forward = (fp - f0) / h;
      const double backward = (f0 - fm) / h;
      // Smooth coordinates agree across step sizes to O(h^2); a kink inside +-h does not.
      const double scale = std::max({std::abs(central), std::abs(central_half), 1e-4});
      if (std::abs(forward - backward) > 1e-3 * std::max(1.0, std::abs(central)) ||
          std::abs(central - central_half) > kink_tol * scale) {
        ++report.excluded;
        continue;
      }
      const double a = analytic[t].data()[i];
      const double rel = std::abs(a - central) / std::max({std::abs(a), std::abs(central), 1e-4});
      report.max_rel_error = std::max(report.max_rel_error, rel);
      ++report.checked;
    }
  }
  for (auto &x : inputs)
    x.zero_grad();
  report.passed = report.max_rel_error <= tolerance;
  return report;
}

} // namespace rrm::ad
