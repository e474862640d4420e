#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rng.hpp"

namespace maskgan {

// Dense 2-D tensor with reverse-mode differentiation. A Tensor is a cheap
// handle to a shared node; ops build a dynamic graph and backward() walks it
// in reverse topological order. All storage is double; model parameters are
// rounded to float32 after every update so checkpoints round-trip bit-exact.
class Tensor {
 public:
  struct Node {
    int rows = 0, cols = 0;
    std::vector<double> val;
    std::vector<double> grad;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void()> backprop;  // pulls node->grad into parents
    bool requires_grad = false;
    size_t size() const { return val.size(); }
  };

  Tensor() = default;

  static Tensor zeros(int rows, int cols, bool requires_grad = false);
  static Tensor constant(int rows, int cols, double fill);
  static Tensor from(int rows, int cols, std::vector<double> values,
                     bool requires_grad = false);
  // Leaf parameter, uniform init in +-1/sqrt(fan_in), rounded to float32.
  static Tensor param(int rows, int cols, int fan_in, Rng& rng);

  bool defined() const { return node_ != nullptr; }
  int rows() const { return node_->rows; }
  int cols() const { return node_->cols; }
  size_t size() const { return node_->val.size(); }
  bool is_scalar() const { return rows() == 1 && cols() == 1; }
  bool requires_grad() const { return node_->requires_grad; }

  double at(int r, int c) const { return node_->val[idx(r, c)]; }
  double& at(int r, int c) { return node_->val[idx(r, c)]; }
  double item() const;
  double grad_at(int r, int c) const { return node_->grad[idx(r, c)]; }

  std::span<double> values() { return node_->val; }
  std::span<const double> values() const { return node_->val; }
  std::span<double> grads() { return node_->grad; }
  std::span<const double> grads() const { return node_->grad; }

  void zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }
  // Snap every value to the nearest float32. Used for parameters so that the
  // float32 checkpoint format is lossless.
  void round_to_float32();

  Node* node() const { return node_.get(); }
  std::shared_ptr<Node> shared_node() const { return node_; }

 private:
  size_t idx(int r, int c) const {
    return static_cast<size_t>(r) * node_->cols + c;
  }
  std::shared_ptr<Node> node_;
  friend Tensor make_op(int rows, int cols,
                        std::vector<Tensor> parents);
};

// Internal: allocate a non-leaf node whose requires_grad is inherited.
Tensor make_op(int rows, int cols, std::vector<Tensor> parents);

// ---- forward ops ----
Tensor matmul(const Tensor& a, const Tensor& b);
// a * b^T without materializing the transpose.
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
// a[m,n] + bias[1,n], broadcast over rows.
Tensor add_bias(const Tensor& a, const Tensor& bias);
// a[m,n] * col[m,1], broadcast over columns.
Tensor scale_rows(const Tensor& a, const Tensor& col);
Tensor sigmoid(const Tensor& a);
Tensor tanh_t(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor log_t(const Tensor& a);
Tensor exp_t(const Tensor& a);
// Clamp values to [lo, hi]; gradient is passed through inside the range only.
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor softmax_rows(const Tensor& a);
Tensor log_softmax_rows(const Tensor& a);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& a, int c0, int c1);
// table[V,E] indexed by ids -> [ids.size(), E]; backward scatter-adds.
Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids);
// Inverted dropout: survivors scaled by 1/(1-p). Identity when !training.
Tensor dropout(const Tensor& a, double p, Rng& rng, bool training);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// Per-row gather: out[r,0] = a[r, idx[r]].
Tensor gather_cols(const Tensor& a, const std::vector<int>& idx);

// Reverse-mode sweep from a scalar loss. Gradients accumulate; callers reset
// leaf grads between steps.
void backward(const Tensor& loss);

// Max over params of |analytic - central difference| / max(1, |analytic|).
// f must rebuild its graph on every call. eps must lie in [1e-7, 1e-3].
double grad_check(const std::function<Tensor()>& f, std::vector<Tensor> params,
                  double eps = 1e-5);

}  // namespace maskgan
