#include "tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace maskgan {

namespace {

void check(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// C[m,n] += A[m,k] * B[k,n]
void gemm_acc(const double* a, const double* b, double* c, int m, int k,
              int n) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    double* crow = c + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m,n] += A[m,k] * B[n,k]^T
void gemm_nt_acc(const double* a, const double* b, double* c, int m, int k,
                 int n) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    double* crow = c + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* brow = b + static_cast<size_t>(j) * k;
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
      crow[j] += s;
    }
  }
}

// C[k,n] += A[m,k]^T * B[m,n]
void gemm_tn_acc(const double* a, const double* b, double* c, int m, int k,
                 int n) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    const double* brow = b + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      double av = arow[p];
      if (av == 0.0) continue;
      double* crow = c + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

Tensor unary_op(const Tensor& a, const std::function<double(double)>& fwd,
                const std::function<double(double, double)>& dfdx_times_g) {
  Tensor out = make_op(a.rows(), a.cols(), {a});
  auto* on = out.node();
  auto* an = a.node();
  for (size_t i = 0; i < an->size(); ++i) on->val[i] = fwd(an->val[i]);
  if (on->requires_grad) {
    on->backprop = [on, an, dfdx_times_g]() {
      if (!an->requires_grad) return;
      for (size_t i = 0; i < an->val.size(); ++i)
        an->grad[i] += dfdx_times_g(an->val[i], on->grad[i]);
    };
  }
  return out;
}

}  // namespace

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) {
  check(rows > 0 && cols > 0, "zeros: dims must be positive");
  Tensor t;
  t.node_ = std::make_shared<Node>();
  t.node_->rows = rows;
  t.node_->cols = cols;
  t.node_->val.assign(static_cast<size_t>(rows) * cols, 0.0);
  t.node_->grad.assign(t.node_->val.size(), 0.0);
  t.node_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::constant(int rows, int cols, double fill) {
  Tensor t = zeros(rows, cols, false);
  std::fill(t.node_->val.begin(), t.node_->val.end(), fill);
  return t;
}

Tensor Tensor::from(int rows, int cols, std::vector<double> values,
                    bool requires_grad) {
  check(values.size() == static_cast<size_t>(rows) * cols,
        "from: value count does not match shape");
  Tensor t = zeros(rows, cols, requires_grad);
  t.node_->val = std::move(values);
  return t;
}

Tensor Tensor::param(int rows, int cols, int fan_in, Rng& rng) {
  Tensor t = zeros(rows, cols, true);
  double bound = 1.0 / std::sqrt(static_cast<double>(std::max(1, fan_in)));
  for (auto& v : t.node_->val) v = rng.uniform(-bound, bound);
  t.round_to_float32();
  return t;
}

double Tensor::item() const {
  check(node_ != nullptr, "item: undefined tensor");
  check(is_scalar(), "item: tensor is not scalar");
  return node_->val[0];
}

void Tensor::round_to_float32() {
  for (auto& v : node_->val) v = static_cast<double>(static_cast<float>(v));
}

Tensor make_op(int rows, int cols, std::vector<Tensor> parents) {
  Tensor t = Tensor::zeros(rows, cols, false);
  auto* n = t.node();
  for (auto& p : parents) {
    if (p.requires_grad()) n->requires_grad = true;
    n->parents.push_back(p.shared_node());
  }
  return t;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check(a.cols() == b.rows(), "matmul: inner dims mismatch");
  Tensor out = make_op(a.rows(), b.cols(), {a, b});
  auto *on = out.node(), *an = a.node(), *bn = b.node();
  gemm_acc(an->val.data(), bn->val.data(), on->val.data(), an->rows, an->cols,
           bn->cols);
  if (on->requires_grad) {
    on->backprop = [on, an, bn]() {
      if (an->requires_grad)
        gemm_nt_acc(on->grad.data(), bn->val.data(), an->grad.data(), on->rows,
                    on->cols, an->cols);
      if (bn->requires_grad)
        gemm_tn_acc(an->val.data(), on->grad.data(), bn->grad.data(), an->rows,
                    an->cols, on->cols);
    };
  }
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  check(a.cols() == b.cols(), "matmul_nt: inner dims mismatch");
  Tensor out = make_op(a.rows(), b.rows(), {a, b});
  auto *on = out.node(), *an = a.node(), *bn = b.node();
  gemm_nt_acc(an->val.data(), bn->val.data(), on->val.data(), an->rows,
              an->cols, bn->rows);
  if (on->requires_grad) {
    on->backprop = [on, an, bn]() {
      if (an->requires_grad)
        gemm_acc(on->grad.data(), bn->val.data(), an->grad.data(), on->rows,
                 on->cols, bn->cols);
      if (bn->requires_grad)
        gemm_tn_acc(on->grad.data(), an->val.data(), bn->grad.data(), on->rows,
                    on->cols, an->cols);
    };
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  Tensor out = make_op(a.rows(), a.cols(), {a, b});
  auto *on = out.node(), *an = a.node(), *bn = b.node();
  for (size_t i = 0; i < on->size(); ++i) on->val[i] = an->val[i] + bn->val[i];
  if (on->requires_grad) {
    on->backprop = [on, an, bn]() {
      for (size_t i = 0; i < on->val.size(); ++i) {
        if (an->requires_grad) an->grad[i] += on->grad[i];
        if (bn->requires_grad) bn->grad[i] += on->grad[i];
      }
    };
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
  Tensor out = make_op(a.rows(), a.cols(), {a, b});
  auto *on = out.node(), *an = a.node(), *bn = b.node();
  for (size_t i = 0; i < on->size(); ++i) on->val[i] = an->val[i] - bn->val[i];
  if (on->requires_grad) {
    on->backprop = [on, an, bn]() {
      for (size_t i = 0; i < on->val.size(); ++i) {
        if (an->requires_grad) an->grad[i] += on->grad[i];
        if (bn->requires_grad) bn->grad[i] -= on->grad[i];
      }
    };
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(), "mul: shape mismatch");
  Tensor out = make_op(a.rows(), a.cols(), {a, b});
  auto *on = out.node(), *an = a.node(), *bn = b.node();
  for (size_t i = 0; i < on->size(); ++i) on->val[i] = an->val[i] * bn->val[i];
  if (on->requires_grad) {
    on->backprop = [on, an, bn]() {
      for (size_t i = 0; i < on->val.size(); ++i) {
        if (an->requires_grad) an->grad[i] += on->grad[i] * bn->val[i];
        if (bn->requires_grad) bn->grad[i] += on->grad[i] * an->val[i];
      }
    };
  }
  return out;
}

Tensor scale(const Tensor& a, double s) {
  return unary_op(
      a, [s](double x) { return s * x; },
      [s](double, double g) { return s * g; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary_op(
      a, [s](double x) { return x + s; }, [](double, double g) { return g; });
}

Tensor add_bias(const Tensor& a, const Tensor& bias) {
  check(bias.rows() == 1 && bias.cols() == a.cols(),
        "add_bias: bias must be [1, cols]");
  Tensor out = make_op(a.rows(), a.cols(), {a, bias});
  auto *on = out.node(), *an = a.node(), *bn = bias.node();
  for (int r = 0; r < an->rows; ++r)
    for (int c = 0; c < an->cols; ++c)
      on->val[static_cast<size_t>(r) * an->cols + c] =
          an->val[static_cast<size_t>(r) * an->cols + c] + bn->val[c];
  if (on->requires_grad) {
    on->backprop = [on, an, bn]() {
      for (int r = 0; r < on->rows; ++r)
        for (int c = 0; c < on->cols; ++c) {
          double g = on->grad[static_cast<size_t>(r) * on->cols + c];
          if (an->requires_grad)
            an->grad[static_cast<size_t>(r) * on->cols + c] += g;
          if (bn->requires_grad) bn->grad[c] += g;
        }
    };
  }
  return out;
}

Tensor scale_rows(const Tensor& a, const Tensor& col) {
  check(col.cols() == 1 && col.rows() == a.rows(),
        "scale_rows: scaler must be [rows, 1]");
  Tensor out = make_op(a.rows(), a.cols(), {a, col});
  auto *on = out.node(), *an = a.node(), *cn = col.node();
  for (int r = 0; r < an->rows; ++r) {
    double s = cn->val[r];
    for (int c = 0; c < an->cols; ++c)
      on->val[static_cast<size_t>(r) * an->cols + c] =
          s * an->val[static_cast<size_t>(r) * an->cols + c];
  }
  if (on->requires_grad) {
    on->backprop = [on, an, cn]() {
      for (int r = 0; r < on->rows; ++r) {
        double s = cn->val[r];
        double acc = 0.0;
        for (int c = 0; c < on->cols; ++c) {
          size_t i = static_cast<size_t>(r) * on->cols + c;
          if (an->requires_grad) an->grad[i] += s * on->grad[i];
          acc += on->grad[i] * an->val[i];
        }
        if (cn->requires_grad) cn->grad[r] += acc;
      }
    };
  }
  return out;
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double x, double g) {
        double y = 1.0 / (1.0 + std::exp(-x));
        return g * y * (1.0 - y);
      });
}

Tensor tanh_t(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::tanh(x); },
      [](double x, double g) {
        double y = std::tanh(x);
        return g * (1.0 - y * y);
      });
}

Tensor relu(const Tensor& a) {
  return unary_op(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double g) { return x > 0.0 ? g : 0.0; });
}

Tensor log_t(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::log(x); },
      [](double x, double g) { return g / x; });
}

Tensor exp_t(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::exp(x); },
      [](double x, double g) { return g * std::exp(x); });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  check(lo < hi, "clamp: lo must be < hi");
  return unary_op(
      a, [lo, hi](double x) { return std::min(hi, std::max(lo, x)); },
      [lo, hi](double x, double g) { return (x > lo && x < hi) ? g : 0.0; });
}

Tensor softmax_rows(const Tensor& a) {
  Tensor out = make_op(a.rows(), a.cols(), {a});
  auto *on = out.node(), *an = a.node();
  int n = an->cols;
  for (int r = 0; r < an->rows; ++r) {
    const double* x = an->val.data() + static_cast<size_t>(r) * n;
    double* y = on->val.data() + static_cast<size_t>(r) * n;
    double mx = *std::max_element(x, x + n);
    double z = 0.0;
    for (int c = 0; c < n; ++c) z += (y[c] = std::exp(x[c] - mx));
    for (int c = 0; c < n; ++c) y[c] /= z;
  }
  if (on->requires_grad) {
    on->backprop = [on, an]() {
      if (!an->requires_grad) return;
      int n = on->cols;
      for (int r = 0; r < on->rows; ++r) {
        const double* y = on->val.data() + static_cast<size_t>(r) * n;
        const double* g = on->grad.data() + static_cast<size_t>(r) * n;
        double* dx = an->grad.data() + static_cast<size_t>(r) * n;
        double dot = 0.0;
        for (int c = 0; c < n; ++c) dot += g[c] * y[c];
        for (int c = 0; c < n; ++c) dx[c] += y[c] * (g[c] - dot);
      }
    };
  }
  return out;
}

Tensor log_softmax_rows(const Tensor& a) {
  Tensor out = make_op(a.rows(), a.cols(), {a});
  auto *on = out.node(), *an = a.node();
  int n = an->cols;
  for (int r = 0; r < an->rows; ++r) {
    const double* x = an->val.data() + static_cast<size_t>(r) * n;
    double* y = on->val.data() + static_cast<size_t>(r) * n;
    double mx = *std::max_element(x, x + n);
    double z = 0.0;
    for (int c = 0; c < n; ++c) z += std::exp(x[c] - mx);
    double lz = mx + std::log(z);
    for (int c = 0; c < n; ++c) y[c] = x[c] - lz;
  }
  if (on->requires_grad) {
    on->backprop = [on, an]() {
      if (!an->requires_grad) return;
      int n = on->cols;
      for (int r = 0; r < on->rows; ++r) {
        const double* y = on->val.data() + static_cast<size_t>(r) * n;
        const double* g = on->grad.data() + static_cast<size_t>(r) * n;
        double* dx = an->grad.data() + static_cast<size_t>(r) * n;
        double gsum = 0.0;
        for (int c = 0; c < n; ++c) gsum += g[c];
        for (int c = 0; c < n; ++c) dx[c] += g[c] - std::exp(y[c]) * gsum;
      }
    };
  }
  return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  check(!parts.empty(), "concat_cols: no inputs");
  int rows = parts[0].rows();
  int cols = 0;
  for (const auto& p : parts) {
    check(p.rows() == rows, "concat_cols: row mismatch");
    cols += p.cols();
  }
  Tensor out = make_op(rows, cols, parts);
  auto* on = out.node();
  int off = 0;
  for (const auto& p : parts) {
    const auto* pn = p.node();
    for (int r = 0; r < rows; ++r)
      std::copy(pn->val.begin() + static_cast<size_t>(r) * pn->cols,
                pn->val.begin() + static_cast<size_t>(r + 1) * pn->cols,
                on->val.begin() + static_cast<size_t>(r) * cols + off);
    off += p.cols();
  }
  if (on->requires_grad) {
    std::vector<Tensor::Node*> pns;
    for (const auto& p : parts) pns.push_back(p.node());
    on->backprop = [on, pns]() {
      int off = 0;
      for (auto* pn : pns) {
        if (pn->requires_grad)
          for (int r = 0; r < on->rows; ++r)
            for (int c = 0; c < pn->cols; ++c)
              pn->grad[static_cast<size_t>(r) * pn->cols + c] +=
                  on->grad[static_cast<size_t>(r) * on->cols + off + c];
        off += pn->cols;
      }
    };
  }
  return out;
}

Tensor slice_cols(const Tensor& a, int c0, int c1) {
  check(0 <= c0 && c0 < c1 && c1 <= a.cols(), "slice_cols: bad range");
  Tensor out = make_op(a.rows(), c1 - c0, {a});
  auto *on = out.node(), *an = a.node();
  for (int r = 0; r < an->rows; ++r)
    std::copy(an->val.begin() + static_cast<size_t>(r) * an->cols + c0,
              an->val.begin() + static_cast<size_t>(r) * an->cols + c1,
              on->val.begin() + static_cast<size_t>(r) * on->cols);
  if (on->requires_grad) {
    on->backprop = [on, an, c0]() {
      if (!an->requires_grad) return;
      for (int r = 0; r < on->rows; ++r)
        for (int c = 0; c < on->cols; ++c)
          an->grad[static_cast<size_t>(r) * an->cols + c0 + c] +=
              on->grad[static_cast<size_t>(r) * on->cols + c];
    };
  }
  return out;
}

Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
  check(!ids.empty(), "embedding_lookup: no ids");
  for (int id : ids)
    check(id >= 0 && id < table.rows(), "embedding_lookup: id out of range");
  Tensor out =
      make_op(static_cast<int>(ids.size()), table.cols(), {table});
  auto *on = out.node(), *tn = table.node();
  int e = tn->cols;
  for (size_t r = 0; r < ids.size(); ++r)
    std::copy(tn->val.begin() + static_cast<size_t>(ids[r]) * e,
              tn->val.begin() + static_cast<size_t>(ids[r] + 1) * e,
              on->val.begin() + r * e);
  if (on->requires_grad) {
    on->backprop = [on, tn, ids]() {
      if (!tn->requires_grad) return;
      int e = tn->cols;
      for (size_t r = 0; r < ids.size(); ++r)
        for (int c = 0; c < e; ++c)
          tn->grad[static_cast<size_t>(ids[r]) * e + c] +=
              on->grad[r * e + c];
    };
  }
  return out;
}

Tensor dropout(const Tensor& a, double p, Rng& rng, bool training) {
  check(p >= 0.0 && p < 1.0, "dropout: p must be in [0,1)");
  if (!training || p == 0.0) return a;
  Tensor out = make_op(a.rows(), a.cols(), {a});
  auto *on = out.node(), *an = a.node();
  auto keep = std::make_shared<std::vector<uint8_t>>(an->size());
  double inv = 1.0 / (1.0 - p);
  for (size_t i = 0; i < an->size(); ++i) {
    (*keep)[i] = rng.uniform() >= p;
    on->val[i] = (*keep)[i] ? an->val[i] * inv : 0.0;
  }
  if (on->requires_grad) {
    on->backprop = [on, an, keep, inv]() {
      if (!an->requires_grad) return;
      for (size_t i = 0; i < on->val.size(); ++i)
        if ((*keep)[i]) an->grad[i] += on->grad[i] * inv;
    };
  }
  return out;
}

Tensor sum(const Tensor& a) {
  Tensor out = make_op(1, 1, {a});
  auto *on = out.node(), *an = a.node();
  double s = 0.0;
  for (double v : an->val) s += v;
  on->val[0] = s;
  if (on->requires_grad) {
    on->backprop = [on, an]() {
      if (!an->requires_grad) return;
      for (auto& g : an->grad) g += on->grad[0];
    };
  }
  return out;
}

Tensor mean(const Tensor& a) {
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor gather_cols(const Tensor& a, const std::vector<int>& idx) {
  check(idx.size() == static_cast<size_t>(a.rows()),
        "gather_cols: one index per row required");
  for (int i : idx) check(i >= 0 && i < a.cols(), "gather_cols: out of range");
  Tensor out = make_op(a.rows(), 1, {a});
  auto *on = out.node(), *an = a.node();
  for (int r = 0; r < an->rows; ++r)
    on->val[r] = an->val[static_cast<size_t>(r) * an->cols + idx[r]];
  if (on->requires_grad) {
    on->backprop = [on, an, idx]() {
      if (!an->requires_grad) return;
      for (int r = 0; r < on->rows; ++r)
        an->grad[static_cast<size_t>(r) * an->cols + idx[r]] += on->grad[r];
    };
  }
  return out;
}

void backward(const Tensor& loss) {
  check(loss.is_scalar(), "backward: loss must be scalar");
  // Iterative post-order DFS over parents.
  std::vector<Tensor::Node*> order;
  std::unordered_set<Tensor::Node*> seen;
  std::vector<std::pair<Tensor::Node*, size_t>> stack;
  stack.emplace_back(loss.node(), 0);
  seen.insert(loss.node());
  while (!stack.empty()) {
    auto& [n, i] = stack.back();
    if (i < n->parents.size()) {
      Tensor::Node* p = n->parents[i++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  loss.node()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backprop) (*it)->backprop();
}

double grad_check(const std::function<Tensor()>& f, std::vector<Tensor> params,
                  double eps) {
  check(eps >= 1e-7 && eps <= 1e-3, "grad_check: eps outside [1e-7, 1e-3]");
  for (auto& p : params) p.zero_grad();
  Tensor loss = f();
  check(std::isfinite(loss.item()), "grad_check: non-finite loss");
  backward(loss);
  std::vector<std::vector<double>> analytic;
  for (auto& p : params)
    analytic.emplace_back(p.grads().begin(), p.grads().end());
  double max_rel = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto vals = params[pi].values();
    for (size_t i = 0; i < vals.size(); ++i) {
      double orig = vals[i];
      vals[i] = orig + eps;
      double fp = f().item();
      vals[i] = orig - eps;
      double fm = f().item();
      vals[i] = orig;
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw std::runtime_error("grad_check: non-finite evaluation");
      double num = (fp - fm) / (2.0 * eps);
      double ana = analytic[pi][i];
      double rel = std::abs(ana - num) / std::max(1.0, std::abs(ana));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace maskgan
