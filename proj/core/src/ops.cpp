#include "groundsel/ops.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include "groundsel/error.hpp"

#ifdef GROUNDSEL_WITH_CBLAS
#include <cblas.h>
extern "C" void openblas_set_num_threads(int);
#endif

namespace groundsel {

namespace {

constexpr double kLogClamp = 1e-12;

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ContractError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
}

void accumulate(Tensor t, std::span<const double> g) {
  auto dst = t.mutable_grad();
  for (size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
}

// dims split for a reduction along `axis`: x[o, j, i] with j the reduced axis.
struct AxisSplit {
  int64_t outer, n, inner;
};

AxisSplit split_axis(const Tensor& x, int axis) {
  if (axis < 0 || axis >= x.rank()) {
    throw ContractError("reduce axis " + std::to_string(axis) + " out of range for " + x.shape_str());
  }
  AxisSplit s{1, x.dim(axis), 1};
  for (int i = 0; i < axis; ++i) s.outer *= x.dim(i);
  for (int i = axis + 1; i < x.rank(); ++i) s.inner *= x.dim(i);
  return s;
}

std::vector<int64_t> drop_axis(const std::vector<int64_t>& shape, int axis) {
  std::vector<int64_t> out;
  for (int i = 0; i < static_cast<int>(shape.size()); ++i) {
    if (i != axis) out.push_back(shape[i]);
  }
  if (out.empty()) out.push_back(1);
  return out;
}

void matmul_kernel(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
                   bool transpose_a, bool transpose_b, double beta) {
#ifdef GROUNDSEL_WITH_CBLAS
  static std::once_flag once;
  std::call_once(once, [] { openblas_set_num_threads(1); });
  cblas_dgemm(CblasRowMajor, transpose_a ? CblasTrans : CblasNoTrans,
              transpose_b ? CblasTrans : CblasNoTrans, static_cast<int>(m), static_cast<int>(n),
              static_cast<int>(k), 1.0, a, static_cast<int>(transpose_a ? m : k), b,
              static_cast<int>(transpose_b ? k : n), beta, c, static_cast<int>(n));
#else
  // Blocked i-k-j kernel; a is [m x k] (or [k x m] when transposed), b is
  // [k x n] (or [n x k]). beta in {0, 1}.
  if (beta == 0.0) std::fill(c, c + m * n, 0.0);
  auto at = [&](int64_t i, int64_t p) { return transpose_a ? a[p * m + i] : a[i * k + p]; };
  auto bt = [&](int64_t p, int64_t j) { return transpose_b ? b[j * k + p] : b[p * n + j]; };
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t p = 0; p < k; ++p) {
      const double av = at(i, p);
      if (av == 0.0) continue;
      double* crow = c + i * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * bt(p, j);
    }
  }
#endif
}

}  // namespace

Tensor matmul(Graph& g, const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ContractError("matmul: incompatible shapes " + a.shape_str() + " and " + b.shape_str());
  }
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out = Tensor::zeros({m, n});
  matmul_kernel(a.data().data(), b.data().data(), out.mutable_data().data(), m, k, n, false, false, 0.0);
  if (tracks_grad(g, {&a, &b})) {
    out.set_requires_grad(true);
    g.record("matmul", [a = a, b = b, out, m, k, n]() mutable {
      if (!out.has_grad()) return;
      const double* go = out.grad().data();
      if (a.requires_grad()) {
        // gA += G * B^T
        matmul_kernel(go, b.data().data(), a.mutable_grad().data(), m, n, k, false, true, 1.0);
      }
      if (b.requires_grad()) {
        // gB += A^T * G
        matmul_kernel(a.data().data(), go, b.mutable_grad().data(), k, m, n, true, false, 1.0);
      }
    });
  }
  return out;
}

Tensor transpose(Graph& g, const Tensor& a) {
  if (a.rank() != 2) throw ContractError("transpose: rank-2 required, got " + a.shape_str());
  const int64_t m = a.dim(0), n = a.dim(1);
  Tensor out = Tensor::zeros({n, m});
  {
    auto src = a.data();
    auto dst = out.mutable_data();
    for (int64_t i = 0; i < m; ++i)
      for (int64_t j = 0; j < n; ++j) dst[j * m + i] = src[i * n + j];
  }
  if (tracks_grad(g, {&a})) {
    out.set_requires_grad(true);
    g.record("transpose", [a = a, out, m, n]() mutable {
      if (!out.has_grad()) return;
      auto go = out.grad();
      auto ga = a.mutable_grad();
      for (int64_t j = 0; j < n; ++j)
        for (int64_t i = 0; i < m; ++i) ga[i * n + j] += go[j * m + i];
    });
  }
  return out;
}

Tensor add(Graph& g, const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor out = Tensor::zeros(a.shape());
  auto o = out.mutable_data();
  auto pa = a.data();
  auto pb = b.data();
  for (size_t i = 0; i < o.size(); ++i) o[i] = pa[i] + pb[i];
  if (tracks_grad(g, {&a, &b})) {
    out.set_requires_grad(true);
    g.record("add", [a = a, b = b, out]() mutable {
      if (!out.has_grad()) return;
      if (a.requires_grad()) accumulate(a, out.grad());
      if (b.requires_grad()) accumulate(b, out.grad());
    });
  }
  return out;
}

Tensor sub(Graph& g, const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  Tensor out = Tensor::zeros(a.shape());
  auto o = out.mutable_data();
  auto pa = a.data();
  auto pb = b.data();
  for (size_t i = 0; i < o.size(); ++i) o[i] = pa[i] - pb[i];
  if (tracks_grad(g, {&a, &b})) {
    out.set_requires_grad(true);
    g.record("sub", [a = a, b = b, out]() mutable {
      if (!out.has_grad()) return;
      auto go = out.grad();
      if (a.requires_grad()) accumulate(a, go);
      if (b.requires_grad()) {
        auto gb = b.mutable_grad();
        for (size_t i = 0; i < gb.size(); ++i) gb[i] -= go[i];
      }
    });
  }
  return out;
}

Tensor mul(Graph& g, const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  Tensor out = Tensor::zeros(a.shape());
  auto o = out.mutable_data();
  auto pa = a.data();
  auto pb = b.data();
  for (size_t i = 0; i < o.size(); ++i) o[i] = pa[i] * pb[i];
  if (tracks_grad(g, {&a, &b})) {
    out.set_requires_grad(true);
    g.record("mul", [a = a, b = b, out]() mutable {
      if (!out.has_grad()) return;
      auto go = out.grad();
      if (a.requires_grad()) {
        auto ga = a.mutable_grad();
        auto pb2 = b.data();
        for (size_t i = 0; i < ga.size(); ++i) ga[i] += go[i] * pb2[i];
      }
      if (b.requires_grad()) {
        auto gb = b.mutable_grad();
        auto pa2 = a.data();
        for (size_t i = 0; i < gb.size(); ++i) gb[i] += go[i] * pa2[i];
      }
    });
  }
  return out;
}

Tensor affine(Graph& g, const Tensor& x, double m, double s) {
  Tensor out = Tensor::zeros(x.shape());
  auto o = out.mutable_data();
  auto px = x.data();
  for (size_t i = 0; i < o.size(); ++i) o[i] = m * px[i] + s;
  if (tracks_grad(g, {&x})) {
    out.set_requires_grad(true);
    g.record("affine", [x = x, out, m]() mutable {
      if (!out.has_grad()) return;
      auto go = out.grad();
      auto gx = x.mutable_grad();
      for (size_t i = 0; i < gx.size(); ++i) gx[i] += m * go[i];
    });
  }
  return out;
}

Tensor relu(Graph& g, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  auto o = out.mutable_data();
  auto px = x.data();
  for (size_t i = 0; i < o.size(); ++i) o[i] = px[i] > 0.0 ? px[i] : 0.0;
  if (tracks_grad(g, {&x})) {
    out.set_requires_grad(true);
    g.record("relu", [x = x, out]() mutable {
      if (!out.has_grad()) return;
      auto go = out.grad();
      auto gx = x.mutable_grad();
      auto px2 = x.data();
      for (size_t i = 0; i < gx.size(); ++i)
        if (px2[i] > 0.0) gx[i] += go[i];
    });
  }
  return out;
}

Tensor sigmoid(Graph& g, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  auto o = out.mutable_data();
  auto px = x.data();
  for (size_t i = 0; i < o.size(); ++i) o[i] = 1.0 / (1.0 + std::exp(-px[i]));
  if (tracks_grad(g, {&x})) {
    out.set_requires_grad(true);
    g.record("sigmoid", [x = x, out]() mutable {
      if (!out.has_grad()) return;
      auto go = out.grad();
      auto po = out.data();
      auto gx = x.mutable_grad();
      for (size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * po[i] * (1.0 - po[i]);
    });
  }
  return out;
}

Tensor exp_op(Graph& g, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  auto o = out.mutable_data();
  auto px = x.data();
  for (size_t i = 0; i < o.size(); ++i) o[i] = std::exp(px[i]);
  if (tracks_grad(g, {&x})) {
    out.set_requires_grad(true);
    g.record("exp", [x = x, out]() mutable {
      if (!out.has_grad()) return;
      auto go = out.grad();
      auto po = out.data();
      auto gx = x.mutable_grad();
      for (size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * po[i];
    });
  }
  return out;
}

Tensor log_op(Graph& g, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  auto o = out.mutable_data();
  auto px = x.data();
  for (size_t i = 0; i < o.size(); ++i) o[i] = std::log(std::max(px[i], kLogClamp));
  if (tracks_grad(g, {&x})) {
    out.set_requires_grad(true);
    g.record("log", [x = x, out]() mutable {
      if (!out.has_grad()) return;
      auto go = out.grad();
      auto px2 = x.data();
      auto gx = x.mutable_grad();
      for (size_t i = 0; i < gx.size(); ++i) {
        if (px2[i] > kLogClamp) gx[i] += go[i] / px2[i];
      }
    });
  }
  return out;
}

Tensor pow_scalar(Graph& g, const Tensor& x, double p) {
  Tensor out = Tensor::zeros(x.shape());
  auto o = out.mutable_data();
  auto px = x.data();
  for (size_t i = 0; i < o.size(); ++i) o[i] = std::pow(px[i], p);
  if (tracks_grad(g, {&x})) {
    out.set_requires_grad(true);
    g.record("pow", [x = x, out, p]() mutable {
      if (!out.has_grad()) return;
      auto go = out.grad();
      auto px2 = x.data();
      auto gx = x.mutable_grad();
      for (size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * p * std::pow(px2[i], p - 1.0);
    });
  }
  return out;
}

Tensor abs_op(Graph& g, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  auto o = out.mutable_data();
  auto px = x.data();
  for (size_t i = 0; i < o.size(); ++i) o[i] = std::abs(px[i]);
  if (tracks_grad(g, {&x})) {
    out.set_requires_grad(true);
    g.record("abs", [x = x, out]() mutable {
      if (!out.has_grad()) return;
      auto go = out.grad();
      auto px2 = x.data();
      auto gx = x.mutable_grad();
      for (size_t i = 0; i < gx.size(); ++i) gx[i] += px2[i] < 0.0 ? -go[i] : go[i];
    });
  }
  return out;
}

Tensor clamp(Graph& g, const Tensor& x, double lo, double hi) {
  if (!(lo < hi)) throw ContractError("clamp: lo must be < hi");
  Tensor out = Tensor::zeros(x.shape());
  auto o = out.mutable_data();
  auto px = x.data();
  for (size_t i = 0; i < o.size(); ++i) o[i] = std::min(std::max(px[i], lo), hi);
  if (tracks_grad(g, {&x})) {
    out.set_requires_grad(true);
    g.record("clamp", [x = x, out, lo, hi]() mutable {
      if (!out.has_grad()) return;
      auto go = out.grad();
      auto px2 = x.data();
      auto gx = x.mutable_grad();
      for (size_t i = 0; i < gx.size(); ++i)
        if (px2[i] > lo && px2[i] < hi) gx[i] += go[i];
    });
  }
  return out;
}

Tensor softmax(Graph& g, const Tensor& x) {
  const int64_t n = x.dim(static_cast<int>(x.rank()) - 1);
  const int64_t rows = x.size() / n;
  Tensor out = Tensor::zeros(x.shape());
  auto o = out.mutable_data();
  auto px = x.data();
  for (int64_t r = 0; r < rows; ++r) {
    const double* xr = px.data() + r * n;
    double* orow = o.data() + r * n;
    double mx = xr[0];
    for (int64_t j = 1; j < n; ++j) mx = std::max(mx, xr[j]);
    double sum = 0.0;
    for (int64_t j = 0; j < n; ++j) {
      orow[j] = std::exp(xr[j] - mx);
      sum += orow[j];
    }
    for (int64_t j = 0; j < n; ++j) orow[j] /= sum;
  }
  if (tracks_grad(g, {&x})) {
    out.set_requires_grad(true);
    g.record("softmax", [x = x, out, rows, n]() mutable {
      if (!out.has_grad()) return;
      auto go = out.grad();
      auto po = out.data();
      auto gx = x.mutable_grad();
      for (int64_t r = 0; r < rows; ++r) {
        const double* pr = po.data() + r * n;
        const double* gr = go.data() + r * n;
        double dot = 0.0;
        for (int64_t j = 0; j < n; ++j) dot += pr[j] * gr[j];
        double* gxr = gx.data() + r * n;
        for (int64_t j = 0; j < n; ++j) gxr[j] += pr[j] * (gr[j] - dot);
      }
    });
  }
  return out;
}

Tensor layer_norm(Graph& g, const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const int64_t n = x.dim(static_cast<int>(x.rank()) - 1);
  if (gain.size() != n || bias.size() != n) {
    throw ContractError("layer_norm: gain/bias length must equal last axis " + std::to_string(n));
  }
  const int64_t rows = x.size() / n;
  Tensor out = Tensor::zeros(x.shape());
  // normalized values and inverse stddevs are needed by backward
  Tensor xhat = Tensor::zeros(x.shape());
  std::vector<double> inv_std(static_cast<size_t>(rows));
  {
    auto o = out.mutable_data();
    auto xh = xhat.mutable_data();
    auto px = x.data();
    auto pg = gain.data();
    auto pb = bias.data();
    for (int64_t r = 0; r < rows; ++r) {
      const double* xr = px.data() + r * n;
      double mean = 0.0;
      for (int64_t j = 0; j < n; ++j) mean += xr[j];
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (int64_t j = 0; j < n; ++j) {
        const double d = xr[j] - mean;
        var += d * d;
      }
      var /= static_cast<double>(n);
      const double inv = 1.0 / std::sqrt(var + eps);
      inv_std[static_cast<size_t>(r)] = inv;
      for (int64_t j = 0; j < n; ++j) {
        const double h = (xr[j] - mean) * inv;
        xh[r * n + j] = h;
        o[r * n + j] = h * pg[j] + pb[j];
      }
    }
  }
  if (tracks_grad(g, {&x, &gain, &bias})) {
    out.set_requires_grad(true);
    g.record("layer_norm", [x = x, gain = gain, bias = bias, out, xhat, inv_std, rows, n]() mutable {
      if (!out.has_grad()) return;
      auto go = out.grad();
      auto xh = xhat.data();
      auto pg = gain.data();
      if (gain.requires_grad()) {
        auto gg = gain.mutable_grad();
        for (int64_t r = 0; r < rows; ++r)
          for (int64_t j = 0; j < n; ++j) gg[j] += go[r * n + j] * xh[r * n + j];
      }
      if (bias.requires_grad()) {
        auto gb = bias.mutable_grad();
        for (int64_t r = 0; r < rows; ++r)
          for (int64_t j = 0; j < n; ++j) gb[j] += go[r * n + j];
      }
      if (x.requires_grad()) {
        auto gx = x.mutable_grad();
        for (int64_t r = 0; r < rows; ++r) {
          double mean_dh = 0.0, mean_dh_h = 0.0;
          for (int64_t j = 0; j < n; ++j) {
            const double dh = go[r * n + j] * pg[j];
            mean_dh += dh;
            mean_dh_h += dh * xh[r * n + j];
          }
          mean_dh /= static_cast<double>(n);
          mean_dh_h /= static_cast<double>(n);
          const double inv = inv_std[static_cast<size_t>(r)];
          for (int64_t j = 0; j < n; ++j) {
            const double dh = go[r * n + j] * pg[j];
            gx[r * n + j] += inv * (dh - mean_dh - xh[r * n + j] * mean_dh_h);
          }
        }
      }
    });
  }
  return out;
}

Tensor concat(Graph& g, const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  const int64_t rank = parts[0].rank();
  int64_t last_total = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != rank) throw ContractError("concat: rank mismatch");
    for (int i = 0; i + 1 < rank; ++i) {
      if (p.dim(i) != parts[0].dim(i)) {
        throw ContractError("concat: leading dims differ, " + p.shape_str() + " vs " +
                            parts[0].shape_str());
      }
    }
    last_total += p.dim(static_cast<int>(rank) - 1);
  }
  std::vector<int64_t> shape = parts[0].shape();
  shape.back() = last_total;
  const int64_t rows = parts[0].size() / parts[0].dim(static_cast<int>(rank) - 1);
  Tensor out = Tensor::zeros(shape);
  {
    auto o = out.mutable_data();
    int64_t off = 0;
    for (const Tensor& p : parts) {
      const int64_t w = p.dim(static_cast<int>(rank) - 1);
      auto src = p.data();
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < w; ++j) o[r * last_total + off + j] = src[r * w + j];
      off += w;
    }
  }
  bool any_grad = false;
  for (const Tensor& p : parts) any_grad = any_grad || (g.recording() && p.requires_grad());
  if (any_grad) {
    out.set_requires_grad(true);
    std::vector<Tensor> captured = parts;
    g.record("concat", [captured, out, rows, last_total, rank]() mutable {
      if (!out.has_grad()) return;
      auto go = out.grad();
      int64_t off = 0;
      for (Tensor& p : captured) {
        const int64_t w = p.dim(static_cast<int>(rank) - 1);
        if (p.requires_grad()) {
          auto gp = p.mutable_grad();
          for (int64_t r = 0; r < rows; ++r)
            for (int64_t j = 0; j < w; ++j) gp[r * w + j] += go[r * last_total + off + j];
        }
        off += w;
      }
    });
  }
  return out;
}

Tensor gather_rows(Graph& g, const Tensor& x, std::span<const int64_t> rows) {
  if (x.rank() < 1) throw ContractError("gather_rows: rank >= 1 required");
  const int64_t nrows = x.dim(0);
  const int64_t stride = x.size() / nrows;
  for (int64_t r : rows) {
    if (r < 0 || r >= nrows) {
      throw ContractError("gather_rows: index " + std::to_string(r) + " out of range [0, " +
                          std::to_string(nrows) + ")");
    }
  }
  std::vector<int64_t> shape = x.shape();
  shape[0] = static_cast<int64_t>(rows.size());
  Tensor out = Tensor::zeros(shape);
  {
    auto o = out.mutable_data();
    auto px = x.data();
    for (size_t i = 0; i < rows.size(); ++i) {
      const double* src = px.data() + rows[i] * stride;
      std::copy(src, src + stride, o.data() + static_cast<int64_t>(i) * stride);
    }
  }
  if (tracks_grad(g, {&x})) {
    out.set_requires_grad(true);
    std::vector<int64_t> idx(rows.begin(), rows.end());
    g.record("gather_rows", [x = x, out, idx, stride]() mutable {
      if (!out.has_grad()) return;
      auto go = out.grad();
      auto gx = x.mutable_grad();
      for (size_t i = 0; i < idx.size(); ++i) {
        const double* src = go.data() + static_cast<int64_t>(i) * stride;
        double* dst = gx.data() + idx[i] * stride;
        for (int64_t j = 0; j < stride; ++j) dst[j] += src[j];
      }
    });
  }
  return out;
}

Tensor broadcast_rows(Graph& g, const Tensor& v, int64_t m) {
  if (v.rank() != 1) throw ContractError("broadcast_rows: rank-1 vector required, got " + v.shape_str());
  const int64_t n = v.dim(0);
  Tensor out = Tensor::zeros({m, n});
  {
    auto o = out.mutable_data();
    auto pv = v.data();
    for (int64_t r = 0; r < m; ++r) std::copy(pv.begin(), pv.end(), o.begin() + r * n);
  }
  if (tracks_grad(g, {&v})) {
    out.set_requires_grad(true);
    g.record("broadcast_rows", [v = v, out, m, n]() mutable {
      if (!out.has_grad()) return;
      auto go = out.grad();
      auto gv = v.mutable_grad();
      for (int64_t r = 0; r < m; ++r)
        for (int64_t j = 0; j < n; ++j) gv[j] += go[r * n + j];
    });
  }
  return out;
}

Tensor reshape(Graph& g, const Tensor& x, std::vector<int64_t> shape) {
  // tensor constructor rejects a shape whose product differs from x.size()
  Tensor out(std::move(shape), std::vector<double>(x.data().begin(), x.data().end()));
  if (tracks_grad(g, {&x})) {
    out.set_requires_grad(true);
    g.record("reshape", [x = x, out]() mutable {
      if (!out.has_grad()) return;
      accumulate(x, out.grad());
    });
  }
  return out;
}

Tensor reduce_max(Graph& g, const Tensor& x, int axis) {
  const AxisSplit s = split_axis(x, axis);
  Tensor out = Tensor::zeros(drop_axis(x.shape(), axis));
  std::vector<int64_t> argmax(static_cast<size_t>(s.outer * s.inner));
  {
    auto o = out.mutable_data();
    auto px = x.data();
    for (int64_t oi = 0; oi < s.outer; ++oi) {
      for (int64_t ii = 0; ii < s.inner; ++ii) {
        int64_t best = 0;
        double bv = px[(oi * s.n) * s.inner + ii];
        for (int64_t j = 1; j < s.n; ++j) {
          const double v = px[(oi * s.n + j) * s.inner + ii];
          if (v > bv) {
            bv = v;
            best = j;
          }
        }
        o[oi * s.inner + ii] = bv;
        argmax[static_cast<size_t>(oi * s.inner + ii)] = best;
      }
    }
  }
  if (tracks_grad(g, {&x})) {
    out.set_requires_grad(true);
    g.record("reduce_max", [x = x, out, argmax, s]() mutable {
      if (!out.has_grad()) return;
      auto go = out.grad();
      auto gx = x.mutable_grad();
      for (int64_t oi = 0; oi < s.outer; ++oi)
        for (int64_t ii = 0; ii < s.inner; ++ii) {
          const int64_t j = argmax[static_cast<size_t>(oi * s.inner + ii)];
          gx[(oi * s.n + j) * s.inner + ii] += go[oi * s.inner + ii];
        }
    });
  }
  return out;
}

Tensor reduce_mean(Graph& g, const Tensor& x, int axis) {
  const AxisSplit s = split_axis(x, axis);
  Tensor out = Tensor::zeros(drop_axis(x.shape(), axis));
  const double inv = 1.0 / static_cast<double>(s.n);
  {
    auto o = out.mutable_data();
    auto px = x.data();
    for (int64_t oi = 0; oi < s.outer; ++oi)
      for (int64_t ii = 0; ii < s.inner; ++ii) {
        double sum = 0.0;
        for (int64_t j = 0; j < s.n; ++j) sum += px[(oi * s.n + j) * s.inner + ii];
        o[oi * s.inner + ii] = sum * inv;
      }
  }
  if (tracks_grad(g, {&x})) {
    out.set_requires_grad(true);
    g.record("reduce_mean", [x = x, out, s, inv]() mutable {
      if (!out.has_grad()) return;
      auto go = out.grad();
      auto gx = x.mutable_grad();
      for (int64_t oi = 0; oi < s.outer; ++oi)
        for (int64_t ii = 0; ii < s.inner; ++ii) {
          const double gv = go[oi * s.inner + ii] * inv;
          for (int64_t j = 0; j < s.n; ++j) gx[(oi * s.n + j) * s.inner + ii] += gv;
        }
    });
  }
  return out;
}

Tensor sum_all(Graph& g, const Tensor& x) {
  double sum = 0.0;
  for (double v : x.data()) sum += v;
  Tensor out = Tensor::scalar(sum);
  if (tracks_grad(g, {&x})) {
    out.set_requires_grad(true);
    g.record("sum_all", [x = x, out]() mutable {
      if (!out.has_grad()) return;
      const double gv = out.grad()[0];
      auto gx = x.mutable_grad();
      for (size_t i = 0; i < gx.size(); ++i) gx[i] += gv;
    });
  }
  return out;
}

std::vector<int64_t> argtopk(std::span<const double> values, int64_t k) {
  const int64_t n = static_cast<int64_t>(values.size());
  if (k < 0 || k > n) {
    throw ContractError("argtopk: k=" + std::to_string(k) + " out of range for n=" + std::to_string(n));
  }
  std::vector<int64_t> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int64_t a, int64_t b) {
    if (values[static_cast<size_t>(a)] != values[static_cast<size_t>(b)])
      return values[static_cast<size_t>(a)] > values[static_cast<size_t>(b)];
    return a < b;
  });
  idx.resize(static_cast<size_t>(k));
  return idx;
}

}  // namespace groundsel
