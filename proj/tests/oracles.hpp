// Straight-line scalar oracles shared by the unit-test binaries. Everything
// here recomputes module outputs with plain loops, reading the very same
// weights out of the parameter map, so a test failure always means the graph
// path and the obvious math disagree. Include after doctest.h.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "groundsel/encoders.hpp"
#include "groundsel/nn.hpp"
#include "groundsel/tensor.hpp"

namespace {

using groundsel::ParamMap;
using groundsel::SeedPoints;
using groundsel::Tensor;
using groundsel::WordFeatures;

using Mat = std::vector<std::vector<double>>;

std::vector<Tensor> all_params(const ParamMap& pm) {
  std::vector<Tensor> out;
  for (const auto& [name, t] : pm.items()) out.push_back(t);
  return out;
}

// Overwrites every registered parameter with fresh uniform values so the
// oracles never pass by accident of a zero-initialized bias or unit gain.
void randomize_params(ParamMap& pm, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (const auto& [name, t] : pm.items()) {
    Tensor handle = t;
    auto d = handle.mutable_data();
    for (double& v : d) v = dist(rng);
  }
}

Mat to_mat(const Tensor& t) {
  Mat m;
  std::span<const double> d = t.data();
  if (t.rank() == 1) {
    m.push_back(std::vector<double>(d.begin(), d.end()));
    return m;
  }
  REQUIRE(t.rank() == 2);
  const int64_t rows = t.dim(0), cols = t.dim(1);
  m.resize(static_cast<size_t>(rows));
  for (int64_t r = 0; r < rows; ++r) {
    m[static_cast<size_t>(r)].assign(d.begin() + r * cols, d.begin() + (r + 1) * cols);
  }
  return m;
}

Tensor from_mat(const Mat& m) {
  const int64_t rows = static_cast<int64_t>(m.size());
  const int64_t cols = static_cast<int64_t>(m.front().size());
  Tensor t = Tensor::zeros({rows, cols});
  auto d = t.mutable_data();
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t c = 0; c < cols; ++c)
      d[r * cols + c] = m[static_cast<size_t>(r)][static_cast<size_t>(c)];
  }
  return t;
}

double max_abs_diff(const Mat& a, const Mat& b) {
  REQUIRE(a.size() == b.size());
  double worst = 0.0;
  for (size_t r = 0; r < a.size(); ++r) {
    REQUIRE(a[r].size() == b[r].size());
    for (size_t c = 0; c < a[r].size(); ++c) worst = std::max(worst, std::abs(a[r][c] - b[r][c]));
  }
  return worst;
}

double max_abs_diff(const Mat& a, const Tensor& b) { return max_abs_diff(a, to_mat(b)); }

const Tensor& fetch(const ParamMap& pm, const std::string& name) {
  const Tensor* t = pm.find(name);
  REQUIRE_MESSAGE(t != nullptr, "missing parameter ", name);
  return *t;
}

Mat o_linear(const ParamMap& pm, const std::string& prefix, const Mat& x) {
  const Tensor& w = fetch(pm, prefix + ".w");
  const Tensor* b = pm.find(prefix + ".b");  // key projections have none
  const int64_t in = w.dim(0), out = w.dim(1);
  auto wd = w.data();
  Mat y(x.size(), std::vector<double>(static_cast<size_t>(out), 0.0));
  for (size_t r = 0; r < x.size(); ++r) {
    REQUIRE(static_cast<int64_t>(x[r].size()) == in);
    for (int64_t o = 0; o < out; ++o) {
      double acc = b ? b->data()[static_cast<size_t>(o)] : 0.0;
      for (int64_t i = 0; i < in; ++i) acc += x[r][static_cast<size_t>(i)] * wd[i * out + o];
      y[r][static_cast<size_t>(o)] = acc;
    }
  }
  return y;
}

Mat o_relu(Mat x) {
  for (auto& row : x)
    for (double& v : row) v = std::max(0.0, v);
  return x;
}

Mat o_mlp2(const ParamMap& pm, const std::string& prefix, const Mat& x) {
  return o_linear(pm, prefix + ".fc2", o_relu(o_linear(pm, prefix + ".fc1", x)));
}

Mat o_sigmoid(Mat x) {
  for (auto& row : x)
    for (double& v : row) v = 1.0 / (1.0 + std::exp(-v));
  return x;
}

Mat o_softmax_rows(Mat x) {
  for (auto& row : x) {
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }
  return x;
}

Mat o_layer_norm(const ParamMap& pm, const std::string& prefix, const Mat& x) {
  const Tensor& gain = fetch(pm, prefix + ".gain");
  const Tensor& bias = fetch(pm, prefix + ".bias");
  const size_t n = x.front().size();
  REQUIRE(static_cast<size_t>(gain.size()) == n);
  Mat y = x;
  for (auto& row : y) {
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + 1e-5);
    for (size_t j = 0; j < n; ++j) {
      row[j] = (row[j] - mean) * inv * gain.data()[j] + bias.data()[j];
    }
  }
  return y;
}

Mat o_add(const Mat& a, const Mat& b) {
  Mat y = a;
  for (size_t r = 0; r < y.size(); ++r)
    for (size_t c = 0; c < y[r].size(); ++c) y[r][c] += b[r][c];
  return y;
}

Mat o_concat_cols(const Mat& a, const Mat& b) {
  Mat y = a;
  for (size_t r = 0; r < y.size(); ++r) y[r].insert(y[r].end(), b[r].begin(), b[r].end());
  return y;
}

struct OracleAttention {
  Mat out;
  std::vector<Mat> attn;  // one rows(q) x rows(k) map per head
};

OracleAttention o_attention(const ParamMap& pm, const std::string& prefix, const Mat& q_in,
                            const Mat& k_in, const Mat& v_in) {
  OracleAttention res;
  Mat heads_concat(q_in.size());
  for (int64_t h = 0;; ++h) {
    const std::string hp = prefix + ".h" + std::to_string(h);
    if (!pm.find(hp + ".q.w")) {
      REQUIRE(h > 0);
      break;
    }
    Mat q = o_linear(pm, hp + ".q", q_in);
    Mat k = o_linear(pm, hp + ".k", k_in);
    Mat v = o_linear(pm, hp + ".v", v_in);
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.front().size()));
    Mat scores(q.size(), std::vector<double>(k.size(), 0.0));
    for (size_t r = 0; r < q.size(); ++r) {
      for (size_t c = 0; c < k.size(); ++c) {
        double acc = 0.0;
        for (size_t j = 0; j < q[r].size(); ++j) acc += q[r][j] * k[c][j];
        scores[r][c] = acc * scale;
      }
    }
    Mat a = o_softmax_rows(scores);
    res.attn.push_back(a);
    for (size_t r = 0; r < q.size(); ++r) {
      for (size_t c = 0; c < v.front().size(); ++c) {
        double acc = 0.0;
        for (size_t j = 0; j < k.size(); ++j) acc += a[r][j] * v[j][c];
        heads_concat[r].push_back(acc);
      }
    }
  }
  res.out = o_linear(pm, prefix + ".out", heads_concat);
  return res;
}

std::vector<int64_t> o_argtopk(const std::vector<double>& values, int64_t k) {
  std::vector<int64_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int64_t a, int64_t b) {
    if (values[static_cast<size_t>(a)] != values[static_cast<size_t>(b)])
      return values[static_cast<size_t>(a)] > values[static_cast<size_t>(b)];
    return a < b;
  });
  idx.resize(static_cast<size_t>(k));
  return idx;
}

SeedPoints make_seeds(int64_t m, int64_t c, std::mt19937_64& rng) {
  SeedPoints s;
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int64_t i = 0; i < m; ++i) s.coords.push_back({dist(rng), dist(rng), dist(rng)});
  s.coords_t = groundsel::coords_tensor(s.coords);
  s.features = Tensor::uniform({m, c}, rng, -1.0, 1.0);
  return s;
}

WordFeatures make_words(int64_t w, int64_t h, std::mt19937_64& rng) {
  WordFeatures wf;
  wf.features = Tensor::uniform({w, h}, rng, -1.0, 1.0);
  for (int64_t i = 0; i < w; ++i) wf.token_ids.push_back(i + 3);
  return wf;
}

}  // namespace
