#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "groundsel/ops.hpp"
#include "groundsel/tensor.hpp"

namespace groundsel {

/// Ordered registry of named trainable tensors. Registration order is the
/// canonical parameter order used by the optimizer and the checkpoint format.
class ParamMap {
 public:
  /// Registers `t` under `name` (must be unique), marks it trainable, and
  /// returns the shared handle.
  Tensor add(std::string name, Tensor t);

  Tensor* find(const std::string& name);
  const Tensor* find(const std::string& name) const;

  const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
  int64_t total_size() const;

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
  std::unordered_map<std::string, size_t> index_;
};

/// y = x * W + b for row-stacked inputs [n x in] -> [n x out].
class Linear {
 public:
  Linear() = default;
  Linear(ParamMap& pm, const std::string& prefix, int64_t in, int64_t out, std::mt19937_64& rng,
         bool with_bias = true);

  Tensor operator()(Graph& g, const Tensor& x) const;
  int64_t in_dim() const { return w_.dim(0); }
  int64_t out_dim() const { return w_.dim(1); }

 private:
  Tensor w_, b_;
};

/// Layer normalization with learned gain and bias over the last axis.
class LayerNormP {
 public:
  LayerNormP() = default;
  LayerNormP(ParamMap& pm, const std::string& prefix, int64_t width);

  Tensor operator()(Graph& g, const Tensor& x) const;

 private:
  Tensor gain_, bias_;
};

/// Two-layer perceptron: linear -> ReLU -> linear.
class Mlp2 {
 public:
  Mlp2() = default;
  Mlp2(ParamMap& pm, const std::string& prefix, int64_t in, int64_t hidden, int64_t out,
       std::mt19937_64& rng);

  Tensor operator()(Graph& g, const Tensor& x) const;

 private:
  Linear fc1_, fc2_;
};

struct AttentionResult {
  Tensor out;                // [nq x out_dim]
  std::vector<Tensor> attn;  // one [nq x nk] map per head, rows sum to 1
};

/// Multi-head scaled dot-product attention with separate per-head query /
/// key / value projections. Query and key inputs may carry a different
/// feature width than the value input (used when positions are appended to
/// the attention inputs but not to the values).
class AttentionBlock {
 public:
  AttentionBlock() = default;
  AttentionBlock(ParamMap& pm, const std::string& prefix, int64_t query_dim, int64_t key_dim,
                 int64_t value_dim, int64_t out_dim, int64_t heads, std::mt19937_64& rng);

  /// q_in [nq x query_dim], k_in [nk x key_dim], v_in [nk x value_dim].
  AttentionResult operator()(Graph& g, const Tensor& q_in, const Tensor& k_in,
                             const Tensor& v_in) const;

  int64_t heads() const { return static_cast<int64_t>(q_proj_.size()); }

 private:
  std::vector<Linear> q_proj_, k_proj_, v_proj_;
  Linear out_proj_;
  int64_t d_head_ = 0;
};

}  // namespace groundsel
