#include "groundsel/nn.hpp"

#include <cmath>

#include "groundsel/error.hpp"

namespace groundsel {

Tensor ParamMap::add(std::string name, Tensor t) {
  if (index_.count(name)) throw ContractError("duplicate parameter name: " + name);
  t.set_requires_grad(true);
  index_[name] = items_.size();
  items_.emplace_back(std::move(name), t);
  return t;
}

Tensor* ParamMap::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &items_[it->second].second;
}

const Tensor* ParamMap::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &items_[it->second].second;
}

int64_t ParamMap::total_size() const {
  int64_t n = 0;
  for (const auto& [name, t] : items_) n += t.size();
  return n;
}

Linear::Linear(ParamMap& pm, const std::string& prefix, int64_t in, int64_t out,
               std::mt19937_64& rng, bool with_bias) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  w_ = pm.add(prefix + ".w", Tensor::uniform({in, out}, rng, -limit, limit));
  if (with_bias) b_ = pm.add(prefix + ".b", Tensor::zeros({out}));
}

Tensor Linear::operator()(Graph& g, const Tensor& x) const {
  Tensor y = matmul(g, x, w_);
  if (!b_.defined()) return y;
  return add(g, y, broadcast_rows(g, b_, y.dim(0)));
}

LayerNormP::LayerNormP(ParamMap& pm, const std::string& prefix, int64_t width) {
  gain_ = pm.add(prefix + ".gain", Tensor::full({width}, 1.0));
  bias_ = pm.add(prefix + ".bias", Tensor::zeros({width}));
}

Tensor LayerNormP::operator()(Graph& g, const Tensor& x) const {
  return layer_norm(g, x, gain_, bias_);
}

Mlp2::Mlp2(ParamMap& pm, const std::string& prefix, int64_t in, int64_t hidden, int64_t out,
           std::mt19937_64& rng)
    : fc1_(pm, prefix + ".fc1", in, hidden, rng), fc2_(pm, prefix + ".fc2", hidden, out, rng) {}

Tensor Mlp2::operator()(Graph& g, const Tensor& x) const {
  return fc2_(g, relu(g, fc1_(g, x)));
}

AttentionBlock::AttentionBlock(ParamMap& pm, const std::string& prefix, int64_t query_dim,
                               int64_t key_dim, int64_t value_dim, int64_t out_dim, int64_t heads,
                               std::mt19937_64& rng) {
  if (out_dim % heads != 0) {
    throw ContractError("attention: out_dim " + std::to_string(out_dim) +
                        " not divisible by heads " + std::to_string(heads));
  }
  d_head_ = out_dim / heads;
  for (int64_t h = 0; h < heads; ++h) {
    const std::string hp = prefix + ".h" + std::to_string(h);
    q_proj_.emplace_back(pm, hp + ".q", query_dim, d_head_, rng);
    // Key projections carry no bias: a shared key offset shifts each score
    // row uniformly, which the row softmax cancels exactly.
    k_proj_.emplace_back(pm, hp + ".k", key_dim, d_head_, rng, /*with_bias=*/false);
    v_proj_.emplace_back(pm, hp + ".v", value_dim, d_head_, rng);
  }
  out_proj_ = Linear(pm, prefix + ".out", heads * d_head_, out_dim, rng);
}

AttentionResult AttentionBlock::operator()(Graph& g, const Tensor& q_in, const Tensor& k_in,
                                           const Tensor& v_in) const {
  if (k_in.dim(0) != v_in.dim(0)) {
    throw ContractError("attention: key rows " + std::to_string(k_in.dim(0)) +
                        " != value rows " + std::to_string(v_in.dim(0)));
  }
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(d_head_));
  AttentionResult res;
  std::vector<Tensor> head_outs;
  for (size_t h = 0; h < q_proj_.size(); ++h) {
    Tensor q = q_proj_[h](g, q_in);
    Tensor k = k_proj_[h](g, k_in);
    Tensor v = v_proj_[h](g, v_in);
    Tensor scores = scale(g, matmul(g, q, transpose(g, k)), scale_factor);
    Tensor a = softmax(g, scores);
    res.attn.push_back(a);
    head_outs.push_back(matmul(g, a, v));
  }
  res.out = out_proj_(g, concat(g, head_outs));
  return res;
}

}  // namespace groundsel
