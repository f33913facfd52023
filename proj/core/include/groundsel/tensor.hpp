#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace groundsel {

/// Dense row-major tensor of doubles with optional gradient storage.
/// Tensor is a cheap value-semantic handle; copies share the same storage.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<int64_t> shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(std::vector<int64_t> shape, bool requires_grad = false);
  static Tensor full(std::vector<int64_t> shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  /// Uniform samples in [lo, hi).
  static Tensor uniform(std::vector<int64_t> shape, std::mt19937_64& rng, double lo, double hi,
                        bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int64_t>& shape() const;
  int64_t dim(int i) const;
  int64_t rank() const;
  int64_t size() const;  // number of elements

  std::span<const double> data() const;
  std::span<double> mutable_data();
  double value() const;  // single-element tensors only
  double at(int64_t r, int64_t c) const;  // rank-2 convenience

  bool requires_grad() const;
  void set_requires_grad(bool v);
  /// Gradient of the last backward pass; empty span when never populated.
  std::span<const double> grad() const;
  /// Allocates (zero-filled) gradient storage if absent, then returns it.
  std::span<double> mutable_grad();
  bool has_grad() const;
  void zero_grad();

  /// Identity of the underlying storage, for aliasing checks.
  const void* storage_id() const { return impl_.get(); }

  std::string shape_str() const;

 private:
  struct Impl {
    std::vector<int64_t> shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;
};

/// Records one executed operation per node, in creation order. backward()
/// replays the nodes in exact reverse creation order and accumulates
/// gradients into every reachable tensor with requires_grad set.
///
/// A graph is single-use: a second backward() call is rejected. Tensors and
/// the graph they were recorded on belong to one execution context; read-only
/// parameter snapshots may be shared freely.
class Graph {
 public:
  explicit Graph(bool recording = true) : recording_(recording) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return recording_; }
  int64_t node_count() const { return static_cast<int64_t>(nodes_.size()); }

  /// Appends a node. `pull` propagates output gradient into the inputs.
  void record(std::string op, std::function<void()> pull);

  /// Runs reverse-mode accumulation from a single-element loss tensor.
  void backward(const Tensor& loss);

 private:
  struct Node {
    std::string op;
    std::function<void()> pull;
  };
  std::vector<Node> nodes_;
  bool recording_ = true;
  bool consumed_ = false;
};

/// True when the output of an op over these inputs should track gradients.
inline bool tracks_grad(const Graph& g, std::initializer_list<const Tensor*> inputs) {
  if (!g.recording()) return false;
  for (const Tensor* t : inputs) {
    if (t->defined() && t->requires_grad()) return true;
  }
  return false;
}

}  // namespace groundsel
