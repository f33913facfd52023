#include "groundsel/tensor.hpp"

#include <cmath>
#include <sstream>

#include "groundsel/error.hpp"

namespace groundsel {

namespace {

int64_t shape_numel(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d <= 0) throw ContractError("tensor dimension must be positive, got " + std::to_string(d));
    n *= d;
  }
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<int64_t> shape, std::vector<double> data, bool requires_grad) {
  const int64_t n = shape_numel(shape);
  if (n != static_cast<int64_t>(data.size())) {
    throw ContractError("tensor data length " + std::to_string(data.size()) +
                        " does not match shape product " + std::to_string(n));
  }
  impl_ = std::make_shared<Impl>();
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(std::vector<int64_t> shape, bool requires_grad) {
  const int64_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(static_cast<size_t>(n), 0.0), requires_grad);
}

Tensor Tensor::full(std::vector<int64_t> shape, double value, bool requires_grad) {
  const int64_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(static_cast<size_t>(n), value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({1}, {value}, requires_grad);
}

Tensor Tensor::uniform(std::vector<int64_t> shape, std::mt19937_64& rng, double lo, double hi,
                       bool requires_grad) {
  const int64_t n = shape_numel(shape);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> data(static_cast<size_t>(n));
  for (double& v : data) v = dist(rng);
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

const std::vector<int64_t>& Tensor::shape() const { return impl_->shape; }

int64_t Tensor::dim(int i) const { return impl_->shape.at(static_cast<size_t>(i)); }

int64_t Tensor::rank() const { return static_cast<int64_t>(impl_->shape.size()); }

int64_t Tensor::size() const { return static_cast<int64_t>(impl_->data.size()); }

std::span<const double> Tensor::data() const { return impl_->data; }

std::span<double> Tensor::mutable_data() { return impl_->data; }

double Tensor::value() const {
  if (size() != 1) throw ContractError("value() requires a single-element tensor, shape " + shape_str());
  return impl_->data[0];
}

double Tensor::at(int64_t r, int64_t c) const {
  if (rank() != 2) throw ContractError("at(r,c) requires a rank-2 tensor, shape " + shape_str());
  return impl_->data[static_cast<size_t>(r * dim(1) + c)];
}

bool Tensor::requires_grad() const { return impl_->requires_grad; }

void Tensor::set_requires_grad(bool v) { impl_->requires_grad = v; }

std::span<const double> Tensor::grad() const {
  return impl_->grad;
}

std::span<double> Tensor::mutable_grad() {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

bool Tensor::has_grad() const { return !impl_->grad.empty(); }

void Tensor::zero_grad() { impl_->grad.clear(); }

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < impl_->shape.size(); ++i) {
    if (i) os << "x";
    os << impl_->shape[i];
  }
  os << "]";
  return os.str();
}

void Graph::record(std::string op, std::function<void()> pull) {
  if (!recording_) return;
  nodes_.push_back(Node{std::move(op), std::move(pull)});
}

void Graph::backward(const Tensor& loss) {
  if (!recording_) throw ContractError("backward on a non-recording graph");
  if (consumed_) throw ContractError("backward called twice on the same graph");
  if (loss.size() != 1) {
    throw ContractError("backward requires a single-element loss, shape " + loss.shape_str());
  }
  consumed_ = true;
  Tensor seed = loss;
  seed.mutable_grad()[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    it->pull();
  }
}

}  // namespace groundsel
