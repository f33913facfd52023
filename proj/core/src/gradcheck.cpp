#include "groundsel/gradcheck.hpp"

#include <cmath>
#include <sstream>

#include "groundsel/error.hpp"

namespace groundsel {

GradCheckResult finite_diff_check(const std::function<Tensor(Graph&)>& loss,
                                  const std::vector<Tensor>& params, double eps) {
  for (const Tensor& p : params) {
    if (!p.requires_grad()) throw ContractError("finite_diff_check: parameter without requires_grad");
  }

  // Analytic pass. Params may carry gradient from earlier passes over other
  // graphs; clear them so only this loss's gradient is read back.
  for (const Tensor& p : params) {
    Tensor t = p;
    t.zero_grad();
  }
  std::vector<std::vector<double>> analytic;
  {
    Graph g;
    Tensor out = loss(g);
    g.backward(out);
    for (const Tensor& p : params) {
      Tensor t = p;
      auto gr = t.mutable_grad();
      analytic.emplace_back(gr.begin(), gr.end());
      t.zero_grad();
    }
  }

  auto eval = [&]() {
    Graph g(false);
    return loss(g).value();
  };

  GradCheckResult res;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor p = params[pi];
    auto data = p.mutable_data();
    for (size_t i = 0; i < data.size(); ++i) {
      const double keep = data[i];
      data[i] = keep + eps;
      const double up = eval();
      data[i] = keep - eps;
      const double down = eval();
      data[i] = keep;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[pi][i];
      const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        std::ostringstream os;
        os << "param" << pi << "[" << i << "]: analytic=" << a << " numeric=" << numeric;
        res.worst = os.str();
      }
    }
  }
  return res;
}

GradCheckResult finite_diff_check(const std::function<Tensor(Graph&, const Tensor&)>& loss,
                                  const Tensor& x, double eps) {
  Tensor p = x;
  return finite_diff_check([&](Graph& g) { return loss(g, p); }, {p}, eps);
}

}  // namespace groundsel
