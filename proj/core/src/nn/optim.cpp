#include "nuclick/nn/optim.hpp"

#include <cmath>

namespace nuclick::nn {

template <class T>
void adam_step(const std::vector<Var<T>>& params, OptimizerState<T>& state) {
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p->value.shape());
      state.second_moment.emplace_back(p->value.shape());
    }
  }
  if (state.first_moment.size() != params.size()) throw InvalidInput("adam_step: parameter count changed");
  const auto& o = state.options;
  ++state.step;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = *params[k];
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    if (!m.same_shape(p.value)) throw InvalidInput("adam_step: moment shape mismatch");
    const bool has_grad = p.has_grad();
    for (std::size_t i = 0; i < p.value.numel(); ++i) {
      const double g = has_grad ? static_cast<double>(p.grad[i]) : 0.0;
      double theta = static_cast<double>(p.value[i]);
      theta -= o.lr * o.weight_decay * theta;
      const double mi = o.beta1 * m[i] + (1.0 - o.beta1) * g;
      const double vi = o.beta2 * v[i] + (1.0 - o.beta2) * g * g;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      theta -= o.lr * (mi / c1) / (std::sqrt(vi / c2) + o.eps);
      p.value[i] = static_cast<T>(theta);
    }
  }
}

template void adam_step(const std::vector<Var<float>>&, OptimizerState<float>&);
template void adam_step(const std::vector<Var<double>>&, OptimizerState<double>&);

}  // namespace nuclick::nn
