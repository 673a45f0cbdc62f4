#include "mcl/adam.hpp"

#include <cmath>

#include "mcl/errors.hpp"

namespace mcl {

void AdamConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be > 0");
}

void adam_step(AdamState& state, const std::vector<NamedParam>& params,
               const std::map<std::string, Tensor>& grads) {
  state.config.validate();
  for (const auto& [name, p] : params) {
    auto it = grads.find(name);
    if (it == grads.end()) throw DimensionError("adam_step: no gradient for '" + name + "'");
    if (it->second.dims() != p->dims()) {
      throw DimensionError("adam_step: gradient of '" + name + "' has dims " + dims_to_string(it->second.dims()) +
                           ", parameter has " + dims_to_string(p->dims()));
    }
    if (!it->second.all_finite()) throw DivergenceError("adam_step: non-finite gradient for '" + name + "'");
  }

  const auto& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (const auto& [name, p] : params) {
    const Tensor& g = grads.at(name);
    auto [m_it, m_new] = state.first_moment.try_emplace(name, p->dims());
    auto [v_it, v_new] = state.second_moment.try_emplace(name, p->dims());
    Tensor& m = m_it->second;
    Tensor& v = v_it->second;
    for (std::size_t i = 0; i < p->size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      (*p)[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace mcl
