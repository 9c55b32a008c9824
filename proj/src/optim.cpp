#include "zpj/optim.hpp"

#include <cmath>

#include "zpj/error.hpp"

namespace zpj {

Adadelta::Adadelta(double rho, double eps) : rho_(rho), eps_(eps) {
  if (!(rho > 0.0 && rho < 1.0)) throw ContractError("adadelta: rho must lie in (0, 1)");
  if (!(eps > 0.0)) throw ContractError("adadelta: eps must be positive");
}

void Adadelta::step(ParameterStore& store) {
  for (auto& p : store.entries()) {
    auto grad = p.value.mutable_grad();
    if (grad.size() != p.value.size())
      throw ContractError("adadelta: parameter " + p.name + " has no gradient");
    auto& st = state_[p.name];
    if (st.sq_grad.empty()) {
      st.sq_grad.assign(grad.size(), 0.0);
      st.sq_update.assign(grad.size(), 0.0);
    }
    auto value = p.value.mutable_values();
    for (std::size_t i = 0; i < grad.size(); ++i) {
      double g = grad[i];
      st.sq_grad[i] = rho_ * st.sq_grad[i] + (1.0 - rho_) * g * g;
      double delta = -std::sqrt(st.sq_update[i] + eps_) / std::sqrt(st.sq_grad[i] + eps_) * g;
      st.sq_update[i] = rho_ * st.sq_update[i] + (1.0 - rho_) * delta * delta;
      value[i] += delta;
      grad[i] = 0.0;
    }
  }
}

const std::vector<double>& Adadelta::grad_accumulator(const std::string& name) const {
  auto it = state_.find(name);
  if (it == state_.end()) throw ContractError("adadelta: no state for " + name);
  return it->second.sq_grad;
}

const std::vector<double>& Adadelta::update_accumulator(const std::string& name) const {
  auto it = state_.find(name);
  if (it == state_.end()) throw ContractError("adadelta: no state for " + name);
  return it->second.sq_update;
}

double clip_grad_norm(ParameterStore& store, double max_norm) {
  double sq = 0.0;
  for (auto& p : store.entries())
    for (double g : p.value.grad()) sq += g * g;
  double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    double c = max_norm / norm;
    for (auto& p : store.entries())
      for (double& g : p.value.mutable_grad()) g *= c;
  }
  return norm;
}

}  // namespace zpj
