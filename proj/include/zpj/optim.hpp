#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "zpj/params.hpp"

namespace zpj {

// Adadelta (Zeiler, 2012). Learning-rate free; keeps decaying averages of
// squared gradients and squared updates per parameter.
class Adadelta {
 public:
  explicit Adadelta(double rho = 0.95, double eps = 1e-6);

  // Applies one update to every parameter in the store, then zeroes grads.
  void step(ParameterStore& store);

  const std::vector<double>& grad_accumulator(const std::string& name) const;
  const std::vector<double>& update_accumulator(const std::string& name) const;

 private:
  struct State {
    std::vector<double> sq_grad;
    std::vector<double> sq_update;
  };
  double rho_;
  double eps_;
  std::unordered_map<std::string, State> state_;
};

// Rescales all grads so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_grad_norm(ParameterStore& store, double max_norm);

}  // namespace zpj
