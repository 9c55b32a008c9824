#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include "zpj/params.hpp"

namespace zpj {

struct Linear {
  Tensor w;  // in x out
  Tensor b;  // 1 x out

  static Linear create(ParameterStore& store, const std::string& prefix, int in, int out,
                       Group group, std::mt19937_64& rng);
  static Linear bind(const ParameterStore& store, const std::string& prefix);
  Tensor operator()(const Tensor& x) const { return affine(x, w, b); }
};

// Gated recurrent unit parameters. Rows of x and h are batch entries.
struct GruCell {
  Tensor w_z, w_r, w_h;  // input x hidden
  Tensor u_z, u_r, u_h;  // hidden x hidden
  Tensor b_z, b_r, b_h;  // 1 x hidden

  static GruCell create(ParameterStore& store, const std::string& prefix, int in, int hidden,
                        Group group, std::mt19937_64& rng);
  static GruCell bind(const ParameterStore& store, const std::string& prefix);
  int input_dim() const { return w_z.rows(); }
  int hidden_dim() const { return u_z.rows(); }
};

// z = s(x Wz + h Uz + bz), r = s(x Wr + h Ur + br),
// h~ = tanh(x Wh + (r * h) Uh + bh), h' = (1 - z) * h + z * h~.
Tensor gru_step(const Tensor& x, const Tensor& h_prev, const GruCell& cell);

// Single-hidden-layer additive scorer: e_t = v . tanh(key_t Wk + query Wq + b).
struct AdditiveAttention {
  Tensor w_key, w_query, b, v;

  static AdditiveAttention create(ParameterStore& store, const std::string& prefix, int key_dim,
                                  int query_dim, int att_dim, Group group, std::mt19937_64& rng);
  static AdditiveAttention bind(const ParameterStore& store, const std::string& prefix);

  // Key projections can be reused across query steps.
  std::vector<Tensor> project_keys(const std::vector<Tensor>& keys) const;
  // Row-stochastic B x T weights; mask is B x T with 0 on padded keys.
  Tensor weights(const std::vector<Tensor>& projected_keys, const Tensor& query,
                 std::span<const double> mask) const;
};

}  // namespace zpj
