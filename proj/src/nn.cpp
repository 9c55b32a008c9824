#include "zpj/nn.hpp"

#include "zpj/error.hpp"

namespace zpj {

Linear Linear::create(ParameterStore& store, const std::string& prefix, int in, int out,
                      Group group, std::mt19937_64& rng) {
  Linear l;
  l.w = store.add(prefix + ".W", {in, out}, group, rng);
  l.b = store.add(prefix + ".b", Tensor::zeros({1, out}, true), group);
  return l;
}

Linear Linear::bind(const ParameterStore& store, const std::string& prefix) {
  return {store.get(prefix + ".W"), store.get(prefix + ".b")};
}

GruCell GruCell::create(ParameterStore& store, const std::string& prefix, int in, int hidden,
                        Group group, std::mt19937_64& rng) {
  GruCell c;
  c.w_z = store.add(prefix + ".W_z", {in, hidden}, group, rng);
  c.w_r = store.add(prefix + ".W_r", {in, hidden}, group, rng);
  c.w_h = store.add(prefix + ".W_h", {in, hidden}, group, rng);
  c.u_z = store.add(prefix + ".U_z", {hidden, hidden}, group, rng);
  c.u_r = store.add(prefix + ".U_r", {hidden, hidden}, group, rng);
  c.u_h = store.add(prefix + ".U_h", {hidden, hidden}, group, rng);
  c.b_z = store.add(prefix + ".b_z", Tensor::zeros({1, hidden}, true), group);
  c.b_r = store.add(prefix + ".b_r", Tensor::zeros({1, hidden}, true), group);
  c.b_h = store.add(prefix + ".b_h", Tensor::zeros({1, hidden}, true), group);
  return c;
}

GruCell GruCell::bind(const ParameterStore& store, const std::string& prefix) {
  auto g = [&](const char* s) { return store.get(prefix + s); };
  return {g(".W_z"), g(".W_r"), g(".W_h"), g(".U_z"), g(".U_r"),
          g(".U_h"), g(".b_z"), g(".b_r"), g(".b_h")};
}

Tensor gru_step(const Tensor& x, const Tensor& h_prev, const GruCell& cell) {
  if (x.cols() != cell.input_dim() || h_prev.cols() != cell.hidden_dim() ||
      x.rows() != h_prev.rows())
    throw DimensionError("gru_step: input " + shape_str(x.shape()) + " and state " +
                         shape_str(h_prev.shape()) + " do not fit a cell of " +
                         shape_str(cell.w_z.shape()));
  Tensor z = sigmoid(add(affine(x, cell.w_z, cell.b_z), matmul(h_prev, cell.u_z)));
  Tensor r = sigmoid(add(affine(x, cell.w_r, cell.b_r), matmul(h_prev, cell.u_r)));
  Tensor cand = tanh(add(affine(x, cell.w_h, cell.b_h), matmul(mul(r, h_prev), cell.u_h)));
  return add(h_prev, mul(z, sub(cand, h_prev)));
}

AdditiveAttention AdditiveAttention::create(ParameterStore& store, const std::string& prefix,
                                            int key_dim, int query_dim, int att_dim, Group group,
                                            std::mt19937_64& rng) {
  AdditiveAttention a;
  a.w_key = store.add(prefix + ".W_key", {key_dim, att_dim}, group, rng);
  a.w_query = store.add(prefix + ".W_query", {query_dim, att_dim}, group, rng);
  a.b = store.add(prefix + ".b", Tensor::zeros({1, att_dim}, true), group);
  a.v = store.add(prefix + ".v", {att_dim, 1}, group, rng);
  return a;
}

AdditiveAttention AdditiveAttention::bind(const ParameterStore& store, const std::string& prefix) {
  return {store.get(prefix + ".W_key"), store.get(prefix + ".W_query"), store.get(prefix + ".b"),
          store.get(prefix + ".v")};
}

std::vector<Tensor> AdditiveAttention::project_keys(const std::vector<Tensor>& keys) const {
  std::vector<Tensor> out;
  out.reserve(keys.size());
  for (auto& k : keys) out.push_back(matmul(k, w_key));
  return out;
}

Tensor AdditiveAttention::weights(const std::vector<Tensor>& projected_keys, const Tensor& query,
                                  std::span<const double> mask) const {
  Tensor q = affine(query, w_query, b);
  std::vector<Tensor> scores;
  scores.reserve(projected_keys.size());
  for (auto& k : projected_keys) scores.push_back(matmul(tanh(add(k, q)), v));
  return softmax(concat_cols(scores), mask);
}

}  // namespace zpj
