#include "dan/attention.hpp"

#include <cmath>

#include "dan/errors.hpp"

namespace dan {

AttentionBlockParams add_attention_block(ParameterStore& store, const std::string& prefix, int d, int hidden,
                                         Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  AttentionBlockParams p;
  p.wq = store.add_uniform(prefix + ".wq", d, d, bound, rng);
  p.wk = store.add_uniform(prefix + ".wk", d, d, bound, rng);
  p.wv = store.add_uniform(prefix + ".wv", d, d, bound, rng);
  p.ff1 = store.add_uniform(prefix + ".ff1", d, hidden, bound, rng);
  p.ff1_b = store.add_uniform(prefix + ".ff1_b", 1, hidden, bound, rng);
  p.ff2 = store.add_uniform(prefix + ".ff2", hidden, d, bound, rng);
  p.ff2_b = store.add_uniform(prefix + ".ff2_b", 1, d, bound, rng);
  p.ln1_gain = store.add(prefix + ".ln1_gain", Tensor(1, d, 1.0));
  p.ln1_bias = store.add(prefix + ".ln1_bias", Tensor(1, d, 0.0));
  p.ln2_gain = store.add(prefix + ".ln2_gain", Tensor(1, d, 1.0));
  p.ln2_bias = store.add(prefix + ".ln2_bias", Tensor(1, d, 0.0));
  return p;
}

Var attention_block(Graph& g, Var hq, Var hkv, const AttentionBlockParams& p, const ParamBinding& bind,
                    ColumnMask mask, int heads) {
  const int d = g.value(hq).cols();
  if (g.value(hkv).cols() != d) {
    throw ShapeError("attention_block: query width " + std::to_string(d) + " vs key/value width " +
                     std::to_string(g.value(hkv).cols()));
  }
  if (heads < 1 || d % heads != 0) {
    throw ShapeError("attention_block: " + std::to_string(heads) + " heads do not divide d=" + std::to_string(d));
  }
  const Var q = matmul(g, hq, bind.get(g, p.wq));
  const Var k = matmul(g, hkv, bind.get(g, p.wk));
  const Var v = matmul(g, hkv, bind.get(g, p.wv));

  Var attended;
  if (heads == 1) {
    attended = matmul(g, masked_softmax(g, scaled_dot_similarity(g, q, k), mask), v);
  } else {
    const int dk = d / heads;
    std::vector<Var> outs;
    for (int h = 0; h < heads; ++h) {
      const Var qh = slice_cols(g, q, h * dk, dk);
      const Var kh = slice_cols(g, k, h * dk, dk);
      const Var vh = slice_cols(g, v, h * dk, dk);
      outs.push_back(matmul(g, masked_softmax(g, scaled_dot_similarity(g, qh, kh), mask), vh));
    }
    attended = concat_cols(g, outs);
  }

  const Var x = layer_norm(g, add(g, hq, attended), bind.get(g, p.ln1_gain), bind.get(g, p.ln1_bias));
  const Var hidden = relu(g, linear(g, x, bind.get(g, p.ff1), bind.get(g, p.ff1_b)));
  const Var ff = linear(g, hidden, bind.get(g, p.ff2), bind.get(g, p.ff2_b));
  return layer_norm(g, add(g, x, ff), bind.get(g, p.ln2_gain), bind.get(g, p.ln2_bias));
}

}  // namespace dan
