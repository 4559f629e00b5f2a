#pragma once

#include <string>
#include <vector>

#include "dan/autodiff.hpp"
#include "dan/tensor.hpp"

namespace dan {

// Parameter indices of one attention layer inside a ParameterStore.
struct AttentionBlockParams {
  int wq = -1, wk = -1, wv = -1;     // d x d
  int ff1 = -1, ff1_b = -1;          // d x h, 1 x h
  int ff2 = -1, ff2_b = -1;          // h x d, 1 x d
  int ln1_gain = -1, ln1_bias = -1;  // after attention + residual
  int ln2_gain = -1, ln2_bias = -1;  // after feed-forward + residual
};

// Weights uniform on [-1/sqrt(d), 1/sqrt(d)]; layer-norm gains 1, biases 0.
AttentionBlockParams add_attention_block(ParameterStore& store, const std::string& prefix, int d, int hidden,
                                         Rng& rng);

// Where a forward pass reads parameters and, optionally, sends gradients.
struct ParamBinding {
  const ParameterStore* store = nullptr;
  std::vector<Tensor>* grads = nullptr;  // same order as store; null for inference

  Var get(Graph& g, int index) const {
    return g.param((*store)[index].value, grads ? &(*grads)[index] : nullptr);
  }
};

// x   = LN(hq + softmax(Q K^T / sqrt(d_head)) V)
// out = LN(x + relu(x W1 + b1) W2 + b2)
// with Q = hq Wq, K = hkv Wk, V = hkv Wv. `mask` excludes key rows.
Var attention_block(Graph& g, Var hq, Var hkv, const AttentionBlockParams& p, const ParamBinding& bind,
                     ColumnMask mask = {}, int heads = 1);

}  // namespace dan
