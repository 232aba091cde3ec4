#pragma once

#include <cmath>

#include "sissa/nn/graph.hpp"

namespace sissa::nn {

// Softmax(Q K^T / sqrt(d_k)) V with Q, K, V affine projections of
// x (B, n, d_k). Single head, d_k taken from the projection width.
template <typename R>
typename GraphT<R>::Var scaled_dot_attention(
    GraphT<R>& g, typename GraphT<R>::Var x, typename GraphT<R>::Var wq,
    typename GraphT<R>::Var bq, typename GraphT<R>::Var wk,
    typename GraphT<R>::Var bk, typename GraphT<R>::Var wv,
    typename GraphT<R>::Var bv) {
    const int64_t dk = g.val(wq).dim(1);
    auto q = g.affine(x, wq, bq);
    auto k = g.affine(x, wk, bk);
    auto v = g.affine(x, wv, bv);
    auto scores = g.scale(g.bmm(q, g.transpose_last2(k)),
                          R(1) / std::sqrt(static_cast<R>(dk)));
    auto attn = g.softmax_last(scores);
    return g.bmm(attn, v);
}

// Residual self-attention block: y = x + Attention(x). With the value
// projection zero-initialized this is an exact identity at init.
template <typename R>
typename GraphT<R>::Var residual_self_attention(
    GraphT<R>& g, typename GraphT<R>::Var x, typename GraphT<R>::Var wq,
    typename GraphT<R>::Var bq, typename GraphT<R>::Var wk,
    typename GraphT<R>::Var bk, typename GraphT<R>::Var wv,
    typename GraphT<R>::Var bv) {
    return g.add(x, scaled_dot_attention(g, x, wq, bq, wk, bk, wv, bv));
}

}  // namespace sissa::nn
