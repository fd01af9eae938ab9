#ifndef UMEML_ATTENTION_HPP
#define UMEML_ATTENTION_HPP

#include "umeml/tensor.hpp"

namespace umeml {

// Projections for residual cross-attention. heads must divide the width;
// the score temperature is the square root of the per-head width.
struct CrossAttentionParams {
    Tensor w_q, w_k, w_v;  // d x d
    int heads = 1;
};

// Pre-norm transformer block: x + Attn(LN1(x)), then + FFN(LN2(.)) with a
// relu hidden layer of width 4d. No biases anywhere except the layer norms.
struct SelfAttentionBlockParams {
    Tensor w_q, w_k, w_v, w_o;  // d x d
    Tensor ffn_w1;              // d x 4d
    Tensor ffn_w2;              // 4d x d
    Tensor ln1_gain, ln1_bias;  // 1 x d
    Tensor ln2_gain, ln2_bias;  // 1 x d
    int heads = 1;
};

// Projections drawn uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)); layer norm
// gains start at 1, biases at 0.
CrossAttentionParams make_cross_attention(std::size_t d, int heads, std::mt19937_64& rng);
SelfAttentionBlockParams make_self_attention_block(std::size_t d, int heads, std::mt19937_64& rng);

// Queries c_prev (K x d) attend over key/value rows p (M x d); the attended
// value is added back onto the queries. No normalization or FFN here.
Tensor cross_attend(const Tensor& c_prev, const Tensor& p, const CrossAttentionParams& params);

// Shape-preserving block over a token sequence x (T x d).
Tensor self_attention_block(const Tensor& x, const SelfAttentionBlockParams& params);

} // namespace umeml

#endif
