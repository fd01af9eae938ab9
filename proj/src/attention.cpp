#include "umeml/attention.hpp"

#include <cmath>

namespace umeml {

namespace {

void check_heads(std::size_t d, int heads) {
    if (heads < 1 || d % static_cast<std::size_t>(heads) != 0)
        fail(ErrorKind::invalid_argument,
             "head count " + std::to_string(heads) + " must divide width " + std::to_string(d));
}

// scaled dot-product attention over already-projected q (Tq x d), k, v (Tk x d)
Tensor attend(const Tensor& q, const Tensor& k, const Tensor& v, int heads) {
    const std::size_t d = q.cols;
    check_heads(d, heads);
    const std::size_t dh = d / static_cast<std::size_t>(heads);
    const double inv_temp = 1.0 / std::sqrt(static_cast<double>(dh));

    auto one_head = [&](const Tensor& qh, const Tensor& kh, const Tensor& vh) {
        Tensor scores = scale(matmul(qh, transpose(kh)), inv_temp);
        return matmul(softmax_rows(scores), vh);
    };

    if (heads == 1) return one_head(q, k, v);
    std::vector<Tensor> outs;
    outs.reserve(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
        const std::size_t c0 = static_cast<std::size_t>(h) * dh;
        outs.push_back(one_head(slice(q, 0, q.rows, c0, dh),
                                slice(k, 0, k.rows, c0, dh),
                                slice(v, 0, v.rows, c0, dh)));
    }
    return concat_cols(outs);
}

} // namespace

CrossAttentionParams make_cross_attention(std::size_t d, int heads, std::mt19937_64& rng) {
    check_heads(d, heads);
    const double b = 1.0 / std::sqrt(static_cast<double>(d));
    CrossAttentionParams p;
    p.w_q = uniform_tensor(d, d, -b, b, rng);
    p.w_k = uniform_tensor(d, d, -b, b, rng);
    p.w_v = uniform_tensor(d, d, -b, b, rng);
    p.heads = heads;
    return p;
}

SelfAttentionBlockParams make_self_attention_block(std::size_t d, int heads, std::mt19937_64& rng) {
    check_heads(d, heads);
    const double b = 1.0 / std::sqrt(static_cast<double>(d));
    const double b_wide = 1.0 / std::sqrt(static_cast<double>(4 * d));
    SelfAttentionBlockParams p;
    p.w_q = uniform_tensor(d, d, -b, b, rng);
    p.w_k = uniform_tensor(d, d, -b, b, rng);
    p.w_v = uniform_tensor(d, d, -b, b, rng);
    p.w_o = uniform_tensor(d, d, -b, b, rng);
    p.ffn_w1 = uniform_tensor(d, 4 * d, -b, b, rng);
    p.ffn_w2 = uniform_tensor(4 * d, d, -b_wide, b_wide, rng);
    p.ln1_gain = Tensor(1, d, 1.0);
    p.ln1_bias = Tensor(1, d, 0.0);
    p.ln2_gain = Tensor(1, d, 1.0);
    p.ln2_bias = Tensor(1, d, 0.0);
    p.heads = heads;
    return p;
}

Tensor cross_attend(const Tensor& c_prev, const Tensor& p, const CrossAttentionParams& params) {
    if (c_prev.rows < 1 || p.rows < 1)
        fail(ErrorKind::invalid_argument, "cross_attend: empty query or key set");
    if (c_prev.cols != p.cols || params.w_q.rows != c_prev.cols)
        fail(ErrorKind::dimension,
             "cross_attend: width mismatch (queries " + c_prev.shape_str() + ", keys " +
                 p.shape_str() + ", w_q " + params.w_q.shape_str() + ")");

    Tensor q = matmul(c_prev, params.w_q);
    Tensor k = matmul(p, params.w_k);
    Tensor v = matmul(p, params.w_v);
    return add(c_prev, attend(q, k, v, params.heads));
}

Tensor self_attention_block(const Tensor& x, const SelfAttentionBlockParams& params) {
    if (x.rows < 1) fail(ErrorKind::invalid_argument, "self_attention_block: empty sequence");
    if (params.w_q.rows != x.cols)
        fail(ErrorKind::dimension, "self_attention_block: width mismatch (x " + x.shape_str() +
                                       ", w_q " + params.w_q.shape_str() + ")");

    Tensor h1 = layer_norm_rows(x, params.ln1_gain, params.ln1_bias);
    Tensor attended = attend(matmul(h1, params.w_q), matmul(h1, params.w_k),
                             matmul(h1, params.w_v), params.heads);
    Tensor y = add(x, matmul(attended, params.w_o));

    Tensor h2 = layer_norm_rows(y, params.ln2_gain, params.ln2_bias);
    Tensor ffn = matmul(relu(matmul(h2, params.ffn_w1)), params.ffn_w2);
    return add(y, ffn);
}

} // namespace umeml
