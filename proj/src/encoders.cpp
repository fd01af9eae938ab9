#include "umeml/encoders.hpp"

#include <cmath>
#include <string>

#include "umeml/error.hpp"

namespace umeml {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) fail(ErrorKind::dimension, msg);
}

Tensor embed_group(const Tensor& row, const GroupMlpParams& mlp) {
    Tensor hidden = relu(add(matmul(row, mlp.w1), mlp.b1));
    return add(matmul(hidden, mlp.w2), mlp.b2);
}

}  // namespace

PathologyEncoderParams make_pathology_encoder(std::size_t k, std::size_t d,
                                              std::size_t n_cross, std::size_t n_self,
                                              int heads, std::mt19937_64& rng) {
    if (k < 1) fail(ErrorKind::invalid_argument, "make_pathology_encoder: need k >= 1");
    const double sd = 1.0 / std::sqrt(static_cast<double>(d));
    PathologyEncoderParams p;
    p.init_prototypes = normal_tensor(k, d, 0.0, sd, rng);
    p.cls_token = normal_tensor(1, d, 0.0, sd, rng);
    for (std::size_t i = 0; i < n_cross; ++i) p.cross_layers.push_back(make_cross_attention(d, heads, rng));
    for (std::size_t i = 0; i < n_self; ++i) p.self_layers.push_back(make_self_attention_block(d, heads, rng));
    return p;
}

GenomicEncoderParams make_genomic_encoder(std::size_t n, std::size_t d_g, std::size_t d,
                                          std::size_t n_self, int heads,
                                          std::mt19937_64& rng) {
    if (n < 1) fail(ErrorKind::invalid_argument, "make_genomic_encoder: need n >= 1");
    const double b_in = 1.0 / std::sqrt(static_cast<double>(d_g));
    const double b_hidden = 1.0 / std::sqrt(static_cast<double>(d));
    const double sd = 1.0 / std::sqrt(static_cast<double>(d));
    GenomicEncoderParams p;
    for (std::size_t i = 0; i < n; ++i) {
        GroupMlpParams mlp;
        mlp.w1 = uniform_tensor(d_g, d, -b_in, b_in, rng);
        mlp.b1 = Tensor(1, d);
        mlp.w2 = uniform_tensor(d, d, -b_hidden, b_hidden, rng);
        mlp.b2 = Tensor(1, d);
        p.group_mlps.push_back(std::move(mlp));
    }
    p.gene_cls_token = normal_tensor(1, d, 0.0, sd, rng);
    for (std::size_t i = 0; i < n_self; ++i) p.self_layers.push_back(make_self_attention_block(d, heads, rng));
    return p;
}

Encoding encode_pathology(const Tensor& patches, const PathologyEncoderParams& params) {
    const std::size_t d = params.init_prototypes.cols;
    require(params.init_prototypes.rows >= 1, "encode_pathology: need at least one prototype");
    require(patches.rows >= 1, "encode_pathology: empty patch bag");
    require(patches.cols == d, "encode_pathology: patch width " + std::to_string(patches.cols) +
                                   " != prototype width " + std::to_string(d));
    require(params.cls_token.rows == 1 && params.cls_token.cols == d,
            "encode_pathology: class token must be 1 x width");

    Tensor c = params.init_prototypes;
    for (const CrossAttentionParams& layer : params.cross_layers) c = cross_attend(c, patches, layer);

    Tensor tokens = concat_rows({params.cls_token, c});
    for (const SelfAttentionBlockParams& layer : params.self_layers)
        tokens = self_attention_block(tokens, layer);

    return {tokens, c};
}

Encoding encode_genomic(const Tensor& groups, const GenomicEncoderParams& params) {
    const std::size_t n = params.group_mlps.size();
    require(n >= 1, "encode_genomic: need at least one group perceptron");
    require(groups.rows == n, "encode_genomic: got " + std::to_string(groups.rows) +
                                  " groups, params expect " + std::to_string(n));
    const std::size_t d_g = params.group_mlps[0].w1.rows;
    const std::size_t d = params.group_mlps[0].w1.cols;
    require(groups.cols == d_g, "encode_genomic: group width " + std::to_string(groups.cols) +
                                    " != perceptron input width " + std::to_string(d_g));
    require(params.gene_cls_token.rows == 1 && params.gene_cls_token.cols == d,
            "encode_genomic: class token must be 1 x width");

    Tensor prototypes = embed_group(slice(groups, 0, 1, 0, d_g), params.group_mlps[0]);
    for (std::size_t i = 1; i < n; ++i)
        prototypes = concat_rows({prototypes, embed_group(slice(groups, i, 1, 0, d_g), params.group_mlps[i])});

    Tensor tokens = concat_rows({params.gene_cls_token, prototypes});
    for (const SelfAttentionBlockParams& layer : params.self_layers)
        tokens = self_attention_block(tokens, layer);

    return {tokens, prototypes};
}

}  // namespace umeml
