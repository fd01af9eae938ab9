// Unimodal encoders: a prototype-query pathology encoder that compresses a
// variable-size patch bag into K prototype vectors, and a genomic encoder
// that embeds fixed gene groups and models their interrelations.
#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "umeml/attention.hpp"
#include "umeml/tensor.hpp"

namespace umeml {

struct PathologyEncoderParams {
    Tensor init_prototypes;  // K x d, the learnable queries
    Tensor cls_token;        // 1 x d, prepended before self-attention
    std::vector<CrossAttentionParams> cross_layers;
    std::vector<SelfAttentionBlockParams> self_layers;
};

// One gene group's embedding perceptron: d_g -> d -> d with a relu hidden.
struct GroupMlpParams {
    Tensor w1;  // d_g x d
    Tensor b1;  // 1 x d
    Tensor w2;  // d x d
    Tensor b2;  // 1 x d
};

struct GenomicEncoderParams {
    std::vector<GroupMlpParams> group_mlps;  // one per gene group
    Tensor gene_cls_token;                   // 1 x d
    std::vector<SelfAttentionBlockParams> self_layers;
};

// Both encoders yield the full token sequence (class token at row 0) plus
// the prototype rows used by the assignment stage.
struct Encoding {
    Tensor tokens;      // (K+1) x d or (N+1) x d
    Tensor prototypes;  // K x d or N x d
};

PathologyEncoderParams make_pathology_encoder(std::size_t k, std::size_t d,
                                              std::size_t n_cross, std::size_t n_self,
                                              int heads, std::mt19937_64& rng);
GenomicEncoderParams make_genomic_encoder(std::size_t n, std::size_t d_g, std::size_t d,
                                          std::size_t n_self, int heads,
                                          std::mt19937_64& rng);

// Cross-attention rounds update the prototypes from the patch bag, then the
// class token is prepended and the self-attention stack runs over all rows.
// `prototypes` is the post-cross-attention state, before the class token.
Encoding encode_pathology(const Tensor& patches, const PathologyEncoderParams& params);

// Each group row is embedded by its own perceptron; the embedded rows are the
// genomic prototypes. The class token is prepended and the self-attention
// stack runs over the combined sequence.
Encoding encode_genomic(const Tensor& groups, const GenomicEncoderParams& params);

}  // namespace umeml
