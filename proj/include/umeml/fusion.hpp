// Cross-modal fusion: register tokens inserted between the two modality
// token sets, a unified self-attention decoder over the combined sequence,
// linear task heads over the two decoded class tokens, and a two-way
// cross-attention alternative used for ablation.
#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "umeml/attention.hpp"
#include "umeml/tensor.hpp"

namespace umeml {

enum class Task { grading, classification, survival };

const char* task_name(Task task);
Task parse_task(const std::string& name);

struct FusionParams {
    Tensor registers;  // I x d; zero rows disables the mechanism
    std::vector<SelfAttentionBlockParams> decoder_layers;
    Tensor head_grading;   // 2d x n_grade
    Tensor head_class;     // 2d x n_class
    Tensor head_survival;  // 2d x n_bins
};

struct BiFusionParams {
    CrossAttentionParams path_from_gene;
    CrossAttentionParams gene_from_path;
};

struct HeadWidths {
    std::size_t n_grade = 3;
    std::size_t n_class = 3;
    std::size_t n_bins = 4;
};

// Register rows are drawn only when n_registers > 0, so parameter streams for
// the register-free variant match the full model elsewhere.
FusionParams make_fusion(std::size_t n_registers, std::size_t d, std::size_t n_decoder,
                         int heads, const HeadWidths& widths, std::mt19937_64& rng);
BiFusionParams make_bi_fusion(std::size_t d, int heads, std::mt19937_64& rng);

// Row order of the combined sequence: pathology tokens, registers, genomic
// tokens. The pathology class token stays at row 0; the genomic class token
// lands at path_tokens.rows + registers.rows.
Tensor concat_with_registers(const Tensor& path_tokens, const Tensor& gene_tokens,
                             const Tensor& registers);

Tensor decode_unified(const Tensor& u, const std::vector<SelfAttentionBlockParams>& layers);

// Pools the two decoded class tokens (rows 0 and n_path_tokens + I) into a
// 1 x 2d vector and applies the task's linear head. Register rows never feed
// the head. n_path_tokens counts the pathology rows including its class token.
Tensor pool_and_head(const Tensor& decoded, std::size_t n_path_tokens, Task task,
                     const FusionParams& params);

// Each modality cross-attends into the other; the two class-token rows of the
// results are concatenated into a 1 x 2d vector.
Tensor bi_fusion(const Tensor& path_tokens, const Tensor& gene_tokens,
                 const BiFusionParams& params);

}  // namespace umeml
