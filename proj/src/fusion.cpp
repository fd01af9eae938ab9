#include "umeml/fusion.hpp"

#include <cmath>
#include <string>

#include "umeml/error.hpp"

namespace umeml {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) fail(ErrorKind::dimension, msg);
}

}  // namespace

const char* task_name(Task task) {
    switch (task) {
        case Task::grading: return "grading";
        case Task::classification: return "classification";
        case Task::survival: return "survival";
    }
    fail(ErrorKind::invalid_argument, "unknown task");
}

Task parse_task(const std::string& name) {
    for (Task t : {Task::grading, Task::classification, Task::survival}) {
        if (name == task_name(t)) return t;
    }
    fail(ErrorKind::invalid_argument, "unknown task: " + name);
}

FusionParams make_fusion(std::size_t n_registers, std::size_t d, std::size_t n_decoder,
                         int heads, const HeadWidths& widths, std::mt19937_64& rng) {
    const double sd = 1.0 / std::sqrt(static_cast<double>(d));
    const double b_head = 1.0 / std::sqrt(static_cast<double>(2 * d));
    FusionParams p;
    if (n_registers > 0) p.registers = normal_tensor(n_registers, d, 0.0, sd, rng);
    for (std::size_t i = 0; i < n_decoder; ++i)
        p.decoder_layers.push_back(make_self_attention_block(d, heads, rng));
    p.head_grading = uniform_tensor(2 * d, widths.n_grade, -b_head, b_head, rng);
    p.head_class = uniform_tensor(2 * d, widths.n_class, -b_head, b_head, rng);
    p.head_survival = uniform_tensor(2 * d, widths.n_bins, -b_head, b_head, rng);
    return p;
}

BiFusionParams make_bi_fusion(std::size_t d, int heads, std::mt19937_64& rng) {
    BiFusionParams p;
    p.path_from_gene = make_cross_attention(d, heads, rng);
    p.gene_from_path = make_cross_attention(d, heads, rng);
    return p;
}

Tensor concat_with_registers(const Tensor& path_tokens, const Tensor& gene_tokens,
                             const Tensor& registers) {
    require(path_tokens.cols == gene_tokens.cols,
            "concat_with_registers: modality widths differ (" + path_tokens.shape_str() +
                " vs " + gene_tokens.shape_str() + ")");
    if (registers.rows == 0) return concat_rows({path_tokens, gene_tokens});
    require(registers.cols == path_tokens.cols,
            "concat_with_registers: register width " + std::to_string(registers.cols) +
                " != token width " + std::to_string(path_tokens.cols));
    return concat_rows({path_tokens, registers, gene_tokens});
}

Tensor decode_unified(const Tensor& u, const std::vector<SelfAttentionBlockParams>& layers) {
    Tensor out = u;
    for (const SelfAttentionBlockParams& layer : layers) out = self_attention_block(out, layer);
    return out;
}

Tensor pool_and_head(const Tensor& decoded, std::size_t n_path_tokens, Task task,
                     const FusionParams& params) {
    const std::size_t d = decoded.cols;
    const std::size_t gene_cls_row = n_path_tokens + params.registers.rows;
    require(n_path_tokens >= 1 && gene_cls_row < decoded.rows,
            "pool_and_head: token layout exceeds decoded sequence of " +
                std::to_string(decoded.rows) + " rows");

    const Tensor* head = nullptr;
    switch (task) {
        case Task::grading: head = &params.head_grading; break;
        case Task::classification: head = &params.head_class; break;
        case Task::survival: head = &params.head_survival; break;
    }
    if (head == nullptr) fail(ErrorKind::invalid_argument, "pool_and_head: unknown task");
    require(head->rows == 2 * d, "pool_and_head: head expects width " + std::to_string(head->rows) +
                                     ", pooled vector has " + std::to_string(2 * d));

    Tensor pooled = concat_cols({slice(decoded, 0, 1, 0, d), slice(decoded, gene_cls_row, 1, 0, d)});
    return matmul(pooled, *head);
}

Tensor bi_fusion(const Tensor& path_tokens, const Tensor& gene_tokens,
                 const BiFusionParams& params) {
    require(path_tokens.cols == gene_tokens.cols,
            "bi_fusion: modality widths differ (" + path_tokens.shape_str() + " vs " +
                gene_tokens.shape_str() + ")");
    const std::size_t d = path_tokens.cols;
    Tensor path_mixed = cross_attend(path_tokens, gene_tokens, params.path_from_gene);
    Tensor gene_mixed = cross_attend(gene_tokens, path_tokens, params.gene_from_path);
    return concat_cols({slice(path_mixed, 0, 1, 0, d), slice(gene_mixed, 0, 1, 0, d)});
}

}  // namespace umeml
