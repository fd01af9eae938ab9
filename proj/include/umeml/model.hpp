// Whole-model composition: one parameter bundle per variant, deterministic
// initialization, a named-tensor visitor for optimizers and serialization,
// and the per-variant forward pass producing task logits and (where the
// variant uses it) the modularity penalty.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

#include "umeml/assignment.hpp"
#include "umeml/encoders.hpp"
#include "umeml/fusion.hpp"
#include "umeml/tensor.hpp"

namespace umeml {

enum class Variant {
    full,
    no_modularity,
    no_registers,
    bifusion,
    concat,
    add,
    path_only,
    gene_only,
};

const char* variant_name(Variant v);
Variant parse_variant(const std::string& name);

// Which inputs and penalty terms a variant touches.
bool variant_uses_pathology(Variant v);
bool variant_uses_genomic(Variant v);
bool variant_uses_modularity(Variant v);

struct ModelConfig {
    std::size_t k = 16;          // pathology prototypes
    std::size_t n = 6;           // gene groups
    std::size_t i = 4;           // register tokens
    std::size_t d = 32;          // shared width
    std::size_t d_g = 64;        // raw gene-group width
    std::size_t cross_layers = 2;
    std::size_t path_self_layers = 2;
    std::size_t gene_self_layers = 2;
    std::size_t decoder_layers = 2;
    int heads = 1;
    HeadWidths head_widths;
};

struct ModelParams {
    Variant variant = Variant::full;
    ModelConfig config;
    PathologyEncoderParams path_enc;  // present unless gene_only
    GenomicEncoderParams gene_enc;    // present unless path_only
    FusionParams fusion;              // heads always live here; registers and
                                      // decoder only for the decoder variants
    BiFusionParams bifusion;          // bifusion variant only
};

// Deterministic construction from a seed. Unimodal variants skip the other
// encoder's draws entirely; the register block is skipped when i == 0.
ModelParams make_model(Variant variant, const ModelConfig& config, std::uint64_t seed);

// Visits every trainable tensor in a fixed order with a stable dotted name
// (e.g. "path.cross0.w_q"). The same order for equal variant and config.
void visit_params(ModelParams& params,
                  const std::function<void(const std::string&, Tensor&)>& fn);
std::size_t param_count(ModelParams& params);  // total scalar count

// Re-registers every trainable tensor as a leaf on the tape. Call once per
// forward/backward cycle, before forward().
void bind_params(ModelParams& params, Tape& tape);

// Clears tape bindings so the params can outlive the tape they trained on.
void detach_params(ModelParams& params);

// Binary final-state snapshot: named tensors with shapes and full-precision
// values. Loading requires a params object of the same variant and config.
void save_params(ModelParams& params, const std::string& path);
void load_params(ModelParams& params, const std::string& path);

struct ModelOutput {
    Tensor logits;          // 1 x task width
    Tensor modularity;      // 1 x 1; empty when not computed
    bool has_modularity = false;
};

// Runs the variant's pipeline. Unused modality tensors may be empty. Set
// want_modularity false to skip the penalty even for variants that support
// it (the zero-weight case); it is never computed for variants without it.
ModelOutput forward(const ModelParams& params, const Tensor& patches, const Tensor& genes,
                    Task task, bool want_modularity, double alpha, double beta);

}  // namespace umeml
