#include "umeml/model.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <vector>

#include "umeml/error.hpp"

namespace umeml {

namespace {

// Pooled width feeding the task heads: the decoder variants and the two-way
// cross-attention concatenate two class tokens, `add` and the unimodal
// variants pool a single one.
std::size_t pooled_width(Variant v, std::size_t d) {
    switch (v) {
        case Variant::full:
        case Variant::no_modularity:
        case Variant::no_registers:
        case Variant::bifusion:
        case Variant::concat:
            return 2 * d;
        case Variant::add:
        case Variant::path_only:
        case Variant::gene_only:
            return d;
    }
    fail(ErrorKind::invalid_argument, "unknown variant");
}

bool variant_has_decoder(Variant v) {
    return v == Variant::full || v == Variant::no_modularity || v == Variant::no_registers;
}

void visit_cross(const std::string& prefix, CrossAttentionParams& p,
                 const std::function<void(const std::string&, Tensor&)>& fn) {
    fn(prefix + ".w_q", p.w_q);
    fn(prefix + ".w_k", p.w_k);
    fn(prefix + ".w_v", p.w_v);
}

void visit_block(const std::string& prefix, SelfAttentionBlockParams& p,
                 const std::function<void(const std::string&, Tensor&)>& fn) {
    fn(prefix + ".w_q", p.w_q);
    fn(prefix + ".w_k", p.w_k);
    fn(prefix + ".w_v", p.w_v);
    fn(prefix + ".w_o", p.w_o);
    fn(prefix + ".ffn_w1", p.ffn_w1);
    fn(prefix + ".ffn_w2", p.ffn_w2);
    fn(prefix + ".ln1_gain", p.ln1_gain);
    fn(prefix + ".ln1_bias", p.ln1_bias);
    fn(prefix + ".ln2_gain", p.ln2_gain);
    fn(prefix + ".ln2_bias", p.ln2_bias);
}

const Tensor& task_head(const FusionParams& fusion, Task task) {
    switch (task) {
        case Task::grading: return fusion.head_grading;
        case Task::classification: return fusion.head_class;
        case Task::survival: return fusion.head_survival;
    }
    fail(ErrorKind::invalid_argument, "unknown task");
}

Tensor cls_row(const Tensor& tokens) { return slice(tokens, 0, 1, 0, tokens.cols); }

}  // namespace

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::no_modularity: return "no_modularity";
        case Variant::no_registers: return "no_registers";
        case Variant::bifusion: return "bifusion";
        case Variant::concat: return "concat";
        case Variant::add: return "add";
        case Variant::path_only: return "path_only";
        case Variant::gene_only: return "gene_only";
    }
    fail(ErrorKind::invalid_argument, "unknown variant");
}

Variant parse_variant(const std::string& name) {
    for (Variant v : {Variant::full, Variant::no_modularity, Variant::no_registers,
                      Variant::bifusion, Variant::concat, Variant::add, Variant::path_only,
                      Variant::gene_only}) {
        if (name == variant_name(v)) return v;
    }
    fail(ErrorKind::invalid_argument, "unknown variant: " + name);
}

bool variant_uses_pathology(Variant v) { return v != Variant::gene_only; }
bool variant_uses_genomic(Variant v) { return v != Variant::path_only; }

bool variant_uses_modularity(Variant v) {
    return v == Variant::full || v == Variant::no_registers || v == Variant::bifusion;
}

ModelParams make_model(Variant variant, const ModelConfig& config, std::uint64_t seed) {
    if (config.d == 0 || config.k == 0 || config.n == 0 || config.d_g == 0)
        fail(ErrorKind::invalid_argument, "make_model: dimensions must be positive");
    std::mt19937_64 rng(seed);
    ModelParams p;
    p.variant = variant;
    p.config = config;

    if (variant_uses_pathology(variant))
        p.path_enc = make_pathology_encoder(config.k, config.d, config.cross_layers,
                                            config.path_self_layers, config.heads, rng);
    if (variant_uses_genomic(variant))
        p.gene_enc = make_genomic_encoder(config.n, config.d_g, config.d,
                                          config.gene_self_layers, config.heads, rng);

    const std::size_t n_registers = variant == Variant::no_registers ? 0 : config.i;
    if (variant_has_decoder(variant)) {
        p.fusion = make_fusion(n_registers, config.d, config.decoder_layers, config.heads,
                               config.head_widths, rng);
    } else {
        if (variant == Variant::bifusion) p.bifusion = make_bi_fusion(config.d, config.heads, rng);
        const std::size_t w = pooled_width(variant, config.d);
        const double b = 1.0 / std::sqrt(static_cast<double>(w));
        p.fusion.head_grading = uniform_tensor(w, config.head_widths.n_grade, -b, b, rng);
        p.fusion.head_class = uniform_tensor(w, config.head_widths.n_class, -b, b, rng);
        p.fusion.head_survival = uniform_tensor(w, config.head_widths.n_bins, -b, b, rng);
    }
    return p;
}

void visit_params(ModelParams& params,
                  const std::function<void(const std::string&, Tensor&)>& fn) {
    if (variant_uses_pathology(params.variant)) {
        fn("path.init_prototypes", params.path_enc.init_prototypes);
        fn("path.cls_token", params.path_enc.cls_token);
        for (std::size_t i = 0; i < params.path_enc.cross_layers.size(); ++i)
            visit_cross("path.cross" + std::to_string(i), params.path_enc.cross_layers[i], fn);
        for (std::size_t i = 0; i < params.path_enc.self_layers.size(); ++i)
            visit_block("path.self" + std::to_string(i), params.path_enc.self_layers[i], fn);
    }
    if (variant_uses_genomic(params.variant)) {
        for (std::size_t i = 0; i < params.gene_enc.group_mlps.size(); ++i) {
            const std::string prefix = "gene.mlp" + std::to_string(i);
            fn(prefix + ".w1", params.gene_enc.group_mlps[i].w1);
            fn(prefix + ".b1", params.gene_enc.group_mlps[i].b1);
            fn(prefix + ".w2", params.gene_enc.group_mlps[i].w2);
            fn(prefix + ".b2", params.gene_enc.group_mlps[i].b2);
        }
        fn("gene.cls_token", params.gene_enc.gene_cls_token);
        for (std::size_t i = 0; i < params.gene_enc.self_layers.size(); ++i)
            visit_block("gene.self" + std::to_string(i), params.gene_enc.self_layers[i], fn);
    }
    if (params.fusion.registers.rows > 0) fn("fusion.registers", params.fusion.registers);
    for (std::size_t i = 0; i < params.fusion.decoder_layers.size(); ++i)
        visit_block("fusion.decoder" + std::to_string(i), params.fusion.decoder_layers[i], fn);
    if (params.variant == Variant::bifusion) {
        visit_cross("bifusion.path_from_gene", params.bifusion.path_from_gene, fn);
        visit_cross("bifusion.gene_from_path", params.bifusion.gene_from_path, fn);
    }
    fn("head.grading", params.fusion.head_grading);
    fn("head.class", params.fusion.head_class);
    fn("head.survival", params.fusion.head_survival);
}

std::size_t param_count(ModelParams& params) {
    std::size_t total = 0;
    visit_params(params, [&](const std::string&, Tensor& t) { total += t.size(); });
    return total;
}

void bind_params(ModelParams& params, Tape& tape) {
    visit_params(params, [&](const std::string&, Tensor& t) { t = tape.leaf(t); });
}

void detach_params(ModelParams& params) {
    visit_params(params, [](const std::string&, Tensor& t) {
        t.tape = nullptr;
        t.node = -1;
    });
}

namespace {

constexpr char kParamsMagic[4] = {'U', 'M', 'P', 'K'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
    if (pos + 4 > in.size()) fail(ErrorKind::format, "parameter snapshot truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + static_cast<std::size_t>(i)])) << (8 * i);
    pos += 4;
    return v;
}

double get_f64(const std::string& in, std::size_t& pos) {
    if (pos + 8 > in.size()) fail(ErrorKind::format, "parameter snapshot truncated");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + static_cast<std::size_t>(i)])) << (8 * i);
    pos += 8;
    double v = 0.0;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

}  // namespace

void save_params(ModelParams& params, const std::string& path) {
    std::string out(kParamsMagic, 4);
    std::uint32_t count = 0;
    visit_params(params, [&](const std::string&, Tensor&) { ++count; });
    put_u32(out, count);
    visit_params(params, [&](const std::string& name, Tensor& t) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.append(name);
        put_u32(out, static_cast<std::uint32_t>(t.rows));
        put_u32(out, static_cast<std::uint32_t>(t.cols));
        for (double v : t.data) put_f64(out, v);
    });
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::io, "cannot open for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f.good()) fail(ErrorKind::io, "write failed: " + path);
}

void load_params(ModelParams& params, const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::io, "cannot open for reading: " + path);
    std::string in((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (in.size() < 8 || std::memcmp(in.data(), kParamsMagic, 4) != 0)
        fail(ErrorKind::format, "bad parameter snapshot magic in " + path);
    std::size_t pos = 4;
    const std::uint32_t count = get_u32(in, pos);

    std::uint32_t expected = 0;
    visit_params(params, [&](const std::string&, Tensor&) { ++expected; });
    if (count != expected)
        fail(ErrorKind::format, "parameter snapshot holds " + std::to_string(count) +
                                    " tensors, model expects " + std::to_string(expected));

    visit_params(params, [&](const std::string& name, Tensor& t) {
        const std::uint32_t name_len = get_u32(in, pos);
        if (pos + name_len > in.size()) fail(ErrorKind::format, "parameter snapshot truncated");
        const std::string stored(in, pos, name_len);
        pos += name_len;
        if (stored != name)
            fail(ErrorKind::format, "parameter snapshot tensor '" + stored +
                                        "' does not match model tensor '" + name + "'");
        const std::uint32_t rows = get_u32(in, pos);
        const std::uint32_t cols = get_u32(in, pos);
        if (rows != t.rows || cols != t.cols)
            fail(ErrorKind::format, "parameter snapshot shape mismatch for '" + name + "'");
        for (double& v : t.data) v = get_f64(in, pos);
    });
    if (pos != in.size()) fail(ErrorKind::format, "trailing bytes in parameter snapshot " + path);
}

ModelOutput forward(const ModelParams& params, const Tensor& patches, const Tensor& genes,
                    Task task, bool want_modularity, double alpha, double beta) {
    const Variant v = params.variant;
    ModelOutput out;

    Encoding pe, ge;
    if (variant_uses_pathology(v)) pe = encode_pathology(patches, params.path_enc);
    if (variant_uses_genomic(v)) ge = encode_genomic(genes, params.gene_enc);

    switch (v) {
        case Variant::full:
        case Variant::no_modularity:
        case Variant::no_registers: {
            Tensor u = concat_with_registers(pe.tokens, ge.tokens, params.fusion.registers);
            Tensor decoded = decode_unified(u, params.fusion.decoder_layers);
            out.logits = pool_and_head(decoded, pe.tokens.rows, task, params.fusion);
            break;
        }
        case Variant::bifusion: {
            Tensor pooled = bi_fusion(pe.tokens, ge.tokens, params.bifusion);
            out.logits = matmul(pooled, task_head(params.fusion, task));
            break;
        }
        case Variant::concat: {
            Tensor pooled = concat_cols({cls_row(pe.tokens), cls_row(ge.tokens)});
            out.logits = matmul(pooled, task_head(params.fusion, task));
            break;
        }
        case Variant::add: {
            Tensor pooled = add(cls_row(pe.tokens), cls_row(ge.tokens));
            out.logits = matmul(pooled, task_head(params.fusion, task));
            break;
        }
        case Variant::path_only: {
            out.logits = matmul(cls_row(pe.tokens), task_head(params.fusion, task));
            break;
        }
        case Variant::gene_only: {
            out.logits = matmul(cls_row(ge.tokens), task_head(params.fusion, task));
            break;
        }
    }

    if (want_modularity && variant_uses_modularity(v)) {
        AssignmentBundle bundle = make_assignment_bundle(pe.prototypes, ge.prototypes, patches);
        out.modularity = modularity_loss(bundle, alpha, beta);
        out.has_modularity = true;
    }
    return out;
}

}  // namespace umeml
