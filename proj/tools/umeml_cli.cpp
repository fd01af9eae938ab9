// Command-line front end. Links only the C API: every flag is forwarded as a
// string key, defaults live behind the library, and results come back as
// malloc'd text. Exit codes: 0 success, 1 runtime failure, 2 usage error.
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <string>
#include <utility>

#include "CLI11.hpp"
#include "umeml/umeml.h"

namespace {

struct Config {
    umeml_config* handle = umeml_config_new();
    Config() {
        if (!handle) {
            std::fprintf(stderr, "error: out of memory\n");
            std::exit(1);
        }
    }
    ~Config() { umeml_config_free(handle); }
    Config(const Config&) = delete;
    Config& operator=(const Config&) = delete;
};

struct OwnedText {
    char* ptr = nullptr;
    ~OwnedText() { umeml_string_free(ptr); }
    char** out() { return &ptr; }
};

// One CLI flag bound to a config key. Values stay strings end to end; the
// library validates them, so a bad value surfaces as a usage error here.
struct Forward {
    std::string flag;
    std::string key;
    std::string value;
    CLI::Option* opt = nullptr;
};

class Flags {
public:
    explicit Flags(CLI::App* app) : app_(app) {}

    void add(const std::string& flag, const std::string& key, const std::string& desc) {
        rows_.push_back(Forward{flag, key, "", nullptr});
        rows_.back().opt = app_->add_option(flag, rows_.back().value, desc);
    }
    void add_bool(const std::string& flag, const std::string& key, const std::string& desc) {
        rows_.push_back(Forward{flag, key, "true", nullptr});
        rows_.back().opt = app_->add_flag(flag, desc);
    }

    // Copies every flag the user passed into cfg. seed_key, when nonempty and
    // not given explicitly, falls back to the UMEML_SEED environment variable.
    void apply(umeml_config* cfg, const std::string& seed_key = "") const {
        for (const Forward& row : rows_) {
            if (row.opt->count() == 0) continue;
            set_or_die(cfg, row.key, row.value, row.flag);
        }
        if (seed_key.empty()) return;
        for (const Forward& row : rows_) {
            if (row.key == seed_key && row.opt->count() > 0) return;
        }
        if (const char* env = std::getenv("UMEML_SEED"); env && *env)
            set_or_die(cfg, seed_key, env, "UMEML_SEED");
    }

private:
    static void set_or_die(umeml_config* cfg, const std::string& key, const std::string& value,
                           const std::string& origin) {
        if (umeml_config_set(cfg, key.c_str(), value.c_str()) != UMEML_OK) {
            std::fprintf(stderr, "error: %s (from %s)\n", umeml_last_error(), origin.c_str());
            std::exit(2);
        }
    }

    CLI::App* app_;
    // deque keeps element addresses stable; CLI11 binds references into rows_
    std::deque<Forward> rows_;
};

void add_training_flags(Flags& flags) {
    flags.add("--task", "task", "Objective: grading, classification, or survival (default grading)");
    flags.add("--variant", "variant",
              "Model variant: full, no_modularity, no_registers, bifusion, concat, add, "
              "path_only, gene_only (default full)");
    flags.add("--alpha", "alpha", "Assignment-entropy weight in the graph loss (default 1)");
    flags.add("--beta", "beta", "Prototype-balance weight in the graph loss (default 1)");
    flags.add("--gamma", "gamma", "Graph-loss weight in the objective; 0 disables it (default 0.1)");
    flags.add("--prototypes", "prototypes", "Pathology prototype count K (default 16)");
    flags.add("--registers", "registers", "Register token count I (default 4)");
    flags.add("--gene-groups", "gene_groups", "Gene-group count N (default: dataset rows)");
    flags.add("--width", "width", "Shared embedding width d (default: dataset patch width)");
    flags.add("--gene-width", "gene_width",
              "Raw gene-group width d_g (default: dataset gene width)");
    flags.add("--heads", "heads", "Attention heads (default 1)");
    flags.add("--cross-layers", "cross_layers", "Prototype cross-attention layers (default 2)");
    flags.add("--path-self-layers", "path_self_layers",
              "Pathology self-attention layers (default 2)");
    flags.add("--gene-self-layers", "gene_self_layers",
              "Genomic self-attention layers (default 2)");
    flags.add("--decoder-layers", "decoder_layers", "Unified decoder layers (default 2)");
    flags.add("--survival-bins", "survival_bins", "Discrete survival intervals (default 4)");
    flags.add("--lr", "lr",
              "Learning rate (default: 1e-3 for grading/classification, 2e-4 for survival)");
    flags.add("--epochs", "epochs",
              "Training epochs per fold (default: 10 for grading/classification, 5 for survival)");
    flags.add("--folds", "folds", "Cross-validation folds (default 5)");
    flags.add("--weight-decay", "weight_decay", "L2 weight decay (default 1e-5)");
    flags.add("--uncensored-weight", "uncensored_weight",
              "Extra weight on uncensored survival terms (default 1)");
    flags.add("--seed-base", "seed_base",
              "Base training seed; fold k trains with seed-base + k (default 0)");
    flags.add("--split-seed", "split_seed", "Fold-assignment shuffle seed (default 0)");
    flags.add_bool("--parallel-folds", "parallel_folds", "Train folds concurrently");
}

int finish(umeml_status status, const OwnedText& text) {
    if (text.ptr && *text.ptr) std::fputs(text.ptr, stdout);
    if (status == UMEML_OK) return 0;
    std::fprintf(stderr, "error: %s\n", umeml_last_error());
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"UMEML: prototype-bag pathology plus gene-group genomics with a unified "
                 "register-token decoder, trained and audited on synthetic planted-signal data.\n"
                 "Every command is deterministic given its flags. When a seed flag is omitted, "
                 "the UMEML_SEED environment variable, if set, replaces its default."};
    app.require_subcommand(1);

    CLI::App* gen = app.add_subcommand("gen-data", "Generate a synthetic multimodal dataset");
    Flags gen_flags(gen);
    gen_flags.add("--out", "out", "Output dataset directory (required)");
    gen->get_option("--out")->required();
    gen_flags.add("--samples", "samples", "Sample count (default 200)");
    gen_flags.add("--classes", "classes", "Class count (default 3)");
    gen_flags.add("--width", "width", "Patch feature width d (default 32)");
    gen_flags.add("--gene-width", "gene_width", "Gene-group feature width d_g (default 64)");
    gen_flags.add("--m-min", "m_min", "Minimum patches per sample (default 32)");
    gen_flags.add("--m-max", "m_max", "Maximum patches per sample (default 64)");
    gen_flags.add("--groups", "groups", "Gene groups per sample (default 6)");
    gen_flags.add("--signal-p", "signal_p", "Pathology signal shift (default 2)");
    gen_flags.add("--signal-g", "signal_g", "Genomic signal shift (default 2)");
    gen_flags.add("--noise", "noise", "Feature noise sigma (default 1)");
    gen_flags.add("--censor-rate", "censor_rate", "Survival censoring rate (default 0.3)");
    gen_flags.add("--base-hazard", "base_hazard", "Class-0 event rate per month (default 0.02)");
    gen_flags.add("--hazard-ratio", "hazard_ratio", "Hazard multiplier per class (default 3)");
    gen_flags.add("--seed", "seed", "Generator seed (default 1)");

    CLI::App* train = app.add_subcommand("train", "Run cross-validated training and report metrics");
    Flags train_flags(train);
    train_flags.add("--data", "data", "Dataset directory from gen-data (required)");
    train->get_option("--data")->required();
    train_flags.add("--out", "out", "Directory for fold records, losses, curves, and weights");
    add_training_flags(train_flags);

    CLI::App* ablate = app.add_subcommand(
        "ablate", "Compare full, no_modularity, bifusion, and no_registers on one dataset");
    Flags ablate_flags(ablate);
    ablate_flags.add("--data", "data", "Dataset directory from gen-data (required)");
    ablate->get_option("--data")->required();
    ablate_flags.add("--out", "out", "Parent directory; each variant writes to out/<variant>");
    add_training_flags(ablate_flags);

    CLI::App* base = app.add_subcommand(
        "baselines", "Compare concat, add, path_only, and gene_only fusion baselines");
    Flags base_flags(base);
    base_flags.add("--data", "data", "Dataset directory from gen-data (required)");
    base->get_option("--data")->required();
    base_flags.add("--out", "out", "Parent directory; each baseline writes to out/<variant>");
    add_training_flags(base_flags);

    CLI::App* grad = app.add_subcommand(
        "gradcheck", "Check every backward rule and the full loss against finite differences");
    Flags grad_flags(grad);
    grad_flags.add("--seeds", "seeds", "Random restarts per check (default 5)");
    grad_flags.add("--inject", "inject",
                   "Negate the named op's backward rule to prove the check catches it");

    CLI::App* oracle = app.add_subcommand(
        "oracle-check", "Check graph and metric implementations against brute-force oracles");
    Flags oracle_flags(oracle);
    oracle_flags.add("--seed", "seed", "Suite seed (default 2024)");

    CLI::App* curves = app.add_subcommand(
        "curves", "Rebuild ROC and time-dependent AUC point files from fold records");
    Flags curve_flags(curves);
    curve_flags.add("--results", "results", "Directory holding fold<k>_records.csv (required)");
    curves->get_option("--results")->required();
    curve_flags.add("--out", "out", "Directory for the curve CSV files (required)");
    curves->get_option("--out")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints help or the parse error
        return code == 0 ? 0 : 2;
    }

    Config cfg;
    if (gen->parsed()) {
        gen_flags.apply(cfg.handle, "seed");
        if (umeml_generate(cfg.handle) != UMEML_OK) {
            std::fprintf(stderr, "error: %s\n", umeml_last_error());
            return 1;
        }
        return 0;
    }
    if (train->parsed()) {
        train_flags.apply(cfg.handle, "seed_base");
        OwnedText text;
        return finish(umeml_train(cfg.handle, text.out()), text);
    }
    if (ablate->parsed()) {
        ablate_flags.apply(cfg.handle, "seed_base");
        OwnedText text;
        return finish(umeml_ablate(cfg.handle, text.out()), text);
    }
    if (base->parsed()) {
        base_flags.apply(cfg.handle, "seed_base");
        OwnedText text;
        return finish(umeml_baselines(cfg.handle, text.out()), text);
    }
    if (grad->parsed()) {
        grad_flags.apply(cfg.handle);
        OwnedText text;
        return finish(umeml_gradcheck(cfg.handle, text.out()), text);
    }
    if (oracle->parsed()) {
        oracle_flags.apply(cfg.handle, "seed");
        OwnedText text;
        return finish(umeml_oracle_check(cfg.handle, text.out()), text);
    }
    if (curves->parsed()) {
        curve_flags.apply(cfg.handle);
        OwnedText text;
        return finish(umeml_curves(cfg.handle, text.out()), text);
    }
    std::fprintf(stderr, "error: no subcommand\n");
    return 2;
}
