#include "umeml/umeml.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <map>
#include <new>
#include <set>
#include <string>
#include <vector>

#include "umeml/datakit.hpp"
#include "umeml/error.hpp"
#include "umeml/harness.hpp"
#include "umeml/verify.hpp"

namespace {

using namespace umeml;

thread_local std::string g_last_error = "";

umeml_status status_of(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_argument: return UMEML_ERR_INVALID_ARGUMENT;
        case ErrorKind::dimension: return UMEML_ERR_DIMENSION;
        case ErrorKind::io: return UMEML_ERR_IO;
        case ErrorKind::format: return UMEML_ERR_FORMAT;
        case ErrorKind::runtime: return UMEML_ERR_RUNTIME;
    }
    return UMEML_ERR_RUNTIME;
}

template <typename F>
umeml_status guarded(F&& body) {
    try {
        return body();
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_of(e.kind());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return UMEML_ERR_RUNTIME;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return UMEML_ERR_RUNTIME;
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

enum class KeyKind { text, size, u64, real, flag, task, variant };

const std::map<std::string, KeyKind>& key_table() {
    static const std::map<std::string, KeyKind> keys = {
        {"out", KeyKind::text},
        {"data", KeyKind::text},
        {"results", KeyKind::text},
        {"inject", KeyKind::text},
        {"samples", KeyKind::size},
        {"classes", KeyKind::size},
        {"width", KeyKind::size},
        {"gene_width", KeyKind::size},
        {"m_min", KeyKind::size},
        {"m_max", KeyKind::size},
        {"groups", KeyKind::size},
        {"gene_groups", KeyKind::size},
        {"prototypes", KeyKind::size},
        {"registers", KeyKind::size},
        {"heads", KeyKind::size},
        {"cross_layers", KeyKind::size},
        {"path_self_layers", KeyKind::size},
        {"gene_self_layers", KeyKind::size},
        {"decoder_layers", KeyKind::size},
        {"survival_bins", KeyKind::size},
        {"epochs", KeyKind::size},
        {"folds", KeyKind::size},
        {"seeds", KeyKind::size},
        {"seed", KeyKind::u64},
        {"seed_base", KeyKind::u64},
        {"split_seed", KeyKind::u64},
        {"signal_p", KeyKind::real},
        {"signal_g", KeyKind::real},
        {"noise", KeyKind::real},
        {"censor_rate", KeyKind::real},
        {"base_hazard", KeyKind::real},
        {"hazard_ratio", KeyKind::real},
        {"alpha", KeyKind::real},
        {"beta", KeyKind::real},
        {"gamma", KeyKind::real},
        {"lr", KeyKind::real},
        {"weight_decay", KeyKind::real},
        {"uncensored_weight", KeyKind::real},
        {"parallel_folds", KeyKind::flag},
        {"task", KeyKind::task},
        {"variant", KeyKind::variant},
    };
    return keys;
}

bool full_parse_u64(const std::string& s, std::uint64_t* out) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) return false;
    try {
        std::size_t used = 0;
        *out = std::stoull(s, &used);
        return used == s.size();
    } catch (const std::exception&) {
        return false;
    }
}

bool full_parse_real(const std::string& s, double* out) {
    try {
        std::size_t used = 0;
        *out = std::stod(s, &used);
        return used == s.size() && !s.empty();
    } catch (const std::exception&) {
        return false;
    }
}

bool parse_flag(const std::string& s, bool* out) {
    if (s == "true" || s == "1") { *out = true; return true; }
    if (s == "false" || s == "0") { *out = false; return true; }
    return false;
}

void validate_value(const std::string& key, KeyKind kind, const std::string& value) {
    switch (kind) {
        case KeyKind::text:
            if (key == "inject" && !value.empty()) {
                const std::vector<std::string> names = backward_rule_names();
                if (std::find(names.begin(), names.end(), value) == names.end())
                    fail(ErrorKind::invalid_argument, "unknown backward rule '" + value + "'");
            }
            return;
        case KeyKind::size:
        case KeyKind::u64: {
            std::uint64_t v = 0;
            if (!full_parse_u64(value, &v))
                fail(ErrorKind::invalid_argument,
                     "key '" + key + "' wants a nonnegative integer, got '" + value + "'");
            return;
        }
        case KeyKind::real: {
            double v = 0.0;
            if (!full_parse_real(value, &v))
                fail(ErrorKind::invalid_argument,
                     "key '" + key + "' wants a number, got '" + value + "'");
            return;
        }
        case KeyKind::flag: {
            bool v = false;
            if (!parse_flag(value, &v))
                fail(ErrorKind::invalid_argument,
                     "key '" + key + "' wants true or false, got '" + value + "'");
            return;
        }
        case KeyKind::task:
            parse_task(value);  // throws on unknown
            return;
        case KeyKind::variant:
            parse_variant(value);
            return;
    }
}

}  // namespace

struct umeml_config {
    std::map<std::string, std::string> values;

    bool has(const std::string& key) const { return values.count(key) != 0; }

    std::string text(const std::string& key, const std::string& fallback = "") const {
        auto it = values.find(key);
        return it == values.end() ? fallback : it->second;
    }
    std::size_t size_of(const std::string& key, std::size_t fallback) const {
        auto it = values.find(key);
        if (it == values.end()) return fallback;
        std::uint64_t v = 0;
        full_parse_u64(it->second, &v);
        return static_cast<std::size_t>(v);
    }
    std::uint64_t u64(const std::string& key, std::uint64_t fallback) const {
        auto it = values.find(key);
        if (it == values.end()) return fallback;
        std::uint64_t v = 0;
        full_parse_u64(it->second, &v);
        return v;
    }
    double real(const std::string& key, double fallback) const {
        auto it = values.find(key);
        if (it == values.end()) return fallback;
        double v = 0.0;
        full_parse_real(it->second, &v);
        return v;
    }
    bool flag(const std::string& key, bool fallback) const {
        auto it = values.find(key);
        if (it == values.end()) return fallback;
        bool v = false;
        parse_flag(it->second, &v);
        return v;
    }
};

namespace {

std::string require_text(const umeml_config* cfg, const std::string& key, const char* why) {
    const std::string v = cfg->text(key);
    if (v.empty())
        fail(ErrorKind::invalid_argument, std::string("key '") + key + "' is required " + why);
    return v;
}

GeneratorConfig generator_from(const umeml_config* cfg) {
    GeneratorConfig g;
    g.n_samples = cfg->size_of("samples", g.n_samples);
    g.n_classes = static_cast<int>(cfg->size_of("classes", static_cast<std::size_t>(g.n_classes)));
    g.d = cfg->size_of("width", g.d);
    g.d_g = cfg->size_of("gene_width", g.d_g);
    g.m_min = cfg->size_of("m_min", g.m_min);
    g.m_max = cfg->size_of("m_max", g.m_max);
    g.n_groups = cfg->size_of("groups", g.n_groups);
    g.s_p = cfg->real("signal_p", g.s_p);
    g.s_g = cfg->real("signal_g", g.s_g);
    g.noise = cfg->real("noise", g.noise);
    g.censor_rate = cfg->real("censor_rate", g.censor_rate);
    g.base_hazard = cfg->real("base_hazard", g.base_hazard);
    g.hazard_ratio = cfg->real("hazard_ratio", g.hazard_ratio);
    g.seed = cfg->u64("seed", g.seed);
    return g;
}

std::vector<SampleRecord> load_dataset(const umeml_config* cfg) {
    const std::string dir = require_text(cfg, "data", "to locate the dataset");
    Manifest man = read_manifest((std::filesystem::path(dir) / "manifest.jsonl").string());
    std::vector<SampleRecord> data = load_all(man);
    if (data.empty()) fail(ErrorKind::invalid_argument, "dataset under " + dir + " is empty");
    return data;
}

RunConfig run_config_from(const umeml_config* cfg, const std::vector<SampleRecord>& data) {
    RunConfig rc;
    rc.task = parse_task(cfg->text("task", task_name(rc.task)));
    rc.variant = parse_variant(cfg->text("variant", variant_name(rc.variant)));
    apply_task_defaults(rc);

    // model shapes default to whatever the dataset holds
    const SampleRecord& probe = data.front();
    rc.model.d = cfg->size_of("width", probe.patch_features.cols);
    rc.model.d_g = cfg->size_of("gene_width", probe.gene_groups.cols);
    rc.model.n = cfg->size_of("gene_groups", probe.gene_groups.rows);
    rc.model.k = cfg->size_of("prototypes", rc.model.k);
    rc.model.i = cfg->size_of("registers", rc.model.i);
    rc.model.heads = cfg->size_of("heads", rc.model.heads);
    rc.model.cross_layers = cfg->size_of("cross_layers", rc.model.cross_layers);
    rc.model.path_self_layers = cfg->size_of("path_self_layers", rc.model.path_self_layers);
    rc.model.gene_self_layers = cfg->size_of("gene_self_layers", rc.model.gene_self_layers);
    rc.model.decoder_layers = cfg->size_of("decoder_layers", rc.model.decoder_layers);
    rc.model.head_widths.n_bins = cfg->size_of("survival_bins", rc.model.head_widths.n_bins);

    int max_grade = 0, max_subtype = 0;
    for (const SampleRecord& r : data) {
        max_grade = std::max(max_grade, r.grade);
        max_subtype = std::max(max_subtype, r.subtype);
    }
    rc.model.head_widths.n_grade =
        std::max<std::size_t>(2, static_cast<std::size_t>(max_grade) + 1);
    rc.model.head_widths.n_class =
        std::max<std::size_t>(2, static_cast<std::size_t>(max_subtype) + 1);

    rc.alpha = cfg->real("alpha", rc.alpha);
    rc.beta = cfg->real("beta", rc.beta);
    rc.gamma = cfg->real("gamma", rc.gamma);
    rc.lr = cfg->real("lr", rc.lr);
    rc.weight_decay = cfg->real("weight_decay", rc.weight_decay);
    rc.epochs = cfg->size_of("epochs", rc.epochs);
    rc.folds = cfg->size_of("folds", rc.folds);
    rc.seed_base = cfg->u64("seed_base", rc.seed_base);
    rc.split_seed = cfg->u64("split_seed", rc.split_seed);
    rc.uncensored_weight = cfg->real("uncensored_weight", rc.uncensored_weight);
    rc.parallel_folds = cfg->flag("parallel_folds", rc.parallel_folds);
    rc.out_dir = cfg->text("out");
    return rc;
}

std::string metric_table(const std::vector<CvSummary>& rows) {
    std::vector<std::string> metric_names;
    for (const auto& [name, ms] : rows.front().metrics) metric_names.push_back(name);

    char buf[96];
    std::string out = "variant        ";
    for (const std::string& name : metric_names) {
        std::snprintf(buf, sizeof buf, " %-21s", name.c_str());
        out += buf;
    }
    out += '\n';
    for (const CvSummary& row : rows) {
        std::snprintf(buf, sizeof buf, "%-15s", variant_name(row.variant));
        out += buf;
        for (const std::string& name : metric_names) {
            const MetricSummary& ms = row.metrics.at(name);
            std::snprintf(buf, sizeof buf, " %.6f +/- %.6f", ms.mean, ms.sd);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

umeml_status run_variant_grid(const umeml_config* cfg, const std::vector<Variant>& grid,
                              bool baseline, char** table_text) {
    if (!cfg || !table_text) {
        g_last_error = "config and table_text must not be NULL";
        return UMEML_ERR_INVALID_ARGUMENT;
    }
    *table_text = nullptr;
    return guarded([&]() -> umeml_status {
        const std::vector<SampleRecord> data = load_dataset(cfg);
        const std::string out_root = cfg->text("out");
        std::vector<CvSummary> rows;
        for (Variant v : grid) {
            RunConfig rc = run_config_from(cfg, data);
            rc.variant = v;
            if (!out_root.empty())
                rc.out_dir = (std::filesystem::path(out_root) / variant_name(v)).string();
            rows.push_back(baseline ? run_baseline(data, rc) : run_cv(data, rc));
        }
        *table_text = dup_string(metric_table(rows));
        return UMEML_OK;
    });
}

}  // namespace

extern "C" {

umeml_config* umeml_config_new(void) { return new (std::nothrow) umeml_config(); }

void umeml_config_free(umeml_config* cfg) { delete cfg; }

umeml_status umeml_config_set(umeml_config* cfg, const char* key, const char* value) {
    if (!cfg || !key || !value) {
        g_last_error = "config, key, and value must not be NULL";
        return UMEML_ERR_INVALID_ARGUMENT;
    }
    return guarded([&]() -> umeml_status {
        const auto it = key_table().find(key);
        if (it == key_table().end())
            fail(ErrorKind::invalid_argument, std::string("unknown key '") + key + "'");
        validate_value(it->first, it->second, value);
        cfg->values[it->first] = value;
        return UMEML_OK;
    });
}

void umeml_string_free(char* s) { std::free(s); }

umeml_status umeml_generate(const umeml_config* cfg) {
    if (!cfg) {
        g_last_error = "config must not be NULL";
        return UMEML_ERR_INVALID_ARGUMENT;
    }
    return guarded([&]() -> umeml_status {
        const std::string out = require_text(cfg, "out", "as the dataset directory");
        generate(generator_from(cfg), out);
        return UMEML_OK;
    });
}

umeml_status umeml_train(const umeml_config* cfg, char** summary_json) {
    if (!cfg || !summary_json) {
        g_last_error = "config and summary_json must not be NULL";
        return UMEML_ERR_INVALID_ARGUMENT;
    }
    *summary_json = nullptr;
    return guarded([&]() -> umeml_status {
        const std::vector<SampleRecord> data = load_dataset(cfg);
        const RunConfig rc = run_config_from(cfg, data);
        CvSummary summary = run_cv(data, rc);
        *summary_json = dup_string(summary.json);
        return UMEML_OK;
    });
}

umeml_status umeml_ablate(const umeml_config* cfg, char** table_text) {
    return run_variant_grid(
        cfg, {Variant::full, Variant::no_modularity, Variant::bifusion, Variant::no_registers},
        false, table_text);
}

umeml_status umeml_baselines(const umeml_config* cfg, char** table_text) {
    return run_variant_grid(
        cfg, {Variant::concat, Variant::add, Variant::path_only, Variant::gene_only}, true,
        table_text);
}

umeml_status umeml_gradcheck(const umeml_config* cfg, char** report_text) {
    if (!cfg || !report_text) {
        g_last_error = "config and report_text must not be NULL";
        return UMEML_ERR_INVALID_ARGUMENT;
    }
    *report_text = nullptr;
    return guarded([&]() -> umeml_status {
        CheckReport report = gradient_suite(cfg->size_of("seeds", 5), cfg->text("inject"));
        *report_text = dup_string(report.text());
        if (!report.all_pass) {
            g_last_error = "gradient suite reported failures";
            return UMEML_ERR_CHECK_FAILED;
        }
        return UMEML_OK;
    });
}

umeml_status umeml_oracle_check(const umeml_config* cfg, char** report_text) {
    if (!cfg || !report_text) {
        g_last_error = "config and report_text must not be NULL";
        return UMEML_ERR_INVALID_ARGUMENT;
    }
    *report_text = nullptr;
    return guarded([&]() -> umeml_status {
        CheckReport report = oracle_suite(cfg->u64("seed", 2024));
        *report_text = dup_string(report.text());
        if (!report.all_pass) {
            g_last_error = "oracle suite reported failures";
            return UMEML_ERR_CHECK_FAILED;
        }
        return UMEML_OK;
    });
}

umeml_status umeml_curves(const umeml_config* cfg, char** report_text) {
    if (!cfg || !report_text) {
        g_last_error = "config and report_text must not be NULL";
        return UMEML_ERR_INVALID_ARGUMENT;
    }
    *report_text = nullptr;
    return guarded([&]() -> umeml_status {
        const std::string results = require_text(cfg, "results", "to locate fold records");
        const std::string out = require_text(cfg, "out", "as the curve directory");
        std::string text;
        for (const std::string& line : rebuild_curves(results, out)) {
            text += line;
            text += '\n';
        }
        *report_text = dup_string(text);
        return UMEML_OK;
    });
}

const char* umeml_last_error(void) { return g_last_error.c_str(); }

const char* umeml_version(void) { return "1.0.0"; }

}  // extern "C"
