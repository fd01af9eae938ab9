#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "umeml/umeml.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace {

struct ConfigDeleter {
    void operator()(umeml_config* c) const { umeml_config_free(c); }
};
using ConfigPtr = std::unique_ptr<umeml_config, ConfigDeleter>;

struct TextDeleter {
    void operator()(char* s) const { umeml_string_free(s); }
};
using TextPtr = std::unique_ptr<char, TextDeleter>;

ConfigPtr make_config(const std::vector<std::pair<std::string, std::string>>& kv) {
    ConfigPtr cfg(umeml_config_new());
    REQUIRE(cfg != nullptr);
    for (const auto& [k, v] : kv) {
        INFO("key ", k, " value ", v);
        REQUIRE(umeml_config_set(cfg.get(), k.c_str(), v.c_str()) == UMEML_OK);
    }
    return cfg;
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) : path(std::filesystem::path("test_tmp") / name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string sub(const std::string& leaf) const { return (path / leaf).string(); }
};

// Small dataset shared by the training-path cases; generated once.
const std::string& shared_dataset() {
    static const std::string dir = [] {
        const std::string d = "test_tmp/capi_data";
        std::filesystem::remove_all(d);
        ConfigPtr cfg = make_config({{"out", d},
                                     {"samples", "40"},
                                     {"width", "8"},
                                     {"gene_width", "10"},
                                     {"m_min", "6"},
                                     {"m_max", "10"},
                                     {"groups", "3"},
                                     {"seed", "7"}});
        REQUIRE(umeml_generate(cfg.get()) == UMEML_OK);
        return d;
    }();
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("config rejects unknown keys and bad values") {
    ConfigPtr cfg(umeml_config_new());
    REQUIRE(cfg != nullptr);

    CHECK(umeml_config_set(cfg.get(), "no_such_key", "1") == UMEML_ERR_INVALID_ARGUMENT);
    CHECK(std::strstr(umeml_last_error(), "no_such_key") != nullptr);

    CHECK(umeml_config_set(cfg.get(), "samples", "12x") == UMEML_ERR_INVALID_ARGUMENT);
    CHECK(umeml_config_set(cfg.get(), "samples", "-3") == UMEML_ERR_INVALID_ARGUMENT);
    CHECK(umeml_config_set(cfg.get(), "lr", "fast") == UMEML_ERR_INVALID_ARGUMENT);
    CHECK(umeml_config_set(cfg.get(), "parallel_folds", "maybe") == UMEML_ERR_INVALID_ARGUMENT);
    CHECK(umeml_config_set(cfg.get(), "task", "cooking") == UMEML_ERR_INVALID_ARGUMENT);
    CHECK(umeml_config_set(cfg.get(), "variant", "tri") == UMEML_ERR_INVALID_ARGUMENT);
    CHECK(umeml_config_set(cfg.get(), "inject", "frobnicate") == UMEML_ERR_INVALID_ARGUMENT);

    CHECK(umeml_config_set(cfg.get(), "samples", "12") == UMEML_OK);
    CHECK(umeml_config_set(cfg.get(), "lr", "1e-3") == UMEML_OK);
    CHECK(umeml_config_set(cfg.get(), "parallel_folds", "true") == UMEML_OK);
    CHECK(umeml_config_set(cfg.get(), "task", "survival") == UMEML_OK);
    CHECK(umeml_config_set(cfg.get(), "variant", "no_registers") == UMEML_OK);
    CHECK(umeml_config_set(cfg.get(), "inject", "relu") == UMEML_OK);

    CHECK(umeml_config_set(nullptr, "samples", "1") == UMEML_ERR_INVALID_ARGUMENT);
    CHECK(umeml_config_set(cfg.get(), nullptr, "1") == UMEML_ERR_INVALID_ARGUMENT);
    CHECK(umeml_config_set(cfg.get(), "samples", nullptr) == UMEML_ERR_INVALID_ARGUMENT);
}

TEST_CASE("generate requires out and is reproducible") {
    ConfigPtr empty(umeml_config_new());
    CHECK(umeml_generate(empty.get()) == UMEML_ERR_INVALID_ARGUMENT);
    CHECK(umeml_generate(nullptr) == UMEML_ERR_INVALID_ARGUMENT);

    TempDir tmp("capi_gen");
    auto gen_to = [&](const std::string& leaf) {
        ConfigPtr cfg = make_config({{"out", tmp.sub(leaf)},
                                     {"samples", "6"},
                                     {"width", "4"},
                                     {"gene_width", "5"},
                                     {"m_min", "3"},
                                     {"m_max", "5"},
                                     {"groups", "2"},
                                     {"seed", "11"}});
        REQUIRE(umeml_generate(cfg.get()) == UMEML_OK);
    };
    gen_to("a");
    gen_to("b");
    CHECK(slurp(tmp.path / "a" / "manifest.jsonl") == slurp(tmp.path / "b" / "manifest.jsonl"));
    std::size_t checked = 0;
    for (const auto& entry :
         std::filesystem::directory_iterator(tmp.path / "a" / "features")) {
        const auto leaf = entry.path().filename();
        CHECK(slurp(entry.path()) == slurp(tmp.path / "b" / "features" / leaf));
        ++checked;
    }
    CHECK(checked == 12);  // one pathology and one genomic file per sample
}

TEST_CASE("train returns summary json and honors dataset shapes") {
    ConfigPtr cfg = make_config({{"data", shared_dataset()},
                                 {"folds", "2"},
                                 {"epochs", "1"},
                                 {"prototypes", "3"},
                                 {"registers", "1"},
                                 {"parallel_folds", "true"}});
    TextPtr summary;
    char* raw = nullptr;
    REQUIRE(umeml_train(cfg.get(), &raw) == UMEML_OK);
    summary.reset(raw);
    REQUIRE(raw != nullptr);
    const std::string text = raw;
    CHECK(text.find("\"task\": \"grading\"") != std::string::npos);
    CHECK(text.find("\"accuracy\"") != std::string::npos);
    CHECK(text.find("\"auc_macro\"") != std::string::npos);
    CHECK(text.find("\"width\": 8") != std::string::npos);       // from dataset
    CHECK(text.find("\"gene_width\": 10") != std::string::npos); // from dataset
    CHECK(text.find("\"gene_groups\": 3") != std::string::npos); // from dataset

    ConfigPtr missing(umeml_config_new());
    char* none = nullptr;
    CHECK(umeml_train(missing.get(), &none) == UMEML_ERR_INVALID_ARGUMENT);
    CHECK(none == nullptr);
    CHECK(umeml_train(cfg.get(), nullptr) == UMEML_ERR_INVALID_ARGUMENT);

    ConfigPtr bad_dir = make_config({{"data", "test_tmp/capi_no_such_dir"}});
    CHECK(umeml_train(bad_dir.get(), &none) == UMEML_ERR_IO);
    CHECK(none == nullptr);
    CHECK(umeml_last_error()[0] != '\0');
}

TEST_CASE("train applies survival defaults from the task key") {
    ConfigPtr cfg = make_config({{"data", shared_dataset()},
                                 {"task", "survival"},
                                 {"folds", "2"},
                                 {"prototypes", "3"},
                                 {"registers", "1"},
                                 {"parallel_folds", "true"}});
    TextPtr summary;
    char* raw = nullptr;
    REQUIRE(umeml_train(cfg.get(), &raw) == UMEML_OK);
    summary.reset(raw);
    const std::string text = raw;
    CHECK(text.find("\"task\": \"survival\"") != std::string::npos);
    CHECK(text.find("\"c_index\"") != std::string::npos);
    CHECK(text.find("\"lr\": 0.0002") != std::string::npos);
    CHECK(text.find("\"epochs\": 5") != std::string::npos);
}

TEST_CASE("ablate writes one run per variant and tabulates all four") {
    TempDir tmp("capi_ablate");
    ConfigPtr cfg = make_config({{"data", shared_dataset()},
                                 {"folds", "2"},
                                 {"epochs", "1"},
                                 {"prototypes", "3"},
                                 {"registers", "1"},
                                 {"parallel_folds", "true"},
                                 {"out", tmp.sub("runs")}});
    TextPtr table;
    char* raw = nullptr;
    REQUIRE(umeml_ablate(cfg.get(), &raw) == UMEML_OK);
    table.reset(raw);
    const std::string text = raw;
    for (const char* name : {"full", "no_modularity", "bifusion", "no_registers"}) {
        CHECK(text.find(name) != std::string::npos);
        CHECK(std::filesystem::exists(tmp.path / "runs" / name / "summary.json"));
    }
    CHECK(text.find("accuracy") != std::string::npos);
}

TEST_CASE("baselines tabulates the four fusion baselines") {
    ConfigPtr cfg = make_config({{"data", shared_dataset()},
                                 {"folds", "2"},
                                 {"epochs", "1"},
                                 {"prototypes", "3"},
                                 {"registers", "1"},
                                 {"parallel_folds", "true"}});
    TextPtr table;
    char* raw = nullptr;
    REQUIRE(umeml_baselines(cfg.get(), &raw) == UMEML_OK);
    table.reset(raw);
    const std::string text = raw;
    for (const char* name : {"concat", "add", "path_only", "gene_only"})
        CHECK(text.find(name) != std::string::npos);
}

TEST_CASE("gradcheck passes clean and fails with an injected sign error") {
    ConfigPtr cfg = make_config({{"seeds", "1"}});
    TextPtr report;
    char* raw = nullptr;
    REQUIRE(umeml_gradcheck(cfg.get(), &raw) == UMEML_OK);
    report.reset(raw);
    CHECK(std::string(raw).find("all 25 checks passed") != std::string::npos);

    ConfigPtr sabotaged = make_config({{"seeds", "1"}, {"inject", "sigmoid"}});
    char* bad = nullptr;
    CHECK(umeml_gradcheck(sabotaged.get(), &bad) == UMEML_ERR_CHECK_FAILED);
    TextPtr bad_report(bad);
    REQUIRE(bad != nullptr);
    const std::string text = bad;
    CHECK(text.find("sigmoid") != std::string::npos);
    CHECK(text.find("FAIL") != std::string::npos);
}

TEST_CASE("oracle check passes and reports every suite") {
    ConfigPtr cfg(umeml_config_new());
    TextPtr report;
    char* raw = nullptr;
    REQUIRE(umeml_oracle_check(cfg.get(), &raw) == UMEML_OK);
    report.reset(raw);
    const std::string text = raw;
    for (const char* name : {"modularity_newman", "modularity_path3", "auc_pairs",
                             "concordance_pairs", "td_auc_pairs"})
        CHECK(text.find(name) != std::string::npos);
    CHECK(text.find("all 5 checks passed") != std::string::npos);
}

TEST_CASE("curves rebuilds the same files train wrote") {
    TempDir tmp("capi_curves");
    ConfigPtr train_cfg = make_config({{"data", shared_dataset()},
                                       {"folds", "2"},
                                       {"epochs", "1"},
                                       {"prototypes", "3"},
                                       {"registers", "1"},
                                       {"parallel_folds", "true"},
                                       {"out", tmp.sub("run")}});
    TextPtr summary;
    char* raw = nullptr;
    REQUIRE(umeml_train(train_cfg.get(), &raw) == UMEML_OK);
    summary.reset(raw);

    ConfigPtr cfg = make_config({{"results", tmp.sub("run")}, {"out", tmp.sub("rebuilt")}});
    TextPtr report;
    char* lines = nullptr;
    REQUIRE(umeml_curves(cfg.get(), &lines) == UMEML_OK);
    report.reset(lines);
    const std::string text = lines;
    for (int c = 0; c < 3; ++c) {
        const std::string leaf = "roc_class" + std::to_string(c) + ".csv";
        CHECK(text.find(leaf) != std::string::npos);
        CHECK(slurp(tmp.path / "run" / leaf) == slurp(tmp.path / "rebuilt" / leaf));
    }

    ConfigPtr missing = make_config({{"results", tmp.sub("nowhere")}, {"out", tmp.sub("x")}});
    char* none = nullptr;
    CHECK(umeml_curves(missing.get(), &none) != UMEML_OK);
    CHECK(none == nullptr);
}

TEST_CASE("version and last_error never return null") {
    CHECK(umeml_version() != nullptr);
    CHECK(std::string(umeml_version()).find('.') != std::string::npos);
    CHECK(umeml_last_error() != nullptr);
}
