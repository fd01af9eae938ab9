#include "doctest.h"

#include "umeml/datakit.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

namespace fs = std::filesystem;
using namespace umeml;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::path("test_tmp") / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

std::vector<char> slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    return std::vector<char>(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

GeneratorConfig small_config(std::uint64_t seed) {
    GeneratorConfig cfg;
    cfg.n_samples = 12;
    cfg.d = 8;
    cfg.d_g = 10;
    cfg.m_min = 4;
    cfg.m_max = 6;
    cfg.n_groups = 3;
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST_CASE("feature files round trip bit for bit") {
    TempDir dir("roundtrip");
    std::mt19937_64 rng(5);
    for (auto [r, c] : {std::pair<std::size_t, std::size_t>{7, 5}, {1, 16}, {3, 1}}) {
        Tensor m = uniform_tensor(r, c, -10, 10, rng);
        // storage is 32-bit; hold representable values so the trip is exact
        for (double& v : m.data) v = static_cast<double>(static_cast<float>(v));

        const std::string path = (dir.path / "m.umfb").string();
        write_feature_file(path, m);
        Tensor back = read_feature_file(path);
        REQUIRE(back.rows == r);
        REQUIRE(back.cols == c);
        CHECK(std::memcmp(back.data.data(), m.data.data(), m.size() * sizeof(double)) == 0);
    }
}

TEST_CASE("feature file parse errors are distinct and informative") {
    TempDir dir("parse_errors");
    const std::string good = (dir.path / "good.umfb").string();
    Tensor m(2, 3, {1, 2, 3, 4, 5, 6});
    write_feature_file(good, m);

    SUBCASE("missing file") {
        CHECK_THROWS_AS(read_feature_file((dir.path / "nope.umfb").string()), Error);
        try {
            read_feature_file((dir.path / "nope.umfb").string());
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::io);
        }
    }
    SUBCASE("wrong magic") {
        auto bytes = slurp(good);
        bytes[0] = 'X';
        const std::string bad = (dir.path / "magic.umfb").string();
        std::ofstream(bad, std::ios::binary).write(bytes.data(), static_cast<long>(bytes.size()));
        try {
            read_feature_file(bad);
            FAIL("expected format error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::format);
            CHECK(std::string(e.what()).find("magic") != std::string::npos);
        }
    }
    SUBCASE("truncated payload names both byte counts") {
        auto bytes = slurp(good);
        bytes.resize(bytes.size() - 5);
        const std::string bad = (dir.path / "trunc.umfb").string();
        std::ofstream(bad, std::ios::binary).write(bytes.data(), static_cast<long>(bytes.size()));
        try {
            read_feature_file(bad);
            FAIL("expected truncation error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::format);
            const std::string msg = e.what();
            CHECK(msg.find(std::to_string(12 + 4 * 6)) != std::string::npos);  // expected
            CHECK(msg.find(std::to_string(12 + 4 * 6 - 5)) != std::string::npos);  // actual
        }
    }
    SUBCASE("absurd dimensions rejected") {
        const std::string bad = (dir.path / "huge.umfb").string();
        std::ofstream os(bad, std::ios::binary);
        os.write("UMFB", 4);
        const unsigned char big[8] = {0xff, 0xff, 0xff, 0x0f, 0xff, 0xff, 0xff, 0x0f};
        os.write(reinterpret_cast<const char*>(big), 8);
        os.close();
        try {
            read_feature_file(bad);
            FAIL("expected overflow error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::format);
            CHECK(std::string(e.what()).find("overflow") != std::string::npos);
        }
    }
    SUBCASE("non-finite writes rejected") {
        Tensor bad(1, 1, {std::numeric_limits<double>::infinity()});
        CHECK_THROWS_AS(write_feature_file((dir.path / "inf.umfb").string(), bad), Error);
    }
}

TEST_CASE("generation is deterministic to the byte") {
    TempDir a("gen_a"), b("gen_b");
    GeneratorConfig cfg = small_config(77);
    generate(cfg, a.str());
    generate(cfg, b.str());

    CHECK(slurp(a.path / "manifest.jsonl") == slurp(b.path / "manifest.jsonl"));
    Manifest ma = read_manifest((a.path / "manifest.jsonl").string());
    for (const ManifestEntry& e : ma.entries) {
        CHECK(slurp(a.path / e.path_file) == slurp(b.path / e.path_file));
        CHECK(slurp(a.path / e.gene_file) == slurp(b.path / e.gene_file));
    }

    // a different seed must not reproduce the same bytes
    TempDir c("gen_c");
    GeneratorConfig other = small_config(78);
    generate(other, c.str());
    CHECK(slurp(a.path / "manifest.jsonl") != slurp(c.path / "manifest.jsonl"));
}

TEST_CASE("generated manifests load with consistent records") {
    TempDir dir("gen_load");
    GeneratorConfig cfg = small_config(123);
    cfg.censor_rate = 0.4;
    generate(cfg, dir.str());

    Manifest m = read_manifest((dir.path / "manifest.jsonl").string());
    REQUIRE(m.entries.size() == cfg.n_samples);

    std::set<int> grades, subtypes;
    std::map<int, int> grade_to_subtype;
    for (const ManifestEntry& e : m.entries) {
        SampleRecord r = load_sample(m, e);
        CHECK(r.patch_features.cols == cfg.d);
        CHECK(r.patch_features.rows >= cfg.m_min);
        CHECK(r.patch_features.rows <= cfg.m_max);
        CHECK(r.gene_groups.rows == cfg.n_groups);
        CHECK(r.gene_groups.cols == cfg.d_g);
        CHECK(r.patch_features.all_finite());
        CHECK(r.gene_groups.all_finite());
        CHECK(r.survival.time > 0.0);
        CHECK((r.survival.censor == 0 || r.survival.censor == 1));
        CHECK(r.grade >= 0);
        CHECK(r.grade < cfg.n_classes);
        grades.insert(r.grade);
        subtypes.insert(r.subtype);

        // subtype must be a fixed relabeling of grade
        auto it = grade_to_subtype.find(r.grade);
        if (it == grade_to_subtype.end())
            grade_to_subtype[r.grade] = r.subtype;
        else
            CHECK(it->second == r.subtype);
    }
    // distinct grades map to distinct subtypes
    std::set<int> mapped;
    for (auto& [g, s] : grade_to_subtype) mapped.insert(s);
    CHECK(mapped.size() == grade_to_subtype.size());
}

TEST_CASE("manifest validation rejects malformed input") {
    TempDir dir("manifest_bad");
    SUBCASE("duplicate ids") {
        std::ofstream os(dir.path / "manifest.jsonl");
        Tensor t(1, 1, {0.0});
        write_feature_file((dir.path / "f.umfb").string(), t);
        const char* line =
            R"({"id":"s0","grade":0,"subtype":0,"surv_time":1.0,"censor":0,"path_file":"f.umfb","gene_file":"f.umfb"})";
        os << line << "\n" << line << "\n";
        os.close();
        CHECK_THROWS_AS(read_manifest((dir.path / "manifest.jsonl").string()), Error);
    }
    SUBCASE("missing field") {
        std::ofstream os(dir.path / "manifest.jsonl");
        os << R"({"id":"s0","grade":0})" << "\n";
        os.close();
        CHECK_THROWS_AS(read_manifest((dir.path / "manifest.jsonl").string()), Error);
    }
    SUBCASE("referenced file absent") {
        std::ofstream os(dir.path / "manifest.jsonl");
        os << R"({"id":"s0","grade":0,"subtype":0,"surv_time":1.0,"censor":0,"path_file":"gone.umfb","gene_file":"gone.umfb"})"
           << "\n";
        os.close();
        CHECK_THROWS_AS(read_manifest((dir.path / "manifest.jsonl").string()), Error);
    }
    SUBCASE("unparseable line") {
        std::ofstream os(dir.path / "manifest.jsonl");
        os << "{not json\n";
        os.close();
        CHECK_THROWS_AS(read_manifest((dir.path / "manifest.jsonl").string()), Error);
    }
}

TEST_CASE("k-fold splits partition the ids") {
    std::vector<std::string> ids;
    for (int i = 0; i < 10; ++i) ids.push_back("s" + std::to_string(i));

    std::set<std::string> seen;
    for (std::size_t fold = 0; fold < 5; ++fold) {
        FoldSplit s = kfold_split(ids, 5, fold, 0);
        CHECK(s.test_ids.size() == 2);
        CHECK(s.train_ids.size() == 8);
        for (const std::string& id : s.test_ids) {
            CHECK(seen.insert(id).second);  // folds are disjoint
        }
        // train and test never overlap
        for (const std::string& id : s.test_ids)
            CHECK(std::find(s.train_ids.begin(), s.train_ids.end(), id) == s.train_ids.end());
    }
    CHECK(seen.size() == ids.size());  // folds cover everything

    // deterministic given the seed, different under another seed
    FoldSplit a = kfold_split(ids, 5, 2, 9);
    FoldSplit b = kfold_split(ids, 5, 2, 9);
    CHECK(a.test_ids == b.test_ids);
    CHECK(a.train_ids == b.train_ids);

    CHECK_THROWS_AS(kfold_split(ids, 5, 5, 0), Error);
    CHECK_THROWS_AS(kfold_split(ids, 11, 0, 0), Error);
}

TEST_CASE("class-graded hazards show up in the survival times") {
    TempDir dir("hazard");
    GeneratorConfig cfg = small_config(7);
    cfg.n_samples = 90;
    cfg.censor_rate = 0.0;
    generate(cfg, dir.str());
    Manifest m = read_manifest((dir.path / "manifest.jsonl").string());

    double sum0 = 0, sum2 = 0;
    int n0 = 0, n2 = 0;
    for (const ManifestEntry& e : m.entries) {
        CHECK(e.censor == 0);
        if (e.grade == 0) {
            sum0 += e.surv_time;
            ++n0;
        } else if (e.grade == 2) {
            sum2 += e.surv_time;
            ++n2;
        }
    }
    REQUIRE(n0 > 0);
    REQUIRE(n2 > 0);
    CHECK(sum0 / n0 > sum2 / n2);  // later classes die faster by construction
}

TEST_CASE("null signal still generates a valid dataset") {
    TempDir dir("null_signal");
    GeneratorConfig cfg = small_config(3);
    cfg.s_p = 0.0;
    cfg.s_g = 0.0;
    generate(cfg, dir.str());
    Manifest m = read_manifest((dir.path / "manifest.jsonl").string());
    CHECK(m.entries.size() == cfg.n_samples);
}

TEST_CASE("a linear probe on mean patch features separates the classes") {
    TempDir dir("probe");
    GeneratorConfig cfg;  // defaults: the 200-sample cohort
    generate(cfg, dir.str());
    Manifest manifest = read_manifest((dir.path / "manifest.jsonl").string());
    std::vector<SampleRecord> records = load_all(manifest);
    REQUIRE(records.size() == 200);

    // bag means
    Tensor x(records.size(), cfg.d);
    std::vector<int> y(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        Tensor mean = mean_rows(records[i].patch_features);
        for (std::size_t c = 0; c < cfg.d; ++c) x.at(i, c) = mean.at(0, c);
        y[i] = records[i].grade;
    }

    // standardize columns with train statistics, append a bias column
    const std::size_t n_train = 150, n = records.size();
    for (std::size_t c = 0; c < cfg.d; ++c) {
        double mu = 0, var = 0;
        for (std::size_t i = 0; i < n_train; ++i) mu += x.at(i, c);
        mu /= static_cast<double>(n_train);
        for (std::size_t i = 0; i < n_train; ++i) var += (x.at(i, c) - mu) * (x.at(i, c) - mu);
        var /= static_cast<double>(n_train);
        const double s = 1.0 / std::sqrt(var + 1e-8);
        for (std::size_t i = 0; i < n; ++i) x.at(i, c) = (x.at(i, c) - mu) * s;
    }
    Tensor xb = concat_cols({x, Tensor(n, 1, 1.0)});

    // multinomial logistic regression, full-batch gradient descent
    Tensor xtr = slice(xb, 0, n_train, 0, cfg.d + 1);
    Tensor w(cfg.d + 1, 3, 0.0);
    for (int iter = 0; iter < 400; ++iter) {
        Tape tape;
        Tensor wt = tape.leaf(w);
        Tensor probs = softmax_rows(matmul(xtr, wt));
        Tensor onehot(n_train, 3, 0.0);
        for (std::size_t i = 0; i < n_train; ++i)
            onehot.at(i, static_cast<std::size_t>(y[i])) = 1.0;
        Tensor loss = scale(sum_all(mul(onehot, log_clamped(probs))), -1.0 / n_train);
        tape.backward(loss);
        Tensor g = tape.grad(wt);
        for (std::size_t j = 0; j < w.size(); ++j) w.data[j] -= 0.5 * g.data[j];
    }

    Tensor held = slice(xb, n_train, n - n_train, 0, cfg.d + 1);
    Tensor scores = matmul(held, w);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n - n_train; ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < 3; ++c)
            if (scores.at(i, c) > scores.at(i, best)) best = c;
        if (static_cast<int>(best) == y[n_train + i]) ++hits;
    }
    const double acc = static_cast<double>(hits) / static_cast<double>(n - n_train);
    CAPTURE(acc);
    CHECK(acc >= 0.8);
}
