#include "umeml/datakit.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

namespace fs = std::filesystem;
using nlohmann::json;

namespace umeml {

namespace {

constexpr double kSignalFrac = 0.2;  // share of patches carrying the strong axis
constexpr double kPathWeak = 0.1;    // whole-bag weak-axis shift, relative to s_p
constexpr double kGeneStrong = 2.0;  // strong gene-group shift, relative to s_g
constexpr double kGeneWeak = 0.4;    // weak gene-group shift, relative to s_g
constexpr std::size_t kBgClusters = 3;
constexpr double kBgScale = 0.5;
constexpr std::size_t kMaxDim = 100'000'000;  // rows*cols sanity cap on read

void put_u32_le(std::ofstream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32_le(const unsigned char* b) {
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

double draw_normal(std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

double draw_uniform01(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

// unit vector, drawn coordinate-wise normal then normalized
std::vector<double> draw_direction(std::size_t d, std::mt19937_64& rng) {
    std::vector<double> v(d);
    double norm2 = 0.0;
    for (double& x : v) {
        x = draw_normal(rng);
        norm2 += x * x;
    }
    const double inv = 1.0 / std::max(std::sqrt(norm2), 1e-12);
    for (double& x : v) x *= inv;
    return v;
}

// strong axis separates pivot_class from the rest; weak axis spreads the rest
double strong_sign(int cls, int pivot) { return cls == pivot ? 1.0 : -1.0; }

double weak_sign(int cls, int pivot, int n_classes) {
    if (cls == pivot) return 0.0;
    // alternate the non-pivot classes along the weak axis
    int rank = 0;
    for (int c = 0; c < n_classes; ++c) {
        if (c == pivot) continue;
        if (c == cls) break;
        ++rank;
    }
    return rank % 2 == 0 ? 1.0 : -1.0;
}

} // namespace

void write_feature_file(const std::string& path, const Tensor& m) {
    if (!m.all_finite()) fail(ErrorKind::invalid_argument, "feature write: non-finite values");
    if (m.rows > kMaxDim || m.cols > kMaxDim || m.size() > kMaxDim)
        fail(ErrorKind::invalid_argument, "feature write: dimensions too large");
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorKind::io, "cannot open for writing: " + path);

    os.write("UMFB", 4);
    put_u32_le(os, static_cast<std::uint32_t>(m.rows));
    put_u32_le(os, static_cast<std::uint32_t>(m.cols));
    for (double v : m.data) {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        static_assert(sizeof bits == sizeof f);
        std::memcpy(&bits, &f, 4);
        unsigned char b[4] = {static_cast<unsigned char>(bits & 0xff),
                              static_cast<unsigned char>((bits >> 8) & 0xff),
                              static_cast<unsigned char>((bits >> 16) & 0xff),
                              static_cast<unsigned char>((bits >> 24) & 0xff)};
        os.write(reinterpret_cast<const char*>(b), 4);
    }
    if (!os.good()) fail(ErrorKind::io, "write failed: " + path);
}

Tensor read_feature_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorKind::io, "cannot open for reading: " + path);
    is.seekg(0, std::ios::end);
    const std::uint64_t actual = static_cast<std::uint64_t>(is.tellg());
    is.seekg(0, std::ios::beg);

    if (actual < 12)
        fail(ErrorKind::format, "feature file truncated: header needs 12 bytes, file has " +
                                    std::to_string(actual) + " (" + path + ")");
    unsigned char header[12];
    is.read(reinterpret_cast<char*>(header), 12);
    if (std::memcmp(header, "UMFB", 4) != 0)
        fail(ErrorKind::format, "bad magic in feature file (want UMFB): " + path);
    const std::uint32_t rows = get_u32_le(header + 4);
    const std::uint32_t cols = get_u32_le(header + 8);
    const std::uint64_t cells = static_cast<std::uint64_t>(rows) * cols;
    if (cells > kMaxDim)
        fail(ErrorKind::format, "feature file dimensions overflow sanity cap: " +
                                    std::to_string(rows) + "x" + std::to_string(cols));
    const std::uint64_t expected = 12 + 4 * cells;
    if (actual != expected)
        fail(ErrorKind::format, "feature file truncated: expected " + std::to_string(expected) +
                                    " bytes, found " + std::to_string(actual) + " (" + path + ")");

    Tensor m(rows, cols);
    std::vector<unsigned char> buf(4 * cells);
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!is.good()) fail(ErrorKind::io, "read failed: " + path);
    for (std::uint64_t i = 0; i < cells; ++i) {
        const std::uint32_t bits = get_u32_le(buf.data() + 4 * i);
        float f;
        std::memcpy(&f, &bits, 4);
        m.data[i] = static_cast<double>(f);
    }
    return m;
}

void generate(const GeneratorConfig& cfg, const std::string& out_dir) {
    if (cfg.n_samples == 0 || cfg.n_classes < 2 || cfg.d == 0 || cfg.d_g == 0 ||
        cfg.n_groups < 2 || cfg.m_min < 1 || cfg.m_max < cfg.m_min)
        fail(ErrorKind::invalid_argument, "generate: invalid configuration");
    if (cfg.s_p < 0 || cfg.s_g < 0 || cfg.noise < 0 || cfg.censor_rate < 0 ||
        cfg.censor_rate > 1 || cfg.base_hazard <= 0 || cfg.hazard_ratio <= 0)
        fail(ErrorKind::invalid_argument, "generate: invalid signal or survival settings");

    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "features", ec);
    if (ec) fail(ErrorKind::io, "cannot create output directory: " + out_dir);

    std::mt19937_64 rng(cfg.seed);

    // dataset-level structure, drawn once
    const std::vector<double> u_p = draw_direction(cfg.d, rng);       // strong patch axis
    const std::vector<double> v_p = draw_direction(cfg.d, rng);       // weak patch axis
    std::vector<std::vector<double>> bg(kBgClusters);
    for (auto& c : bg) {
        c.resize(cfg.d);
        for (double& x : c) x = kBgScale * draw_normal(rng);
    }
    const std::vector<double> w_strong = draw_direction(cfg.d_g, rng);  // strong gene axis
    const std::vector<double> w_weak = draw_direction(cfg.d_g, rng);    // weak gene axis

    std::vector<int> subtype_map(static_cast<std::size_t>(cfg.n_classes));
    for (int c = 0; c < cfg.n_classes; ++c) subtype_map[static_cast<std::size_t>(c)] = c;
    std::shuffle(subtype_map.begin(), subtype_map.end(), rng);

    const int patch_pivot = 0;                 // patches single out the first class
    const int gene_pivot = cfg.n_classes - 1;  // genes single out the last class

    std::ofstream manifest(fs::path(out_dir) / "manifest.jsonl");
    if (!manifest) fail(ErrorKind::io, "cannot open manifest for writing under " + out_dir);

    char idbuf[32];
    for (std::size_t i = 0; i < cfg.n_samples; ++i) {
        std::snprintf(idbuf, sizeof idbuf, "sample_%04zu", i);
        const std::string id = idbuf;

        const int cls = static_cast<int>(rng() % static_cast<std::uint64_t>(cfg.n_classes));
        const std::size_t m = cfg.m_min + rng() % (cfg.m_max - cfg.m_min + 1);

        Tensor patches(m, cfg.d);
        for (std::size_t r = 0; r < m; ++r) {
            const bool signal = draw_uniform01(rng) < kSignalFrac;
            const std::size_t bg_pick = rng() % kBgClusters;
            const double a = strong_sign(cls, patch_pivot);
            const double b = weak_sign(cls, patch_pivot, cfg.n_classes);
            for (std::size_t c = 0; c < cfg.d; ++c) {
                // every patch center carries the small weak-axis shift; only
                // the minority signal cluster adds the strong axis
                double center = cfg.s_p * kPathWeak * b * v_p[c];
                center += signal ? cfg.s_p * a * u_p[c] : bg[bg_pick][c];
                const double v = center + cfg.noise * draw_normal(rng);
                patches.at(r, c) = static_cast<double>(static_cast<float>(v));
            }
        }

        Tensor genes(cfg.n_groups, cfg.d_g);
        const double ga = strong_sign(cls, gene_pivot);
        const double gb = weak_sign(cls, gene_pivot, cfg.n_classes);
        for (std::size_t g = 0; g < cfg.n_groups; ++g) {
            for (std::size_t c = 0; c < cfg.d_g; ++c) {
                double center = 0.0;
                if (g == 0) center = cfg.s_g * kGeneStrong * ga * w_strong[c];
                else if (g == 1) center = cfg.s_g * kGeneWeak * gb * w_weak[c];
                const double v = center + cfg.noise * draw_normal(rng);
                genes.at(g, c) = static_cast<double>(static_cast<float>(v));
            }
        }

        // exponential event time with class-graded hazard, uniform censoring
        const double rate = cfg.base_hazard * std::pow(cfg.hazard_ratio, cls);
        const double u = std::max(draw_uniform01(rng), 1e-12);
        const double t_event = -std::log(u) / rate;
        const bool censored = draw_uniform01(rng) < cfg.censor_rate;
        double t = censored ? t_event * draw_uniform01(rng) : t_event;
        t = std::max(t, 1e-3);

        const std::string path_rel = "features/" + id + "_path.umfb";
        const std::string gene_rel = "features/" + id + "_gene.umfb";
        write_feature_file((fs::path(out_dir) / path_rel).string(), patches);
        write_feature_file((fs::path(out_dir) / gene_rel).string(), genes);

        json line;
        line["id"] = id;
        line["grade"] = cls;
        line["subtype"] = subtype_map[static_cast<std::size_t>(cls)];
        line["surv_time"] = t;
        line["censor"] = censored ? 1 : 0;
        line["path_file"] = path_rel;
        line["gene_file"] = gene_rel;
        manifest << line.dump() << "\n";
    }
    if (!manifest.good()) fail(ErrorKind::io, "manifest write failed under " + out_dir);
}

Manifest read_manifest(const std::string& manifest_path) {
    std::ifstream is(manifest_path);
    if (!is) fail(ErrorKind::io, "cannot open manifest: " + manifest_path);

    Manifest m;
    m.root_dir = fs::path(manifest_path).parent_path().string();
    if (m.root_dir.empty()) m.root_dir = ".";

    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            fail(ErrorKind::format,
                 "manifest line " + std::to_string(lineno) + ": " + e.what());
        }
        ManifestEntry e;
        try {
            e.id = j.at("id").get<std::string>();
            e.grade = j.at("grade").get<int>();
            e.subtype = j.at("subtype").get<int>();
            e.surv_time = j.at("surv_time").get<double>();
            e.censor = j.at("censor").get<int>();
            e.path_file = j.at("path_file").get<std::string>();
            e.gene_file = j.at("gene_file").get<std::string>();
        } catch (const json::exception& ex) {
            fail(ErrorKind::format, "manifest line " + std::to_string(lineno) +
                                        " missing or mistyped field: " + ex.what());
        }
        if (!seen.insert(e.id).second)
            fail(ErrorKind::format, "manifest has duplicate id: " + e.id);
        for (const std::string& rel : {e.path_file, e.gene_file}) {
            if (!fs::exists(fs::path(m.root_dir) / rel))
                fail(ErrorKind::format, "manifest references missing file: " + rel);
        }
        m.entries.push_back(std::move(e));
    }
    if (m.entries.empty()) fail(ErrorKind::format, "manifest is empty: " + manifest_path);
    return m;
}

SampleRecord load_sample(const Manifest& manifest, const ManifestEntry& entry) {
    SampleRecord r;
    r.id = entry.id;
    r.patch_features = read_feature_file((fs::path(manifest.root_dir) / entry.path_file).string());
    r.gene_groups = read_feature_file((fs::path(manifest.root_dir) / entry.gene_file).string());
    r.grade = entry.grade;
    r.subtype = entry.subtype;
    r.survival.time = entry.surv_time;
    r.survival.censor = entry.censor;
    r.survival.bin = 0;
    return r;
}

std::vector<SampleRecord> load_all(const Manifest& manifest) {
    std::vector<SampleRecord> out;
    out.reserve(manifest.entries.size());
    for (const ManifestEntry& e : manifest.entries) out.push_back(load_sample(manifest, e));
    return out;
}

FoldSplit kfold_split(const std::vector<std::string>& ids, std::size_t k, std::size_t fold,
                      std::uint64_t split_seed) {
    if (k < 2 || k > ids.size())
        fail(ErrorKind::invalid_argument, "kfold_split: need 2 <= k <= n_samples");
    if (fold >= k) fail(ErrorKind::invalid_argument, "kfold_split: fold index out of range");

    std::vector<std::string> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    std::mt19937_64 rng(split_seed);
    std::shuffle(sorted.begin(), sorted.end(), rng);

    FoldSplit split;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i % k == fold)
            split.test_ids.push_back(sorted[i]);
        else
            split.train_ids.push_back(sorted[i]);
    }
    return split;
}

} // namespace umeml
