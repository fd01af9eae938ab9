#ifndef UMEML_DATAKIT_HPP
#define UMEML_DATAKIT_HPP

#include "umeml/losses.hpp"
#include "umeml/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace umeml {

// Synthetic cohort layout. Class signal is planted complementarily: patch
// bags separate class 0 from the rest strongly and the remaining classes
// only weakly; gene groups mirror that around the last class. Either
// modality alone therefore caps well below what both together support.
struct GeneratorConfig {
    std::size_t n_samples = 200;
    int n_classes = 3;
    std::size_t d = 32;       // patch feature width
    std::size_t d_g = 64;     // raw gene-group width
    std::size_t m_min = 32;   // patches per bag, inclusive range
    std::size_t m_max = 64;
    std::size_t n_groups = 6; // gene groups per sample
    double s_p = 2.0;         // patch signal-cluster shift
    double s_g = 2.0;         // gene-group shift
    double noise = 1.0;       // feature noise sigma, both modalities
    double censor_rate = 0.3;
    double base_hazard = 0.02;  // events per month for class 0
    double hazard_ratio = 3.0;  // rate multiplier per class step
    std::uint64_t seed = 1;
};

// One loaded sample. The survival bin is left 0 here; it depends on
// fold-local quartiles and is assigned during training setup.
struct SampleRecord {
    std::string id;
    Tensor patch_features;  // M x d, M varies per sample
    Tensor gene_groups;     // n_groups x d_g
    int grade = 0;
    int subtype = 0;
    SurvivalTarget survival;
};

struct ManifestEntry {
    std::string id;
    int grade = 0;
    int subtype = 0;
    double surv_time = 0.0;
    int censor = 0;
    std::string path_file;  // relative to the manifest directory
    std::string gene_file;
};

struct Manifest {
    std::string root_dir;
    std::vector<ManifestEntry> entries;
};

// Writes features/ plus manifest.jsonl under out_dir. Deterministic: the
// same config yields byte-identical output.
void generate(const GeneratorConfig& cfg, const std::string& out_dir);

// Feature container: "UMFB", u32 rows, u32 cols, then row-major f32, all
// little-endian. Values are stored in 32-bit precision, so writers should
// hold float32-representable data (the generator does) for exact trips.
Tensor read_feature_file(const std::string& path);
void write_feature_file(const std::string& path, const Tensor& m);

// Parses manifest.jsonl, checks id uniqueness and that referenced feature
// files exist.
Manifest read_manifest(const std::string& manifest_path);

SampleRecord load_sample(const Manifest& manifest, const ManifestEntry& entry);
std::vector<SampleRecord> load_all(const Manifest& manifest);

struct FoldSplit {
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
};

// Deterministic k-fold partition: ids are sorted, shuffled once with
// split_seed, and fold f takes shuffled positions congruent to f mod k.
FoldSplit kfold_split(const std::vector<std::string>& ids, std::size_t k, std::size_t fold,
                      std::uint64_t split_seed = 0);

} // namespace umeml

#endif
