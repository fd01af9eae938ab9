// Cross-validated training and evaluation: per-fold SGD with weight decay,
// discrete survival-bin construction from training folds, metric aggregation
// with sample standard deviations, and deterministic summary serialization.
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "umeml/datakit.hpp"
#include "umeml/model.hpp"

namespace umeml {

struct RunConfig {
    Task task = Task::grading;
    Variant variant = Variant::full;
    ModelConfig model;
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 0.1;
    double lr = 1e-3;
    double weight_decay = 1e-5;
    double momentum = 0.0;  // reserved; must stay 0 for now
    std::size_t epochs = 10;
    std::size_t folds = 5;
    std::uint64_t seed_base = 0;   // fold seed = seed_base + fold (folds are 1-based)
    std::uint64_t split_seed = 0;
    double uncensored_weight = 1.0;
    bool parallel_folds = false;
    std::string out_dir;  // empty disables file output
};

// Diagnosis tasks train 10 epochs at 1e-3; prognosis trains 5 at 2e-4.
void apply_task_defaults(RunConfig& cfg);

// One evaluated test sample. Classification tasks fill label + scores;
// survival fills time, censor, and the aggregated risk.
struct EvalRecord {
    std::string id;
    int label = 0;
    std::vector<double> scores;
    double time = 0.0;
    int censor = 0;
    double risk = 0.0;
};

struct FoldResult {
    std::size_t fold = 0;  // 1-based
    std::map<std::string, double> metrics;
    std::vector<EvalRecord> records;
    std::vector<double> epoch_losses;  // mean training loss per epoch
};

struct MetricSummary {
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation (n - 1)
    std::vector<double> per_fold;
};

struct CvSummary {
    Task task = Task::grading;
    Variant variant = Variant::full;
    std::vector<FoldResult> folds;
    std::map<std::string, MetricSummary> metrics;
    std::string json;  // serialized summary, byte-stable for identical runs
};

// Bin edges are the training-fold quartiles of uncensored event times; a
// time falls in the first bin whose edge is not below it.
std::vector<double> survival_bin_edges(std::vector<double> uncensored_times,
                                       std::size_t n_bins);
int survival_bin_of(double time, const std::vector<double>& edges);

// Expected cumulative incidence: sum over bins of (1 - S_bin) with hazards
// sigmoid(logits). Higher means higher risk.
double survival_risk(const Tensor& hazard_logits);

// Metrics recomputable from records alone: accuracy and macro one-vs-rest
// AUC for the class tasks, concordance index for survival.
std::map<std::string, double> metrics_from_records(Task task,
                                                   const std::vector<EvalRecord>& records,
                                                   std::size_t n_classes);

// One plain SGD update, theta <- theta - lr * (grad + weight_decay * theta),
// applied to every trainable tensor. Parameters left unbound afterwards.
// Tensors unreachable from the loss see a pure decay step.
void sgd_step(ModelParams& params, Tape& tape, double lr, double weight_decay);

// Trains on everything outside the fold, evaluates the held-out fold after
// the final epoch. Aborts with a diagnostic naming the offending loss term
// if any loss turns non-finite.
FoldResult train_fold(const std::vector<SampleRecord>& data, const RunConfig& cfg,
                      std::size_t fold);

// All folds plus aggregation. Writes summary.json, per-fold record and loss
// CSVs, pooled ROC / time-dependent-AUC curves, and final parameter
// snapshots when cfg.out_dir is set.
CvSummary run_cv(const std::vector<SampleRecord>& data, const RunConfig& cfg);

// run_cv restricted to the baseline variants (concat, add, path_only,
// gene_only). These never compute the modularity penalty.
CvSummary run_baseline(const std::vector<SampleRecord>& data, const RunConfig& cfg);

// One per-fold record CSV as written by train_fold, with the task inferred
// from its header row.
struct RecordsFile {
    Task task = Task::grading;
    std::vector<EvalRecord> records;
};
RecordsFile read_records_csv(const std::string& path);

// Pools every fold<k>_records.csv under results_dir (in fold order) and
// writes curve point files into out_dir: one roc_class<c>.csv per class
// with both outcomes, or td_auc.csv for survival records. Returns one
// line per file written; ROC lines carry the trapezoid area of exactly
// the points the file holds.
std::vector<std::string> rebuild_curves(const std::string& results_dir,
                                        const std::string& out_dir);

}  // namespace umeml
