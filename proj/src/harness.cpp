#include "umeml/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "umeml/error.hpp"
#include "umeml/losses.hpp"
#include "umeml/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace umeml {

namespace {

void validate_config(const RunConfig& cfg, std::size_t n_samples) {
    if (cfg.folds < 2) fail(ErrorKind::invalid_argument, "need at least 2 folds");
    if (cfg.folds > n_samples)
        fail(ErrorKind::invalid_argument, "more folds than samples (" +
                                              std::to_string(cfg.folds) + " > " +
                                              std::to_string(n_samples) + ")");
    if (cfg.lr < 0.0) fail(ErrorKind::invalid_argument, "learning rate must be >= 0");
    if (cfg.weight_decay < 0.0) fail(ErrorKind::invalid_argument, "weight decay must be >= 0");
    if (cfg.momentum != 0.0)
        fail(ErrorKind::invalid_argument, "momentum is reserved and must stay 0");
    if (cfg.epochs < 1) fail(ErrorKind::invalid_argument, "need at least 1 epoch");
    if (cfg.gamma < 0.0) fail(ErrorKind::invalid_argument, "gamma must be >= 0");
}

std::size_t task_classes(Task task, const ModelConfig& model) {
    switch (task) {
        case Task::grading: return model.head_widths.n_grade;
        case Task::classification: return model.head_widths.n_class;
        case Task::survival: return model.head_widths.n_bins;
    }
    fail(ErrorKind::invalid_argument, "unknown task");
}

int class_label(Task task, const SampleRecord& r) {
    return task == Task::classification ? r.subtype : r.grade;
}

std::vector<double> softmax_scores(const Tensor& logits) {
    double mx = logits.at(0, 0);
    for (std::size_t c = 1; c < logits.cols; ++c) mx = std::max(mx, logits.at(0, c));
    std::vector<double> s(logits.cols);
    double z = 0.0;
    for (std::size_t c = 0; c < logits.cols; ++c) {
        s[c] = std::exp(logits.at(0, c) - mx);
        z += s[c];
    }
    for (double& v : s) v /= z;
    return s;
}

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct LossTermCheck {
    std::size_t fold;
    std::size_t epoch;
    const std::string* sample_id;

    void check(const Tensor& value, const char* term) const {
        if (value.all_finite()) return;
        fail(ErrorKind::runtime, std::string("non-finite ") + term + " loss at fold " +
                                     std::to_string(fold) + ", epoch " + std::to_string(epoch) +
                                     ", sample " + *sample_id);
    }
};

}  // namespace

void apply_task_defaults(RunConfig& cfg) {
    if (cfg.task == Task::survival) {
        cfg.lr = 2e-4;
        cfg.epochs = 5;
    } else {
        cfg.lr = 1e-3;
        cfg.epochs = 10;
    }
}

std::vector<double> survival_bin_edges(std::vector<double> uncensored_times,
                                       std::size_t n_bins) {
    if (n_bins < 2) fail(ErrorKind::invalid_argument, "need at least 2 survival bins");
    if (uncensored_times.empty())
        fail(ErrorKind::runtime, "cannot place survival bins: no uncensored events");
    std::sort(uncensored_times.begin(), uncensored_times.end());
    const std::size_t n = uncensored_times.size();
    std::vector<double> edges;
    for (std::size_t k = 1; k < n_bins; ++k)
        edges.push_back(uncensored_times[std::min(n - 1, k * n / n_bins)]);
    return edges;
}

int survival_bin_of(double time, const std::vector<double>& edges) {
    int bin = 0;
    for (double e : edges)
        if (time > e) ++bin;
    return bin;
}

double survival_risk(const Tensor& hazard_logits) {
    if (hazard_logits.rows != 1 || hazard_logits.cols < 1)
        fail(ErrorKind::dimension, "survival_risk wants a 1 x n_bins row");
    double surv = 1.0;
    double risk = 0.0;
    for (std::size_t j = 0; j < hazard_logits.cols; ++j) {
        const double x = hazard_logits.at(0, j);
        const double h = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                                  : std::exp(x) / (1.0 + std::exp(x));
        surv *= 1.0 - h;
        risk += 1.0 - surv;
    }
    return risk;
}

std::map<std::string, double> metrics_from_records(Task task,
                                                   const std::vector<EvalRecord>& records,
                                                   std::size_t n_classes) {
    if (records.empty()) fail(ErrorKind::invalid_argument, "no evaluation records");
    std::map<std::string, double> out;
    if (task == Task::survival) {
        std::vector<double> risk, time;
        std::vector<int> event;
        for (const EvalRecord& r : records) {
            risk.push_back(r.risk);
            time.push_back(r.time);
            event.push_back(1 - r.censor);
        }
        out["c_index"] = concordance_index(risk, time, event);
        return out;
    }
    std::vector<std::vector<double>> scores;
    std::vector<int> labels;
    for (const EvalRecord& r : records) {
        scores.push_back(r.scores);
        labels.push_back(r.label);
    }
    out["accuracy"] = accuracy(scores, labels);
    out["auc_macro"] = roc_auc_macro_ovr(scores, labels, n_classes);
    return out;
}

void sgd_step(ModelParams& params, Tape& tape, double lr, double weight_decay) {
    visit_params(params, [&](const std::string&, Tensor& t) {
        Tensor g = tape.grad(t);
        for (std::size_t i = 0; i < t.data.size(); ++i)
            t.data[i] -= lr * (g.data[i] + weight_decay * t.data[i]);
    });
    detach_params(params);
}

FoldResult train_fold(const std::vector<SampleRecord>& data, const RunConfig& cfg,
                      std::size_t fold) {
    validate_config(cfg, data.size());
    if (fold < 1 || fold > cfg.folds)
        fail(ErrorKind::invalid_argument, "fold index must be in [1, folds]");

    std::vector<std::string> ids;
    ids.reserve(data.size());
    for (const SampleRecord& r : data) ids.push_back(r.id);
    FoldSplit split = kfold_split(ids, cfg.folds, fold - 1, cfg.split_seed);

    std::map<std::string, const SampleRecord*> by_id;
    for (const SampleRecord& r : data) {
        if (!by_id.emplace(r.id, &r).second)
            fail(ErrorKind::invalid_argument, "duplicate sample id " + r.id);
    }
    auto resolve = [&](const std::vector<std::string>& want) {
        std::vector<const SampleRecord*> out;
        out.reserve(want.size());
        for (const std::string& id : want) out.push_back(by_id.at(id));
        return out;
    };
    std::vector<const SampleRecord*> train = resolve(split.train_ids);
    std::vector<const SampleRecord*> test = resolve(split.test_ids);

    const std::size_t n_classes = task_classes(cfg.task, cfg.model);
    if (cfg.task != Task::survival) {
        for (const SampleRecord* r : train) {
            const int label = class_label(cfg.task, *r);
            if (label < 0 || static_cast<std::size_t>(label) >= n_classes)
                fail(ErrorKind::invalid_argument, "label " + std::to_string(label) +
                                                      " of sample " + r->id +
                                                      " exceeds the head width");
        }
    }

    std::vector<double> bin_edges;
    if (cfg.task == Task::survival) {
        std::vector<double> uncensored;
        for (const SampleRecord* r : train)
            if (r->survival.censor == 0) uncensored.push_back(r->survival.time);
        bin_edges = survival_bin_edges(std::move(uncensored), cfg.model.head_widths.n_bins);
    }

    const std::uint64_t fold_seed = cfg.seed_base + fold;
    ModelParams model = make_model(cfg.variant, cfg.model, fold_seed);
    std::mt19937_64 shuffle_rng(fold_seed);

    const bool want_modularity = cfg.gamma != 0.0 && variant_uses_modularity(cfg.variant);

    FoldResult result;
    result.fold = fold;

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        for (std::size_t pos : order) {
            const SampleRecord& sample = *train[pos];
            LossTermCheck guard{fold, epoch, &sample.id};

            Tape tape;
            bind_params(model, tape);
            ModelOutput out = forward(model, sample.patch_features, sample.gene_groups,
                                      cfg.task, want_modularity, cfg.alpha, cfg.beta);

            Tensor objective;
            if (cfg.task == Task::survival) {
                SurvivalTarget target = sample.survival;
                target.bin = survival_bin_of(target.time, bin_edges);
                objective = nll_survival(out.logits, target, cfg.uncensored_weight);
                guard.check(objective, "survival likelihood");
            } else {
                objective = cross_entropy(out.logits, class_label(cfg.task, sample));
                guard.check(objective, "cross-entropy");
            }

            Tensor total = objective;
            if (out.has_modularity) {
                guard.check(out.modularity, "modularity");
                total = total_loss(objective, out.modularity, cfg.gamma);
                guard.check(total, "total");
            }

            tape.backward(total);
            sgd_step(model, tape, cfg.lr, cfg.weight_decay);
            loss_sum += total.item();
        }
        result.epoch_losses.push_back(loss_sum / static_cast<double>(train.size()));
    }

    for (const SampleRecord* r : test) {
        ModelOutput out = forward(model, r->patch_features, r->gene_groups, cfg.task,
                                  false, cfg.alpha, cfg.beta);
        EvalRecord rec;
        rec.id = r->id;
        if (cfg.task == Task::survival) {
            rec.time = r->survival.time;
            rec.censor = r->survival.censor;
            rec.risk = survival_risk(out.logits);
        } else {
            rec.label = class_label(cfg.task, *r);
            rec.scores = softmax_scores(out.logits);
        }
        result.records.push_back(std::move(rec));
    }

    result.metrics = metrics_from_records(cfg.task, result.records, n_classes);

    if (!cfg.out_dir.empty()) {
        std::error_code ec;
        fs::create_directories(cfg.out_dir, ec);
        if (ec) fail(ErrorKind::io, "cannot create output directory " + cfg.out_dir);
        const std::string tag = "fold" + std::to_string(fold);

        std::ofstream rec_csv(fs::path(cfg.out_dir) / (tag + "_records.csv"));
        if (!rec_csv) fail(ErrorKind::io, "cannot write records CSV for " + tag);
        if (cfg.task == Task::survival) {
            rec_csv << "id,time,censor,risk\n";
            for (const EvalRecord& r : result.records)
                rec_csv << r.id << ',' << format_g17(r.time) << ',' << r.censor << ','
                        << format_g17(r.risk) << '\n';
        } else {
            rec_csv << "id,label";
            for (std::size_t c = 0; c < n_classes; ++c) rec_csv << ",score_" << c;
            rec_csv << '\n';
            for (const EvalRecord& r : result.records) {
                rec_csv << r.id << ',' << r.label;
                for (double s : r.scores) rec_csv << ',' << format_g17(s);
                rec_csv << '\n';
            }
        }

        std::ofstream loss_csv(fs::path(cfg.out_dir) / (tag + "_loss.csv"));
        if (!loss_csv) fail(ErrorKind::io, "cannot write loss CSV for " + tag);
        loss_csv << "epoch,mean_loss\n";
        for (std::size_t e = 0; e < result.epoch_losses.size(); ++e)
            loss_csv << (e + 1) << ',' << format_g17(result.epoch_losses[e]) << '\n';

        save_params(model, (fs::path(cfg.out_dir) / ("params_" + tag + ".bin")).string());
    }
    return result;
}

namespace {

std::vector<std::string> write_curve_files(Task task, const std::vector<EvalRecord>& pooled,
                                           std::size_t n_classes, const std::string& out_dir) {
    std::vector<std::string> report;
    char line[128];

    if (task == Task::survival) {
        std::vector<double> risk, time;
        std::vector<int> event;
        std::vector<double> grid;
        for (const EvalRecord& r : pooled) {
            risk.push_back(r.risk);
            time.push_back(r.time);
            event.push_back(1 - r.censor);
            if (r.censor == 0) grid.push_back(r.time);
        }
        std::sort(grid.begin(), grid.end());
        grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
        if (grid.empty()) return report;
        TdAucResult td = time_dependent_auc(risk, time, event, grid);
        if (td.points.empty()) return report;
        write_td_auc_csv_file((fs::path(out_dir) / "td_auc.csv").string(), td.points);
        std::snprintf(line, sizeof line, "td_auc.csv points=%zu", td.points.size());
        report.push_back(line);
        return report;
    }

    for (std::size_t c = 0; c < n_classes; ++c) {
        std::vector<double> score;
        std::vector<char> is_pos;
        bool any_pos = false, any_neg = false;
        for (const EvalRecord& r : pooled) {
            score.push_back(r.scores.at(c));
            const bool pos = static_cast<std::size_t>(r.label) == c;
            is_pos.push_back(pos ? 1 : 0);
            (pos ? any_pos : any_neg) = true;
        }
        if (!any_pos || !any_neg) continue;
        auto points = roc_points(score, is_pos);
        // snap to the file's 6-decimal precision before writing so the CSV
        // holds exactly the points any reader recovers
        for (auto& [fpr, tpr] : points) {
            fpr = round6(fpr);
            tpr = round6(tpr);
        }
        const std::string name = "roc_class" + std::to_string(c) + ".csv";
        write_roc_csv_file((fs::path(out_dir) / name).string(), points);
        std::snprintf(line, sizeof line, "%s points=%zu area=%.9f", name.c_str(), points.size(),
                      trapezoid_area(points));
        report.push_back(line);
    }
    return report;
}

void write_pooled_curves(const RunConfig& cfg, const std::vector<FoldResult>& folds,
                         std::size_t n_classes) {
    std::vector<EvalRecord> pooled;
    for (const FoldResult& f : folds)
        pooled.insert(pooled.end(), f.records.begin(), f.records.end());
    write_curve_files(cfg.task, pooled, n_classes, cfg.out_dir);
}

json config_echo(const RunConfig& cfg) {
    json j;
    j["alpha"] = cfg.alpha;
    j["beta"] = cfg.beta;
    j["cross_layers"] = cfg.model.cross_layers;
    j["decoder_layers"] = cfg.model.decoder_layers;
    j["epochs"] = cfg.epochs;
    j["folds"] = cfg.folds;
    j["gamma"] = cfg.gamma;
    j["gene_groups"] = cfg.model.n;
    j["gene_self_layers"] = cfg.model.gene_self_layers;
    j["gene_width"] = cfg.model.d_g;
    j["heads"] = cfg.model.heads;
    j["lr"] = cfg.lr;
    j["momentum"] = cfg.momentum;
    j["n_bins"] = cfg.model.head_widths.n_bins;
    j["n_class"] = cfg.model.head_widths.n_class;
    j["n_grade"] = cfg.model.head_widths.n_grade;
    j["parallel_folds"] = cfg.parallel_folds;
    j["path_self_layers"] = cfg.model.path_self_layers;
    j["prototypes"] = cfg.model.k;
    j["registers"] = cfg.model.i;
    j["seed_base"] = cfg.seed_base;
    j["split_seed"] = cfg.split_seed;
    j["task"] = task_name(cfg.task);
    j["uncensored_weight"] = cfg.uncensored_weight;
    j["variant"] = variant_name(cfg.variant);
    j["weight_decay"] = cfg.weight_decay;
    j["width"] = cfg.model.d;
    return j;
}

}  // namespace

CvSummary run_cv(const std::vector<SampleRecord>& data, const RunConfig& cfg) {
    validate_config(cfg, data.size());

    CvSummary summary;
    summary.task = cfg.task;
    summary.variant = cfg.variant;
    summary.folds.resize(cfg.folds);

    if (cfg.parallel_folds) {
        std::vector<std::thread> workers;
        std::vector<std::exception_ptr> errors(cfg.folds);
        for (std::size_t fold = 1; fold <= cfg.folds; ++fold) {
            workers.emplace_back([&, fold] {
                try {
                    summary.folds[fold - 1] = train_fold(data, cfg, fold);
                } catch (...) {
                    errors[fold - 1] = std::current_exception();
                }
            });
        }
        for (std::thread& w : workers) w.join();
        for (const std::exception_ptr& e : errors)
            if (e) std::rethrow_exception(e);
    } else {
        for (std::size_t fold = 1; fold <= cfg.folds; ++fold)
            summary.folds[fold - 1] = train_fold(data, cfg, fold);
    }

    for (const auto& entry : summary.folds[0].metrics) {
        const std::string& name = entry.first;
        MetricSummary ms;
        for (const FoldResult& f : summary.folds) ms.per_fold.push_back(f.metrics.at(name));
        double sum = 0.0;
        for (double v : ms.per_fold) sum += v;
        ms.mean = sum / static_cast<double>(ms.per_fold.size());
        if (ms.per_fold.size() > 1) {
            double ss = 0.0;
            for (double v : ms.per_fold) ss += (v - ms.mean) * (v - ms.mean);
            ms.sd = std::sqrt(ss / static_cast<double>(ms.per_fold.size() - 1));
        }
        summary.metrics[name] = std::move(ms);
    }

    json j;
    j["task"] = task_name(cfg.task);
    j["variant"] = variant_name(cfg.variant);
    j["config_echo"] = config_echo(cfg);
    json metrics_json;
    for (const auto& [name, ms] : summary.metrics) {
        json m;
        m["mean"] = ms.mean;
        m["sd"] = ms.sd;
        m["per_fold"] = ms.per_fold;
        metrics_json[name] = m;
    }
    j["metrics"] = metrics_json;
    summary.json = j.dump(2) + "\n";

    if (!cfg.out_dir.empty()) {
        std::error_code ec;
        fs::create_directories(cfg.out_dir, ec);
        if (ec) fail(ErrorKind::io, "cannot create output directory " + cfg.out_dir);
        std::ofstream out(fs::path(cfg.out_dir) / "summary.json", std::ios::binary);
        if (!out) fail(ErrorKind::io, "cannot write summary.json");
        out << summary.json;
        if (!out.good()) fail(ErrorKind::io, "summary.json write failed");
        write_pooled_curves(cfg, summary.folds, task_classes(cfg.task, cfg.model));
    }
    return summary;
}

CvSummary run_baseline(const std::vector<SampleRecord>& data, const RunConfig& cfg) {
    switch (cfg.variant) {
        case Variant::concat:
        case Variant::add:
        case Variant::path_only:
        case Variant::gene_only:
            return run_cv(data, cfg);
        default:
            fail(ErrorKind::invalid_argument,
                 std::string("not a baseline variant: ") + variant_name(cfg.variant));
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

double parse_double_field(const std::string& s, const std::string& path) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        fail(ErrorKind::format, "bad numeric field '" + s + "' in " + path);
    }
}

int parse_int_field(const std::string& s, const std::string& path) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        fail(ErrorKind::format, "bad integer field '" + s + "' in " + path);
    }
}

}  // namespace

RecordsFile read_records_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot open records CSV " + path);
    std::string header;
    if (!std::getline(in, header)) fail(ErrorKind::format, "empty records CSV " + path);

    RecordsFile out;
    std::size_t n_scores = 0;
    if (header == "id,time,censor,risk") {
        out.task = Task::survival;
    } else {
        const std::vector<std::string> cols = split_csv_line(header);
        bool ok = cols.size() >= 3 && cols[0] == "id" && cols[1] == "label";
        for (std::size_t c = 2; ok && c < cols.size(); ++c)
            ok = cols[c] == "score_" + std::to_string(c - 2);
        if (!ok) fail(ErrorKind::format, "unrecognized records header in " + path);
        out.task = Task::grading;  // same record shape for both class tasks
        n_scores = cols.size() - 2;
    }

    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> f = split_csv_line(line);
        EvalRecord rec;
        if (out.task == Task::survival) {
            if (f.size() != 4) fail(ErrorKind::format, "bad survival row in " + path);
            rec.id = f[0];
            rec.time = parse_double_field(f[1], path);
            rec.censor = parse_int_field(f[2], path);
            rec.risk = parse_double_field(f[3], path);
        } else {
            if (f.size() != n_scores + 2) fail(ErrorKind::format, "bad record row in " + path);
            rec.id = f[0];
            rec.label = parse_int_field(f[1], path);
            for (std::size_t c = 0; c < n_scores; ++c)
                rec.scores.push_back(parse_double_field(f[c + 2], path));
        }
        out.records.push_back(std::move(rec));
    }
    if (out.records.empty()) fail(ErrorKind::format, "no records in " + path);
    return out;
}

std::vector<std::string> rebuild_curves(const std::string& results_dir,
                                        const std::string& out_dir) {
    std::vector<std::pair<unsigned long, fs::path>> files;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(results_dir, ec)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("fold", 0) != 0) continue;
        const std::size_t tail = name.find("_records.csv");
        if (tail == std::string::npos || tail + 12 != name.size()) continue;
        const std::string num = name.substr(4, tail - 4);
        if (num.empty() || num.size() > 9 ||
            num.find_first_not_of("0123456789") != std::string::npos)
            continue;
        files.emplace_back(std::stoul(num), entry.path());
    }
    if (ec) fail(ErrorKind::io, "cannot list results directory " + results_dir);
    if (files.empty())
        fail(ErrorKind::invalid_argument, "no fold record CSVs under " + results_dir);
    std::sort(files.begin(), files.end());

    std::vector<EvalRecord> pooled;
    bool first = true;
    Task task = Task::grading;
    std::size_t n_scores = 0;
    for (const auto& [fold, path] : files) {
        RecordsFile rf = read_records_csv(path.string());
        const std::size_t width = rf.records[0].scores.size();
        if (first) {
            task = rf.task;
            n_scores = width;
            first = false;
        } else if (task != rf.task || n_scores != width) {
            fail(ErrorKind::format, "record CSVs under " + results_dir + " disagree on layout");
        }
        pooled.insert(pooled.end(), rf.records.begin(), rf.records.end());
    }

    std::error_code mk;
    fs::create_directories(out_dir, mk);
    if (mk) fail(ErrorKind::io, "cannot create output directory " + out_dir);
    return write_curve_files(task, pooled, n_scores, out_dir);
}

}  // namespace umeml
