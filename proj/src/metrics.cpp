#include "umeml/metrics.hpp"

#include "umeml/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

namespace umeml {

namespace {

std::vector<std::size_t> order_by_score(const std::vector<double>& score) {
    std::vector<std::size_t> idx(score.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
    return idx;
}

} // namespace

double accuracy(const std::vector<std::vector<double>>& scores, const std::vector<int>& labels) {
    if (scores.empty() || scores.size() != labels.size())
        fail(ErrorKind::invalid_argument, "accuracy: need matching non-empty scores and labels");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const std::vector<double>& row = scores[i];
        if (row.empty()) fail(ErrorKind::invalid_argument, "accuracy: empty score row");
        std::size_t best = 0;
        for (std::size_t j = 1; j < row.size(); ++j)
            if (row[j] > row[best]) best = j;  // strict: ties keep the lowest index
        if (static_cast<int>(best) == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(scores.size());
}

double binary_auc(const std::vector<double>& score, const std::vector<char>& is_pos) {
    if (score.size() != is_pos.size() || score.empty())
        fail(ErrorKind::invalid_argument, "binary_auc: need matching non-empty inputs");
    std::size_t n_pos = 0;
    for (char p : is_pos) n_pos += p ? 1 : 0;
    const std::size_t n_neg = score.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        fail(ErrorKind::runtime, "binary_auc: both classes must be present");

    const std::vector<std::size_t> idx = order_by_score(score);
    // average 1-based ranks within tie blocks keep every increment a multiple
    // of one half, so the pair-count identity is exact in floating point
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && score[idx[j]] == score[idx[i]]) ++j;
        const double avg_rank = static_cast<double>(i + 1 + j) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (is_pos[idx[k]]) rank_sum_pos += avg_rank;
        i = j;
    }
    const double np = static_cast<double>(n_pos);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

double roc_auc_macro_ovr(const std::vector<std::vector<double>>& scores,
                         const std::vector<int>& labels, std::size_t n_classes,
                         std::vector<int>* skipped) {
    if (scores.empty() || scores.size() != labels.size())
        fail(ErrorKind::invalid_argument, "roc_auc: need matching non-empty scores and labels");
    if (skipped) skipped->clear();

    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        std::vector<double> s(scores.size());
        std::vector<char> pos(scores.size());
        std::size_t n_pos = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (scores[i].size() != n_classes)
                fail(ErrorKind::dimension, "roc_auc: score row width != n_classes");
            s[i] = scores[i][c];
            pos[i] = labels[i] == static_cast<int>(c) ? 1 : 0;
            n_pos += pos[i];
        }
        if (n_pos == 0 || n_pos == scores.size()) {
            if (skipped) skipped->push_back(static_cast<int>(c));
            continue;
        }
        sum += binary_auc(s, pos);
        ++used;
    }
    if (used == 0) fail(ErrorKind::runtime, "roc_auc: no class has both positives and negatives");
    return sum / static_cast<double>(used);
}

double concordance_index(const std::vector<double>& risk, const std::vector<double>& time,
                         const std::vector<int>& event) {
    const std::size_t n = risk.size();
    if (n == 0 || time.size() != n || event.size() != n)
        fail(ErrorKind::invalid_argument, "concordance_index: need matching non-empty inputs");

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return time[a] < time[b]; });

    double s = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < n; ++a) {
        const std::size_t i = idx[a];
        if (event[i] != 1) continue;
        for (std::size_t b = a + 1; b < n; ++b) {
            const std::size_t j = idx[b];
            if (time[j] == time[i]) continue;  // tied times are not comparable
            ++pairs;
            if (risk[i] > risk[j])
                s += 1.0;
            else if (risk[i] == risk[j])
                s += 0.5;
        }
    }
    if (pairs == 0) fail(ErrorKind::runtime, "concordance_index: no comparable pairs");
    return s / static_cast<double>(pairs);
}

std::vector<std::pair<double, double>> roc_points(const std::vector<double>& score,
                                                  const std::vector<char>& is_pos) {
    if (score.size() != is_pos.size() || score.empty())
        fail(ErrorKind::invalid_argument, "roc_points: need matching non-empty inputs");
    std::size_t n_pos = 0;
    for (char p : is_pos) n_pos += p ? 1 : 0;
    const std::size_t n_neg = score.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        fail(ErrorKind::runtime, "roc_points: both classes must be present");

    std::vector<std::size_t> idx = order_by_score(score);
    std::reverse(idx.begin(), idx.end());  // descending: sweep thresholds downwards

    std::vector<std::pair<double, double>> pts;
    pts.emplace_back(0.0, 0.0);
    std::size_t tp = 0, fp = 0, i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && score[idx[j]] == score[idx[i]]) ++j;
        for (std::size_t k = i; k < j; ++k) {
            if (is_pos[idx[k]])
                ++tp;
            else
                ++fp;
        }
        pts.emplace_back(static_cast<double>(fp) / static_cast<double>(n_neg),
                         static_cast<double>(tp) / static_cast<double>(n_pos));
        i = j;
    }
    return pts;
}

TdAucResult time_dependent_auc(const std::vector<double>& risk, const std::vector<double>& time,
                               const std::vector<int>& event,
                               const std::vector<double>& eval_times) {
    const std::size_t n = risk.size();
    if (n == 0 || time.size() != n || event.size() != n)
        fail(ErrorKind::invalid_argument, "time_dependent_auc: need matching non-empty inputs");

    TdAucResult out;
    for (double t : eval_times) {
        std::vector<double> s;
        std::vector<char> pos;
        for (std::size_t i = 0; i < n; ++i) {
            const bool is_case = event[i] == 1 && time[i] <= t;
            const bool is_control = time[i] > t;
            if (!is_case && !is_control) continue;  // censored before t: uninformative
            s.push_back(risk[i]);
            pos.push_back(is_case ? 1 : 0);
        }
        std::size_t n_case = 0;
        for (char p : pos) n_case += p ? 1 : 0;
        if (n_case == 0 || n_case == pos.size()) {
            out.skipped_times.push_back(t);
            continue;
        }
        out.points.push_back({t, binary_auc(s, pos)});
    }
    return out;
}

double trapezoid_area(const std::vector<std::pair<double, double>>& points) {
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i)
        area += (points[i].first - points[i - 1].first) *
                (points[i].second + points[i - 1].second) / 2.0;
    return area;
}

double round6(double v) { return std::round(v * 1e6) / 1e6; }

void write_roc_csv(std::ostream& os, const std::vector<std::pair<double, double>>& points) {
    os << "fpr,tpr\n";
    char buf[64];
    for (const auto& [fpr, tpr] : points) {
        std::snprintf(buf, sizeof buf, "%.6f,%.6f\n", fpr, tpr);
        os << buf;
    }
}

void write_td_auc_csv(std::ostream& os, const std::vector<TdAucPoint>& points) {
    os << "time,auc\n";
    char buf[64];
    for (const TdAucPoint& p : points) {
        std::snprintf(buf, sizeof buf, "%.6f,%.6f\n", p.time, p.auc);
        os << buf;
    }
}

namespace {
std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) fail(ErrorKind::io, "cannot open for writing: " + path);
    return os;
}
} // namespace

void write_roc_csv_file(const std::string& path,
                        const std::vector<std::pair<double, double>>& points) {
    std::ofstream os = open_out(path);
    write_roc_csv(os, points);
    if (!os.good()) fail(ErrorKind::io, "write failed: " + path);
}

void write_td_auc_csv_file(const std::string& path, const std::vector<TdAucPoint>& points) {
    std::ofstream os = open_out(path);
    write_td_auc_csv(os, points);
    if (!os.good()) fail(ErrorKind::io, "write failed: " + path);
}

} // namespace umeml
