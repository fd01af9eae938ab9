#ifndef UMEML_METRICS_HPP
#define UMEML_METRICS_HPP

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace umeml {

// Fraction of rows whose argmax score hits the label. Tied maxima resolve to
// the lowest class index.
double accuracy(const std::vector<std::vector<double>>& scores, const std::vector<int>& labels);

// Binary ranking AUC via average ranks; tied scores count one half. Exact:
// the result equals the all-pairs count to the last bit.
double binary_auc(const std::vector<double>& score, const std::vector<char>& is_pos);

// Macro one-vs-rest AUC over the classes that have both positives and
// negatives; classes without are reported in skipped (when non-null). All
// classes skipped is an error.
double roc_auc_macro_ovr(const std::vector<std::vector<double>>& scores,
                         const std::vector<int>& labels, std::size_t n_classes,
                         std::vector<int>* skipped = nullptr);

// Concordance over comparable pairs: the earlier time must be an observed
// event, tied times are never comparable. Higher risk at the earlier time
// counts 1, tied risks 0.5.
double concordance_index(const std::vector<double>& risk, const std::vector<double>& time,
                         const std::vector<int>& event);

// One-vs-rest ROC staircase from (0,0) to (1,1), one point per distinct
// score. Trapezoidal area equals binary_auc to ~1e-15.
std::vector<std::pair<double, double>> roc_points(const std::vector<double>& score,
                                                  const std::vector<char>& is_pos);

struct TdAucPoint {
    double time = 0.0;
    double auc = 0.0;
};
struct TdAucResult {
    std::vector<TdAucPoint> points;
    std::vector<double> skipped_times;  // no case or no control available
};

// Cumulative/dynamic AUC: at time t, cases are observed events with
// time <= t and controls are samples still under observation (time > t).
TdAucResult time_dependent_auc(const std::vector<double>& risk, const std::vector<double>& time,
                               const std::vector<int>& event,
                               const std::vector<double>& eval_times);

double trapezoid_area(const std::vector<std::pair<double, double>>& points);

// nearest value with 6 decimal places, the precision of the curve CSVs
double round6(double v);

// CSV emitters: header line then one "%.6f,%.6f" row per point.
void write_roc_csv(std::ostream& os, const std::vector<std::pair<double, double>>& points);
void write_td_auc_csv(std::ostream& os, const std::vector<TdAucPoint>& points);
void write_roc_csv_file(const std::string& path, const std::vector<std::pair<double, double>>& points);
void write_td_auc_csv_file(const std::string& path, const std::vector<TdAucPoint>& points);

} // namespace umeml

#endif
