#include "umeml/oracles.hpp"

#include "umeml/error.hpp"

namespace umeml::oracles {

double newman_same_community_sum(const std::vector<std::vector<double>>& a,
                                 const std::vector<int>& community) {
    const std::size_t m = a.size();
    if (m == 0 || community.size() != m)
        fail(ErrorKind::invalid_argument, "newman oracle: inconsistent inputs");

    std::vector<double> degree(m, 0.0);
    double two_e = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (a[i].size() != m) fail(ErrorKind::invalid_argument, "newman oracle: ragged matrix");
        for (std::size_t j = 0; j < m; ++j) degree[i] += a[i][j];
        two_e += degree[i];
    }
    if (two_e <= 0.0) return 0.0;

    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            if (community[i] == community[j])
                sum += a[i][j] - degree[i] * degree[j] / two_e;
    return sum;
}

double pairwise_auc(const std::vector<double>& score, const std::vector<char>& is_pos) {
    double s = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < score.size(); ++i) {
        if (!is_pos[i]) continue;
        for (std::size_t j = 0; j < score.size(); ++j) {
            if (is_pos[j]) continue;
            ++pairs;
            if (score[i] > score[j])
                s += 1.0;
            else if (score[i] == score[j])
                s += 0.5;
        }
    }
    if (pairs == 0) fail(ErrorKind::runtime, "auc oracle: need both classes");
    return s / static_cast<double>(pairs);
}

double pairwise_concordance(const std::vector<double>& risk, const std::vector<double>& time,
                            const std::vector<int>& event, std::size_t* pairs_out) {
    double s = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < risk.size(); ++i) {
        for (std::size_t j = 0; j < risk.size(); ++j) {
            if (i == j) continue;
            // comparable: i observed an event strictly before j's time
            if (event[i] != 1 || !(time[i] < time[j])) continue;
            ++pairs;
            if (risk[i] > risk[j])
                s += 1.0;
            else if (risk[i] == risk[j])
                s += 0.5;
        }
    }
    if (pairs_out) *pairs_out = pairs;
    if (pairs == 0) fail(ErrorKind::runtime, "concordance oracle: no comparable pairs");
    return s / static_cast<double>(pairs);
}

bool pairwise_td_auc(const std::vector<double>& risk, const std::vector<double>& time,
                     const std::vector<int>& event, double t, double* out) {
    double s = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < risk.size(); ++i) {
        if (!(event[i] == 1 && time[i] <= t)) continue;  // case
        for (std::size_t j = 0; j < risk.size(); ++j) {
            if (!(time[j] > t)) continue;  // control
            ++pairs;
            if (risk[i] > risk[j])
                s += 1.0;
            else if (risk[i] == risk[j])
                s += 0.5;
        }
    }
    if (pairs == 0) return false;
    *out = s / static_cast<double>(pairs);
    return true;
}

} // namespace umeml::oracles
