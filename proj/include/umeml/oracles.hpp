#ifndef UMEML_ORACLES_HPP
#define UMEML_ORACLES_HPP

#include <vector>

// Brute-force reference implementations, written as literal double loops so
// they stay independent of the production code paths they validate.
namespace umeml::oracles {

// Sum of W_ij = A_ij - d_i d_j / 2e over ordered pairs (i, j) that share a
// community (the diagonal included). A must be square and symmetric.
double newman_same_community_sum(const std::vector<std::vector<double>>& a,
                                 const std::vector<int>& community);

// P(score_pos > score_neg) + 0.5 P(equal) by enumerating every pos/neg pair.
double pairwise_auc(const std::vector<double>& score, const std::vector<char>& is_pos);

// Concordance by enumerating every ordered pair and testing comparability
// from scratch. Returns the fraction; *pairs_out (optional) gets the count.
double pairwise_concordance(const std::vector<double>& risk, const std::vector<double>& time,
                            const std::vector<int>& event, std::size_t* pairs_out = nullptr);

// Cumulative/dynamic AUC at one time by explicit case/control loops; false
// when either side is empty.
bool pairwise_td_auc(const std::vector<double>& risk, const std::vector<double>& time,
                     const std::vector<int>& event, double t, double* out);

} // namespace umeml::oracles

#endif
