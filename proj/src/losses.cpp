#include "umeml/losses.hpp"

namespace umeml {

Tensor cross_entropy(const Tensor& logits, int label) {
    if (logits.rows != 1)
        fail(ErrorKind::dimension, "cross_entropy: logits must be 1 x n, got " + logits.shape_str());
    if (label < 0 || static_cast<std::size_t>(label) >= logits.cols)
        fail(ErrorKind::invalid_argument,
             "cross_entropy: label " + std::to_string(label) + " out of range for " +
                 std::to_string(logits.cols) + " classes");
    Tensor probs = softmax_rows(logits);
    Tensor picked = slice(probs, 0, 1, static_cast<std::size_t>(label), 1);
    return scale(log_clamped(picked), -1.0);
}

Tensor nll_survival(const Tensor& hazard_logits, const SurvivalTarget& target,
                    double uncensored_weight) {
    if (hazard_logits.rows != 1)
        fail(ErrorKind::dimension,
             "nll_survival: logits must be 1 x n_bins, got " + hazard_logits.shape_str());
    const std::size_t n_bins = hazard_logits.cols;
    if (target.bin < 0 || static_cast<std::size_t>(target.bin) >= n_bins)
        fail(ErrorKind::invalid_argument,
             "nll_survival: bin " + std::to_string(target.bin) + " out of range for " +
                 std::to_string(n_bins) + " bins");
    const std::size_t bin = static_cast<std::size_t>(target.bin);

    Tensor h = sigmoid(hazard_logits);
    Tensor keep = sub(Tensor(1, n_bins, 1.0), h);  // 1 - h_j

    // survival through a prefix of bins; the empty prefix is exactly 1
    auto survival_to = [&](std::size_t last_exclusive) {
        Tensor s(1, 1, {1.0});
        for (std::size_t j = 0; j < last_exclusive; ++j)
            s = mul(s, slice(keep, 0, 1, j, 1));
        return s;
    };

    if (target.censor == 1) {
        return scale(log_clamped(survival_to(bin + 1)), -1.0);
    }
    Tensor log_s_prev = log_clamped(survival_to(bin));
    Tensor log_h = log_clamped(slice(h, 0, 1, bin, 1));
    return scale(add(log_s_prev, log_h), -uncensored_weight);
}

Tensor total_loss(const Tensor& objective, const Tensor& modularity, double gamma) {
    if (objective.rows != 1 || objective.cols != 1 || modularity.rows != 1 || modularity.cols != 1)
        fail(ErrorKind::dimension, "total_loss: both terms must be scalars");
    if (!objective.all_finite() || !modularity.all_finite())
        fail(ErrorKind::runtime, "total_loss: non-finite loss term");
    return add(objective, scale(modularity, gamma));
}

} // namespace umeml
