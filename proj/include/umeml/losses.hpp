#ifndef UMEML_LOSSES_HPP
#define UMEML_LOSSES_HPP

#include "umeml/tensor.hpp"

namespace umeml {

// Discretized survival outcome for one sample.
struct SurvivalTarget {
    double time = 0.0;  // follow-up in months, > 0
    int censor = 0;     // 1 = censored (event not observed)
    int bin = 0;        // interval index in [0, n_bins)
};

// -log softmax(logits)[label], logits shaped 1 x n_classes.
Tensor cross_entropy(const Tensor& logits, int label);

// Discrete-hazard negative log-likelihood. Hazards h_k = sigmoid(logit_k),
// survival S_k = prod_{j<=k} (1 - h_j) with S_{-1} = 1. Censored samples pay
// -log S_bin; observed events pay -(log S_{bin-1} + log h_bin). Logs are
// clamped at 1e-12. uncensored_weight scales the event term only.
Tensor nll_survival(const Tensor& hazard_logits, const SurvivalTarget& target,
                    double uncensored_weight = 1.0);

// objective + gamma * modularity. gamma = 0 reproduces the objective exactly.
Tensor total_loss(const Tensor& objective, const Tensor& modularity, double gamma);

} // namespace umeml

#endif
