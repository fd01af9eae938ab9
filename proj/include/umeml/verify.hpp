// Self-check suites behind the gradcheck and oracle-check commands: a
// central-difference sweep over every backward rule plus the composed
// per-task losses, and brute-force equivalence checks for the modularity
// loss and the ranking metrics.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace umeml {

struct CheckLine {
    std::string name;
    double worst = 0.0;  // max relative error or max absolute deviation seen
    double bound = 0.0;  // inclusive pass threshold
    bool pass = false;
};

struct CheckReport {
    std::vector<CheckLine> lines;
    bool all_pass = true;

    void add(const std::string& name, double worst, double bound);
    void add_line(const CheckLine& line);
    std::string text() const;  // one row per check plus a verdict line
};

// Checks every differentiable op against central differences (h = 1e-5,
// bound 1e-4), then the fully composed loss at width 8 with 6 patches,
// 3 pathology prototypes, 2 gene groups, and 1 register for all three
// tasks. Probe points are redrawn near relu/clamp kinks. A non-empty
// sabotage op name flips that op's backward rule so the sweep must fail;
// a clean build passes every line.
CheckReport gradient_suite(std::size_t seeds = 5, const std::string& sabotage = "");

// Brute-force cross-checks: the modularity loss against the direct
// same-community Newman sum on random graphs and a hand-sized path graph,
// and the ranking metrics (binary AUC, concordance, time-dependent AUC)
// against all-pairs enumeration.
CheckReport oracle_suite(std::uint64_t seed = 2024);

// Every op name the sabotage parameter accepts, one per backward rule.
std::vector<std::string> backward_rule_names();

}  // namespace umeml
