#ifndef UMEML_ASSIGNMENT_HPP
#define UMEML_ASSIGNMENT_HPP

#include "umeml/tensor.hpp"

namespace umeml {

// Soft assignment strength of each prototype to each instance:
// max(0, cos<prototype_i, instance_j>). Entries land in [0, 1].
Tensor assign(const Tensor& prototypes, const Tensor& instances);

// Dense affinity graph over instances. edge_mass is the 1x1 tensor
// sum_ij A_ij (= 2e); it stays on the tape so gradients can flow through
// the degree normalization.
struct AffinityGraph {
    Tensor a;          // M x M, symmetric, zero diagonal unless self loops kept
    Tensor degree;     // M x 1 row sums of a
    Tensor edge_mass;  // 1 x 1, total mass 2e
};

// A = max(0, cos<instances, instances>). Self-similarity (the diagonal 1s)
// is dropped by default; keep_self_loops restores it.
AffinityGraph affinity_graph(const Tensor& instances, bool keep_self_loops = false);

// Null-model residual W = A - d d^T / 2e. Symmetric with total sum zero.
// Rejects an empty graph (2e == 0); callers treat that case as zero loss.
Tensor modularity_weight(const Tensor& a, const Tensor& degree, const Tensor& edge_mass);

// Everything the modularity loss consumes, kept together so the harness can
// log or inspect intermediate structure.
struct AssignmentBundle {
    Tensor s_p;         // K x M pathology-prototype assignments
    Tensor s_g;         // N x M genomic-prototype assignments
    Tensor affinity;    // M x M
    Tensor degree;      // M x 1
    Tensor weight_w;    // M x M; empty when the graph has no edges
    Tensor edge_mass;   // 1 x 1
    double edge_mass_2e = 0.0;
};

AssignmentBundle make_assignment_bundle(const Tensor& path_prototypes,
                                        const Tensor& gene_prototypes,
                                        const Tensor& instances,
                                        bool keep_self_loops = false);

// L = -(1/2e) * (alpha * Tr(W S_p^T S_p) + beta * Tr(W S_g^T S_g)).
// Exactly 0 for an edgeless graph. Differentiable through both assignment
// matrices and the affinity graph itself.
Tensor modularity_loss(const AssignmentBundle& bundle, double alpha, double beta);

} // namespace umeml

#endif
