#include "umeml/assignment.hpp"

namespace umeml {

Tensor assign(const Tensor& prototypes, const Tensor& instances) {
    if (prototypes.cols != instances.cols)
        fail(ErrorKind::dimension, "assign: width mismatch (" + prototypes.shape_str() +
                                       " vs " + instances.shape_str() + ")");
    return relu(cosine_rows(prototypes, instances));
}

AffinityGraph affinity_graph(const Tensor& instances, bool keep_self_loops) {
    if (instances.rows < 2)
        fail(ErrorKind::invalid_argument,
             "affinity_graph: need at least 2 instances, got " + std::to_string(instances.rows));
    Tensor a = relu(cosine_rows(instances, instances));
    if (!keep_self_loops) a = zero_diag(a);
    AffinityGraph g;
    g.degree = row_sums(a);
    g.edge_mass = sum_all(a);
    g.a = std::move(a);
    return g;
}

Tensor modularity_weight(const Tensor& a, const Tensor& degree, const Tensor& edge_mass) {
    if (a.rows != a.cols || degree.rows != a.rows || degree.cols != 1)
        fail(ErrorKind::dimension, "modularity_weight: inconsistent shapes (a " + a.shape_str() +
                                       ", degree " + degree.shape_str() + ")");
    if (edge_mass.item() <= 0.0)
        fail(ErrorKind::runtime, "modularity_weight: graph has no edge mass");
    Tensor null_model = mul_scalar(matmul(degree, transpose(degree)), recip(edge_mass));
    return sub(a, null_model);
}

AssignmentBundle make_assignment_bundle(const Tensor& path_prototypes,
                                        const Tensor& gene_prototypes,
                                        const Tensor& instances, bool keep_self_loops) {
    AssignmentBundle b;
    b.s_p = assign(path_prototypes, instances);
    b.s_g = assign(gene_prototypes, instances);
    AffinityGraph g = affinity_graph(instances, keep_self_loops);
    b.affinity = std::move(g.a);
    b.degree = std::move(g.degree);
    b.edge_mass = std::move(g.edge_mass);
    b.edge_mass_2e = b.edge_mass.item();
    if (b.edge_mass_2e > 0.0)
        b.weight_w = modularity_weight(b.affinity, b.degree, b.edge_mass);
    return b;
}

Tensor modularity_loss(const AssignmentBundle& bundle, double alpha, double beta) {
    if (bundle.edge_mass_2e <= 0.0) return Tensor(1, 1, {0.0});

    // Tr(W S^T S) = sum_ij W_ij (S^T S)_ij because both factors are symmetric
    Tensor tr_p = sum_all(mul(bundle.weight_w, matmul(transpose(bundle.s_p), bundle.s_p)));
    Tensor tr_g = sum_all(mul(bundle.weight_w, matmul(transpose(bundle.s_g), bundle.s_g)));
    Tensor combined = add(scale(tr_p, alpha), scale(tr_g, beta));
    return scale(mul_scalar(combined, recip(bundle.edge_mass)), -1.0);
}

} // namespace umeml
