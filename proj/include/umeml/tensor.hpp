#ifndef UMEML_TENSOR_HPP
#define UMEML_TENSOR_HPP

#include <cstddef>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "umeml/error.hpp"

namespace umeml {

class Tape;

// Dense 2-D matrix of 64-bit reals, row-major. A tensor is either a plain
// constant (node < 0) or bound to a tape node, in which case every op that
// consumes it records a backward rule on that tape.
struct Tensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;
    Tape* tape = nullptr;
    int node = -1;

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}
    Tensor(std::size_t r, std::size_t c, std::initializer_list<double> values);

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    std::size_t size() const { return rows * cols; }
    bool tracked() const { return node >= 0; }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
    bool all_finite() const;
    std::string shape_str() const;

    // value of a 1x1 tensor
    double item() const;
};

Tensor eye(std::size_t n);
Tensor uniform_tensor(std::size_t r, std::size_t c, double lo, double hi, std::mt19937_64& rng);
Tensor normal_tensor(std::size_t r, std::size_t c, double mean, double stddev, std::mt19937_64& rng);

double max_abs_diff(const Tensor& a, const Tensor& b);

// clamp floors shared by ops and documented in their contracts
inline constexpr double kNormClampEps = 1e-12;   // cosine row norms
inline constexpr double kLogClampEps = 1e-12;    // log argument
inline constexpr double kLayerNormEps = 1e-8;    // variance stabilizer

// Reverse-mode tape. One tape per forward pass; record ops, call backward()
// on a scalar result, read gradients, discard. Not thread-safe; confine a
// tape and its tensors to one training run.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, const std::vector<double>&)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Register a watched leaf (parameter or probed input). Gradients are
    // readable for leaves and any intermediate node after backward().
    Tensor leaf(const Tensor& value);

    // Accumulate gradients of a scalar (1x1) node into every ancestor.
    // Nodes unreachable from the loss keep zero gradients.
    void backward(const Tensor& loss);

    // Gradient of the last backward() pass w.r.t. a tensor on this tape.
    Tensor grad(const Tensor& t) const;

    std::size_t node_count() const { return nodes_.size(); }

    // Smallest distance to a nondifferentiable point seen while recording
    // (relu inputs, cosine row norms, log clamp). Gradient-check fixtures
    // consult this to keep probe points away from kinks.
    double min_kink_gap() const { return min_kink_gap_; }

    // Test hook: negate every gradient contribution produced by the named
    // op's backward rule. Lets the finite-difference checker prove it can
    // catch a broken rule.
    void corrupt_backward_for_test(const std::string& op_name) { corrupt_op_ = op_name; }

    // --- used by op implementations ---
    int record(const char* op, std::size_t rows, std::size_t cols, BackwardFn fn);
    void accum(int node_id, const std::vector<double>& g);
    void note_kink_gap(double gap);

private:
    struct Node {
        const char* op;
        std::size_t rows, cols;
        BackwardFn backward;
        std::vector<double> grad;
        bool touched = false;
    };
    std::vector<Node> nodes_;
    double min_kink_gap_ = 1e300;
    std::string corrupt_op_;
    double sign_ = 1.0;
};

// ---- differentiable ops ----
// Every op accepts tracked or constant operands; mixing is fine as long as
// all tracked operands share one tape.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);          // elementwise
Tensor scale(const Tensor& a, double s);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor log_clamped(const Tensor& a);                   // ln(max(x, 1e-12))
Tensor softmax_rows(const Tensor& a);
Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias);
Tensor cosine_rows(const Tensor& a, const Tensor& b);  // (i,j) = cos(a_i, b_j)
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice(const Tensor& a, std::size_t r0, std::size_t nrows, std::size_t c0, std::size_t ncols);
Tensor reshape(const Tensor& a, std::size_t r, std::size_t c);
Tensor sum_all(const Tensor& a);                       // -> 1x1
Tensor row_sums(const Tensor& a);                      // -> m x 1
Tensor mean_rows(const Tensor& a);                     // column means -> 1 x n
Tensor mul_scalar(const Tensor& a, const Tensor& s);   // s is 1x1
Tensor recip(const Tensor& a);                         // elementwise 1/x
Tensor zero_diag(const Tensor& a);                     // square only

// ---- finite-difference gradient checking ----

struct GradReport {
    std::string op_name;
    double max_rel_err = 0.0;
    bool pass = false;
};

// Scalar-valued function of a parameter list. grad_check calls it twice:
// once with tape-bound copies (analytic pass) and many times with plain
// constants (central differences).
using ScalarFn = std::function<Tensor(std::vector<Tensor>&)>;

// Compares analytic gradients against central differences with step h.
// Relative error per coordinate is |analytic - fd| / max(1, |fd|); the
// report carries the max over all coordinates of all parameters.
// Requires h in [1e-7, 1e-3] and f twice differentiable at the point;
// keep inputs at least ~10h away from relu kinks (see Tape::min_kink_gap).
// A non-empty corrupt_op sabotages that op's backward rule on the analytic
// pass (see Tape::corrupt_backward_for_test); such a run must not pass.
GradReport grad_check(const std::string& op_name, const ScalarFn& f,
                      const std::vector<Tensor>& params,
                      double h = 1e-5, double tol = 1e-5,
                      const std::string& corrupt_op = "");

// Runs f once on a throwaway tape and reports the forward pass's smallest
// kink distance. Fixtures use it to reject probe points too close to a kink.
double forward_kink_gap(const ScalarFn& f, const std::vector<Tensor>& params);

} // namespace umeml

#endif
