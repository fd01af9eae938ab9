// Dense 2-D tensor ops with reverse-mode autodiff and a finite-difference
// gradient checker.

#include "umeml/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace umeml {

namespace {

// c += a(m x k) * b(k x n)
void mm_nn(const double* a, const double* b, double* c,
           std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            const double av = arow[l];
            const double* brow = b + l * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// c += a(m x n) * b(k x n)^T  -> m x k
void mm_nt(const double* a, const double* b, double* c,
           std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * n;
        double* crow = c + i * k;
        for (std::size_t j = 0; j < k; ++j) {
            const double* brow = b + j * n;
            double acc = 0.0;
            for (std::size_t l = 0; l < n; ++l) acc += arow[l] * brow[l];
            crow[j] += acc;
        }
    }
}

// c += a(m x k)^T * b(m x n)  -> k x n
void mm_tn(const double* a, const double* b, double* c,
           std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t l = 0; l < m; ++l) {
        const double* arow = a + l * k;
        const double* brow = b + l * n;
        for (std::size_t i = 0; i < k; ++i) {
            const double av = arow[i];
            double* crow = c + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

Tape* tape_of(std::initializer_list<const Tensor*> ts) {
    Tape* tape = nullptr;
    for (const Tensor* t : ts) {
        if (!t->tracked()) continue;
        if (tape && t->tape != tape)
            fail(ErrorKind::invalid_argument, "operands bound to different tapes");
        tape = t->tape;
    }
    return tape;
}

Tensor make_result(Tape* tape, std::size_t rows, std::size_t cols,
                   std::vector<double> data, const char* op, Tape::BackwardFn fn) {
    Tensor out;
    out.rows = rows;
    out.cols = cols;
    out.data = std::move(data);
    if (tape) {
        out.tape = tape;
        out.node = tape->record(op, rows, cols, std::move(fn));
    }
    return out;
}

void require(bool cond, ErrorKind kind, const std::string& msg) {
    if (!cond) fail(kind, msg);
}

} // namespace

Tensor::Tensor(std::size_t r, std::size_t c, std::initializer_list<double> values)
    : rows(r), cols(c), data(values) {
    require(data.size() == r * c, ErrorKind::dimension,
            "initializer length " + std::to_string(data.size()) + " != " +
                std::to_string(r) + "x" + std::to_string(c));
}

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

double Tensor::item() const {
    require(rows == 1 && cols == 1, ErrorKind::dimension,
            "item() on non-scalar tensor " + shape_str());
    return data[0];
}

Tensor eye(std::size_t n) {
    Tensor t(n, n);
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

Tensor uniform_tensor(std::size_t r, std::size_t c, double lo, double hi, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Tensor t(r, c);
    for (double& v : t.data) v = dist(rng);
    return t;
}

Tensor normal_tensor(std::size_t r, std::size_t c, double mean, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(mean, stddev);
    Tensor t(r, c);
    for (double& v : t.data) v = dist(rng);
    return t;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    require(a.same_shape(b), ErrorKind::dimension,
            "max_abs_diff shapes " + a.shape_str() + " vs " + b.shape_str());
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

// ---- Tape ----

Tensor Tape::leaf(const Tensor& value) {
    Tensor out = value;
    out.tape = this;
    out.node = record("leaf", value.rows, value.cols, nullptr);
    return out;
}

int Tape::record(const char* op, std::size_t rows, std::size_t cols, BackwardFn fn) {
    nodes_.push_back(Node{op, rows, cols, std::move(fn), {}, false});
    return static_cast<int>(nodes_.size()) - 1;
}

void Tape::accum(int node_id, const std::vector<double>& g) {
    Node& n = nodes_[static_cast<std::size_t>(node_id)];
    if (n.grad.empty()) n.grad.assign(n.rows * n.cols, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) n.grad[i] += sign_ * g[i];
    n.touched = true;
}

void Tape::note_kink_gap(double gap) {
    if (gap < min_kink_gap_) min_kink_gap_ = gap;
}

void Tape::backward(const Tensor& loss) {
    require(loss.tracked() && loss.tape == this, ErrorKind::invalid_argument,
            "backward: loss is not on this tape");
    require(loss.rows == 1 && loss.cols == 1, ErrorKind::invalid_argument,
            "backward: loss must be scalar, got " + loss.shape_str());
    for (Node& n : nodes_) {
        n.grad.clear();
        n.touched = false;
    }
    Node& root = nodes_[static_cast<std::size_t>(loss.node)];
    root.grad.assign(1, 1.0);
    root.touched = true;
    for (int i = loss.node; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (!n.touched || !n.backward) continue;
        sign_ = (!corrupt_op_.empty() && corrupt_op_ == n.op) ? -1.0 : 1.0;
        // detach the buffer while the rule runs (accum only writes ancestors,
        // which are distinct, earlier nodes), then restore it for grad()
        std::vector<double> g = std::move(n.grad);
        n.backward(*this, g);
        nodes_[static_cast<std::size_t>(i)].grad = std::move(g);
        sign_ = 1.0;
    }
}

Tensor Tape::grad(const Tensor& t) const {
    require(t.tracked() && t.tape == this, ErrorKind::invalid_argument,
            "grad: tensor is not on this tape");
    const Node& n = nodes_[static_cast<std::size_t>(t.node)];
    Tensor g(n.rows, n.cols);
    if (!n.grad.empty()) g.data = n.grad;
    return g;
}

// ---- ops ----

Tensor matmul(const Tensor& a, const Tensor& b) {
    require(a.cols == b.rows, ErrorKind::dimension,
            "matmul: inner dimensions disagree (" + a.shape_str() + " vs " + b.shape_str() + ")");
    const std::size_t m = a.rows, k = a.cols, n = b.cols;
    std::vector<double> out(m * n, 0.0);
    mm_nn(a.data.data(), b.data.data(), out.data(), m, k, n);

    Tape* tape = tape_of({&a, &b});
    if (!tape) return make_result(nullptr, m, n, std::move(out), "matmul", nullptr);
    const int pa = a.node, pb = b.node;
    const std::vector<double> av = a.data, bv = b.data;
    return make_result(tape, m, n, std::move(out), "matmul",
                       [=](Tape& t, const std::vector<double>& u) {
                           if (pa >= 0) {
                               std::vector<double> da(m * k, 0.0);
                               mm_nt(u.data(), bv.data(), da.data(), m, n, k);
                               t.accum(pa, da);
                           }
                           if (pb >= 0) {
                               std::vector<double> db(k * n, 0.0);
                               mm_tn(av.data(), u.data(), db.data(), m, k, n);
                               t.accum(pb, db);
                           }
                       });
}

Tensor transpose(const Tensor& a) {
    const std::size_t m = a.rows, n = a.cols;
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a.data[i * n + j];

    Tape* tape = tape_of({&a});
    if (!tape) return make_result(nullptr, n, m, std::move(out), "transpose", nullptr);
    const int pa = a.node;
    return make_result(tape, n, m, std::move(out), "transpose",
                       [=](Tape& t, const std::vector<double>& u) {
                           std::vector<double> da(m * n);
                           for (std::size_t i = 0; i < n; ++i)
                               for (std::size_t j = 0; j < m; ++j) da[j * n + i] = u[i * m + j];
                           t.accum(pa, da);
                       });
}

Tensor add(const Tensor& a, const Tensor& b) {
    require(a.same_shape(b), ErrorKind::dimension,
            "add: shape mismatch (" + a.shape_str() + " vs " + b.shape_str() + ")");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data[i] + b.data[i];

    Tape* tape = tape_of({&a, &b});
    if (!tape) return make_result(nullptr, a.rows, a.cols, std::move(out), "add", nullptr);
    const int pa = a.node, pb = b.node;
    return make_result(tape, a.rows, a.cols, std::move(out), "add",
                       [=](Tape& t, const std::vector<double>& u) {
                           if (pa >= 0) t.accum(pa, u);
                           if (pb >= 0) t.accum(pb, u);
                       });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require(a.same_shape(b), ErrorKind::dimension,
            "sub: shape mismatch (" + a.shape_str() + " vs " + b.shape_str() + ")");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data[i] - b.data[i];

    Tape* tape = tape_of({&a, &b});
    if (!tape) return make_result(nullptr, a.rows, a.cols, std::move(out), "sub", nullptr);
    const int pa = a.node, pb = b.node;
    return make_result(tape, a.rows, a.cols, std::move(out), "sub",
                       [=](Tape& t, const std::vector<double>& u) {
                           if (pa >= 0) t.accum(pa, u);
                           if (pb >= 0) {
                               std::vector<double> db(u.size());
                               for (std::size_t i = 0; i < u.size(); ++i) db[i] = -u[i];
                               t.accum(pb, db);
                           }
                       });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require(a.same_shape(b), ErrorKind::dimension,
            "mul: shape mismatch (" + a.shape_str() + " vs " + b.shape_str() + ")");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data[i] * b.data[i];

    Tape* tape = tape_of({&a, &b});
    if (!tape) return make_result(nullptr, a.rows, a.cols, std::move(out), "mul", nullptr);
    const int pa = a.node, pb = b.node;
    const std::vector<double> av = a.data, bv = b.data;
    return make_result(tape, a.rows, a.cols, std::move(out), "mul",
                       [=](Tape& t, const std::vector<double>& u) {
                           std::vector<double> d(u.size());
                           if (pa >= 0) {
                               for (std::size_t i = 0; i < u.size(); ++i) d[i] = u[i] * bv[i];
                               t.accum(pa, d);
                           }
                           if (pb >= 0) {
                               for (std::size_t i = 0; i < u.size(); ++i) d[i] = u[i] * av[i];
                               t.accum(pb, d);
                           }
                       });
}

Tensor scale(const Tensor& a, double s) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data[i] * s;

    Tape* tape = tape_of({&a});
    if (!tape) return make_result(nullptr, a.rows, a.cols, std::move(out), "scale", nullptr);
    const int pa = a.node;
    return make_result(tape, a.rows, a.cols, std::move(out), "scale",
                       [=](Tape& t, const std::vector<double>& u) {
                           std::vector<double> da(u.size());
                           for (std::size_t i = 0; i < u.size(); ++i) da[i] = u[i] * s;
                           t.accum(pa, da);
                       });
}

Tensor relu(const Tensor& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data[i] > 0.0 ? a.data[i] : 0.0;

    Tape* tape = tape_of({&a});
    if (tape) {
        for (double v : a.data) tape->note_kink_gap(std::fabs(v));
    }
    if (!tape) return make_result(nullptr, a.rows, a.cols, std::move(out), "relu", nullptr);
    const int pa = a.node;
    const std::vector<double> av = a.data;
    return make_result(tape, a.rows, a.cols, std::move(out), "relu",
                       [=](Tape& t, const std::vector<double>& u) {
                           // subgradient at 0 is 0
                           std::vector<double> da(u.size());
                           for (std::size_t i = 0; i < u.size(); ++i)
                               da[i] = av[i] > 0.0 ? u[i] : 0.0;
                           t.accum(pa, da);
                       });
}

Tensor sigmoid(const Tensor& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = a.data[i];
        out[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                          : std::exp(x) / (1.0 + std::exp(x));
    }

    Tape* tape = tape_of({&a});
    if (!tape) return make_result(nullptr, a.rows, a.cols, std::move(out), "sigmoid", nullptr);
    const int pa = a.node;
    const std::vector<double> y = out;
    return make_result(tape, a.rows, a.cols, std::move(out), "sigmoid",
                       [=](Tape& t, const std::vector<double>& u) {
                           std::vector<double> da(u.size());
                           for (std::size_t i = 0; i < u.size(); ++i)
                               da[i] = u[i] * y[i] * (1.0 - y[i]);
                           t.accum(pa, da);
                       });
}

Tensor log_clamped(const Tensor& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = std::log(std::max(a.data[i], kLogClampEps));

    Tape* tape = tape_of({&a});
    if (tape) {
        for (double v : a.data) tape->note_kink_gap(std::fabs(v - kLogClampEps));
    }
    if (!tape) return make_result(nullptr, a.rows, a.cols, std::move(out), "log", nullptr);
    const int pa = a.node;
    const std::vector<double> av = a.data;
    return make_result(tape, a.rows, a.cols, std::move(out), "log",
                       [=](Tape& t, const std::vector<double>& u) {
                           // clamped entries are treated as constant
                           std::vector<double> da(u.size());
                           for (std::size_t i = 0; i < u.size(); ++i)
                               da[i] = av[i] > kLogClampEps ? u[i] / av[i] : 0.0;
                           t.accum(pa, da);
                       });
}

Tensor softmax_rows(const Tensor& a) {
    const std::size_t m = a.rows, n = a.cols;
    require(n >= 1, ErrorKind::dimension, "softmax_rows: empty rows");
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        const double* x = a.data.data() + i * n;
        double* y = out.data() + i * n;
        double mx = x[0];
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, x[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            y[j] = std::exp(x[j] - mx);
            z += y[j];
        }
        for (std::size_t j = 0; j < n; ++j) y[j] /= z;
    }

    Tape* tape = tape_of({&a});
    if (!tape) return make_result(nullptr, m, n, std::move(out), "softmax_rows", nullptr);
    const int pa = a.node;
    const std::vector<double> y = out;
    return make_result(tape, m, n, std::move(out), "softmax_rows",
                       [=](Tape& t, const std::vector<double>& u) {
                           std::vector<double> da(m * n);
                           for (std::size_t i = 0; i < m; ++i) {
                               const double* yr = y.data() + i * n;
                               const double* ur = u.data() + i * n;
                               double dot = 0.0;
                               for (std::size_t j = 0; j < n; ++j) dot += ur[j] * yr[j];
                               double* dr = da.data() + i * n;
                               for (std::size_t j = 0; j < n; ++j)
                                   dr[j] = yr[j] * (ur[j] - dot);
                           }
                           t.accum(pa, da);
                       });
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias) {
    const std::size_t m = x.rows, n = x.cols;
    require(gain.rows == 1 && gain.cols == n, ErrorKind::dimension,
            "layer_norm_rows: gain must be 1x" + std::to_string(n) + ", got " + gain.shape_str());
    require(bias.rows == 1 && bias.cols == n, ErrorKind::dimension,
            "layer_norm_rows: bias must be 1x" + std::to_string(n) + ", got " + bias.shape_str());

    std::vector<double> out(m * n);
    std::vector<double> xhat(m * n);
    std::vector<double> inv_std(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double* xr = x.data.data() + i * n;
        double mu = 0.0;
        for (std::size_t j = 0; j < n; ++j) mu += xr[j];
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) var += (xr[j] - mu) * (xr[j] - mu);
        var /= static_cast<double>(n);
        const double s = 1.0 / std::sqrt(var + kLayerNormEps);
        inv_std[i] = s;
        for (std::size_t j = 0; j < n; ++j) {
            xhat[i * n + j] = (xr[j] - mu) * s;
            out[i * n + j] = xhat[i * n + j] * gain.data[j] + bias.data[j];
        }
    }

    Tape* tape = tape_of({&x, &gain, &bias});
    if (!tape) return make_result(nullptr, m, n, std::move(out), "layer_norm_rows", nullptr);
    const int px = x.node, pg = gain.node, pb = bias.node;
    const std::vector<double> gv = gain.data;
    return make_result(
        tape, m, n, std::move(out), "layer_norm_rows",
        [=](Tape& t, const std::vector<double>& u) {
            if (px >= 0) {
                std::vector<double> dx(m * n);
                for (std::size_t i = 0; i < m; ++i) {
                    const double* ur = u.data() + i * n;
                    const double* hr = xhat.data() + i * n;
                    double sum_w = 0.0, sum_wh = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        const double w = ur[j] * gv[j];
                        sum_w += w;
                        sum_wh += w * hr[j];
                    }
                    const double inv_n = 1.0 / static_cast<double>(n);
                    for (std::size_t j = 0; j < n; ++j) {
                        const double w = ur[j] * gv[j];
                        dx[i * n + j] =
                            inv_std[i] * (w - sum_w * inv_n - hr[j] * sum_wh * inv_n);
                    }
                }
                t.accum(px, dx);
            }
            if (pg >= 0) {
                std::vector<double> dg(n, 0.0);
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j)
                        dg[j] += u[i * n + j] * xhat[i * n + j];
                t.accum(pg, dg);
            }
            if (pb >= 0) {
                std::vector<double> db(n, 0.0);
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) db[j] += u[i * n + j];
                t.accum(pb, db);
            }
        });
}

Tensor cosine_rows(const Tensor& a, const Tensor& b) {
    require(a.cols == b.cols, ErrorKind::dimension,
            "cosine_rows: width mismatch (" + a.shape_str() + " vs " + b.shape_str() + ")");
    const std::size_t m = a.rows, n = b.rows, d = a.cols;

    // row norms, clamped below so zero rows degrade instead of dividing by zero
    std::vector<double> na(m), nb(n);
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += a.at(i, c) * a.at(i, c);
        na[i] = std::max(std::sqrt(s), kNormClampEps);
    }
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += b.at(j, c) * b.at(j, c);
        nb[j] = std::max(std::sqrt(s), kNormClampEps);
    }

    std::vector<double> out(m * n, 0.0);
    mm_nt(a.data.data(), b.data.data(), out.data(), m, d, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= na[i] * nb[j];

    Tape* tape = tape_of({&a, &b});
    if (tape) {
        for (double v : na) tape->note_kink_gap(v);
        for (double v : nb) tape->note_kink_gap(v);
    }
    if (!tape) return make_result(nullptr, m, n, std::move(out), "cosine_rows", nullptr);
    const int pa = a.node, pb = b.node;
    const std::vector<double> av = a.data, bv = b.data;
    const std::vector<double> cv = out;
    return make_result(
        tape, m, n, std::move(out), "cosine_rows",
        [=](Tape& t, const std::vector<double>& u) {
            // d cos(u,v)/du = v/(|u||v|) - cos * u/|u|^2; clamped norms are constants
            if (pa >= 0) {
                std::vector<double> da(m * d, 0.0);
                for (std::size_t i = 0; i < m; ++i) {
                    const bool clamped = na[i] <= kNormClampEps;
                    for (std::size_t j = 0; j < n; ++j) {
                        const double g = u[i * n + j];
                        if (g == 0.0) continue;
                        const double inv = 1.0 / (na[i] * nb[j]);
                        const double self = clamped ? 0.0 : cv[i * n + j] / (na[i] * na[i]);
                        for (std::size_t c = 0; c < d; ++c)
                            da[i * d + c] += g * (bv[j * d + c] * inv - self * av[i * d + c]);
                    }
                }
                t.accum(pa, da);
            }
            if (pb >= 0) {
                std::vector<double> db(n * d, 0.0);
                for (std::size_t j = 0; j < n; ++j) {
                    const bool clamped = nb[j] <= kNormClampEps;
                    for (std::size_t i = 0; i < m; ++i) {
                        const double g = u[i * n + j];
                        if (g == 0.0) continue;
                        const double inv = 1.0 / (na[i] * nb[j]);
                        const double self = clamped ? 0.0 : cv[i * n + j] / (nb[j] * nb[j]);
                        for (std::size_t c = 0; c < d; ++c)
                            db[j * d + c] += g * (av[i * d + c] * inv - self * bv[j * d + c]);
                    }
                }
                t.accum(pb, db);
            }
        });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    require(!parts.empty(), ErrorKind::invalid_argument, "concat_rows: empty list");
    const std::size_t n = parts[0].cols;
    std::size_t m = 0;
    for (const Tensor& p : parts) {
        require(p.cols == n, ErrorKind::dimension,
                "concat_rows: width mismatch (" + p.shape_str() + " vs cols=" + std::to_string(n) + ")");
        m += p.rows;
    }
    std::vector<double> out;
    out.reserve(m * n);
    for (const Tensor& p : parts) out.insert(out.end(), p.data.begin(), p.data.end());

    Tape* tape = nullptr;
    for (const Tensor& p : parts) {
        if (!p.tracked()) continue;
        if (tape && p.tape != tape)
            fail(ErrorKind::invalid_argument, "operands bound to different tapes");
        tape = p.tape;
    }
    if (!tape) return make_result(nullptr, m, n, std::move(out), "concat_rows", nullptr);
    std::vector<int> ids;
    std::vector<std::size_t> row_counts;
    for (const Tensor& p : parts) {
        ids.push_back(p.node);
        row_counts.push_back(p.rows);
    }
    return make_result(tape, m, n, std::move(out), "concat_rows",
                       [=](Tape& t, const std::vector<double>& u) {
                           std::size_t r0 = 0;
                           for (std::size_t k = 0; k < ids.size(); ++k) {
                               if (ids[k] >= 0) {
                                   std::vector<double> d(u.begin() + static_cast<long>(r0 * n),
                                                         u.begin() + static_cast<long>((r0 + row_counts[k]) * n));
                                   t.accum(ids[k], d);
                               }
                               r0 += row_counts[k];
                           }
                       });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    require(!parts.empty(), ErrorKind::invalid_argument, "concat_cols: empty list");
    const std::size_t m = parts[0].rows;
    std::size_t n = 0;
    for (const Tensor& p : parts) {
        require(p.rows == m, ErrorKind::dimension,
                "concat_cols: height mismatch (" + p.shape_str() + " vs rows=" + std::to_string(m) + ")");
        n += p.cols;
    }
    std::vector<double> out(m * n);
    std::size_t c0 = 0;
    for (const Tensor& p : parts) {
        for (std::size_t i = 0; i < m; ++i)
            std::copy(p.data.begin() + static_cast<long>(i * p.cols),
                      p.data.begin() + static_cast<long>((i + 1) * p.cols),
                      out.begin() + static_cast<long>(i * n + c0));
        c0 += p.cols;
    }

    Tape* tape = nullptr;
    for (const Tensor& p : parts) {
        if (!p.tracked()) continue;
        if (tape && p.tape != tape)
            fail(ErrorKind::invalid_argument, "operands bound to different tapes");
        tape = p.tape;
    }
    if (!tape) return make_result(nullptr, m, n, std::move(out), "concat_cols", nullptr);
    std::vector<int> ids;
    std::vector<std::size_t> col_counts;
    for (const Tensor& p : parts) {
        ids.push_back(p.node);
        col_counts.push_back(p.cols);
    }
    return make_result(tape, m, n, std::move(out), "concat_cols",
                       [=](Tape& t, const std::vector<double>& u) {
                           std::size_t off = 0;
                           for (std::size_t k = 0; k < ids.size(); ++k) {
                               const std::size_t w = col_counts[k];
                               if (ids[k] >= 0) {
                                   std::vector<double> d(m * w);
                                   for (std::size_t i = 0; i < m; ++i)
                                       std::copy(u.begin() + static_cast<long>(i * n + off),
                                                 u.begin() + static_cast<long>(i * n + off + w),
                                                 d.begin() + static_cast<long>(i * w));
                                   t.accum(ids[k], d);
                               }
                               off += w;
                           }
                       });
}

Tensor slice(const Tensor& a, std::size_t r0, std::size_t nrows, std::size_t c0, std::size_t ncols) {
    require(r0 + nrows <= a.rows && c0 + ncols <= a.cols, ErrorKind::dimension,
            "slice: block out of range for " + a.shape_str());
    require(nrows >= 1 && ncols >= 1, ErrorKind::invalid_argument, "slice: empty block");
    std::vector<double> out(nrows * ncols);
    for (std::size_t i = 0; i < nrows; ++i)
        for (std::size_t j = 0; j < ncols; ++j)
            out[i * ncols + j] = a.at(r0 + i, c0 + j);

    Tape* tape = tape_of({&a});
    if (!tape) return make_result(nullptr, nrows, ncols, std::move(out), "slice", nullptr);
    const int pa = a.node;
    const std::size_t ar = a.rows, ac = a.cols;
    return make_result(tape, nrows, ncols, std::move(out), "slice",
                       [=](Tape& t, const std::vector<double>& u) {
                           std::vector<double> da(ar * ac, 0.0);
                           for (std::size_t i = 0; i < nrows; ++i)
                               for (std::size_t j = 0; j < ncols; ++j)
                                   da[(r0 + i) * ac + (c0 + j)] = u[i * ncols + j];
                           t.accum(pa, da);
                       });
}

Tensor reshape(const Tensor& a, std::size_t r, std::size_t c) {
    require(r * c == a.size(), ErrorKind::dimension,
            "reshape: " + a.shape_str() + " has " + std::to_string(a.size()) +
                " entries, want " + std::to_string(r) + "x" + std::to_string(c));
    std::vector<double> out = a.data;
    Tape* tape = tape_of({&a});
    if (!tape) return make_result(nullptr, r, c, std::move(out), "reshape", nullptr);
    const int pa = a.node;
    return make_result(tape, r, c, std::move(out), "reshape",
                       [=](Tape& t, const std::vector<double>& u) { t.accum(pa, u); });
}

Tensor sum_all(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data) s += v;
    Tape* tape = tape_of({&a});
    if (!tape) return make_result(nullptr, 1, 1, {s}, "sum", nullptr);
    const int pa = a.node;
    const std::size_t sz = a.size();
    return make_result(tape, 1, 1, {s}, "sum",
                       [=](Tape& t, const std::vector<double>& u) {
                           t.accum(pa, std::vector<double>(sz, u[0]));
                       });
}

Tensor row_sums(const Tensor& a) {
    const std::size_t m = a.rows, n = a.cols;
    std::vector<double> out(m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i] += a.at(i, j);

    Tape* tape = tape_of({&a});
    if (!tape) return make_result(nullptr, m, 1, std::move(out), "row_sums", nullptr);
    const int pa = a.node;
    return make_result(tape, m, 1, std::move(out), "row_sums",
                       [=](Tape& t, const std::vector<double>& u) {
                           std::vector<double> da(m * n);
                           for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t j = 0; j < n; ++j) da[i * n + j] = u[i];
                           t.accum(pa, da);
                       });
}

Tensor mean_rows(const Tensor& a) {
    const std::size_t m = a.rows, n = a.cols;
    require(m >= 1, ErrorKind::dimension, "mean_rows: no rows");
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j] += a.at(i, j);
    for (double& v : out) v /= static_cast<double>(m);

    Tape* tape = tape_of({&a});
    if (!tape) return make_result(nullptr, 1, n, std::move(out), "mean_rows", nullptr);
    const int pa = a.node;
    return make_result(tape, 1, n, std::move(out), "mean_rows",
                       [=](Tape& t, const std::vector<double>& u) {
                           const double inv = 1.0 / static_cast<double>(m);
                           std::vector<double> da(m * n);
                           for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t j = 0; j < n; ++j) da[i * n + j] = u[j] * inv;
                           t.accum(pa, da);
                       });
}

Tensor mul_scalar(const Tensor& a, const Tensor& s) {
    require(s.rows == 1 && s.cols == 1, ErrorKind::dimension,
            "mul_scalar: scalar operand must be 1x1, got " + s.shape_str());
    const double sv = s.data[0];
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data[i] * sv;

    Tape* tape = tape_of({&a, &s});
    if (!tape) return make_result(nullptr, a.rows, a.cols, std::move(out), "mul_scalar", nullptr);
    const int pa = a.node, ps = s.node;
    const std::vector<double> av = a.data;
    return make_result(tape, a.rows, a.cols, std::move(out), "mul_scalar",
                       [=](Tape& t, const std::vector<double>& u) {
                           if (pa >= 0) {
                               std::vector<double> da(u.size());
                               for (std::size_t i = 0; i < u.size(); ++i) da[i] = u[i] * sv;
                               t.accum(pa, da);
                           }
                           if (ps >= 0) {
                               double acc = 0.0;
                               for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * av[i];
                               t.accum(ps, {acc});
                           }
                       });
}

Tensor recip(const Tensor& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / a.data[i];

    Tape* tape = tape_of({&a});
    if (!tape) return make_result(nullptr, a.rows, a.cols, std::move(out), "recip", nullptr);
    const int pa = a.node;
    const std::vector<double> av = a.data;
    return make_result(tape, a.rows, a.cols, std::move(out), "recip",
                       [=](Tape& t, const std::vector<double>& u) {
                           std::vector<double> da(u.size());
                           for (std::size_t i = 0; i < u.size(); ++i)
                               da[i] = -u[i] / (av[i] * av[i]);
                           t.accum(pa, da);
                       });
}

Tensor zero_diag(const Tensor& a) {
    require(a.rows == a.cols, ErrorKind::dimension,
            "zero_diag: matrix must be square, got " + a.shape_str());
    const std::size_t n = a.rows;
    std::vector<double> out = a.data;
    for (std::size_t i = 0; i < n; ++i) out[i * n + i] = 0.0;

    Tape* tape = tape_of({&a});
    if (!tape) return make_result(nullptr, n, n, std::move(out), "zero_diag", nullptr);
    const int pa = a.node;
    return make_result(tape, n, n, std::move(out), "zero_diag",
                       [=](Tape& t, const std::vector<double>& u) {
                           std::vector<double> da = u;
                           for (std::size_t i = 0; i < n; ++i) da[i * n + i] = 0.0;
                           t.accum(pa, da);
                       });
}

// ---- gradient checking ----

GradReport grad_check(const std::string& op_name, const ScalarFn& f,
                      const std::vector<Tensor>& params, double h, double tol,
                      const std::string& corrupt_op) {
    require(h >= 1e-7 && h <= 1e-3, ErrorKind::invalid_argument,
            "grad_check: h must be in [1e-7, 1e-3]");

    // analytic pass
    Tape tape;
    if (!corrupt_op.empty()) tape.corrupt_backward_for_test(corrupt_op);
    std::vector<Tensor> bound;
    bound.reserve(params.size());
    for (const Tensor& p : params) bound.push_back(tape.leaf(p));
    Tensor out = f(bound);
    require(out.rows == 1 && out.cols == 1, ErrorKind::invalid_argument,
            "grad_check: f must return a scalar, got " + out.shape_str());
    tape.backward(out);
    std::vector<Tensor> analytic;
    for (const Tensor& b : bound) analytic.push_back(tape.grad(b));

    // central differences
    double max_rel_err = 0.0;
    std::vector<Tensor> probe = params;
    for (Tensor& p : probe) {
        p.tape = nullptr;
        p.node = -1;
    }
    for (std::size_t pi = 0; pi < probe.size(); ++pi) {
        for (std::size_t c = 0; c < probe[pi].size(); ++c) {
            const double orig = probe[pi].data[c];
            probe[pi].data[c] = orig + h;
            const double fp = f(probe).item();
            probe[pi].data[c] = orig - h;
            const double fm = f(probe).item();
            probe[pi].data[c] = orig;
            const double fd = (fp - fm) / (2.0 * h);
            const double rel = std::fabs(analytic[pi].data[c] - fd) / std::max(1.0, std::fabs(fd));
            max_rel_err = std::max(max_rel_err, rel);
        }
    }

    GradReport report;
    report.op_name = op_name;
    report.max_rel_err = max_rel_err;
    report.pass = max_rel_err < tol;
    return report;
}

double forward_kink_gap(const ScalarFn& f, const std::vector<Tensor>& params) {
    Tape tape;
    std::vector<Tensor> bound;
    for (const Tensor& p : params) bound.push_back(tape.leaf(p));
    (void)f(bound);
    return tape.min_kink_gap();
}

} // namespace umeml
