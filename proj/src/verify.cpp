#include "umeml/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <utility>

#include "umeml/assignment.hpp"
#include "umeml/losses.hpp"
#include "umeml/metrics.hpp"
#include "umeml/model.hpp"
#include "umeml/oracles.hpp"
#include "umeml/tensor.hpp"

namespace umeml {

namespace {

Tensor weights_like(std::size_t r, std::size_t c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return uniform_tensor(r, c, -1.0, 1.0, rng);
}

// weighted scalar reduction so every output coordinate influences the loss
Tensor reduce(const Tensor& y, const Tensor& w) { return sum_all(mul(y, w)); }

std::uint64_t next_draw(std::uint64_t s) {
    return s * 6364136223846793005ULL + 1442695040888963407ULL;
}

// One gradient check target: make(draw) rebuilds the scalar function and
// its starting parameters for a fresh probe point.
struct GradFixture {
    std::string name;
    std::function<std::pair<ScalarFn, std::vector<Tensor>>(std::uint64_t)> make;
};

std::vector<Tensor> one(Tensor t) { return {std::move(t)}; }

std::vector<GradFixture> op_fixtures() {
    std::vector<GradFixture> fx;
    auto fixed = [&](const char* name, ScalarFn fn,
                     std::function<std::vector<Tensor>(std::uint64_t)> params) {
        fx.push_back({name, [fn = std::move(fn), params = std::move(params)](std::uint64_t s) {
                          return std::make_pair(fn, params(s));
                      }});
    };

    fixed("matmul",
          [](std::vector<Tensor>& p) { return reduce(matmul(p[0], p[1]), weights_like(3, 2, 11)); },
          [](std::uint64_t s) {
              std::mt19937_64 r1(s), r2(s + 1);
              return std::vector<Tensor>{uniform_tensor(3, 4, -2, 2, r1),
                                         uniform_tensor(4, 2, -2, 2, r2)};
          });
    fixed("transpose",
          [](std::vector<Tensor>& p) { return reduce(transpose(p[0]), weights_like(4, 3, 12)); },
          [](std::uint64_t s) {
              std::mt19937_64 r(s);
              return one(uniform_tensor(3, 4, -2, 2, r));
          });
    fixed("add",
          [](std::vector<Tensor>& p) { return reduce(add(p[0], p[1]), weights_like(3, 3, 13)); },
          [](std::uint64_t s) {
              std::mt19937_64 r1(s), r2(s + 1);
              return std::vector<Tensor>{uniform_tensor(3, 3, -2, 2, r1),
                                         uniform_tensor(3, 3, -2, 2, r2)};
          });
    fixed("sub",
          [](std::vector<Tensor>& p) { return reduce(sub(p[0], p[1]), weights_like(3, 3, 14)); },
          [](std::uint64_t s) {
              std::mt19937_64 r1(s), r2(s + 1);
              return std::vector<Tensor>{uniform_tensor(3, 3, -2, 2, r1),
                                         uniform_tensor(3, 3, -2, 2, r2)};
          });
    fixed("mul", [](std::vector<Tensor>& p) { return sum_all(mul(p[0], p[1])); },
          [](std::uint64_t s) {
              std::mt19937_64 r1(s), r2(s + 1);
              return std::vector<Tensor>{uniform_tensor(3, 3, -2, 2, r1),
                                         uniform_tensor(3, 3, -2, 2, r2)};
          });
    fixed("scale",
          [](std::vector<Tensor>& p) { return reduce(scale(p[0], 1.7), weights_like(3, 3, 15)); },
          [](std::uint64_t s) {
              std::mt19937_64 r(s);
              return one(uniform_tensor(3, 3, -2, 2, r));
          });
    fixed("relu",
          [](std::vector<Tensor>& p) { return reduce(relu(p[0]), weights_like(3, 4, 16)); },
          [](std::uint64_t s) {
              std::mt19937_64 r(s);
              return one(uniform_tensor(3, 4, -2, 2, r));
          });
    fixed("sigmoid",
          [](std::vector<Tensor>& p) { return reduce(sigmoid(p[0]), weights_like(3, 4, 17)); },
          [](std::uint64_t s) {
              std::mt19937_64 r(s);
              return one(uniform_tensor(3, 4, -3, 3, r));
          });
    fixed("log",
          [](std::vector<Tensor>& p) { return reduce(log_clamped(p[0]), weights_like(3, 4, 18)); },
          [](std::uint64_t s) {
              std::mt19937_64 r(s);
              return one(uniform_tensor(3, 4, 0.5, 2.0, r));
          });
    fixed("softmax_rows",
          [](std::vector<Tensor>& p) { return reduce(softmax_rows(p[0]), weights_like(3, 4, 19)); },
          [](std::uint64_t s) {
              std::mt19937_64 r(s);
              return one(uniform_tensor(3, 4, -2, 2, r));
          });
    fixed("layer_norm_rows",
          [](std::vector<Tensor>& p) {
              return reduce(layer_norm_rows(p[0], p[1], p[2]), weights_like(3, 4, 20));
          },
          [](std::uint64_t s) {
              std::mt19937_64 r1(s), r2(s + 1), r3(s + 2);
              return std::vector<Tensor>{uniform_tensor(3, 4, -2, 2, r1),
                                         uniform_tensor(1, 4, 0.5, 1.5, r2),
                                         uniform_tensor(1, 4, -0.5, 0.5, r3)};
          });
    fixed("cosine_rows",
          [](std::vector<Tensor>& p) {
              return reduce(cosine_rows(p[0], p[1]), weights_like(3, 2, 21));
          },
          [](std::uint64_t s) {
              std::mt19937_64 r1(s), r2(s + 1);
              return std::vector<Tensor>{uniform_tensor(3, 4, -2, 2, r1),
                                         uniform_tensor(2, 4, -2, 2, r2)};
          });
    fixed("concat_rows",
          [](std::vector<Tensor>& p) {
              return reduce(concat_rows({p[0], p[1]}), weights_like(5, 3, 22));
          },
          [](std::uint64_t s) {
              std::mt19937_64 r1(s), r2(s + 1);
              return std::vector<Tensor>{uniform_tensor(2, 3, -2, 2, r1),
                                         uniform_tensor(3, 3, -2, 2, r2)};
          });
    fixed("concat_cols",
          [](std::vector<Tensor>& p) {
              return reduce(concat_cols({p[0], p[1]}), weights_like(3, 3, 23));
          },
          [](std::uint64_t s) {
              std::mt19937_64 r1(s), r2(s + 1);
              return std::vector<Tensor>{uniform_tensor(3, 2, -2, 2, r1),
                                         uniform_tensor(3, 1, -2, 2, r2)};
          });
    fixed("slice",
          [](std::vector<Tensor>& p) {
              return reduce(slice(p[0], 1, 2, 1, 3), weights_like(2, 3, 24));
          },
          [](std::uint64_t s) {
              std::mt19937_64 r(s);
              return one(uniform_tensor(4, 5, -2, 2, r));
          });
    fixed("reshape",
          [](std::vector<Tensor>& p) { return reduce(reshape(p[0], 4, 3), weights_like(4, 3, 25)); },
          [](std::uint64_t s) {
              std::mt19937_64 r(s);
              return one(uniform_tensor(3, 4, -2, 2, r));
          });
    fixed("sum", [](std::vector<Tensor>& p) { return sum_all(p[0]); },
          [](std::uint64_t s) {
              std::mt19937_64 r(s);
              return one(uniform_tensor(3, 4, -2, 2, r));
          });
    fixed("row_sums",
          [](std::vector<Tensor>& p) { return reduce(row_sums(p[0]), weights_like(3, 1, 26)); },
          [](std::uint64_t s) {
              std::mt19937_64 r(s);
              return one(uniform_tensor(3, 4, -2, 2, r));
          });
    fixed("mean_rows",
          [](std::vector<Tensor>& p) { return reduce(mean_rows(p[0]), weights_like(1, 4, 27)); },
          [](std::uint64_t s) {
              std::mt19937_64 r(s);
              return one(uniform_tensor(3, 4, -2, 2, r));
          });
    fixed("mul_scalar",
          [](std::vector<Tensor>& p) {
              return reduce(mul_scalar(p[0], p[1]), weights_like(3, 3, 28));
          },
          [](std::uint64_t s) {
              std::mt19937_64 r1(s), r2(s + 1);
              return std::vector<Tensor>{uniform_tensor(3, 3, -2, 2, r1),
                                         uniform_tensor(1, 1, 0.5, 2.0, r2)};
          });
    fixed("recip",
          [](std::vector<Tensor>& p) { return reduce(recip(p[0]), weights_like(3, 3, 29)); },
          [](std::uint64_t s) {
              std::mt19937_64 r(s);
              return one(uniform_tensor(3, 3, 0.5, 2.0, r));
          });
    fixed("zero_diag",
          [](std::vector<Tensor>& p) { return reduce(zero_diag(p[0]), weights_like(4, 4, 30)); },
          [](std::uint64_t s) {
              std::mt19937_64 r(s);
              return one(uniform_tensor(4, 4, -2, 2, r));
          });
    return fx;
}

ModelConfig check_model_config() {
    ModelConfig cfg;
    cfg.k = 3;
    cfg.n = 2;
    cfg.i = 1;
    cfg.d = 8;
    cfg.d_g = 5;
    cfg.cross_layers = 1;
    cfg.path_self_layers = 1;
    cfg.gene_self_layers = 1;
    cfg.decoder_layers = 1;
    cfg.heads = 1;
    return cfg;
}

GradFixture model_fixture(Task task) {
    const ModelConfig cfg = check_model_config();
    std::string name = std::string("model_") + task_name(task);
    auto make = [cfg, task](std::uint64_t draw) {
        std::mt19937_64 data_rng(draw + 77);
        Tensor patches = uniform_tensor(6, cfg.d, -1, 1, data_rng);
        Tensor genes = uniform_tensor(cfg.n, cfg.d_g, -1, 1, data_rng);
        ScalarFn fn = [cfg, task, patches, genes](std::vector<Tensor>& p) {
            ModelParams m = make_model(Variant::full, cfg, 1);
            std::size_t idx = 0;
            visit_params(m, [&](const std::string&, Tensor& t) { t = p[idx++]; });
            ModelOutput out = forward(m, patches, genes, task, true, 1.0, 1.0);
            Tensor obj = task == Task::survival
                             ? nll_survival(out.logits, SurvivalTarget{10.0, 0, 1})
                             : cross_entropy(out.logits, 1);
            return total_loss(obj, out.modularity, 0.1);
        };
        ModelParams m = make_model(Variant::full, cfg, draw);
        std::vector<Tensor> params;
        visit_params(m, [&](const std::string&, Tensor& t) { params.push_back(t); });
        return std::make_pair(std::move(fn), std::move(params));
    };
    return {std::move(name), std::move(make)};
}

}  // namespace

void CheckReport::add(const std::string& name, double worst, double bound) {
    CheckLine line;
    line.name = name;
    line.worst = worst;
    line.bound = bound;
    line.pass = std::isfinite(worst) && worst <= bound;
    add_line(line);
}

void CheckReport::add_line(const CheckLine& line) {
    lines.push_back(line);
    if (!line.pass) all_pass = false;
}

std::string CheckReport::text() const {
    std::string out;
    std::size_t failed = 0;
    char buf[160];
    for (const CheckLine& l : lines) {
        std::snprintf(buf, sizeof buf, "%-22s worst %11.4e  bound %7.1e  %s\n", l.name.c_str(),
                      l.worst, l.bound, l.pass ? "ok" : "FAIL");
        out += buf;
        if (!l.pass) ++failed;
    }
    if (failed == 0)
        std::snprintf(buf, sizeof buf, "all %zu checks passed\n", lines.size());
    else
        std::snprintf(buf, sizeof buf, "%zu of %zu checks FAILED\n", failed, lines.size());
    out += buf;
    return out;
}

std::vector<std::string> backward_rule_names() {
    std::vector<std::string> names;
    for (const GradFixture& fix : op_fixtures()) names.push_back(fix.name);
    return names;
}

CheckReport gradient_suite(std::size_t seeds, const std::string& sabotage) {
    const double h = 1e-5;
    const double bound = 1e-4;
    CheckReport report;
    if (seeds == 0) seeds = 1;

    std::vector<GradFixture> fixtures = op_fixtures();
    fixtures.push_back(model_fixture(Task::grading));
    fixtures.push_back(model_fixture(Task::classification));
    fixtures.push_back(model_fixture(Task::survival));

    for (const GradFixture& fix : fixtures) {
        double worst = 0.0;
        bool ok = true;
        for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
            std::uint64_t draw = seed * 1000;
            auto [fn, params] = fix.make(draw);
            // resample near relu/clamp kinks; the rule keys only on kink
            // distance, never on the check outcome
            int attempts = 0;
            while (forward_kink_gap(fn, params) < 10.0 * h && attempts < 30) {
                draw = next_draw(draw);
                std::tie(fn, params) = fix.make(draw);
                ++attempts;
            }
            if (attempts >= 30) {
                ok = false;
                worst = std::numeric_limits<double>::infinity();
                break;
            }
            GradReport rep = grad_check(fix.name, fn, params, h, bound, sabotage);
            worst = std::max(worst, rep.max_rel_err);
            ok = ok && rep.pass;
        }
        CheckLine line;
        line.name = fix.name;
        line.worst = worst;
        line.bound = bound;
        line.pass = ok;
        report.add_line(line);
    }
    return report;
}

namespace {

AssignmentBundle explicit_bundle(const Tensor& a, const Tensor& s_p) {
    AssignmentBundle b;
    b.s_p = s_p;
    b.s_g = Tensor(1, a.rows, 0.0);
    b.affinity = a;
    b.degree = row_sums(a);
    b.edge_mass = sum_all(a);
    b.edge_mass_2e = b.edge_mass.item();
    if (b.edge_mass_2e > 0.0) b.weight_w = modularity_weight(b.affinity, b.degree, b.edge_mass);
    return b;
}

double modularity_vs_newman(std::mt19937_64& rng, std::size_t rounds) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double worst = 0.0;
    std::size_t tested = 0, attempts = 0;
    while (tested < rounds && attempts < rounds * 20) {
        ++attempts;
        const std::size_t m = 2 + static_cast<std::size_t>(rng() % 5);  // 2..6 nodes
        Tensor a(m, m, 0.0);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j) {
                const double v = uni(rng) < 0.3 ? 0.0 : uni(rng);
                a.at(i, j) = v;
                a.at(j, i) = v;
            }
        const int k = 1 + static_cast<int>(rng() % 3);
        std::vector<int> community(m);
        for (std::size_t i = 0; i < m; ++i) community[i] = static_cast<int>(rng() % k);

        Tensor mass = sum_all(a);
        if (mass.item() <= 0.0) continue;  // edgeless draw, try again
        ++tested;

        Tensor s(static_cast<std::size_t>(k), m, 0.0);
        for (std::size_t i = 0; i < m; ++i) s.at(static_cast<std::size_t>(community[i]), i) = 1.0;

        AssignmentBundle b = explicit_bundle(a, s);
        const double loss = modularity_loss(b, 1.0, 0.0).item();

        std::vector<std::vector<double>> rows(m, std::vector<double>(m));
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) rows[i][j] = a.at(i, j);
        const double oracle = oracles::newman_same_community_sum(rows, community);
        worst = std::max(worst, std::fabs(-b.edge_mass_2e * loss - oracle));
    }
    if (tested < rounds) return std::numeric_limits<double>::infinity();
    return worst;
}

// scores with deliberate ties so the average-rank path is exercised
double draw_score(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    if (uni(rng) < 0.5) return std::floor(uni(rng) * 8.0) / 8.0;
    return uni(rng);
}

double auc_vs_pairs(std::mt19937_64& rng, std::size_t rounds) {
    double worst = 0.0;
    for (std::size_t round = 0; round < rounds; ++round) {
        const std::size_t n = 2 + rng() % 49;  // 2..50
        std::vector<double> score(n);
        std::vector<char> is_pos(n);
        bool any_pos = false, any_neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            score[i] = draw_score(rng);
            is_pos[i] = static_cast<char>(rng() % 2);
            (is_pos[i] ? any_pos : any_neg) = true;
        }
        if (!any_pos) is_pos[0] = 1;
        if (!any_neg) is_pos[n - 1] = 0;
        const double got = binary_auc(score, is_pos);
        const double want = oracles::pairwise_auc(score, is_pos);
        worst = std::max(worst, std::fabs(got - want));
    }
    return worst;
}

double concordance_vs_pairs(std::mt19937_64& rng, std::size_t rounds) {
    double worst = 0.0;
    std::size_t tested = 0, attempts = 0;
    while (tested < rounds && attempts < rounds * 20) {
        ++attempts;
        const std::size_t n = 3 + rng() % 48;  // 3..50
        std::vector<double> risk(n), time(n);
        std::vector<int> event(n);
        for (std::size_t i = 0; i < n; ++i) {
            risk[i] = draw_score(rng);
            time[i] = 1.0 + static_cast<double>(rng() % 12);  // tied times occur
            event[i] = rng() % 10 < 7 ? 1 : 0;
        }
        bool comparable = false;
        for (std::size_t i = 0; i < n && !comparable; ++i)
            for (std::size_t j = 0; j < n && !comparable; ++j)
                comparable = event[i] == 1 && time[i] < time[j];
        if (!comparable) continue;
        ++tested;
        const double want = oracles::pairwise_concordance(risk, time, event);
        const double got = concordance_index(risk, time, event);
        worst = std::max(worst, std::fabs(got - want));
    }
    if (tested < rounds) return std::numeric_limits<double>::infinity();
    return worst;
}

double td_auc_vs_pairs(std::mt19937_64& rng, std::size_t rounds) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double worst = 0.0;
    for (std::size_t round = 0; round < rounds; ++round) {
        const std::size_t n = 4 + rng() % 27;  // 4..30
        std::vector<double> risk(n), time(n);
        std::vector<int> event(n);
        for (std::size_t i = 0; i < n; ++i) {
            risk[i] = draw_score(rng);
            time[i] = 1.0 + static_cast<double>(rng() % 10);
            event[i] = rng() % 10 < 7 ? 1 : 0;
        }
        std::vector<double> grid;
        for (double t = 0.5; t <= 11.0; t += 1.0 + uni(rng)) grid.push_back(t);

        TdAucResult got = time_dependent_auc(risk, time, event, grid);
        std::size_t at = 0, skipped = 0;
        for (double t : grid) {
            double want = 0.0;
            if (oracles::pairwise_td_auc(risk, time, event, t, &want)) {
                if (at >= got.points.size() || got.points[at].time != t)
                    return std::numeric_limits<double>::infinity();
                worst = std::max(worst, std::fabs(got.points[at].auc - want));
                ++at;
            } else {
                if (skipped >= got.skipped_times.size() || got.skipped_times[skipped] != t)
                    return std::numeric_limits<double>::infinity();
                ++skipped;
            }
        }
        if (at != got.points.size() || skipped != got.skipped_times.size())
            return std::numeric_limits<double>::infinity();
    }
    return worst;
}

}  // namespace

CheckReport oracle_suite(std::uint64_t seed) {
    CheckReport report;
    std::mt19937_64 rng(seed);

    report.add("modularity_newman", modularity_vs_newman(rng, 20), 1e-9);

    // 3-node path split {0,1} | {2}: the loss lands exactly on -Q = 0.125
    {
        Tensor a(3, 3, {0, 1, 0, 1, 0, 1, 0, 1, 0});
        Tensor s_p(2, 3, {1, 1, 0, 0, 0, 1});
        AssignmentBundle b = explicit_bundle(a, s_p);
        report.add("modularity_path3", std::fabs(modularity_loss(b, 1.0, 0.0).item() - 0.125),
                   0.0);
    }

    report.add("auc_pairs", auc_vs_pairs(rng, 50), 0.0);
    report.add("concordance_pairs", concordance_vs_pairs(rng, 50), 0.0);
    report.add("td_auc_pairs", td_auc_vs_pairs(rng, 20), 0.0);
    return report;
}

}  // namespace umeml
