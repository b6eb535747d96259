#include "concord/chain.hpp"

#include <algorithm>
#include <cmath>

#include "concord/parallel.hpp"

namespace concord {

ChainPotentials compute_potentials(const FeatureTemplate& tmpl, const InstanceFeatures& feats,
                                   int length, const ModelWeights& weights) {
    if (static_cast<int>(weights.size()) != tmpl.dimension())
        fail("compute_potentials: weight dimension " + std::to_string(weights.size()) +
             " != template dimension " + std::to_string(tmpl.dimension()));
    const int L = tmpl.num_labels();
    ChainPotentials pot(length, L);
    for (int p = 0; p < length; ++p) {
        auto row = pot.node.row(p);
        for (int base : feats.keys[p]) {
            const double* w = weights.data() + tmpl.node_feature(base, 0);
            for (int y = 0; y < L; ++y) row[y] += w[y];
        }
    }
    // transition indicators do not depend on the position
    for (int p = 1; p < length; ++p)
        for (int yp = 0; yp < L; ++yp)
            for (int y = 0; y < L; ++y)
                pot.edge_at(p, yp, y) = weights[tmpl.transition_feature(yp, y)];
    return pot;
}

ChainPotentials compute_potentials(const FeatureTemplate& tmpl, const Instance& inst,
                                   const ModelWeights& weights) {
    return compute_potentials(tmpl, InstanceFeatures::build(tmpl, inst), inst.length(), weights);
}

double chain_score(const ChainPotentials& pot, std::span<const int> labels) {
    double s = 0.0;
    for (int p = 0; p < pot.length; ++p) s += pot.node.at(p, labels[p]);
    for (int p = 1; p < pot.length; ++p) s += pot.edge_at(p, labels[p - 1], labels[p]);
    return s;
}

namespace {

// alpha[p][y] includes node potential at p
Table2 forward_pass(const ChainPotentials& pot) {
    const int n = pot.length, L = pot.num_labels;
    Table2 alpha(n, L);
    for (int y = 0; y < L; ++y) alpha.at(0, y) = pot.node.at(0, y);
    std::vector<double> tmp(L);
    for (int p = 1; p < n; ++p) {
        for (int y = 0; y < L; ++y) {
            for (int yp = 0; yp < L; ++yp) tmp[yp] = alpha.at(p - 1, yp) + pot.edge_at(p, yp, y);
            alpha.at(p, y) = pot.node.at(p, y) + log_sum_exp(tmp);
        }
    }
    return alpha;
}

// beta[p][y] excludes node potential at p
Table2 backward_pass(const ChainPotentials& pot) {
    const int n = pot.length, L = pot.num_labels;
    Table2 beta(n, L);
    std::vector<double> tmp(L);
    for (int p = n - 2; p >= 0; --p) {
        for (int y = 0; y < L; ++y) {
            for (int yn = 0; yn < L; ++yn)
                tmp[yn] = pot.edge_at(p + 1, y, yn) + pot.node.at(p + 1, yn) + beta.at(p + 1, yn);
            beta.at(p, y) = log_sum_exp(tmp);
        }
    }
    return beta;
}

}  // namespace

double chain_log_z(const ChainPotentials& pot) {
    Table2 alpha = forward_pass(pot);
    return log_sum_exp(alpha.row(pot.length - 1));
}

ChainMarginals forward_backward(const ChainPotentials& pot) {
    const int n = pot.length, L = pot.num_labels;
    Table2 alpha = forward_pass(pot);
    Table2 beta = backward_pass(pot);
    ChainMarginals m;
    m.log_z = log_sum_exp(alpha.row(n - 1));
    m.node = Table2(n, L);
    m.edge.assign(n > 1 ? static_cast<std::size_t>(n - 1) * L * L : 0, 0.0);
    for (int p = 0; p < n; ++p)
        for (int y = 0; y < L; ++y)
            m.node.at(p, y) = std::exp(alpha.at(p, y) + beta.at(p, y) - m.log_z);
    for (int p = 1; p < n; ++p) {
        for (int yp = 0; yp < L; ++yp) {
            for (int y = 0; y < L; ++y) {
                double lp = alpha.at(p - 1, yp) + pot.edge_at(p, yp, y) + pot.node.at(p, y) +
                            beta.at(p, y) - m.log_z;
                m.edge[(static_cast<std::size_t>(p - 1) * L + yp) * L + y] = std::exp(lp);
            }
        }
    }
    return m;
}

std::vector<int> viterbi(const ChainPotentials& pot) {
    const int n = pot.length, L = pot.num_labels;
    Table2 best(n, L);
    std::vector<int> back(static_cast<std::size_t>(n) * L, 0);
    for (int y = 0; y < L; ++y) best.at(0, y) = pot.node.at(0, y);
    for (int p = 1; p < n; ++p) {
        for (int y = 0; y < L; ++y) {
            double b = kNegInf;
            int arg = 0;
            for (int yp = 0; yp < L; ++yp) {
                double v = best.at(p - 1, yp) + pot.edge_at(p, yp, y);
                if (v > b) {  // strict: keeps the lowest label id on ties
                    b = v;
                    arg = yp;
                }
            }
            best.at(p, y) = b + pot.node.at(p, y);
            back[static_cast<std::size_t>(p) * L + y] = arg;
        }
    }
    int last = 0;
    double b = kNegInf;
    for (int y = 0; y < L; ++y) {
        if (best.at(n - 1, y) > b) {
            b = best.at(n - 1, y);
            last = y;
        }
    }
    std::vector<int> labels(n);
    labels[n - 1] = last;
    for (int p = n - 1; p > 0; --p) labels[p - 1] = back[static_cast<std::size_t>(p) * L + labels[p]];
    return labels;
}

ChainPotentials mask_span(const ChainPotentials& pot, int start, int end,
                          std::span<const int> labeling) {
    if (start < 0 || start >= end || end > pot.length)
        fail("mask_span: span out of bounds");
    if (static_cast<int>(labeling.size()) != end - start)
        fail("mask_span: labeling length != span length");
    ChainPotentials masked = pot;
    for (int p = start; p < end; ++p) {
        int keep = labeling[p - start];
        for (int y = 0; y < pot.num_labels; ++y)
            if (y != keep) masked.node.at(p, y) = kNegInf;
    }
    return masked;
}

double segment_marginal(const ChainPotentials& pot, int start, int end,
                        std::span<const int> labeling) {
    double log_z = chain_log_z(pot);
    double log_num = chain_log_z(mask_span(pot, start, end, labeling));
    return std::exp(log_num - log_z);
}

ConstrainedResult constrained_marginals(const ChainPotentials& pot, int start, int end,
                                        std::span<const int> labeling) {
    double log_z = chain_log_z(pot);
    ConstrainedResult r;
    r.cond = forward_backward(mask_span(pot, start, end, labeling));
    r.log_prob = r.cond.log_z - log_z;
    return r;
}

LabeledObjective labeled_objective(const FeatureTemplate& tmpl,
                                   const std::vector<const Instance*>& instances,
                                   const std::vector<const InstanceFeatures*>& feats,
                                   const ModelWeights& weights, double gamma) {
    if (gamma < 0) fail("labeled_objective: gamma must be >= 0");
    const int L = tmpl.num_labels();
    LabeledObjective out;
    out.grad.assign(weights.size(), 0.0);

    struct PerInstance {
        double log_lik = 0.0;
        ChainMarginals marg;
    };
    std::vector<PerInstance> slots(instances.size());
    parallel::parallel_for(instances.size(), [&](std::size_t i) {
        const Instance& inst = *instances[i];
        if (!inst.gold) fail("labeled_objective: instance '" + inst.instance_id + "' has no gold labels");
        ChainPotentials pot = compute_potentials(tmpl, *feats[i], inst.length(), weights);
        slots[i].marg = forward_backward(pot);
        slots[i].log_lik = chain_score(pot, *inst.gold) - slots[i].marg.log_z;
    });

    for (std::size_t i = 0; i < instances.size(); ++i) {
        const Instance& inst = *instances[i];
        const auto& gold = *inst.gold;
        const auto& marg = slots[i].marg;
        out.value += slots[i].log_lik;
        for (int p = 0; p < inst.length(); ++p) {
            for (int base : feats[i]->keys[p]) {
                double* g = out.grad.data() + tmpl.node_feature(base, 0);
                g[gold[p]] += 1.0;
                for (int y = 0; y < L; ++y) g[y] -= marg.node.at(p, y);
            }
        }
        for (int p = 1; p < inst.length(); ++p) {
            out.grad[tmpl.transition_feature(gold[p - 1], gold[p])] += 1.0;
            for (int yp = 0; yp < L; ++yp)
                for (int y = 0; y < L; ++y)
                    out.grad[tmpl.transition_feature(yp, y)] -= marg.edge_at(p, yp, y, L);
        }
    }
    for (std::size_t k = 0; k < weights.size(); ++k) {
        out.value -= gamma * weights[k] * weights[k];
        out.grad[k] -= 2.0 * gamma * weights[k];
    }
    return out;
}

}  // namespace concord
