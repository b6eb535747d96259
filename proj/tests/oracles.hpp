// Test-side oracles, independent of the library's inference paths:
// brute-force enumeration over labelings, finite differences, and a
// from-scratch dot-product featurizer. Kept deliberately naive.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "concord/chain.hpp"
#include "concord/corpus.hpp"
#include "concord/features.hpp"
#include "concord/fused.hpp"
#include "concord/objectives.hpp"
#include "concord/util.hpp"

namespace oracle {

using namespace concord;

// every labeling of `length` positions over `labels` label ids
inline std::vector<std::vector<int>> all_labelings(int length, int labels) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(length, 0);
    while (true) {
        out.push_back(cur);
        int k = length - 1;
        while (k >= 0 && ++cur[k] == labels) {
            cur[k] = 0;
            --k;
        }
        if (k < 0) break;
    }
    return out;
}

struct ChainEnumeration {
    double log_z = 0.0;
    Table2 node;               // marginals
    std::vector<double> edge;  // (n-1) x L x L
    std::vector<int> argmax;

    double edge_at(int p, int yp, int y, int L) const {
        return edge[(static_cast<std::size_t>(p - 1) * L + yp) * L + y];
    }
};

// exact quantities by summing over every labeling
inline ChainEnumeration enumerate_chain(const ChainPotentials& pot) {
    const int n = pot.length, L = pot.num_labels;
    ChainEnumeration out;
    out.node = Table2(n, L);
    out.edge.assign(n > 1 ? static_cast<std::size_t>(n - 1) * L * L : 0, 0.0);
    std::vector<double> scores;
    auto labelings = all_labelings(n, L);
    double best = -1e300;
    for (const auto& lab : labelings) {
        double s = chain_score(pot, lab);
        scores.push_back(s);
        if (s > best) {
            best = s;
            out.argmax = lab;
        }
    }
    out.log_z = log_sum_exp(scores);
    for (std::size_t i = 0; i < labelings.size(); ++i) {
        double p = std::exp(scores[i] - out.log_z);
        const auto& lab = labelings[i];
        for (int q = 0; q < n; ++q) out.node.at(q, lab[q]) += p;
        for (int q = 1; q < n; ++q)
            out.edge[(static_cast<std::size_t>(q - 1) * L + lab[q - 1]) * L + lab[q]] += p;
    }
    return out;
}

// P(span = labeling) by enumeration
inline double enumerate_segment_marginal(const ChainPotentials& pot, int start, int end,
                                         const std::vector<int>& labeling) {
    double num = kNegInf, den = kNegInf;
    for (const auto& lab : all_labelings(pot.length, pot.num_labels)) {
        double s = chain_score(pot, lab);
        den = log_add(den, s);
        bool match = true;
        for (int p = start; p < end && match; ++p) match = lab[p] == labeling[p - start];
        if (match) num = log_add(num, s);
    }
    return std::exp(num - den);
}

// log partition of a fused graph by enumerating joint fused states
inline double enumerate_fused_log_z(const FusedGraph& graph, const FusedPotentials& pot) {
    const int L = pot.num_labels;
    double acc = kNegInf;
    for (const auto& z : all_labelings(graph.node_count, L)) {
        double s = 0.0;
        for (int k = 0; k < graph.node_count; ++k) s += pot.node[k][z[k]];
        for (std::size_t e = 0; e < graph.edges.size(); ++e)
            s += pot.edge[e][static_cast<std::size_t>(z[graph.edges[e].a]) * L +
                             z[graph.edges[e].b]];
        acc = log_add(acc, s);
    }
    return acc;
}

inline std::vector<std::vector<double>> enumerate_fused_node_marginals(
    const FusedGraph& graph, const FusedPotentials& pot) {
    const int L = pot.num_labels;
    double log_z = enumerate_fused_log_z(graph, pot);
    std::vector<std::vector<double>> marg(graph.node_count, std::vector<double>(L, 0.0));
    for (const auto& z : all_labelings(graph.node_count, L)) {
        double s = 0.0;
        for (int k = 0; k < graph.node_count; ++k) s += pot.node[k][z[k]];
        for (std::size_t e = 0; e < graph.edges.size(); ++e)
            s += pot.edge[e][static_cast<std::size_t>(z[graph.edges[e].a]) * L +
                             z[graph.edges[e].b]];
        double p = std::exp(s - log_z);
        for (int k = 0; k < graph.node_count; ++k) marg[k][z[k]] += p;
    }
    return marg;
}

// Defining quantity of the agreement likelihood: enumerate joint labelings
// of the given instances, keep the consistent ones, sum their probability
// product. Returns log Pr(consistent).
inline double enumerate_agreement_logprob(const std::vector<ChainPotentials>& pots,
                                          const std::vector<LocalClique>& cliques) {
    const int L = pots.empty() ? 0 : pots.front().num_labels;
    std::vector<double> log_zs;
    for (const auto& p : pots) log_zs.push_back(enumerate_chain(p).log_z);

    // odometer over per-instance labelings
    std::vector<std::vector<std::vector<int>>> per_inst;
    for (const auto& p : pots) per_inst.push_back(all_labelings(p.length, L));
    std::vector<std::size_t> idx(pots.size(), 0);
    double acc = kNegInf;
    while (true) {
        bool consistent = true;
        for (const auto& clique : cliques) {
            const auto& first = clique.front();
            for (const auto& m : clique) {
                for (int off = 0; off < first.end - first.start && consistent; ++off)
                    consistent = per_inst[m.inst][idx[m.inst]][m.start + off] ==
                                 per_inst[first.inst][idx[first.inst]][first.start + off];
                if (!consistent) break;
            }
            if (!consistent) break;
        }
        if (consistent) {
            double s = 0.0;
            for (std::size_t i = 0; i < pots.size(); ++i)
                s += chain_score(pots[i], per_inst[i][idx[i]]) - log_zs[i];
            acc = log_add(acc, s);
        }
        std::size_t k = 0;
        while (k < idx.size() && ++idx[k] == per_inst[k].size()) {
            idx[k] = 0;
            ++k;
        }
        if (k == idx.size()) break;
    }
    return acc;
}

// independent dot-product route: w . extract_features summed per component
inline ChainPotentials potentials_by_extraction(const FeatureTemplate& tmpl, const Instance& inst,
                                                const ModelWeights& w) {
    const int L = tmpl.num_labels();
    ChainPotentials pot(inst.length(), L);
    for (int p = 0; p < inst.length(); ++p) {
        for (int y = 0; y < L; ++y) {
            double s = 0.0;
            // node part: position-0 call carries no transition feature
            for (const auto& [k, v] :
                 tmpl.extract(inst, p, y, p > 0 ? std::optional<int>(0) : std::nullopt)) {
                if (k < tmpl.num_base_keys() * L) s += w[k] * v;
            }
            pot.node.at(p, y) = s;
        }
    }
    for (int p = 1; p < inst.length(); ++p)
        for (int yp = 0; yp < L; ++yp)
            for (int y = 0; y < L; ++y) {
                double s = 0.0;
                for (const auto& [k, v] : tmpl.extract(inst, p, y, yp))
                    if (k >= tmpl.num_base_keys() * L) s += w[k] * v;
                pot.edge_at(p, yp, y) = s;
            }
    return pot;
}

// central finite differences over a flat parameter vector
inline std::vector<double> finite_difference(
    const std::function<double(const std::vector<double>&)>& f, const std::vector<double>& x,
    double step = 1e-5) {
    std::vector<double> g(x.size(), 0.0);
    std::vector<double> xp = x;
    for (std::size_t k = 0; k < x.size(); ++k) {
        xp[k] = x[k] + step;
        double up = f(xp);
        xp[k] = x[k] - step;
        double down = f(xp);
        xp[k] = x[k];
        g[k] = (up - down) / (2.0 * step);
    }
    return g;
}

inline double rel_err(const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    double denom = std::max({std::sqrt(na), std::sqrt(nb), 1e-8});
    return std::sqrt(diff) / denom;
}

// small random chain setup shared by many tests
struct Toy {
    Corpus corpus;
    FeatureTemplate tmpl;

    // `lengths[s]` tokens per instance; one instance per source by default
    static Toy make(Rng& rng, const std::vector<std::vector<int>>& lengths_per_source,
                    int num_labels, int vocab = 6) {
        Toy toy;
        toy.corpus.labels.push_back("Other");
        for (int l = 1; l < num_labels; ++l) toy.corpus.labels.push_back("L" + std::to_string(l));
        for (std::size_t s = 0; s < lengths_per_source.size(); ++s) {
            Source src;
            src.id = "s" + std::to_string(s);
            for (std::size_t i = 0; i < lengths_per_source[s].size(); ++i) {
                Instance inst;
                inst.source_id = src.id;
                inst.instance_id = "i" + std::to_string(i);
                for (int p = 0; p < lengths_per_source[s][i]; ++p)
                    inst.tokens.push_back("t" + std::to_string(rng.next_int(0, vocab - 1)));
                src.instances.push_back(std::move(inst));
            }
            toy.corpus.sources.push_back(std::move(src));
        }
        toy.corpus.finalize();
        toy.tmpl = FeatureTemplate::build(toy.corpus);
        return toy;
    }

    WeightSet random_weights(Rng& rng, double scale = 0.5) const {
        WeightSet w(corpus.sources.size(), ModelWeights(tmpl.dimension(), 0.0));
        for (auto& ws : w)
            for (auto& v : ws) v = scale * rng.next_gaussian();
        return w;
    }
};

}  // namespace oracle
