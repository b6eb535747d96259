#pragma once

#include <span>
#include <vector>

#include "concord/corpus.hpp"
#include "concord/features.hpp"
#include "concord/util.hpp"

namespace concord {

// Dense per-source parameter vector over the shared feature template.
using ModelWeights = std::vector<double>;
// weights for every source, indexed by source position in the corpus
using WeightSet = std::vector<ModelWeights>;

// Log-potentials of one linear chain. edge(p, y_prev, y) is defined for
// positions p in 1..n-1 and couples y at p-1 with y at p.
struct ChainPotentials {
    int length = 0;
    int num_labels = 0;
    Table2 node;               // length x L
    std::vector<double> edge;  // (length-1) x L x L

    ChainPotentials() = default;
    ChainPotentials(int n, int labels)
        : length(n), num_labels(labels), node(n, labels),
          edge(n > 1 ? static_cast<std::size_t>(n - 1) * labels * labels : 0, 0.0) {}

    double& edge_at(int p, int yp, int y) {
        return edge[(static_cast<std::size_t>(p - 1) * num_labels + yp) * num_labels + y];
    }
    double edge_at(int p, int yp, int y) const {
        return edge[(static_cast<std::size_t>(p - 1) * num_labels + yp) * num_labels + y];
    }
};

struct ChainMarginals {
    double log_z = 0.0;
    Table2 node;               // length x L, rows sum to 1
    std::vector<double> edge;  // (length-1) x L x L, consistent with node

    double edge_at(int p, int yp, int y, int num_labels) const {
        return edge[(static_cast<std::size_t>(p - 1) * num_labels + yp) * num_labels + y];
    }
};

// w . f decomposed over chain components; node potentials collect all
// non-transition features, edge potentials the transition indicators.
ChainPotentials compute_potentials(const FeatureTemplate& tmpl, const InstanceFeatures& feats,
                                   int length, const ModelWeights& weights);
ChainPotentials compute_potentials(const FeatureTemplate& tmpl, const Instance& inst,
                                   const ModelWeights& weights);

double chain_score(const ChainPotentials& pot, std::span<const int> labels);

ChainMarginals forward_backward(const ChainPotentials& pot);

// log partition only (single forward pass)
double chain_log_z(const ChainPotentials& pot);

// argmax labeling; ties broken toward the lowest label id
std::vector<int> viterbi(const ChainPotentials& pot);

// Copy of pot with node rows inside [start,end) masked to the given labeling.
ChainPotentials mask_span(const ChainPotentials& pot, int start, int end,
                          std::span<const int> labeling);

// Exact P(Y[start,end) = labeling) via constrained forward recursion.
double segment_marginal(const ChainPotentials& pot, int start, int end,
                        std::span<const int> labeling);

// Marginals of the chain conditioned on the span labeling, plus the
// unconditional log-probability of that labeling.
struct ConstrainedResult {
    double log_prob = 0.0;  // log P(span = labeling)
    ChainMarginals cond;    // marginals given the constraint
};
ConstrainedResult constrained_marginals(const ChainPotentials& pot, int start, int end,
                                        std::span<const int> labeling);

// Regularized supervised log-likelihood of one source's labeled instances:
//   sum_i log P(y_i|x_i,w) - gamma ||w||^2
// The gradient is accumulated into grad (resized and zeroed here). Instance
// inference fans out over threads; accumulation is serial in instance order.
struct LabeledObjective {
    double value = 0.0;
    std::vector<double> grad;
};
LabeledObjective labeled_objective(const FeatureTemplate& tmpl,
                                   const std::vector<const Instance*>& instances,
                                   const std::vector<const InstanceFeatures*>& feats,
                                   const ModelWeights& weights, double gamma);

}  // namespace concord
