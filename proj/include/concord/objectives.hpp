#pragma once

#include <string>
#include <vector>

#include "concord/chain.hpp"
#include "concord/corpus.hpp"
#include "concord/features.hpp"
#include "concord/fused.hpp"
#include "concord/miner.hpp"

namespace concord {

enum class AgreementVariant { Clique, Node, Pair, Full, TR1, BhattacharyyaClique };

AgreementVariant variant_from_name(const std::string& name);
std::string variant_name(AgreementVariant v);

// Immutable evaluation context: corpus, frozen template, per-instance
// feature caches. Safe to share across threads.
class Workspace {
public:
    Workspace(const Corpus& corpus, const FeatureTemplate& tmpl);

    const Corpus& corpus() const { return *corpus_; }
    const FeatureTemplate& tmpl() const { return *tmpl_; }
    const InstanceFeatures& features(InstanceRef ref) const {
        return features_[static_cast<std::size_t>(index_of(ref))];
    }
    int index_of(InstanceRef ref) const { return offsets_[ref.source] + ref.instance; }
    int num_sources() const { return static_cast<int>(corpus_->sources.size()); }

    WeightSet zero_weights() const;

private:
    const Corpus* corpus_;
    const FeatureTemplate* tmpl_;
    std::vector<int> offsets_;
    std::vector<InstanceFeatures> features_;
};

struct AgreementResult {
    double value = 0.0;
    WeightSet grad;                          // per source
    std::vector<double> partition_logprobs;  // per partition, evaluation order
    bool warning = false;                    // positive log-probability seen
    bool converged = true;                   // all BP runs converged
};

// (Approximate) log-likelihood of the agreement set under the chosen
// variant, with its analytic gradient. Partition inference fans out over
// threads; values and gradients are reduced serially in partition order.
AgreementResult agreement_ll(const Workspace& ws, AgreementVariant variant,
                             const AgreementSet& agreement, const WeightSet& weights,
                             const BpConfig& bp);

// Single-clique agreement log-probability (the additive clique term).
double clique_agreement_logprob(const Workspace& ws, const Clique& clique,
                                const WeightSet& weights);

// Per-position expansion used by the Node variant.
std::vector<Clique> expand_node_cliques(const std::vector<Clique>& cliques);

// E-step support for EM training: agreement-side marginal targets per
// participating instance, frozen at the current weights. node/edge tables are
// summed over the partitions an instance appears in, and multiplicity counts
// how many partitions that was (one -log Z term each in the M-step).
struct FrozenTargets {
    std::vector<InstanceRef> instances;
    std::vector<Table2> node;                // per instance, n x L
    std::vector<std::vector<double>> edge;   // per instance, (n-1) x L x L
    std::vector<int> multiplicity;
};

// Exact per-partition fused marginals; valid for the Clique and Node
// variants only (tractable partitions).
FrozenTargets agreement_targets(const Workspace& ws, AgreementVariant variant,
                                const AgreementSet& agreement, const WeightSet& weights);

struct ObjectiveValue {
    double total = 0.0;
    double labeled_part = 0.0;
    double agreement_part = 0.0;
    WeightSet gradient;
    std::vector<double> partition_logprobs;
    bool warning = false;
    bool converged = true;
};

// sum_s LL_s(L_s, w_s) + lambda * LL(agreement) with combined gradients.
ObjectiveValue collective_objective(const Workspace& ws, const AgreementSet& agreement,
                                    const WeightSet& weights, double lambda, double gamma,
                                    AgreementVariant variant, const BpConfig& bp);

// Joint max-product decoding on the global fused graph with independently
// trained weights; instances outside every clique fall back to viterbi.
// Result is indexed [source][instance].
std::vector<std::vector<std::vector<int>>> collective_inference_decode(
    const Workspace& ws, const AgreementSet& agreement, const WeightSet& weights,
    const BpConfig& bp);

// Per-instance viterbi decoding for every instance, [source][instance].
std::vector<std::vector<std::vector<int>>> decode_all(const Workspace& ws,
                                                      const WeightSet& weights);

}  // namespace concord
