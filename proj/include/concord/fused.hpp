#pragma once

#include <string>
#include <vector>

#include "concord/chain.hpp"

namespace concord {

// Clique over local instance indices (0..n_instances-1); the objectives
// layer maps corpus-level references onto these.
struct LocalMember {
    int inst = 0;
    int start = 0;
    int end = 0;
};
using LocalClique = std::vector<LocalMember>;

struct FusedNodeOrigin {
    int inst;
    int pos;
};

// One chain edge (pos-1, pos) of a local instance collapsed onto a fused
// edge; flipped means the chain's left endpoint landed on the larger fused
// node id.
struct FusedEdgeOrigin {
    int inst;
    int pos;
    bool flipped;
};

struct FusedEdge {
    int a = 0;  // a < b
    int b = 0;
    std::vector<FusedEdgeOrigin> origins;
};

// Collapsed variable graph over a set of chain instances: pi maps every
// position to its fused node, fused edges collect the chain edges that
// landed on them.
struct FusedGraph {
    int node_count = 0;
    std::vector<int> lengths;                          // per local instance
    std::vector<std::vector<int>> pi;                  // inst -> pos -> fused node
    std::vector<std::vector<FusedNodeOrigin>> node_origins;
    std::vector<FusedEdge> edges;
    std::vector<int> dropped_cliques;  // clique indices rejected (self-loop)

    int total_positions() const;
};

// Union-find closure of all pairwise identifications induced by the cliques.
// A clique whose closure would fuse two adjacent positions of one chain into
// a single node (chain edges carry no single-variable semantics) is dropped
// and recorded in dropped_cliques.
FusedGraph build_fused(const std::vector<int>& lengths, const std::vector<LocalClique>& cliques);

// Every connected component acyclic: |edges| == |nodes| - |components|.
bool is_tree(const FusedGraph& graph);

struct FusedPotentials {
    std::vector<std::vector<double>> node;  // K x L
    std::vector<std::vector<double>> edge;  // |E| x (L*L), row-major (ya, yb)
    int num_labels = 0;
};

// Each fused table is the sum of its originating chain tables (Eq-8-style
// aggregation); chain_pots is indexed by local instance.
FusedPotentials fused_potentials(const FusedGraph& graph,
                                 const std::vector<ChainPotentials>& chain_pots);

struct FusedMarginals {
    double log_z = 0.0;
    std::vector<std::vector<double>> node;  // K x L
    std::vector<std::vector<double>> edge;  // |E| x (L*L)
    bool exact = false;
    bool converged = true;
};

// Exact two-pass sum-product; fails on cyclic graphs.
FusedMarginals tree_sum_product(const FusedGraph& graph, const FusedPotentials& pot);

struct BpConfig {
    int max_iters = 200;
    double damping = 0.5;
    double tol = 1e-6;
};

// Synchronous damped sum-product; log_z is the Bethe free energy with
// counting numbers from fused node degrees. Non-convergence only clears the
// converged flag.
FusedMarginals loopy_bp(const FusedGraph& graph, const FusedPotentials& pot,
                        const BpConfig& config);

// MAP assignment over fused nodes: exact backtracking max-sum on trees,
// damped synchronous max-product elsewhere. Ties toward lower label ids.
std::vector<int> max_product_decode(const FusedGraph& graph, const FusedPotentials& pot,
                                    const BpConfig& config);

// One tree-reweighted step with instances in the role of trees: fused tables
// are split evenly over their origins, each instance's chain is summed out
// under its share, and marginals are averaged back over origins. log_z upper
// bounds the exact fused log partition.
FusedMarginals trw_one_step(const FusedGraph& graph,
                            const std::vector<ChainPotentials>& chain_pots);

// Graphviz debug dump.
std::string to_dot(const FusedGraph& graph);

}  // namespace concord
