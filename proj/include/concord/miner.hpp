#pragma once

#include <string>
#include <vector>

#include "concord/corpus.hpp"

namespace concord {

// A group of (source, instance, span) triples asserted to share labels.
// Member spans have equal length and identical token subsequences when mined.
struct CliqueMember {
    InstanceRef ref;
    int start = 0;
    int end = 0;  // exclusive

    int length() const { return end - start; }
    bool operator==(const CliqueMember&) const = default;
};

struct Clique {
    std::vector<CliqueMember> members;
};

enum class Provenance { Mined, Unigram, OracleFiltered };

struct AgreementSet {
    std::vector<Clique> cliques;
    Provenance provenance = Provenance::Mined;
};

struct ClusterSet {
    std::vector<std::vector<InstanceRef>> clusters;
};

// Jaccard coefficient over token 2-shingles; falls back to unigram sets when
// either instance is shorter than 2 tokens. Symmetric, in [0,1].
double similarity(const Instance& a, const Instance& b);

// Sources sorted descending by mean (over the other sources) of the mean
// best-match similarity between instance sets; ties go to the lower index.
std::vector<int> order_sources(const Corpus& corpus);

struct ClusterResult {
    ClusterSet clusters;
    // weights of accepted matching edges across all stages; empty when no
    // instance ever matched an existing cluster
    std::vector<double> matched_weights;

    double mean_matched_weight() const;
};

// Stagewise clustering of deemed-duplicate instances: the first source seeds
// singleton clusters; each later source is matched to existing clusters by
// maximum-weight bipartite matching with edges below tau removed.
ClusterResult cluster_instances(const Corpus& corpus, const std::vector<int>& ordering, double tau);

// One clique per maximal common token segment (length >= min_len) repeating
// in >= 2 member instances of a cluster; members are all occurrences within
// the cluster, keeping only the leftmost occurrence per instance. A segment
// is maximal when its occurrences cannot all be extended by the same token
// on the left or on the right.
AgreementSet mine_cliques(const Corpus& corpus, const ClusterSet& clusters, int min_len);

// Conventional scheme: one clique per distinct non-stopword token appearing
// in >= 2 instances across >= 2 sources; members are all its occurrences.
AgreementSet unigram_cliques(const Corpus& corpus, const std::vector<std::string>& stopwords);

const std::vector<std::string>& default_stopwords();

// (clique-level, position-level) noise against gold labels.
struct NoiseAudit {
    double clique_noise = 0.0;
    double position_noise = 0.0;
    int num_cliques = 0;
    int num_positions = 0;
};
NoiseAudit audit_noise(const AgreementSet& agreement, const Corpus& corpus);

// Drops every clique whose members disagree on gold labels at any position.
AgreementSet oracle_filter(const AgreementSet& agreement, const Corpus& corpus);

enum class MineScheme { Mined, Unigram };

struct MineConfig {
    MineScheme scheme = MineScheme::Mined;
    double tau = 0.4;
    int min_len = 1;
    // revert to the unigram scheme when the mean matched similarity falls
    // below this; 0 disables the fallback
    double fallback_threshold = 0.5;
};

struct MineResult {
    AgreementSet agreement;
    ClusterSet clusters;
    double mean_matched_weight = 0.0;
    bool fell_back = false;
};

MineResult mine_agreement(const Corpus& corpus, const MineConfig& config);

AgreementSet load_agreement(const std::string& path, const Corpus& corpus);
void save_agreement(const AgreementSet& agreement, const Corpus& corpus, const std::string& path);

std::string provenance_name(Provenance p);

}  // namespace concord
