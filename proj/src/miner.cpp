#include "concord/miner.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "concord/assignment.hpp"
#include "concord/util.hpp"

using nlohmann::json;

namespace concord {

namespace {

std::set<std::string> shingles(const Instance& inst, bool bigrams) {
    std::set<std::string> out;
    if (bigrams) {
        for (std::size_t i = 0; i + 1 < inst.tokens.size(); ++i)
            out.insert(inst.tokens[i] + "\x1f" + inst.tokens[i + 1]);
    } else {
        out.insert(inst.tokens.begin(), inst.tokens.end());
    }
    return out;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& x : a) inter += b.count(x);
    std::size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::string lowercase(const std::string& s) {
    std::string out = s;
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

double similarity(const Instance& a, const Instance& b) {
    bool bigram = a.tokens.size() >= 2 && b.tokens.size() >= 2;
    return jaccard(shingles(a, bigram), shingles(b, bigram));
}

std::vector<int> order_sources(const Corpus& corpus) {
    const int S = static_cast<int>(corpus.sources.size());
    if (S == 0) fail("order_sources: corpus has no sources");
    // pairsim(s,t) = mean over instances of s of the best similarity in t
    Table2 pairsim(S, S, 0.0);
    for (int s = 0; s < S; ++s) {
        for (int t = 0; t < S; ++t) {
            if (s == t) continue;
            const auto& is = corpus.sources[s].instances;
            const auto& it = corpus.sources[t].instances;
            double acc = 0.0;
            for (const auto& a : is) {
                double best = 0.0;
                for (const auto& b : it) best = std::max(best, similarity(a, b));
                acc += best;
            }
            pairsim.at(s, t) = is.empty() ? 0.0 : acc / static_cast<double>(is.size());
        }
    }
    std::vector<double> score(S, 0.0);
    for (int s = 0; s < S; ++s) {
        double acc = 0.0;
        for (int t = 0; t < S; ++t)
            if (t != s) acc += pairsim.at(s, t);
        score[s] = S > 1 ? acc / static_cast<double>(S - 1) : 0.0;
    }
    std::vector<int> order(S);
    for (int s = 0; s < S; ++s) order[s] = s;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (score[a] != score[b]) return score[a] > score[b];
        return a < b;
    });
    return order;
}

double ClusterResult::mean_matched_weight() const {
    if (matched_weights.empty()) return 0.0;
    double acc = 0.0;
    for (double w : matched_weights) acc += w;
    return acc / static_cast<double>(matched_weights.size());
}

ClusterResult cluster_instances(const Corpus& corpus, const std::vector<int>& ordering, double tau) {
    if (tau <= 0.0 || tau >= 1.0) fail("cluster_instances: tau must be in (0,1)");
    ClusterResult result;
    auto& clusters = result.clusters.clusters;

    bool first = true;
    for (int s : ordering) {
        const auto& insts = corpus.sources[s].instances;
        const int n = static_cast<int>(insts.size());
        if (first) {
            for (int i = 0; i < n; ++i) clusters.push_back({{s, i}});
            first = false;
            continue;
        }
        const int m = static_cast<int>(clusters.size());
        Table2 weights(n, m, 0.0);
        for (int i = 0; i < n; ++i) {
            for (int c = 0; c < m; ++c) {
                double best = 0.0;
                for (const auto& ref : clusters[c])
                    best = std::max(best, similarity(insts[i], corpus.at(ref)));
                weights.at(i, c) = best >= tau ? best : 0.0;  // sub-threshold edges removed
            }
        }
        std::vector<int> match = max_weight_assignment(weights);
        for (int i = 0; i < n; ++i) {
            if (match[i] >= 0) {
                result.matched_weights.push_back(weights.at(i, match[i]));
                clusters[match[i]].push_back({s, i});
            } else {
                clusters.push_back({{s, i}});
            }
        }
    }
    return result;
}

AgreementSet mine_cliques(const Corpus& corpus, const ClusterSet& clusters, int min_len) {
    if (min_len < 1) fail("mine_cliques: min_len must be >= 1");
    AgreementSet out;
    out.provenance = Provenance::Mined;

    for (const auto& cluster : clusters.clusters) {
        if (cluster.size() < 2) continue;
        // segment tokens -> member index -> leftmost start
        std::map<std::vector<std::string>, std::map<int, int>> occurrences;
        for (int mi = 0; mi < static_cast<int>(cluster.size()); ++mi) {
            const auto& toks = corpus.at(cluster[mi]).tokens;
            const int n = static_cast<int>(toks.size());
            for (int start = 0; start < n; ++start) {
                std::vector<std::string> seg;
                for (int end = start + 1; end <= n; ++end) {
                    seg.push_back(toks[end - 1]);
                    auto& slot = occurrences[seg];
                    auto it = slot.find(mi);
                    if (it == slot.end())
                        slot.emplace(mi, start);
                    else
                        it->second = std::min(it->second, start);
                }
            }
        }
        for (const auto& [seg, occs] : occurrences) {
            if (static_cast<int>(seg.size()) < min_len) continue;
            if (occs.size() < 2) continue;
            const int len = static_cast<int>(seg.size());
            // extensible iff every occurrence has the same neighbor token
            bool left_ext = true, right_ext = true;
            std::string left_tok, right_tok;
            bool left_first = true, right_first = true;
            for (const auto& [mi, start] : occs) {
                const auto& toks = corpus.at(cluster[mi]).tokens;
                if (start == 0) {
                    left_ext = false;
                } else if (left_first) {
                    left_tok = toks[start - 1];
                    left_first = false;
                } else if (toks[start - 1] != left_tok) {
                    left_ext = false;
                }
                if (start + len >= static_cast<int>(toks.size())) {
                    right_ext = false;
                } else if (right_first) {
                    right_tok = toks[start + len];
                    right_first = false;
                } else if (toks[start + len] != right_tok) {
                    right_ext = false;
                }
            }
            if (left_ext || right_ext) continue;
            Clique clique;
            for (const auto& [mi, start] : occs)
                clique.members.push_back({cluster[mi], start, start + len});
            out.cliques.push_back(std::move(clique));
        }
    }
    return out;
}

AgreementSet unigram_cliques(const Corpus& corpus, const std::vector<std::string>& stopwords) {
    std::unordered_set<std::string> stop;
    for (const auto& w : stopwords) stop.insert(lowercase(w));

    struct Occ {
        InstanceRef ref;
        int pos;
    };
    std::map<std::string, std::vector<Occ>> occs;
    for (int s = 0; s < static_cast<int>(corpus.sources.size()); ++s) {
        const auto& insts = corpus.sources[s].instances;
        for (int i = 0; i < static_cast<int>(insts.size()); ++i) {
            const auto& toks = insts[i].tokens;
            for (int p = 0; p < static_cast<int>(toks.size()); ++p) {
                if (stop.count(lowercase(toks[p]))) continue;
                occs[toks[p]].push_back({{s, i}, p});
            }
        }
    }
    AgreementSet out;
    out.provenance = Provenance::Unigram;
    for (const auto& [tok, list] : occs) {
        std::set<InstanceRef> insts;
        std::set<int> sources;
        for (const auto& o : list) {
            insts.insert(o.ref);
            sources.insert(o.ref.source);
        }
        if (insts.size() < 2 || sources.size() < 2) continue;
        Clique clique;
        for (const auto& o : list) clique.members.push_back({o.ref, o.pos, o.pos + 1});
        out.cliques.push_back(std::move(clique));
    }
    return out;
}

const std::vector<std::string>& default_stopwords() {
    static const std::vector<std::string> words = {
        "a",    "an",   "and",  "are",  "as",   "at",    "be",   "but",  "by",   "for",
        "from", "had",  "has",  "have", "he",   "her",   "his",  "if",   "in",   "into",
        "is",   "it",   "its",  "no",   "not",  "of",    "on",   "or",   "our",  "she",
        "so",   "that", "the",  "their", "then", "there", "they", "this", "to",   "was",
        "we",   "were", "what", "when", "which", "who",  "will", "with", "would", "you"};
    return words;
}

NoiseAudit audit_noise(const AgreementSet& agreement, const Corpus& corpus) {
    NoiseAudit audit;
    int noisy_cliques = 0, noisy_positions = 0, total_positions = 0;
    for (const auto& clique : agreement.cliques) {
        bool clique_noisy = false;
        const int len = clique.members.empty() ? 0 : clique.members.front().length();
        for (int off = 0; off < len; ++off) {
            int seen = -1;
            bool disagree = false;
            for (const auto& m : clique.members) {
                const Instance& inst = corpus.at(m.ref);
                if (!inst.gold)
                    fail("audit_noise: instance '" + inst.instance_id + "' has no gold labels");
                int g = (*inst.gold)[m.start + off];
                if (seen < 0)
                    seen = g;
                else if (g != seen)
                    disagree = true;
            }
            ++total_positions;
            if (disagree) {
                ++noisy_positions;
                clique_noisy = true;
            }
        }
        if (clique_noisy) ++noisy_cliques;
    }
    audit.num_cliques = static_cast<int>(agreement.cliques.size());
    audit.num_positions = total_positions;
    audit.clique_noise = audit.num_cliques > 0
                             ? static_cast<double>(noisy_cliques) / audit.num_cliques
                             : 0.0;
    audit.position_noise =
        total_positions > 0 ? static_cast<double>(noisy_positions) / total_positions : 0.0;
    return audit;
}

AgreementSet oracle_filter(const AgreementSet& agreement, const Corpus& corpus) {
    AgreementSet out;
    out.provenance = Provenance::OracleFiltered;
    for (const auto& clique : agreement.cliques) {
        AgreementSet single;
        single.cliques.push_back(clique);
        if (audit_noise(single, corpus).clique_noise == 0.0) out.cliques.push_back(clique);
    }
    return out;
}

MineResult mine_agreement(const Corpus& corpus, const MineConfig& config) {
    MineResult result;
    if (config.scheme == MineScheme::Unigram) {
        result.agreement = unigram_cliques(corpus, default_stopwords());
        return result;
    }
    auto ordering = order_sources(corpus);
    ClusterResult clustered = cluster_instances(corpus, ordering, config.tau);
    result.clusters = clustered.clusters;
    result.mean_matched_weight = clustered.mean_matched_weight();
    if (config.fallback_threshold > 0.0 && result.mean_matched_weight < config.fallback_threshold) {
        result.agreement = unigram_cliques(corpus, default_stopwords());
        result.fell_back = true;
        return result;
    }
    result.agreement = mine_cliques(corpus, result.clusters, config.min_len);
    return result;
}

std::string provenance_name(Provenance p) {
    switch (p) {
        case Provenance::Mined: return "mined";
        case Provenance::Unigram: return "unigram";
        case Provenance::OracleFiltered: return "oracle-filtered";
    }
    return "mined";
}

namespace {
Provenance provenance_from(const std::string& s) {
    if (s == "mined") return Provenance::Mined;
    if (s == "unigram") return Provenance::Unigram;
    if (s == "oracle-filtered") return Provenance::OracleFiltered;
    fail("unknown provenance '" + s + "'");
}
}  // namespace

AgreementSet load_agreement(const std::string& path, const Corpus& corpus) {
    std::ifstream in(path);
    if (!in) fail("cannot open agreement file '" + path + "'");
    json j;
    in >> j;
    AgreementSet out;
    out.provenance = provenance_from(j.value("provenance", "mined"));
    for (const auto& cj : j.at("cliques")) {
        Clique clique;
        for (const auto& mj : cj.at("members")) {
            CliqueMember m;
            m.ref = corpus.resolve(mj.at(0).get<std::string>(), mj.at(1).get<std::string>());
            m.start = mj.at(2).get<int>();
            m.end = mj.at(3).get<int>();
            const Instance& inst = corpus.at(m.ref);
            if (m.start < 0 || m.start >= m.end || m.end > inst.length())
                fail("agreement file: span out of bounds for instance '" + inst.instance_id + "'");
            clique.members.push_back(m);
        }
        if (clique.members.empty()) fail("agreement file: clique with no members");
        out.cliques.push_back(std::move(clique));
    }
    return out;
}

void save_agreement(const AgreementSet& agreement, const Corpus& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write agreement file '" + path + "'");
    json j;
    j["provenance"] = provenance_name(agreement.provenance);
    json cliques = json::array();
    for (const auto& clique : agreement.cliques) {
        json members = json::array();
        for (const auto& m : clique.members) {
            const Instance& inst = corpus.at(m.ref);
            members.push_back({inst.source_id, inst.instance_id, m.start, m.end});
        }
        cliques.push_back({{"members", members}});
    }
    j["cliques"] = cliques;
    out << j.dump(2) << "\n";
}

}  // namespace concord
