#include "concord/objectives.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "concord/parallel.hpp"

namespace concord {

AgreementVariant variant_from_name(const std::string& name) {
    if (name == "clique") return AgreementVariant::Clique;
    if (name == "node") return AgreementVariant::Node;
    if (name == "pair") return AgreementVariant::Pair;
    if (name == "full") return AgreementVariant::Full;
    if (name == "tr1") return AgreementVariant::TR1;
    if (name == "bhattacharyya") return AgreementVariant::BhattacharyyaClique;
    fail("unknown agreement variant '" + name + "'");
}

std::string variant_name(AgreementVariant v) {
    switch (v) {
        case AgreementVariant::Clique: return "clique";
        case AgreementVariant::Node: return "node";
        case AgreementVariant::Pair: return "pair";
        case AgreementVariant::Full: return "full";
        case AgreementVariant::TR1: return "tr1";
        case AgreementVariant::BhattacharyyaClique: return "bhattacharyya";
    }
    return "clique";
}

Workspace::Workspace(const Corpus& corpus, const FeatureTemplate& tmpl)
    : corpus_(&corpus), tmpl_(&tmpl) {
    offsets_.resize(corpus.sources.size(), 0);
    int total = 0;
    for (std::size_t s = 0; s < corpus.sources.size(); ++s) {
        offsets_[s] = total;
        total += static_cast<int>(corpus.sources[s].instances.size());
    }
    features_.resize(total);
    auto refs = corpus.all_instances();
    parallel::parallel_for(refs.size(), [&](std::size_t i) {
        features_[static_cast<std::size_t>(index_of(refs[i]))] =
            InstanceFeatures::build(tmpl, corpus.at(refs[i]));
    });
}

WeightSet Workspace::zero_weights() const {
    return WeightSet(corpus_->sources.size(), ModelWeights(tmpl_->dimension(), 0.0));
}

namespace {

// members of one partition with deduplicated triples
struct Partition {
    std::vector<InstanceRef> instances;  // sorted unique
    std::vector<LocalClique> cliques;    // over local indices into `instances`
};

Clique dedupe_members(const Clique& clique) {
    Clique out;
    for (const auto& m : clique.members) {
        bool dup = false;
        for (const auto& seen : out.members)
            if (seen == m) {
                dup = true;
                break;
            }
        if (!dup) out.members.push_back(m);
    }
    return out;
}

Partition make_partition(const std::vector<const Clique*>& cliques) {
    Partition part;
    std::set<InstanceRef> refs;
    for (const auto* c : cliques)
        for (const auto& m : c->members) refs.insert(m.ref);
    part.instances.assign(refs.begin(), refs.end());
    auto local_of = [&](InstanceRef r) {
        return static_cast<int>(std::lower_bound(part.instances.begin(), part.instances.end(), r) -
                                part.instances.begin());
    };
    for (const auto* c : cliques) {
        LocalClique lc;
        for (const auto& m : c->members) lc.push_back({local_of(m.ref), m.start, m.end});
        part.cliques.push_back(std::move(lc));
    }
    return part;
}

std::vector<Partition> build_partitions(AgreementVariant variant, const AgreementSet& agreement) {
    std::vector<Clique> cliques;
    for (const auto& c : agreement.cliques) cliques.push_back(dedupe_members(c));
    if (variant == AgreementVariant::Node) cliques = expand_node_cliques(cliques);

    std::vector<Partition> parts;
    switch (variant) {
        case AgreementVariant::Clique:
        case AgreementVariant::Node: {
            for (const auto& c : cliques) {
                if (c.members.size() < 2) continue;  // agreement of one member is certain
                parts.push_back(make_partition({&c}));
            }
            break;
        }
        case AgreementVariant::Pair: {
            std::map<std::pair<InstanceRef, InstanceRef>, std::vector<const Clique*>> by_pair;
            for (const auto& c : cliques) {
                std::set<InstanceRef> refs;
                for (const auto& m : c.members) refs.insert(m.ref);
                for (auto it = refs.begin(); it != refs.end(); ++it)
                    for (auto jt = std::next(it); jt != refs.end(); ++jt)
                        by_pair[{*it, *jt}].push_back(&c);
            }
            for (const auto& [pair, shared] : by_pair) {
                // restrict each shared clique to the pair's members
                std::vector<Clique> restricted;
                for (const auto* c : shared) {
                    Clique r;
                    for (const auto& m : c->members)
                        if (m.ref == pair.first || m.ref == pair.second) r.members.push_back(m);
                    restricted.push_back(std::move(r));
                }
                std::vector<const Clique*> ptrs;
                for (const auto& r : restricted) ptrs.push_back(&r);
                parts.push_back(make_partition(ptrs));
            }
            if (!agreement.cliques.empty() && parts.empty())
                fail("pair agreement requested but no instance pair shares a clique");
            break;
        }
        case AgreementVariant::Full: {
            std::vector<const Clique*> ptrs;
            for (const auto& c : cliques)
                if (c.members.size() >= 2) ptrs.push_back(&c);
            if (!ptrs.empty()) parts.push_back(make_partition(ptrs));
            break;
        }
        default:
            fail("build_partitions: variant handled elsewhere");
    }
    return parts;
}

// chain inference shared by every partition touching the instance
struct InstanceInference {
    ChainPotentials pot;
    ChainMarginals marg;
};

struct CoeffTables {
    Table2 node;               // n x L
    std::vector<double> edge;  // (n-1) x L x L

    CoeffTables() = default;
    CoeffTables(int n, int L)
        : node(n, L), edge(n > 1 ? static_cast<std::size_t>(n - 1) * L * L : 0, 0.0) {}

    double& edge_at(int p, int yp, int y, int L) {
        return edge[(static_cast<std::size_t>(p - 1) * L + yp) * L + y];
    }
};

// enumerate labelings of a span: calls fn for each length-sized labeling
template <typename Fn>
void for_each_labeling(int length, int num_labels, Fn&& fn) {
    std::vector<int> lab(length, 0);
    while (true) {
        fn(lab);
        int k = length - 1;
        while (k >= 0 && ++lab[k] == num_labels) {
            lab[k] = 0;
            --k;
        }
        if (k < 0) break;
    }
}

class AgreementEvaluator {
public:
    AgreementEvaluator(const Workspace& ws, const WeightSet& weights, const BpConfig& bp)
        : ws_(ws), weights_(weights), bp_(bp) {}

    // ensures chain inference exists for every instance in refs
    void prepare(const std::vector<InstanceRef>& refs) {
        std::vector<InstanceRef> fresh;
        for (const auto& r : refs)
            if (!slot_.count(r)) {
                slot_.emplace(r, static_cast<int>(participating_.size()) + static_cast<int>(fresh.size()));
                fresh.push_back(r);
            }
        std::size_t base = participating_.size();
        participating_.insert(participating_.end(), fresh.begin(), fresh.end());
        inference_.resize(participating_.size());
        coeff_.resize(participating_.size());
        parallel::parallel_for(fresh.size(), [&](std::size_t i) {
            const InstanceRef r = fresh[i];
            const Instance& inst = ws_.corpus().at(r);
            auto& slot = inference_[base + i];
            slot.pot = compute_potentials(ws_.tmpl(), ws_.features(r), inst.length(),
                                          weights_[r.source]);
            slot.marg = forward_backward(slot.pot);
        });
        for (std::size_t i = 0; i < fresh.size(); ++i) {
            const Instance& inst = ws_.corpus().at(fresh[i]);
            coeff_[base + i] = CoeffTables(inst.length(), ws_.tmpl().num_labels());
        }
    }

    const InstanceInference& inference(InstanceRef r) const { return inference_[slot_.at(r)]; }
    CoeffTables& coeff(InstanceRef r) { return coeff_[slot_.at(r)]; }

    // fused-marginal minus chain-marginal coefficients for one partition
    void accumulate_fused(const Partition& part, const FusedGraph& graph,
                          const FusedMarginals& fm) {
        const int L = ws_.tmpl().num_labels();
        for (std::size_t li = 0; li < part.instances.size(); ++li) {
            const InstanceRef ref = part.instances[li];
            const auto& marg = inference(ref).marg;
            auto& ct = coeff(ref);
            const int n = graph.lengths[li];
            for (int p = 0; p < n; ++p) {
                int k = graph.pi[li][p];
                for (int y = 0; y < L; ++y)
                    ct.node.at(p, y) += fm.node[k][y] - marg.node.at(p, y);
            }
        }
        // chain edges via the fused edge origin lists
        for (std::size_t e = 0; e < graph.edges.size(); ++e) {
            for (const auto& o : graph.edges[e].origins) {
                const InstanceRef ref = part.instances[o.inst];
                const auto& marg = inference(ref).marg;
                auto& ct = coeff(ref);
                for (int yp = 0; yp < L; ++yp)
                    for (int y = 0; y < L; ++y) {
                        double fused = o.flipped
                                           ? fm.edge[e][static_cast<std::size_t>(y) * L + yp]
                                           : fm.edge[e][static_cast<std::size_t>(yp) * L + y];
                        ct.edge_at(o.pos, yp, y, L) += fused - marg.edge_at(o.pos, yp, y, L);
                    }
            }
        }
    }

    // Explicit marginal-product route for a single clique whose fused graph
    // is cyclic (repeated occurrences inside one instance). Returns the
    // clique log-probability and accumulates gradient coefficients.
    double accumulate_explicit(const Clique& clique) {
        const int L = ws_.tmpl().num_labels();
        const int len = clique.members.front().length();
        double states = std::pow(static_cast<double>(L), len);
        if (states > 4096.0)
            fail("clique agreement: span too long for explicit enumeration");

        struct Entry {
            double log_prob;
            ChainMarginals cond;
        };
        std::vector<std::vector<Entry>> per_member(clique.members.size());
        std::vector<double> log_terms;
        for_each_labeling(len, L, [&](const std::vector<int>& lab) {
            double sum = 0.0;
            for (std::size_t m = 0; m < clique.members.size(); ++m) {
                const auto& member = clique.members[m];
                auto cr = constrained_marginals(inference(member.ref).pot, member.start,
                                                member.end, lab);
                sum += cr.log_prob;
                per_member[m].push_back({cr.log_prob, std::move(cr.cond)});
            }
            log_terms.push_back(sum);
        });
        double log_b = log_sum_exp(log_terms);
        for (std::size_t yi = 0; yi < log_terms.size(); ++yi) {
            double w = std::exp(log_terms[yi] - log_b);
            if (w < 1e-300) continue;
            for (std::size_t m = 0; m < clique.members.size(); ++m) {
                const auto& member = clique.members[m];
                const auto& base = inference(member.ref).marg;
                const auto& cond = per_member[m][yi].cond;
                auto& ct = coeff(member.ref);
                const Instance& inst = ws_.corpus().at(member.ref);
                for (int p = 0; p < inst.length(); ++p)
                    for (int y = 0; y < L; ++y)
                        ct.node.at(p, y) += w * (cond.node.at(p, y) - base.node.at(p, y));
                for (int p = 1; p < inst.length(); ++p)
                    for (int yp = 0; yp < L; ++yp)
                        for (int y = 0; y < L; ++y)
                            ct.edge_at(p, yp, y, L) +=
                                w * (cond.edge_at(p, yp, y, L) - base.edge_at(p, yp, y, L));
            }
        }
        return log_b;
    }

    // Bhattacharyya term over one member pair: log sum_y sqrt(Pa(y) Pb(y)).
    double accumulate_bhattacharyya_pair(const CliqueMember& a, const CliqueMember& b) {
        const int L = ws_.tmpl().num_labels();
        const int len = a.length();
        double states = std::pow(static_cast<double>(L), len);
        if (states > 4096.0)
            fail("bhattacharyya agreement: span too long for explicit enumeration");

        struct Entry {
            double log_prob;
            ChainMarginals cond;
        };
        std::vector<Entry> ea, eb;
        std::vector<double> half_logs;
        for_each_labeling(len, L, [&](const std::vector<int>& lab) {
            auto ca = constrained_marginals(inference(a.ref).pot, a.start, a.end, lab);
            auto cb = constrained_marginals(inference(b.ref).pot, b.start, b.end, lab);
            half_logs.push_back(0.5 * (ca.log_prob + cb.log_prob));
            ea.push_back({ca.log_prob, std::move(ca.cond)});
            eb.push_back({cb.log_prob, std::move(cb.cond)});
        });
        double log_b = log_sum_exp(half_logs);
        auto add_side = [&](const CliqueMember& member, const ChainMarginals& cond, double w) {
            const auto& base = inference(member.ref).marg;
            auto& ct = coeff(member.ref);
            const Instance& inst = ws_.corpus().at(member.ref);
            for (int p = 0; p < inst.length(); ++p)
                for (int y = 0; y < L; ++y)
                    ct.node.at(p, y) += w * (cond.node.at(p, y) - base.node.at(p, y));
            for (int p = 1; p < inst.length(); ++p)
                for (int yp = 0; yp < L; ++yp)
                    for (int y = 0; y < L; ++y)
                        ct.edge_at(p, yp, y, L) +=
                            w * (cond.edge_at(p, yp, y, L) - base.edge_at(p, yp, y, L));
        };
        for (std::size_t yi = 0; yi < half_logs.size(); ++yi) {
            double w = 0.5 * std::exp(half_logs[yi] - log_b);
            if (w < 1e-300) continue;
            add_side(a, ea[yi].cond, w);
            add_side(b, eb[yi].cond, w);
        }
        return log_b;
    }

    // frozen-target coefficients (EM M-step): target marginal minus current
    void accumulate_frozen(const Partition& part, const FusedGraph& graph,
                           const FusedMarginals& frozen) {
        accumulate_fused(part, graph, frozen);
    }

    // featurize accumulated coefficients into per-source gradients
    void finalize_gradient(WeightSet& grad) const {
        const int L = ws_.tmpl().num_labels();
        for (std::size_t i = 0; i < participating_.size(); ++i) {
            const InstanceRef ref = participating_[i];
            const auto& feats = ws_.features(ref);
            auto& g = grad[ref.source];
            const auto& ct = coeff_[i];
            const Instance& inst = ws_.corpus().at(ref);
            for (int p = 0; p < inst.length(); ++p) {
                for (int base : feats.keys[p]) {
                    double* dst = g.data() + ws_.tmpl().node_feature(base, 0);
                    for (int y = 0; y < L; ++y) dst[y] += ct.node.at(p, y);
                }
            }
            for (int p = 1; p < inst.length(); ++p)
                for (int yp = 0; yp < L; ++yp)
                    for (int y = 0; y < L; ++y)
                        g[ws_.tmpl().transition_feature(yp, y)] +=
                            ct.edge[(static_cast<std::size_t>(p - 1) * L + yp) * L + y];
        }
    }

    double base_log_z(InstanceRef r) const { return inference(r).marg.log_z; }

    std::vector<ChainPotentials> partition_potentials(const Partition& part) const {
        std::vector<ChainPotentials> pots;
        pots.reserve(part.instances.size());
        for (const auto& ref : part.instances) pots.push_back(inference(ref).pot);
        return pots;
    }

    const BpConfig& bp() const { return bp_; }
    const Workspace& ws() const { return ws_; }

private:
    const Workspace& ws_;
    const WeightSet& weights_;
    BpConfig bp_;
    std::map<InstanceRef, int> slot_;
    std::vector<InstanceRef> participating_;
    std::vector<InstanceInference> inference_;
    std::vector<CoeffTables> coeff_;
};

std::vector<int> partition_lengths(const Workspace& ws, const Partition& part) {
    std::vector<int> lengths;
    lengths.reserve(part.instances.size());
    for (const auto& ref : part.instances) lengths.push_back(ws.corpus().at(ref).length());
    return lengths;
}

}  // namespace

std::vector<Clique> expand_node_cliques(const std::vector<Clique>& cliques) {
    std::vector<Clique> out;
    for (const auto& c : cliques) {
        if (c.members.empty()) continue;
        const int len = c.members.front().length();
        for (int off = 0; off < len; ++off) {
            Clique unit;
            for (const auto& m : c.members)
                unit.members.push_back({m.ref, m.start + off, m.start + off + 1});
            out.push_back(dedupe_members(unit));
        }
    }
    return out;
}

AgreementResult agreement_ll(const Workspace& ws, AgreementVariant variant,
                             const AgreementSet& agreement, const WeightSet& weights,
                             const BpConfig& bp) {
    AgreementResult result;
    result.grad = ws.zero_weights();
    if (agreement.cliques.empty()) return result;

    AgreementEvaluator ev(ws, weights, bp);

    if (variant == AgreementVariant::TR1) {
        std::vector<const Clique*> ptrs;
        std::vector<Clique> deduped;
        for (const auto& c : agreement.cliques) deduped.push_back(dedupe_members(c));
        for (const auto& c : deduped)
            if (c.members.size() >= 2) ptrs.push_back(&c);
        if (ptrs.empty()) return result;
        Partition part = make_partition(ptrs);
        ev.prepare(part.instances);
        FusedGraph graph = build_fused(partition_lengths(ws, part), part.cliques);
        FusedMarginals fm = trw_one_step(graph, ev.partition_potentials(part));
        double value = fm.log_z;
        for (const auto& ref : part.instances) value -= ev.base_log_z(ref);
        ev.accumulate_fused(part, graph, fm);
        result.value = value;
        result.partition_logprobs.push_back(value);
        result.warning = value > 0.0;
        ev.finalize_gradient(result.grad);
        return result;
    }

    if (variant == AgreementVariant::BhattacharyyaClique) {
        std::vector<InstanceRef> refs;
        for (const auto& c : agreement.cliques)
            for (const auto& m : c.members) refs.push_back(m.ref);
        ev.prepare(refs);
        for (const auto& raw : agreement.cliques) {
            Clique c = dedupe_members(raw);
            for (std::size_t i = 0; i < c.members.size(); ++i)
                for (std::size_t j = i + 1; j < c.members.size(); ++j) {
                    double lp = ev.accumulate_bhattacharyya_pair(c.members[i], c.members[j]);
                    result.value += lp;
                    result.partition_logprobs.push_back(lp);
                }
        }
        ev.finalize_gradient(result.grad);
        return result;
    }

    std::vector<Partition> parts = build_partitions(variant, agreement);
    if (parts.empty()) return result;

    std::vector<InstanceRef> all_refs;
    for (const auto& p : parts)
        all_refs.insert(all_refs.end(), p.instances.begin(), p.instances.end());
    ev.prepare(all_refs);

    // fused inference per partition, then a serial reduction in fixed order
    struct PartEval {
        FusedGraph graph;
        FusedMarginals fm;
        bool explicit_route = false;
        double value = 0.0;
    };
    std::vector<PartEval> evals(parts.size());
    parallel::parallel_for(parts.size(), [&](std::size_t pi) {
        const Partition& part = parts[pi];
        PartEval& pe = evals[pi];
        pe.graph = build_fused(partition_lengths(ws, part), part.cliques);
        bool tree = is_tree(pe.graph);
        if (!tree && part.cliques.size() == 1) {
            pe.explicit_route = true;  // repeated spans inside one instance
            return;
        }
        FusedPotentials fpot = fused_potentials(pe.graph, ev.partition_potentials(part));
        pe.fm = tree ? tree_sum_product(pe.graph, fpot) : loopy_bp(pe.graph, fpot, bp);
        pe.value = pe.fm.log_z;
        for (const auto& ref : part.instances) pe.value -= ev.base_log_z(ref);
    });

    for (std::size_t pi = 0; pi < parts.size(); ++pi) {
        const Partition& part = parts[pi];
        PartEval& pe = evals[pi];
        if (pe.explicit_route) {
            // rebuild the corpus-level clique for the enumeration route
            Clique clique;
            for (const auto& m : part.cliques.front())
                clique.members.push_back({part.instances[m.inst], m.start, m.end});
            pe.value = ev.accumulate_explicit(clique);
        } else {
            ev.accumulate_fused(part, pe.graph, pe.fm);
            if (!pe.fm.converged) result.converged = false;
        }
        result.value += pe.value;
        result.partition_logprobs.push_back(pe.value);
    }
    ev.finalize_gradient(result.grad);

    if (variant == AgreementVariant::Pair || variant == AgreementVariant::Full)
        result.warning = result.value > 0.0;
    return result;
}

FrozenTargets agreement_targets(const Workspace& ws, AgreementVariant variant,
                                const AgreementSet& agreement, const WeightSet& weights) {
    if (variant != AgreementVariant::Clique && variant != AgreementVariant::Node)
        fail("agreement_targets: only the clique and node variants have tractable partitions");
    const int L = ws.tmpl().num_labels();
    FrozenTargets out;
    if (agreement.cliques.empty()) return out;

    std::vector<Partition> parts = build_partitions(variant, agreement);
    if (parts.empty()) return out;

    AgreementEvaluator ev(ws, weights, BpConfig{});
    std::map<InstanceRef, int> slot;
    auto slot_of = [&](InstanceRef r) {
        auto it = slot.find(r);
        if (it != slot.end()) return it->second;
        int idx = static_cast<int>(out.instances.size());
        slot.emplace(r, idx);
        out.instances.push_back(r);
        const int n = ws.corpus().at(r).length();
        out.node.emplace_back(n, L);
        out.edge.emplace_back(n > 1 ? static_cast<std::size_t>(n - 1) * L * L : 0, 0.0);
        out.multiplicity.push_back(0);
        return idx;
    };

    for (const auto& part : parts) {
        ev.prepare(part.instances);
        FusedGraph graph = build_fused(partition_lengths(ws, part), part.cliques);
        if (is_tree(graph)) {
            for (const auto& ref : part.instances) ++out.multiplicity[slot_of(ref)];
            FusedPotentials fpot = fused_potentials(graph, ev.partition_potentials(part));
            FusedMarginals fm = tree_sum_product(graph, fpot);
            for (std::size_t li = 0; li < part.instances.size(); ++li) {
                int idx = slot_of(part.instances[li]);
                for (int p = 0; p < graph.lengths[li]; ++p)
                    for (int y = 0; y < L; ++y)
                        out.node[idx].at(p, y) += fm.node[graph.pi[li][p]][y];
            }
            for (std::size_t e = 0; e < graph.edges.size(); ++e) {
                for (const auto& o : graph.edges[e].origins) {
                    int idx = slot_of(part.instances[o.inst]);
                    for (int yp = 0; yp < L; ++yp)
                        for (int y = 0; y < L; ++y)
                            out.edge[idx][(static_cast<std::size_t>(o.pos - 1) * L + yp) * L + y] +=
                                o.flipped ? fm.edge[e][static_cast<std::size_t>(y) * L + yp]
                                          : fm.edge[e][static_cast<std::size_t>(yp) * L + y];
                }
            }
        } else {
            // cyclic single-clique partition: exact targets by enumeration
            const auto& lc = part.cliques.front();
            const int len = lc.front().end - lc.front().start;
            double states = std::pow(static_cast<double>(L), len);
            if (states > 4096.0) fail("agreement_targets: span too long for enumeration");
            struct Entry {
                double log_prob;
                ChainMarginals cond;
            };
            std::vector<std::vector<Entry>> per_member(lc.size());
            std::vector<double> log_terms;
            for_each_labeling(len, L, [&](const std::vector<int>& lab) {
                double sum = 0.0;
                for (std::size_t m = 0; m < lc.size(); ++m) {
                    const InstanceRef ref = part.instances[lc[m].inst];
                    auto cr = constrained_marginals(ev.inference(ref).pot, lc[m].start, lc[m].end,
                                                    lab);
                    sum += cr.log_prob;
                    per_member[m].push_back({cr.log_prob, std::move(cr.cond)});
                }
                log_terms.push_back(sum);
            });
            double log_b = log_sum_exp(log_terms);
            // The product form treats every member occurrence as its own
            // replica of the chain, so targets and -log Z counts are per
            // member, conditioned only on that member's span.
            for (std::size_t m = 0; m < lc.size(); ++m) {
                const InstanceRef ref = part.instances[lc[m].inst];
                int idx = slot_of(ref);
                ++out.multiplicity[idx];
                const int n = ws.corpus().at(ref).length();
                for (std::size_t yi = 0; yi < log_terms.size(); ++yi) {
                    double w = std::exp(log_terms[yi] - log_b);
                    if (w < 1e-300) continue;
                    const auto& cond = per_member[m][yi].cond;
                    for (int p = 0; p < n; ++p)
                        for (int y = 0; y < L; ++y)
                            out.node[idx].at(p, y) += w * cond.node.at(p, y);
                    for (int p = 1; p < n; ++p)
                        for (int yp = 0; yp < L; ++yp)
                            for (int y = 0; y < L; ++y)
                                out.edge[idx][(static_cast<std::size_t>(p - 1) * L + yp) * L + y] +=
                                    w * cond.edge_at(p, yp, y, L);
                }
            }
        }
    }
    return out;
}

double clique_agreement_logprob(const Workspace& ws, const Clique& clique,
                                const WeightSet& weights) {
    AgreementSet single;
    single.cliques.push_back(clique);
    return agreement_ll(ws, AgreementVariant::Clique, single, weights, BpConfig{}).value;
}

ObjectiveValue collective_objective(const Workspace& ws, const AgreementSet& agreement,
                                    const WeightSet& weights, double lambda, double gamma,
                                    AgreementVariant variant, const BpConfig& bp) {
    if (lambda < 0) fail("collective_objective: lambda must be >= 0");
    ObjectiveValue out;
    out.gradient = ws.zero_weights();

    for (int s = 0; s < ws.num_sources(); ++s) {
        std::vector<const Instance*> insts;
        std::vector<const InstanceFeatures*> feats;
        for (const auto& ref : ws.corpus().labeled_of(s)) {
            insts.push_back(&ws.corpus().at(ref));
            feats.push_back(&ws.features(ref));
        }
        LabeledObjective lo = labeled_objective(ws.tmpl(), insts, feats, weights[s], gamma);
        out.labeled_part += lo.value;
        for (std::size_t k = 0; k < lo.grad.size(); ++k) out.gradient[s][k] += lo.grad[k];
    }

    if (lambda > 0.0 && !agreement.cliques.empty()) {
        AgreementResult ar = agreement_ll(ws, variant, agreement, weights, bp);
        out.agreement_part = ar.value;
        out.partition_logprobs = std::move(ar.partition_logprobs);
        out.warning = ar.warning;
        out.converged = ar.converged;
        for (int s = 0; s < ws.num_sources(); ++s)
            for (std::size_t k = 0; k < out.gradient[s].size(); ++k)
                out.gradient[s][k] += lambda * ar.grad[s][k];
    }
    out.total = out.labeled_part + lambda * out.agreement_part;
    return out;
}

std::vector<std::vector<std::vector<int>>> decode_all(const Workspace& ws,
                                                      const WeightSet& weights) {
    std::vector<std::vector<std::vector<int>>> out(ws.num_sources());
    for (int s = 0; s < ws.num_sources(); ++s)
        out[s].resize(ws.corpus().sources[s].instances.size());
    auto refs = ws.corpus().all_instances();
    parallel::parallel_for(refs.size(), [&](std::size_t i) {
        const InstanceRef r = refs[i];
        ChainPotentials pot = compute_potentials(ws.tmpl(), ws.features(r),
                                                 ws.corpus().at(r).length(), weights[r.source]);
        out[r.source][r.instance] = viterbi(pot);
    });
    return out;
}

std::vector<std::vector<std::vector<int>>> collective_inference_decode(
    const Workspace& ws, const AgreementSet& agreement, const WeightSet& weights,
    const BpConfig& bp) {
    auto out = decode_all(ws, weights);
    std::vector<const Clique*> ptrs;
    std::vector<Clique> deduped;
    for (const auto& c : agreement.cliques) deduped.push_back(dedupe_members(c));
    for (const auto& c : deduped)
        if (c.members.size() >= 2) ptrs.push_back(&c);
    if (ptrs.empty()) return out;

    Partition part = make_partition(ptrs);
    std::vector<ChainPotentials> pots(part.instances.size());
    parallel::parallel_for(part.instances.size(), [&](std::size_t i) {
        const InstanceRef r = part.instances[i];
        pots[i] = compute_potentials(ws.tmpl(), ws.features(r), ws.corpus().at(r).length(),
                                     weights[r.source]);
    });
    FusedGraph graph = build_fused(partition_lengths(ws, part), part.cliques);
    FusedPotentials fpot = fused_potentials(graph, pots);
    std::vector<int> assignment = max_product_decode(graph, fpot, bp);
    for (std::size_t li = 0; li < part.instances.size(); ++li) {
        const InstanceRef r = part.instances[li];
        auto& labels = out[r.source][r.instance];
        for (int p = 0; p < static_cast<int>(labels.size()); ++p)
            labels[p] = assignment[graph.pi[li][p]];
    }
    return out;
}

}  // namespace concord
