#include <doctest.h>

#include <map>
#include <set>

#include "concord/objectives.hpp"
#include "oracles.hpp"

using namespace concord;

namespace {

// toy with two sources x one instance each plus a clique set over them
struct AgreementToy {
    oracle::Toy toy;
    AgreementSet agreement;
    WeightSet weights;

    Workspace workspace() const { return Workspace(toy.corpus, toy.tmpl); }

    // potentials per member, aligned with the given refs
    std::vector<ChainPotentials> potentials(const std::vector<InstanceRef>& refs) const {
        std::vector<ChainPotentials> pots;
        for (const auto& r : refs)
            pots.push_back(compute_potentials(toy.tmpl, toy.corpus.at(r), weights[r.source]));
        return pots;
    }
};

AgreementToy make_pair_toy(Rng& rng, int len_a, int len_b, int labels,
                           const std::vector<std::tuple<int, int, int>>& spans,
                           double scale = 0.5) {
    // spans: (start_a, start_b, length)
    AgreementToy at;
    at.toy = oracle::Toy::make(rng, {{len_a}, {len_b}}, labels);
    for (const auto& [sa, sb, len] : spans) {
        Clique c;
        c.members.push_back({{0, 0}, sa, sa + len});
        c.members.push_back({{1, 0}, sb, sb + len});
        at.agreement.cliques.push_back(c);
    }
    at.weights = at.toy.random_weights(rng, scale);
    return at;
}

double variant_value(const Workspace& ws, AgreementVariant v, const AgreementSet& a,
                     const WeightSet& w) {
    BpConfig bp;
    bp.tol = 1e-10;
    bp.max_iters = 2000;
    return agreement_ll(ws, v, a, w, bp).value;
}

// defining quantity of each partition, enumerated independently
double oracle_value(const AgreementToy& at, AgreementVariant variant) {
    std::vector<Clique> cliques = at.agreement.cliques;
    if (variant == AgreementVariant::Node) cliques = expand_node_cliques(cliques);

    auto enumerate_partition = [&](const std::vector<Clique>& cs) {
        std::set<InstanceRef> refs;
        for (const auto& c : cs)
            for (const auto& m : c.members) refs.insert(m.ref);
        std::vector<InstanceRef> order(refs.begin(), refs.end());
        std::vector<ChainPotentials> pots = at.potentials(order);
        auto local = [&](InstanceRef r) {
            return static_cast<int>(std::lower_bound(order.begin(), order.end(), r) -
                                    order.begin());
        };
        std::vector<LocalClique> lcs;
        for (const auto& c : cs) {
            LocalClique lc;
            for (const auto& m : c.members) lc.push_back({local(m.ref), m.start, m.end});
            lcs.push_back(lc);
        }
        return oracle::enumerate_agreement_logprob(pots, lcs);
    };

    switch (variant) {
        case AgreementVariant::Clique:
        case AgreementVariant::Node: {
            double acc = 0.0;
            for (const auto& c : cliques)
                if (c.members.size() >= 2) acc += enumerate_partition({c});
            return acc;
        }
        case AgreementVariant::Full:
            return enumerate_partition(cliques);
        case AgreementVariant::Pair: {
            std::map<std::pair<InstanceRef, InstanceRef>, std::vector<Clique>> by_pair;
            for (const auto& c : cliques) {
                std::set<InstanceRef> refs;
                for (const auto& m : c.members) refs.insert(m.ref);
                for (auto it = refs.begin(); it != refs.end(); ++it)
                    for (auto jt = std::next(it); jt != refs.end(); ++jt) {
                        Clique restricted;
                        for (const auto& m : c.members)
                            if (m.ref == *it || m.ref == *jt) restricted.members.push_back(m);
                        by_pair[{*it, *jt}].push_back(restricted);
                    }
            }
            double acc = 0.0;
            for (const auto& [pair, cs] : by_pair) acc += enumerate_partition(cs);
            return acc;
        }
        default:
            FAIL("unsupported oracle variant");
            return 0.0;
    }
}

void check_gradient(const AgreementToy& at, AgreementVariant variant, double tol = 1e-4) {
    Workspace ws = at.workspace();
    BpConfig bp;
    bp.tol = 1e-12;
    bp.max_iters = 4000;
    AgreementResult ar = agreement_ll(ws, variant, at.agreement, at.weights, bp);

    std::vector<double> flat;
    for (const auto& w : at.weights) flat.insert(flat.end(), w.begin(), w.end());
    const std::size_t dim = at.weights[0].size();
    auto value_at = [&](const std::vector<double>& x) {
        WeightSet w = at.weights;
        for (std::size_t s = 0; s < w.size(); ++s)
            std::copy(x.begin() + s * dim, x.begin() + (s + 1) * dim, w[s].begin());
        return agreement_ll(ws, variant, at.agreement, w, bp).value;
    };
    auto fd = oracle::finite_difference(value_at, flat);
    std::vector<double> analytic;
    for (const auto& g : ar.grad) analytic.insert(analytic.end(), g.begin(), g.end());
    INFO("variant ", variant_name(variant));
    CHECK(oracle::rel_err(analytic, fd) < tol);
}

}  // namespace

TEST_CASE("empty agreement set: value 0, zero gradient") {
    Rng rng(3);
    AgreementToy at = make_pair_toy(rng, 3, 3, 2, {});
    Workspace ws = at.workspace();
    AgreementResult ar = agreement_ll(ws, AgreementVariant::Clique, at.agreement, at.weights, {});
    CHECK(ar.value == 0.0);
    for (const auto& g : ar.grad)
        for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("singleton-member cliques contribute exactly zero") {
    Rng rng(4);
    AgreementToy at = make_pair_toy(rng, 3, 3, 2, {});
    Clique c;
    c.members.push_back({{0, 0}, 0, 2});
    at.agreement.cliques.push_back(c);
    Workspace ws = at.workspace();
    for (auto v : {AgreementVariant::Clique, AgreementVariant::Node}) {
        AgreementResult ar = agreement_ll(ws, v, at.agreement, at.weights, {});
        CHECK(ar.value == 0.0);
    }
}

TEST_CASE("clique agreement equals the Eq-10 marginal-product sum") {
    Rng rng(17);
    for (int trial = 0; trial < 8; ++trial) {
        int len = 1 + static_cast<int>(rng.next_int(0, 2));  // span length <= 3
        AgreementToy at;
        at.toy = oracle::Toy::make(rng, {{5}, {5}, {5}}, 2);
        at.weights = at.toy.random_weights(rng, 0.6);
        Clique c;
        c.members.push_back({{0, 0}, 0, len});
        c.members.push_back({{1, 0}, 1, 1 + len});
        c.members.push_back({{2, 0}, 2, 2 + len});
        at.agreement.cliques.push_back(c);

        Workspace ws = at.workspace();
        double tree_value = clique_agreement_logprob(ws, c, at.weights);

        // explicit product-sum with library segment marginals
        double direct;
        {
            auto pots = at.potentials({{0, 0}, {1, 0}, {2, 0}});
            double sum = 0.0;
            for (const auto& lab : oracle::all_labelings(len, 2)) {
                double prod = 1.0;
                for (std::size_t m = 0; m < c.members.size(); ++m) {
                    const auto& mb = c.members[m];
                    prod *= segment_marginal(pots[m], mb.start, mb.end, lab);
                }
                sum += prod;
            }
            direct = std::log(sum);
        }
        CHECK(tree_value == doctest::Approx(direct).epsilon(1e-8));
        CHECK(tree_value <= 1e-12);
    }
}

TEST_CASE("two length-1 members with known marginals: log(0.56)") {
    // binary labels; engineer node potentials for marginals (0.8,0.2), (0.6,0.4)
    AgreementToy at;
    Rng rng(23);
    at.toy = oracle::Toy::make(rng, {{1}, {1}}, 2);
    at.weights = WeightSet(2, ModelWeights(at.toy.tmpl.dimension(), 0.0));
    Clique c;
    c.members.push_back({{0, 0}, 0, 1});
    c.members.push_back({{1, 0}, 0, 1});
    at.agreement.cliques.push_back(c);

    auto set_marginal = [&](int source, double p0) {
        const Instance& inst = at.toy.corpus.sources[source].instances[0];
        auto keys = at.toy.tmpl.base_ids_at(inst, 0);
        at.weights[source][at.toy.tmpl.node_feature(keys[0], 0)] = std::log(p0 / (1 - p0));
    };
    set_marginal(0, 0.8);
    set_marginal(1, 0.6);
    Workspace ws = at.workspace();
    double v = agreement_ll(ws, AgreementVariant::Clique, at.agreement, at.weights, {}).value;
    CHECK(v == doctest::Approx(std::log(0.8 * 0.6 + 0.2 * 0.4)).epsilon(1e-9));
}

TEST_CASE("every variant matches its own defining quantity on seeded toys") {
    Rng rng(2024);
    int done = 0;
    for (int trial = 0; done < 12; ++trial) {
        int len = 3 + static_cast<int>(rng.next_int(0, 1));
        int span = 1 + static_cast<int>(rng.next_int(0, 1));
        AgreementToy at = make_pair_toy(
            rng, len, len, 2,
            {{static_cast<int>(rng.next_int(0, len - span)),
              static_cast<int>(rng.next_int(0, len - span)), span},
             {static_cast<int>(rng.next_int(0, len - 1)),
              static_cast<int>(rng.next_int(0, len - 1)), 1}});
        {
            // conflicting overlaps get dropped at fusion time; keep the
            // enumeration oracle's constraint set identical by skipping them
            std::vector<LocalClique> lcs;
            for (const auto& c : at.agreement.cliques) {
                LocalClique lc;
                for (const auto& m : c.members) lc.push_back({m.ref.source, m.start, m.end});
                lcs.push_back(lc);
            }
            if (!build_fused({len, len}, lcs).dropped_cliques.empty()) continue;
        }
        ++done;
        Workspace ws = at.workspace();
        for (auto v : {AgreementVariant::Clique, AgreementVariant::Node, AgreementVariant::Pair,
                       AgreementVariant::Full}) {
            double got = variant_value(ws, v, at.agreement, at.weights);
            double want = oracle_value(at, v);
            INFO("variant ", variant_name(v), " trial ", trial);
            if (v == AgreementVariant::Clique || v == AgreementVariant::Node) {
                CHECK(got == doctest::Approx(want).epsilon(1e-8));
                CHECK(got <= 1e-12);
            } else {
                // Pair/Full go through BP when the fused graph has cycles
                CHECK(got == doctest::Approx(want).epsilon(0.05));
            }
        }
    }
}

TEST_CASE("node variant: length-1 cliques coincide with clique variant") {
    Rng rng(31);
    AgreementToy at = make_pair_toy(rng, 3, 3, 2, {{0, 2, 1}, {2, 0, 1}});
    Workspace ws = at.workspace();
    double c = variant_value(ws, AgreementVariant::Clique, at.agreement, at.weights);
    double n = variant_value(ws, AgreementVariant::Node, at.agreement, at.weights);
    CHECK(c == doctest::Approx(n).epsilon(1e-12));
}

TEST_CASE("node variant decomposes a length-3 clique into 3 position terms") {
    Rng rng(37);
    AgreementToy at = make_pair_toy(rng, 4, 4, 2, {{0, 1, 3}});
    Workspace ws = at.workspace();
    AgreementResult node = agreement_ll(ws, AgreementVariant::Node, at.agreement, at.weights, {});
    CHECK(node.partition_logprobs.size() == 3);

    // ablation additivity: dropping one position's term changes the value by
    // exactly that term
    auto expanded = expand_node_cliques(at.agreement.cliques);
    AgreementSet ablated;
    ablated.cliques = {expanded[0], expanded[2]};
    double without_mid = agreement_ll(ws, AgreementVariant::Clique, ablated, at.weights, {}).value;
    CHECK(node.value - node.partition_logprobs[1] == doctest::Approx(without_mid).epsilon(1e-10));
}

TEST_CASE("pair variant: single shared clique equals the clique term") {
    Rng rng(41);
    AgreementToy at = make_pair_toy(rng, 4, 4, 2, {{1, 2, 2}});
    Workspace ws = at.workspace();
    double pair = variant_value(ws, AgreementVariant::Pair, at.agreement, at.weights);
    double clique = variant_value(ws, AgreementVariant::Clique, at.agreement, at.weights);
    CHECK(pair == doctest::Approx(clique).epsilon(1e-10));
}

TEST_CASE("pair variant fails when no instance pair shares a clique") {
    Rng rng(43);
    AgreementToy at = make_pair_toy(rng, 3, 3, 2, {});
    Clique lonely;
    lonely.members.push_back({{0, 0}, 0, 1});
    at.agreement.cliques.push_back(lonely);
    Workspace ws = at.workspace();
    CHECK_THROWS(agreement_ll(ws, AgreementVariant::Pair, at.agreement, at.weights, {}));
}

TEST_CASE("TR1: no fusion means exactly zero; upper bound on trees") {
    Rng rng(47);
    {
        AgreementToy at = make_pair_toy(rng, 3, 3, 2, {});
        Clique lonely;
        lonely.members.push_back({{0, 0}, 0, 2});
        at.agreement.cliques.push_back(lonely);
        Workspace ws = at.workspace();
        CHECK(agreement_ll(ws, AgreementVariant::TR1, at.agreement, at.weights, {}).value == 0.0);
    }
    for (int trial = 0; trial < 10; ++trial) {
        int span = 1 + static_cast<int>(rng.next_int(0, 1));
        AgreementToy at = make_pair_toy(rng, 4, 4, 2,
                                        {{static_cast<int>(rng.next_int(0, 4 - span)),
                                          static_cast<int>(rng.next_int(0, 4 - span)), span}});
        Workspace ws = at.workspace();
        double tr1 = variant_value(ws, AgreementVariant::TR1, at.agreement, at.weights);
        double exact = variant_value(ws, AgreementVariant::Full, at.agreement, at.weights);
        CHECK(tr1 >= exact - 1e-9);
    }
}

TEST_CASE("full variant on a tree-fusable case matches enumeration") {
    Rng rng(53);
    AgreementToy at = make_pair_toy(rng, 3, 3, 3, {{0, 2, 1}});
    Workspace ws = at.workspace();
    double got = variant_value(ws, AgreementVariant::Full, at.agreement, at.weights);
    CHECK(got == doctest::Approx(oracle_value(at, AgreementVariant::Full)).epsilon(1e-8));
}

TEST_CASE("gradients: every variant matches central finite differences") {
    Rng rng(6001);
    for (int trial = 0; trial < 4; ++trial) {
        int span = 1 + static_cast<int>(rng.next_int(0, 1));
        AgreementToy at = make_pair_toy(rng, 4, 4, 2,
                                        {{static_cast<int>(rng.next_int(0, 4 - span)),
                                          static_cast<int>(rng.next_int(0, 4 - span)), span},
                                         {static_cast<int>(rng.next_int(0, 3)),
                                          static_cast<int>(rng.next_int(0, 3)), 1}});
        for (auto v : {AgreementVariant::Clique, AgreementVariant::Node, AgreementVariant::Pair,
                       AgreementVariant::Full, AgreementVariant::TR1,
                       AgreementVariant::BhattacharyyaClique}) {
            check_gradient(at, v);
        }
    }
}

TEST_CASE("bhattacharyya: peaked-identical at maximum, flatter than agreement") {
    // P = (1,0) vs Q = (0.5,0.5): bhattacharyya log sqrt(0.5), agreement log 0.5
    AgreementToy at;
    Rng rng(67);
    at.toy = oracle::Toy::make(rng, {{1}, {1}}, 2);
    at.weights = WeightSet(2, ModelWeights(at.toy.tmpl.dimension(), 0.0));
    Clique c;
    c.members.push_back({{0, 0}, 0, 1});
    c.members.push_back({{1, 0}, 0, 1});
    at.agreement.cliques.push_back(c);
    const Instance& inst0 = at.toy.corpus.sources[0].instances[0];
    auto keys = at.toy.tmpl.base_ids_at(inst0, 0);
    at.weights[0][at.toy.tmpl.node_feature(keys[0], 0)] = 30.0;

    Workspace ws = at.workspace();
    double bhat =
        agreement_ll(ws, AgreementVariant::BhattacharyyaClique, at.agreement, at.weights, {})
            .value;
    double agree = agreement_ll(ws, AgreementVariant::Clique, at.agreement, at.weights, {}).value;
    CHECK(bhat == doctest::Approx(std::log(std::sqrt(0.5))).epsilon(1e-6));
    CHECK(agree == doctest::Approx(std::log(0.5)).epsilon(1e-6));
    CHECK(bhat > agree);

    // identical peaked marginals: term ~ 0 (its maximum)
    const Instance& inst1 = at.toy.corpus.sources[1].instances[0];
    auto keys1 = at.toy.tmpl.base_ids_at(inst1, 0);
    at.weights[1][at.toy.tmpl.node_feature(keys1[0], 0)] = 30.0;
    double peaked =
        agreement_ll(ws, AgreementVariant::BhattacharyyaClique, at.agreement, at.weights, {})
            .value;
    CHECK(peaked == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("clique value stays a log-probability under within-instance repeats") {
    // one instance holds the span twice at distance >= 3: cyclic fused graph,
    // explicit enumeration route
    Rng rng(71);
    AgreementToy at;
    at.toy = oracle::Toy::make(rng, {{5}, {3}}, 2);
    at.weights = at.toy.random_weights(rng, 0.8);
    Clique c;
    c.members.push_back({{0, 0}, 0, 1});
    c.members.push_back({{0, 0}, 4, 5});
    c.members.push_back({{1, 0}, 1, 2});
    at.agreement.cliques.push_back(c);
    Workspace ws = at.workspace();
    AgreementResult ar = agreement_ll(ws, AgreementVariant::Clique, at.agreement, at.weights, {});
    CHECK(ar.value <= 1e-12);
    CHECK(std::isfinite(ar.value));
    check_gradient(at, AgreementVariant::Clique);
}

TEST_CASE("collective objective: lambda 0 decouples; gradient matches FD") {
    Rng rng(83);
    AgreementToy at = make_pair_toy(rng, 3, 3, 2, {{0, 1, 2}});
    Instance& inst = at.toy.corpus.sources[0].instances[0];
    inst.gold = std::vector<int>{0, 1, 0};
    inst.is_labeled = true;
    Workspace ws = at.workspace();

    ObjectiveValue decoupled =
        collective_objective(ws, at.agreement, at.weights, 0.0, 0.5, AgreementVariant::Clique, {});
    CHECK(decoupled.total == doctest::Approx(decoupled.labeled_part));
    CHECK(decoupled.agreement_part == 0.0);

    for (double lambda : {0.5, 2.0}) {
        ObjectiveValue obj = collective_objective(ws, at.agreement, at.weights, lambda, 0.5,
                                                  AgreementVariant::Clique, {});
        CHECK(obj.total ==
              doctest::Approx(obj.labeled_part + lambda * obj.agreement_part).epsilon(1e-12));
        std::vector<double> flat;
        for (const auto& w : at.weights) flat.insert(flat.end(), w.begin(), w.end());
        const std::size_t dim = at.weights[0].size();
        auto fd = oracle::finite_difference(
            [&](const std::vector<double>& x) {
                WeightSet w = at.weights;
                for (std::size_t s = 0; s < w.size(); ++s)
                    std::copy(x.begin() + s * dim, x.begin() + (s + 1) * dim, w[s].begin());
                return collective_objective(ws, at.agreement, w, lambda, 0.5,
                                            AgreementVariant::Clique, {})
                    .total;
            },
            flat);
        std::vector<double> analytic;
        for (const auto& g : obj.gradient) analytic.insert(analytic.end(), g.begin(), g.end());
        CHECK(oracle::rel_err(analytic, fd) < 1e-4);
    }
}

TEST_CASE("collective decode adopts the confident label on a fused node") {
    Rng rng(91);
    AgreementToy at;
    at.toy = oracle::Toy::make(rng, {{2}, {2}}, 2);
    at.weights = WeightSet(2, ModelWeights(at.toy.tmpl.dimension(), 0.0));
    Clique c;
    c.members.push_back({{0, 0}, 0, 1});
    c.members.push_back({{1, 0}, 0, 1});
    at.agreement.cliques.push_back(c);
    // source 0 strongly prefers label 1 at position 0; source 1 mildly label 0
    const Instance& i0 = at.toy.corpus.sources[0].instances[0];
    const Instance& i1 = at.toy.corpus.sources[1].instances[0];
    at.weights[0][at.toy.tmpl.node_feature(at.toy.tmpl.base_ids_at(i0, 0)[0], 1)] = 8.0;
    at.weights[1][at.toy.tmpl.node_feature(at.toy.tmpl.base_ids_at(i1, 0)[0], 0)] = 0.5;

    Workspace ws = at.workspace();
    auto joint = collective_inference_decode(ws, at.agreement, at.weights, {});
    CHECK(joint[0][0][0] == 1);
    CHECK(joint[1][0][0] == 1);  // pulled to the confident side

    AgreementSet empty;
    auto solo = collective_inference_decode(ws, empty, at.weights, {});
    CHECK(solo == decode_all(ws, at.weights));
    auto vit = decode_all(ws, at.weights);
    CHECK(joint[1][0][1] == vit[1][0][1]);
}
