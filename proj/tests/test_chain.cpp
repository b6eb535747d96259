#include <doctest.h>

#include "concord/chain.hpp"
#include "oracles.hpp"

using namespace concord;

namespace {

ChainPotentials random_potentials(Rng& rng, int n, int L, double scale = 1.0) {
    ChainPotentials pot(n, L);
    for (int p = 0; p < n; ++p)
        for (int y = 0; y < L; ++y) pot.node.at(p, y) = scale * rng.next_gaussian();
    for (int p = 1; p < n; ++p)
        for (int yp = 0; yp < L; ++yp)
            for (int y = 0; y < L; ++y) pot.edge_at(p, yp, y) = scale * rng.next_gaussian();
    return pot;
}

}  // namespace

TEST_CASE("forward_backward on zero potentials: uniform counting") {
    ChainPotentials pot1(1, 2);
    ChainMarginals m1 = forward_backward(pot1);
    CHECK(m1.log_z == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(m1.node.at(0, 0) == doctest::Approx(0.5));
    CHECK(m1.node.at(0, 1) == doctest::Approx(0.5));

    ChainPotentials pot2(2, 3);
    CHECK(forward_backward(pot2).log_z == doctest::Approx(std::log(9.0)).epsilon(1e-12));
}

TEST_CASE("forward_backward matches enumeration on seeded random chains") {
    Rng rng(1234);
    for (int trial = 0; trial < 25; ++trial) {
        int n = 1 + static_cast<int>(rng.next_int(0, 3));
        int L = 2 + static_cast<int>(rng.next_int(0, 1));
        ChainPotentials pot = random_potentials(rng, n, L);
        ChainMarginals m = forward_backward(pot);
        auto ref = oracle::enumerate_chain(pot);
        CHECK(m.log_z == doctest::Approx(ref.log_z).epsilon(1e-8));
        for (int p = 0; p < n; ++p)
            for (int y = 0; y < L; ++y)
                CHECK(m.node.at(p, y) == doctest::Approx(ref.node.at(p, y)).epsilon(1e-8));
        for (int p = 1; p < n; ++p)
            for (int yp = 0; yp < L; ++yp)
                for (int y = 0; y < L; ++y)
                    CHECK(m.edge_at(p, yp, y, L) ==
                          doctest::Approx(ref.edge_at(p, yp, y, L)).epsilon(1e-8));
    }
}

TEST_CASE("marginal consistency: node rows sum to one, edges sum to nodes") {
    Rng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        ChainPotentials pot = random_potentials(rng, 4, 3, 2.0);
        ChainMarginals m = forward_backward(pot);
        for (int p = 0; p < 4; ++p) {
            double row = 0.0;
            for (int y = 0; y < 3; ++y) row += m.node.at(p, y);
            CHECK(row == doctest::Approx(1.0).epsilon(1e-9));
        }
        for (int p = 1; p < 4; ++p)
            for (int y = 0; y < 3; ++y) {
                double acc = 0.0;
                for (int yp = 0; yp < 3; ++yp) acc += m.edge_at(p, yp, y, 3);
                CHECK(acc == doctest::Approx(m.node.at(p, y)).epsilon(1e-9));
            }
    }
}

TEST_CASE("log-space stability for potential magnitude 50") {
    Rng rng(5);
    ChainPotentials pot(4, 3);
    for (int p = 0; p < 4; ++p)
        for (int y = 0; y < 3; ++y) pot.node.at(p, y) = rng.next_bool(0.5) ? 50.0 : -50.0;
    for (int p = 1; p < 4; ++p)
        for (int yp = 0; yp < 3; ++yp)
            for (int y = 0; y < 3; ++y) pot.edge_at(p, yp, y) = rng.next_bool(0.5) ? 50.0 : -50.0;
    ChainMarginals m = forward_backward(pot);
    CHECK(std::isfinite(m.log_z));
    for (int p = 0; p < 4; ++p) {
        double row = 0.0;
        for (int y = 0; y < 3; ++y) {
            CHECK(std::isfinite(m.node.at(p, y)));
            row += m.node.at(p, y);
        }
        CHECK(row == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("viterbi ties break toward label 0; dominant path wins") {
    ChainPotentials zero(3, 3);
    auto lab = viterbi(zero);
    CHECK(lab == std::vector<int>{0, 0, 0});

    ChainPotentials pot(3, 3);
    pot.node.at(0, 2) = 5.0;
    pot.node.at(1, 1) = 5.0;
    pot.node.at(2, 0) = 5.0;
    CHECK(viterbi(pot) == std::vector<int>{2, 1, 0});
}

TEST_CASE("viterbi matches enumeration argmax on seeded chains") {
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        ChainPotentials pot = random_potentials(rng, 4, 3);
        CHECK(viterbi(pot) == oracle::enumerate_chain(pot).argmax);
    }
}

TEST_CASE("segment_marginal: whole-span definition and normalization") {
    Rng rng(31);
    ChainPotentials pot = random_potentials(rng, 3, 2);
    ChainMarginals m = forward_backward(pot);
    // whole instance: exp(score - log_z)
    std::vector<int> lab = {1, 0, 1};
    CHECK(segment_marginal(pot, 0, 3, lab) ==
          doctest::Approx(std::exp(chain_score(pot, lab) - m.log_z)).epsilon(1e-9));
    // sum over all labelings of a fixed span is 1
    double acc = 0.0;
    for (const auto& span_lab : oracle::all_labelings(2, 2))
        acc += segment_marginal(pot, 1, 3, span_lab);
    CHECK(acc == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("segment_marginal matches enumeration on length-4 chains") {
    Rng rng(412);
    for (int trial = 0; trial < 10; ++trial) {
        ChainPotentials pot = random_potentials(rng, 4, 3);
        for (const auto& lab : oracle::all_labelings(2, 3)) {
            CHECK(segment_marginal(pot, 1, 3, lab) ==
                  doctest::Approx(oracle::enumerate_segment_marginal(pot, 1, 3, lab))
                      .epsilon(1e-8));
        }
    }
}

TEST_CASE("segment_marginal rejects out-of-bounds spans") {
    ChainPotentials pot(3, 2);
    std::vector<int> lab = {0};
    CHECK_THROWS(segment_marginal(pot, 2, 4, lab));
    CHECK_THROWS(segment_marginal(pot, -1, 1, lab));
}

TEST_CASE("compute_potentials: linearity and dot-product oracle") {
    Rng rng(7);
    oracle::Toy toy = oracle::Toy::make(rng, {{3}}, 3);
    const Instance& inst = toy.corpus.sources[0].instances[0];

    ModelWeights zero(toy.tmpl.dimension(), 0.0);
    ChainPotentials pz = compute_potentials(toy.tmpl, inst, zero);
    for (int p = 0; p < 3; ++p)
        for (int y = 0; y < 3; ++y) CHECK(pz.node.at(p, y) == 0.0);

    WeightSet w = toy.random_weights(rng);
    ChainPotentials p1 = compute_potentials(toy.tmpl, inst, w[0]);
    ModelWeights doubled = w[0];
    for (auto& v : doubled) v *= 2.0;
    ChainPotentials p2 = compute_potentials(toy.tmpl, inst, doubled);
    for (int p = 0; p < 3; ++p)
        for (int y = 0; y < 3; ++y)
            CHECK(p2.node.at(p, y) == doctest::Approx(2.0 * p1.node.at(p, y)).epsilon(1e-12));

    ChainPotentials ref = oracle::potentials_by_extraction(toy.tmpl, inst, w[0]);
    for (int p = 0; p < 3; ++p)
        for (int y = 0; y < 3; ++y)
            CHECK(p1.node.at(p, y) == doctest::Approx(ref.node.at(p, y)).epsilon(1e-10));
    for (int p = 1; p < 3; ++p)
        for (int yp = 0; yp < 3; ++yp)
            for (int y = 0; y < 3; ++y)
                CHECK(p1.edge_at(p, yp, y) ==
                      doctest::Approx(ref.edge_at(p, yp, y)).epsilon(1e-10));
}

TEST_CASE("compute_potentials rejects wrong weight dimension") {
    Rng rng(8);
    oracle::Toy toy = oracle::Toy::make(rng, {{3}}, 2);
    ModelWeights bad(toy.tmpl.dimension() + 1, 0.0);
    CHECK_THROWS(compute_potentials(toy.tmpl, toy.corpus.sources[0].instances[0], bad));
}

TEST_CASE("labeled_objective: uniform value at zero weights, FD gradient") {
    Rng rng(21);
    oracle::Toy toy = oracle::Toy::make(rng, {{3, 2}}, 2);
    auto& src = toy.corpus.sources[0];
    for (auto& inst : src.instances) {
        std::vector<int> gold(inst.tokens.size());
        for (auto& g : gold) g = static_cast<int>(rng.next_int(0, 1));
        inst.gold = gold;
        inst.is_labeled = true;
    }
    std::vector<const Instance*> insts;
    std::vector<InstanceFeatures> feat_store;
    for (auto& inst : src.instances) {
        insts.push_back(&inst);
        feat_store.push_back(InstanceFeatures::build(toy.tmpl, inst));
    }
    std::vector<const InstanceFeatures*> feats;
    for (auto& f : feat_store) feats.push_back(&f);

    ModelWeights zero(toy.tmpl.dimension(), 0.0);
    LabeledObjective at_zero = labeled_objective(toy.tmpl, insts, feats, zero, 0.0);
    CHECK(at_zero.value == doctest::Approx(-(3 + 2) * std::log(2.0)).epsilon(1e-10));

    WeightSet w = toy.random_weights(rng, 0.3);
    for (double gamma : {0.0, 0.7}) {
        LabeledObjective lo = labeled_objective(toy.tmpl, insts, feats, w[0], gamma);
        auto fd = oracle::finite_difference(
            [&](const std::vector<double>& x) {
                return labeled_objective(toy.tmpl, insts, feats, x, gamma).value;
            },
            w[0]);
        CHECK(oracle::rel_err(lo.grad, fd) < 1e-4);
    }
}

TEST_CASE("labeled_objective is concave along random segments") {
    Rng rng(55);
    oracle::Toy toy = oracle::Toy::make(rng, {{3, 2}}, 2);
    for (auto& inst : toy.corpus.sources[0].instances) {
        std::vector<int> gold(inst.tokens.size());
        for (auto& g : gold) g = static_cast<int>(rng.next_int(0, 1));
        inst.gold = gold;
        inst.is_labeled = true;
    }
    std::vector<const Instance*> insts;
    std::vector<InstanceFeatures> feat_store;
    for (auto& inst : toy.corpus.sources[0].instances) {
        insts.push_back(&inst);
        feat_store.push_back(InstanceFeatures::build(toy.tmpl, inst));
    }
    std::vector<const InstanceFeatures*> feats;
    for (auto& f : feat_store) feats.push_back(&f);

    auto value = [&](const ModelWeights& x) {
        return labeled_objective(toy.tmpl, insts, feats, x, 0.5).value;
    };
    for (int trial = 0; trial < 8; ++trial) {
        WeightSet a = toy.random_weights(rng), b = toy.random_weights(rng);
        for (double t : {0.25, 0.5, 0.75}) {
            ModelWeights mix(toy.tmpl.dimension());
            for (std::size_t k = 0; k < mix.size(); ++k)
                mix[k] = t * a[0][k] + (1.0 - t) * b[0][k];
            CHECK(value(mix) >= t * value(a[0]) + (1.0 - t) * value(b[0]) - 1e-9);
        }
    }
}

TEST_CASE("per-instance distribution normalizes over enumerated labelings") {
    Rng rng(61);
    ChainPotentials pot = random_potentials(rng, 4, 3);
    double log_z = forward_backward(pot).log_z;
    double acc = 0.0;
    for (const auto& lab : oracle::all_labelings(4, 3))
        acc += std::exp(chain_score(pot, lab) - log_z);
    CHECK(acc == doctest::Approx(1.0).epsilon(1e-9));
}
