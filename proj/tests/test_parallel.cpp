#include <doctest.h>

#include <atomic>

#include "concord/experiment.hpp"
#include "concord/objectives.hpp"
#include "concord/parallel.hpp"
#include "concord/trainer.hpp"

using namespace concord;

namespace {

struct ThreadGuard {
    ~ThreadGuard() { parallel::set_threads(0); }
};

// a realistic mid-size workload for the serial/parallel comparison
struct Workload {
    SynthOutput synth;
    FeatureTemplate tmpl;
    AgreementSet agreement;
    WeightSet weights;

    Workload() {
        SynthConfig c;
        c.num_sources = 4;
        c.num_records = 24;
        c.duplication_rate = 0.8;
        c.ambiguity = 0.5;
        c.rng_seed = 19;
        synth = generate_synthetic(c);
        std::vector<SeedRecord> seeds(synth.records.begin(), synth.records.begin() + 3);
        apply_seeds(synth.corpus, seeds);
        tmpl = FeatureTemplate::build(synth.corpus);
        MineConfig mc;
        mc.tau = 0.25;
        mc.fallback_threshold = 0.0;
        agreement = mine_agreement(synth.corpus, mc).agreement;
        Rng rng(3);
        weights.assign(4, ModelWeights(tmpl.dimension(), 0.0));
        for (auto& w : weights)
            for (auto& v : w) v = 0.1 * rng.next_gaussian();
    }
};

}  // namespace

TEST_CASE("parallel_for covers every index exactly once") {
    ThreadGuard guard;
    parallel::set_threads(0);
    std::vector<std::atomic<int>> hits(257);
    for (auto& h : hits) h = 0;
    parallel::parallel_for(hits.size(), [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) CHECK(h.load() == 1);
    parallel::serial_for(hits.size(), [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) CHECK(h.load() == 2);
}

TEST_CASE("objective kernels: parallel path is bit-identical to the serial reference") {
    ThreadGuard guard;
    Workload work;
    Workspace ws(work.synth.corpus, work.tmpl);
    BpConfig bp;

    struct Snapshot {
        double labeled = 0.0;
        double agreement_clique = 0.0;
        double agreement_full = 0.0;
        WeightSet grad;
    };
    auto capture = [&] {
        Snapshot snap;
        ObjectiveValue obj = collective_objective(ws, work.agreement, work.weights, 0.7, 0.5,
                                                  AgreementVariant::Clique, bp);
        snap.labeled = obj.labeled_part;
        snap.agreement_clique = obj.agreement_part;
        snap.grad = obj.gradient;
        snap.agreement_full =
            agreement_ll(ws, AgreementVariant::Full, work.agreement, work.weights, bp).value;
        return snap;
    };

    parallel::set_threads(1);
    CHECK(!parallel::enabled());
    Snapshot serial = capture();
    parallel::set_threads(0);
    Snapshot parallel_snap = capture();

    CHECK(serial.labeled == parallel_snap.labeled);
    CHECK(serial.agreement_clique == parallel_snap.agreement_clique);
    CHECK(serial.agreement_full == parallel_snap.agreement_full);
    for (std::size_t s = 0; s < serial.grad.size(); ++s)
        for (std::size_t k = 0; k < serial.grad[s].size(); ++k)
            CHECK(serial.grad[s][k] == parallel_snap.grad[s][k]);
}

TEST_CASE("decoding and training agree across thread counts") {
    ThreadGuard guard;
    Workload work;
    Workspace ws(work.synth.corpus, work.tmpl);

    parallel::set_threads(1);
    auto decoded_serial = decode_all(ws, work.weights);
    TrainConfig cfg;
    cfg.lambda = 0.3;
    cfg.gamma = 0.1;
    cfg.max_iters = 25;
    cfg.grad_tol = 1e-3;
    TrainResult serial = train_collective(ws, work.agreement, cfg);

    parallel::set_threads(0);
    auto decoded_parallel = decode_all(ws, work.weights);
    TrainResult parallel_run = train_collective(ws, work.agreement, cfg);

    CHECK(decoded_serial == decoded_parallel);
    REQUIRE(serial.objective_trace.size() == parallel_run.objective_trace.size());
    for (std::size_t i = 0; i < serial.objective_trace.size(); ++i)
        CHECK(serial.objective_trace[i] == parallel_run.objective_trace[i]);
    for (std::size_t s = 0; s < serial.weights.size(); ++s)
        for (std::size_t k = 0; k < serial.weights[s].size(); ++k)
            CHECK(serial.weights[s][k] == parallel_run.weights[s][k]);
}
