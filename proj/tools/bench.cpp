// Serial vs OpenMP timing of the batch kernels: supervised objective,
// clique agreement, full-graph BP. The parallel path must match the serial
// reference bit for bit (checked here too).
#include <chrono>
#include <cstdio>

#include "concord/experiment.hpp"
#include "concord/objectives.hpp"
#include "concord/parallel.hpp"
#include "concord/trainer.hpp"

using namespace concord;

namespace {

double now() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <typename Fn>
double time_best_of(int reps, Fn&& fn) {
    double best = 1e30;
    for (int r = 0; r < reps; ++r) {
        double t0 = now();
        fn();
        best = std::min(best, now() - t0);
    }
    return best;
}

}  // namespace

int main() {
    SynthConfig sc;
    sc.num_sources = 6;
    sc.num_records = 120;
    sc.fields_per_record = 3;
    sc.duplication_rate = 0.7;
    sc.ambiguity = 0.5;
    sc.rng_seed = 42;
    SynthOutput synth = generate_synthetic(sc);

    std::vector<SeedRecord> seeds(synth.records.begin(), synth.records.begin() + 5);
    apply_seeds(synth.corpus, seeds);
    FeatureTemplate tmpl = FeatureTemplate::build(synth.corpus);
    Workspace ws(synth.corpus, tmpl);
    MineConfig mc;
    mc.tau = 0.25;
    MineResult mined = mine_agreement(synth.corpus, mc);

    // mildly trained weights so inference is not all-uniform
    WeightSet weights = train_base_all(ws, 1.0, 20, 1e-3);

    std::printf("corpus: %zu instances, %zu cliques, dim %d\n",
                synth.corpus.all_instances().size(), mined.agreement.cliques.size(),
                tmpl.dimension());

    struct Kernel {
        const char* name;
        std::function<double()> run;
    };
    BpConfig bp;
    std::vector<Kernel> kernels = {
        {"labeled objective", [&] {
             double acc = 0.0;
             for (int s = 0; s < ws.num_sources(); ++s) {
                 std::vector<const Instance*> insts;
                 std::vector<const InstanceFeatures*> feats;
                 for (const auto& ref : ws.corpus().labeled_of(s)) {
                     insts.push_back(&ws.corpus().at(ref));
                     feats.push_back(&ws.features(ref));
                 }
                 acc += labeled_objective(ws.tmpl(), insts, feats, weights[s], 1.0).value;
             }
             return acc;
         }},
        {"clique agreement", [&] {
             return agreement_ll(ws, AgreementVariant::Clique, mined.agreement, weights, bp).value;
         }},
        {"full-graph BP", [&] {
             return agreement_ll(ws, AgreementVariant::Full, mined.agreement, weights, bp).value;
         }},
    };

    std::printf("%-20s %12s %12s %8s\n", "kernel", "serial (s)", "parallel (s)", "speedup");
    for (auto& k : kernels) {
        parallel::set_threads(1);
        double serial_value = k.run();
        double t_serial = time_best_of(3, [&] { k.run(); });
        parallel::set_threads(0);
        double parallel_value = k.run();
        double t_parallel = time_best_of(3, [&] { k.run(); });
        bool identical = serial_value == parallel_value;
        std::printf("%-20s %12.4f %12.4f %7.2fx %s\n", k.name, t_serial, t_parallel,
                    t_serial / t_parallel, identical ? "" : "*** MISMATCH ***");
        if (!identical) return 1;
    }
    return 0;
}
