#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "concord/objectives.hpp"

namespace concord {

enum class Optimizer { Lbfgs, GradientAscent };

struct TrainConfig {
    double lambda = 1.0;
    double gamma = 1.0;
    AgreementVariant variant = AgreementVariant::Clique;
    int max_iters = 200;       // optimizer iterations (outer iterations for EM)
    double grad_tol = 1e-4;
    Optimizer optimizer = Optimizer::Lbfgs;
    bool em = false;
    int em_m_step_iters = 5;
    std::uint64_t rng_seed = 0;
    BpConfig bp;

    void validate() const;
};

struct TrainResult {
    WeightSet weights;
    std::vector<double> objective_trace;
    bool converged = false;
    double wall_time_sec = 0.0;  // never serialized into reports
};

// L-BFGS maximization of the supervised objective from zero weights.
// Fails when the source has no labeled instances.
ModelWeights train_base(const Workspace& ws, int source, double gamma, int max_iters = 200,
                        double grad_tol = 1e-4);

// Base training for every source; sources with no labeled data keep zeros.
WeightSet train_base_all(const Workspace& ws, double gamma, int max_iters = 200,
                         double grad_tol = 1e-4);

// Joint maximization of the collective objective over all source weights,
// warm-started from base training.
TrainResult train_collective(const Workspace& ws, const AgreementSet& agreement,
                             const TrainConfig& config);

// EM alternative: the E-step freezes exact per-partition agreement marginals
// (clique or node variant), the M-step runs a few L-BFGS iterations on the
// resulting concave surrogate.
TrainResult train_em(const Workspace& ws, const AgreementSet& agreement,
                     const TrainConfig& config);

// Trains per grid value and returns the lambda with the best validation
// entity F1 (ties toward the smaller lambda). Validation refs must be
// unlabeled instances with gold labels.
double select_lambda(const Workspace& ws, const AgreementSet& agreement,
                     const TrainConfig& config, const std::vector<double>& grid,
                     const std::vector<InstanceRef>& validation);

// Sequential label transfer: train the first source, then for each next
// source adopt whole-instance pseudo-labels wherever the previous model's
// viterbi path clears the per-position confidence threshold.
WeightSet staged_transfer_train(const Workspace& ws, const std::vector<int>& ordering,
                                double confidence, double gamma, int max_iters = 200,
                                double grad_tol = 1e-4);

// Weight files: {"template":{labels,base_keys},"sources":{id:[[name,value],...]}}
void save_weights(const FeatureTemplate& tmpl, const Corpus& corpus, const WeightSet& weights,
                  const std::string& path);

struct LoadedWeights {
    FeatureTemplate tmpl;
    std::map<std::string, ModelWeights> by_source;

    // weights aligned to the corpus source order; fails on missing sources
    WeightSet align(const Corpus& corpus) const;
};
LoadedWeights load_weights(const std::string& path);

}  // namespace concord
