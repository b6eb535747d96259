#pragma once

#include <map>
#include <string>
#include <vector>

#include "concord/eval.hpp"
#include "concord/miner.hpp"
#include "concord/synth.hpp"
#include "concord/trainer.hpp"

namespace concord {

struct ExperimentCell {
    std::string name;
    SynthConfig synth;
    std::string dataset_path;  // non-empty: load instead of generating
};

struct ExperimentConfig {
    std::vector<ExperimentCell> cells;
    std::vector<std::string> methods = {"base", "clique"};
    std::vector<int> train_sizes = {3};
    int draws = 5;
    double lambda = 1.0;
    // when non-empty, lambda is chosen per draw on a held-out seed's
    // instances instead of using the fixed value above
    std::vector<double> lambda_grid;
    int validation_seeds = 2;
    double gamma = 1.0;
    MineConfig mine;
    double staged_confidence = 0.9;
    int max_iters = 150;
    double grad_tol = 1e-3;
    std::uint64_t seed = 7;
    BpConfig bp;
    bool self_check = false;

    void validate() const;
};

struct MethodSummary {
    std::string method;
    std::vector<double> f1_per_draw;
    std::vector<double> gain_per_draw;  // vs base, same draw; empty for base
    double mean_f1 = 0.0;
    double std_f1 = 0.0;
    double mean_gain = 0.0;
    double std_gain = 0.0;
};

struct CellReport {
    std::string name;
    int train_size = 3;
    std::vector<MethodSummary> methods;
    double mined_clique_noise = 0.0;     // averaged over draws
    double mined_position_noise = 0.0;
    double unigram_position_noise = 0.0;
    int mean_cliques = 0;
};

struct ExperimentReport {
    std::vector<CellReport> cells;

    const MethodSummary& summary(const std::string& cell, int train_size,
                                 const std::string& method) const;
    double mean_gain(const std::string& method) const;  // over all cells
};

// Full protocol: per draw sample seed records, apply them, mine the
// agreement set, train every method, decode the unlabeled instances and
// score entity F1. Timings are collected separately from the report so the
// serialized output is byte-stable.
ExperimentReport run_experiment(const ExperimentConfig& config,
                                std::map<std::string, double>* wall_times = nullptr);

std::string report_to_json(const ExperimentReport& report);
std::string report_table(const ExperimentReport& report);

ExperimentConfig experiment_config_from_file(const std::string& path);

// Five-config sweep of template ambiguity x overlap used by the trend
// assertions and the bundled experiment presets.
std::vector<ExperimentCell> standard_suite(std::uint64_t seed);

// Adds fabricated cliques over spans whose gold labels disagree until the
// requested fraction of the returned set is noisy.
AgreementSet inject_noisy_cliques(const Corpus& corpus, const AgreementSet& clean,
                                  double fraction, Rng& rng);

}  // namespace concord
