#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "concord/corpus.hpp"

namespace concord {

// Multi-source record-rendering generator. Each source renders a subset of a
// canonical record table through its own template (field order, separator,
// decorations); distractor tokens repeat across records and fields to plant
// agreement noise. Fully deterministic given rng_seed.
struct SynthConfig {
    int num_sources = 6;
    int num_records = 60;
    int fields_per_record = 3;
    double duplication_rate = 0.5;  // P(record rendered by a source)
    double template_jitter = 1.0;   // 0 disables per-source style variation
    double distractor_rate = 0.1;   // P(field token drawn from the shared pool)
    double ambiguity = 0.5;         // fraction of sources rendered without separators
    // the first common_records records are rendered by every source and form
    // the seed pool; 0 keeps pure duplication_rate semantics
    int common_records = 0;
    int label_count = 0;            // 0 -> fields_per_record + 1
    std::uint64_t rng_seed = 0;

    void validate() const;
};

struct SynthOutput {
    Corpus corpus;                   // full gold labels, nothing marked labeled
    std::vector<SeedRecord> records; // canonical table
    int seed_pool = 0;               // records eligible as seed draws
};

SynthOutput generate_synthetic(const SynthConfig& config);

SynthConfig synth_config_from_file(const std::string& path);

}  // namespace concord
