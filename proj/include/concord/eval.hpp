#pragma once

#include <string>
#include <vector>

#include "concord/corpus.hpp"
#include "concord/miner.hpp"

namespace concord {

// maximal run of one non-Other label
struct Entity {
    int start = 0;
    int end = 0;  // exclusive
    int label = 0;

    bool operator==(const Entity&) const = default;
};

std::vector<Entity> extract_entities(const std::vector<int>& labels, int other_label);

struct Prf {
    double precision = 0.0;  // 0 when nothing is predicted
    double recall = 0.0;
    double f1 = 0.0;
    int tp = 0;
    int predicted = 0;
    int gold = 0;
};

Prf micro_prf(int tp, int predicted, int gold);

// Micro-averaged entity P/R/F1; a predicted entity counts iff its span and
// label both match a gold entity exactly. Lengths must align pairwise.
Prf evaluate_labelings(const std::vector<std::vector<int>>& predicted,
                       const std::vector<std::vector<int>>& gold, int other_label);

struct EvalReport {
    std::string method;
    int draw = 0;
    Prf overall;
    std::vector<std::pair<std::string, Prf>> per_source;
    NoiseAudit noise;
};

// Scores decoded labelings (indexed [source][instance]) against gold over
// the given instance refs.
EvalReport evaluate_f1(const Corpus& corpus, const std::vector<InstanceRef>& refs,
                       const std::vector<std::vector<std::vector<int>>>& decoded,
                       const std::string& method, int draw);

}  // namespace concord
