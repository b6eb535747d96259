#include "concord/eval.hpp"

#include <algorithm>
#include <map>

#include "concord/util.hpp"

namespace concord {

std::vector<Entity> extract_entities(const std::vector<int>& labels, int other_label) {
    std::vector<Entity> out;
    const int n = static_cast<int>(labels.size());
    int p = 0;
    while (p < n) {
        if (labels[p] == other_label) {
            ++p;
            continue;
        }
        int start = p;
        int label = labels[p];
        while (p < n && labels[p] == label) ++p;
        out.push_back({start, p, label});
    }
    return out;
}

Prf micro_prf(int tp, int predicted, int gold) {
    Prf r;
    r.tp = tp;
    r.predicted = predicted;
    r.gold = gold;
    r.precision = predicted > 0 ? static_cast<double>(tp) / predicted : 0.0;
    r.recall = gold > 0 ? static_cast<double>(tp) / gold : 0.0;
    r.f1 = (r.precision + r.recall) > 0.0
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
    return r;
}

Prf evaluate_labelings(const std::vector<std::vector<int>>& predicted,
                       const std::vector<std::vector<int>>& gold, int other_label) {
    if (predicted.size() != gold.size()) fail("evaluate_labelings: sequence count mismatch");
    int tp = 0, np = 0, ng = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i].size() != gold[i].size())
            fail("evaluate_labelings: length mismatch at sequence " + std::to_string(i));
        auto pe = extract_entities(predicted[i], other_label);
        auto ge = extract_entities(gold[i], other_label);
        np += static_cast<int>(pe.size());
        ng += static_cast<int>(ge.size());
        for (const auto& e : pe)
            if (std::find(ge.begin(), ge.end(), e) != ge.end()) ++tp;
    }
    return micro_prf(tp, np, ng);
}

EvalReport evaluate_f1(const Corpus& corpus, const std::vector<InstanceRef>& refs,
                       const std::vector<std::vector<std::vector<int>>>& decoded,
                       const std::string& method, int draw) {
    EvalReport report;
    report.method = method;
    report.draw = draw;
    const int other = corpus.other_label();

    std::map<int, std::pair<std::vector<std::vector<int>>, std::vector<std::vector<int>>>> by_source;
    for (const auto& ref : refs) {
        const Instance& inst = corpus.at(ref);
        if (!inst.gold) fail("evaluate_f1: instance '" + inst.instance_id + "' has no gold labels");
        by_source[ref.source].first.push_back(decoded[ref.source][ref.instance]);
        by_source[ref.source].second.push_back(*inst.gold);
    }
    int tp = 0, np = 0, ng = 0;
    for (const auto& [s, pair] : by_source) {
        Prf prf = evaluate_labelings(pair.first, pair.second, other);
        report.per_source.emplace_back(corpus.sources[s].id, prf);
        tp += prf.tp;
        np += prf.predicted;
        ng += prf.gold;
    }
    report.overall = micro_prf(tp, np, ng);
    return report;
}

}  // namespace concord
