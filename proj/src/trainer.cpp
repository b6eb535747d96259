#include "concord/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "concord/eval.hpp"
#include "concord/optimize.hpp"
#include "concord/parallel.hpp"

using nlohmann::json;

namespace concord {

void TrainConfig::validate() const {
    if (lambda < 0) fail("train config: lambda must be >= 0");
    if (gamma < 0) fail("train config: gamma must be >= 0");
    if (max_iters < 1) fail("train config: max_iters must be >= 1");
    if (grad_tol <= 0) fail("train config: grad_tol must be > 0");
    if (em_m_step_iters < 1) fail("train config: em_m_step_iters must be >= 1");
}

namespace {

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::vector<double> pack(const WeightSet& w) {
    std::vector<double> flat;
    for (const auto& ws : w) flat.insert(flat.end(), ws.begin(), ws.end());
    return flat;
}

void unpack(const std::vector<double>& flat, WeightSet& w) {
    std::size_t off = 0;
    for (auto& ws : w) {
        std::copy(flat.begin() + off, flat.begin() + off + ws.size(), ws.begin());
        off += ws.size();
    }
}

struct SourceTrainingSet {
    std::vector<const Instance*> instances;
    std::vector<const InstanceFeatures*> features;
};

SourceTrainingSet labeled_set(const Workspace& ws, int source) {
    SourceTrainingSet set;
    for (const auto& ref : ws.corpus().labeled_of(source)) {
        set.instances.push_back(&ws.corpus().at(ref));
        set.features.push_back(&ws.features(ref));
    }
    return set;
}

ModelWeights train_on_set(const Workspace& ws, const SourceTrainingSet& set, double gamma,
                          int max_iters, double grad_tol) {
    ObjectiveFn fn = [&](const std::vector<double>& x, std::vector<double>& grad) {
        LabeledObjective lo = labeled_objective(ws.tmpl(), set.instances, set.features, x, gamma);
        grad = std::move(lo.grad);
        return lo.value;
    };
    auto res = lbfgs_maximize(fn, ModelWeights(ws.tmpl().dimension(), 0.0), max_iters, grad_tol);
    return std::move(res.x);
}

}  // namespace

ModelWeights train_base(const Workspace& ws, int source, double gamma, int max_iters,
                        double grad_tol) {
    SourceTrainingSet set = labeled_set(ws, source);
    if (set.instances.empty())
        fail("train_base: source '" + ws.corpus().sources[source].id + "' has no labeled instances");
    return train_on_set(ws, set, gamma, max_iters, grad_tol);
}

WeightSet train_base_all(const Workspace& ws, double gamma, int max_iters, double grad_tol) {
    WeightSet weights = ws.zero_weights();
    for (int s = 0; s < ws.num_sources(); ++s) {
        if (ws.corpus().labeled_of(s).empty()) continue;
        weights[s] = train_base(ws, s, gamma, max_iters, grad_tol);
    }
    return weights;
}

TrainResult train_collective(const Workspace& ws, const AgreementSet& agreement,
                             const TrainConfig& config) {
    config.validate();
    TrainResult result;
    double t0 = now_seconds();

    WeightSet weights = train_base_all(ws, config.gamma, config.max_iters, config.grad_tol);
    WeightSet scratch = ws.zero_weights();

    ObjectiveFn fn = [&](const std::vector<double>& x, std::vector<double>& grad) {
        unpack(x, scratch);
        ObjectiveValue obj = collective_objective(ws, agreement, scratch, config.lambda,
                                                  config.gamma, config.variant, config.bp);
        grad = pack(obj.gradient);
        return obj.total;
    };
    OptimizeResult opt =
        config.optimizer == Optimizer::Lbfgs
            ? lbfgs_maximize(fn, pack(weights), config.max_iters, config.grad_tol)
            : gradient_ascent(fn, pack(weights), config.max_iters, config.grad_tol);

    unpack(opt.x, weights);
    result.weights = std::move(weights);
    result.objective_trace = std::move(opt.trace);
    result.converged = opt.converged;
    result.wall_time_sec = now_seconds() - t0;
    return result;
}

TrainResult train_em(const Workspace& ws, const AgreementSet& agreement,
                     const TrainConfig& config) {
    config.validate();
    if (config.variant != AgreementVariant::Clique && config.variant != AgreementVariant::Node)
        fail("train_em: EM requires the clique or node variant");
    TrainResult result;
    double t0 = now_seconds();

    WeightSet weights = train_base_all(ws, config.gamma, config.max_iters, config.grad_tol);
    const int L = ws.tmpl().num_labels();

    double prev_f = kNegInf;
    for (int outer = 0; outer < config.max_iters; ++outer) {
        ObjectiveValue current = collective_objective(ws, agreement, weights, config.lambda,
                                                      config.gamma, config.variant, config.bp);
        result.objective_trace.push_back(current.total);
        if (outer > 0 && std::abs(current.total - prev_f) <= 1e-6 * (1.0 + std::abs(current.total))) {
            result.converged = true;
            break;
        }
        prev_f = current.total;

        // E-step: freeze agreement-side marginal targets
        FrozenTargets targets =
            agreement_targets(ws, config.variant, agreement, weights);

        // M-step surrogate: labeled objective + lambda * (<targets, theta(w)>
        // - sum multiplicity * log Z). Concave in w.
        WeightSet scratch = ws.zero_weights();
        ObjectiveFn fn = [&](const std::vector<double>& x, std::vector<double>& grad_out) {
            unpack(x, scratch);
            double value = 0.0;
            WeightSet grad = ws.zero_weights();
            for (int s = 0; s < ws.num_sources(); ++s) {
                SourceTrainingSet set = labeled_set(ws, s);
                LabeledObjective lo = labeled_objective(ws.tmpl(), set.instances, set.features,
                                                        scratch[s], config.gamma);
                value += lo.value;
                for (std::size_t k = 0; k < lo.grad.size(); ++k) grad[s][k] += lo.grad[k];
            }
            struct Slot {
                ChainPotentials pot;
                ChainMarginals marg;
            };
            std::vector<Slot> slots(targets.instances.size());
            parallel::parallel_for(targets.instances.size(), [&](std::size_t i) {
                const InstanceRef ref = targets.instances[i];
                slots[i].pot = compute_potentials(ws.tmpl(), ws.features(ref),
                                                  ws.corpus().at(ref).length(), scratch[ref.source]);
                slots[i].marg = forward_backward(slots[i].pot);
            });
            for (std::size_t i = 0; i < targets.instances.size(); ++i) {
                const InstanceRef ref = targets.instances[i];
                const Instance& inst = ws.corpus().at(ref);
                const auto& feats = ws.features(ref);
                const double mult = targets.multiplicity[i];
                double dotted = 0.0;
                for (int p = 0; p < inst.length(); ++p)
                    for (int y = 0; y < L; ++y)
                        dotted += targets.node[i].at(p, y) * slots[i].pot.node.at(p, y);
                for (int p = 1; p < inst.length(); ++p)
                    for (int yp = 0; yp < L; ++yp)
                        for (int y = 0; y < L; ++y)
                            dotted += targets.edge[i][(static_cast<std::size_t>(p - 1) * L + yp) *
                                                          L + y] *
                                      slots[i].pot.edge_at(p, yp, y);
                value += config.lambda * (dotted - mult * slots[i].marg.log_z);
                auto& g = grad[ref.source];
                for (int p = 0; p < inst.length(); ++p) {
                    for (int base : feats.keys[p]) {
                        double* dst = g.data() + ws.tmpl().node_feature(base, 0);
                        for (int y = 0; y < L; ++y)
                            dst[y] += config.lambda * (targets.node[i].at(p, y) -
                                                       mult * slots[i].marg.node.at(p, y));
                    }
                }
                for (int p = 1; p < inst.length(); ++p)
                    for (int yp = 0; yp < L; ++yp)
                        for (int y = 0; y < L; ++y)
                            g[ws.tmpl().transition_feature(yp, y)] +=
                                config.lambda *
                                (targets.edge[i][(static_cast<std::size_t>(p - 1) * L + yp) * L +
                                                 y] -
                                 mult * slots[i].marg.edge_at(p, yp, y, L));
            }
            grad_out = pack(grad);
            return value;
        };
        OptimizeResult opt =
            lbfgs_maximize(fn, pack(weights), config.em_m_step_iters, config.grad_tol);
        unpack(opt.x, weights);
    }
    if (result.objective_trace.empty() || !result.converged) {
        ObjectiveValue final_obj = collective_objective(ws, agreement, weights, config.lambda,
                                                        config.gamma, config.variant, config.bp);
        result.objective_trace.push_back(final_obj.total);
    }
    result.weights = std::move(weights);
    result.wall_time_sec = now_seconds() - t0;
    return result;
}

double select_lambda(const Workspace& ws, const AgreementSet& agreement,
                     const TrainConfig& config, const std::vector<double>& grid,
                     const std::vector<InstanceRef>& validation) {
    if (grid.empty()) fail("select_lambda: empty grid");
    if (validation.empty()) fail("select_lambda: empty validation set");
    for (const auto& ref : validation) {
        const Instance& inst = ws.corpus().at(ref);
        if (inst.is_labeled) fail("select_lambda: validation instance '" + inst.instance_id +
                                  "' is part of the training labels");
        if (!inst.gold) fail("select_lambda: validation instance '" + inst.instance_id +
                             "' has no gold labels");
    }
    std::vector<double> sorted = grid;
    std::sort(sorted.begin(), sorted.end());

    double best_lambda = sorted.front();
    double best_f1 = -1.0;
    for (double lam : sorted) {
        TrainConfig cfg = config;
        cfg.lambda = lam;
        TrainResult tr = train_collective(ws, agreement, cfg);
        auto decoded = decode_all(ws, tr.weights);
        EvalReport report = evaluate_f1(ws.corpus(), validation, decoded, "validation", 0);
        if (report.overall.f1 > best_f1) {
            best_f1 = report.overall.f1;
            best_lambda = lam;
        }
    }
    return best_lambda;
}

WeightSet staged_transfer_train(const Workspace& ws, const std::vector<int>& ordering,
                                double confidence, double gamma, int max_iters, double grad_tol) {
    if (!(confidence > 0.5 && confidence < 1.0))
        fail("staged_transfer_train: confidence must be in (0.5, 1)");
    WeightSet weights = ws.zero_weights();
    std::deque<Instance> pseudo_store;  // stable addresses for adopted copies

    int prev = -1;
    for (int s : ordering) {
        SourceTrainingSet set = labeled_set(ws, s);
        if (prev >= 0) {
            for (const auto& ref : ws.corpus().unlabeled_of(s)) {
                const Instance& inst = ws.corpus().at(ref);
                ChainPotentials pot = compute_potentials(ws.tmpl(), ws.features(ref),
                                                         inst.length(), weights[prev]);
                std::vector<int> path = viterbi(pot);
                ChainMarginals marg = forward_backward(pot);
                bool confident = true;
                for (int p = 0; p < inst.length() && confident; ++p)
                    confident = marg.node.at(p, path[p]) >= confidence;
                if (!confident) continue;
                Instance copy = inst;
                copy.gold = path;
                copy.is_labeled = true;
                pseudo_store.push_back(std::move(copy));
                set.instances.push_back(&pseudo_store.back());
                set.features.push_back(&ws.features(ref));
            }
        }
        if (!set.instances.empty())
            weights[s] = train_on_set(ws, set, gamma, max_iters, grad_tol);
        prev = s;
    }
    return weights;
}

void save_weights(const FeatureTemplate& tmpl, const Corpus& corpus, const WeightSet& weights,
                  const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write weights file '" + path + "'");
    json j;
    j["template"] = {{"labels", tmpl.label_names()}, {"base_keys", tmpl.base_keys()}};
    json sources = json::object();
    for (std::size_t s = 0; s < weights.size(); ++s) {
        json entries = json::array();
        for (std::size_t k = 0; k < weights[s].size(); ++k)
            if (weights[s][k] != 0.0)
                entries.push_back({tmpl.feature_name(static_cast<int>(k)), weights[s][k]});
        sources[corpus.sources[s].id] = std::move(entries);
    }
    j["sources"] = std::move(sources);
    out << j.dump() << "\n";
}

LoadedWeights load_weights(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open weights file '" + path + "'");
    json j;
    in >> j;
    LoadedWeights lw;
    lw.tmpl = FeatureTemplate::from_parts(
        j.at("template").at("labels").get<std::vector<std::string>>(),
        j.at("template").at("base_keys").get<std::vector<std::string>>());

    std::unordered_map<std::string, int> name_to_index;
    for (int k = 0; k < lw.tmpl.dimension(); ++k) {
        if (!name_to_index.emplace(lw.tmpl.feature_name(k), k).second)
            fail("weights file: ambiguous feature name '" + lw.tmpl.feature_name(k) + "'");
    }
    for (auto it = j.at("sources").begin(); it != j.at("sources").end(); ++it) {
        ModelWeights w(lw.tmpl.dimension(), 0.0);
        for (const auto& entry : it.value()) {
            auto idx = name_to_index.find(entry.at(0).get<std::string>());
            if (idx == name_to_index.end())
                fail("weights file: unknown feature '" + entry.at(0).get<std::string>() + "'");
            w[idx->second] = entry.at(1).get<double>();
        }
        lw.by_source.emplace(it.key(), std::move(w));
    }
    return lw;
}

WeightSet LoadedWeights::align(const Corpus& corpus) const {
    WeightSet out;
    for (const auto& src : corpus.sources) {
        auto it = by_source.find(src.id);
        if (it == by_source.end()) fail("weights file has no entry for source '" + src.id + "'");
        out.push_back(it->second);
    }
    return out;
}

}  // namespace concord
