#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "concord/experiment.hpp"
#include "concord/objectives.hpp"
#include "concord/parallel.hpp"
#include "concord/synth.hpp"
#include "concord/trainer.hpp"

using namespace concord;
using nlohmann::json;

namespace {

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) fail("cannot write '" + path + "'");
    out << text;
}

void write_predictions(const Corpus& corpus,
                       const std::vector<std::vector<std::vector<int>>>& decoded,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write predictions file '" + path + "'");
    for (std::size_t s = 0; s < corpus.sources.size(); ++s) {
        for (std::size_t i = 0; i < corpus.sources[s].instances.size(); ++i) {
            const Instance& inst = corpus.sources[s].instances[i];
            json j;
            j["source"] = inst.source_id;
            j["id"] = inst.instance_id;
            std::vector<std::string> names;
            for (int y : decoded[s][i]) names.push_back(corpus.labels[y]);
            j["labels"] = names;
            out << j.dump() << "\n";
        }
    }
}

int cmd_synth(const std::string& config_path, const std::string& out_corpus,
              const std::string& out_records) {
    SynthConfig config = synth_config_from_file(config_path);
    SynthOutput synth = generate_synthetic(config);
    save_dataset(synth.corpus, out_corpus);
    save_seeds(synth.records, out_records);
    std::cerr << "wrote " << out_corpus << " (" << synth.corpus.all_instances().size()
              << " instances, " << synth.corpus.sources.size() << " sources) and "
              << out_records << " (" << synth.records.size() << " records)\n";
    return 0;
}

int cmd_mine(const std::string& corpus_path, const std::string& seeds_path,
             const MineConfig& config, const std::string& out, const std::string& dot_path,
             bool audit) {
    Corpus corpus = load_dataset(corpus_path);
    if (!seeds_path.empty()) apply_seeds(corpus, load_seeds(seeds_path));
    MineResult result = mine_agreement(corpus, config);
    save_agreement(result.agreement, corpus, out);
    std::cerr << "mined " << result.agreement.cliques.size() << " cliques (provenance "
              << provenance_name(result.agreement.provenance) << ", mean matched similarity "
              << result.mean_matched_weight << (result.fell_back ? ", fell back to unigram" : "")
              << ")\n";
    if (audit) {
        NoiseAudit na = audit_noise(result.agreement, corpus);
        std::cerr << "noise: clique-level " << na.clique_noise << ", position-level "
                  << na.position_noise << "\n";
    }
    if (!dot_path.empty()) {
        // global fused graph over all mined cliques, topology only
        std::vector<InstanceRef> refs;
        std::vector<LocalClique> local;
        std::map<InstanceRef, int> index;
        for (const auto& c : result.agreement.cliques) {
            LocalClique lc;
            for (const auto& m : c.members) {
                auto it = index.find(m.ref);
                if (it == index.end()) it = index.emplace(m.ref, static_cast<int>(refs.size())).first,
                refs.push_back(m.ref);
                lc.push_back({index.at(m.ref), m.start, m.end});
            }
            local.push_back(std::move(lc));
        }
        std::vector<int> lengths;
        for (const auto& r : refs) lengths.push_back(corpus.at(r).length());
        write_file(dot_path, to_dot(build_fused(lengths, local)));
    }
    return 0;
}

int cmd_train(const std::string& corpus_path, const std::string& seeds_path,
              const std::string& agreement_path, const TrainConfig& config,
              const std::string& out, const std::string& trace_path,
              const std::string& diag_path) {
    Corpus corpus = load_dataset(corpus_path);
    if (!seeds_path.empty()) apply_seeds(corpus, load_seeds(seeds_path));
    FeatureTemplate tmpl = FeatureTemplate::build(corpus);
    Workspace ws(corpus, tmpl);
    AgreementSet agreement;
    if (!agreement_path.empty()) agreement = load_agreement(agreement_path, corpus);

    TrainResult result = config.em ? train_em(ws, agreement, config)
                                   : train_collective(ws, agreement, config);
    save_weights(tmpl, corpus, result.weights, out);
    std::cerr << "trained in " << result.objective_trace.size() << " objective evaluations, "
              << (result.converged ? "converged" : "max iterations") << ", wall time "
              << result.wall_time_sec << "s\n";

    if (!trace_path.empty()) {
        std::ofstream tr(trace_path);
        for (std::size_t i = 0; i < result.objective_trace.size(); ++i)
            tr << json({{"iter", i}, {"objective", result.objective_trace[i]}}).dump() << "\n";
    }
    if (!diag_path.empty()) {
        AgreementResult ar =
            agreement_ll(ws, config.variant, agreement, result.weights, config.bp);
        std::ofstream dg(diag_path);
        for (std::size_t k = 0; k < ar.partition_logprobs.size(); ++k)
            dg << json({{"partition", k}, {"logprob", ar.partition_logprobs[k]}}).dump() << "\n";
        dg << json({{"value", ar.value}, {"warning", ar.warning}, {"converged", ar.converged}})
                  .dump()
           << "\n";
    }
    return 0;
}

int cmd_infer(const std::string& corpus_path, const std::string& weights_path,
              const std::string& out, bool collective, const std::string& agreement_path,
              const BpConfig& bp, const std::string& dot_path) {
    Corpus corpus = load_dataset(corpus_path);
    LoadedWeights lw = load_weights(weights_path);
    WeightSet weights = lw.align(corpus);
    Workspace ws(corpus, lw.tmpl);

    std::vector<std::vector<std::vector<int>>> decoded;
    if (collective) {
        if (agreement_path.empty()) fail("--collective requires --agreement-set");
        AgreementSet agreement = load_agreement(agreement_path, corpus);
        decoded = collective_inference_decode(ws, agreement, weights, bp);
        if (!dot_path.empty()) {
            std::vector<InstanceRef> refs;
            std::vector<LocalClique> local;
            std::map<InstanceRef, int> index;
            for (const auto& c : agreement.cliques) {
                LocalClique lc;
                for (const auto& m : c.members) {
                    if (!index.count(m.ref)) {
                        index.emplace(m.ref, static_cast<int>(refs.size()));
                        refs.push_back(m.ref);
                    }
                    lc.push_back({index.at(m.ref), m.start, m.end});
                }
                local.push_back(std::move(lc));
            }
            std::vector<int> lengths;
            for (const auto& r : refs) lengths.push_back(corpus.at(r).length());
            write_file(dot_path, to_dot(build_fused(lengths, local)));
        }
    } else {
        decoded = decode_all(ws, weights);
    }
    write_predictions(corpus, decoded, out);
    return 0;
}

int cmd_eval(const std::string& corpus_path, const std::string& pred_path,
             const std::string& out) {
    Corpus corpus = load_dataset(corpus_path);
    std::ifstream in(pred_path);
    if (!in) fail("cannot open predictions file '" + pred_path + "'");

    std::vector<std::vector<std::vector<int>>> decoded(corpus.sources.size());
    for (std::size_t s = 0; s < corpus.sources.size(); ++s)
        decoded[s].resize(corpus.sources[s].instances.size());
    std::vector<InstanceRef> refs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        InstanceRef ref = corpus.resolve(j.at("source").get<std::string>(),
                                         j.at("id").get<std::string>());
        std::vector<int> labels;
        for (const auto& name : j.at("labels")) {
            int id = corpus.label_id(name.get<std::string>());
            if (id < 0) fail("predictions: unknown label '" + name.get<std::string>() + "'");
            labels.push_back(id);
        }
        decoded[ref.source][ref.instance] = std::move(labels);
        if (corpus.at(ref).gold) refs.push_back(ref);
    }
    EvalReport report = evaluate_f1(corpus, refs, decoded, "eval", 0);
    json j;
    j["method"] = report.method;
    j["overall"] = {{"precision", report.overall.precision},
                    {"recall", report.overall.recall},
                    {"f1", report.overall.f1},
                    {"tp", report.overall.tp},
                    {"predicted", report.overall.predicted},
                    {"gold", report.overall.gold}};
    json per = json::array();
    for (const auto& [id, prf] : report.per_source)
        per.push_back({{"source", id},
                       {"precision", prf.precision},
                       {"recall", prf.recall},
                       {"f1", prf.f1}});
    j["per_source"] = per;
    std::string text = j.dump(2) + "\n";
    if (out.empty())
        std::cout << text;
    else
        write_file(out, text);
    return 0;
}

int cmd_experiment(const std::string& config_path, const std::string& out,
                   const std::string& table_path, const std::string& timing_path,
                   bool self_check) {
    ExperimentConfig config = experiment_config_from_file(config_path);
    if (self_check) config.self_check = true;
    std::map<std::string, double> wall;
    ExperimentReport report = run_experiment(config, &wall);
    write_file(out, report_to_json(report));
    std::string table = report_table(report);
    if (!table_path.empty()) write_file(table_path, table);
    std::cerr << table;
    if (!timing_path.empty()) {
        // wall times are machine-dependent, kept out of the main report
        json t = json::object();
        for (const auto& [m, sec] : wall) t[m] = sec;
        write_file(timing_path, t.dump(2) + "\n");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"concord: collective training of chain extraction models over overlapping sources"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (0 = all cores)");

    auto* synth = app.add_subcommand("synth", "generate a synthetic multi-source corpus");
    std::string sy_config, sy_corpus = "corpus.jsonl", sy_records = "records.json";
    synth->add_option("--config", sy_config, "synth config JSON")->required();
    synth->add_option("--out", sy_corpus, "output corpus (JSON-lines)");
    synth->add_option("--records", sy_records, "output seed-record pool (JSON)");

    auto* mine = app.add_subcommand("mine", "mine an agreement set from a corpus");
    std::string mi_corpus, mi_seeds, mi_out = "agreement.json", mi_dot, mi_scheme = "mined";
    MineConfig mi_config;
    bool mi_audit = false;
    mine->add_option("--corpus", mi_corpus)->required();
    mine->add_option("--seeds", mi_seeds, "seed records to apply before mining");
    mine->add_option("--tau", mi_config.tau, "match threshold (default 0.4)");
    mine->add_option("--min-len", mi_config.min_len, "minimum segment length");
    mine->add_option("--fallback-threshold", mi_config.fallback_threshold,
                     "unigram fallback threshold on mean matched similarity (0 disables)");
    mine->add_option("--scheme", mi_scheme, "mined|unigram");
    mine->add_option("--out", mi_out);
    mine->add_option("--dot", mi_dot, "write the fused graph topology as DOT");
    mine->add_flag("--audit", mi_audit, "report noise against gold labels");

    auto* train = app.add_subcommand("train", "train models (base or collective)");
    std::string tr_corpus, tr_seeds, tr_agreement, tr_variant = "clique", tr_out = "weights.json";
    std::string tr_trace, tr_diag, tr_optimizer = "lbfgs";
    TrainConfig tr_config;
    train->add_option("--corpus", tr_corpus)->required();
    train->add_option("--seeds", tr_seeds, "seed records to apply before training");
    train->add_option("--agreement-set", tr_agreement, "agreement set JSON (omit for base only)");
    train->add_option("--agreement", tr_variant,
                      "clique|node|pair|full|tr1|bhattacharyya");
    train->add_option("--lambda", tr_config.lambda);
    train->add_option("--gamma", tr_config.gamma);
    train->add_option("--optimizer", tr_optimizer, "lbfgs|ga");
    train->add_flag("--em", tr_config.em, "EM training (clique/node variants)");
    train->add_option("--seed", tr_config.rng_seed);
    train->add_option("--max-iters", tr_config.max_iters);
    train->add_option("--grad-tol", tr_config.grad_tol);
    train->add_option("--out", tr_out);
    train->add_option("--trace", tr_trace, "objective trace (JSON-lines)");
    train->add_option("--diagnostics", tr_diag, "per-clique log-probs (JSON-lines)");

    auto* infer = app.add_subcommand("infer", "decode a corpus with trained weights");
    std::string in_corpus, in_weights, in_out = "predictions.jsonl", in_agreement, in_dot;
    bool in_collective = false;
    BpConfig in_bp;
    infer->add_option("--corpus", in_corpus)->required();
    infer->add_option("--weights", in_weights)->required();
    infer->add_option("--out", in_out);
    infer->add_flag("--collective", in_collective, "max-product on the global fused graph");
    infer->add_option("--agreement-set", in_agreement);
    infer->add_option("--dot", in_dot, "write the fused graph as DOT (with --collective)");

    auto* eval = app.add_subcommand("eval", "entity F1 of predictions against gold");
    std::string ev_corpus, ev_pred, ev_out;
    eval->add_option("--corpus", ev_corpus)->required();
    eval->add_option("--pred", ev_pred)->required();
    eval->add_option("--out", ev_out, "write report JSON here instead of stdout");

    auto* exp = app.add_subcommand("experiment", "run the full experiment protocol");
    std::string ex_config, ex_out = "report.json", ex_table, ex_timing;
    bool ex_self_check = false;
    exp->add_option("--config", ex_config)->required();
    exp->add_option("--out", ex_out);
    exp->add_option("--table", ex_table, "plain-text summary table");
    exp->add_option("--timing", ex_timing, "wall-time sidecar JSON (not byte-stable)");
    exp->add_flag("--self-check", ex_self_check,
                  "verify internal invariants; nonzero exit on failure");

    CLI11_PARSE(app, argc, argv);
    parallel::set_threads(threads);

    try {
        if (*synth) return cmd_synth(sy_config, sy_corpus, sy_records);
        if (*mine) {
            mi_config.scheme = mi_scheme == "unigram" ? MineScheme::Unigram : MineScheme::Mined;
            if (mi_scheme != "mined" && mi_scheme != "unigram")
                fail("--scheme must be mined or unigram");
            return cmd_mine(mi_corpus, mi_seeds, mi_config, mi_out, mi_dot, mi_audit);
        }
        if (*train) {
            tr_config.variant = variant_from_name(tr_variant);
            if (tr_optimizer == "ga")
                tr_config.optimizer = Optimizer::GradientAscent;
            else if (tr_optimizer != "lbfgs")
                fail("--optimizer must be lbfgs or ga");
            return cmd_train(tr_corpus, tr_seeds, tr_agreement, tr_config, tr_out, tr_trace,
                             tr_diag);
        }
        if (*infer)
            return cmd_infer(in_corpus, in_weights, in_out, in_collective, in_agreement, in_bp,
                             in_dot);
        if (*eval) return cmd_eval(ev_corpus, ev_pred, ev_out);
        if (*exp) return cmd_experiment(ex_config, ex_out, ex_table, ex_timing, ex_self_check);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
