#include "concord/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "concord/objectives.hpp"

using nlohmann::json;

namespace concord {

void ExperimentConfig::validate() const {
    if (cells.empty()) fail("experiment config: no cells");
    if (draws < 1) fail("experiment config: draws must be >= 1");
    if (train_sizes.empty()) fail("experiment config: no train sizes");
    static const std::vector<std::string> known = {
        "base", "clique", "node", "pair", "full", "tr1", "bhattacharyya",
        "collective-inference", "staged"};
    for (const auto& m : methods)
        if (std::find(known.begin(), known.end(), m) == known.end())
            fail("experiment config: unknown method '" + m + "'");
}

namespace {

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

bool corpus_fully_labeled(const Corpus& corpus) {
    for (const auto& src : corpus.sources)
        for (const auto& inst : src.instances)
            if (!inst.gold) return false;
    return true;
}

struct DrawResult {
    std::map<std::string, double> f1;  // method -> overall F1 on unlabeled
    NoiseAudit mined_audit;
    NoiseAudit unigram_audit;
    int num_cliques = 0;
};

std::vector<std::vector<std::vector<int>>> run_method(
    const std::string& method, const Workspace& ws, const AgreementSet& mined,
    const ExperimentConfig& config, const std::vector<InstanceRef>& validation) {
    if (method == "base") {
        WeightSet w = train_base_all(ws, config.gamma, config.max_iters, config.grad_tol);
        return decode_all(ws, w);
    }
    if (method == "collective-inference") {
        WeightSet w = train_base_all(ws, config.gamma, config.max_iters, config.grad_tol);
        return collective_inference_decode(ws, mined, w, config.bp);
    }
    if (method == "staged") {
        auto ordering = order_sources(ws.corpus());
        WeightSet w = staged_transfer_train(ws, ordering, config.staged_confidence, config.gamma,
                                            config.max_iters, config.grad_tol);
        return decode_all(ws, w);
    }
    TrainConfig tc;
    tc.lambda = config.lambda;
    tc.gamma = config.gamma;
    tc.variant = variant_from_name(method);
    tc.max_iters = config.max_iters;
    tc.grad_tol = config.grad_tol;
    tc.bp = config.bp;
    if (config.lambda_grid.size() > 1 && !validation.empty())
        tc.lambda = select_lambda(ws, mined, tc, config.lambda_grid, validation);
    TrainResult tr = train_collective(ws, mined, tc);
    return decode_all(ws, tr.weights);
}

DrawResult run_draw(const ExperimentConfig& config, const Corpus& base_corpus,
                    const std::vector<SeedRecord>& pool, int cell_index, int train_size,
                    int draw, const std::vector<std::string>& methods,
                    std::map<std::string, double>* wall_times) {
    Rng rng(((config.seed * 31 + static_cast<std::uint64_t>(cell_index)) * 31 +
             static_cast<std::uint64_t>(train_size)) *
                31 +
            static_cast<std::uint64_t>(draw));
    std::vector<int> idx(pool.size());
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx);
    const int n_train = std::min<int>(train_size, static_cast<int>(pool.size()));
    std::vector<SeedRecord> seeds;
    for (int k = 0; k < n_train; ++k) seeds.push_back(pool[idx[k]]);
    std::vector<SeedRecord> val_seeds;
    if (config.lambda_grid.size() > 1) {
        int n_val = std::min<int>(config.validation_seeds,
                                  static_cast<int>(pool.size()) - n_train);
        for (int k = 0; k < n_val; ++k) val_seeds.push_back(pool[idx[n_train + k]]);
    }

    Corpus corpus = base_corpus;
    apply_seeds(corpus, seeds);
    FeatureTemplate tmpl = FeatureTemplate::build(corpus);
    Workspace ws(corpus, tmpl);

    // instances matched by the held-out validation seeds, still unlabeled in
    // the training corpus
    std::vector<InstanceRef> validation;
    if (!val_seeds.empty()) {
        Corpus scratch = base_corpus;
        apply_seeds(scratch, val_seeds);
        for (const auto& ref : scratch.all_instances())
            if (scratch.at(ref).is_labeled && !corpus.at(ref).is_labeled &&
                corpus.at(ref).gold)
                validation.push_back(ref);
    }

    MineResult mined = mine_agreement(corpus, config.mine);
    DrawResult result;
    result.num_cliques = static_cast<int>(mined.agreement.cliques.size());
    if (corpus_fully_labeled(corpus)) {
        result.mined_audit = audit_noise(mined.agreement, corpus);
        result.unigram_audit =
            audit_noise(unigram_cliques(corpus, default_stopwords()), corpus);
    }

    std::vector<InstanceRef> eval_refs;
    for (const auto& ref : corpus.all_instances()) {
        const Instance& inst = corpus.at(ref);
        if (!inst.is_labeled && inst.gold &&
            std::find(validation.begin(), validation.end(), ref) == validation.end())
            eval_refs.push_back(ref);
    }

    for (const auto& method : methods) {
        double t0 = now_seconds();
        auto decoded = run_method(method, ws, mined.agreement, config, validation);
        EvalReport report = evaluate_f1(corpus, eval_refs, decoded, method, draw);
        if (wall_times) (*wall_times)[method] += now_seconds() - t0;
        if (config.self_check) {
            const Prf& o = report.overall;
            double expect = (o.precision + o.recall) > 0
                                ? 2 * o.precision * o.recall / (o.precision + o.recall)
                                : 0.0;
            if (std::abs(o.f1 - expect) > 1e-12) fail("self-check: F1 identity violated");
        }
        result.f1[method] = report.overall.f1;
    }
    return result;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config,
                                std::map<std::string, double>* wall_times) {
    config.validate();
    ExperimentReport report;

    std::vector<std::string> methods = config.methods;
    if (std::find(methods.begin(), methods.end(), "base") == methods.end())
        methods.insert(methods.begin(), "base");  // gains need the base run

    for (int ci = 0; ci < static_cast<int>(config.cells.size()); ++ci) {
        const ExperimentCell& cell = config.cells[ci];
        Corpus base_corpus;
        std::vector<SeedRecord> pool;
        if (!cell.dataset_path.empty()) {
            base_corpus = load_dataset(cell.dataset_path);
            pool = load_seeds(cell.dataset_path + ".seeds.json");
        } else {
            SynthOutput synth = generate_synthetic(cell.synth);
            base_corpus = std::move(synth.corpus);
            pool.assign(synth.records.begin(), synth.records.begin() + synth.seed_pool);
        }

        for (int train_size : config.train_sizes) {
            CellReport cr;
            cr.name = cell.name;
            cr.train_size = train_size;
            std::map<std::string, MethodSummary> summaries;
            for (const auto& m : methods) summaries[m].method = m;

            double mined_cn = 0.0, mined_pn = 0.0, uni_pn = 0.0;
            int cliques = 0;
            for (int draw = 0; draw < config.draws; ++draw) {
                DrawResult dr = run_draw(config, base_corpus, pool, ci, train_size, draw,
                                         methods, wall_times);
                if (config.self_check && draw == 0) {
                    DrawResult again = run_draw(config, base_corpus, pool, ci, train_size, draw,
                                                methods, nullptr);
                    if (again.f1 != dr.f1) fail("self-check: draw is not reproducible");
                }
                for (const auto& m : methods) {
                    summaries[m].f1_per_draw.push_back(dr.f1.at(m));
                    if (m != "base")
                        summaries[m].gain_per_draw.push_back(dr.f1.at(m) - dr.f1.at("base"));
                }
                mined_cn += dr.mined_audit.clique_noise;
                mined_pn += dr.mined_audit.position_noise;
                uni_pn += dr.unigram_audit.position_noise;
                cliques += dr.num_cliques;
            }
            const double n = config.draws;
            cr.mined_clique_noise = mined_cn / n;
            cr.mined_position_noise = mined_pn / n;
            cr.unigram_position_noise = uni_pn / n;
            cr.mean_cliques = static_cast<int>(cliques / config.draws);
            for (const auto& m : methods) {
                MethodSummary& s = summaries[m];
                s.mean_f1 = mean_of(s.f1_per_draw);
                s.std_f1 = std_of(s.f1_per_draw);
                s.mean_gain = mean_of(s.gain_per_draw);
                s.std_gain = std_of(s.gain_per_draw);
                cr.methods.push_back(s);
            }
            report.cells.push_back(std::move(cr));
        }
    }
    return report;
}

const MethodSummary& ExperimentReport::summary(const std::string& cell, int train_size,
                                               const std::string& method) const {
    for (const auto& cr : cells) {
        if (cr.name != cell || cr.train_size != train_size) continue;
        for (const auto& m : cr.methods)
            if (m.method == method) return m;
    }
    fail("report: no summary for cell '" + cell + "' method '" + method + "'");
}

double ExperimentReport::mean_gain(const std::string& method) const {
    std::vector<double> gains;
    for (const auto& cr : cells)
        for (const auto& m : cr.methods)
            if (m.method == method)
                gains.insert(gains.end(), m.gain_per_draw.begin(), m.gain_per_draw.end());
    return mean_of(gains);
}

std::string report_to_json(const ExperimentReport& report) {
    json cells = json::array();
    for (const auto& cr : report.cells) {
        json methods = json::array();
        for (const auto& m : cr.methods) {
            methods.push_back({{"method", m.method},
                               {"f1_per_draw", m.f1_per_draw},
                               {"gain_per_draw", m.gain_per_draw},
                               {"mean_f1", m.mean_f1},
                               {"std_f1", m.std_f1},
                               {"mean_gain", m.mean_gain},
                               {"std_gain", m.std_gain}});
        }
        cells.push_back({{"cell", cr.name},
                         {"train_size", cr.train_size},
                         {"methods", methods},
                         {"mined_clique_noise", cr.mined_clique_noise},
                         {"mined_position_noise", cr.mined_position_noise},
                         {"unigram_position_noise", cr.unigram_position_noise},
                         {"mean_cliques", cr.mean_cliques}});
    }
    json j;
    j["cells"] = cells;
    return j.dump(2) + "\n";
}

std::string report_table(const ExperimentReport& report) {
    std::ostringstream os;
    os << std::fixed;
    os.precision(3);
    for (const auto& cr : report.cells) {
        os << "== " << cr.name << " (train size " << cr.train_size << ", ~" << cr.mean_cliques
           << " cliques, mined noise " << cr.mined_position_noise << ", unigram noise "
           << cr.unigram_position_noise << ")\n";
        os << "   method                 F1      +/-     gain    +/-\n";
        for (const auto& m : cr.methods) {
            os << "   " << m.method;
            for (std::size_t pad = m.method.size(); pad < 22; ++pad) os << ' ';
            os << m.mean_f1 << "   " << m.std_f1;
            if (m.method != "base") os << "   " << m.mean_gain << "   " << m.std_gain;
            os << "\n";
        }
    }
    return os.str();
}

ExperimentConfig experiment_config_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open experiment config '" + path + "'");
    json j;
    in >> j;
    ExperimentConfig c;
    if (j.value("suite", "") == "standard") {
        c.cells = standard_suite(j.value("seed", static_cast<std::uint64_t>(7)));
    } else {
        for (const auto& cj : j.at("cells")) {
            ExperimentCell cell;
            cell.name = cj.at("name").get<std::string>();
            if (cj.contains("dataset")) {
                cell.dataset_path = cj["dataset"].get<std::string>();
            } else {
                const auto& sj = cj.at("synth");
                cell.synth.num_sources = sj.value("num_sources", cell.synth.num_sources);
                cell.synth.num_records = sj.value("num_records", cell.synth.num_records);
                cell.synth.fields_per_record =
                    sj.value("fields_per_record", cell.synth.fields_per_record);
                cell.synth.duplication_rate =
                    sj.value("duplication_rate", cell.synth.duplication_rate);
                cell.synth.template_jitter =
                    sj.value("template_jitter", cell.synth.template_jitter);
                cell.synth.distractor_rate =
                    sj.value("distractor_rate", cell.synth.distractor_rate);
                cell.synth.ambiguity = sj.value("ambiguity", cell.synth.ambiguity);
                cell.synth.common_records = sj.value("common_records", cell.synth.common_records);
                cell.synth.rng_seed = sj.value("rng_seed", static_cast<std::uint64_t>(0));
                cell.synth.validate();
            }
            c.cells.push_back(std::move(cell));
        }
    }
    if (j.contains("methods")) c.methods = j["methods"].get<std::vector<std::string>>();
    if (j.contains("train_sizes")) c.train_sizes = j["train_sizes"].get<std::vector<int>>();
    c.draws = j.value("draws", c.draws);
    c.lambda = j.value("lambda", c.lambda);
    if (j.contains("lambda_grid")) c.lambda_grid = j["lambda_grid"].get<std::vector<double>>();
    c.validation_seeds = j.value("validation_seeds", c.validation_seeds);
    c.gamma = j.value("gamma", c.gamma);
    c.mine.tau = j.value("tau", c.mine.tau);
    c.mine.min_len = j.value("min_len", c.mine.min_len);
    c.mine.fallback_threshold = j.value("fallback_threshold", c.mine.fallback_threshold);
    c.staged_confidence = j.value("staged_confidence", c.staged_confidence);
    c.max_iters = j.value("max_iters", c.max_iters);
    c.grad_tol = j.value("grad_tol", c.grad_tol);
    c.seed = j.value("seed", c.seed);
    c.self_check = j.value("self_check", c.self_check);
    c.validate();
    return c;
}

std::vector<ExperimentCell> standard_suite(std::uint64_t seed) {
    struct Spec {
        const char* name;
        double ambiguity;
        double duplication;
    };
    static const Spec specs[] = {
        {"easy-few", 0.2, 0.35},
        {"easy-many", 0.2, 0.8},
        {"mid-many", 0.5, 0.8},
        {"hard-few", 0.7, 0.35},
        {"hard-many", 0.7, 0.8},
    };
    std::vector<ExperimentCell> cells;
    int k = 0;
    for (const auto& s : specs) {
        ExperimentCell cell;
        cell.name = s.name;
        cell.synth.num_sources = 5;
        cell.synth.num_records = 48;
        cell.synth.fields_per_record = 3;
        cell.synth.duplication_rate = s.duplication;
        cell.synth.template_jitter = 1.0;
        cell.synth.distractor_rate = 0.08;
        cell.synth.ambiguity = s.ambiguity;
        cell.synth.common_records = 8;
        cell.synth.rng_seed = seed + static_cast<std::uint64_t>(100 + k++);
        cells.push_back(std::move(cell));
    }
    return cells;
}

AgreementSet inject_noisy_cliques(const Corpus& corpus, const AgreementSet& clean,
                                  double fraction, Rng& rng) {
    AgreementSet out = clean;
    if (clean.cliques.empty() || fraction <= 0.0) return out;
    // fraction is the share of noisy cliques in the returned set
    int target = static_cast<int>(std::ceil(fraction / (1.0 - fraction) *
                                            static_cast<double>(clean.cliques.size())));
    auto refs = corpus.all_instances();
    int made = 0, attempts = 0;
    while (made < target && attempts < target * 200) {
        ++attempts;
        InstanceRef a = refs[rng.next_int(0, static_cast<int>(refs.size()) - 1)];
        InstanceRef b = refs[rng.next_int(0, static_cast<int>(refs.size()) - 1)];
        if (a == b) continue;
        const Instance& ia = corpus.at(a);
        const Instance& ib = corpus.at(b);
        if (!ia.gold || !ib.gold) continue;
        int len = 1 + static_cast<int>(rng.next_int(0, 1));
        if (ia.length() < len || ib.length() < len) continue;
        int sa = static_cast<int>(rng.next_int(0, ia.length() - len));
        int sb = static_cast<int>(rng.next_int(0, ib.length() - len));
        bool disagrees = false;
        for (int off = 0; off < len; ++off)
            if ((*ia.gold)[sa + off] != (*ib.gold)[sb + off]) disagrees = true;
        if (!disagrees) continue;
        Clique noisy;
        noisy.members.push_back({a, sa, sa + len});
        noisy.members.push_back({b, sb, sb + len});
        out.cliques.push_back(std::move(noisy));
        ++made;
    }
    return out;
}

}  // namespace concord
