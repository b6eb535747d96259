#include "concord/synth.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "concord/util.hpp"

using nlohmann::json;

namespace concord {

void SynthConfig::validate() const {
    if (num_sources < 2) fail("synth config: num_sources must be >= 2");
    if (num_records < 1) fail("synth config: need at least one record");
    if (fields_per_record < 1) fail("synth config: need at least one field");
    for (double p : {duplication_rate, template_jitter, distractor_rate, ambiguity})
        if (p < 0.0 || p > 1.0) fail("synth config: probabilities must be in [0,1]");
    if (label_count != 0 && label_count != fields_per_record + 1)
        fail("synth config: label_count must equal fields_per_record + 1");
    if (common_records < 0 || common_records > num_records)
        fail("synth config: common_records must be in [0, num_records]");
}

namespace {

std::string make_word(Rng& rng) {
    static const char* consonants = "bdfgklmnprstvz";
    static const char* vowels = "aeiou";
    const int syllables = 2 + static_cast<int>(rng.next_int(0, 1));
    std::string w;
    for (int i = 0; i < syllables; ++i) {
        w.push_back(consonants[rng.next_int(0, 13)]);
        w.push_back(vowels[rng.next_int(0, 4)]);
    }
    return w;
}

std::string capitalize(std::string w) {
    if (!w.empty()) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    return w;
}

}  // namespace

SynthOutput generate_synthetic(const SynthConfig& config) {
    config.validate();
    Rng rng(config.rng_seed * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull);
    const int F = config.fields_per_record;

    SynthOutput out;
    out.corpus.labels.push_back("Other");
    for (int f = 0; f < F; ++f) out.corpus.labels.push_back("field" + std::to_string(f + 1));

    // shared ambiguous tokens that recur across records and fields
    std::vector<std::string> pool;
    const int pool_size = std::max(3, config.num_records / 12);
    for (int i = 0; i < pool_size; ++i) pool.push_back(make_word(rng));

    // canonical record table
    std::vector<std::vector<std::vector<std::string>>> values(config.num_records);
    for (int r = 0; r < config.num_records; ++r) {
        values[r].resize(F);
        for (int f = 0; f < F; ++f) {
            const int len = 1 + static_cast<int>(rng.next_int(0, 2));
            for (int t = 0; t < len; ++t) {
                bool distract = rng.next_bool(config.distractor_rate);
                std::string tok;
                if (distract) {
                    tok = pool[rng.next_int(0, pool_size - 1)];
                } else if (f == F - 1 && t == len - 1 && rng.next_bool(0.15)) {
                    tok = std::to_string(1900 + rng.next_int(0, 119));
                } else {
                    tok = make_word(rng);
                    if (f == 0) tok = capitalize(tok);
                }
                values[r][f].push_back(tok);
            }
        }
        SeedRecord rec;
        for (int f = 0; f < F; ++f) {
            std::string joined;
            for (std::size_t t = 0; t < values[r][f].size(); ++t) {
                if (t) joined += " ";
                joined += values[r][f][t];
            }
            rec[out.corpus.labels[f + 1]] = joined;
        }
        out.records.push_back(std::move(rec));
    }

    // per-source templates
    struct Template {
        std::vector<int> order;
        bool separators = true;
        std::string sep;
        std::string prefix, suffix;  // empty when absent
    };
    std::vector<Template> templates(config.num_sources);
    // separator-free (hard) sources are the trailing ones, stratified so the
    // corpus mix is deterministic in the ambiguity knob
    const int hard_count = static_cast<int>(
        std::lround(config.ambiguity * static_cast<double>(config.num_sources)));
    for (int s = 0; s < config.num_sources; ++s) {
        Template& t = templates[s];
        t.order.resize(F);
        std::iota(t.order.begin(), t.order.end(), 0);
        t.separators = s < config.num_sources - hard_count;
        if (config.template_jitter > 0.0) {
            if (rng.next_bool(config.template_jitter)) rng.shuffle(t.order);
            t.sep = "sep" + std::to_string(s);
            if (rng.next_bool(config.template_jitter)) t.prefix = "hd" + std::to_string(s);
            if (rng.next_bool(config.template_jitter)) t.suffix = "tl" + std::to_string(s);
        } else {
            t.sep = "sep";
        }
    }

    const int other = 0;
    for (int s = 0; s < config.num_sources; ++s) {
        Source src;
        src.id = "src" + std::to_string(s);
        out.corpus.sources.push_back(src);
    }
    for (int s = 0; s < config.num_sources; ++s) {
        const Template& t = templates[s];
        for (int r = 0; r < config.num_records; ++r) {
            bool drawn = rng.next_bool(config.duplication_rate);
            bool rendered = r < config.common_records || drawn;
            if (!rendered) continue;
            Instance inst;
            inst.source_id = out.corpus.sources[s].id;
            inst.instance_id = "r" + std::to_string(r);
            std::vector<int> gold;
            auto push = [&](const std::string& tok, int label) {
                inst.tokens.push_back(tok);
                gold.push_back(label);
            };
            if (!t.prefix.empty()) push(t.prefix, other);
            for (std::size_t k = 0; k < t.order.size(); ++k) {
                const int f = t.order[k];
                for (const auto& tok : values[r][f]) push(tok, f + 1);
                if (t.separators && k + 1 < t.order.size()) push(t.sep, other);
            }
            if (!t.suffix.empty()) push(t.suffix, other);
            inst.gold = std::move(gold);
            inst.is_labeled = false;
            out.corpus.sources[s].instances.push_back(std::move(inst));
        }
    }
    out.corpus.finalize();
    out.seed_pool = config.common_records > 0 ? config.common_records : config.num_records;
    return out;
}

SynthConfig synth_config_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open synth config '" + path + "'");
    json j;
    in >> j;
    SynthConfig c;
    c.num_sources = j.value("num_sources", c.num_sources);
    c.num_records = j.value("num_records", c.num_records);
    c.fields_per_record = j.value("fields_per_record", c.fields_per_record);
    c.duplication_rate = j.value("duplication_rate", c.duplication_rate);
    c.template_jitter = j.value("template_jitter", c.template_jitter);
    c.distractor_rate = j.value("distractor_rate", c.distractor_rate);
    c.ambiguity = j.value("ambiguity", c.ambiguity);
    c.common_records = j.value("common_records", c.common_records);
    c.label_count = j.value("label_count", c.label_count);
    c.rng_seed = j.value("rng_seed", static_cast<std::uint64_t>(0));
    c.validate();
    return c;
}

}  // namespace concord
