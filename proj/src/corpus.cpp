#include "concord/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "concord/util.hpp"

using nlohmann::json;

namespace concord {

int Corpus::label_id(const std::string& name) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == name) return static_cast<int>(i);
    return -1;
}

std::vector<InstanceRef> Corpus::all_instances() const {
    std::vector<InstanceRef> out;
    for (int s = 0; s < static_cast<int>(sources.size()); ++s)
        for (int i = 0; i < static_cast<int>(sources[s].instances.size()); ++i)
            out.push_back({s, i});
    return out;
}

std::vector<InstanceRef> Corpus::labeled_of(int source) const {
    std::vector<InstanceRef> out;
    const auto& insts = sources[source].instances;
    for (int i = 0; i < static_cast<int>(insts.size()); ++i)
        if (insts[i].is_labeled) out.push_back({source, i});
    return out;
}

std::vector<InstanceRef> Corpus::unlabeled_of(int source) const {
    std::vector<InstanceRef> out;
    const auto& insts = sources[source].instances;
    for (int i = 0; i < static_cast<int>(insts.size()); ++i)
        if (!insts[i].is_labeled) out.push_back({source, i});
    return out;
}

InstanceRef Corpus::resolve(const std::string& source_id, const std::string& instance_id) const {
    for (int s = 0; s < static_cast<int>(sources.size()); ++s) {
        if (sources[s].id != source_id) continue;
        const auto& insts = sources[s].instances;
        for (int i = 0; i < static_cast<int>(insts.size()); ++i)
            if (insts[i].instance_id == instance_id) return {s, i};
        fail("unknown instance id '" + instance_id + "' in source '" + source_id + "'");
    }
    fail("unknown source id '" + source_id + "'");
}

void Corpus::finalize() {
    other_ = -1;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == "Other") {
            if (other_ >= 0) fail("label space contains 'Other' twice");
            other_ = static_cast<int>(i);
        }
    }
    if (other_ < 0) fail("label space must contain exactly one 'Other' label");
    for (const auto& src : sources) {
        for (const auto& inst : src.instances) {
            if (inst.tokens.empty())
                fail("instance '" + inst.instance_id + "' has no tokens");
            if (inst.gold && inst.gold->size() != inst.tokens.size())
                fail("instance '" + inst.instance_id + "': gold labels length " +
                     std::to_string(inst.gold->size()) + " != token count " +
                     std::to_string(inst.tokens.size()));
            if (inst.is_labeled && !inst.gold)
                fail("instance '" + inst.instance_id + "' is labeled but has no gold labels");
        }
    }
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    };
    for (unsigned char ch : text) {
        if (std::isspace(ch)) {
            flush();
        } else if (std::ispunct(ch)) {
            flush();
            out.emplace_back(1, static_cast<char>(ch));
        } else {
            cur.push_back(static_cast<char>(ch));
        }
    }
    flush();
    return out;
}

Corpus load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open dataset file '" + path + "'");

    Corpus corpus;
    std::string line;
    std::size_t line_no = 0;

    auto parse_line = [&](const std::string& text) -> json {
        json j = json::parse(text, nullptr, false);
        if (j.is_discarded())
            fail(path + ":" + std::to_string(line_no) + ": malformed JSON line");
        return j;
    };

    // header
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json header = parse_line(line);
        if (!header.contains("labels") || !header["labels"].is_array())
            fail(path + ":" + std::to_string(line_no) + ": first line must be {\"labels\":[...]}");
        for (const auto& l : header["labels"]) corpus.labels.push_back(l.get<std::string>());
        break;
    }
    if (corpus.labels.empty()) fail(path + ": empty dataset (no label header)");

    std::map<std::string, int> source_index;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = parse_line(line);
        Instance inst;
        try {
            inst.source_id = j.at("source").get<std::string>();
            inst.instance_id = j.at("id").get<std::string>();
            inst.tokens = j.at("tokens").get<std::vector<std::string>>();
            inst.is_labeled = j.value("labeled", false);
            if (j.contains("gold")) {
                std::vector<int> gold;
                for (const auto& g : j["gold"]) {
                    int id = corpus.label_id(g.get<std::string>());
                    if (id < 0)
                        fail(path + ":" + std::to_string(line_no) + ": unknown label name '" +
                             g.get<std::string>() + "'");
                    gold.push_back(id);
                }
                inst.gold = std::move(gold);
            }
        } catch (const json::exception& e) {
            fail(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (inst.gold && inst.gold->size() != inst.tokens.size())
            fail(path + ":" + std::to_string(line_no) + ": instance '" + inst.instance_id +
                 "' gold length mismatch");
        auto it = source_index.find(inst.source_id);
        if (it == source_index.end()) {
            it = source_index.emplace(inst.source_id, static_cast<int>(corpus.sources.size())).first;
            corpus.sources.push_back({inst.source_id, {}});
        }
        corpus.sources[it->second].instances.push_back(std::move(inst));
    }
    corpus.finalize();
    return corpus;
}

void save_dataset(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write dataset file '" + path + "'");
    json header;
    header["labels"] = corpus.labels;
    out << header.dump() << "\n";
    for (const auto& src : corpus.sources) {
        for (const auto& inst : src.instances) {
            json j;
            j["source"] = inst.source_id;
            j["id"] = inst.instance_id;
            j["tokens"] = inst.tokens;
            if (inst.gold) {
                std::vector<std::string> names;
                for (int g : *inst.gold) names.push_back(corpus.labels[g]);
                j["gold"] = names;
            }
            j["labeled"] = inst.is_labeled;
            out << j.dump() << "\n";
        }
    }
}

std::vector<SeedRecord> load_seeds(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open seeds file '" + path + "'");
    json j;
    in >> j;
    if (!j.is_array()) fail(path + ": seeds file must be a JSON list of objects");
    std::vector<SeedRecord> seeds;
    for (const auto& item : j) {
        SeedRecord rec;
        for (auto it = item.begin(); it != item.end(); ++it)
            rec[it.key()] = it.value().get<std::string>();
        seeds.push_back(std::move(rec));
    }
    return seeds;
}

void save_seeds(const std::vector<SeedRecord>& seeds, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write seeds file '" + path + "'");
    json j = json::array();
    for (const auto& rec : seeds) {
        json o = json::object();
        for (const auto& [k, v] : rec) o[k] = v;
        j.push_back(o);
    }
    out << j.dump(2) << "\n";
}

namespace {

// leftmost start of needle in haystack, or -1
int find_subsequence(const std::vector<std::string>& haystack,
                     const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > haystack.size()) return -1;
    for (std::size_t s = 0; s + needle.size() <= haystack.size(); ++s) {
        bool ok = true;
        for (std::size_t k = 0; k < needle.size(); ++k) {
            if (haystack[s + k] != needle[k]) {
                ok = false;
                break;
            }
        }
        if (ok) return static_cast<int>(s);
    }
    return -1;
}

}  // namespace

int apply_seeds(Corpus& corpus, const std::vector<SeedRecord>& seeds) {
    if (seeds.empty()) fail("apply_seeds: empty seed list");

    struct TokenizedSeed {
        std::vector<std::pair<int, std::vector<std::string>>> fields;  // label id, value tokens
    };
    std::vector<TokenizedSeed> prepared;
    for (const auto& seed : seeds) {
        TokenizedSeed ts;
        for (const auto& [field, value] : seed) {
            int label = corpus.label_id(field);
            if (label < 0 || label == corpus.other_label())
                fail("apply_seeds: seed field '" + field + "' is not a non-Other label");
            auto toks = tokenize(value);
            if (toks.empty()) fail("apply_seeds: seed field '" + field + "' tokenizes to empty");
            ts.fields.emplace_back(label, std::move(toks));
        }
        prepared.push_back(std::move(ts));
    }

    int labeled_count = 0;
    for (auto& src : corpus.sources) {
        for (auto& inst : src.instances) {
            for (const auto& seed : prepared) {
                std::vector<std::pair<int, std::pair<int, int>>> spans;  // label, [start,end)
                bool all_found = true;
                for (const auto& [label, toks] : seed.fields) {
                    int start = find_subsequence(inst.tokens, toks);
                    if (start < 0) {
                        all_found = false;
                        break;
                    }
                    spans.emplace_back(label, std::make_pair(start, start + static_cast<int>(toks.size())));
                }
                if (!all_found) continue;
                bool disjoint = true;
                for (std::size_t a = 0; a < spans.size() && disjoint; ++a)
                    for (std::size_t b = a + 1; b < spans.size() && disjoint; ++b)
                        if (spans[a].second.first < spans[b].second.second &&
                            spans[b].second.first < spans[a].second.second)
                            disjoint = false;
                if (!disjoint) continue;

                std::vector<int> gold(inst.tokens.size(), corpus.other_label());
                for (const auto& [label, span] : spans)
                    for (int p = span.first; p < span.second; ++p) gold[p] = label;
                inst.gold = std::move(gold);
                if (!inst.is_labeled) ++labeled_count;
                inst.is_labeled = true;
                break;  // first matching seed wins
            }
        }
    }
    return labeled_count;
}

}  // namespace concord
