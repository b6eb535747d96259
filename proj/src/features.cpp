#include "concord/features.hpp"

#include <algorithm>
#include <cctype>

#include "concord/util.hpp"

namespace concord {

namespace {

std::string lowercase(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool is_capitalized(const std::string& s) {
    return !s.empty() && std::isupper(static_cast<unsigned char>(s[0]));
}

bool is_digits(const std::string& s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isdigit(c) != 0; });
}

bool is_punct(const std::string& s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::ispunct(c) != 0; });
}

}  // namespace

std::vector<std::string> FeatureTemplate::base_key_names(const Instance& inst, int position) {
    std::vector<std::string> keys;
    const int n = inst.length();
    for (int off = -2; off <= 2; ++off) {
        int p = position + off;
        std::string tok;
        if (p < 0)
            tok = "<bos>";
        else if (p >= n)
            tok = "<eos>";
        else
            tok = lowercase(inst.tokens[p]);
        keys.push_back("w[" + std::to_string(off) + "]=" + tok);
    }
    const std::string& cur = inst.tokens[position];
    if (is_capitalized(cur)) keys.push_back("shape=cap");
    if (is_digits(cur)) keys.push_back("shape=digit");
    if (is_punct(cur)) keys.push_back("shape=punct");
    keys.push_back("bias");
    return keys;
}

FeatureTemplate FeatureTemplate::build(const Corpus& corpus) {
    FeatureTemplate tmpl;
    tmpl.label_names_ = corpus.labels;
    tmpl.num_labels_ = corpus.num_labels();
    for (const auto& src : corpus.sources) {
        for (const auto& inst : src.instances) {
            for (int p = 0; p < inst.length(); ++p) {
                for (auto& key : base_key_names(inst, p)) {
                    if (tmpl.base_index_.emplace(key, static_cast<int>(tmpl.base_keys_.size())).second)
                        tmpl.base_keys_.push_back(key);
                }
            }
        }
    }
    return tmpl;
}

FeatureTemplate FeatureTemplate::from_parts(std::vector<std::string> labels,
                                            std::vector<std::string> base_keys) {
    FeatureTemplate tmpl;
    tmpl.label_names_ = std::move(labels);
    tmpl.num_labels_ = static_cast<int>(tmpl.label_names_.size());
    tmpl.base_keys_ = std::move(base_keys);
    for (int i = 0; i < static_cast<int>(tmpl.base_keys_.size()); ++i)
        tmpl.base_index_.emplace(tmpl.base_keys_[i], i);
    return tmpl;
}

std::vector<int> FeatureTemplate::base_ids_at(const Instance& inst, int position) const {
    std::vector<int> ids;
    for (auto& key : base_key_names(inst, position)) {
        auto it = base_index_.find(key);
        if (it != base_index_.end()) ids.push_back(it->second);
    }
    return ids;
}

FeatureVector FeatureTemplate::extract(const Instance& inst, int position, int label,
                                       std::optional<int> prev_label) const {
    if (position < 0 || position >= inst.length())
        fail("extract: position out of range");
    if ((position > 0) != prev_label.has_value())
        fail("extract: prev_label must be present iff position > 0");
    FeatureVector fv;
    for (int base : base_ids_at(inst, position))
        fv.emplace_back(node_feature(base, label), 1.0);
    if (prev_label) fv.emplace_back(transition_feature(*prev_label, label), 1.0);
    return fv;
}

std::string FeatureTemplate::feature_name(int index) const {
    const int node_block = num_base_keys() * num_labels_;
    if (index < node_block) {
        int base = index / num_labels_;
        int label = index % num_labels_;
        return base_keys_[base] + "|y=" + label_names_[label];
    }
    int t = index - node_block;
    return "trans|" + label_names_[t / num_labels_] + ">" + label_names_[t % num_labels_];
}

InstanceFeatures InstanceFeatures::build(const FeatureTemplate& tmpl, const Instance& inst) {
    InstanceFeatures f;
    f.keys.resize(inst.length());
    for (int p = 0; p < inst.length(); ++p) f.keys[p] = tmpl.base_ids_at(inst, p);
    return f;
}

}  // namespace concord
