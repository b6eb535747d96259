#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "concord/corpus.hpp"

namespace concord {

// sparse (feature index, value) pairs; indices unique and within dimension
using FeatureVector = std::vector<std::pair<int, double>>;

// Shared feature template over all sources. Node features are label-conjoined
// base keys (context words, token shapes, class prior); edge features are
// (prev label, label) transition indicators. The base-key dictionary is
// grow-only and frozen after a single-threaded vocabulary pass, after which
// extraction is pure and safe to call from any thread.
class FeatureTemplate {
public:
    FeatureTemplate() = default;

    // Vocabulary pass over every instance of the corpus.
    static FeatureTemplate build(const Corpus& corpus);

    int num_labels() const { return num_labels_; }
    int num_base_keys() const { return static_cast<int>(base_keys_.size()); }
    int dimension() const { return num_base_keys() * num_labels_ + num_labels_ * num_labels_; }

    int node_feature(int base_id, int label) const { return base_id * num_labels_ + label; }
    int transition_feature(int prev, int label) const {
        return num_base_keys() * num_labels_ + prev * num_labels_ + label;
    }

    // Raw label-independent key strings for one position (pure, static).
    static std::vector<std::string> base_key_names(const Instance& inst, int position);

    // Interned ids of the keys active at a position; unknown keys are skipped.
    std::vector<int> base_ids_at(const Instance& inst, int position) const;

    // prev_label must be present iff position > 0.
    FeatureVector extract(const Instance& inst, int position, int label,
                          std::optional<int> prev_label) const;

    // Human-readable name, invertible for weight serialization.
    std::string feature_name(int index) const;
    const std::vector<std::string>& label_names() const { return label_names_; }
    const std::vector<std::string>& base_keys() const { return base_keys_; }

    // Rebuild a template from serialized metadata (see trainer weight files).
    static FeatureTemplate from_parts(std::vector<std::string> labels,
                                      std::vector<std::string> base_keys);

private:
    std::vector<std::string> base_keys_;
    std::unordered_map<std::string, int> base_index_;
    std::vector<std::string> label_names_;
    int num_labels_ = 0;
};

// Per-instance base-key ids, computed once and reused across every
// potentials/expectation pass of an optimization run.
struct InstanceFeatures {
    std::vector<std::vector<int>> keys;  // position -> active base ids

    static InstanceFeatures build(const FeatureTemplate& tmpl, const Instance& inst);
};

}  // namespace concord
