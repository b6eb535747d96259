#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace concord {

// One token sequence within a source. gold is a label id per token when
// present; is_labeled implies gold is present.
struct Instance {
    std::string source_id;
    std::string instance_id;
    std::vector<std::string> tokens;
    std::optional<std::vector<int>> gold;
    bool is_labeled = false;

    int length() const { return static_cast<int>(tokens.size()); }
};

struct Source {
    std::string id;
    std::vector<Instance> instances;
};

// Identifies an instance by position inside a Corpus.
struct InstanceRef {
    int source = -1;
    int instance = -1;

    bool operator==(const InstanceRef&) const = default;
    auto operator<=>(const InstanceRef&) const = default;
};

class Corpus {
public:
    std::vector<std::string> labels;  // label id -> name, dense
    std::vector<Source> sources;

    int label_id(const std::string& name) const;
    int other_label() const { return other_; }
    int num_labels() const { return static_cast<int>(labels.size()); }

    const Instance& at(InstanceRef r) const { return sources[r.source].instances[r.instance]; }
    Instance& at(InstanceRef r) { return sources[r.source].instances[r.instance]; }

    std::vector<InstanceRef> all_instances() const;
    std::vector<InstanceRef> labeled_of(int source) const;
    std::vector<InstanceRef> unlabeled_of(int source) const;

    // Resolves (source_id, instance_id) to a ref; fails on unknown ids.
    InstanceRef resolve(const std::string& source_id, const std::string& instance_id) const;

    // Called once after labels/sources are filled in.
    void finalize();

private:
    int other_ = -1;
};

// map field-name -> value string; field names must be non-Other label names
using SeedRecord = std::map<std::string, std::string>;

// Whitespace plus punctuation splitting; punctuation marks become their own
// tokens. "Groening, who" -> ["Groening", ",", "who"].
std::vector<std::string> tokenize(const std::string& text);

// JSON-lines corpus file. First line {"labels":[...]}, then one instance per
// line: {"source","id","tokens","gold"?,"labeled"}.
Corpus load_dataset(const std::string& path);
void save_dataset(const Corpus& corpus, const std::string& path);

std::vector<SeedRecord> load_seeds(const std::string& path);
void save_seeds(const std::vector<SeedRecord>& seeds, const std::string& path);

// Marks instances containing every field value of some seed (as contiguous
// token runs) as labeled: matched spans get the field label, everything else
// Other. Leftmost span wins when a value occurs more than once. A seed only
// matches when the leftmost spans of all its fields are pairwise disjoint.
// Returns the number of instances labeled.
int apply_seeds(Corpus& corpus, const std::vector<SeedRecord>& seeds);

}  // namespace concord
