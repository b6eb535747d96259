#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "concord/corpus.hpp"
#include "concord/features.hpp"

using namespace concord;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content)
        : path("/tmp/concord_test_" + name) {
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

const char* kSmallDataset =
    R"({"labels":["Other","Author","Title"]}
{"source":"a","id":"a1","tokens":["Matt","Groening",",","The","Simpsons"],"labeled":false}
{"source":"a","id":"a2","tokens":["Life","in","Hell"],"labeled":false}
{"source":"b","id":"b1","tokens":["The","Simpsons","by","Matt","Groening"],"labeled":false}
{"source":"b","id":"b2","tokens":["Futurama","1999"],"gold":["Title","Other"],"labeled":true}
)";

}  // namespace

TEST_CASE("load_dataset groups instances by source") {
    TempFile f("load.jsonl", kSmallDataset);
    Corpus c = load_dataset(f.path);
    CHECK(c.sources.size() == 2);
    CHECK(c.sources[0].instances.size() == 2);
    CHECK(c.sources[1].instances.size() == 2);
    CHECK(c.num_labels() == 3);
    CHECK(c.other_label() == 0);
    CHECK(c.label_id("Title") == 2);
    CHECK(c.sources[1].instances[1].is_labeled);
    CHECK((*c.sources[1].instances[1].gold)[0] == 2);
}

TEST_CASE("load_dataset reports malformed lines and bad labels") {
    {
        TempFile f("bad1.jsonl", "{\"labels\":[\"Other\",\"A\"]}\nnot json\n");
        CHECK_THROWS_WITH_AS(load_dataset(f.path), doctest::Contains(":2"), std::runtime_error);
    }
    {
        TempFile f("bad2.jsonl",
                   "{\"labels\":[\"Other\",\"A\"]}\n"
                   "{\"source\":\"a\",\"id\":\"x\",\"tokens\":[\"t\"],\"gold\":[\"A\",\"A\"]}\n");
        CHECK_THROWS_WITH_AS(load_dataset(f.path), doctest::Contains("mismatch"),
                             std::runtime_error);
    }
    {
        TempFile f("bad3.jsonl",
                   "{\"labels\":[\"Other\",\"A\"]}\n"
                   "{\"source\":\"a\",\"id\":\"x\",\"tokens\":[\"t\"],\"gold\":[\"Bogus\"]}\n");
        CHECK_THROWS_WITH_AS(load_dataset(f.path), doctest::Contains("unknown label"),
                             std::runtime_error);
    }
    {
        TempFile f("bad4.jsonl", "{\"labels\":[\"A\",\"B\"]}\n");
        CHECK_THROWS_WITH_AS(load_dataset(f.path), doctest::Contains("Other"),
                             std::runtime_error);
    }
}

TEST_CASE("dataset round-trip preserves the corpus") {
    TempFile f("rt.jsonl", kSmallDataset);
    Corpus c = load_dataset(f.path);
    TempFile g("rt2.jsonl", "");
    save_dataset(c, g.path);
    Corpus c2 = load_dataset(g.path);
    REQUIRE(c2.sources.size() == c.sources.size());
    CHECK(c2.labels == c.labels);
    for (std::size_t s = 0; s < c.sources.size(); ++s) {
        REQUIRE(c2.sources[s].instances.size() == c.sources[s].instances.size());
        for (std::size_t i = 0; i < c.sources[s].instances.size(); ++i) {
            const Instance& a = c.sources[s].instances[i];
            const Instance& b = c2.sources[s].instances[i];
            CHECK(a.tokens == b.tokens);
            CHECK(a.instance_id == b.instance_id);
            CHECK(a.is_labeled == b.is_labeled);
            CHECK((a.gold.has_value()) == (b.gold.has_value()));
            if (a.gold) CHECK(*a.gold == *b.gold);
        }
    }
}

TEST_CASE("tokenize splits whitespace and punctuation") {
    CHECK(tokenize("Matt Groening, The Simpsons") ==
          std::vector<std::string>{"Matt", "Groening", ",", "The", "Simpsons"});
    CHECK(tokenize("  a  b ") == std::vector<std::string>{"a", "b"});
    CHECK(tokenize("(1994)") == std::vector<std::string>{"(", "1994", ")"});
}

TEST_CASE("apply_seeds labels matched spans, leftmost occurrence, rest Other") {
    TempFile f("seed.jsonl", kSmallDataset);
    Corpus c = load_dataset(f.path);
    std::vector<SeedRecord> seeds = {{{"Author", "Matt Groening"}}};
    int n = apply_seeds(c, seeds);
    CHECK(n == 2);  // a1 and b1 both contain the span
    const Instance& a1 = c.sources[0].instances[0];
    CHECK(a1.is_labeled);
    CHECK(*a1.gold == std::vector<int>{1, 1, 0, 0, 0});
    const Instance& b1 = c.sources[1].instances[0];
    CHECK(*b1.gold == std::vector<int>{0, 0, 0, 1, 1});
    // a2 untouched
    CHECK(!c.sources[0].instances[1].is_labeled);

    // idempotent
    Corpus before = c;
    apply_seeds(c, seeds);
    for (std::size_t s = 0; s < c.sources.size(); ++s)
        for (std::size_t i = 0; i < c.sources[s].instances.size(); ++i) {
            CHECK(c.sources[s].instances[i].is_labeled ==
                  before.sources[s].instances[i].is_labeled);
            if (before.sources[s].instances[i].gold)
                CHECK(*c.sources[s].instances[i].gold == *before.sources[s].instances[i].gold);
        }
}

TEST_CASE("apply_seeds: two fields of one seed label one instance") {
    TempFile f("seed2.jsonl",
               "{\"labels\":[\"Other\",\"Author\",\"Title\"]}\n"
               "{\"source\":\"a\",\"id\":\"x\",\"tokens\":[\"The\",\"Simpsons\",\"by\",\"Matt\","
               "\"Groening\",\"!\"]}\n");
    Corpus c = load_dataset(f.path);
    std::vector<SeedRecord> seeds = {{{"Author", "Matt Groening"}, {"Title", "The Simpsons"}}};
    apply_seeds(c, seeds);
    CHECK(*c.sources[0].instances[0].gold == std::vector<int>{2, 2, 0, 1, 1, 0});
    // oracle: exhaustive substring search agrees on the spans
    const auto& toks = c.sources[0].instances[0].tokens;
    for (std::size_t p = 0; p + 1 < toks.size(); ++p) {
        if (toks[p] == "Matt" && toks[p + 1] == "Groening") {
            CHECK((*c.sources[0].instances[0].gold)[p] == 1);
            break;
        }
    }
}

TEST_CASE("apply_seeds: no match leaves the source untouched; empty value fails") {
    TempFile f("seed3.jsonl", kSmallDataset);
    Corpus c = load_dataset(f.path);
    std::vector<SeedRecord> none = {{{"Author", "Nobody Here"}}};
    apply_seeds(c, none);
    for (const auto& src : c.sources)
        CHECK(c.labeled_of(c.sources[0].id == src.id ? 0 : 1).size() <= 1);  // only b2 pre-labeled

    std::vector<SeedRecord> bad = {{{"Author", "  "}}};
    CHECK_THROWS(apply_seeds(c, bad));
    std::vector<SeedRecord> empty;
    CHECK_THROWS(apply_seeds(c, empty));
}

TEST_CASE("apply_seeds output covers every position") {
    TempFile f("seed4.jsonl", kSmallDataset);
    Corpus c = load_dataset(f.path);
    apply_seeds(c, {{{"Title", "The Simpsons"}}});
    for (const auto& src : c.sources)
        for (const auto& inst : src.instances)
            if (inst.is_labeled) {
                REQUIRE(inst.gold.has_value());
                CHECK(inst.gold->size() == inst.tokens.size());
            }
}

TEST_CASE("feature extraction: prior at position 0, shapes, determinism") {
    TempFile f("feat.jsonl",
               "{\"labels\":[\"Other\",\"A\"]}\n"
               "{\"source\":\"s\",\"id\":\"i\",\"tokens\":[\"Groening\",\"wrote\",\"1994\"]}\n");
    Corpus c = load_dataset(f.path);
    FeatureTemplate tmpl = FeatureTemplate::build(c);
    const Instance& inst = c.sources[0].instances[0];

    FeatureVector at0 = tmpl.extract(inst, 0, 1, std::nullopt);
    bool has_bias = false, has_transition = false;
    for (const auto& [k, v] : at0) {
        if (tmpl.feature_name(k) == "bias|y=A") has_bias = true;
        if (tmpl.feature_name(k).rfind("trans|", 0) == 0) has_transition = true;
    }
    CHECK(has_bias);
    CHECK(!has_transition);

    CHECK(tmpl.extract(inst, 1, 0, 1) == tmpl.extract(inst, 1, 0, 1));

    auto names_at = [&](int pos) {
        std::vector<std::string> names;
        for (int id : tmpl.base_ids_at(inst, pos)) names.push_back(tmpl.base_keys()[id]);
        return names;
    };
    auto n0 = names_at(0);
    CHECK(std::find(n0.begin(), n0.end(), "shape=cap") != n0.end());
    auto n2 = names_at(2);
    CHECK(std::find(n2.begin(), n2.end(), "shape=digit") != n2.end());

    // no duplicate indices in any extraction
    for (int p = 0; p < inst.length(); ++p) {
        auto fv = tmpl.extract(inst, p, 1, p > 0 ? std::optional<int>(0) : std::nullopt);
        std::set<int> seen;
        for (const auto& [k, v] : fv) CHECK(seen.insert(k).second);
    }

    // position/prev contract
    CHECK_THROWS(tmpl.extract(inst, 0, 1, 0));
    CHECK_THROWS(tmpl.extract(inst, 1, 1, std::nullopt));
}

TEST_CASE("feature template round-trips through its parts") {
    TempFile f("tmpl.jsonl", kSmallDataset);
    Corpus c = load_dataset(f.path);
    FeatureTemplate tmpl = FeatureTemplate::build(c);
    FeatureTemplate again = FeatureTemplate::from_parts(tmpl.label_names(), tmpl.base_keys());
    CHECK(again.dimension() == tmpl.dimension());
    const Instance& inst = c.sources[0].instances[0];
    CHECK(again.extract(inst, 1, 1, 0) == tmpl.extract(inst, 1, 1, 0));
}
