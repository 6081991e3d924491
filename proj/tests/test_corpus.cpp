#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "lfa/corpus.hpp"
#include "lfa/errors.hpp"

using namespace lfa;

namespace {

const std::vector<std::string> kClasses = {"Pneumonia",    "Pulmonary Embolism",
                                           "Atrial Fibrillation", "Tuberculosis",
                                           "GERD",         "Asthma",
                                           "COPD"};

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
    auto path = std::filesystem::temp_directory_path() / ("lfa_corpus_" + name);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    return path;
}

} // namespace

TEST_CASE("load_corpus keeps valid notes in file order") {
    auto path = temp_file("ok.jsonl",
                          R"({"id":"a","diagnosis":"GERD","text":"heartburn after meals"})"
                          "\n"
                          R"({"id":"b","diagnosis":"Asthma","text":"wheezing at night"})"
                          "\n"
                          R"({"id":"c","diagnosis":"COPD","text":"chronic cough"})"
                          "\n");
    auto notes = load_corpus(path, kClasses);
    REQUIRE(notes.size() == 3);
    CHECK(notes[0].id == "a");
    CHECK(notes[1].id == "b");
    CHECK(notes[2].id == "c");
    CHECK(notes[0].diagnosis == "GERD");
}

TEST_CASE("load_corpus rejects an empty file") {
    auto path = temp_file("empty.jsonl", "");
    CHECK_THROWS_WITH_AS(load_corpus(path, kClasses), doctest::Contains("empty corpus"),
                         ValidationError);
}

TEST_CASE("load_corpus names the bad diagnosis and line") {
    auto path = temp_file("badclass.jsonl",
                          R"({"id":"a","diagnosis":"GERD","text":"x"})"
                          "\n"
                          R"({"id":"b","diagnosis":"Flu","text":"y"})"
                          "\n");
    try {
        load_corpus(path, kClasses);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        std::string msg = e.what();
        CHECK(msg.find("Flu") != std::string::npos);
        CHECK(msg.find(":2") != std::string::npos);
    }
}

TEST_CASE("load_corpus rejects duplicates, malformed lines, empty text") {
    CHECK_THROWS_AS(load_corpus(temp_file("dup.jsonl",
                                          R"({"id":"a","diagnosis":"GERD","text":"x"})"
                                          "\n"
                                          R"({"id":"a","diagnosis":"COPD","text":"y"})"
                                          "\n"),
                                kClasses),
                    ValidationError);
    CHECK_THROWS_WITH_AS(load_corpus(temp_file("mal.jsonl", "not json\n"), kClasses),
                         doctest::Contains(":1"), ValidationError);
    CHECK_THROWS_AS(load_corpus(temp_file("notext.jsonl",
                                          R"({"id":"a","diagnosis":"GERD","text":""})"
                                          "\n"),
                                kClasses),
                    ValidationError);
}

TEST_CASE("corpus load -> persist -> load is a fixed point") {
    auto path = temp_file("fp.jsonl",
                          R"({"id":"a","diagnosis":"GERD","text":"line one\nline two"})"
                          "\n"
                          R"({"id":"b","diagnosis":"COPD","text":"smoker with cough"})"
                          "\n");
    auto notes = load_corpus(path, kClasses);
    auto path2 = std::filesystem::temp_directory_path() / "lfa_corpus_fp2.jsonl";
    save_corpus(notes, path2);
    auto notes2 = load_corpus(path2, kClasses);
    REQUIRE(notes2.size() == notes.size());
    for (std::size_t i = 0; i < notes.size(); ++i) {
        CHECK(notes2[i].id == notes[i].id);
        CHECK(notes2[i].diagnosis == notes[i].diagnosis);
        CHECK(notes2[i].text == notes[i].text);
    }
    auto path3 = std::filesystem::temp_directory_path() / "lfa_corpus_fp3.jsonl";
    save_corpus(notes2, path3);
    std::ifstream a(path2, std::ios::binary), b(path3, std::ios::binary);
    std::string ca((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string cb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(ca == cb);
}

TEST_CASE("embedding round-trip is lossless") {
    std::vector<EmbeddingRecord> records;
    records.push_back({"a", Method::mask, 0.25, {0.1, -2.5e-17, 3.0, 0.30000000000000004}});
    records.push_back({"b", Method::none, 0.0, {1.0 / 3.0, 2.0 / 7.0, -0.0, 5e300}});
    auto path = std::filesystem::temp_directory_path() / "lfa_emb_rt.jsonl";
    persist_embeddings(records, path);
    auto loaded = load_embeddings(path);
    REQUIRE(loaded.size() == 2);
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(loaded[i].note_id == records[i].note_id);
        CHECK(loaded[i].method == records[i].method);
        CHECK(loaded[i].threshold == records[i].threshold);
        REQUIRE(loaded[i].vector.size() == records[i].vector.size());
        for (std::size_t j = 0; j < records[i].vector.size(); ++j) {
            CHECK(loaded[i].vector[j] == records[i].vector[j]); // bit-exact
        }
    }
}

TEST_CASE("persist_embeddings rejects mixed dimensions and non-finite values") {
    auto path = std::filesystem::temp_directory_path() / "lfa_emb_bad.jsonl";
    std::vector<EmbeddingRecord> mixed;
    mixed.push_back({"a", Method::none, 0.0, {1.0, 2.0, 3.0}});
    mixed.push_back({"b", Method::none, 0.0, {1.0, 2.0, 3.0, 4.0}});
    CHECK_THROWS_AS(persist_embeddings(mixed, path), ValidationError);

    std::vector<EmbeddingRecord> inf;
    inf.push_back({"a", Method::none, 0.0, {1.0, std::numeric_limits<double>::infinity()}});
    CHECK_THROWS_AS(persist_embeddings(inf, path), ValidationError);
}

TEST_CASE("variant round-trip preserves edits") {
    std::vector<NoteVariant> variants;
    NoteVariant v;
    v.note_id = "a";
    v.method = Method::mask;
    v.threshold = 0.5;
    v.seed = 12345;
    v.text = "has [MASK]";
    v.edits.push_back({4, 14, "chest pain", "[MASK]"});
    variants.push_back(v);
    auto path = std::filesystem::temp_directory_path() / "lfa_var_rt.jsonl";
    save_variants(variants, path);
    auto loaded = load_variants(path);
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].method == Method::mask);
    CHECK(loaded[0].seed == 12345);
    REQUIRE(loaded[0].edits.size() == 1);
    CHECK(loaded[0].edits[0].begin == 4);
    CHECK(loaded[0].edits[0].original == "chest pain");
}

TEST_CASE("cache_key determinism and injectivity") {
    auto k1 = cache_key("note-1", Method::mask, 0.25, 42, "prov");
    auto k2 = cache_key("note-1", Method::mask, 0.25, 42, "prov");
    CHECK(k1 == k2);
    CHECK(k1 != cache_key("note-1", Method::mask, 0.25, 43, "prov"));
    CHECK(k1 != cache_key("note-1", Method::mask, 0.25, 42, "prov2"));
    CHECK(k1 != cache_key("note-1", Method::negate, 0.25, 42, "prov"));
    CHECK(k1 != cache_key("note-1", Method::mask, 0.5, 42, "prov"));
    // separator characters inside fields must not collide with field joins
    CHECK(cache_key("a_b", Method::mask, 0.0, 0, "c") !=
          cache_key("a", Method::mask, 0.0, 0, "b_c"));
}

TEST_CASE("variant seeds are decorrelated across the tuple") {
    auto s = derive_variant_seed(7, "note-1", Method::mask, 0.25);
    CHECK(s == derive_variant_seed(7, "note-1", Method::mask, 0.25));
    CHECK(s != derive_variant_seed(8, "note-1", Method::mask, 0.25));
    CHECK(s != derive_variant_seed(7, "note-2", Method::mask, 0.25));
    CHECK(s != derive_variant_seed(7, "note-1", Method::negate, 0.25));
    CHECK(s != derive_variant_seed(7, "note-1", Method::mask, 0.5));
}

TEST_CASE("dialogues parse boolean and string answers") {
    auto path = temp_file(
        "dia.jsonl",
        R"({"age":44,"sex":"F","initial_evidence":[{"question":"q1","answer":true,"is_antecedent":false}],"qa_items":[{"question":"q1","answer":true,"is_antecedent":false},{"question":"q2","answer":"upper chest","is_antecedent":false}]})"
        "\n");
    auto dialogues = load_dialogues(path);
    REQUIRE(dialogues.size() == 1);
    CHECK(dialogues[0].age == 44);
    CHECK(dialogues[0].sex == "F");
    REQUIRE(dialogues[0].qa_items.size() == 2);
    CHECK(std::get<bool>(dialogues[0].qa_items[0].answer) == true);
    CHECK(std::get<std::string>(dialogues[0].qa_items[1].answer) == "upper chest");
}
