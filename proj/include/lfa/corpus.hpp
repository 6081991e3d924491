#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace lfa {

enum class Method { none, mask, negate, synonym, numeric };

const char* method_name(Method m);
std::optional<Method> method_from_name(std::string_view name);

// Canonical order of the four perturbation operators in reports and files.
inline const std::vector<Method>& perturbation_methods() {
    static const std::vector<Method> methods = {Method::mask, Method::negate, Method::synonym,
                                                Method::numeric};
    return methods;
}

enum class NoteSource { generated, ingested };

struct ClinicalNote {
    std::string id;
    std::string diagnosis;
    std::string text;
    NoteSource source = NoteSource::ingested;
};

struct QaItem {
    std::string question;
    std::variant<bool, std::string> answer;
    bool is_antecedent = false;
};

struct DialogueRecord {
    int age = 0;
    std::string sex; // "F", "M", or anything else (treated as other)
    std::vector<QaItem> initial_evidence;
    std::vector<QaItem> qa_items;
};

struct TextEdit {
    std::size_t begin = 0; // byte range in the *original* text
    std::size_t end = 0;
    std::string original;
    std::string replacement;
};

struct NoteVariant {
    std::string note_id;
    Method method = Method::none;
    double threshold = 0.0;
    std::uint64_t seed = 0;
    std::string text;
    std::vector<TextEdit> edits;
};

struct EmbeddingRecord {
    std::string note_id;
    Method method = Method::none;
    double threshold = 0.0;
    std::vector<double> vector;
};

// --- line-delimited stores -------------------------------------------------

// Notes file: one JSON object per line with fields id, diagnosis, text and
// optional source. Validates ids unique, diagnoses against class_set, text
// non-empty. Order preserved.
std::vector<ClinicalNote> load_corpus(const std::filesystem::path& path,
                                      const std::vector<std::string>& class_set);

void save_corpus(const std::vector<ClinicalNote>& notes, const std::filesystem::path& path);

std::vector<DialogueRecord> load_dialogues(const std::filesystem::path& path);

void save_variants(const std::vector<NoteVariant>& variants, const std::filesystem::path& path);
std::vector<NoteVariant> load_variants(const std::filesystem::path& path);

// Embedding rows share one dimension; non-finite components are rejected at
// write time. Round-trip is lossless for finite doubles.
void persist_embeddings(const std::vector<EmbeddingRecord>& records,
                        const std::filesystem::path& path);
std::vector<EmbeddingRecord> load_embeddings(const std::filesystem::path& path);

// Deterministic, injective key for content-addressed caches. Fields are
// percent-escaped so the joined string decodes uniquely.
std::string cache_key(std::string_view note_id, Method method, double threshold,
                      std::uint64_t seed, std::string_view provider_id);

// Per-variant seed, decorrelated across (note, method, threshold).
std::uint64_t derive_variant_seed(std::uint64_t run_seed, std::string_view note_id, Method method,
                                  double threshold);

} // namespace lfa
