#include "lfa/corpus.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "lfa/errors.hpp"
#include "lfa/hashing.hpp"
#include "lfa/text.hpp"

namespace lfa {

using nlohmann::json;

const char* method_name(Method m) {
    switch (m) {
        case Method::none: return "none";
        case Method::mask: return "mask";
        case Method::negate: return "negate";
        case Method::synonym: return "synonym";
        case Method::numeric: return "numeric";
    }
    return "none";
}

std::optional<Method> method_from_name(std::string_view name) {
    if (name == "none") return Method::none;
    if (name == "mask") return Method::mask;
    if (name == "negate") return Method::negate;
    if (name == "synonym") return Method::synonym;
    if (name == "numeric") return Method::numeric;
    return std::nullopt;
}

namespace {

json parse_line(const std::string& line, const std::filesystem::path& path, std::size_t lineno) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": malformed record");
    }
    return j;
}

std::string require_string(const json& j, const char* key, const std::filesystem::path& path,
                           std::size_t lineno) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
        throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": missing field '" +
                              key + "'");
    }
    return it->get<std::string>();
}

template <typename Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        fn(line, lineno);
    }
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

Method parse_method_field(const json& j, const std::filesystem::path& path, std::size_t lineno) {
    auto m = method_from_name(require_string(j, "method", path, lineno));
    if (!m) {
        throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": unknown method");
    }
    return *m;
}

QaItem qa_item_from_json(const json& j, const std::filesystem::path& path, std::size_t lineno) {
    QaItem item;
    item.question = require_string(j, "question", path, lineno);
    auto ans = j.find("answer");
    if (ans == j.end()) {
        throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                              ": qa item missing 'answer'");
    }
    if (ans->is_boolean()) {
        item.answer = ans->get<bool>();
    } else if (ans->is_string()) {
        item.answer = ans->get<std::string>();
    } else {
        throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                              ": qa answer must be string or boolean");
    }
    item.is_antecedent = j.value("is_antecedent", false);
    return item;
}

} // namespace

std::vector<ClinicalNote> load_corpus(const std::filesystem::path& path,
                                      const std::vector<std::string>& class_set) {
    std::set<std::string> classes(class_set.begin(), class_set.end());
    std::vector<ClinicalNote> notes;
    std::unordered_set<std::string> seen_ids;

    for_each_line(path, [&](const std::string& line, std::size_t lineno) {
        json j = parse_line(line, path, lineno);
        ClinicalNote note;
        note.id = require_string(j, "id", path, lineno);
        note.diagnosis = require_string(j, "diagnosis", path, lineno);
        note.text = require_string(j, "text", path, lineno);
        note.source = j.value("source", std::string("ingested")) == "generated"
                          ? NoteSource::generated
                          : NoteSource::ingested;
        if (note.text.empty()) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": empty text");
        }
        if (!seen_ids.insert(note.id).second) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": duplicate id '" + note.id + "'");
        }
        if (!classes.count(note.diagnosis)) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": diagnosis '" +
                                  note.diagnosis + "' is not in the configured class set");
        }
        notes.push_back(std::move(note));
    });

    if (notes.empty()) throw ValidationError(path.string() + ": empty corpus");
    return notes;
}

void save_corpus(const std::vector<ClinicalNote>& notes, const std::filesystem::path& path) {
    auto out = open_out(path);
    for (const auto& n : notes) {
        json j{{"id", n.id},
               {"diagnosis", n.diagnosis},
               {"text", n.text},
               {"source", n.source == NoteSource::generated ? "generated" : "ingested"}};
        out << j.dump() << '\n';
    }
}

std::vector<DialogueRecord> load_dialogues(const std::filesystem::path& path) {
    std::vector<DialogueRecord> dialogues;
    for_each_line(path, [&](const std::string& line, std::size_t lineno) {
        json j = parse_line(line, path, lineno);
        DialogueRecord d;
        if (!j.contains("age") || !j["age"].is_number_integer()) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": missing field 'age'");
        }
        d.age = j["age"].get<int>();
        d.sex = require_string(j, "sex", path, lineno);
        for (const auto& q : j.value("initial_evidence", json::array())) {
            d.initial_evidence.push_back(qa_item_from_json(q, path, lineno));
        }
        for (const auto& q : j.value("qa_items", json::array())) {
            d.qa_items.push_back(qa_item_from_json(q, path, lineno));
        }
        dialogues.push_back(std::move(d));
    });
    return dialogues;
}

void save_variants(const std::vector<NoteVariant>& variants, const std::filesystem::path& path) {
    auto out = open_out(path);
    for (const auto& v : variants) {
        json edits = json::array();
        for (const auto& e : v.edits) {
            edits.push_back(json{{"begin", e.begin},
                                 {"end", e.end},
                                 {"original", e.original},
                                 {"replacement", e.replacement}});
        }
        json j{{"note_id", v.note_id},    {"method", method_name(v.method)},
               {"threshold", v.threshold}, {"seed", v.seed},
               {"text", v.text},           {"edits", std::move(edits)}};
        out << j.dump() << '\n';
    }
}

std::vector<NoteVariant> load_variants(const std::filesystem::path& path) {
    std::vector<NoteVariant> variants;
    for_each_line(path, [&](const std::string& line, std::size_t lineno) {
        json j = parse_line(line, path, lineno);
        NoteVariant v;
        v.note_id = require_string(j, "note_id", path, lineno);
        v.method = parse_method_field(j, path, lineno);
        v.threshold = j.value("threshold", 0.0);
        v.seed = j.value("seed", std::uint64_t{0});
        v.text = require_string(j, "text", path, lineno);
        for (const auto& e : j.value("edits", json::array())) {
            TextEdit edit;
            edit.begin = e.value("begin", std::size_t{0});
            edit.end = e.value("end", std::size_t{0});
            edit.original = e.value("original", std::string());
            edit.replacement = e.value("replacement", std::string());
            v.edits.push_back(std::move(edit));
        }
        variants.push_back(std::move(v));
    });
    return variants;
}

void persist_embeddings(const std::vector<EmbeddingRecord>& records,
                        const std::filesystem::path& path) {
    std::size_t dim = records.empty() ? 0 : records.front().vector.size();
    for (const auto& r : records) {
        if (r.vector.size() != dim) {
            throw ValidationError("mixed embedding dimensions: " + std::to_string(dim) + " vs " +
                                  std::to_string(r.vector.size()) + " (note " + r.note_id + ")");
        }
        for (double x : r.vector) {
            if (!std::isfinite(x)) {
                throw ValidationError("non-finite embedding component (note " + r.note_id + ")");
            }
        }
    }
    auto out = open_out(path);
    for (const auto& r : records) {
        json j{{"note_id", r.note_id},
               {"method", method_name(r.method)},
               {"threshold", r.threshold},
               {"vector", r.vector}};
        out << j.dump() << '\n';
    }
}

std::vector<EmbeddingRecord> load_embeddings(const std::filesystem::path& path) {
    std::vector<EmbeddingRecord> records;
    for_each_line(path, [&](const std::string& line, std::size_t lineno) {
        json j = parse_line(line, path, lineno);
        EmbeddingRecord r;
        r.note_id = require_string(j, "note_id", path, lineno);
        r.method = parse_method_field(j, path, lineno);
        r.threshold = j.value("threshold", 0.0);
        auto vec = j.find("vector");
        if (vec == j.end() || !vec->is_array()) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": missing field 'vector'");
        }
        r.vector = vec->get<std::vector<double>>();
        if (!records.empty() && r.vector.size() != records.front().vector.size()) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": mixed embedding dimensions");
        }
        records.push_back(std::move(r));
    });
    return records;
}

namespace {

// Escape everything outside [A-Za-z0-9.-] so joining fields with '_' stays
// injective.
std::string escape_field(std::string_view s) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '.' || c == '-') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(digits[c >> 4]);
            out.push_back(digits[c & 0xf]);
        }
    }
    return out;
}

} // namespace

std::string cache_key(std::string_view note_id, Method method, double threshold,
                      std::uint64_t seed, std::string_view provider_id) {
    std::string key = escape_field(note_id);
    key += '_';
    key += method_name(method);
    key += "_t";
    key += escape_field(format_double(threshold));
    key += "_s";
    key += std::to_string(seed);
    key += '_';
    key += escape_field(provider_id);
    return key;
}

std::uint64_t derive_variant_seed(std::uint64_t run_seed, std::string_view note_id, Method method,
                                  double threshold) {
    std::uint64_t h = fnv1a64(note_id, run_seed ^ 0x51ed2701a3c5e897ULL);
    h = hash_combine(h, fnv1a64(method_name(method)));
    h = hash_combine(h, fnv1a64(format_double(threshold)));
    return h;
}

} // namespace lfa
