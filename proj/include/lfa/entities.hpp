#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lfa {

enum class EntityCategory { symptom, condition, measurement, medication, demographic };

const char* category_name(EntityCategory c);
std::optional<EntityCategory> category_from_name(std::string_view name);

enum class Polarity { affirmed, negated };

struct NumericValue {
    double value = 0.0;
    std::string unit; // empty when the grammar found no unit
};

struct EntitySpan {
    std::size_t begin = 0; // byte range into the note text
    std::size_t end = 0;
    std::string surface;
    EntityCategory category = EntityCategory::symptom;
    Polarity polarity = Polarity::affirmed;
    std::vector<NumericValue> numeric_values; // measurement spans with parsed numbers only
};

// Term -> category map, matched case-insensitively at word boundaries
// (longest match wins). File format: term<TAB>category per line, '#' comments.
class Lexicon {
public:
    void add(std::string term, EntityCategory category);
    static Lexicon load(const std::filesystem::path& path);

    bool empty() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }
    std::size_t max_words() const { return max_words_; }
    std::optional<EntityCategory> lookup(std::string_view lowercased) const;

private:
    std::map<std::string, EntityCategory, std::less<>> terms_;
    std::size_t max_words_ = 0;
};

// Cue rewrite pairs for the negation operator, and the cue set used for
// polarity detection. File format: cue<TAB>affirmed-form<TAB>negated-form.
class NegationTable {
public:
    struct Rule {
        std::string cue;
        std::string affirmed;
        std::string negated;
    };

    void add(Rule rule);
    static NegationTable load(const std::filesystem::path& path);
    static NegationTable builtin(); // has/no, reports/denies, with/without, present/absent

    bool is_cue(std::string_view lowercased_word) const;
    // Maps a negated cue word to its affirmed form, or vice versa.
    std::optional<std::string> affirmed_for(std::string_view negated_cue) const;
    std::optional<std::string> negated_for(std::string_view affirmed_word) const;
    const std::string& default_negation_cue() const { return default_cue_; }

private:
    std::vector<Rule> rules_;
    std::string default_cue_ = "no";
};

// Parsed number lexeme inside a measurement surface. Offsets are relative to
// the surface string handed to parse_numbers.
struct NumberLexeme {
    std::size_t begin = 0;
    std::size_t end = 0;
    double value = 0.0;
    int decimals = 0;
    std::string unit;
};

// Number/unit grammar shared by extraction and the numeric operator:
// NUM ('/' NUM)* [unit], with units from a fixed clinical list ('%' may be
// glued to the number).
std::vector<NumberLexeme> parse_numbers(std::string_view surface);

// Extract entity spans: lexicon terms, measurement groups, and
// "<age>-year-old" demographics. Spans are sorted by start offset and
// non-overlapping; polarity comes from negation cues within the clause.
std::vector<EntitySpan> extract_entities(std::string_view text, const Lexicon& lexicon,
                                         const NegationTable& negation);

// Marks each span negated when a cue token precedes it within its clause.
void detect_polarity(std::string_view text, std::vector<EntitySpan>& spans,
                     const NegationTable& negation);

} // namespace lfa
