#include "lfa/entities.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "lfa/errors.hpp"
#include "lfa/text.hpp"

namespace lfa {

const char* category_name(EntityCategory c) {
    switch (c) {
        case EntityCategory::symptom: return "symptom";
        case EntityCategory::condition: return "condition";
        case EntityCategory::measurement: return "measurement";
        case EntityCategory::medication: return "medication";
        case EntityCategory::demographic: return "demographic";
    }
    return "symptom";
}

std::optional<EntityCategory> category_from_name(std::string_view name) {
    if (name == "symptom") return EntityCategory::symptom;
    if (name == "condition") return EntityCategory::condition;
    if (name == "measurement") return EntityCategory::measurement;
    if (name == "medication") return EntityCategory::medication;
    if (name == "demographic") return EntityCategory::demographic;
    return std::nullopt;
}

void Lexicon::add(std::string term, EntityCategory category) {
    std::string key = to_lower(term);
    std::size_t words = word_tokens(key).size();
    if (words == 0) return;
    max_words_ = std::max(max_words_, words);
    terms_.emplace(std::move(key), category);
}

std::optional<EntityCategory> Lexicon::lookup(std::string_view lowercased) const {
    auto it = terms_.find(lowercased);
    if (it == terms_.end()) return std::nullopt;
    return it->second;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open lexicon " + path.string());
    Lexicon lex;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": expected term<TAB>category");
        }
        auto category = category_from_name(line.substr(tab + 1));
        if (!category) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": unknown category '" + line.substr(tab + 1) + "'");
        }
        lex.add(line.substr(0, tab), *category);
    }
    if (lex.empty()) throw ValidationError(path.string() + ": empty lexicon");
    return lex;
}

void NegationTable::add(Rule rule) {
    rules_.push_back(std::move(rule));
}

NegationTable NegationTable::builtin() {
    NegationTable t;
    t.add({"has", "has", "no"});
    t.add({"reports", "reports", "denies"});
    t.add({"with", "with", "without"});
    t.add({"present", "present", "absent"});
    return t;
}

NegationTable NegationTable::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open negation table " + path.string());
    NegationTable t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto t1 = line.find('\t');
        auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": expected cue<TAB>affirmed<TAB>negated");
        }
        Rule r;
        r.cue = to_lower(line.substr(0, t1));
        r.affirmed = line.substr(t1 + 1, t2 - t1 - 1);
        r.negated = line.substr(t2 + 1);
        t.add(std::move(r));
    }
    return t;
}

bool NegationTable::is_cue(std::string_view word) const {
    for (const auto& r : rules_) {
        if (to_lower(r.negated) == word) return true;
    }
    return false;
}

std::optional<std::string> NegationTable::affirmed_for(std::string_view negated_cue) const {
    for (const auto& r : rules_) {
        if (to_lower(r.negated) == negated_cue) return r.affirmed;
    }
    return std::nullopt;
}

std::optional<std::string> NegationTable::negated_for(std::string_view affirmed_word) const {
    for (const auto& r : rules_) {
        if (to_lower(r.affirmed) == affirmed_word) return r.negated;
    }
    return std::nullopt;
}

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool boundary_before(std::string_view s, std::size_t i) {
    return i == 0 || std::isalnum(static_cast<unsigned char>(s[i - 1])) == 0;
}

// Units recognized after (or glued to) a number, lowercased.
const std::set<std::string>& unit_set() {
    static const std::set<std::string> units = {
        "mmhg", "bpm",  "mg",     "g",      "kg",     "mcg",   "ml",    "l",
        "dl",   "mg/dl", "mmol/l", "meq/l",  "%",      "c",     "f",     "cm",
        "mm",   "kg/m2", "/min",   "breaths/min", "beats/min", "units", "lbs",
        "iu",   "sec",  "msec",   "mcg/ml",
    };
    return units;
}

struct NumGroup {
    std::size_t begin = 0;
    std::size_t end = 0; // includes the unit text when present
    std::string unit;
    std::vector<NumberLexeme> nums;
};

std::optional<NumberLexeme> parse_num_at(std::string_view s, std::size_t i) {
    std::size_t j = i;
    while (j < s.size() && is_digit(s[j])) ++j;
    if (j == i) return std::nullopt;
    int decimals = 0;
    if (j + 1 < s.size() && s[j] == '.' && is_digit(s[j + 1])) {
        std::size_t k = j + 1;
        while (k < s.size() && is_digit(s[k])) ++k;
        decimals = static_cast<int>(k - j - 1);
        j = k;
    }
    double value = 0.0;
    if (!parse_double(s.substr(i, j - i), value)) return std::nullopt;
    NumberLexeme lex;
    lex.begin = i;
    lex.end = j;
    lex.value = value;
    lex.decimals = decimals;
    return lex;
}

std::vector<NumGroup> parse_number_groups(std::string_view s) {
    std::vector<NumGroup> out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (!is_digit(s[i]) || !boundary_before(s, i)) {
            ++i;
            continue;
        }
        auto first = parse_num_at(s, i);
        if (!first) {
            ++i;
            continue;
        }
        NumGroup group;
        group.begin = first->begin;
        group.nums.push_back(*first);
        std::size_t pos = first->end;
        while (pos < s.size() && s[pos] == '/') {
            auto next = parse_num_at(s, pos + 1);
            if (!next) break;
            group.nums.push_back(*next);
            pos = next->end;
        }
        group.end = pos;

        // unit: '%' glued, letters glued, or the next space-separated word
        auto read_unit = [&](std::size_t from) -> std::size_t {
            std::size_t k = from;
            while (k < s.size() && (std::isalnum(static_cast<unsigned char>(s[k])) ||
                                    s[k] == '/' || s[k] == '%')) {
                ++k;
            }
            if (k == from) return 0;
            std::string cand = to_lower(s.substr(from, k - from));
            if (!unit_set().count(cand)) return 0;
            group.unit = std::string(s.substr(from, k - from));
            return k;
        };
        if (pos < s.size() && s[pos] == '%') {
            group.unit = "%";
            group.end = pos + 1;
        } else if (pos < s.size() && std::isalpha(static_cast<unsigned char>(s[pos]))) {
            if (std::size_t k = read_unit(pos)) group.end = k;
        } else if (pos + 1 < s.size() && s[pos] == ' ') {
            if (std::size_t k = read_unit(pos + 1)) group.end = k;
        }
        for (auto& n : group.nums) n.unit = group.unit;
        std::size_t resume = group.end;
        out.push_back(std::move(group));
        i = std::max(resume, pos);
    }
    return out;
}

} // namespace

std::vector<NumberLexeme> parse_numbers(std::string_view surface) {
    std::vector<NumberLexeme> out;
    for (const auto& g : parse_number_groups(surface)) {
        for (const auto& n : g.nums) out.push_back(n);
    }
    return out;
}

namespace {

struct Candidate {
    std::size_t begin = 0, end = 0;
    EntityCategory category = EntityCategory::symptom;
    std::vector<NumericValue> numeric_values;
};

// Lexicon phrase matches starting at each token, longest phrase first.
void collect_lexicon_candidates(std::string_view text, const std::vector<Token>& tokens,
                                const Lexicon& lexicon, std::vector<Candidate>& out) {
    for (std::size_t ti = 0; ti < tokens.size(); ++ti) {
        std::size_t max_span = std::min(lexicon.max_words(), tokens.size() - ti);
        for (std::size_t len = max_span; len >= 1; --len) {
            std::size_t b = tokens[ti].begin;
            std::size_t e = tokens[ti + len - 1].end;
            // normalize: lowercase, interior whitespace runs -> single space
            std::string norm;
            norm.reserve(e - b);
            bool in_space = false;
            for (char raw : text.substr(b, e - b)) {
                unsigned char c = static_cast<unsigned char>(raw);
                if (std::isspace(c)) {
                    in_space = true;
                    continue;
                }
                if (in_space && !norm.empty()) norm.push_back(' ');
                in_space = false;
                norm.push_back(c < 0x80 ? static_cast<char>(std::tolower(c))
                                        : static_cast<char>(c));
            }
            auto cat = lexicon.lookup(norm);
            if (cat) {
                out.push_back(Candidate{b, e, *cat, {}});
                break; // longest match at this start wins
            }
        }
    }
}

// Measurement groups. Bare numbers with no unit are skipped so dates and list
// indices are not treated as vitals.
void collect_measurement_candidates(std::string_view text, std::vector<Candidate>& out) {
    for (auto& g : parse_number_groups(text)) {
        if (g.unit.empty()) continue;
        Candidate c;
        c.begin = g.begin;
        c.end = g.end;
        c.category = EntityCategory::measurement;
        for (const auto& n : g.nums) c.numeric_values.push_back(NumericValue{n.value, n.unit});
        out.push_back(std::move(c));
    }
}

// "<age>-year-old" demographics.
void collect_age_candidates(std::string_view text, std::vector<Candidate>& out) {
    static const std::string suffix = "-year-old";
    std::size_t pos = 0;
    while ((pos = text.find(suffix, pos)) != std::string_view::npos) {
        std::size_t digit_end = pos;
        std::size_t digit_begin = digit_end;
        while (digit_begin > 0 && is_digit(text[digit_begin - 1])) --digit_begin;
        if (digit_begin < digit_end && boundary_before(text, digit_begin)) {
            out.push_back(
                Candidate{digit_begin, pos + suffix.size(), EntityCategory::demographic, {}});
        }
        pos += suffix.size();
    }
}

} // namespace

std::vector<EntitySpan> extract_entities(std::string_view text, const Lexicon& lexicon,
                                         const NegationTable& negation) {
    if (lexicon.empty()) throw ValidationError("empty lexicon");
    if (text.empty()) return {};

    auto tokens = word_tokens(text);
    std::vector<Candidate> candidates;
    collect_lexicon_candidates(text, tokens, lexicon, candidates);
    collect_measurement_candidates(text, candidates);
    collect_age_candidates(text, candidates);

    // Longest match wins across all sources; earlier start breaks ties.
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) {
                         std::size_t la = a.end - a.begin, lb = b.end - b.begin;
                         if (la != lb) return la > lb;
                         return a.begin < b.begin;
                     });
    std::vector<Candidate> kept;
    for (auto& c : candidates) {
        bool overlaps = false;
        for (const auto& k : kept) {
            if (c.begin < k.end && k.begin < c.end) {
                overlaps = true;
                break;
            }
        }
        if (!overlaps) kept.push_back(std::move(c));
    }
    std::sort(kept.begin(), kept.end(),
              [](const Candidate& a, const Candidate& b) { return a.begin < b.begin; });

    std::vector<EntitySpan> spans;
    spans.reserve(kept.size());
    for (auto& c : kept) {
        EntitySpan span;
        span.begin = c.begin;
        span.end = c.end;
        span.surface = std::string(text.substr(c.begin, c.end - c.begin));
        span.category = c.category;
        span.numeric_values = std::move(c.numeric_values);
        spans.push_back(std::move(span));
    }
    detect_polarity(text, spans, negation);
    return spans;
}

void detect_polarity(std::string_view text, std::vector<EntitySpan>& spans,
                     const NegationTable& negation) {
    auto tokens = word_tokens(text);
    for (EntitySpan& span : spans) {
        span.polarity = Polarity::affirmed;
        std::size_t cstart = clause_start(text, span.begin);
        for (const Token& t : tokens) {
            if (t.end > span.begin) break;
            if (t.begin < cstart) continue;
            if (negation.is_cue(to_lower(t.view(text)))) {
                span.polarity = Polarity::negated;
                break;
            }
        }
    }
}

} // namespace lfa
