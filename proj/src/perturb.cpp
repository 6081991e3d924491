#include "lfa/perturb.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "lfa/errors.hpp"
#include "lfa/hashing.hpp"
#include "lfa/text.hpp"

namespace lfa {

void SynonymMap::add(std::string term, std::vector<std::string> synonyms) {
    if (synonyms.empty()) return;
    map_.emplace(to_lower(term), std::move(synonyms));
}

SynonymMap SynonymMap::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open synonym map " + path.string());
    SynonymMap map;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": expected term<TAB>syn1|syn2|...");
        }
        std::vector<std::string> syns;
        std::string rest = line.substr(tab + 1);
        std::size_t start = 0;
        while (start <= rest.size()) {
            auto bar = rest.find('|', start);
            std::string syn = rest.substr(start, bar == std::string::npos ? bar : bar - start);
            if (!syn.empty()) syns.push_back(std::move(syn));
            if (bar == std::string::npos) break;
            start = bar + 1;
        }
        map.add(line.substr(0, tab), std::move(syns));
    }
    return map;
}

bool SynonymMap::has(std::string_view term) const { return map_.find(term) != map_.end(); }

const std::vector<std::string>* SynonymMap::lookup(std::string_view term) const {
    auto it = map_.find(term);
    return it == map_.end() ? nullptr : &it->second;
}

std::size_t round_half_up(double x) {
    return static_cast<std::size_t>(std::floor(x + 0.5));
}

PerturbationPlan select_targets(const std::vector<EntitySpan>& spans, Method method,
                                double threshold, std::uint64_t seed,
                                const SynonymMap* synonyms) {
    if (threshold < 0.0 || threshold > 1.0) {
        throw ValidationError("threshold must lie in [0,1]");
    }
    PerturbationPlan plan;
    plan.method = method;
    plan.threshold = threshold;
    plan.seed = seed;
    if (method == Method::none) return plan;

    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < spans.size(); ++i) {
        const EntitySpan& s = spans[i];
        bool ok = false;
        switch (method) {
            case Method::mask: ok = true; break;
            case Method::negate:
                ok = s.category == EntityCategory::symptom ||
                     s.category == EntityCategory::condition;
                break;
            case Method::synonym:
                ok = synonyms != nullptr && synonyms->has(to_lower(s.surface));
                break;
            case Method::numeric: ok = !s.numeric_values.empty(); break;
            case Method::none: break;
        }
        if (ok) eligible.push_back(i);
    }

    std::size_t count = round_half_up(threshold * static_cast<double>(eligible.size()));
    count = std::min(count, eligible.size());

    // Fisher-Yates prefix: target sets are nested across thresholds for a
    // fixed seed.
    DetRng rng(seed);
    for (std::size_t i = 0; i + 1 < eligible.size(); ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.next_below(eligible.size() - i));
        std::swap(eligible[i], eligible[j]);
    }
    std::vector<std::size_t> chosen(eligible.begin(),
                                    eligible.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t idx : chosen) plan.targets.push_back(spans[idx]);
    return plan;
}

namespace {

void check_plan(std::string_view text, const PerturbationPlan& plan, Method expected) {
    if (plan.method != expected) {
        throw ValidationError(std::string("plan method mismatch: expected ") +
                              method_name(expected) + ", got " + method_name(plan.method));
    }
    for (const EntitySpan& t : plan.targets) {
        if (t.end > text.size() || t.begin > t.end ||
            text.substr(t.begin, t.end - t.begin) != t.surface) {
            throw ValidationError("stale plan: span [" + std::to_string(t.begin) + "," +
                                  std::to_string(t.end) + ") no longer matches text");
        }
    }
}

bool edits_conflict(const TextEdit& a, const TextEdit& b) {
    if (a.begin == a.end) return b.begin < a.begin && a.begin < b.end;
    if (b.begin == b.end) return a.begin < b.begin && b.begin < a.end;
    return a.begin < b.end && b.begin < a.end;
}

// Adds the edit unless it conflicts with one already recorded.
bool try_add_edit(std::vector<TextEdit>& edits, TextEdit edit) {
    for (const TextEdit& e : edits) {
        if (edits_conflict(e, edit)) return false;
        if (e.begin == edit.begin && e.end == edit.end) return false;
    }
    edits.push_back(std::move(edit));
    return true;
}

NoteVariant finalize_variant(std::string_view text, const PerturbationPlan& plan,
                             std::vector<TextEdit> edits) {
    // zero-width inserts sort ahead of a replacement starting at the same
    // offset, so the insert lands before the replaced span
    std::sort(edits.begin(), edits.end(), [](const TextEdit& a, const TextEdit& b) {
        if (a.begin != b.begin) return a.begin < b.begin;
        return a.end < b.end;
    });
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    for (const TextEdit& e : edits) {
        out.append(text.substr(pos, e.begin - pos));
        out.append(e.replacement);
        pos = e.end;
    }
    out.append(text.substr(pos));

    NoteVariant v;
    v.method = plan.method;
    v.threshold = plan.threshold;
    v.seed = plan.seed;
    v.text = std::move(out);
    v.edits = std::move(edits);
    return v;
}

} // namespace

NoteVariant apply_mask(std::string_view text, const PerturbationPlan& plan) {
    check_plan(text, plan, Method::mask);
    std::vector<TextEdit> edits;
    for (const EntitySpan& t : plan.targets) {
        try_add_edit(edits, TextEdit{t.begin, t.end, t.surface, mask_token()});
    }
    return finalize_variant(text, plan, std::move(edits));
}

namespace {

// carries the leading capital of the replaced word over to the replacement
std::string match_case(std::string_view original, std::string original_case_replacement) {
    if (!original.empty() && !original_case_replacement.empty() &&
        std::isupper(static_cast<unsigned char>(original[0])) &&
        std::islower(static_cast<unsigned char>(original_case_replacement[0]))) {
        original_case_replacement[0] = static_cast<char>(
            std::toupper(static_cast<unsigned char>(original_case_replacement[0])));
    }
    return original_case_replacement;
}

} // namespace

NoteVariant apply_negation(std::string_view text, const PerturbationPlan& plan,
                           const NegationTable& table) {
    check_plan(text, plan, Method::negate);
    auto tokens = word_tokens(text);
    std::vector<TextEdit> edits;

    for (const EntitySpan& t : plan.targets) {
        if (t.polarity == Polarity::affirmed) {
            // rewrite the preceding verb when the table knows it, else insert
            // the default cue
            const Token* prev = nullptr;
            for (const Token& tok : tokens) {
                if (tok.end > t.begin) break;
                prev = &tok;
            }
            bool adjacent = prev != nullptr && [&] {
                for (std::size_t i = prev->end; i < t.begin; ++i) {
                    if (!std::isspace(static_cast<unsigned char>(text[i]))) return false;
                }
                return true;
            }();
            std::optional<std::string> negated =
                adjacent ? table.negated_for(to_lower(prev->view(text))) : std::nullopt;
            if (negated) {
                try_add_edit(edits, TextEdit{prev->begin, prev->end,
                                             std::string(prev->view(text)),
                                             match_case(prev->view(text), *negated)});
            } else {
                try_add_edit(edits, TextEdit{t.begin, t.begin, "",
                                             table.default_negation_cue() + " "});
            }
        } else {
            // flip the nearest preceding cue within the clause back to its
            // affirmed form; a cue shared by several targets is edited once
            std::size_t cstart = clause_start(text, t.begin);
            const Token* cue = nullptr;
            for (const Token& tok : tokens) {
                if (tok.end > t.begin) break;
                if (tok.begin < cstart) continue;
                if (table.is_cue(to_lower(tok.view(text)))) cue = &tok;
            }
            if (!cue) continue;
            auto affirmed = table.affirmed_for(to_lower(cue->view(text)));
            if (!affirmed) continue;
            try_add_edit(edits, TextEdit{cue->begin, cue->end, std::string(cue->view(text)),
                                         match_case(cue->view(text), *affirmed)});
        }
    }
    return finalize_variant(text, plan, std::move(edits));
}

NoteVariant apply_synonym(std::string_view text, const PerturbationPlan& plan,
                          const SynonymMap& synonyms) {
    check_plan(text, plan, Method::synonym);
    DetRng rng(plan.seed ^ 0x5e3a1c9bd4f20e75ULL);
    std::vector<TextEdit> edits;
    for (const EntitySpan& t : plan.targets) {
        const auto* options = synonyms.lookup(to_lower(t.surface));
        if (!options || options->empty()) {
            throw ValidationError("synonym target '" + t.surface + "' has no mapping");
        }
        const std::string& pick =
            (*options)[static_cast<std::size_t>(rng.next_below(options->size()))];
        try_add_edit(edits, TextEdit{t.begin, t.end, t.surface, pick});
    }
    return finalize_variant(text, plan, std::move(edits));
}

namespace {

bool numeric_in_band(double perturbed, double original) {
    double av = std::abs(original);
    double ap = std::abs(perturbed);
    return ap >= 0.85 * av && ap <= 1.15 * av && std::abs(perturbed - original) >= 0.05 * av;
}

// Formats v' at the original decimal count when that stays inside the
// +/-5-15% band; otherwise adds digits until it does.
std::string format_perturbed(double perturbed, double original, int decimals) {
    for (int p = decimals; p <= decimals + 8; ++p) {
        std::string s = format_fixed(perturbed, p);
        double parsed = 0.0;
        if (parse_double(s, parsed) && numeric_in_band(parsed, original)) return s;
    }
    std::string s = format_double(perturbed);
    double parsed = 0.0;
    if (parse_double(s, parsed) && numeric_in_band(parsed, original)) return s;
    return format_double(original * 1.10); // midpoint of the band, always valid
}

} // namespace

NoteVariant apply_numeric(std::string_view text, const PerturbationPlan& plan) {
    check_plan(text, plan, Method::numeric);
    DetRng rng(plan.seed ^ 0x9d1f8c2ab7e64039ULL);
    std::vector<TextEdit> edits;
    for (const EntitySpan& t : plan.targets) {
        if (t.numeric_values.empty()) {
            throw ValidationError("numeric target '" + t.surface + "' has no parsed values");
        }
        auto lexemes = parse_numbers(t.surface);
        std::string rebuilt;
        rebuilt.reserve(t.surface.size());
        std::size_t pos = 0;
        for (const NumberLexeme& lex : lexemes) {
            rebuilt.append(t.surface, pos, lex.begin - pos);
            double sign = rng.next_below(2) == 0 ? -1.0 : 1.0;
            double fraction = rng.next_in(0.05, 0.15);
            if (lex.value == 0.0) {
                rebuilt.append(t.surface, lex.begin, lex.end - lex.begin);
            } else {
                double perturbed = lex.value * (1.0 + sign * fraction);
                rebuilt.append(format_perturbed(perturbed, lex.value, lex.decimals));
            }
            pos = lex.end;
        }
        rebuilt.append(t.surface, pos, t.surface.size() - pos);
        if (rebuilt != t.surface) {
            try_add_edit(edits, TextEdit{t.begin, t.end, t.surface, rebuilt});
        }
    }
    return finalize_variant(text, plan, std::move(edits));
}

NoteVariant apply_perturbation(std::string_view text, const PerturbationPlan& plan,
                               const NegationTable& table, const SynonymMap& synonyms) {
    switch (plan.method) {
        case Method::none: {
            NoteVariant v;
            v.method = Method::none;
            v.threshold = plan.threshold;
            v.seed = plan.seed;
            v.text = std::string(text);
            return v;
        }
        case Method::mask: return apply_mask(text, plan);
        case Method::negate: return apply_negation(text, plan, table);
        case Method::synonym: return apply_synonym(text, plan, synonyms);
        case Method::numeric: return apply_numeric(text, plan);
    }
    throw ValidationError("unknown perturbation method");
}

std::string revert_edits(const NoteVariant& variant) {
    std::vector<TextEdit> edits = variant.edits;
    std::sort(edits.begin(), edits.end(), [](const TextEdit& a, const TextEdit& b) {
        if (a.begin != b.begin) return a.begin < b.begin;
        return a.end < b.end;
    });
    std::string out;
    out.reserve(variant.text.size());
    std::size_t perturbed_pos = 0;
    std::size_t original_pos = 0;
    for (const TextEdit& e : edits) {
        std::size_t gap = e.begin - original_pos;
        out.append(variant.text, perturbed_pos, gap);
        perturbed_pos += gap + e.replacement.size();
        out.append(e.original);
        original_pos = e.end;
    }
    out.append(variant.text, perturbed_pos, variant.text.size() - perturbed_pos);
    return out;
}

} // namespace lfa
