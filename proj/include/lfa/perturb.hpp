#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lfa/corpus.hpp"
#include "lfa/entities.hpp"

namespace lfa {

// Term -> synonym list. File format: term<TAB>syn1|syn2|... per line.
class SynonymMap {
public:
    void add(std::string term, std::vector<std::string> synonyms);
    static SynonymMap load(const std::filesystem::path& path);

    bool has(std::string_view lowercased_term) const;
    const std::vector<std::string>* lookup(std::string_view lowercased_term) const;
    bool empty() const { return map_.empty(); }

private:
    std::map<std::string, std::vector<std::string>, std::less<>> map_;
};

struct PerturbationPlan {
    Method method = Method::none;
    double threshold = 0.0;
    std::uint64_t seed = 0;
    std::vector<EntitySpan> targets; // sorted by start offset
};

// floor(x + 0.5); the grid thresholds are exact binary fractions so the
// products below are exact.
std::size_t round_half_up(double x);

// Draws round-half-up(threshold * |eligible|) method-eligible spans without
// replacement. Selection is a seeded shuffle prefix, so target sets are
// nested as threshold grows. Eligibility: mask = all spans; negate = symptom
// and condition spans; numeric = spans with parsed numbers; synonym = spans
// with at least one mapping.
PerturbationPlan select_targets(const std::vector<EntitySpan>& spans, Method method,
                                double threshold, std::uint64_t seed,
                                const SynonymMap* synonyms = nullptr);

// The four operators. Each validates the plan against the text (stale spans
// are an error), records every replacement in the edit log, and leaves
// non-target bytes untouched.
NoteVariant apply_mask(std::string_view text, const PerturbationPlan& plan);
NoteVariant apply_negation(std::string_view text, const PerturbationPlan& plan,
                           const NegationTable& table);
NoteVariant apply_synonym(std::string_view text, const PerturbationPlan& plan,
                          const SynonymMap& synonyms);
NoteVariant apply_numeric(std::string_view text, const PerturbationPlan& plan);

// Dispatch by plan.method (method none yields the identity variant).
NoteVariant apply_perturbation(std::string_view text, const PerturbationPlan& plan,
                               const NegationTable& table, const SynonymMap& synonyms);

// Rebuilds the original text from a variant by undoing its edit log.
std::string revert_edits(const NoteVariant& variant);

inline const char* mask_token() { return "[MASK]"; }

} // namespace lfa
