#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lfa/corpus.hpp"
#include "lfa/entities.hpp"

namespace lfa {

// Fraction of positions where the two label sequences differ.
double latent_flip_rate(const std::vector<std::string>& d0, const std::vector<std::string>& dt);

// The model's own diagnosis flip rate; same counting as latent_flip_rate.
double dfr(const std::vector<std::string>& llm_unperturbed,
           const std::vector<std::string>& llm_perturbed);

// Fraction of positions with equal labels.
double probe_llm_agreement(const std::vector<std::string>& probe_preds,
                           const std::vector<std::string>& llm_preds);

double accuracy(const std::vector<std::string>& preds, const std::vector<std::string>& gold);

// Product-moment correlation; empty when either input is constant.
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);

// Pearson on average-ranked data (ties share the mean rank).
std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y);

// Token-level longest-common-subsequence F-measure; shared lowercase
// word tokenizer. 0 when either side has no tokens.
double rouge_l(std::string_view reference, std::string_view candidate);

struct NerOverlap {
    double jaccard = 1.0;
    double f1 = 1.0;
};

// Entity preservation over (lowercased surface, category) sets. Both empty
// scores perfect preservation.
NerOverlap ner_overlap(const std::vector<EntitySpan>& ref_spans,
                       const std::vector<EntitySpan>& cand_spans);

// Greedy token-matching similarity F1 over unit-normalized token vectors.
double bertscore_greedy(const std::vector<std::vector<double>>& ref_tokens,
                        const std::vector<std::vector<double>>& cand_tokens);

struct PredictionTriple {
    std::string reference;
    std::string llm_unperturbed;
    std::string llm_perturbed;
    std::string probe_unperturbed;
    std::string probe_perturbed;
};

struct MetricRow {
    Method method = Method::none;
    double threshold = 0.0;
    double latent_flip_rate = 0.0;
    double dfr = 0.0;
    double probe_llm_agreement = 0.0;
    std::optional<double> pearson;
    std::optional<double> spearman;
    double llm_accuracy = 0.0;
    double centroid_drift = 0.0;
};

struct GroupKey {
    Method method = Method::none;
    double threshold = 0.0;
    bool operator<(const GroupKey& o) const {
        if (method != o.method) return static_cast<int>(method) < static_cast<int>(o.method);
        return threshold < o.threshold;
    }
};

// One row per (method, threshold) group. Correlations are computed between
// the per-sample probe/LLM match indicators at threshold 0 and at this
// group's threshold; constant indicators leave them absent.
std::vector<MetricRow> assemble_rows(const std::map<GroupKey, std::vector<PredictionTriple>>& groups,
                                     const std::map<GroupKey, double>& drift);

} // namespace lfa
