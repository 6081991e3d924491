#include "lfa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "lfa/errors.hpp"
#include "lfa/text.hpp"

namespace lfa {

namespace {

void check_pair(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw ValidationError(std::string(what) + ": length mismatch");
    if (a == 0) throw ValidationError(std::string(what) + ": empty input");
}

double match_fraction(const std::vector<std::string>& a, const std::vector<std::string>& b,
                      const char* what) {
    check_pair(a.size(), b.size(), what);
    std::size_t matches = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == b[i]) ++matches;
    }
    return static_cast<double>(matches) / static_cast<double>(a.size());
}

double mismatch_fraction(const std::vector<std::string>& a, const std::vector<std::string>& b,
                         const char* what) {
    check_pair(a.size(), b.size(), what);
    std::size_t flips = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) ++flips;
    }
    return static_cast<double>(flips) / static_cast<double>(a.size());
}

} // namespace

double latent_flip_rate(const std::vector<std::string>& d0, const std::vector<std::string>& dt) {
    return mismatch_fraction(d0, dt, "latent_flip_rate");
}

double dfr(const std::vector<std::string>& llm_unperturbed,
           const std::vector<std::string>& llm_perturbed) {
    return mismatch_fraction(llm_unperturbed, llm_perturbed, "dfr");
}

double probe_llm_agreement(const std::vector<std::string>& probe_preds,
                           const std::vector<std::string>& llm_preds) {
    return match_fraction(probe_preds, llm_preds, "probe_llm_agreement");
}

double accuracy(const std::vector<std::string>& preds, const std::vector<std::string>& gold) {
    return match_fraction(preds, gold, "accuracy");
}

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
    check_pair(x.size(), y.size(), "pearson");
    if (x.size() < 2) throw ValidationError("pearson: need at least 2 samples");
    const double n = static_cast<double>(x.size());
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double dx = x[i] - mx;
        double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt; // undefined for constant input
    return sxy / std::sqrt(sxx * syy);
}

namespace {

// Average ranks, ties get the mean of their rank range.
std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size(), 0.0);
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
        i = j + 1;
    }
    return ranks;
}

} // namespace

std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y) {
    check_pair(x.size(), y.size(), "spearman");
    if (x.size() < 2) throw ValidationError("spearman: need at least 2 samples");
    return pearson(average_ranks(x), average_ranks(y));
}

namespace {

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

} // namespace

double rouge_l(std::string_view reference, std::string_view candidate) {
    auto ref = metric_tokens(reference);
    auto cand = metric_tokens(candidate);
    if (ref.empty() || cand.empty()) return 0.0;
    double lcs = static_cast<double>(lcs_length(ref, cand));
    double precision = lcs / static_cast<double>(cand.size());
    double recall = lcs / static_cast<double>(ref.size());
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

NerOverlap ner_overlap(const std::vector<EntitySpan>& ref_spans,
                       const std::vector<EntitySpan>& cand_spans) {
    using Item = std::pair<std::string, int>;
    auto normalize = [](const std::vector<EntitySpan>& spans) {
        std::set<Item> out;
        for (const auto& s : spans) out.emplace(to_lower(s.surface), static_cast<int>(s.category));
        return out;
    };
    std::set<Item> ref = normalize(ref_spans);
    std::set<Item> cand = normalize(cand_spans);

    NerOverlap result;
    if (ref.empty() && cand.empty()) return result; // perfect preservation
    std::size_t inter = 0;
    for (const auto& item : ref) {
        if (cand.count(item)) ++inter;
    }
    std::size_t uni = ref.size() + cand.size() - inter;
    result.jaccard = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    result.f1 = 2.0 * static_cast<double>(inter) / static_cast<double>(ref.size() + cand.size());
    return result;
}

double bertscore_greedy(const std::vector<std::vector<double>>& ref_tokens,
                        const std::vector<std::vector<double>>& cand_tokens) {
    if (ref_tokens.empty() || cand_tokens.empty()) {
        throw ValidationError("bertscore_greedy: empty token list");
    }
    auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
        if (a.size() != b.size()) {
            throw ValidationError("bertscore_greedy: token vector dimension mismatch");
        }
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    };
    double recall = 0.0;
    for (const auto& r : ref_tokens) {
        double best = -1.0;
        for (const auto& c : cand_tokens) best = std::max(best, dot(r, c));
        recall += best;
    }
    recall /= static_cast<double>(ref_tokens.size());
    double precision = 0.0;
    for (const auto& c : cand_tokens) {
        double best = -1.0;
        for (const auto& r : ref_tokens) best = std::max(best, dot(c, r));
        precision += best;
    }
    precision /= static_cast<double>(cand_tokens.size());
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

std::vector<MetricRow> assemble_rows(const std::map<GroupKey, std::vector<PredictionTriple>>& groups,
                                     const std::map<GroupKey, double>& drift) {
    std::vector<MetricRow> rows;
    for (const auto& [key, triples] : groups) {
        if (triples.empty()) {
            throw ValidationError(std::string("assemble_rows: empty group ") +
                                  method_name(key.method));
        }
        std::vector<std::string> ref, llm0, llmt, probe0, probet;
        std::vector<double> match0, matcht;
        for (const auto& t : triples) {
            ref.push_back(t.reference);
            llm0.push_back(t.llm_unperturbed);
            llmt.push_back(t.llm_perturbed);
            probe0.push_back(t.probe_unperturbed);
            probet.push_back(t.probe_perturbed);
            match0.push_back(t.probe_unperturbed == t.llm_unperturbed ? 1.0 : 0.0);
            matcht.push_back(t.probe_perturbed == t.llm_perturbed ? 1.0 : 0.0);
        }
        MetricRow row;
        row.method = key.method;
        row.threshold = key.threshold;
        row.latent_flip_rate = latent_flip_rate(probe0, probet);
        row.dfr = dfr(llm0, llmt);
        row.probe_llm_agreement = probe_llm_agreement(probet, llmt);
        if (triples.size() >= 2) {
            row.pearson = pearson(match0, matcht);
            row.spearman = spearman(match0, matcht);
        }
        row.llm_accuracy = accuracy(llmt, ref);
        auto it = drift.find(key);
        row.centroid_drift = it == drift.end() ? 0.0 : it->second;
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace lfa
