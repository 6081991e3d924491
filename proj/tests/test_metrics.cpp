#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lfa/errors.hpp"
#include "lfa/hashing.hpp"
#include "lfa/metrics.hpp"
#include "oracles.hpp"

using namespace lfa;

TEST_CASE("latent flip rate counts disagreeing positions") {
    CHECK(latent_flip_rate({"A", "B"}, {"A", "B"}) == 0.0);
    CHECK(latent_flip_rate({"A", "B"}, {"B", "A"}) == 1.0);
    CHECK(latent_flip_rate({"A", "A", "B", "B"}, {"A", "B", "B", "A"}) == 0.5);
    CHECK_THROWS_AS(latent_flip_rate({"A"}, {"A", "B"}), ValidationError);
    CHECK_THROWS_AS(latent_flip_rate({}, {}), ValidationError);
}

TEST_CASE("flip rate is symmetric and complements agreement") {
    DetRng rng(9);
    std::vector<std::string> a, b;
    for (int i = 0; i < 40; ++i) {
        a.push_back("c" + std::to_string(rng.next_below(7)));
        b.push_back("c" + std::to_string(rng.next_below(7)));
    }
    CHECK(latent_flip_rate(a, b) == latent_flip_rate(b, a));
    CHECK(latent_flip_rate(a, b) == doctest::Approx(1.0 - probe_llm_agreement(a, b)));
}

TEST_CASE("dfr and accuracy basics") {
    CHECK(dfr({"A", "B", "C"}, {"A", "B", "C"}) == 0.0);
    CHECK(dfr({"A", "B"}, {"B", "A"}) == 1.0);
    std::vector<std::string> before(10, "A"), after(10, "A");
    after[0] = after[1] = after[2] = "B";
    CHECK(dfr(before, after) == doctest::Approx(0.3));

    CHECK(accuracy({"A", "B"}, {"A", "B"}) == 1.0);
    CHECK(accuracy({"A", "B"}, {"B", "A"}) == 0.0);
    std::vector<std::string> preds(10, "A"), gold(10, "A");
    preds[3] = preds[5] = preds[9] = "B";
    CHECK(accuracy(preds, gold) == doctest::Approx(0.7));
}

TEST_CASE("agreement basics") {
    CHECK(probe_llm_agreement({"A", "B"}, {"A", "B"}) == 1.0);
    CHECK(probe_llm_agreement({"A", "B"}, {"A", "C"}) == 0.5);
}

TEST_CASE("pearson and spearman on simple sequences") {
    std::vector<double> x = {1, 2, 3, 4, 5};
    CHECK(*pearson(x, x) == doctest::Approx(1.0));
    CHECK(*spearman(x, x) == doctest::Approx(1.0));
    std::vector<double> a = {1, 0, 1, 0}, b = {0, 1, 0, 1};
    CHECK(*pearson(a, b) == doctest::Approx(-1.0));
    CHECK(*spearman(a, b) == doctest::Approx(-1.0));
}

TEST_CASE("constant input leaves correlation undefined, not zero") {
    std::vector<double> c = {2, 2, 2, 2}, y = {1, 2, 3, 4};
    CHECK_FALSE(pearson(c, y).has_value());
    CHECK_FALSE(spearman(c, y).has_value());
    CHECK_FALSE(pearson(y, c).has_value());
}

TEST_CASE("pearson equals spearman on binary indicators") {
    // ranks of binary data are affine in the data, so the two correlations
    // coincide and the report's two columns match on indicator inputs
    DetRng rng(123);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 3 + rng.next_below(30);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = static_cast<double>(rng.next_below(2));
            b[i] = static_cast<double>(rng.next_below(2));
        }
        auto p = pearson(a, b);
        auto s = spearman(a, b);
        REQUIRE(p.has_value() == s.has_value());
        if (p) {
            CHECK(std::abs(*p - *s) < 1e-12);
            CHECK(std::abs(*p - oracle::pearson_direct(a, b)) < 1e-10);
            CHECK(*p >= -1.0 - 1e-12);
            CHECK(*p <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("rouge_l on the worked example") {
    CHECK(rouge_l("some identical text", "some identical text") == doctest::Approx(1.0));
    CHECK(rouge_l("alpha beta", "gamma delta") == 0.0);
    // ref "a b c d", cand "a c d": LCS=3, P=1.0, R=0.75, F=6/7
    CHECK(rouge_l("a b c d", "a c d") == doctest::Approx(6.0 / 7.0));
    CHECK(rouge_l("", "anything") == 0.0);
    CHECK(rouge_l("", "") == 0.0);
}

TEST_CASE("rouge_l is symmetric under swapping the inputs") {
    DetRng rng(321);
    auto random_text = [&](std::size_t len) {
        std::string s;
        for (std::size_t i = 0; i < len; ++i) {
            if (i) s += ' ';
            s += static_cast<char>('a' + rng.next_below(4));
        }
        return s;
    };
    for (int trial = 0; trial < 50; ++trial) {
        std::string a = random_text(1 + rng.next_below(10));
        std::string b = random_text(1 + rng.next_below(10));
        CHECK(rouge_l(a, b) == doctest::Approx(rouge_l(b, a)).epsilon(1e-14));
    }
}

TEST_CASE("rouge_l matches the exhaustive LCS oracle") {
    DetRng rng(555);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t la = 1 + rng.next_below(10), lb = 1 + rng.next_below(10);
        std::vector<std::string> ta, tb;
        std::string sa, sb;
        for (std::size_t i = 0; i < la; ++i) {
            ta.push_back(std::string(1, static_cast<char>('a' + rng.next_below(3))));
            sa += (i ? " " : "") + ta.back();
        }
        for (std::size_t i = 0; i < lb; ++i) {
            tb.push_back(std::string(1, static_cast<char>('a' + rng.next_below(3))));
            sb += (i ? " " : "") + tb.back();
        }
        double lcs = static_cast<double>(oracle::exhaustive_lcs(ta, tb));
        double p = lcs / static_cast<double>(lb);
        double r = lcs / static_cast<double>(la);
        double expected = (p + r == 0.0) ? 0.0 : 2.0 * p * r / (p + r);
        CHECK(rouge_l(sa, sb) == expected);
    }
}

namespace {

EntitySpan span_of(const std::string& surface, EntityCategory cat) {
    EntitySpan s;
    s.surface = surface;
    s.category = cat;
    return s;
}

} // namespace

TEST_CASE("ner overlap set arithmetic") {
    auto sym = EntityCategory::symptom;
    std::vector<EntitySpan> abc = {span_of("a", sym), span_of("b", sym), span_of("c", sym)};
    std::vector<EntitySpan> bcd = {span_of("b", sym), span_of("c", sym), span_of("d", sym)};

    auto same = ner_overlap(abc, abc);
    CHECK(same.jaccard == 1.0);
    CHECK(same.f1 == 1.0);

    std::vector<EntitySpan> xyz = {span_of("x", sym), span_of("y", sym)};
    auto disjoint = ner_overlap(abc, xyz);
    CHECK(disjoint.jaccard == 0.0);
    CHECK(disjoint.f1 == 0.0);

    auto mixed = ner_overlap(abc, bcd);
    CHECK(mixed.jaccard == doctest::Approx(0.5));      // 2 / 4
    CHECK(mixed.f1 == doctest::Approx(2.0 / 3.0));     // 2*2 / 6

    auto both_empty = ner_overlap({}, {});
    CHECK(both_empty.jaccard == 1.0);
    CHECK(both_empty.f1 == 1.0);
}

TEST_CASE("ner overlap treats category as part of identity and jaccard <= f1") {
    auto a = span_of("fever", EntityCategory::symptom);
    auto b = span_of("fever", EntityCategory::condition);
    auto r = ner_overlap({a}, {b});
    CHECK(r.jaccard == 0.0);

    DetRng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<EntitySpan> ref, cand;
        for (std::size_t i = 0, n = rng.next_below(6); i < n; ++i) {
            ref.push_back(span_of("t" + std::to_string(rng.next_below(8)),
                                  EntityCategory::symptom));
        }
        for (std::size_t i = 0, n = rng.next_below(6); i < n; ++i) {
            cand.push_back(span_of("t" + std::to_string(rng.next_below(8)),
                                   EntityCategory::symptom));
        }
        auto res = ner_overlap(ref, cand);
        CHECK(res.jaccard <= res.f1 + 1e-15);
    }
}

TEST_CASE("greedy token similarity on unit vectors") {
    std::vector<double> e1 = {1, 0, 0}, e2 = {0, 1, 0}, e3 = {0, 0, 1};
    CHECK(bertscore_greedy({e1, e2}, {e1, e2}) == doctest::Approx(1.0));
    CHECK(bertscore_greedy({e1}, {e2}) == doctest::Approx(0.0));
    // ref=[e1,e2], cand=[e1]: P=1, R=0.5, F1=2/3
    CHECK(bertscore_greedy({e1, e2}, {e1}) == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(bertscore_greedy({}, {e1}), ValidationError);
    CHECK_THROWS_AS(bertscore_greedy({e1}, {}), ValidationError);
}

namespace {

PredictionTriple triple(const std::string& ref, const std::string& llm0, const std::string& llmt,
                        const std::string& p0, const std::string& pt) {
    return PredictionTriple{ref, llm0, llmt, p0, pt};
}

} // namespace

TEST_CASE("assemble_rows on a perfectly consistent group") {
    std::map<GroupKey, std::vector<PredictionTriple>> groups;
    GroupKey key{Method::mask, 0.0};
    for (int i = 0; i < 4; ++i) {
        std::string cls = i % 2 ? "A" : "B";
        groups[key].push_back(triple(cls, cls, cls, cls, cls));
    }
    std::map<GroupKey, double> drift{{key, 0.0}};
    auto rows = assemble_rows(groups, drift);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].probe_llm_agreement == 1.0);
    CHECK(rows[0].latent_flip_rate == 0.0);
    CHECK(rows[0].dfr == 0.0);
    CHECK(rows[0].llm_accuracy == 1.0);
    // indicators are constant (all ones): correlations are absent
    CHECK_FALSE(rows[0].pearson.has_value());
    CHECK_FALSE(rows[0].spearman.has_value());
}

TEST_CASE("assemble_rows emits one row per (method, threshold) group") {
    std::map<GroupKey, std::vector<PredictionTriple>> groups;
    std::map<GroupKey, double> drift;
    DetRng rng(44);
    for (Method m : perturbation_methods()) {
        for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            GroupKey key{m, t};
            for (int i = 0; i < 6; ++i) {
                auto lab = [&] { return std::string("c") + std::to_string(rng.next_below(3)); };
                groups[key].push_back(triple(lab(), lab(), lab(), lab(), lab()));
            }
            drift[key] = t * 2.0;
        }
    }
    auto rows = assemble_rows(groups, drift);
    CHECK(rows.size() == 20); // 4 methods x 5 thresholds
    for (const auto& r : rows) {
        CHECK(r.latent_flip_rate >= 0.0);
        CHECK(r.latent_flip_rate <= 1.0);
        CHECK(r.dfr >= 0.0);
        CHECK(r.dfr <= 1.0);
        CHECK(r.probe_llm_agreement >= 0.0);
        CHECK(r.probe_llm_agreement <= 1.0);
        if (r.pearson) {
            CHECK(*r.pearson >= -1.0 - 1e-12);
            CHECK(*r.pearson <= 1.0 + 1e-12);
            CHECK(*r.pearson == doctest::Approx(*r.spearman).epsilon(1e-12));
        }
        CHECK(r.centroid_drift == doctest::Approx(r.threshold * 2.0));
    }
}

TEST_CASE("assemble_rows rejects empty groups") {
    std::map<GroupKey, std::vector<PredictionTriple>> groups;
    groups[GroupKey{Method::mask, 0.5}] = {};
    CHECK_THROWS_AS(assemble_rows(groups, {}), ValidationError);
}
