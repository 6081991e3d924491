#include "lfa/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "lfa/errors.hpp"
#include "lfa/perturb.hpp"
#include "lfa/text.hpp"

namespace lfa {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

// Runs fn(i) for i in [0, n) across a bounded worker pool. Results must be
// written to preassigned slots so ordering stays deterministic.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    int count = std::min<int>(workers, static_cast<int>(n));
    pool.reserve(static_cast<std::size_t>(count));
    for (int w = 0; w < count; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::unique_ptr<ChatClient> make_chat_client(const RunConfig& cfg, ResponseCache* cache) {
    if (cfg.chat_base_url.empty()) {
        throw ConfigError("chat provider is not configured (set chat.base_url or "
                          "LFA_CHAT_BASE_URL)");
    }
    return std::make_unique<HttpChatClient>(cfg.chat_base_url, cfg.chat_api_key, cfg.retry, cache);
}

} // namespace

// --- generate ------------------------------------------------------------------

GenerateResult cmd_generate(const RunConfig& cfg, ChatClient* client_override) {
    cfg.validate();
    if (cfg.dialogues_path.empty()) throw ConfigError("generate: dialogues path is not set");
    if (cfg.prompts_dir.empty()) throw ConfigError("generate: prompts_dir is not set");

    PromptLibrary prompts = PromptLibrary::load(cfg.prompts_dir);
    std::vector<DialogueRecord> dialogues = load_dialogues(cfg.dialogues_path);

    std::filesystem::create_directories(cfg.out_dir);
    ResponseCache cache(cfg.out_dir / "cache");
    std::unique_ptr<ChatClient> owned;
    ChatClient* client = client_override;
    if (client == nullptr) {
        owned = make_chat_client(cfg, &cache);
        client = owned.get();
    }

    GenerateResult result;
    result.notes_path = cfg.out_dir / "notes.jsonl";
    result.manifest_path = cfg.out_dir / "generate_manifest.json";

    std::vector<ClinicalNote> notes;
    std::vector<ReasoningBundle> bundles;
    json manifest = json::array();

    for (std::size_t i = 0; i < dialogues.size(); ++i) {
        std::string id = "gen-" + std::to_string(i + 1);
        json entry{{"dialogue_index", i}, {"id", id}};
        try {
            ReasoningBundle bundle;
            bundle.note_text = generate_note(*client, prompts, dialogues[i], cfg.chat);
            bundle.elicited_diagnosis =
                elicit_diagnosis(*client, prompts, bundle.note_text, cfg.class_set, cfg.chat);
            if (cfg.save_reasoning) {
                bundle.forward = reason_forward(*client, prompts, bundle.note_text, cfg.chat);
                bundle.backward = reason_backward(*client, prompts, bundle.note_text,
                                                  bundle.elicited_diagnosis, cfg.chat);
                bundle.aggregate = aggregate_reasoning(*client, prompts, bundle.forward,
                                                       bundle.backward, cfg.chat);
            }
            ClinicalNote note;
            note.id = id;
            note.diagnosis = bundle.elicited_diagnosis;
            note.text = bundle.note_text;
            note.source = NoteSource::generated;
            notes.push_back(std::move(note));
            if (cfg.save_reasoning) bundles.push_back(std::move(bundle));
            entry["status"] = "ok";
        } catch (const Error& e) {
            entry["status"] = "failed";
            entry["error"] = e.what();
            ++result.failed;
        }
        manifest.push_back(std::move(entry));
    }

    result.generated = notes.size();
    if (!notes.empty()) save_corpus(notes, result.notes_path);
    if (cfg.save_reasoning && !bundles.empty()) {
        auto out = open_out(cfg.out_dir / "reasoning.jsonl");
        for (std::size_t i = 0; i < bundles.size(); ++i) {
            const auto& b = bundles[i];
            out << json{{"id", notes[i].id},
                        {"forward", b.forward},
                        {"backward", b.backward},
                        {"aggregate", b.aggregate},
                        {"diagnosis", b.elicited_diagnosis}}
                       .dump()
                << '\n';
        }
    }
    {
        auto out = open_out(result.manifest_path);
        out << manifest.dump(2) << '\n';
    }
    if (result.failed > 0) {
        throw ProviderError(std::to_string(result.failed) + " of " +
                            std::to_string(dialogues.size()) +
                            " dialogues failed; see " + result.manifest_path.string());
    }
    return result;
}

// --- perturb -------------------------------------------------------------------

PerturbResult cmd_perturb(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.notes_path.empty()) throw ConfigError("perturb: notes path is not set");
    if (cfg.lexicon_path.empty()) throw ConfigError("perturb: lexicon path is not set");

    std::vector<ClinicalNote> notes = load_corpus(cfg.notes_path, cfg.class_set);
    Lexicon lexicon = Lexicon::load(cfg.lexicon_path);
    NegationTable negation = cfg.negation_path.empty() ? NegationTable::builtin()
                                                       : NegationTable::load(cfg.negation_path);
    SynonymMap synonyms;
    if (!cfg.synonyms_path.empty()) synonyms = SynonymMap::load(cfg.synonyms_path);

    std::vector<NoteVariant> variants;
    variants.reserve(notes.size() * (1 + cfg.methods.size() * cfg.thresholds.size()));
    PerturbResult result;

    for (const ClinicalNote& note : notes) {
        std::vector<EntitySpan> spans;
        if (!cfg.ner_endpoint.empty()) {
            spans = extract_entities_remote(note.text, cfg.ner_endpoint, negation, cfg.retry);
        } else {
            spans = extract_entities(note.text, lexicon, negation);
        }

        NoteVariant original;
        original.note_id = note.id;
        original.method = Method::none;
        original.threshold = 0.0;
        original.seed = derive_variant_seed(cfg.seed, note.id, Method::none, 0.0);
        original.text = note.text;
        variants.push_back(std::move(original));
        ++result.originals;

        for (Method method : cfg.methods) {
            for (double threshold : cfg.thresholds) {
                std::uint64_t seed = derive_variant_seed(cfg.seed, note.id, method, threshold);
                PerturbationPlan plan =
                    select_targets(spans, method, threshold, seed, &synonyms);
                NoteVariant v = apply_perturbation(note.text, plan, negation, synonyms);
                v.note_id = note.id;
                variants.push_back(std::move(v));
                ++result.perturbed;
            }
        }
    }

    result.variants_path = cfg.out_dir / "variants.jsonl";
    save_variants(variants, result.variants_path);
    return result;
}

// --- audit ---------------------------------------------------------------------

namespace {

struct VariantKey {
    std::string note_id;
    Method method;
    double threshold;
    bool operator<(const VariantKey& o) const {
        if (note_id != o.note_id) return note_id < o.note_id;
        if (method != o.method) return static_cast<int>(method) < static_cast<int>(o.method);
        return threshold < o.threshold;
    }
};

// Loads a predictions file: one JSON object per line with note_id, method,
// threshold, label.
std::map<VariantKey, std::string> load_predictions(const std::filesystem::path& path,
                                                   const std::vector<std::string>& class_set) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open predictions file " + path.string());
    std::map<VariantKey, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": malformed record");
        }
        VariantKey key;
        key.note_id = j.value("note_id", std::string());
        auto m = method_from_name(j.value("method", std::string("none")));
        if (!m) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": unknown method");
        }
        key.method = *m;
        key.threshold = j.value("threshold", 0.0);
        std::string label = j.value("label", std::string());
        if (std::find(class_set.begin(), class_set.end(), label) == class_set.end()) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": label '" +
                                  label + "' is not in the class set");
        }
        out[key] = std::move(label);
    }
    return out;
}

// Embeddings are resumable: when the store on disk matches the variant list
// exactly, it is reused instead of recomputed.
std::vector<EmbeddingRecord> embed_variants(const RunConfig& cfg,
                                            const std::vector<NoteVariant>& variants,
                                            Embedder& embedder,
                                            const std::filesystem::path& store_path) {
    if (std::filesystem::exists(store_path)) {
        std::vector<EmbeddingRecord> cached = load_embeddings(store_path);
        bool usable = cached.size() == variants.size() &&
                      (cached.empty() ||
                       static_cast<int>(cached.front().vector.size()) == cfg.embedder.dimension);
        if (usable) {
            for (std::size_t i = 0; i < variants.size(); ++i) {
                if (cached[i].note_id != variants[i].note_id ||
                    cached[i].method != variants[i].method ||
                    cached[i].threshold != variants[i].threshold) {
                    usable = false;
                    break;
                }
            }
        }
        if (usable) return cached;
    }

    std::vector<EmbeddingRecord> records(variants.size());
    parallel_for(variants.size(), cfg.workers, [&](std::size_t i) {
        EmbeddingRecord r;
        r.note_id = variants[i].note_id;
        r.method = variants[i].method;
        r.threshold = variants[i].threshold;
        r.vector = embedder.embed(variants[i].text);
        records[i] = std::move(r);
    });
    persist_embeddings(records, store_path);
    return records;
}

Eigen::MatrixXd rows_to_matrix(const std::vector<const EmbeddingRecord*>& rows) {
    if (rows.empty()) throw ValidationError("no embedding rows");
    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front()->vector.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i]->vector.size(); ++j) {
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i]->vector[j];
        }
    }
    return X;
}

} // namespace

AuditResult cmd_audit(const RunConfig& cfg, ChatClient* client_override) {
    cfg.validate();
    std::filesystem::path variants_path = cfg.out_dir / "variants.jsonl";
    if (!std::filesystem::exists(variants_path)) {
        throw IoError("variants file not found: " + variants_path.string() +
                      " (run the perturb step first)");
    }
    if (cfg.notes_path.empty()) throw ConfigError("audit: notes path is not set");

    std::vector<ClinicalNote> notes = load_corpus(cfg.notes_path, cfg.class_set);
    std::vector<NoteVariant> variants = load_variants(variants_path);

    std::map<std::string, std::size_t> note_index;
    for (std::size_t i = 0; i < notes.size(); ++i) note_index[notes[i].id] = i;
    for (const auto& v : variants) {
        if (!note_index.count(v.note_id)) {
            throw ValidationError("variant references unknown note '" + v.note_id + "'");
        }
    }

    std::filesystem::create_directories(cfg.out_dir);
    ResponseCache cache(cfg.out_dir / "cache");
    std::unique_ptr<Embedder> embedder = make_embedder(cfg.embedder, cfg.retry, &cache);

    // 1. embeddings (resume-aware)
    std::vector<EmbeddingRecord> embeddings =
        embed_variants(cfg, variants, *embedder, cfg.out_dir / "embeddings.jsonl");

    // index originals and perturbed rows
    std::map<std::string, const EmbeddingRecord*> original_rows;
    std::map<std::string, std::size_t> original_variant_idx;
    for (std::size_t i = 0; i < variants.size(); ++i) {
        if (variants[i].method == Method::none) {
            original_rows[variants[i].note_id] = &embeddings[i];
            original_variant_idx[variants[i].note_id] = i;
        }
    }
    for (const auto& note : notes) {
        if (!original_rows.count(note.id)) {
            throw ValidationError("variants file has no original for note '" + note.id + "'");
        }
    }

    // 2. latent model on unperturbed embeddings only
    std::vector<const EmbeddingRecord*> original_ptrs;
    std::vector<std::string> reference_labels;
    for (const auto& note : notes) {
        original_ptrs.push_back(original_rows.at(note.id));
        reference_labels.push_back(note.diagnosis);
    }
    Eigen::MatrixXd X0 = rows_to_matrix(original_ptrs);
    LatentModel latent = fit_latent(X0, cfg.var_target);
    save_latent_model(latent, cfg.out_dir / "latent_model.json");

    // 3. probe on the projections of unperturbed embeddings
    Eigen::MatrixXd Z0 = project_rows(latent, X0);
    ProbeModel probe =
        fit_probe_with_classes(Z0, reference_labels, cfg.class_set, cfg.probe);
    save_probe_model(probe, cfg.out_dir / "probe_model.json");
    CvResult cv = cross_validate(Z0, reference_labels, cfg.folds, cfg.seed, cfg.probe);

    // 4. probe predictions per variant
    std::vector<std::string> probe_preds(variants.size());
    parallel_for(variants.size(), cfg.workers, [&](std::size_t i) {
        Eigen::VectorXd x(static_cast<Eigen::Index>(embeddings[i].vector.size()));
        for (std::size_t j = 0; j < embeddings[i].vector.size(); ++j) {
            x[static_cast<Eigen::Index>(j)] = embeddings[i].vector[j];
        }
        probe_preds[i] = predict(probe, project(latent, x));
    });

    // 5. per-variant LLM labels
    std::vector<std::string> llm_labels(variants.size());
    std::string llm_id;
    if (cfg.llm_mode == LlmMode::echo) {
        llm_id = "echo-reference";
        for (std::size_t i = 0; i < variants.size(); ++i) {
            llm_labels[i] = notes[note_index.at(variants[i].note_id)].diagnosis;
        }
    } else if (cfg.llm_mode == LlmMode::file) {
        llm_id = "file:" + cfg.predictions_path.string();
        auto predictions = load_predictions(cfg.predictions_path, cfg.class_set);
        for (std::size_t i = 0; i < variants.size(); ++i) {
            VariantKey key{variants[i].note_id, variants[i].method, variants[i].threshold};
            auto it = predictions.find(key);
            if (it == predictions.end()) {
                throw ValidationError("predictions file is missing variant " +
                                      cache_key(key.note_id, key.method, key.threshold, 0, ""));
            }
            llm_labels[i] = it->second;
        }
    } else {
        PromptLibrary prompts = PromptLibrary::load(cfg.prompts_dir);
        std::unique_ptr<ChatClient> owned;
        ChatClient* client = client_override;
        if (client == nullptr) {
            owned = make_chat_client(cfg, &cache);
            client = owned.get();
        }
        llm_id = client->id();
        // identical variant texts (the threshold-0 copies in particular) are
        // elicited once and fanned back out
        std::map<std::string, std::vector<std::size_t>> by_text;
        for (std::size_t i = 0; i < variants.size(); ++i) {
            by_text[variants[i].text].push_back(i);
        }
        std::vector<const std::string*> unique_texts;
        unique_texts.reserve(by_text.size());
        for (const auto& [text, idx] : by_text) unique_texts.push_back(&text);
        std::vector<std::string> unique_labels(unique_texts.size());
        parallel_for(unique_texts.size(), cfg.workers, [&](std::size_t i) {
            unique_labels[i] =
                elicit_diagnosis(*client, prompts, *unique_texts[i], cfg.class_set, cfg.chat);
        });
        for (std::size_t i = 0; i < unique_texts.size(); ++i) {
            for (std::size_t idx : by_text.at(*unique_texts[i])) {
                llm_labels[idx] = unique_labels[i];
            }
        }
    }
    {
        auto out = open_out(cfg.out_dir / "llm_predictions.jsonl");
        for (std::size_t i = 0; i < variants.size(); ++i) {
            out << json{{"note_id", variants[i].note_id},
                        {"method", method_name(variants[i].method)},
                        {"threshold", variants[i].threshold},
                        {"label", llm_labels[i]}}
                       .dump()
                << '\n';
        }
    }

    // 6. group by (method, threshold)
    std::map<GroupKey, std::vector<PredictionTriple>> groups;
    std::map<GroupKey, std::vector<const EmbeddingRecord*>> group_rows;
    std::map<GroupKey, std::vector<const EmbeddingRecord*>> group_original_rows;
    for (std::size_t i = 0; i < variants.size(); ++i) {
        if (variants[i].method == Method::none) continue;
        GroupKey key{variants[i].method, variants[i].threshold};
        std::size_t orig_idx = original_variant_idx.at(variants[i].note_id);
        PredictionTriple triple;
        triple.reference = notes[note_index.at(variants[i].note_id)].diagnosis;
        triple.llm_unperturbed = llm_labels[orig_idx];
        triple.llm_perturbed = llm_labels[i];
        triple.probe_unperturbed = probe_preds[orig_idx];
        triple.probe_perturbed = probe_preds[i];
        groups[key].push_back(std::move(triple));
        group_rows[key].push_back(&embeddings[i]);
        group_original_rows[key].push_back(&embeddings[orig_idx]);
    }

    std::map<GroupKey, double> drift;
    std::map<GroupKey, VarianceProfileEntry> profiles;
    for (const auto& [key, rows] : group_rows) {
        Eigen::MatrixXd Xg = rows_to_matrix(rows);
        Eigen::MatrixXd Xo = rows_to_matrix(group_original_rows.at(key));
        drift[key] = centroid_displacement(Xo, Xg);
        if (Xg.rows() >= 2) {
            profiles[key] = variance_profile(project_rows(latent, Xg), cfg.top_m);
        }
    }

    std::vector<MetricRow> rows = assemble_rows(groups, drift);
    std::vector<std::pair<int, double>> elbow = elbow_curve(X0);

    // 7. report
    AuditResult result;
    result.rows = rows;
    result.latent_k = static_cast<int>(latent.retained());
    result.latent_cumulative_ratio = latent.cumulative_ratio();
    result.cv = cv;
    result.report_path = cfg.out_dir / "report.json";

    json jrows = json::array();
    for (const auto& r : rows) {
        jrows.push_back(json{{"method", method_name(r.method)},
                             {"threshold", r.threshold},
                             {"latent_flip_rate", r.latent_flip_rate},
                             {"dfr", r.dfr},
                             {"probe_llm_agreement", r.probe_llm_agreement},
                             {"pearson", r.pearson ? json(*r.pearson) : json(nullptr)},
                             {"spearman", r.spearman ? json(*r.spearman) : json(nullptr)},
                             {"llm_accuracy", r.llm_accuracy},
                             {"centroid_drift", r.centroid_drift}});
    }
    json jprofiles = json::array();
    for (const auto& [key, entry] : profiles) {
        jprofiles.push_back(json{{"method", method_name(key.method)},
                                 {"threshold", key.threshold},
                                 {"dims", entry.dims},
                                 {"shares", entry.shares}});
    }
    json jelbow = json::array();
    for (const auto& [k, cum] : elbow) jelbow.push_back(json{{"components", k}, {"cumulative", cum}});

    json report{
        {"config", config_snapshot(cfg)},
        {"rows", std::move(jrows)},
        {"latent", {{"k", result.latent_k}, {"cumulative_ratio", result.latent_cumulative_ratio}}},
        {"cross_validation",
         {{"fold_accuracy", cv.fold_accuracy},
          {"mean_accuracy", cv.mean_accuracy},
          {"stratified", cv.stratified}}},
        {"variance_profiles", std::move(jprofiles)},
        {"elbow", std::move(jelbow)},
        {"provenance",
         {{"tool_version", tool_version()},
          {"seed", cfg.seed},
          {"embedder_id", embedder->id()},
          {"llm_id", llm_id},
          {"probe_converged", probe.converged},
          {"probe_iterations", probe.iterations}}},
    };
    {
        auto out = open_out(result.report_path);
        out << report.dump(2) << '\n';
    }
    cmd_report(result.report_path, "tsv", cfg.out_dir);
    return result;
}

// --- report rendering ------------------------------------------------------------

namespace {

json load_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open report " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("rows")) {
        throw ValidationError("corrupt report file " + path.string());
    }
    return j;
}

std::string num_or_na(const json& v) {
    return v.is_null() ? "NA" : format_double(v.get<double>());
}

void write_tsv_outputs(const json& report, const std::filesystem::path& out_dir) {
    {
        auto out = open_out(out_dir / "metrics.tsv");
        out << "method\tthreshold\tlatent_flip_rate\tdfr\tprobe_llm_agreement\tpearson\t"
               "spearman\tllm_accuracy\tcentroid_drift\n";
        for (const auto& r : report["rows"]) {
            out << r["method"].get<std::string>() << '\t'
                << format_double(r["threshold"].get<double>()) << '\t'
                << format_double(r["latent_flip_rate"].get<double>()) << '\t'
                << format_double(r["dfr"].get<double>()) << '\t'
                << format_double(r["probe_llm_agreement"].get<double>()) << '\t'
                << num_or_na(r["pearson"]) << '\t' << num_or_na(r["spearman"]) << '\t'
                << format_double(r["llm_accuracy"].get<double>()) << '\t'
                << format_double(r["centroid_drift"].get<double>()) << '\n';
        }
    }
    {
        auto out = open_out(out_dir / "plot_accuracy.tsv");
        out << "method\tthreshold\tllm_accuracy\n";
        for (const auto& r : report["rows"]) {
            out << r["method"].get<std::string>() << '\t'
                << format_double(r["threshold"].get<double>()) << '\t'
                << format_double(r["llm_accuracy"].get<double>()) << '\n';
        }
    }
    {
        auto out = open_out(out_dir / "plot_drift.tsv");
        out << "method\tthreshold\tcentroid_drift\n";
        for (const auto& r : report["rows"]) {
            out << r["method"].get<std::string>() << '\t'
                << format_double(r["threshold"].get<double>()) << '\t'
                << format_double(r["centroid_drift"].get<double>()) << '\n';
        }
    }
    {
        auto out = open_out(out_dir / "plot_variance.tsv");
        out << "method\tthreshold\trank\tdim\tshare\n";
        for (const auto& p : report.value("variance_profiles", json::array())) {
            const auto& dims = p["dims"];
            const auto& shares = p["shares"];
            for (std::size_t i = 0; i < dims.size(); ++i) {
                out << p["method"].get<std::string>() << '\t'
                    << format_double(p["threshold"].get<double>()) << '\t' << (i + 1) << '\t'
                    << dims[i].get<int>() << '\t' << format_double(shares[i].get<double>())
                    << '\n';
            }
        }
    }
    {
        auto out = open_out(out_dir / "plot_elbow.tsv");
        out << "components\tcumulative_ratio\n";
        for (const auto& e : report.value("elbow", json::array())) {
            out << e["components"].get<int>() << '\t'
                << format_double(e["cumulative"].get<double>()) << '\n';
        }
    }
}

std::string fixed4(const json& v) {
    return v.is_null() ? "   NA " : format_fixed(v.get<double>(), 4);
}

} // namespace

std::string render_report_table(const std::filesystem::path& report_path) {
    json report = load_report(report_path);
    std::ostringstream out;
    out << "method     threshold  pearson  spearman  agreement  flip_rate  dfr     accuracy\n";
    out << "---------  ---------  -------  --------  ---------  ---------  ------  --------\n";
    std::string last_method;
    for (const auto& r : report["rows"]) {
        std::string method = r["method"].get<std::string>();
        std::string shown = method == last_method ? std::string(method.size(), ' ') : method;
        last_method = method;
        out << shown << std::string(method.size() < 9 ? 9 - method.size() : 1, ' ') << "  "
            << format_fixed(r["threshold"].get<double>(), 2) << "       " << fixed4(r["pearson"])
            << "   " << fixed4(r["spearman"]) << "    " << fixed4(r["probe_llm_agreement"])
            << "     " << fixed4(r["latent_flip_rate"]) << "     "
            << format_fixed(r["dfr"].get<double>(), 4) << "  "
            << format_fixed(r["llm_accuracy"].get<double>(), 4) << '\n';
    }
    const auto& latent = report["latent"];
    out << "\nlatent components: " << latent["k"].get<int>() << " (cumulative ratio "
        << format_fixed(latent["cumulative_ratio"].get<double>(), 4) << ")\n";
    const auto& cv = report["cross_validation"];
    out << "probe cv mean accuracy: " << format_fixed(cv["mean_accuracy"].get<double>(), 4)
        << (cv["stratified"].get<bool>() ? " (stratified)" : " (unstratified fallback)") << '\n';
    return out.str();
}

void cmd_report(const std::filesystem::path& report_path, const std::string& format,
                const std::filesystem::path& out_dir) {
    if (format != "text" && format != "tsv") {
        throw ConfigError("unknown report format '" + format + "' (use text or tsv)");
    }
    json report = load_report(report_path);
    std::filesystem::create_directories(out_dir);
    if (format == "tsv") {
        write_tsv_outputs(report, out_dir);
    } else {
        auto out = open_out(out_dir / "report_table.txt");
        out << render_report_table(report_path);
    }
}

} // namespace lfa
