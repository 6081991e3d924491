#include "lfa/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

#include "lfa/errors.hpp"

namespace lfa {

using nlohmann::json;

const char* llm_mode_name(LlmMode m) {
    switch (m) {
        case LlmMode::echo: return "echo";
        case LlmMode::http: return "http";
        case LlmMode::file: return "file";
    }
    return "echo";
}

void RunConfig::validate() const {
    if (class_set.empty()) throw ConfigError("config: class_set must not be empty");
    std::set<std::string> unique_classes(class_set.begin(), class_set.end());
    if (unique_classes.size() != class_set.size()) {
        throw ConfigError("config: class_set has duplicate labels");
    }
    if (thresholds.empty()) throw ConfigError("config: thresholds must not be empty");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        double t = thresholds[i];
        if (t < 0.0 || t > 1.0) throw ConfigError("config: thresholds must lie in [0,1]");
        if (i > 0 && thresholds[i] <= thresholds[i - 1]) {
            throw ConfigError("config: thresholds must be sorted and unique");
        }
    }
    if (thresholds.front() != 0.0) throw ConfigError("config: threshold grid must contain 0");
    if (methods.empty()) throw ConfigError("config: methods must not be empty");
    for (Method m : methods) {
        if (m == Method::none) throw ConfigError("config: 'none' is not a perturbation method");
    }
    std::set<Method> unique_methods(methods.begin(), methods.end());
    if (unique_methods.size() != methods.size()) {
        throw ConfigError("config: methods list has duplicates");
    }
    if (!(var_target > 0.0 && var_target <= 1.0)) {
        throw ConfigError("config: var_target must lie in (0,1]");
    }
    if (probe.reg_c <= 0.0) throw ConfigError("config: reg_c must be positive");
    if (probe.max_iter < 1) throw ConfigError("config: max_iter must be positive");
    if (folds < 2) throw ConfigError("config: folds must be at least 2");
    if (top_m < 1) throw ConfigError("config: top_m must be at least 1");
    if (workers < 1) throw ConfigError("config: workers must be at least 1");
    if (embedder.dimension < 2) throw ConfigError("config: embedding dimension must be >= 2");
    if (llm_mode == LlmMode::file && predictions_path.empty()) {
        throw ConfigError("config: llm_mode 'file' requires predictions_path");
    }
}

namespace {

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v == nullptr ? fallback : std::string(v);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) return {};
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

} // namespace

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ConfigError("config file " + path.string() + " is not a JSON object");
    }
    std::filesystem::path base = path.has_parent_path() ? path.parent_path() : ".";

    RunConfig cfg;
    cfg.notes_path = resolve(base, j.value("notes", std::string()));
    cfg.dialogues_path = resolve(base, j.value("dialogues", std::string()));
    cfg.lexicon_path = resolve(base, j.value("lexicon", std::string()));
    cfg.synonyms_path = resolve(base, j.value("synonyms", std::string()));
    cfg.negation_path = resolve(base, j.value("negation_table", std::string()));
    cfg.prompts_dir = resolve(base, j.value("prompts_dir", std::string()));
    cfg.predictions_path = resolve(base, j.value("predictions", std::string()));
    cfg.out_dir = resolve(base, j.value("out_dir", std::string("out")));

    cfg.class_set = j.value("class_set", std::vector<std::string>{});
    if (j.contains("methods")) {
        cfg.methods.clear();
        for (const auto& name : j["methods"]) {
            auto m = method_from_name(name.get<std::string>());
            if (!m) throw ConfigError("config: unknown method '" + name.get<std::string>() + "'");
            cfg.methods.push_back(*m);
        }
    }
    if (j.contains("thresholds")) {
        cfg.thresholds = j["thresholds"].get<std::vector<double>>();
        std::sort(cfg.thresholds.begin(), cfg.thresholds.end());
    }
    cfg.seed = j.value("seed", cfg.seed);

    if (j.contains("embedder")) {
        const json& e = j["embedder"];
        std::string kind = e.value("kind", std::string("offline_hash"));
        if (kind == "offline_hash") {
            cfg.embedder.kind = EmbedderConfig::Kind::offline_hash;
        } else if (kind == "http_provider") {
            cfg.embedder.kind = EmbedderConfig::Kind::http_provider;
        } else {
            throw ConfigError("config: unknown embedder kind '" + kind + "'");
        }
        cfg.embedder.dimension = e.value("dimension", cfg.embedder.dimension);
        cfg.embedder.endpoint = e.value("endpoint", std::string());
        cfg.embedder.model = e.value("model", std::string());
        cfg.embedder.truncate_tokens = e.value("truncate_tokens", 0);
    }
    cfg.embedder.endpoint = env_or("LFA_EMBED_BASE_URL", cfg.embedder.endpoint);
    cfg.embedder.model = env_or("LFA_EMBED_MODEL", cfg.embedder.model);
    cfg.embedder.api_key = env_or("LFA_EMBED_API_KEY", cfg.embedder.api_key);
    {
        std::string dim = env_or("LFA_EMBED_DIM", "");
        if (!dim.empty()) cfg.embedder.dimension = std::stoi(dim);
    }

    std::string mode = j.value("llm_mode", std::string("echo"));
    if (mode == "echo") {
        cfg.llm_mode = LlmMode::echo;
    } else if (mode == "http") {
        cfg.llm_mode = LlmMode::http;
    } else if (mode == "file") {
        cfg.llm_mode = LlmMode::file;
    } else {
        throw ConfigError("config: unknown llm_mode '" + mode + "'");
    }

    if (j.contains("chat")) {
        const json& c = j["chat"];
        cfg.chat.model = c.value("model", std::string());
        cfg.chat.temperature = c.value("temperature", 0.0);
        cfg.chat.max_tokens = c.value("max_tokens", 512);
        cfg.chat_base_url = c.value("base_url", std::string());
    }
    cfg.chat_base_url = env_or("LFA_CHAT_BASE_URL", cfg.chat_base_url);
    cfg.chat_api_key = env_or("LFA_CHAT_API_KEY", cfg.chat_api_key);
    if (cfg.chat.model.empty()) cfg.chat.model = env_or("LFA_CHAT_MODEL", "");
    cfg.ner_endpoint = env_or("LFA_NER_ENDPOINT", j.value("ner_endpoint", std::string()));

    cfg.var_target = j.value("var_target", cfg.var_target);
    if (j.contains("probe")) {
        const json& p = j["probe"];
        cfg.probe.reg_c = p.value("reg_c", cfg.probe.reg_c);
        cfg.probe.max_iter = p.value("max_iter", cfg.probe.max_iter);
        cfg.probe.tol = p.value("tol", cfg.probe.tol);
        cfg.folds = p.value("folds", cfg.folds);
    }
    cfg.top_m = j.value("top_m", cfg.top_m);
    cfg.workers = j.value("workers", cfg.workers);
    cfg.retry.max_retries = j.value("max_retries", cfg.retry.max_retries);
    cfg.retry.backoff_ms = j.value("backoff_ms", cfg.retry.backoff_ms);
    cfg.offline = j.value("offline", cfg.offline);
    cfg.save_reasoning = j.value("save_reasoning", cfg.save_reasoning);

    if (cfg.offline) {
        cfg.embedder.kind = EmbedderConfig::Kind::offline_hash;
        if (cfg.llm_mode == LlmMode::http) cfg.llm_mode = LlmMode::echo;
    }
    return cfg;
}

nlohmann::json config_snapshot(const RunConfig& cfg) {
    json methods = json::array();
    for (Method m : cfg.methods) methods.push_back(method_name(m));
    json snapshot{
        {"notes", cfg.notes_path.string()},
        {"dialogues", cfg.dialogues_path.string()},
        {"lexicon", cfg.lexicon_path.string()},
        {"synonyms", cfg.synonyms_path.string()},
        {"negation_table", cfg.negation_path.string()},
        {"prompts_dir", cfg.prompts_dir.string()},
        {"predictions", cfg.predictions_path.string()},
        {"out_dir", cfg.out_dir.string()},
        {"class_set", cfg.class_set},
        {"methods", std::move(methods)},
        {"thresholds", cfg.thresholds},
        {"seed", cfg.seed},
        {"embedder",
         {{"kind",
           cfg.embedder.kind == EmbedderConfig::Kind::offline_hash ? "offline_hash"
                                                                   : "http_provider"},
          {"dimension", cfg.embedder.dimension},
          {"endpoint", cfg.embedder.endpoint},
          {"model", cfg.embedder.model},
          {"truncate_tokens", cfg.embedder.truncate_tokens}}},
        {"llm_mode", llm_mode_name(cfg.llm_mode)},
        {"chat",
         {{"model", cfg.chat.model},
          {"temperature", cfg.chat.temperature},
          {"max_tokens", cfg.chat.max_tokens},
          {"base_url", cfg.chat_base_url}}},
        {"ner_endpoint", cfg.ner_endpoint},
        {"var_target", cfg.var_target},
        {"probe",
         {{"reg_c", cfg.probe.reg_c},
          {"max_iter", cfg.probe.max_iter},
          {"tol", cfg.probe.tol},
          {"folds", cfg.folds}}},
        {"top_m", cfg.top_m},
        {"workers", cfg.workers},
        {"max_retries", cfg.retry.max_retries},
        {"backoff_ms", cfg.retry.backoff_ms},
        {"offline", cfg.offline},
        {"save_reasoning", cfg.save_reasoning},
    };
    return snapshot;
}

} // namespace lfa
