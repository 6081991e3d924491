#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "lfa/agent.hpp"
#include "lfa/corpus.hpp"
#include "lfa/probe.hpp"

namespace lfa {

// Where audit gets its per-variant diagnosis labels.
enum class LlmMode { echo, http, file };

const char* llm_mode_name(LlmMode m);

struct RunConfig {
    // inputs (relative paths resolve against the config file's directory)
    std::filesystem::path notes_path;
    std::filesystem::path dialogues_path;
    std::filesystem::path lexicon_path;
    std::filesystem::path synonyms_path;
    std::filesystem::path negation_path;
    std::filesystem::path prompts_dir;
    std::filesystem::path predictions_path; // llm_mode == file
    std::filesystem::path out_dir = "out";

    std::vector<std::string> class_set;
    std::vector<Method> methods = perturbation_methods();
    std::vector<double> thresholds = {0.0, 0.25, 0.5, 0.75, 1.0};
    std::uint64_t seed = 20250101;

    EmbedderConfig embedder;
    LlmMode llm_mode = LlmMode::echo;
    ChatConfig chat;
    std::string chat_base_url;
    std::string chat_api_key;
    std::string ner_endpoint; // optional; replaces the lexicon extractor

    double var_target = 0.9;
    ProbeOptions probe;
    int folds = 10;
    int top_m = 5;
    int workers = 1;
    RetryPolicy retry;
    bool offline = false; // force the offline embedder and echo labels
    bool save_reasoning = false;

    void validate() const;
};

// Parses the JSON config file, resolves relative paths against its directory,
// and fills provider settings from LFA_* environment variables when unset.
RunConfig load_config(const std::filesystem::path& path);

// Default-filled snapshot embedded in every report; reloading it reproduces
// the run.
nlohmann::json config_snapshot(const RunConfig& cfg);

} // namespace lfa
