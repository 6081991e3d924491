#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "lfa/corpus.hpp"
#include "lfa/entities.hpp"

namespace lfa {

struct ChatMessage {
    std::string role;
    std::string content;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 512;
};

struct RetryPolicy {
    int max_retries = 2; // total attempts <= max_retries + 1
    int backoff_ms = 100;
};

// Disk cache keyed by (request text, model, temperature). Concurrent reads,
// serialized writes.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);
    std::optional<std::string> get(std::string_view kind, std::string_view request_text,
                                   std::string_view model, double temperature) const;
    void put(std::string_view kind, std::string_view request_text, std::string_view model,
             double temperature, std::string_view response);

private:
    std::filesystem::path key_path(std::string_view kind, std::string_view request_text,
                                   std::string_view model, double temperature) const;
    std::filesystem::path dir_;
    mutable std::mutex write_mutex_;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual std::string complete(const ChatRequest& request) = 0;
    virtual std::string id() const = 0;
};

// OpenAI-compatible /v1/chat/completions client with retry/backoff and an
// optional response cache.
class HttpChatClient : public ChatClient {
public:
    HttpChatClient(std::string base_url, std::string api_key, RetryPolicy retry = {},
                   ResponseCache* cache = nullptr);
    std::string complete(const ChatRequest& request) override;
    std::string id() const override { return "chat:" + base_url_; }

private:
    std::string base_url_;
    std::string api_key_;
    RetryPolicy retry_;
    ResponseCache* cache_;
};

// Test/offline stub backed by a callback.
class CallbackChatClient : public ChatClient {
public:
    using Fn = std::function<std::string(const ChatRequest&)>;
    explicit CallbackChatClient(Fn fn, std::string id = "stub") : fn_(std::move(fn)), id_(std::move(id)) {}
    std::string complete(const ChatRequest& request) override { return fn_(request); }
    std::string id() const override { return id_; }

private:
    Fn fn_;
    std::string id_;
};

// --- prompt templates --------------------------------------------------------

// Text with {{name}} placeholders; rendering is a pure function of
// (template, values) and fails on unresolved names.
class PromptTemplate {
public:
    static PromptTemplate from_string(std::string text);
    static PromptTemplate load(const std::filesystem::path& path);
    std::string render(const std::map<std::string, std::string>& values) const;
    const std::string& text() const { return text_; }

private:
    std::string text_;
};

struct PromptLibrary {
    PromptTemplate note_generation;
    PromptTemplate forward_reasoning;
    PromptTemplate backward_reasoning;
    PromptTemplate aggregate_reasoning;
    PromptTemplate elicit_diagnosis;

    static PromptLibrary load(const std::filesystem::path& dir);
};

// The dialogue blocks substituted into the note-generation template.
std::string render_initial_evidence(const DialogueRecord& dialogue);
std::string render_qa_section(const DialogueRecord& dialogue);
std::string render_note_prompt(const DialogueRecord& dialogue, const PromptLibrary& prompts);

struct ChatConfig {
    std::string model;
    double temperature = 0.0;
    int max_tokens = 512;
};

std::string generate_note(ChatClient& client, const PromptLibrary& prompts,
                          const DialogueRecord& dialogue, const ChatConfig& cfg);
std::string reason_forward(ChatClient& client, const PromptLibrary& prompts,
                           std::string_view note, const ChatConfig& cfg);
std::string reason_backward(ChatClient& client, const PromptLibrary& prompts,
                            std::string_view note, std::string_view diagnosis,
                            const ChatConfig& cfg);
std::string aggregate_reasoning(ChatClient& client, const PromptLibrary& prompts,
                                std::string_view forward, std::string_view backward,
                                const ChatConfig& cfg);

struct ReasoningBundle {
    std::string note_text;
    std::string forward;
    std::string backward;
    std::string aggregate;
    std::string elicited_diagnosis;
};

// Constrained-choice elicitation: the reply must normalize to a member of
// class_set; one retry, then an error.
std::string elicit_diagnosis(ChatClient& client, const PromptLibrary& prompts,
                             std::string_view note, const std::vector<std::string>& class_set,
                             const ChatConfig& cfg);

// case- and punctuation-insensitive label form
std::string normalize_label(std::string_view raw);

// --- embedders ---------------------------------------------------------------

struct EmbedderConfig {
    enum class Kind { http_provider, offline_hash };
    Kind kind = Kind::offline_hash;
    int dimension = 768;
    std::string endpoint;  // http_provider only
    std::string api_key;
    std::string model;
    int truncate_tokens = 0; // 0 = no truncation before embedding
};

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<double> embed(std::string_view text) = 0;
    virtual std::vector<std::pair<std::string, std::vector<double>>> embed_tokens(
        std::string_view text);
    virtual std::string id() const = 0;
};

// Deterministic seeded-hash bag of word n-grams (n = 1, 2), L2-normalized.
// Entity-sensitive by construction; makes the whole pipeline runnable with no
// network.
class OfflineHashEmbedder : public Embedder {
public:
    explicit OfflineHashEmbedder(int dimension = 768, int truncate_tokens = 0);
    std::vector<double> embed(std::string_view text) override;
    std::vector<std::pair<std::string, std::vector<double>>> embed_tokens(
        std::string_view text) override;
    std::string id() const override;

private:
    std::vector<double> gram_vector(std::string_view gram) const;
    int dimension_;
    int truncate_tokens_;
};

// OpenAI-compatible /v1/embeddings client; enforces the configured dimension.
class HttpEmbedder : public Embedder {
public:
    HttpEmbedder(EmbedderConfig cfg, RetryPolicy retry = {}, ResponseCache* cache = nullptr);
    std::vector<double> embed(std::string_view text) override;
    std::string id() const override { return "embed:" + cfg_.endpoint + ":" + cfg_.model; }

private:
    EmbedderConfig cfg_;
    RetryPolicy retry_;
    ResponseCache* cache_;
};

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& cfg, RetryPolicy retry = {},
                                        ResponseCache* cache = nullptr);

// Optional external extractor: POST {"text": ...} returning
// [{"start":..,"end":..,"category":..}]. Polarity is still assigned locally.
std::vector<EntitySpan> extract_entities_remote(std::string_view text,
                                                const std::string& endpoint,
                                                const NegationTable& negation,
                                                RetryPolicy retry = {});

} // namespace lfa
