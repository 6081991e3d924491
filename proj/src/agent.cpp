#include "lfa/agent.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "lfa/errors.hpp"
#include "lfa/hashing.hpp"
#include "lfa/text.hpp"

namespace lfa {

using nlohmann::json;

// --- response cache ----------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path ResponseCache::key_path(std::string_view kind, std::string_view request_text,
                                              std::string_view model, double temperature) const {
    std::uint64_t h = fnv1a64(request_text);
    h = hash_combine(h, fnv1a64(model));
    h = hash_combine(h, fnv1a64(format_double(temperature)));
    h = hash_combine(h, fnv1a64(kind));
    return dir_ / (std::string(kind) + "-" + to_hex(h) + ".json");
}

std::optional<std::string> ResponseCache::get(std::string_view kind, std::string_view request_text,
                                              std::string_view model, double temperature) const {
    auto path = key_path(kind, request_text, model, temperature);
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    // guard against hash collisions: the stored request must match
    if (j.value("request", std::string()) != request_text ||
        j.value("model", std::string()) != model) {
        return std::nullopt;
    }
    return j.value("response", std::string());
}

void ResponseCache::put(std::string_view kind, std::string_view request_text,
                        std::string_view model, double temperature, std::string_view response) {
    std::lock_guard<std::mutex> lock(write_mutex_);
    auto path = key_path(kind, request_text, model, temperature);
    json j{{"request", std::string(request_text)},
           {"model", std::string(model)},
           {"temperature", temperature},
           {"response", std::string(response)}};
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write cache entry " + path.string());
    out << j.dump() << '\n';
}

// --- http plumbing -------------------------------------------------------------

namespace {

bool retryable_status(int status) {
    return status == 429 || status == 500 || status == 502 || status == 503 || status == 504;
}

// POST with bounded retries and exponential backoff on transport errors and
// throttle statuses.
std::string post_with_retry(const std::string& base_url, const std::string& path,
                            const std::string& body, const std::string& api_key,
                            const RetryPolicy& retry) {
    std::string last_error;
    for (int attempt = 0; attempt <= retry.max_retries; ++attempt) {
        if (attempt > 0) {
            auto delay = std::chrono::milliseconds(retry.backoff_ms * (1 << (attempt - 1)));
            std::this_thread::sleep_for(delay);
        }
        httplib::Client client(base_url);
        client.set_connection_timeout(30);
        client.set_read_timeout(120);
        httplib::Headers headers;
        if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 200) return res->body;
        last_error = "status " + std::to_string(res->status) + ": " + res->body;
        if (!retryable_status(res->status)) break;
    }
    throw ProviderError("POST " + base_url + path + " failed: " + last_error);
}

json parse_provider_json(const std::string& body, const std::string& context) {
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded()) throw ProviderError(context + ": response is not valid JSON");
    return j;
}

} // namespace

HttpChatClient::HttpChatClient(std::string base_url, std::string api_key, RetryPolicy retry,
                               ResponseCache* cache)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)), retry_(retry), cache_(cache) {
    if (base_url_.empty()) throw ConfigError("chat provider base URL is empty");
}

std::string HttpChatClient::complete(const ChatRequest& request) {
    json messages = json::array();
    std::string cache_text;
    for (const auto& m : request.messages) {
        messages.push_back(json{{"role", m.role}, {"content", m.content}});
        cache_text += m.role;
        cache_text += '\x1f';
        cache_text += m.content;
        cache_text += '\x1e';
    }
    if (cache_) {
        auto hit = cache_->get("chat", cache_text, request.model, request.temperature);
        if (hit) return *hit;
    }
    json body{{"model", request.model},
              {"messages", std::move(messages)},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens}};
    std::string response =
        post_with_retry(base_url_, "/v1/chat/completions", body.dump(), api_key_, retry_);
    json j = parse_provider_json(response, "chat completion");
    if (!j.contains("choices") || j["choices"].empty()) {
        throw ProviderError("chat completion: no choices in response");
    }
    std::string content = j["choices"][0].value("message", json::object()).value("content", "");
    if (content.empty()) throw ProviderError("chat completion: empty completion");
    if (cache_) cache_->put("chat", cache_text, request.model, request.temperature, content);
    return content;
}

// --- prompt templates ----------------------------------------------------------

PromptTemplate PromptTemplate::from_string(std::string text) {
    PromptTemplate t;
    t.text_ = std::move(text);
    return t;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open prompt template " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    // template files end with a trailing newline for editor friendliness;
    // rendered prompts do not
    if (!text.empty() && text.back() == '\n') text.pop_back();
    return from_string(std::move(text));
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& values) const {
    std::string out;
    out.reserve(text_.size());
    std::size_t pos = 0;
    while (pos < text_.size()) {
        auto open = text_.find("{{", pos);
        if (open == std::string::npos) {
            out.append(text_, pos, text_.size() - pos);
            break;
        }
        auto close = text_.find("}}", open + 2);
        if (close == std::string::npos) {
            out.append(text_, pos, text_.size() - pos);
            break;
        }
        out.append(text_, pos, open - pos);
        std::string name = text_.substr(open + 2, close - open - 2);
        auto it = values.find(name);
        if (it == values.end()) {
            throw ValidationError("unresolved prompt placeholder '" + name + "'");
        }
        out.append(it->second);
        pos = close + 2;
    }
    return out;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
    PromptLibrary lib;
    lib.note_generation = PromptTemplate::load(dir / "note_generation.txt");
    lib.forward_reasoning = PromptTemplate::load(dir / "forward_reasoning.txt");
    lib.backward_reasoning = PromptTemplate::load(dir / "backward_reasoning.txt");
    lib.aggregate_reasoning = PromptTemplate::load(dir / "aggregate_reasoning.txt");
    lib.elicit_diagnosis = PromptTemplate::load(dir / "elicit_diagnosis.txt");
    return lib;
}

namespace {

std::string python_repr(const std::variant<bool, std::string>& answer) {
    if (std::holds_alternative<bool>(answer)) {
        return std::get<bool>(answer) ? "True" : "False";
    }
    return "'" + std::get<std::string>(answer) + "'";
}

std::string chat_once(ChatClient& client, const ChatConfig& cfg, std::string prompt) {
    ChatRequest req;
    req.model = cfg.model;
    req.temperature = cfg.temperature;
    req.max_tokens = cfg.max_tokens;
    req.messages.push_back(ChatMessage{"user", std::move(prompt)});
    std::string completion = client.complete(req);
    if (completion.empty()) throw ProviderError("provider returned an empty completion");
    return completion;
}

} // namespace

std::string render_initial_evidence(const DialogueRecord& dialogue) {
    std::string out = "[";
    for (std::size_t i = 0; i < dialogue.initial_evidence.size(); ++i) {
        const QaItem& item = dialogue.initial_evidence[i];
        if (i > 0) out += ", ";
        out += "{'question': '" + item.question + "', 'is_antecedent': " +
               (item.is_antecedent ? "True" : "False") + ", 'answer': " +
               python_repr(item.answer) + "}";
    }
    out += "]";
    return out;
}

std::string render_qa_section(const DialogueRecord& dialogue) {
    std::string out;
    for (const QaItem& item : dialogue.qa_items) {
        const char* kind = item.is_antecedent ? "an antecedent" : "a symptom";
        if (std::holds_alternative<bool>(item.answer)) {
            out += "For the question \"" + item.question + "\", the patient replied '" +
                   (std::get<bool>(item.answer) ? "True" : "False") +
                   "', which is categorized as " + kind + ".\n";
        } else {
            out += "For the question \"" + item.question + "\", the patient provided '" +
                   std::get<std::string>(item.answer) + "', indicating " + kind + ".\n";
        }
    }
    if (!out.empty()) out.pop_back();
    return out;
}

std::string render_note_prompt(const DialogueRecord& dialogue, const PromptLibrary& prompts) {
    if (dialogue.qa_items.empty()) {
        throw ValidationError("dialogue has no qa_items; cannot render the note prompt");
    }
    return prompts.note_generation.render({{"age", std::to_string(dialogue.age)},
                                           {"sex", dialogue.sex},
                                           {"initial_evidence", render_initial_evidence(dialogue)},
                                           {"qa_section", render_qa_section(dialogue)}});
}

std::string generate_note(ChatClient& client, const PromptLibrary& prompts,
                          const DialogueRecord& dialogue, const ChatConfig& cfg) {
    return chat_once(client, cfg, render_note_prompt(dialogue, prompts));
}

std::string reason_forward(ChatClient& client, const PromptLibrary& prompts,
                           std::string_view note, const ChatConfig& cfg) {
    if (note.empty()) throw ValidationError("reason_forward: empty note");
    return chat_once(client, cfg,
                     prompts.forward_reasoning.render({{"note", std::string(note)}}));
}

std::string reason_backward(ChatClient& client, const PromptLibrary& prompts,
                            std::string_view note, std::string_view diagnosis,
                            const ChatConfig& cfg) {
    if (note.empty()) throw ValidationError("reason_backward: empty note");
    if (diagnosis.empty()) throw ValidationError("reason_backward: empty diagnosis");
    return chat_once(client, cfg,
                     prompts.backward_reasoning.render(
                         {{"note", std::string(note)}, {"diagnosis", std::string(diagnosis)}}));
}

std::string aggregate_reasoning(ChatClient& client, const PromptLibrary& prompts,
                                std::string_view forward, std::string_view backward,
                                const ChatConfig& cfg) {
    if (forward.empty()) throw ValidationError("aggregate_reasoning: empty forward chain");
    if (backward.empty()) throw ValidationError("aggregate_reasoning: empty backward chain");
    return chat_once(client, cfg,
                     prompts.aggregate_reasoning.render(
                         {{"forward", std::string(forward)}, {"backward", std::string(backward)}}));
}

std::string normalize_label(std::string_view raw) {
    std::string out;
    bool pending_space = false;
    for (unsigned char c : raw) {
        if (std::isalnum(c)) {
            if (pending_space && !out.empty()) out.push_back(' ');
            pending_space = false;
            out.push_back(static_cast<char>(std::tolower(c)));
        } else {
            pending_space = true;
        }
    }
    return out;
}

std::string elicit_diagnosis(ChatClient& client, const PromptLibrary& prompts,
                             std::string_view note, const std::vector<std::string>& class_set,
                             const ChatConfig& cfg) {
    if (class_set.empty()) throw ValidationError("elicit_diagnosis: empty class set");
    if (note.empty()) throw ValidationError("elicit_diagnosis: empty note");
    std::string class_list;
    for (std::size_t i = 0; i < class_set.size(); ++i) {
        if (i > 0) class_list += ", ";
        class_list += class_set[i];
    }
    std::string prompt = prompts.elicit_diagnosis.render(
        {{"note", std::string(note)}, {"class_list", class_list}});

    std::string last_reply;
    for (int attempt = 0; attempt < 2; ++attempt) {
        last_reply = chat_once(client, cfg, prompt);
        std::string normalized = normalize_label(last_reply);
        for (const auto& cls : class_set) {
            if (normalize_label(cls) == normalized) return cls;
        }
    }
    throw ProviderError("could not parse a diagnosis label from reply '" + last_reply + "'");
}

// --- embedders -----------------------------------------------------------------

std::vector<std::pair<std::string, std::vector<double>>> Embedder::embed_tokens(
    std::string_view text) {
    std::vector<std::pair<std::string, std::vector<double>>> out;
    for (const std::string& tok : whitespace_tokens(text)) {
        out.emplace_back(tok, embed(tok));
    }
    return out;
}

OfflineHashEmbedder::OfflineHashEmbedder(int dimension, int truncate_tokens)
    : dimension_(dimension), truncate_tokens_(truncate_tokens) {
    if (dimension_ < 2) throw ConfigError("embedding dimension must be at least 2");
}

std::string OfflineHashEmbedder::id() const {
    return "offline-hash-v1-d" + std::to_string(dimension_);
}

std::vector<double> OfflineHashEmbedder::gram_vector(std::string_view gram) const {
    std::uint64_t state = fnv1a64(gram, 0x7f3a0c55d2e94b11ULL);
    std::vector<double> v(static_cast<std::size_t>(dimension_));
    for (auto& x : v) {
        x = 2.0 * (static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53) - 1.0;
    }
    return v;
}

std::vector<double> OfflineHashEmbedder::embed(std::string_view text) {
    if (text.empty()) throw ValidationError("embed: empty text");
    std::vector<std::string> words = metric_tokens(text);
    if (truncate_tokens_ > 0 && static_cast<int>(words.size()) > truncate_tokens_) {
        words.resize(static_cast<std::size_t>(truncate_tokens_));
    }
    std::vector<double> acc(static_cast<std::size_t>(dimension_), 0.0);
    auto add_gram = [&](std::string_view gram) {
        std::vector<double> g = gram_vector(gram);
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += g[j];
    };
    for (const auto& w : words) add_gram(w);
    for (std::size_t i = 0; i + 1 < words.size(); ++i) {
        add_gram(words[i] + " " + words[i + 1]);
    }
    if (words.empty()) add_gram(text); // punctuation-only input still embeds

    double norm = 0.0;
    for (double x : acc) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
        for (double& x : acc) x /= norm;
    }
    return acc;
}

std::vector<std::pair<std::string, std::vector<double>>> OfflineHashEmbedder::embed_tokens(
    std::string_view text) {
    if (text.empty()) throw ValidationError("embed_tokens: empty text");
    std::vector<std::pair<std::string, std::vector<double>>> out;
    for (const std::string& tok : whitespace_tokens(text)) {
        out.emplace_back(tok, embed(tok));
    }
    return out;
}

HttpEmbedder::HttpEmbedder(EmbedderConfig cfg, RetryPolicy retry, ResponseCache* cache)
    : cfg_(std::move(cfg)), retry_(retry), cache_(cache) {
    if (cfg_.endpoint.empty()) throw ConfigError("embedding provider endpoint is empty");
    if (cfg_.dimension < 2) throw ConfigError("embedding dimension must be at least 2");
}

std::vector<double> HttpEmbedder::embed(std::string_view text) {
    if (text.empty()) throw ValidationError("embed: empty text");
    std::string input(text);
    if (cfg_.truncate_tokens > 0) {
        auto toks = whitespace_tokens(input);
        if (static_cast<int>(toks.size()) > cfg_.truncate_tokens) {
            std::string truncated;
            for (int i = 0; i < cfg_.truncate_tokens; ++i) {
                if (i > 0) truncated += ' ';
                truncated += toks[static_cast<std::size_t>(i)];
            }
            input = std::move(truncated);
        }
    }
    if (cache_) {
        auto hit = cache_->get("emb", input, cfg_.model, 0.0);
        if (hit) {
            json j = json::parse(*hit, nullptr, false);
            if (!j.is_discarded() && j.is_array()) {
                auto v = j.get<std::vector<double>>();
                if (static_cast<int>(v.size()) == cfg_.dimension) return v;
            }
        }
    }
    json body{{"model", cfg_.model}, {"input", input}};
    std::string response =
        post_with_retry(cfg_.endpoint, "/v1/embeddings", body.dump(), cfg_.api_key, retry_);
    json j = parse_provider_json(response, "embedding");
    if (!j.contains("data") || j["data"].empty() || !j["data"][0].contains("embedding")) {
        throw ProviderError("embedding: no data in response");
    }
    auto v = j["data"][0]["embedding"].get<std::vector<double>>();
    if (static_cast<int>(v.size()) != cfg_.dimension) {
        throw ProviderError("embedding dimension mismatch: provider returned " +
                            std::to_string(v.size()) + ", configured " +
                            std::to_string(cfg_.dimension));
    }
    if (cache_) cache_->put("emb", input, cfg_.model, 0.0, json(v).dump());
    return v;
}

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& cfg, RetryPolicy retry,
                                        ResponseCache* cache) {
    if (cfg.kind == EmbedderConfig::Kind::offline_hash) {
        return std::make_unique<OfflineHashEmbedder>(cfg.dimension, cfg.truncate_tokens);
    }
    return std::make_unique<HttpEmbedder>(cfg, retry, cache);
}

std::vector<EntitySpan> extract_entities_remote(std::string_view text,
                                                const std::string& endpoint,
                                                const NegationTable& negation,
                                                RetryPolicy retry) {
    json body{{"text", std::string(text)}};
    std::string response = post_with_retry(endpoint, "/extract", body.dump(), "", retry);
    json j = parse_provider_json(response, "ner endpoint");
    if (!j.is_array()) throw ProviderError("ner endpoint: expected a JSON array");

    std::vector<EntitySpan> spans;
    for (const auto& item : j) {
        EntitySpan span;
        span.begin = item.value("start", std::size_t{0});
        span.end = item.value("end", std::size_t{0});
        auto cat = category_from_name(item.value("category", std::string()));
        if (!cat) throw ProviderError("ner endpoint: unknown category in response");
        span.category = *cat;
        if (span.end > text.size() || span.begin >= span.end) {
            throw ProviderError("ner endpoint: span out of bounds");
        }
        span.surface = std::string(text.substr(span.begin, span.end - span.begin));
        spans.push_back(std::move(span));
    }
    std::sort(spans.begin(), spans.end(),
              [](const EntitySpan& a, const EntitySpan& b) { return a.begin < b.begin; });
    for (std::size_t i = 0; i + 1 < spans.size(); ++i) {
        if (spans[i + 1].begin < spans[i].end) {
            throw ProviderError("ner endpoint: overlapping spans");
        }
    }
    detect_polarity(text, spans, negation);
    // attach numeric values to measurement spans so the numeric operator works
    for (auto& span : spans) {
        if (span.category == EntityCategory::measurement) {
            for (const auto& lex : parse_numbers(span.surface)) {
                span.numeric_values.push_back(NumericValue{lex.value, lex.unit});
            }
        }
    }
    return spans;
}

} // namespace lfa
