#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "lfa/agent.hpp"
#include "lfa/errors.hpp"

using namespace lfa;
using nlohmann::json;

namespace {

const std::filesystem::path kPromptsDir = std::filesystem::path(LFA_DATA_DIR) / "prompts";

DialogueRecord sample_dialogue() {
    DialogueRecord d;
    d.age = 44;
    d.sex = "F";
    QaItem initial;
    initial.question = "Do you have pain somewhere, related to your reason for consulting?";
    initial.answer = true;
    initial.is_antecedent = false;
    d.initial_evidence.push_back(initial);
    d.qa_items.push_back(initial);
    QaItem pain;
    pain.question = "Characterize your pain:";
    pain.answer = std::string("sickening");
    pain.is_antecedent = false;
    d.qa_items.push_back(pain);
    QaItem where;
    where.question = "Do you feel pain somewhere?";
    where.answer = std::string("upper chest");
    where.is_antecedent = false;
    d.qa_items.push_back(where);
    return d;
}

// in-process OpenAI-style endpoint for client tests
class MockServer {
public:
    template <typename Handler>
    MockServer(const std::string& path, Handler&& handler) {
        server_.Post(path, std::forward<Handler>(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~MockServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

std::string chat_body(const std::string& content) {
    return json{{"choices", json::array({json{{"message", json{{"content", content}}}}})}}.dump();
}

ChatConfig default_chat() {
    ChatConfig cfg;
    cfg.model = "test-model";
    return cfg;
}

} // namespace

TEST_CASE("note prompt renders the dialogue blocks from the template") {
    PromptLibrary prompts = PromptLibrary::load(kPromptsDir);
    std::string rendered = render_note_prompt(sample_dialogue(), prompts);
    CHECK(rendered.find("Age: 44") != std::string::npos);
    CHECK(rendered.find("Sex: F") != std::string::npos);
    CHECK(rendered.find("the patient replied 'True', which is categorized as a symptom.") !=
          std::string::npos);
    CHECK(rendered.find("the patient provided 'upper chest', indicating a symptom.") !=
          std::string::npos);
    CHECK(rendered.find("generate a comprehensive clinical report") != std::string::npos);
    CHECK(rendered.find("{{") == std::string::npos); // every placeholder resolved
}

TEST_CASE("prompt rendering is a pure function, pinned byte-exactly") {
    PromptLibrary prompts = PromptLibrary::load(kPromptsDir);
    std::string expected =
        "You are a diagnostic reasoning assistant. Read the following clinical note and generate "
        "a step-by-step reasoning process that extracts key observations and logical deductions "
        "leading to a diagnosis.\n\nClinical Note:\nNOTE BODY\n\nProvide the list of observations "
        "and deductions. Be concise.";
    CHECK(prompts.forward_reasoning.render({{"note", "NOTE BODY"}}) == expected);
    CHECK(prompts.forward_reasoning.render({{"note", "NOTE BODY"}}) == expected);
}

TEST_CASE("backward prompt carries the diagnosis placeholder") {
    PromptLibrary prompts = PromptLibrary::load(kPromptsDir);
    std::string rendered =
        prompts.backward_reasoning.render({{"note", "some note"}, {"diagnosis", "GERD"}});
    CHECK(rendered.find("Final Diagnosis: GERD") != std::string::npos);
    CHECK(rendered.find("the final diagnosis 'GERD'") != std::string::npos);
}

TEST_CASE("unresolved placeholders are an error") {
    PromptLibrary prompts = PromptLibrary::load(kPromptsDir);
    CHECK_THROWS_WITH_AS(prompts.backward_reasoning.render({{"note", "x"}}),
                         doctest::Contains("diagnosis"), ValidationError);
}

TEST_CASE("generate_note passes the provider completion through verbatim") {
    PromptLibrary prompts = PromptLibrary::load(kPromptsDir);
    CallbackChatClient mock([](const ChatRequest&) { return "THE FIXED NOTE"; });
    CHECK(generate_note(mock, prompts, sample_dialogue(), default_chat()) == "THE FIXED NOTE");
}

TEST_CASE("missing qa_items fails before any provider call") {
    PromptLibrary prompts = PromptLibrary::load(kPromptsDir);
    std::atomic<int> calls{0};
    CallbackChatClient mock([&](const ChatRequest&) {
        ++calls;
        return "x";
    });
    DialogueRecord empty;
    empty.age = 30;
    empty.sex = "M";
    CHECK_THROWS_AS(generate_note(mock, prompts, empty, default_chat()), ValidationError);
    CHECK(calls == 0);
}

TEST_CASE("reasoning chain preconditions and pass-through") {
    PromptLibrary prompts = PromptLibrary::load(kPromptsDir);
    CallbackChatClient mock([](const ChatRequest& r) { return r.messages.back().content; });
    CHECK_THROWS_AS(aggregate_reasoning(mock, prompts, "", "backward", default_chat()),
                    ValidationError);
    CHECK_THROWS_AS(aggregate_reasoning(mock, prompts, "forward", "", default_chat()),
                    ValidationError);
    std::string out = aggregate_reasoning(mock, prompts, "FWD", "BWD", default_chat());
    CHECK(out.find("FWD") != std::string::npos);
    CHECK(out.find("BWD") != std::string::npos);
}

TEST_CASE("diagnosis elicitation normalizes replies") {
    PromptLibrary prompts = PromptLibrary::load(kPromptsDir);
    std::vector<std::string> classes = {"GERD", "Asthma", "COPD"};

    CallbackChatClient exact([](const ChatRequest&) { return "GERD"; });
    CHECK(elicit_diagnosis(exact, prompts, "note", classes, default_chat()) == "GERD");

    CallbackChatClient punctuated([](const ChatRequest&) { return "gerd."; });
    CHECK(elicit_diagnosis(punctuated, prompts, "note", classes, default_chat()) == "GERD");

    std::atomic<int> calls{0};
    CallbackChatClient wrong([&](const ChatRequest&) {
        ++calls;
        return "stomach flu";
    });
    CHECK_THROWS_AS(elicit_diagnosis(wrong, prompts, "note", classes, default_chat()),
                    ProviderError);
    CHECK(calls == 2); // retried exactly once
}

TEST_CASE("offline embedder is deterministic with unit norm") {
    OfflineHashEmbedder embedder(64);
    auto v1 = embedder.embed("patient reports chest pain and fever");
    auto v2 = embedder.embed("patient reports chest pain and fever");
    CHECK(v1 == v2);
    double norm = 0.0;
    for (double x : v1) norm += x * x;
    CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-12);
    CHECK(v1.size() == 64);
}

TEST_CASE("changing one content word moves the offline embedding") {
    OfflineHashEmbedder embedder(256);
    auto a = embedder.embed("patient reports chest pain and fever");
    auto b = embedder.embed("patient reports chest pain and nausea");
    double cos = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) cos += a[i] * b[i];
    CHECK(cos < 1.0 - 1e-6);
    auto masked = embedder.embed("patient reports [MASK] and fever");
    double cos2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) cos2 += a[i] * masked[i];
    CHECK(cos2 < 1.0 - 1e-6);
}

TEST_CASE("offline embedder rejects empty text and tiny dimensions") {
    OfflineHashEmbedder embedder(8);
    CHECK_THROWS_AS(embedder.embed(""), ValidationError);
    CHECK_THROWS_AS(OfflineHashEmbedder(1), ConfigError);
}

TEST_CASE("token-level embedding yields one vector per whitespace token") {
    OfflineHashEmbedder embedder(32);
    auto tokens = embedder.embed_tokens("alpha beta  gamma");
    REQUIRE(tokens.size() == 3);
    CHECK(tokens[0].first == "alpha");
    CHECK(tokens[2].first == "gamma");
    for (const auto& [tok, vec] : tokens) {
        double norm = 0.0;
        for (double x : vec) norm += x * x;
        CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-12);
    }
}

TEST_CASE("http chat client round-trips against a local provider") {
    std::atomic<int> requests{0};
    MockServer server("/v1/chat/completions", [&](const httplib::Request& req,
                                                  httplib::Response& res) {
        ++requests;
        json body = json::parse(req.body);
        CHECK(body["model"] == "test-model");
        CHECK(body["temperature"] == 0.0);
        CHECK(body["max_tokens"] == 512);
        res.set_content(chat_body("pong: " + body["messages"][0]["content"].get<std::string>()),
                        "application/json");
    });
    HttpChatClient client(server.url(), "test-key");
    ChatRequest req;
    req.model = "test-model";
    req.messages.push_back({"user", "ping"});
    CHECK(client.complete(req) == "pong: ping");
    CHECK(requests == 1);
}

TEST_CASE("a cached chat tuple never triggers a second network call") {
    std::atomic<int> requests{0};
    MockServer server("/v1/chat/completions",
                      [&](const httplib::Request&, httplib::Response& res) {
                          ++requests;
                          res.set_content(chat_body("cached answer"), "application/json");
                      });
    auto cache_dir = std::filesystem::temp_directory_path() / "lfa_chat_cache_test";
    std::filesystem::remove_all(cache_dir);
    ResponseCache cache(cache_dir);
    HttpChatClient client(server.url(), "", RetryPolicy{}, &cache);
    ChatRequest req;
    req.model = "m";
    req.messages.push_back({"user", "same prompt"});
    CHECK(client.complete(req) == "cached answer");
    CHECK(client.complete(req) == "cached answer");
    CHECK(requests == 1);

    ChatRequest other = req;
    other.temperature = 0.01; // different tuple -> miss
    CHECK(client.complete(other) == "cached answer");
    CHECK(requests == 2);
}

TEST_CASE("transient provider failures are retried with bounded attempts") {
    std::atomic<int> requests{0};
    MockServer server("/v1/chat/completions",
                      [&](const httplib::Request&, httplib::Response& res) {
                          int n = ++requests;
                          if (n <= 2) {
                              res.status = 503;
                              res.set_content("busy", "text/plain");
                              return;
                          }
                          res.set_content(chat_body("finally"), "application/json");
                      });
    RetryPolicy retry;
    retry.max_retries = 2;
    retry.backoff_ms = 1;
    HttpChatClient client(server.url(), "", retry);
    ChatRequest req;
    req.model = "m";
    req.messages.push_back({"user", "x"});
    CHECK(client.complete(req) == "finally");
    CHECK(requests == 3); // total attempts = max_retries + 1

    requests = 0;
    RetryPolicy one;
    one.max_retries = 1;
    one.backoff_ms = 1;
    HttpChatClient failing(server.url(), "", one);
    CHECK_THROWS_AS(failing.complete(req), ProviderError);
    CHECK(requests == 2);
}

TEST_CASE("http embedder enforces the configured dimension") {
    MockServer server("/v1/embeddings", [&](const httplib::Request&, httplib::Response& res) {
        json data{{"data", json::array({json{{"embedding", std::vector<double>(12, 0.5)}}})}};
        res.set_content(data.dump(), "application/json");
    });
    EmbedderConfig cfg;
    cfg.kind = EmbedderConfig::Kind::http_provider;
    cfg.endpoint = server.url();
    cfg.model = "embed-model";
    cfg.dimension = 12;
    HttpEmbedder ok(cfg);
    CHECK(ok.embed("text").size() == 12);

    cfg.dimension = 768;
    HttpEmbedder mismatched(cfg);
    CHECK_THROWS_WITH_AS(mismatched.embed("text"), doctest::Contains("dimension mismatch"),
                         ProviderError);
}

TEST_CASE("remote entity extraction parses spans and applies local polarity") {
    std::string text = "Patient denies chest pain today.";
    MockServer server("/extract", [&](const httplib::Request& req, httplib::Response& res) {
        json body = json::parse(req.body);
        CHECK(body["text"] == text);
        json spans = json::array();
        spans.push_back(json{{"start", 15}, {"end", 25}, {"category", "symptom"}});
        res.set_content(spans.dump(), "application/json");
    });
    auto spans = extract_entities_remote(text, server.url(), NegationTable::builtin());
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].surface == "chest pain");
    CHECK(spans[0].polarity == Polarity::negated);
}

TEST_CASE("initial evidence renders in the dialogue record style") {
    std::string rendered = render_initial_evidence(sample_dialogue());
    CHECK(rendered ==
          "[{'question': 'Do you have pain somewhere, related to your reason for consulting?', "
          "'is_antecedent': False, 'answer': True}]");
}
