#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include <gtest/gtest.h>

#include "abca/cache.hpp"
#include "abca/error.hpp"
#include "abca/mock_backend.hpp"
#include "support.hpp"

using namespace abca;
using nlohmann::json;

namespace {

CompletionRequest request(std::string prompt, bool logprobs = false, int sample_index = 0) {
    CompletionRequest r;
    r.model_id = "mock";
    r.messages = {{Role::user, std::move(prompt)}};
    r.temperature = 0.7;
    r.want_logprobs = logprobs;
    r.sample_index = sample_index;
    return r;
}

MockScript sport_script() {
    return MockScript::from_json({{"rules",
                                   {test::rule("popular sport", R"({"answer": "Baseball"})", 0.5),
                                    test::rule("sport", "second rule"),
                                    {{"match", "^Pick #\\d+$"}, {"regex", true}, {"response", "regex hit"}},
                                    {{"match", "draw"}, {"sample_index", 1}, {"response", "draw one"}},
                                    test::rule("draw", "draw any")}}});
}

}  // namespace

TEST(Sha256, KnownVectors) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(CacheKey, CanonicalForm) {
    auto r = request("What is the most popular sport in Japan in 2001?", true, 3);
    r.model_id = "gpt-4.1";
    EXPECT_EQ(canonical_request(r),
              R"({"max_tokens":1024,"messages":[{"content":"What is the most popular sport in Japan in 2001?","role":"user"}],)"
              R"("model_id":"gpt-4.1","sample_index":3,"temperature":0.7,"want_logprobs":true})");
    EXPECT_EQ(cache_key(r), "059452093aae26de516455c0b340da5220d01e27a15e45b706e405259f86b91d");
}

TEST(CacheKey, SensitiveToEveryField) {
    const auto base = request("hello");
    const auto key = cache_key(base);
    EXPECT_EQ(cache_key(request("hello")), key);
    auto t = base;
    t.temperature = 0.8;
    EXPECT_NE(cache_key(t), key);
    auto m = base;
    m.model_id = "other";
    EXPECT_NE(cache_key(m), key);
    auto s = base;
    s.sample_index = 1;
    EXPECT_NE(cache_key(s), key);
    auto l = base;
    l.want_logprobs = true;
    EXPECT_NE(cache_key(l), key);
    auto role = base;
    role.messages[0].role = Role::system;
    EXPECT_NE(cache_key(role), key);
}

TEST(Completion, JsonRoundTrip) {
    Completion c{"text", std::vector<TokenScore>{{"a", -0.5}, {"b", -1.25}}, {3, 2}, Provenance::live};
    const auto back = completion_from_json(to_json(c));
    EXPECT_EQ(back.text, c.text);
    ASSERT_TRUE(back.tokens);
    EXPECT_EQ(back.tokens->size(), 2u);
    EXPECT_EQ((*back.tokens)[1].token, "b");
    EXPECT_DOUBLE_EQ((*back.tokens)[1].logprob, -1.25);
    EXPECT_EQ(back.usage.prompt_tokens, 3);
    EXPECT_FALSE(completion_from_json(to_json(Completion{"x", std::nullopt, {}, Provenance::mock})).tokens);
}

TEST(Request, Validation) {
    CompletionRequest r;
    EXPECT_THROW(r.validate(), Error);
    r.messages = {{Role::assistant, "x"}};
    EXPECT_THROW(r.validate(), Error);
    r.messages = {{Role::system, "x"}};
    EXPECT_NO_THROW(r.validate());
}

TEST(Mock, FirstMatchingRuleWins) {
    MockBackend mock(sport_script());
    const auto c = mock.complete(request("What is the most popular sport in Japan?"));
    EXPECT_EQ(c.text, R"({"answer": "Baseball"})");
    EXPECT_EQ(c.provenance, Provenance::mock);
    EXPECT_EQ(mock.complete(request("Any sport?")).text, "second rule");
    EXPECT_EQ(mock.complete(request("Pick #12")).text, "regex hit");
}

TEST(Mock, SampleIndexFilter) {
    MockBackend mock(sport_script());
    EXPECT_EQ(mock.complete(request("draw", false, 0)).text, "draw any");
    EXPECT_EQ(mock.complete(request("draw", false, 1)).text, "draw one");
}

TEST(Mock, NoRule) {
    MockBackend mock(sport_script());
    try {
        mock.complete(request("unrelated"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ProviderError);
        EXPECT_NE(std::string(e.what()).find("no-rule"), std::string::npos);
    }
}

TEST(Mock, DefaultResponse) {
    MockBackend mock(MockScript::from_json({{"default_response", "fallback"}}));
    EXPECT_EQ(mock.complete(request("anything")).text, "fallback");
}

TEST(Mock, UniformTokenLogprobs) {
    MockBackend mock(sport_script());
    const auto c = mock.complete(request("popular sport", true));
    ASSERT_TRUE(c.tokens);
    std::string joined;
    for (const auto& t : *c.tokens) {
        joined += t.token;
        EXPECT_DOUBLE_EQ(t.logprob, std::log(0.5));
    }
    EXPECT_EQ(joined, c.text);
}

TEST(Mock, ExplicitTokens) {
    MockBackend mock(MockScript::from_json(
        {{"rules", {{{"match", "q"}, {"response", "Yes"}, {"tokens", {{{"token", "Yes"}, {"logprob", -0.1}}}}}}}}));
    const auto c = mock.complete(request("q", true));
    ASSERT_TRUE(c.tokens);
    ASSERT_EQ(c.tokens->size(), 1u);
    EXPECT_DOUBLE_EQ(c.tokens->front().logprob, -0.1);
}

TEST(Mock, MissingLogprobsCarriesPartial) {
    MockBackend mock(sport_script());
    try {
        mock.complete(request("Any sport?", true));
        FAIL();
    } catch (const MissingLogprobsError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MissingLogprobs);
        EXPECT_EQ(e.partial().text, "second rule");
    }
}

TEST(Mock, Tokenizer) {
    EXPECT_EQ(mock_tokenize(R"({"a": "Hi there"})"),
              (std::vector<std::string>{"{", "\"", "a", "\"", ":", " ", "\"", "Hi", " ", "there", "\"", "}"}));
}

TEST(Mock, BadScripts) {
    EXPECT_THROW(MockScript::from_json({{"rules", {{{"match", "x"}}}}}), Error);
    EXPECT_THROW(MockScript::from_json({{"rules", {{{"match", "("}, {"regex", true}, {"response", ""}}}}}), Error);
    EXPECT_THROW(MockScript::from_json({{"rules", {test::rule("x", "y", 0.0)}}}), Error);
    EXPECT_THROW(MockScript::load("/nonexistent/script.json"), Error);
}

TEST(Cache, SecondCallIsServedFromCache) {
    test::TempDir dir("cache");
    auto mock = std::make_shared<MockBackend>(sport_script());
    CachedBackend cached(mock, dir.path());
    const auto first = cached.complete(request("popular sport"));
    const auto second = cached.complete(request("popular sport"));
    EXPECT_EQ(first.provenance, Provenance::mock);
    EXPECT_EQ(second.provenance, Provenance::cache);
    EXPECT_EQ(first.text, second.text);
    EXPECT_EQ(cached.live_calls(), 1u);
    EXPECT_EQ(mock->calls(), 1u);
    EXPECT_TRUE(std::filesystem::exists(dir.path() / (cache_key(request("popular sport")) + ".json")));
}

TEST(Cache, PersistsAcrossInstances) {
    test::TempDir dir("cache");
    {
        CachedBackend cached(std::make_shared<MockBackend>(sport_script()), dir.path());
        cached.complete(request("popular sport", true));
    }
    auto mock = std::make_shared<MockBackend>(sport_script());
    CachedBackend cached(mock, dir.path());
    const auto c = cached.complete(request("popular sport", true));
    EXPECT_EQ(mock->calls(), 0u);
    ASSERT_TRUE(c.tokens);
    EXPECT_EQ(c.provenance, Provenance::cache);
}

TEST(Cache, EntryLayout) {
    test::TempDir dir("cache");
    CachedBackend cached(std::make_shared<MockBackend>(sport_script()), dir.path());
    const auto req = request("popular sport");
    cached.complete(req);
    std::ifstream in(dir.path() / (cache_key(req) + ".json"));
    const auto j = json::parse(in);
    EXPECT_EQ(j.at("key"), cache_key(req));
    EXPECT_EQ(j.at("request").dump(), canonical_request(req));
    EXPECT_EQ(j.at("completion").at("text"), R"({"answer": "Baseball"})");
    EXPECT_TRUE(j.at("created_at").is_string());
}

TEST(Cache, TornEntryIsAMiss) {
    test::TempDir dir("cache");
    const auto req = request("popular sport");
    std::ofstream(dir.path() / (cache_key(req) + ".json")) << "{\"key\": ";
    auto mock = std::make_shared<MockBackend>(sport_script());
    CachedBackend cached(mock, dir.path());
    EXPECT_EQ(cached.complete(req).provenance, Provenance::mock);
    EXPECT_EQ(cached.complete(req).provenance, Provenance::cache);
}

TEST(Cache, Bypass) {
    test::TempDir dir("cache");
    auto mock = std::make_shared<MockBackend>(sport_script());
    CachedBackend cached(mock, dir.path(), true);
    cached.complete(request("popular sport"));
    cached.complete(request("popular sport"));
    EXPECT_EQ(mock->calls(), 2u);
    EXPECT_TRUE(std::filesystem::is_empty(dir.path()));
}

TEST(Cache, MissingLogprobsReplaysFromCache) {
    test::TempDir dir("cache");
    auto mock = std::make_shared<MockBackend>(sport_script());
    CachedBackend cached(mock, dir.path());
    EXPECT_THROW(cached.complete(request("Any sport?", true)), MissingLogprobsError);
    try {
        cached.complete(request("Any sport?", true));
        FAIL();
    } catch (const MissingLogprobsError& e) {
        EXPECT_EQ(e.partial().text, "second rule");
    }
    EXPECT_EQ(mock->calls(), 1u);
}

TEST(Cache, ErrorsAreNotCached) {
    test::TempDir dir("cache");
    auto mock = std::make_shared<MockBackend>(sport_script());
    CachedBackend cached(mock, dir.path());
    EXPECT_THROW(cached.complete(request("unrelated")), Error);
    EXPECT_THROW(cached.complete(request("unrelated")), Error);
    EXPECT_EQ(mock->calls(), 2u);
}

TEST(Cache, SingleFlight) {
    test::TempDir dir("cache");
    std::atomic<int> inner_calls{0};
    auto slow = std::make_shared<test::FunctionBackend>([&](const CompletionRequest&) {
        ++inner_calls;
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        return Completion{"slow", std::nullopt, {}, Provenance::live};
    });
    CachedBackend cached(slow, dir.path());
    std::vector<std::string> texts(8);
    {
        std::vector<std::jthread> threads;
        for (int i = 0; i < 8; ++i)
            threads.emplace_back([&, i] { texts[static_cast<std::size_t>(i)] = cached.complete(request("same")).text; });
    }
    EXPECT_EQ(inner_calls.load(), 1);
    for (const auto& t : texts) EXPECT_EQ(t, "slow");
}

TEST(Cache, TransparentUnderMock) {
    test::TempDir dir("cache");
    MockBackend plain(sport_script());
    CachedBackend cached(std::make_shared<MockBackend>(sport_script()), dir.path());
    for (const auto* p : {"popular sport", "Any sport?", "Pick #3", "draw"}) {
        const auto a = plain.complete(request(p));
        EXPECT_EQ(cached.complete(request(p)).text, a.text);
        EXPECT_EQ(cached.complete(request(p)).text, a.text);
    }
}
