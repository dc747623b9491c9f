#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "gen.hpp"
#include "mock_transport.hpp"
#include "plm/error.hpp"
#include "plm/judge.hpp"

using namespace plm::judge;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name)
{
    auto p = fs::temp_directory_path() / ("plm_judge_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("fallback similarity: documented cases")
{
    CHECK(fallback_lexical_similarity("A red car.", "a red car") == 1.0);
    CHECK(fallback_lexical_similarity("dog", "cat") == 0.0);
    CHECK(fallback_lexical_similarity("a red car", "red car") == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(fallback_lexical_similarity("", "") == 1.0);
    CHECK(fallback_lexical_similarity("...", "") == 1.0);
    CHECK(fallback_lexical_similarity("x", "") == 0.0);
}

TEST_CASE("fallback similarity: symmetric, bounded, 1 iff equal multisets")
{
    gen::Rng r(31);
    const std::vector<std::string> words{"a", "the", "Red", "red", "car", "car.", "dog", "runs", "!"};
    auto sentence = [&] {
        std::string s;
        const int n = static_cast<int>(r.integer(0, 6));
        for (int i = 0; i < n; ++i)
            s += words[static_cast<std::size_t>(r.integer(0, static_cast<std::int64_t>(words.size()) - 1))] + " ";
        return s;
    };
    for (int trial = 0; trial < 3000; ++trial) {
        const auto a = sentence(), b = sentence();
        const double x = fallback_lexical_similarity(a, b);
        CHECK(x == fallback_lexical_similarity(b, a));
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
        // multiset equality of normalised tokens
        auto norm = [](const std::string& s) {
            std::vector<std::string> out;
            std::string cur;
            for (char c : s + " ") {
                if (c == ' ') {
                    if (!cur.empty())
                        out.push_back(cur);
                    cur.clear();
                } else if (!std::ispunct(static_cast<unsigned char>(c))) {
                    cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
                }
            }
            std::sort(out.begin(), out.end());
            return out;
        };
        CHECK((x == 1.0) == (norm(a) == norm(b)));
    }
}

TEST_CASE("qa verdict parsing")
{
    auto v = parse_qa_verdict(R"({"pred": "yes", "score": 4.8})");
    CHECK(v.pred == plm::metrics::Verdict::yes);
    CHECK(v.score == 4.8);
    CHECK(!v.parse_failure);
    v = parse_qa_verdict(R"({"pred": "no", "score": 0})");
    CHECK(v.pred == plm::metrics::Verdict::no);
    CHECK(v.score == 0);
    v = parse_qa_verdict(R"(Sure! {"pred":"yes","score":7})");
    CHECK(v.pred == plm::metrics::Verdict::yes);
    CHECK(v.score == 5.0);
    v = parse_qa_verdict("{'pred': 'yes', 'score': 3}");
    CHECK(v.score == 3.0);
    CHECK(!v.parse_failure);
    v = parse_qa_verdict("{not json} then {\"pred\": \"no\", \"score\": -2}");
    CHECK(v.pred == plm::metrics::Verdict::no);
    CHECK(v.score == 0.0);
    CHECK(!v.parse_failure);
    v = parse_qa_verdict("I refuse");
    CHECK(v.parse_failure);
    CHECK(v.pred == plm::metrics::Verdict::no);
    CHECK(v.score == 0);
    CHECK(v.raw == "I refuse");
    CHECK(parse_qa_verdict(R"({"pred": "maybe", "score": 2})").parse_failure);
}

TEST_CASE("caption score parsing")
{
    CHECK(parse_caption_score("7").score == 7.0);
    CHECK(parse_caption_score("[8]").score == 8.0);
    CHECK(parse_caption_score("score: 11").score == 10.0);
    CHECK(parse_caption_score("6.5 out of 10").score == 6.5);
    const auto f = parse_caption_score("no idea");
    CHECK(f.parse_failure);
    CHECK(f.score == 0);
}

TEST_CASE("endpoint config validation")
{
    auto c = test_endpoint();
    CHECK_NOTHROW(c.validate());
    c.max_in_flight = 0;
    CHECK_THROWS_AS(c.validate(), plm::ConfigError);
    c = test_endpoint();
    c.temperature = 0.7;
    CHECK_THROWS_AS(c.validate(), plm::ConfigError);
    c = test_endpoint();
    c.base_url.clear();
    CHECK_THROWS_AS(c.validate(), plm::ConfigError);
}

TEST_CASE("judge requests carry the filled templates at temperature 0")
{
    auto t = std::make_shared<ScriptedTransport>([](const nlohmann::json&) { return R"({"pred": "yes", "score": 4})"; });
    auto client = std::make_shared<ChatClient>(test_endpoint(), t);
    Judge j(client);
    const auto v = j.judge_qa("What did I cut?", "an onion", "onion");
    CHECK(v.pred == plm::metrics::Verdict::yes);
    CHECK(t->last_request["temperature"] == 0.0);
    CHECK(t->last_request["model"] == "mock-judge");
    CHECK(t->last_request["max_tokens"] == 256);
    const auto text = user_text(t->last_request);
    CHECK(text.find("Question: What did I cut?\nCorrect Answer: an onion\nPredicted Answer: onion\n") != std::string::npos);

    auto t2 = std::make_shared<ScriptedTransport>([](const nlohmann::json&) { return "8"; });
    Judge j2(std::make_shared<ChatClient>(test_endpoint(), t2));
    CHECK(j2.judge_caption_pair("a man walks", "a person walks").score == 8.0);
    REQUIRE(t2->last_request["messages"].size() == 2);
    CHECK(t2->last_request["messages"][0]["role"] == "system");
    CHECK(user_text(t2->last_request) == "GT: a man walks\nPred: a person walks");
    CHECK_THROWS_AS(j2.judge_caption_pair("", "x"), plm::InvalidInput);
}

TEST_CASE("client retries transport failures then gives up")
{
    auto flaky = std::make_shared<ScriptedTransport>([](const nlohmann::json&) { return "5"; }, 2);
    ChatClient c(test_endpoint(), flaky);
    ChatRequest r{"t", {{"user", "hi"}}, {}};
    CHECK(c.ask(r) == "5");
    CHECK(flaky->calls == 3);
    CHECK(c.stats().requests_sent == 3);

    auto dead = std::make_shared<ScriptedTransport>([](const nlohmann::json&) { return "5"; }, 100);
    ChatClient d(test_endpoint(), dead);
    CHECK_THROWS_AS(d.ask(r), plm::TransportError);
    CHECK(dead->calls == 3);
    CHECK(d.stats().failures == 1);

    Judge j(std::make_shared<ChatClient>(test_endpoint(), dead));
    CHECK_THROWS_AS(j.judge_qa("q", "a", "b"), plm::TransportError);
}

TEST_CASE("parse failures are recorded, not retried")
{
    auto t = std::make_shared<ScriptedTransport>([](const nlohmann::json&) { return "I won't"; });
    Judge j(std::make_shared<ChatClient>(test_endpoint(), t));
    const auto v = j.judge_qa("q", "a", "b");
    CHECK(v.parse_failure);
    CHECK(t->calls == 1);
}

TEST_CASE("cache persists across clients and skips the network")
{
    const auto dir = temp_dir("cache");
    const auto path = (dir / "judge_cache.jsonl").string();
    ChatRequest r{"t", {{"user", "hello"}}, {}};
    {
        auto t = std::make_shared<ScriptedTransport>([](const nlohmann::json&) { return "first"; });
        ChatClient c(test_endpoint(), t, std::make_shared<ResponseCache>(path));
        CHECK(c.ask(r) == "first");
        CHECK(c.ask(r) == "first");
        CHECK(t->calls == 1);
        CHECK(c.stats().cache_hits == 1);
    }
    {
        auto t = std::make_shared<ScriptedTransport>([](const nlohmann::json&) { return "second"; });
        ChatClient c(test_endpoint(), t, std::make_shared<ResponseCache>(path));
        CHECK(c.ask(r) == "first");
        CHECK(t->calls == 0);
    }
    // a torn trailing line is ignored
    {
        std::ofstream(path, std::ios::app) << "{\"key\": \"abc";
        ResponseCache reloaded(path);
        CHECK(reloaded.size() == 1);
    }
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("key"));
    CHECK(j["raw_response"] == "first");
}

TEST_CASE("cache keys depend on model, template and content")
{
    auto t = std::make_shared<ScriptedTransport>([](const nlohmann::json&) { return ""; });
    ChatClient a(test_endpoint(), t);
    auto other = test_endpoint();
    other.model_name = "other";
    ChatClient b(other, t);
    ChatRequest r{"t", {{"user", "x"}}, {}};
    ChatRequest r2{"u", {{"user", "x"}}, {}};
    ChatRequest r3{"t", {{"user", "y"}}, {}};
    CHECK(a.cache_key(r) == a.cache_key(r));
    CHECK(a.cache_key(r) != b.cache_key(r));
    CHECK(a.cache_key(r) != a.cache_key(r2));
    CHECK(a.cache_key(r) != a.cache_key(r3));
}

TEST_CASE("pairwise similarity: shape, fallback and dedup")
{
    Judge fb;
    CHECK(fb.is_fallback());
    const auto m = fb.pairwise_similarity({"a red car"}, {"a red car"});
    CHECK(m.p == 1);
    CHECK(m.g == 1);
    CHECK(m.at(0, 0) == 1.0);
    const auto m23 = fb.pairwise_similarity({"x", "y"}, {"x", "y", "z"});
    CHECK(m23.p == 2);
    CHECK(m23.g == 3);
    CHECK(m23.at(1, 1) == 1.0);
    CHECK(m23.at(1, 2) == 0.0);
    CHECK_THROWS_AS(fb.pairwise_similarity({}, {"x"}), plm::InvalidInput);

    auto t = std::make_shared<ScriptedTransport>([](const nlohmann::json&) { return "6"; });
    auto client = std::make_shared<ChatClient>(test_endpoint(), t);
    Judge j(client);
    const auto s = j.pairwise_similarity({"same", "same"}, {"gt"});
    CHECK(s.at(0, 0) == 0.6);
    CHECK(s.at(1, 0) == 0.6);
    CHECK(t->calls == 1);
    CHECK(client->stats().cache_hits == 1);
}

TEST_CASE("bounded concurrency under load")
{
    auto t = std::make_shared<ScriptedTransport>(
        [](const nlohmann::json& b) { return user_text(b); }, 0, 2);
    auto cfg = test_endpoint(3);
    ChatClient c(cfg, t);
    std::atomic<int> observed_max{0};
    c.set_in_flight_hook([&](int n) {
        int prev = observed_max.load();
        while (n > prev && !observed_max.compare_exchange_weak(prev, n)) {
        }
    });
    std::vector<ChatRequest> reqs;
    for (int i = 0; i < 60; ++i)
        reqs.push_back({"t", {{"user", "req " + std::to_string(i)}}, {}});
    const auto out = c.ask_many(reqs);
    for (int i = 0; i < 60; ++i) {
        CHECK(out[static_cast<std::size_t>(i)].ok);
        CHECK(out[static_cast<std::size_t>(i)].raw == "req " + std::to_string(i));
    }
    CHECK(observed_max.load() <= 3);
    CHECK(observed_max.load() >= 2);
    CHECK(c.stats().peak_in_flight <= 3);
}
