#include <doctest.h>

#include <map>
#include <set>

#include "gen.hpp"
#include "mock_transport.hpp"
#include "plm/error.hpp"
#include "plm/mcqbuild.hpp"
#include "plm/metrics.hpp"

using namespace plm::mcqbuild;

namespace {

MCQItem item(const std::string& id, int n_options, int answer, std::string type = "t", std::string domain = "d")
{
    MCQItem m;
    m.qa_id = id;
    m.video_ref = "vid_" + id;
    m.question = "question " + id + "?";
    for (int i = 0; i < n_options; ++i)
        m.options.push_back(id + " option " + std::to_string(i));
    m.answer_index = answer;
    m.question_type = std::move(type);
    m.domain = std::move(domain);
    return m;
}

MCQItem random_item(gen::Rng& r, int i)
{
    const int n = static_cast<int>(r.integer(2, 6));
    return item("q" + std::to_string(i), n, static_cast<int>(r.integer(0, n - 1)));
}

} // namespace

TEST_CASE("item validation")
{
    CHECK_NOTHROW(item("a", 2, 1).validate());
    CHECK_THROWS_AS(item("a", 1, 0).validate(), plm::InvalidInput);
    CHECK_THROWS_AS(item("a", 3, 3).validate(), plm::InvalidInput);
    CHECK_THROWS_AS(item("a", 3, -1).validate(), plm::InvalidInput);
    auto dup = item("a", 3, 0);
    dup.options[2] = dup.options[1];
    CHECK_THROWS_AS(dup.validate(), plm::InvalidInput);
}

TEST_CASE("expand_binary: counts, pairing and determinism")
{
    CHECK(expand_binary(item("a", 2, 0), 1).size() == 1);
    const auto it = item("b", 4, 2);
    const auto probes = expand_binary(it, 9);
    REQUIRE(probes.size() == 3);
    CHECK(probes == expand_binary(it, 9));
    const std::vector<std::string> distractors{it.options[0], it.options[1], it.options[3]};
    for (std::size_t k = 0; k < probes.size(); ++k) {
        const auto& p = probes[k];
        CHECK(p.probe_index == static_cast<int>(k));
        CHECK(p.probe_id() == "b#" + std::to_string(k));
        CHECK(p.question == it.question);
        CHECK(p.video_ref == it.video_ref);
        const auto& correct = p.correct_is == Side::A ? p.option_a : p.option_b;
        const auto& other = p.correct_is == Side::A ? p.option_b : p.option_a;
        CHECK(correct == it.options[2]);
        CHECK(other == distractors[k]);
    }
}

TEST_CASE("expand_binary: coin is roughly balanced and seed dependent")
{
    gen::Rng r(3);
    int a = 0, total = 0, differ = 0;
    for (int i = 0; i < 2000; ++i) {
        const auto it = random_item(r, i);
        const auto p1 = expand_binary(it, 1);
        const auto p2 = expand_binary(it, 2);
        for (std::size_t k = 0; k < p1.size(); ++k) {
            a += p1[k].correct_is == Side::A;
            differ += p1[k].correct_is != p2[k].correct_is;
            ++total;
        }
    }
    const double frac = static_cast<double>(a) / total;
    CHECK(frac > 0.45);
    CHECK(frac < 0.55);
    CHECK(differ > total / 3);
}

TEST_CASE("expand_binary composed with mbacc")
{
    gen::Rng r(17);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<plm::metrics::BinaryProbeResult> perfect, one_wrong;
        const int n = static_cast<int>(r.integer(1, 20));
        for (int i = 0; i < n; ++i) {
            const auto probes = expand_binary(random_item(r, i), static_cast<std::uint64_t>(trial));
            const auto bad = static_cast<std::size_t>(r.integer(0, static_cast<std::int64_t>(probes.size()) - 1));
            for (std::size_t k = 0; k < probes.size(); ++k) {
                perfect.push_back({probes[k].qa_id, probes[k].probe_index, true});
                one_wrong.push_back({probes[k].qa_id, probes[k].probe_index, k != bad});
            }
        }
        CHECK(plm::metrics::mbacc(perfect) == 100.0);
        CHECK(plm::metrics::mbacc(one_wrong) == 0.0);
    }
}

TEST_CASE("blind filter: correct dropped, wrong kept, unparseable and failures flagged")
{
    // The mock answers by looking up the question in the prompt.
    std::map<std::string, std::string> answers{
        {"question right?", "(B) right option 1"},
        {"question wrong?", "A"},
        {"question garbled?", "I cannot see the video."},
    };
    auto t = std::make_shared<ScriptedTransport>([&](const nlohmann::json& body) {
        const auto text = user_text(body);
        for (const auto& [q, a] : answers)
            if (text.find(q) != std::string::npos)
                return a;
        throw plm::TransportError("no script for prompt");
    });
    plm::judge::ChatClient client(test_endpoint(), t);
    const std::vector<MCQItem> items{item("right", 3, 1), item("wrong", 3, 2), item("garbled", 3, 0),
                                     item("offline", 3, 0)};
    const auto res = blind_filter(items, client);
    REQUIRE(res.records.size() == 4);
    CHECK(res.records[0].status == BlindStatus::dropped);
    CHECK(res.records[0].blind_answer == 1);
    CHECK(res.records[1].status == BlindStatus::kept);
    CHECK(res.records[1].blind_answer == 0);
    CHECK(res.records[2].status == BlindStatus::unparseable);
    CHECK(!res.records[2].blind_answer);
    CHECK(res.records[3].status == BlindStatus::unfiltered);
    CHECK(!res.records[3].error.empty());
    REQUIRE(res.dropped.size() == 1);
    CHECK(res.dropped[0].qa_id == "right");
    REQUIRE(res.kept.size() == 3);
    CHECK(res.kept[0].qa_id == "wrong");
    CHECK(res.kept[2].qa_id == "offline");

    const auto req = blind_request(items[0]);
    REQUIRE(req.messages.size() == 1);
    CHECK(req.messages[0].content.find("(A) right option 0") != std::string::npos);
    CHECK(req.messages[0].content.find("video") == std::string::npos);
}

TEST_CASE("balance: documented examples")
{
    std::vector<MCQItem> items;
    int id = 0;
    auto add = [&](int n, const std::string& type, const std::string& dom) {
        for (int i = 0; i < n; ++i)
            items.push_back(item("i" + std::to_string(id++), 2, 0, type, dom));
    };
    add(10, "what", "cooking");
    add(10, "how", "cooking");
    add(100, "what", "repair");
    auto out = balance(items, 42);
    std::map<std::string, int> counts;
    for (const auto& m : out)
        ++counts[m.question_type + "/" + m.domain];
    CHECK(counts["what/cooking"] == 10);
    CHECK(counts["how/cooking"] == 10);
    CHECK(counts["what/repair"] == 15);
    CHECK(out == balance(items, 42));
    CHECK(out != balance(items, 43));
    for (std::size_t i = 1; i < out.size(); ++i)
        CHECK(std::stoi(out[i - 1].qa_id.substr(1)) < std::stoi(out[i].qa_id.substr(1)));

    std::vector<MCQItem> uniform(items.begin(), items.begin() + 20);
    CHECK(balance(uniform, 1) == uniform);

    items[5].domain.clear();
    items[7].question_type.clear();
    try {
        balance(items, 1);
        FAIL("expected an error");
    } catch (const plm::InvalidInput& e) {
        const std::string msg = e.what();
        CHECK(msg.find("i5") != std::string::npos);
        CHECK(msg.find("i7") != std::string::npos);
    }
}

TEST_CASE("balance: never grows or empties a cell")
{
    gen::Rng r(8);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<MCQItem> items;
        const int n = static_cast<int>(r.integer(1, 200));
        for (int i = 0; i < n; ++i)
            items.push_back(item("i" + std::to_string(i), 2, 0, "t" + std::to_string(r.integer(0, 3)),
                                 "d" + std::to_string(r.integer(0, 2))));
        const double slack = r.real(1.0, 3.0);
        const auto out = balance(items, static_cast<std::uint64_t>(trial), slack);
        std::map<std::string, int> before, after;
        for (const auto& m : items)
            ++before[m.question_type + m.domain];
        for (const auto& m : out)
            ++after[m.question_type + m.domain];
        int smallest = n;
        for (const auto& [k, v] : before)
            smallest = std::min(smallest, v);
        for (const auto& [k, v] : before) {
            CHECK(after[k] >= 1);
            CHECK(after[k] <= v);
            CHECK(after[k] == std::min(v, static_cast<int>(std::ceil(smallest * slack - 1e-9))));
        }
    }
}
