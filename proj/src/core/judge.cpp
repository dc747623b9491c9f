#include "plm/judge.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "plm/error.hpp"
#include "plm/hash.hpp"
#include "plm/templates.hpp"

namespace plm::judge {
namespace {

using nlohmann::json;

std::vector<std::string> normalized_tokens(std::string_view s)
{
    std::vector<std::string> toks;
    std::string cur;
    for (char ch : s) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            if (!cur.empty())
                toks.push_back(std::move(cur));
            cur.clear();
        } else if (!std::ispunct(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    if (!cur.empty())
        toks.push_back(std::move(cur));
    return toks;
}

std::optional<double> as_number(const json& v)
{
    if (v.is_number())
        return v.get<double>();
    if (v.is_string()) {
        const auto& s = v.get_ref<const std::string&>();
        double d = 0;
        const auto r = std::from_chars(s.data(), s.data() + s.size(), d);
        if (r.ec == std::errc() && r.ptr == s.data() + s.size())
            return d;
    }
    return std::nullopt;
}

std::optional<metrics::JudgeVerdict> verdict_from(const json& obj, double max_score)
{
    if (!obj.is_object() || !obj.contains("pred") || !obj.contains("score") || !obj["pred"].is_string())
        return std::nullopt;
    std::string pred = obj["pred"].get<std::string>();
    std::transform(pred.begin(), pred.end(), pred.begin(), [](unsigned char c) { return std::tolower(c); });
    pred.erase(0, pred.find_first_not_of(" \t"));
    pred.erase(pred.find_last_not_of(" \t") + 1);
    if (pred != "yes" && pred != "no")
        return std::nullopt;
    const auto score = as_number(obj["score"]);
    if (!score || !std::isfinite(*score))
        return std::nullopt;
    metrics::JudgeVerdict v;
    v.pred = pred == "yes" ? metrics::Verdict::yes : metrics::Verdict::no;
    v.score = std::clamp(*score, 0.0, max_score);
    return v;
}

std::optional<double> first_number(std::string_view s)
{
    for (std::size_t i = 0; i < s.size(); ++i) {
        const bool digit = std::isdigit(static_cast<unsigned char>(s[i])) != 0;
        const bool sign = s[i] == '-' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])) &&
                          (i == 0 || !std::isalnum(static_cast<unsigned char>(s[i - 1])));
        if (!digit && !sign)
            continue;
        std::size_t j = i + 1;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j])))
            ++j;
        if (j + 1 < s.size() && s[j] == '.' && std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
            ++j;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j])))
                ++j;
        }
        double d = 0;
        const auto r = std::from_chars(s.data() + i, s.data() + j, d);
        if (r.ec == std::errc::result_out_of_range)
            return sign ? -1e300 : 1e300;
        if (r.ec == std::errc())
            return d;
        i = j;
    }
    return std::nullopt;
}

} // namespace

void EndpointConfig::validate() const
{
    if (base_url.empty())
        throw ConfigError("endpoint base_url is empty");
    if (model_name.empty())
        throw ConfigError("endpoint model_name is empty");
    if (max_in_flight < 1 || max_in_flight > 1024)
        throw ConfigError("endpoint max_in_flight must be in [1, 1024]");
    if (max_retries < 0)
        throw ConfigError("endpoint max_retries must be >= 0");
    if (temperature != 0.0)
        throw ConfigError("evaluation protocol requires temperature 0");
    if (!(timeout_s > 0))
        throw ConfigError("endpoint timeout_s must be positive");
    if (max_tokens < 1)
        throw ConfigError("endpoint max_tokens must be >= 1");
}

// ---------------------------------------------------------------------------

ResponseCache::ResponseCache(std::string path) : path_(std::move(path))
{
    std::ifstream in(path_);
    if (!in)
        return; // created on first put
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("key") || !j.contains("raw_response") || !j["key"].is_string() ||
            !j["raw_response"].is_string())
            continue; // torn trailing line from an interrupted run
        entries_.try_emplace(j["key"].get<std::string>(), j["raw_response"].get<std::string>());
    }
}

std::optional<std::string> ResponseCache::get(const std::string& key) const
{
    std::lock_guard lk(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end())
        return std::nullopt;
    return it->second;
}

void ResponseCache::put(const std::string& key, const std::string& raw)
{
    std::lock_guard lk(mu_);
    if (!entries_.try_emplace(key, raw).second)
        return;
    if (path_.empty())
        return;
    std::ofstream out(path_, std::ios::app);
    if (!out)
        throw IoError("cannot append to cache " + path_);
    out << json{{"key", key}, {"raw_response", raw}}.dump() << '\n';
    out.flush();
}

std::size_t ResponseCache::size() const
{
    std::lock_guard lk(mu_);
    return entries_.size();
}

// ---------------------------------------------------------------------------

ChatClient::ChatClient(EndpointConfig cfg, std::shared_ptr<ChatTransport> transport,
                       std::shared_ptr<ResponseCache> cache)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), cache_(std::move(cache)), slots_(cfg_.max_in_flight)
{
    cfg_.validate();
    if (!transport_)
        throw ConfigError("chat client needs a transport");
    if (!cache_)
        cache_ = std::make_shared<ResponseCache>();
}

std::string ChatClient::request_json(const ChatRequest& req) const
{
    json msgs = json::array();
    for (const auto& m : req.messages)
        msgs.push_back({{"role", m.role}, {"content", m.content}});
    json body{{"model", cfg_.model_name},
              {"messages", msgs},
              {"temperature", cfg_.temperature},
              {"max_tokens", cfg_.max_tokens}};
    if (!req.metadata.empty())
        body["metadata"] = req.metadata;
    return body.dump();
}

std::string ChatClient::cache_key(const ChatRequest& req) const
{
    std::string material = cfg_.model_name;
    material += '\x1f';
    material += req.template_id;
    for (const auto& m : req.messages) {
        material += '\x1f';
        material += m.role;
        material += '\x1e';
        material += m.content;
    }
    for (const auto& [k, v] : req.metadata) {
        material += '\x1d';
        material += k;
        material += '\x1e';
        material += v;
    }
    return sha256_hex(material);
}

std::string ChatClient::ask(const ChatRequest& req)
{
    const std::string key = cache_key(req);
    if (auto hit = cache_->get(key)) {
        ++hits_;
        return *hit;
    }
    const std::string body = request_json(req);
    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0 && cfg_.backoff_base_ms > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<long long>(cfg_.backoff_base_ms)
                                                                  << std::min(attempt - 1, 10)));
        slots_.acquire();
        const int now = ++in_flight_;
        int prev = peak_.load();
        while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
        }
        if (hook_)
            hook_(now);
        ++sent_;
        std::optional<std::string> raw;
        try {
            raw = transport_->complete(body);
        } catch (const TransportError& e) {
            last_error = e.what();
        } catch (const std::exception& e) {
            last_error = e.what();
        }
        const int after = --in_flight_;
        if (hook_)
            hook_(after);
        slots_.release();
        if (raw) {
            cache_->put(key, *raw);
            return *raw;
        }
    }
    ++failures_;
    throw TransportError("request failed after " + std::to_string(cfg_.max_retries + 1) +
                         " attempts: " + last_error);
}

std::vector<Outcome> ChatClient::ask_many(const std::vector<ChatRequest>& reqs)
{
    // Deduplicate by cache key; the first occurrence is sent.
    std::vector<std::size_t> unique_of(reqs.size());
    std::vector<std::size_t> uniques;
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < reqs.size(); ++i) {
        auto [it, inserted] = seen.try_emplace(cache_key(reqs[i]), uniques.size());
        if (inserted)
            uniques.push_back(i);
        else
            ++hits_;
        unique_of[i] = it->second;
    }

    std::vector<Outcome> unique_out(uniques.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t u = next++; u < uniques.size(); u = next++) {
            try {
                unique_out[u].raw = ask(reqs[uniques[u]]);
                unique_out[u].ok = true;
            } catch (const std::exception& e) {
                unique_out[u].error = e.what();
            }
        }
    };
    const std::size_t n_workers =
        std::min<std::size_t>(static_cast<std::size_t>(cfg_.max_in_flight), uniques.size());
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < n_workers; ++w)
            pool.emplace_back(worker);
        worker();
    }

    std::vector<Outcome> out(reqs.size());
    for (std::size_t i = 0; i < reqs.size(); ++i)
        out[i] = unique_out[unique_of[i]];
    return out;
}

ClientStats ChatClient::stats() const
{
    return ClientStats{sent_.load(), hits_.load(), failures_.load(), peak_.load()};
}

// ---------------------------------------------------------------------------

double fallback_lexical_similarity(std::string_view a, std::string_view b)
{
    const auto ta = normalized_tokens(a);
    const auto tb = normalized_tokens(b);
    if (ta.empty() && tb.empty())
        return 1.0;
    if (ta.empty() || tb.empty())
        return 0.0;
    std::map<std::string, int> ca;
    for (const auto& t : ta)
        ++ca[t];
    int common = 0;
    for (const auto& t : tb) {
        auto it = ca.find(t);
        if (it != ca.end() && it->second > 0) {
            --it->second;
            ++common;
        }
    }
    if (common == 0)
        return 0.0;
    const double p = static_cast<double>(common) / static_cast<double>(ta.size());
    const double r = static_cast<double>(common) / static_cast<double>(tb.size());
    return 2.0 * p * r / (p + r);
}

metrics::JudgeVerdict parse_qa_verdict(std::string_view raw, double max_score)
{
    for (std::size_t open = raw.find('{'); open != std::string_view::npos; open = raw.find('{', open + 1)) {
        const auto close = raw.find('}', open);
        if (close == std::string_view::npos)
            break;
        std::string obj(raw.substr(open, close - open + 1));
        auto j = json::parse(obj, nullptr, false);
        if (j.is_discarded()) {
            // Python dict literal with single quotes.
            std::replace(obj.begin(), obj.end(), '\'', '"');
            j = json::parse(obj, nullptr, false);
        }
        if (j.is_discarded())
            continue;
        if (auto v = verdict_from(j, max_score)) {
            v->raw = std::string(raw);
            return *v;
        }
    }
    metrics::JudgeVerdict fail;
    fail.pred = metrics::Verdict::no;
    fail.score = 0;
    fail.raw = std::string(raw);
    fail.parse_failure = true;
    return fail;
}

CaptionScore parse_caption_score(std::string_view raw)
{
    CaptionScore s;
    s.raw = std::string(raw);
    if (auto v = first_number(raw))
        s.score = std::clamp(*v, 0.0, 10.0);
    else
        s.parse_failure = true;
    return s;
}

// ---------------------------------------------------------------------------

std::string Judge::model_name() const
{
    return client_ ? client_->config().model_name : std::string("fallback-lexical-f1");
}

ChatRequest Judge::qa_request(const std::string& question, const std::string& target, const std::string& candidate)
{
    ChatRequest r;
    r.template_id = "sgqa_judge";
    r.messages.push_back({"user", templates::fill(templates::get("sgqa_judge"), {{"question", question},
                                                                                {"target", target},
                                                                                {"candidate", candidate}})});
    return r;
}

ChatRequest Judge::caption_request(const std::string& gt_caption, const std::string& pred_caption)
{
    ChatRequest r;
    r.template_id = "rcap_judge";
    r.messages.push_back({"system", std::string(templates::get("rcap_judge_system"))});
    r.messages.push_back(
        {"user", templates::fill(templates::get("rcap_judge_user"), {{"gt", gt_caption}, {"pred", pred_caption}})});
    return r;
}

metrics::JudgeVerdict Judge::judge_qa(const std::string& question, const std::string& target,
                                      const std::string& candidate)
{
    return judge_qa_many({{question, target, candidate}}).front();
}

CaptionScore Judge::judge_caption_pair(const std::string& gt_caption, const std::string& pred_caption)
{
    return judge_caption_many({{gt_caption, pred_caption}}).front();
}

std::vector<metrics::JudgeVerdict> Judge::judge_qa_many(const std::vector<QaItem>& items)
{
    std::vector<metrics::JudgeVerdict> out;
    out.reserve(items.size());
    if (!client_) {
        for (const auto& it : items) {
            const double f1 = fallback_lexical_similarity(it.target, it.candidate);
            metrics::JudgeVerdict v;
            v.pred = f1 >= 0.5 ? metrics::Verdict::yes : metrics::Verdict::no;
            v.score = 5.0 * f1;
            v.raw = "fallback";
            out.push_back(std::move(v));
        }
        return out;
    }
    std::vector<ChatRequest> reqs;
    for (const auto& it : items) {
        if (it.question.empty() || it.target.empty() || it.candidate.empty())
            throw InvalidInput("judge_qa needs non-empty question, target and candidate");
        reqs.push_back(qa_request(it.question, it.target, it.candidate));
    }
    for (auto& o : client_->ask_many(reqs)) {
        if (!o.ok)
            throw TransportError(o.error);
        out.push_back(parse_qa_verdict(o.raw));
    }
    return out;
}

std::vector<CaptionScore> Judge::judge_caption_many(const std::vector<CaptionPair>& pairs)
{
    std::vector<CaptionScore> out;
    out.reserve(pairs.size());
    if (!client_) {
        for (const auto& p : pairs) {
            CaptionScore s;
            s.score = 10.0 * fallback_lexical_similarity(p.gt, p.pred);
            s.raw = "fallback";
            out.push_back(std::move(s));
        }
        return out;
    }
    std::vector<ChatRequest> reqs;
    for (const auto& p : pairs) {
        if (p.gt.empty() || p.pred.empty())
            throw InvalidInput("judge_caption_pair needs non-empty captions");
        reqs.push_back(caption_request(p.gt, p.pred));
    }
    for (auto& o : client_->ask_many(reqs)) {
        if (!o.ok)
            throw TransportError(o.error);
        out.push_back(parse_caption_score(o.raw));
    }
    return out;
}

metrics::SimilarityMatrix Judge::pairwise_similarity(const std::vector<std::string>& preds,
                                                     const std::vector<std::string>& gts)
{
    if (preds.empty() || gts.empty())
        throw InvalidInput("pairwise_similarity needs non-empty prediction and ground-truth lists");
    std::vector<CaptionPair> pairs;
    pairs.reserve(preds.size() * gts.size());
    for (const auto& p : preds)
        for (const auto& g : gts)
            pairs.push_back({g, p});
    const auto scores = judge_caption_many(pairs);
    metrics::SimilarityMatrix m;
    m.p = preds.size();
    m.g = gts.size();
    m.s.resize(m.p * m.g);
    for (std::size_t k = 0; k < scores.size(); ++k)
        m.s[k] = scores[k].score / 10.0;
    return m;
}

} // namespace plm::judge
