#include "plm/eval.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "plm/error.hpp"
#include "plm/hash.hpp"
#include "plm/io.hpp"
#include "plm/metrics.hpp"

namespace plm::eval {
namespace {

using io::json;
namespace pt = boost::property_tree;

judge::EndpointConfig endpoint_from(const pt::ptree& sec, const std::string& name)
{
    judge::EndpointConfig c;
    try {
        c.base_url = sec.get<std::string>("base_url", "");
        c.model_name = sec.get<std::string>("model_name", "");
        c.api_key_env = sec.get<std::string>("api_key_env", "");
        c.timeout_s = sec.get<double>("timeout_s", c.timeout_s);
        c.max_in_flight = sec.get<int>("max_in_flight", c.max_in_flight);
        c.max_retries = sec.get<int>("max_retries", c.max_retries);
        c.max_tokens = sec.get<int>("max_tokens", c.max_tokens);
        c.backoff_base_ms = sec.get<int>("backoff_base_ms", c.backoff_base_ms);
        c.temperature = sec.get<double>("temperature", 0.0);
    } catch (const pt::ptree_error& e) {
        throw ConfigError("[" + name + "]: " + e.what());
    }
    try {
        c.validate();
    } catch (const ConfigError& e) {
        throw ConfigError("[" + name + "]: " + e.what());
    }
    return c;
}

bool parse_bool(const std::string& v, const std::string& key)
{
    if (v == "true" || v == "1" || v == "yes")
        return true;
    if (v == "false" || v == "0" || v == "no" || v.empty())
        return false;
    throw ConfigError("key '" + key + "' must be a boolean, got '" + v + "'");
}

std::string timestamp_utc()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Loads predictions keyed by id. Malformed lines are skipped: the affected
// items then score as parse failures.
std::map<std::string, std::string> load_predictions(const std::string& path)
{
    std::map<std::string, std::string> out;
    io::for_each_jsonl(
        path,
        [&](std::size_t, const json& j) {
            try {
                auto p = io::prediction_from_json(j);
                out.try_emplace(p.id, std::move(p.raw_text));
            } catch (const InvalidInput&) {
            }
        },
        [](std::size_t, const std::string&) {});
    return out;
}

template <class Item, class Loader>
std::vector<Item> load_gt(const std::string& path, Loader loader)
{
    std::vector<Item> items;
    io::for_each_jsonl(path, [&](std::size_t line, const json& j) {
        try {
            items.push_back(loader(j));
        } catch (const InvalidInput& e) {
            throw InvalidInput(path + ":" + std::to_string(line) + ": " + e.what());
        }
    });
    if (items.empty())
        throw InvalidInput("ground truth " + path + " has no items");
    return items;
}

struct Query {
    std::string id;
    std::string video_ref;
    protocol::TaskPrompt prompt;
};

class Runner {
public:
    Runner(const RunConfig& cfg, const Transports& tr) : cfg_(cfg)
    {
        cache_ = cfg.cache_path.empty() ? std::make_shared<judge::ResponseCache>()
                                        : std::make_shared<judge::ResponseCache>(cfg.cache_path);
        if (cfg.judge_endpoint) {
            auto t = tr.judge ? tr.judge : judge::make_http_transport(*cfg.judge_endpoint);
            judge_client_ = std::make_shared<judge::ChatClient>(*cfg.judge_endpoint, t, cache_);
        }
        judge_ = judge::Judge(judge_client_);
        if (cfg.predictions_path.empty()) {
            auto t = tr.model ? tr.model : judge::make_http_transport(*cfg.model_endpoint);
            model_client_ = std::make_shared<judge::ChatClient>(*cfg.model_endpoint, t, cache_);
        } else {
            predictions_ = load_predictions(cfg.predictions_path);
        }
    }

    // Raw model answers aligned with queries; nullopt when none is available.
    std::vector<std::optional<std::string>> answers(const std::vector<Query>& qs)
    {
        for (const auto& q : qs)
            template_ids_.insert(q.prompt.template_id);
        std::vector<std::optional<std::string>> out(qs.size());
        if (model_client_) {
            std::vector<judge::ChatRequest> reqs;
            for (const auto& q : qs) {
                judge::ChatRequest r;
                r.template_id = q.prompt.template_id;
                r.messages.push_back({"user", q.prompt.filled_text});
                r.metadata["id"] = q.id;
                if (!q.video_ref.empty())
                    r.metadata["video_ref"] = q.video_ref;
                reqs.push_back(std::move(r));
            }
            const auto outcomes = model_client_->ask_many(reqs);
            for (std::size_t i = 0; i < qs.size(); ++i) {
                if (!outcomes[i].ok)
                    throw TransportError("model endpoint: " + outcomes[i].error);
                out[i] = outcomes[i].raw;
            }
        } else {
            std::set<std::string> ids;
            for (std::size_t i = 0; i < qs.size(); ++i) {
                ids.insert(qs[i].id);
                if (auto it = predictions_.find(qs[i].id); it != predictions_.end())
                    out[i] = it->second;
            }
            unmatched_ = static_cast<std::size_t>(std::count_if(
                predictions_.begin(), predictions_.end(), [&](const auto& kv) { return !ids.count(kv.first); }));
        }
        return out;
    }

    protocol::PromptFields fields(int num_frames, const std::string& color) const
    {
        protocol::PromptFields f;
        f.num_frames = num_frames;
        f.color = color;
        f.addenda = cfg_.addenda;
        return f;
    }

    json run()
    {
        json metrics;
        json items = json::array();
        switch (cfg_.task) {
        case protocol::Task::fgqa:
            metrics = run_fgqa(items);
            break;
        case protocol::Task::sgqa:
            metrics = run_sgqa(items);
            break;
        case protocol::Task::rcap:
            metrics = run_rcap(items);
            break;
        case protocol::Task::rtloc:
            metrics = run_rtloc(items);
            break;
        case protocol::Task::rdcap:
            metrics = run_rdcap(items);
            break;
        }
        std::size_t failures = 0;
        for (const auto& it : items)
            failures += it["parse_failure"].get<bool>() ? 1 : 0;

        json meta{{"task", std::string(protocol::to_string(cfg_.task))},
                  {"config_hash", sha256_hex(cfg_.canonical())},
                  {"template_ids", std::vector<std::string>(template_ids_.begin(), template_ids_.end())},
                  {"judge_model", judge_.model_name()},
                  {"model", model_client_ ? model_client_->config().model_name
                                          : "predictions:" + std::filesystem::path(cfg_.predictions_path).filename().string()},
                  {"seed", cfg_.seed}};
        if (cfg_.record_timestamp)
            meta["timestamp"] = timestamp_utc();
        return json{{"task", std::string(protocol::to_string(cfg_.task))},
                    {"metrics", metrics},
                    {"counts",
                     {{"items", items.size()}, {"parse_failures", failures}, {"unmatched_predictions", unmatched_}}},
                    {"items", items},
                    {"metadata", meta}};
    }

    judge::ClientStats judge_stats() const { return judge_client_ ? judge_client_->stats() : judge::ClientStats{}; }
    judge::ClientStats model_stats() const { return model_client_ ? model_client_->stats() : judge::ClientStats{}; }

private:
    json run_fgqa(json& items)
    {
        auto probes = load_gt<mcqbuild::BinaryProbe>(cfg_.gt_path, io::probe_from_json);
        std::sort(probes.begin(), probes.end(), [](const auto& a, const auto& b) {
            return a.qa_id != b.qa_id ? a.qa_id < b.qa_id : a.probe_index < b.probe_index;
        });
        std::vector<Query> qs;
        for (const auto& p : probes) {
            auto f = fields(32, "red");
            f.question = p.question;
            f.options = {p.option_a, p.option_b};
            qs.push_back({p.probe_id(), p.video_ref, protocol::format_prompt(protocol::Task::fgqa, f)});
        }
        const auto raw = answers(qs);
        std::vector<metrics::BinaryProbeResult> results;
        for (std::size_t i = 0; i < probes.size(); ++i) {
            const auto parsed = raw[i] ? protocol::parse_option(*raw[i], 2, cfg_.strict_options) : std::nullopt;
            const int truth = probes[i].correct_is == mcqbuild::Side::A ? 0 : 1;
            const bool correct = parsed && *parsed == truth;
            results.push_back({probes[i].qa_id, probes[i].probe_index, correct});
            items.push_back({{"id", qs[i].id},
                             {"qa_id", probes[i].qa_id},
                             {"parsed", parsed ? json(std::string(1, static_cast<char>('A' + *parsed))) : json(nullptr)},
                             {"correct_is", truth == 0 ? "A" : "B"},
                             {"score", correct ? 1.0 : 0.0},
                             {"parse_failure", !parsed}});
        }
        std::set<std::string> questions;
        for (const auto& p : probes)
            questions.insert(p.qa_id);
        return json{{"mbacc", metrics::mbacc(results)},
                    {"n_questions", questions.size()},
                    {"n_probes", probes.size()}};
    }

    json run_sgqa(json& items)
    {
        auto gt = load_gt<io::SgqaItem>(cfg_.gt_path, io::sgqa_from_json);
        std::sort(gt.begin(), gt.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
        std::vector<Query> qs;
        for (const auto& g : gt) {
            auto f = fields(32, "red");
            f.question = g.question;
            qs.push_back({g.id, "", protocol::format_prompt(protocol::Task::sgqa, f)});
        }
        const auto raw = answers(qs);
        std::vector<judge::Judge::QaItem> judged;
        std::vector<std::size_t> judged_idx;
        for (std::size_t i = 0; i < gt.size(); ++i) {
            if (raw[i] && raw[i]->find_first_not_of(" \t\r\n") != std::string::npos) {
                judged.push_back({gt[i].question, gt[i].answer, *raw[i]});
                judged_idx.push_back(i);
            }
        }
        template_ids_.insert(judged.empty() ? "" : "sgqa_judge");
        template_ids_.erase("");
        const auto verdict_list = judge_.judge_qa_many(judged);
        std::vector<metrics::JudgeVerdict> verdicts(gt.size());
        std::vector<bool> failed(gt.size(), true);
        for (std::size_t k = 0; k < judged_idx.size(); ++k) {
            verdicts[judged_idx[k]] = verdict_list[k];
            failed[judged_idx[k]] = verdict_list[k].parse_failure;
        }
        for (std::size_t i = 0; i < gt.size(); ++i) {
            const auto& v = verdicts[i];
            items.push_back({{"id", gt[i].id},
                             {"parsed", raw[i] ? json(*raw[i]) : json(nullptr)},
                             {"pred", v.pred == metrics::Verdict::yes ? "yes" : "no"},
                             {"score", v.score},
                             {"judge_raw", v.raw},
                             {"parse_failure", static_cast<bool>(failed[i])}});
        }
        const auto agg = metrics::judge_accuracy(verdicts);
        return json{{"accuracy", agg.accuracy}, {"mean_score", agg.mean_score}};
    }

    json run_rcap(json& items)
    {
        auto gt = load_gt<io::RcapItem>(cfg_.gt_path, io::rcap_from_json);
        std::sort(gt.begin(), gt.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
        std::vector<Query> qs;
        for (const auto& g : gt) {
            auto f = fields(g.num_frames, g.color);
            f.start_frame = g.start_frame;
            f.end_frame = g.end_frame;
            qs.push_back({g.id, g.video_ref, protocol::format_prompt(protocol::Task::rcap, f)});
        }
        const auto raw = answers(qs);
        std::vector<judge::Judge::CaptionPair> pairs;
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < gt.size(); ++i)
            if (raw[i] && raw[i]->find_first_not_of(" \t\r\n") != std::string::npos) {
                pairs.push_back({gt[i].caption, *raw[i]});
                idx.push_back(i);
            }
        if (!pairs.empty())
            template_ids_.insert("rcap_judge");
        const auto scored = judge_.judge_caption_many(pairs);
        std::vector<judge::CaptionScore> all(gt.size());
        std::vector<bool> failed(gt.size(), true);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            all[idx[k]] = scored[k];
            failed[idx[k]] = scored[k].parse_failure;
        }
        std::vector<double> scores;
        for (std::size_t i = 0; i < gt.size(); ++i) {
            scores.push_back(all[i].score);
            items.push_back({{"id", gt[i].id},
                             {"parsed", raw[i] ? json(*raw[i]) : json(nullptr)},
                             {"score", all[i].score},
                             {"judge_raw", all[i].raw},
                             {"parse_failure", static_cast<bool>(failed[i])}});
        }
        return json{{"score", metrics::mean_caption_score(scores)}};
    }

    json run_rtloc(json& items)
    {
        auto gt = load_gt<io::RtlocItem>(cfg_.gt_path, io::rtloc_from_json);
        std::sort(gt.begin(), gt.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
        std::vector<Query> qs;
        for (const auto& g : gt) {
            auto f = fields(g.num_frames, g.color);
            f.event = g.event;
            qs.push_back({g.id, g.video_ref, protocol::format_prompt(protocol::Task::rtloc, f)});
        }
        const auto raw = answers(qs);
        std::vector<std::optional<metrics::Interval>> preds;
        std::vector<metrics::Interval> gts;
        for (std::size_t i = 0; i < gt.size(); ++i) {
            const auto p = raw[i] ? protocol::parse_interval_answer(*raw[i], gt[i].num_frames - 1) : std::nullopt;
            preds.push_back(p);
            gts.push_back(gt[i].gt);
            const double iou = p ? metrics::interval_iou(*p, gt[i].gt) : 0.0;
            items.push_back({{"id", gt[i].id},
                             {"parsed", p ? io::to_json(*p) : json(nullptr)},
                             {"gt", io::to_json(gt[i].gt)},
                             {"iou", iou},
                             {"score", iou},
                             {"parse_failure", !p}});
        }
        json recall = json::object();
        for (double tau : metrics::kDefaultIouThresholds) {
            const double t[] = {tau};
            char key[16];
            std::snprintf(key, sizeof key, "%.1f", tau);
            recall[key] = metrics::mean_recall_at_1(preds, gts, t);
        }
        return json{{"mean_recall_at_1", metrics::mean_recall_at_1(preds, gts)},
                    {"mean_iou", metrics::mean_iou(preds, gts)},
                    {"recall_at", recall}};
    }

    json run_rdcap(json& items)
    {
        auto gt = load_gt<io::RdcapItem>(cfg_.gt_path, io::rdcap_from_json);
        std::sort(gt.begin(), gt.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
        std::vector<Query> qs;
        for (const auto& g : gt)
            qs.push_back({g.id, g.video_ref, protocol::format_prompt(protocol::Task::rdcap, fields(g.num_frames, g.color))});
        const auto raw = answers(qs);
        double sum = 0;
        for (std::size_t i = 0; i < gt.size(); ++i) {
            const auto track = raw[i] ? protocol::parse_dense_captions(*raw[i], gt[i].num_frames - 1) : std::nullopt;
            metrics::SodaResult res;
            std::size_t n_pred = 0;
            const auto gv = gt[i].track.visible_events();
            if (track) {
                const auto pv = track->visible_events();
                n_pred = pv.size();
                if (!pv.empty() && !gv.empty()) {
                    std::vector<std::string> pt, gtxt;
                    for (const auto& e : pv)
                        pt.push_back(e.text.empty() ? std::string(" ") : e.text);
                    for (const auto& e : gv)
                        gtxt.push_back(e.text.empty() ? std::string(" ") : e.text);
                    if (!judge_.is_fallback())
                        template_ids_.insert("rcap_judge");
                    res = metrics::soda(*track, gt[i].track, judge_.pairwise_similarity(pt, gtxt));
                }
            }
            sum += res.f1;
            items.push_back({{"id", gt[i].id},
                             {"parsed", track ? io::to_json(*track) : json(nullptr)},
                             {"n_pred_events", n_pred},
                             {"n_gt_events", gv.size()},
                             {"precision", res.precision},
                             {"recall", res.recall},
                             {"soda_f1", res.f1},
                             {"score", res.f1},
                             {"parse_failure", !track}});
        }
        const double soda = sum / static_cast<double>(gt.size());
        return json{{"soda", soda}, {"score", 100.0 * soda}};
    }

    const RunConfig& cfg_;
    std::shared_ptr<judge::ResponseCache> cache_;
    std::shared_ptr<judge::ChatClient> judge_client_;
    std::shared_ptr<judge::ChatClient> model_client_;
    judge::Judge judge_;
    std::map<std::string, std::string> predictions_;
    std::set<std::string> template_ids_;
    std::size_t unmatched_ = 0;
};

std::string fmt_fixed(double v, int prec)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

std::string summary_table(const json& report)
{
    std::ostringstream o;
    o << "task: " << report["task"].get<std::string>() << '\n';
    for (const auto& [k, v] : report["metrics"].items()) {
        if (v.is_object()) {
            for (const auto& [k2, v2] : v.items())
                o << "  " << k << "@" << k2 << ": " << fmt_fixed(v2.get<double>(), 2) << '\n';
        } else if (v.is_number_float()) {
            o << "  " << k << ": " << fmt_fixed(v.get<double>(), k == "soda" ? 4 : 2) << '\n';
        } else {
            o << "  " << k << ": " << v.dump() << '\n';
        }
    }
    const auto& c = report["counts"];
    o << "  items: " << c["items"].get<std::size_t>() << "  parse failures: " << c["parse_failures"].get<std::size_t>()
      << "  unmatched predictions: " << c["unmatched_predictions"].get<std::size_t>() << '\n';
    return o.str();
}

} // namespace

std::string RunConfig::canonical() const
{
    json j{{"task", std::string(protocol::to_string(task))},
           {"gt", gt_path},
           {"predictions", predictions_path},
           {"seed", seed},
           {"strict_options", strict_options},
           {"addenda", addenda}};
    auto ep = [](const judge::EndpointConfig& e) {
        return json{{"base_url", e.base_url}, {"model_name", e.model_name}, {"temperature", e.temperature},
                    {"max_tokens", e.max_tokens}};
    };
    j["judge"] = judge_endpoint ? ep(*judge_endpoint) : json("fallback");
    j["model"] = model_endpoint ? ep(*model_endpoint) : json(nullptr);
    return j.dump();
}

void RunConfig::validate() const
{
    if (gt_path.empty())
        throw ConfigError("no ground-truth file configured");
    if (!std::filesystem::exists(gt_path))
        throw ConfigError("ground-truth file not found: " + gt_path);
    if (predictions_path.empty()) {
        if (!model_endpoint)
            throw ConfigError("set either a predictions file or a [model] endpoint");
    } else if (!std::filesystem::exists(predictions_path)) {
        throw ConfigError("predictions file not found: " + predictions_path);
    }
    for (const auto& a : addenda)
        if (a.rfind("addendum_", 0) != 0)
            throw ConfigError("addenda must name addendum_* templates, got '" + a + "'");
}

RunConfig load_run_config(const std::string& ini_path)
{
    pt::ptree tree;
    try {
        pt::read_ini(ini_path, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(e.what());
    }
    RunConfig c;
    const auto base = std::filesystem::path(ini_path).parent_path();
    auto resolve = [&](const std::string& p) {
        if (p.empty() || std::filesystem::path(p).is_absolute())
            return p;
        return (base / p).lexically_normal().string();
    };
    const auto run = tree.get_child_optional("run");
    if (run) {
        try {
            if (auto t = run->get_optional<std::string>("task"))
                c.task = protocol::task_from_string(*t);
        } catch (const InvalidInput& e) {
            throw ConfigError(e.what());
        }
        c.gt_path = resolve(run->get<std::string>("gt", ""));
        c.predictions_path = resolve(run->get<std::string>("predictions", ""));
        c.report_path = resolve(run->get<std::string>("report", ""));
        c.cache_path = resolve(run->get<std::string>("cache", ""));
        const auto seed = run->get<std::string>("seed", "0");
        const auto [end, ec] = std::from_chars(seed.data(), seed.data() + seed.size(), c.seed);
        if (ec != std::errc() || end != seed.data() + seed.size() || seed.empty())
            throw ConfigError("key 'seed' must be a non-negative integer, got '" + seed + "'");
        c.strict_options = parse_bool(run->get<std::string>("strict_options", "false"), "strict_options");
        c.record_timestamp = parse_bool(run->get<std::string>("record_timestamp", "false"), "record_timestamp");
        std::stringstream ss(run->get<std::string>("addenda", ""));
        for (std::string a; std::getline(ss, a, ',');) {
            a.erase(0, a.find_first_not_of(' '));
            a.erase(a.find_last_not_of(' ') + 1);
            if (!a.empty())
                c.addenda.push_back(a);
        }
    }
    if (auto ep = tree.get_child_optional("endpoint"))
        c.judge_endpoint = endpoint_from(*ep, "endpoint");
    if (auto m = tree.get_child_optional("model"))
        c.model_endpoint = endpoint_from(*m, "model");
    return c;
}

EvalResult run_eval(const RunConfig& cfg, const Transports& transports)
{
    cfg.validate();
    Runner runner(cfg, transports);
    EvalResult res;
    res.report = runner.run();
    res.table = summary_table(res.report);
    res.judge_stats = runner.judge_stats();
    res.model_stats = runner.model_stats();
    if (!cfg.report_path.empty())
        io::write_text_atomic(cfg.report_path, res.report.dump(2) + "\n");
    return res;
}

json reaggregate(const json& report)
{
    const auto task = protocol::task_from_string(report.at("task").get<std::string>());
    const auto& items = report.at("items");
    json m;
    switch (task) {
    case protocol::Task::fgqa: {
        std::vector<metrics::BinaryProbeResult> r;
        for (const auto& it : items)
            r.push_back({it["qa_id"].get<std::string>(), 0, it["score"].get<double>() == 1.0});
        m["mbacc"] = metrics::mbacc(r);
        break;
    }
    case protocol::Task::sgqa: {
        std::vector<metrics::JudgeVerdict> v;
        for (const auto& it : items) {
            metrics::JudgeVerdict jv;
            jv.pred = it["pred"] == "yes" ? metrics::Verdict::yes : metrics::Verdict::no;
            jv.score = it["score"].get<double>();
            v.push_back(jv);
        }
        const auto a = metrics::judge_accuracy(v);
        m["accuracy"] = a.accuracy;
        m["mean_score"] = a.mean_score;
        break;
    }
    case protocol::Task::rcap: {
        std::vector<double> s;
        for (const auto& it : items)
            s.push_back(it["score"].get<double>());
        m["score"] = metrics::mean_caption_score(s);
        break;
    }
    case protocol::Task::rtloc: {
        // IoU is all the recall and mean-IoU definitions need: rebuild
        // intervals with the recorded overlap against a unit ground truth.
        std::vector<std::optional<metrics::Interval>> p;
        std::vector<metrics::Interval> g;
        for (const auto& it : items) {
            const double iou = it["iou"].get<double>();
            g.push_back({0, 1, metrics::TimeUnit::frame_index});
            p.push_back(metrics::Interval{0, iou, metrics::TimeUnit::frame_index});
        }
        m["mean_recall_at_1"] = metrics::mean_recall_at_1(p, g);
        m["mean_iou"] = metrics::mean_iou(p, g);
        break;
    }
    case protocol::Task::rdcap: {
        double sum = 0;
        for (const auto& it : items)
            sum += it["soda_f1"].get<double>();
        m["soda"] = sum / static_cast<double>(items.size());
        break;
    }
    }
    return m;
}

} // namespace plm::eval
