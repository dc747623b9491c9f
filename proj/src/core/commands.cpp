#include "plm/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <tuple>

#include "plm/error.hpp"
#include "plm/io.hpp"
#include "plm/mcqbuild.hpp"
#include "plm/overlay.hpp"
#include "plm/ranker.hpp"
#include "plm/scaling.hpp"

namespace plm::commands {
namespace fs = std::filesystem;
using io::json;

namespace {

template <class T, class F>
std::vector<T> load_all(const std::string& path, F from_json)
{
    std::vector<T> out;
    io::for_each_jsonl(path, [&](std::size_t line, const json& j) {
        try {
            out.push_back(from_json(j));
        } catch (const InvalidInput& e) {
            throw InvalidInput(path + ":" + std::to_string(line) + ": " + e.what());
        }
    });
    return out;
}

json fit_json(const scaling::PowerLawFit& f)
{
    return json{{"alpha", f.alpha}, {"beta", f.beta}, {"rmse_log", f.rmse_log}, {"n_points", f.n_points}};
}

json points_json(const std::vector<scaling::RunPoint>& pts)
{
    json a = json::array();
    for (const auto& p : pts)
        a.push_back({{"flops", p.flops}, {"error", p.error}});
    return a;
}

std::string safe_name(const std::string& s)
{
    std::string out;
    for (unsigned char c : s)
        out += (std::isalnum(c) || c == '-' || c == '_' || c == '.') ? static_cast<char>(c) : '_';
    return out.empty() ? "group" : out;
}

std::string frame_name(std::int64_t idx, const char* ext)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%05lld%s", static_cast<long long>(idx), ext);
    return buf;
}

} // namespace

std::size_t segment(const std::string& features_path, const std::string& shots_path,
                    const segmenter::SegmenterConfig& cfg, const std::string& out_path)
{
    const auto features = load_all<segmenter::FeatureSeries>(features_path, io::features_from_json);
    std::map<std::string, segmenter::ShotBoundaryList> shots;
    if (!shots_path.empty()) {
        for (auto& s : load_all<segmenter::ShotBoundaryList>(shots_path, io::shots_from_json)) {
            const auto id = s.video_id;
            if (!shots.emplace(id, std::move(s)).second)
                throw InvalidInput(shots_path + ": duplicate shots record for video '" + id + "'");
        }
    }
    std::vector<json> out;
    for (const auto& fs_ : features) {
        segmenter::ShotBoundaryList sh{fs_.video_id, {}};
        if (auto it = shots.find(fs_.video_id); it != shots.end())
            sh = it->second;
        for (const auto& seg : segmenter::propose_segments(fs_, sh, cfg))
            out.push_back(io::to_json(seg));
    }
    io::write_jsonl_atomic(out_path, out);
    return out.size();
}

RankSummary rank(const std::string& segments_path, const std::string& evidence_path,
                 const std::map<std::string, double>& thresholds, const std::string& model_path,
                 const std::string& out_segments, const std::string& out_report)
{
    const auto th = ranker::Thresholds::from_map(thresholds);
    std::optional<ranker::RelevanceModel> model;
    if (!model_path.empty())
        model.emplace(io::relevance_model_from_json(json::parse(io::read_text(model_path))));

    using Key = std::tuple<std::string, double, double>;
    std::map<Key, ranker::SegmentEvidence> evidence;
    for (auto& e : load_all<io::EvidenceRecord>(evidence_path, io::evidence_from_json))
        evidence.insert_or_assign(Key{e.video_id, e.start_s, e.end_s}, std::move(e.evidence));

    std::vector<ranker::RankItem> items;
    for (auto& s : load_all<segmenter::SegmentProposal>(segments_path, io::segment_from_json)) {
        ranker::RankItem it{std::move(s), std::nullopt};
        if (auto e = evidence.find(Key{it.segment.video_id, it.segment.start_s, it.segment.end_s}); e != evidence.end())
            it.evidence = e->second;
        items.push_back(std::move(it));
    }
    const auto res = ranker::filter_segments(items, th, model ? &*model : nullptr);
    std::vector<json> kept, report;
    for (const auto& s : res.kept)
        kept.push_back(io::to_json(s));
    for (const auto& r : res.report)
        report.push_back(io::to_json(r));
    io::write_jsonl_atomic(out_segments, kept);
    io::write_jsonl_atomic(out_report, report);
    return {items.size(), res.kept.size()};
}

void scaling_fit(const std::string& csv_path, const std::string& out_dir, bool fit_all_points,
                 const std::map<std::string, double>& baselines)
{
    const auto points = scaling::read_runpoints_csv(csv_path);
    scaling::ScalingOptions opts{fit_all_points, baselines};
    const auto groups = scaling::analyze(points, opts);

    std::map<std::string, scaling::PowerLawFit> fits;
    json gj = json::array();
    for (const auto& g : groups) {
        const auto svg = safe_name(g.group) + ".svg";
        json o{{"group", g.group},
               {"n_points", g.points.size()},
               {"frontier", points_json(g.frontier)},
               {"fit", g.fit ? fit_json(*g.fit) : json(nullptr)},
               {"plot", svg}};
        if (!g.fit_error.empty())
            o["fit_error"] = g.fit_error;
        if (g.baseline)
            o["baseline"] = *g.baseline;
        gj.push_back(std::move(o));
        if (g.fit)
            fits.emplace(g.group, *g.fit);
        io::write_text_atomic((fs::path(out_dir) / svg).string(), scaling::render_svg(g));
    }
    json ranking = json::array();
    for (const auto& r : scaling::compare_exponents(fits))
        ranking.push_back({{"rank", r.rank}, {"group", r.group}, {"alpha", r.fit.alpha}});
    const json report{{"fit_points", fit_all_points ? "all" : "frontier"}, {"groups", gj}, {"ranking", ranking}};
    io::write_text_atomic((fs::path(out_dir) / "scaling_report.json").string(), report.dump(2) + "\n");
}

std::size_t mcq_expand(const std::string& in_path, const std::string& out_path, std::uint64_t seed)
{
    std::vector<json> out;
    for (const auto& item : load_all<mcqbuild::MCQItem>(in_path, io::mcq_from_json))
        for (const auto& p : mcqbuild::expand_binary(item, seed))
            out.push_back(io::to_json(p));
    io::write_jsonl_atomic(out_path, out);
    return out.size();
}

FilterSummary mcq_filter(const std::string& in_path, const std::string& out_path, const std::string& report_path,
                         judge::ChatClient& client)
{
    const auto items = load_all<mcqbuild::MCQItem>(in_path, io::mcq_from_json);
    const auto res = mcqbuild::blind_filter(items, client);
    std::vector<json> kept, report;
    FilterSummary sum;
    for (const auto& m : res.kept)
        kept.push_back(io::to_json(m));
    for (const auto& r : res.records) {
        json o{{"qa_id", r.qa_id}, {"status", std::string(mcqbuild::to_string(r.status))}};
        o["blind_answer"] = r.blind_answer ? json(*r.blind_answer) : json(nullptr);
        o["raw"] = r.raw;
        if (!r.error.empty())
            o["error"] = r.error;
        if (r.status == mcqbuild::BlindStatus::unparseable || r.status == mcqbuild::BlindStatus::unfiltered)
            ++sum.flagged;
        report.push_back(std::move(o));
    }
    sum.kept = res.kept.size();
    sum.dropped = res.dropped.size();
    io::write_jsonl_atomic(out_path, kept);
    if (!report_path.empty())
        io::write_jsonl_atomic(report_path, report);
    return sum;
}

std::size_t mcq_balance(const std::string& in_path, const std::string& out_path, std::uint64_t seed, double slack)
{
    const auto items = load_all<mcqbuild::MCQItem>(in_path, io::mcq_from_json);
    std::vector<json> out;
    for (const auto& m : mcqbuild::balance(items, seed, slack))
        out.push_back(io::to_json(m));
    io::write_jsonl_atomic(out_path, out);
    return out.size();
}

std::size_t overlay(const std::string& frames_dir, const std::string& tracks_path, const std::string& out_dir,
                    std::int64_t k, int thickness_px)
{
    std::map<std::string, std::vector<overlay::BoxTrack>> by_video;
    io::for_each_jsonl(tracks_path, [&](std::size_t line, const json& j) {
        try {
            auto [vid, t] = io::track_from_json(j);
            by_video[vid].push_back(std::move(t));
        } catch (const InvalidInput& e) {
            throw InvalidInput(tracks_path + ":" + std::to_string(line) + ": " + e.what());
        }
    });
    std::size_t written = 0;
    for (const auto& [vid, tracks] : by_video) {
        const fs::path dir = fs::path(frames_dir) / vid;
        if (!fs::is_directory(dir))
            throw IoError("no frame directory for video '" + vid + "': " + dir.string());
        std::vector<overlay::Image> frames;
        for (std::int64_t i = 0;; ++i) {
            const auto png = dir / frame_name(i, ".png");
            const auto ppm = dir / frame_name(i, ".ppm");
            if (fs::exists(png))
                frames.push_back(overlay::read_image(png.string()));
            else if (fs::exists(ppm))
                frames.push_back(overlay::read_image(ppm.string()));
            else
                break;
        }
        if (frames.empty())
            throw IoError("no frames named 00000.png or 00000.ppm in " + dir.string());
        try {
            const auto sampled = overlay::select_and_render(frames, tracks, k, thickness_px);
            for (std::size_t i = 0; i < sampled.indices.size(); ++i) {
                const auto path = fs::path(out_dir) / vid / frame_name(sampled.indices[i], ".png");
                overlay::write_image(path.string(), sampled.frames[i]);
                ++written;
            }
        } catch (const InvalidInput& e) {
            throw InvalidInput("video '" + vid + "': " + e.what());
        }
    }
    return written;
}

} // namespace plm::commands
