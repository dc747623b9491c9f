#include "plm/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "plm/error.hpp"
#include "plm/protocol.hpp"

namespace plm::io {
namespace {

const json& field(const json& j, const char* key)
{
    if (!j.is_object())
        throw InvalidInput("record is not a JSON object");
    auto it = j.find(key);
    if (it == j.end() || it->is_null())
        throw InvalidInput(std::string("missing field '") + key + "'");
    return *it;
}

void check_unit(double v, const char* key)
{
    if (!(v >= 0.0 && v <= 1.0))
        throw InvalidInput(std::string("field '") + key + "' must lie in [0,1]");
}

std::optional<std::vector<double>> opt_unit_array(const json& j, const char* key)
{
    if (!j.contains(key) || j[key].is_null())
        return std::nullopt;
    auto v = number_array(j, key);
    for (double x : v)
        check_unit(x, key);
    return v;
}

int frames_of(const json& j)
{
    const auto n = j.contains("num_frames") ? req_int(j, "num_frames") : 32;
    if (n < 2 || n > 100000)
        throw InvalidInput("field 'num_frames' must be in [2, 100000]");
    return static_cast<int>(n);
}

} // namespace

void for_each_jsonl(const std::string& path, const std::function<void(std::size_t, const json&)>& fn,
                    const std::function<void(std::size_t, const std::string&)>& on_error)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            if (on_error) {
                on_error(lineno, "malformed JSON");
                continue;
            }
            throw InvalidInput(path + ":" + std::to_string(lineno) + ": malformed JSON");
        }
        fn(lineno, j);
    }
    if (in.bad())
        throw IoError("read error on " + path);
}

std::vector<json> read_jsonl(const std::string& path)
{
    std::vector<json> out;
    for_each_jsonl(path, [&](std::size_t, const json& j) { out.push_back(j); });
    return out;
}

void write_text_atomic(const std::string& path, const std::string& content)
{
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path())
        fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out)
            throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec)
        throw IoError("cannot rename " + tmp.string() + " to " + path + ": " + ec.message());
}

void write_jsonl_atomic(const std::string& path, const std::vector<json>& records)
{
    std::string s;
    for (const auto& r : records) {
        s += r.dump();
        s += '\n';
    }
    write_text_atomic(path, s);
}

std::string read_text(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string req_string(const json& j, const char* key)
{
    const auto& v = field(j, key);
    if (!v.is_string())
        throw InvalidInput(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

std::optional<std::string> opt_string(const json& j, const char* key)
{
    if (!j.contains(key) || j[key].is_null())
        return std::nullopt;
    return req_string(j, key);
}

double req_number(const json& j, const char* key)
{
    const auto& v = field(j, key);
    if (!v.is_number())
        throw InvalidInput(std::string("field '") + key + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d))
        throw InvalidInput(std::string("field '") + key + "' must be finite");
    return d;
}

std::optional<double> opt_number(const json& j, const char* key)
{
    if (!j.contains(key) || j[key].is_null())
        return std::nullopt;
    return req_number(j, key);
}

std::int64_t req_int(const json& j, const char* key)
{
    const auto& v = field(j, key);
    if (!v.is_number_integer())
        throw InvalidInput(std::string("field '") + key + "' must be an integer");
    return v.get<std::int64_t>();
}

std::vector<double> number_array(const json& j, const char* key)
{
    const auto& v = field(j, key);
    if (!v.is_array())
        throw InvalidInput(std::string("field '") + key + "' must be an array");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& x : v) {
        if (!x.is_number() || !std::isfinite(x.get<double>()))
            throw InvalidInput(std::string("field '") + key + "' must contain only finite numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

segmenter::FeatureSeries features_from_json(const json& j)
{
    const auto id = req_string(j, "video_id");
    const double stride = j.contains("stride_s") ? req_number(j, "stride_s") : 1.0;
    const auto dim = req_int(j, "dim");
    if (dim < 1)
        throw InvalidInput("field 'dim' must be positive");
    const auto& vs = field(j, "vectors");
    if (!vs.is_array())
        throw InvalidInput("field 'vectors' must be an array of arrays");
    std::vector<std::vector<double>> vectors;
    vectors.reserve(vs.size());
    for (std::size_t i = 0; i < vs.size(); ++i) {
        const auto& row = vs[i];
        if (!row.is_array())
            throw InvalidInput("vectors[" + std::to_string(i) + "] is not an array");
        if (static_cast<std::int64_t>(row.size()) != dim)
            throw InvalidInput("vectors[" + std::to_string(i) + "] has length " + std::to_string(row.size()) +
                               ", dim is " + std::to_string(dim));
        std::vector<double> v;
        v.reserve(row.size());
        for (const auto& x : row) {
            if (!x.is_number())
                throw InvalidInput("vectors[" + std::to_string(i) + "] contains a non-number");
            v.push_back(x.get<double>());
        }
        vectors.push_back(std::move(v));
    }
    return segmenter::make_feature_series(id, stride, std::move(vectors));
}

segmenter::ShotBoundaryList shots_from_json(const json& j)
{
    segmenter::ShotBoundaryList s;
    s.video_id = req_string(j, "video_id");
    s.times_s = number_array(j, "times_s");
    segmenter::validate_shots(s);
    return s;
}

segmenter::SegmentProposal segment_from_json(const json& j)
{
    segmenter::SegmentProposal s;
    s.video_id = req_string(j, "video_id");
    s.start_s = req_number(j, "start_s");
    s.end_s = req_number(j, "end_s");
    if (!(0 <= s.start_s && s.start_s < s.end_s))
        throw InvalidInput("segment must satisfy 0 <= start_s < end_s");
    s.boundary_score = opt_number(j, "boundary_score").value_or(0.0);
    if (j.contains("scores") && !j["scores"].is_null()) {
        if (!j["scores"].is_object())
            throw InvalidInput("field 'scores' must be an object");
        for (const auto& [k, v] : j["scores"].items()) {
            if (!v.is_number())
                throw InvalidInput("score '" + k + "' must be a number");
            const double d = v.get<double>();
            if (!(d >= 0.0 && d <= 1.0))
                throw InvalidInput("score '" + k + "' must lie in [0,1]");
            s.scores[k] = d;
        }
    }
    s.label = opt_string(j, "label");
    return s;
}

json to_json(const segmenter::SegmentProposal& s)
{
    json j{{"video_id", s.video_id},
           {"start_s", s.start_s},
           {"end_s", s.end_s},
           {"boundary_score", s.boundary_score},
           {"scores", s.scores}};
    if (s.label)
        j["label"] = *s.label;
    return j;
}

EvidenceRecord evidence_from_json(const json& j)
{
    EvidenceRecord r;
    r.video_id = req_string(j, "video_id");
    r.start_s = req_number(j, "start_s");
    r.end_s = req_number(j, "end_s");
    if (!(0 <= r.start_s && r.start_s < r.end_s))
        throw InvalidInput("evidence must satisfy 0 <= start_s < end_s");
    if ((r.evidence.asd_fraction = opt_number(j, "asd_fraction")))
        check_unit(*r.evidence.asd_fraction, "asd_fraction");
    if ((r.evidence.hoi_frame_fraction = opt_number(j, "hoi_frame_fraction")))
        check_unit(*r.evidence.hoi_frame_fraction, "hoi_frame_fraction");
    r.evidence.hand_confidences = opt_unit_array(j, "hand_confidences");
    r.evidence.asr_alignment_scores = opt_unit_array(j, "asr_alignment_scores");
    if (j.contains("pooled_feature") && !j["pooled_feature"].is_null())
        r.evidence.pooled_feature = number_array(j, "pooled_feature");
    return r;
}

json to_json(const ranker::RankRecord& r)
{
    json j{{"video_id", r.video_id}, {"start_s", r.start_s}, {"end_s", r.end_s},
           {"scores", r.scores},     {"kept", r.kept}};
    j["reason"] = r.reason.empty() ? json(nullptr) : json(r.reason);
    if (!r.error.empty())
        j["error"] = r.error;
    return j;
}

ranker::RelevanceModel relevance_model_from_json(const json& j)
{
    const auto d = req_int(j, "d");
    const auto h = req_int(j, "h");
    if (d < 1 || h < 1)
        throw InvalidInput("relevance model d and h must be positive");
    const auto& w1 = field(j, "W1");
    if (!w1.is_array() || static_cast<std::int64_t>(w1.size()) != h)
        throw InvalidInput("W1 must be an array of h rows");
    std::vector<double> flat;
    for (const auto& row : w1) {
        if (!row.is_array() || static_cast<std::int64_t>(row.size()) != d)
            throw InvalidInput("each W1 row must have d entries");
        for (const auto& x : row) {
            if (!x.is_number())
                throw InvalidInput("W1 contains a non-number");
            flat.push_back(x.get<double>());
        }
    }
    return ranker::RelevanceModel(static_cast<std::size_t>(d), static_cast<std::size_t>(h), std::move(flat),
                                  number_array(j, "b1"), number_array(j, "w2"), req_number(j, "b2"));
}

mcqbuild::MCQItem mcq_from_json(const json& j)
{
    mcqbuild::MCQItem m;
    m.qa_id = req_string(j, "qa_id");
    m.video_ref = opt_string(j, "video_ref").value_or("");
    m.question = req_string(j, "question");
    const auto& opts = field(j, "options");
    if (!opts.is_array())
        throw InvalidInput("field 'options' must be an array of strings");
    for (const auto& o : opts) {
        if (!o.is_string())
            throw InvalidInput("field 'options' must be an array of strings");
        m.options.push_back(o.get<std::string>());
    }
    m.answer_index = static_cast<int>(req_int(j, "answer_index"));
    m.question_type = opt_string(j, "question_type").value_or("");
    m.domain = opt_string(j, "domain").value_or("");
    if (j.contains("verified") && !j["verified"].is_null()) {
        if (!j["verified"].is_boolean())
            throw InvalidInput("field 'verified' must be a boolean");
        m.verified = j["verified"].get<bool>();
    }
    m.validate();
    return m;
}

json to_json(const mcqbuild::MCQItem& m)
{
    json j{{"qa_id", m.qa_id},
           {"video_ref", m.video_ref},
           {"question", m.question},
           {"options", m.options},
           {"answer_index", m.answer_index},
           {"question_type", m.question_type},
           {"domain", m.domain}};
    if (m.verified)
        j["verified"] = *m.verified;
    return j;
}

mcqbuild::BinaryProbe probe_from_json(const json& j)
{
    mcqbuild::BinaryProbe p;
    p.qa_id = req_string(j, "qa_id");
    const auto idx = req_int(j, "probe_index");
    if (idx < 0)
        throw InvalidInput("field 'probe_index' must be >= 0");
    p.probe_index = static_cast<int>(idx);
    p.option_a = req_string(j, "option_a");
    p.option_b = req_string(j, "option_b");
    if (p.option_a == p.option_b)
        throw InvalidInput("probe options must differ");
    const auto side = req_string(j, "correct_is");
    if (side != "A" && side != "B")
        throw InvalidInput("field 'correct_is' must be \"A\" or \"B\"");
    p.correct_is = side == "A" ? mcqbuild::Side::A : mcqbuild::Side::B;
    p.question = req_string(j, "question");
    p.video_ref = opt_string(j, "video_ref").value_or("");
    return p;
}

json to_json(const mcqbuild::BinaryProbe& p)
{
    return json{{"qa_id", p.qa_id},
                {"probe_index", p.probe_index},
                {"option_a", p.option_a},
                {"option_b", p.option_b},
                {"correct_is", p.correct_is == mcqbuild::Side::A ? "A" : "B"},
                {"question", p.question},
                {"video_ref", p.video_ref}};
}

SgqaItem sgqa_from_json(const json& j)
{
    SgqaItem s{req_string(j, "id"), req_string(j, "question"), req_string(j, "answer")};
    if (s.question.empty() || s.answer.empty())
        throw InvalidInput("question and answer must be non-empty");
    return s;
}

RcapItem rcap_from_json(const json& j)
{
    RcapItem r;
    r.id = req_string(j, "id");
    r.video_ref = opt_string(j, "video_ref").value_or("");
    r.num_frames = frames_of(j);
    r.start_frame = static_cast<int>(req_int(j, "start_frame"));
    r.end_frame = static_cast<int>(req_int(j, "end_frame"));
    if (!(0 <= r.start_frame && r.start_frame <= r.end_frame && r.end_frame < r.num_frames))
        throw InvalidInput("frames must satisfy 0 <= start_frame <= end_frame < num_frames");
    r.caption = req_string(j, "caption");
    if (r.caption.empty())
        throw InvalidInput("caption must be non-empty");
    r.color = opt_string(j, "color").value_or("red");
    return r;
}

RtlocItem rtloc_from_json(const json& j)
{
    RtlocItem r;
    r.id = req_string(j, "id");
    r.video_ref = opt_string(j, "video_ref").value_or("");
    r.event = req_string(j, "event");
    r.num_frames = frames_of(j);
    const auto s = req_int(j, "start_frame");
    const auto e = req_int(j, "end_frame");
    if (!(0 <= s && s <= e && e < r.num_frames))
        throw InvalidInput("frames must satisfy 0 <= start_frame <= end_frame < num_frames");
    r.gt = metrics::Interval{static_cast<double>(s), static_cast<double>(e), metrics::TimeUnit::frame_index};
    r.color = opt_string(j, "color").value_or("red");
    return r;
}

RdcapItem rdcap_from_json(const json& j)
{
    RdcapItem r;
    r.id = req_string(j, "id");
    r.video_ref = opt_string(j, "video_ref").value_or("");
    r.num_frames = frames_of(j);
    r.color = opt_string(j, "color").value_or("red");
    const auto& evs = field(j, "events");
    if (!evs.is_array() || evs.empty())
        throw InvalidInput("field 'events' must be a non-empty array");
    metrics::DenseCaptionTrack t;
    t.track_id = r.id;
    t.horizon = metrics::Interval{0, static_cast<double>(r.num_frames - 1), metrics::TimeUnit::frame_index};
    double prev_end = 0;
    for (std::size_t i = 0; i < evs.size(); ++i) {
        const auto& e = evs[i];
        metrics::CaptionEvent ev;
        ev.interval = metrics::Interval{req_number(e, "start"), req_number(e, "end"), metrics::TimeUnit::frame_index};
        if (!(0 <= ev.interval.start && ev.interval.start < ev.interval.end && ev.interval.end <= t.horizon.end))
            throw InvalidInput("events[" + std::to_string(i) + "] must satisfy 0 <= start < end <= num_frames-1");
        if (i > 0 && ev.interval.start < prev_end)
            throw InvalidInput("events[" + std::to_string(i) + "] overlaps or precedes the previous event");
        prev_end = ev.interval.end;
        ev.text = req_string(e, "text");
        if (e.contains("out_of_frame") && e["out_of_frame"].is_boolean())
            ev.out_of_frame = e["out_of_frame"].get<bool>();
        t.events.push_back(std::move(ev));
    }
    r.track = protocol::normalize_track(std::move(t));
    return r;
}

std::pair<std::string, overlay::BoxTrack> track_from_json(const json& j)
{
    overlay::BoxTrack t;
    const auto vid = req_string(j, "video_id");
    t.track_id = req_string(j, "track_id");
    const auto& c = field(j, "color");
    if (c.is_string()) {
        t.color = overlay::parse_color(c.get<std::string>());
    } else if (c.is_array() && c.size() == 3) {
        for (std::size_t i = 0; i < 3; ++i) {
            if (!c[i].is_number_integer() || c[i].get<int>() < 0 || c[i].get<int>() > 255)
                throw InvalidInput("color components must be integers in [0,255]");
            t.color[i] = static_cast<std::uint8_t>(c[i].get<int>());
        }
    } else {
        throw InvalidInput("field 'color' must be a name or an [r,g,b] triple");
    }
    const auto& boxes = field(j, "boxes");
    if (!boxes.is_object())
        throw InvalidInput("field 'boxes' must map frame index to [x0,y0,x1,y1]");
    for (const auto& [k, v] : boxes.items()) {
        std::int64_t idx = 0;
        try {
            std::size_t used = 0;
            idx = std::stoll(k, &used);
            if (used != k.size() || idx < 0)
                throw std::invalid_argument(k);
        } catch (const std::logic_error&) {
            throw InvalidInput("box key '" + k + "' is not a frame index");
        }
        if (!v.is_array() || v.size() != 4)
            throw InvalidInput("box for frame " + k + " must be [x0,y0,x1,y1]");
        std::array<int, 4> b{};
        for (std::size_t i = 0; i < 4; ++i) {
            if (!v[i].is_number_integer())
                throw InvalidInput("box for frame " + k + " must have integer pixel coordinates");
            b[i] = v[i].get<int>();
        }
        if (!(0 <= b[0] && b[0] < b[2] && 0 <= b[1] && b[1] < b[3]))
            throw InvalidInput("box for frame " + k + " must satisfy 0 <= x0 < x1 and 0 <= y0 < y1");
        t.boxes[idx] = overlay::Box{b[0], b[1], b[2], b[3]};
    }
    return {vid, std::move(t)};
}

Prediction prediction_from_json(const json& j)
{
    Prediction p;
    p.id = req_string(j, "id");
    const auto& v = field(j, "raw_text");
    if (!v.is_string())
        throw InvalidInput("field 'raw_text' must be a string");
    p.raw_text = v.get<std::string>();
    return p;
}

json to_json(const metrics::Interval& iv)
{
    return json::array({iv.start, iv.end});
}

json to_json(const metrics::DenseCaptionTrack& t)
{
    json evs = json::array();
    for (const auto& e : t.events)
        evs.push_back({{"start", e.interval.start},
                       {"end", e.interval.end},
                       {"text", e.text},
                       {"out_of_frame", e.out_of_frame}});
    return evs;
}

} // namespace plm::io
