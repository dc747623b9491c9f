#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "plm/mcqbuild.hpp"
#include "plm/metrics.hpp"
#include "plm/overlay.hpp"
#include "plm/ranker.hpp"
#include "plm/segmenter.hpp"

namespace plm::io {

using nlohmann::json;

/// Calls fn(line_number, record) for every non-blank line. Malformed JSON is
/// reported through on_error when given, otherwise thrown as InvalidInput.
void for_each_jsonl(const std::string& path, const std::function<void(std::size_t, const json&)>& fn,
                    const std::function<void(std::size_t, const std::string&)>& on_error = {});

std::vector<json> read_jsonl(const std::string& path);

/// Writes to a sibling temp file, then renames over `path`.
void write_text_atomic(const std::string& path, const std::string& content);
void write_jsonl_atomic(const std::string& path, const std::vector<json>& records);

std::string read_text(const std::string& path);

// Field accessors; all throw InvalidInput naming the field.
std::string req_string(const json& j, const char* key);
std::optional<std::string> opt_string(const json& j, const char* key);
double req_number(const json& j, const char* key);
std::optional<double> opt_number(const json& j, const char* key);
std::int64_t req_int(const json& j, const char* key);
std::vector<double> number_array(const json& j, const char* key);

// Record conversions. The from_* functions check the type invariants.
segmenter::FeatureSeries features_from_json(const json& j);
segmenter::ShotBoundaryList shots_from_json(const json& j);
segmenter::SegmentProposal segment_from_json(const json& j);
json to_json(const segmenter::SegmentProposal& s);

struct EvidenceRecord {
    std::string video_id;
    double start_s = 0;
    double end_s = 0;
    ranker::SegmentEvidence evidence;
};
EvidenceRecord evidence_from_json(const json& j);
json to_json(const ranker::RankRecord& r);

ranker::RelevanceModel relevance_model_from_json(const json& j);

mcqbuild::MCQItem mcq_from_json(const json& j);
json to_json(const mcqbuild::MCQItem& m);
mcqbuild::BinaryProbe probe_from_json(const json& j);
json to_json(const mcqbuild::BinaryProbe& p);

struct SgqaItem {
    std::string id;
    std::string question;
    std::string answer;
};
SgqaItem sgqa_from_json(const json& j);

struct RcapItem {
    std::string id;
    std::string video_ref;
    int start_frame = 0;
    int end_frame = 0;
    std::string caption;
    int num_frames = 32;
    std::string color = "red";
};
RcapItem rcap_from_json(const json& j);

struct RtlocItem {
    std::string id;
    std::string video_ref;
    std::string event;
    metrics::Interval gt;
    int num_frames = 32;
    std::string color = "red";
};
RtlocItem rtloc_from_json(const json& j);

struct RdcapItem {
    std::string id;
    std::string video_ref;
    metrics::DenseCaptionTrack track; // normalised: gaps filled as out-of-frame
    int num_frames = 32;
    std::string color = "red";
};
RdcapItem rdcap_from_json(const json& j);

std::pair<std::string, overlay::BoxTrack> track_from_json(const json& j);

struct Prediction {
    std::string id;
    std::string raw_text;
};
Prediction prediction_from_json(const json& j);

json to_json(const metrics::Interval& iv);
json to_json(const metrics::DenseCaptionTrack& t);

} // namespace plm::io
