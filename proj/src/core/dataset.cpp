#include "plm/dataset.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>

#include "plm/error.hpp"
#include "plm/io.hpp"
#include "plm/scaling.hpp"

namespace plm::dataset {
namespace {

using io::json;
using Checker = std::function<void(const json&)>;

// Record-level checks reuse the loaders, which enforce the type invariants.
const std::map<std::string, Checker, std::less<>>& checkers()
{
    static const std::map<std::string, Checker, std::less<>> m{
        {"features", [](const json& j) { io::features_from_json(j); }},
        {"shots", [](const json& j) { io::shots_from_json(j); }},
        {"segments", [](const json& j) { io::segment_from_json(j); }},
        {"evidence", [](const json& j) { io::evidence_from_json(j); }},
        {"fgqa",
         [](const json& j) {
             const auto m = io::mcq_from_json(j);
             if (m.question_type.empty() || m.domain.empty())
                 throw InvalidInput("question_type and domain tags are required");
         }},
        {"probes", [](const json& j) { io::probe_from_json(j); }},
        {"sgqa", [](const json& j) { io::sgqa_from_json(j); }},
        {"rcap", [](const json& j) { io::rcap_from_json(j); }},
        {"rtloc", [](const json& j) { io::rtloc_from_json(j); }},
        {"rdcap", [](const json& j) { io::rdcap_from_json(j); }},
        {"tracks", [](const json& j) { io::track_from_json(j); }},
        {"predictions", [](const json& j) { io::prediction_from_json(j); }},
    };
    return m;
}

// Field that must be unique across the file, per schema.
const char* key_field(std::string_view schema)
{
    if (schema == "fgqa")
        return "qa_id";
    if (schema == "sgqa" || schema == "rcap" || schema == "rtloc" || schema == "rdcap" || schema == "predictions")
        return "id";
    if (schema == "features" || schema == "shots")
        return "video_id";
    return nullptr;
}

std::vector<Violation> validate_runpoints(const std::string& path)
{
    std::vector<Violation> out;
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (lineno == 1 && line.rfind("flops", 0) == 0)
            continue;
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
        if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) {
            out.push_back({lineno, "expected 3 columns flops,error,group"});
            continue;
        }
        try {
            std::size_t used = 0;
            const auto fs = line.substr(0, c1);
            const auto es = line.substr(c1 + 1, c2 - c1 - 1);
            const double flops = std::stod(fs, &used);
            if (used != fs.size())
                throw std::invalid_argument(fs);
            const double err = std::stod(es, &used);
            if (used != es.size())
                throw std::invalid_argument(es);
            if (!(flops > 0) || !std::isfinite(flops))
                out.push_back({lineno, "flops must be positive"});
            else if (!(err > 0 && err <= 100))
                out.push_back({lineno, "error must lie in (0, 100]"});
            else if (c2 + 1 >= line.size())
                out.push_back({lineno, "group must be non-empty"});
        } catch (const std::logic_error&) {
            out.push_back({lineno, "non-numeric flops or error"});
        }
    }
    return out;
}

} // namespace

const std::vector<std::string>& schema_names()
{
    static const std::vector<std::string> names{"features", "shots",  "segments", "evidence", "fgqa",   "probes",
                                                "sgqa",     "rcap",   "rtloc",    "rdcap",    "tracks", "runpoints",
                                                "predictions"};
    return names;
}

std::vector<Violation> validate_dataset(const std::string& path, std::string_view schema_name)
{
    if (schema_name == "runpoints")
        return validate_runpoints(path);
    const auto& table = checkers();
    auto it = table.find(schema_name);
    if (it == table.end())
        throw InvalidInput("unknown schema '" + std::string(schema_name) + "'");

    std::vector<Violation> out;
    const char* key = key_field(schema_name);
    std::map<std::string, std::size_t> seen;
    std::set<std::string> probe_ids;
    io::for_each_jsonl(
        path,
        [&](std::size_t line, const json& j) {
            try {
                it->second(j);
            } catch (const InvalidInput& e) {
                out.push_back({line, e.what()});
                return;
            }
            std::string k;
            if (key)
                k = j[key].get<std::string>();
            else if (schema_name == "probes")
                k = j["qa_id"].get<std::string>() + "#" + std::to_string(j["probe_index"].get<std::int64_t>());
            else if (schema_name == "tracks")
                k = j["video_id"].get<std::string>() + "/" + j["track_id"].get<std::string>();
            if (!k.empty()) {
                auto [pos, inserted] = seen.try_emplace(k, line);
                if (!inserted)
                    out.push_back({line, "duplicate key '" + k + "' (first seen on line " +
                                             std::to_string(pos->second) + ")"});
            }
        },
        [&](std::size_t line, const std::string& msg) { out.push_back({line, msg}); });
    return out;
}

} // namespace plm::dataset
