#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "plm/dataset.hpp"
#include "plm/error.hpp"
#include "plm/io.hpp"

using namespace plm::dataset;
namespace fs = std::filesystem;

namespace {

std::string write_file(const std::string& name, const std::string& content)
{
    const auto dir = fs::temp_directory_path() / "plm_dataset";
    fs::create_directories(dir);
    const auto p = (dir / name).string();
    std::ofstream(p, std::ios::binary) << content;
    return p;
}

std::vector<std::size_t> lines_of(const std::vector<Violation>& v)
{
    std::vector<std::size_t> out;
    for (const auto& x : v)
        out.push_back(x.line);
    return out;
}

} // namespace

TEST_CASE("schemas are listed")
{
    CHECK(schema_names().size() == 13);
    CHECK_THROWS_AS(validate_dataset(write_file("x.jsonl", ""), "nope"), plm::InvalidInput);
    CHECK_THROWS_AS(validate_dataset("/nonexistent/file.jsonl", "segments"), plm::IoError);
}

TEST_CASE("well-formed fixtures validate for every schema")
{
    const std::map<std::string, std::string> good{
        {"features", R"({"video_id": "v", "stride_s": 0.5, "dim": 2, "vectors": [[1, 0], [0, 1], [1, 1]]})"},
        {"shots", R"({"video_id": "v", "times_s": [1.5, 4.0]})"},
        {"segments", R"({"video_id": "v", "start_s": 0, "end_s": 4.5, "boundary_score": 0.3})"},
        {"evidence", R"({"video_id": "v", "start_s": 0, "end_s": 4.5, "asd_fraction": 0.2, "hand_confidences": [0.9]})"},
        {"fgqa", R"({"qa_id": "q", "question": "?", "options": ["a", "b"], "answer_index": 1, "question_type": "how", "domain": "cooking"})"},
        {"probes", R"({"qa_id": "q", "probe_index": 0, "option_a": "a", "option_b": "b", "correct_is": "B", "question": "?"})"},
        {"sgqa", R"({"id": "s", "question": "what?", "answer": "that"})"},
        {"rcap", R"({"id": "r", "start_frame": 3, "end_frame": 9, "caption": "walks"})"},
        {"rtloc", R"({"id": "t", "event": "walks", "start_frame": 3, "end_frame": 9, "num_frames": 16})"},
        {"rdcap", R"({"id": "d", "events": [{"start": 0, "end": 5, "text": "walks"}, {"start": 6, "end": 31, "text": "sits"}]})"},
        {"tracks", R"({"video_id": "v", "track_id": "a", "color": "blue", "boxes": {"0": [0, 0, 4, 4]}})"},
        {"predictions", R"({"id": "s", "raw_text": "B"})"},
    };
    for (const auto& [schema, line] : good) {
        CAPTURE(schema);
        const auto v = validate_dataset(write_file(schema + ".jsonl", line + "\n\n"), schema);
        CHECK(v.empty());
        if (!v.empty())
            MESSAGE(v[0].message);
    }
    CHECK(validate_dataset(write_file("rp.csv", "flops,error,group\n1e18,40,video\n"), "runpoints").empty());
}

TEST_CASE("violations carry line numbers")
{
    const auto path = write_file("seg.jsonl", R"({"video_id": "v", "start_s": 0, "end_s": 4}
{"video_id": "v", "start_s": 5, "end_s": 2}
{"video_id": "v", "start_s": 5}
not json
)");
    const auto v = validate_dataset(path, "segments");
    CHECK(lines_of(v) == std::vector<std::size_t>{2, 3, 4});
    CHECK(v[1].message.find("end_s") != std::string::npos);

    const auto dup = write_file("dup.jsonl", R"({"id": "a", "question": "q", "answer": "x"}
{"id": "a", "question": "q", "answer": "y"}
)");
    const auto d = validate_dataset(dup, "sgqa");
    REQUIRE(d.size() == 1);
    CHECK(d[0].line == 2);
    CHECK(d[0].message.find("line 1") != std::string::npos);

    const auto rp = write_file("rp_bad.csv", "flops,error,group\n1e18,40,video\n-1,40,video\n1e18,140,video\n1e18,x,v\n1e18,4\n");
    CHECK(lines_of(validate_dataset(rp, "runpoints")) == std::vector<std::size_t>{3, 4, 5, 6});

    const auto fg = write_file("fg_untagged.jsonl",
                               R"({"qa_id": "q", "question": "?", "options": ["a", "b"], "answer_index": 1})"
                               "\n");
    CHECK(validate_dataset(fg, "fgqa").size() == 1);
}

TEST_CASE("10k records with 3 planted defects give exactly 3 violations")
{
    std::string content;
    const std::set<int> bad{17, 4242, 9999};
    for (int i = 1; i <= 10000; ++i) {
        if (i == 17)
            content += R"({"video_id": "v", "start_s": 9, "end_s": 3})";
        else if (i == 4242)
            content += R"({"video_id": "v", "start_s": 1, "end_s": "x"})";
        else if (i == 9999)
            content += R"({"video_id": "v", "start_s": 1, "end_s": 2)";
        else
            content += R"({"video_id": "v)" + std::to_string(i) + R"(", "start_s": 1, "end_s": 2.5})";
        content += '\n';
    }
    const auto v = validate_dataset(write_file("big.jsonl", content), "segments");
    CHECK(lines_of(v) == std::vector<std::size_t>{17, 4242, 9999});
}

TEST_CASE("jsonl helpers")
{
    const auto p = write_file("rw.jsonl", "");
    plm::io::write_jsonl_atomic(p, {{{"a", 1}}, {{"b", 2}}});
    CHECK(plm::io::read_text(p) == "{\"a\":1}\n{\"b\":2}\n");
    CHECK(plm::io::read_jsonl(p).size() == 2);
    CHECK(!fs::exists(p + ".tmp"));
    std::ofstream(p, std::ios::app) << "{oops\n";
    try {
        plm::io::read_jsonl(p);
        FAIL("expected an error");
    } catch (const plm::InvalidInput& e) {
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
}
