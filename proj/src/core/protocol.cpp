#include "plm/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>

#include "plm/error.hpp"
#include "plm/templates.hpp"

namespace plm::protocol {
namespace {

using metrics::CaptionEvent;
using metrics::DenseCaptionTrack;
using metrics::Interval;
using metrics::TimeUnit;

bool is_word_byte(char c)
{
    const auto u = static_cast<unsigned char>(c);
    return u >= 0x80 || std::isalnum(u) != 0;
}

bool is_space(char c)
{
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && is_space(s.front()))
        s.remove_prefix(1);
    while (!s.empty() && is_space(s.back()))
        s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s)
{
    std::string out(s);
    for (char& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// Reads [-]digits[.digits] at pos. Advances pos past the number on success.
std::optional<double> read_number(std::string_view s, std::size_t& pos)
{
    std::size_t i = pos;
    if (i < s.size() && s[i] == '-')
        ++i;
    const std::size_t digits_begin = i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])))
        ++i;
    if (i == digits_begin)
        return std::nullopt;
    if (i + 1 < s.size() && s[i] == '.' && std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
        ++i;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])))
            ++i;
    }
    double v = 0;
    const auto r = std::from_chars(s.data() + pos, s.data() + i, v);
    if (r.ec == std::errc::result_out_of_range)
        v = s[pos] == '-' ? -1e300 : 1e300;
    else if (r.ec != std::errc())
        return std::nullopt;
    pos = i;
    return v;
}

void skip_spaces(std::string_view s, std::size_t& pos)
{
    while (pos < s.size() && is_space(s[pos]))
        ++pos;
}

// Matches "(a, b)" or "[a, b]" starting exactly at pos.
std::optional<std::pair<double, double>> read_pair(std::string_view s, std::size_t& pos)
{
    std::size_t i = pos;
    if (i >= s.size() || (s[i] != '(' && s[i] != '['))
        return std::nullopt;
    ++i;
    skip_spaces(s, i);
    auto a = read_number(s, i);
    if (!a)
        return std::nullopt;
    skip_spaces(s, i);
    if (i >= s.size() || s[i] != ',')
        return std::nullopt;
    ++i;
    skip_spaces(s, i);
    auto b = read_number(s, i);
    if (!b)
        return std::nullopt;
    skip_spaces(s, i);
    if (i >= s.size() || (s[i] != ')' && s[i] != ']'))
        return std::nullopt;
    pos = i + 1;
    return std::pair{*a, *b};
}

double to_frame(double v, int max_frame)
{
    return std::clamp(std::round(v), 0.0, static_cast<double>(max_frame));
}

std::string format_number(double v)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string letters(std::size_t i)
{
    return std::string(1, static_cast<char>('A' + i));
}

} // namespace

Task task_from_string(std::string_view name)
{
    const std::string n = lower(name);
    if (n == "fgqa")
        return Task::fgqa;
    if (n == "sgqa")
        return Task::sgqa;
    if (n == "rdcap")
        return Task::rdcap;
    if (n == "rcap")
        return Task::rcap;
    if (n == "rtloc")
        return Task::rtloc;
    throw InvalidInput("unknown task '" + std::string(name) + "'");
}

std::string_view to_string(Task t)
{
    switch (t) {
    case Task::fgqa:
        return "fgqa";
    case Task::sgqa:
        return "sgqa";
    case Task::rdcap:
        return "rdcap";
    case Task::rcap:
        return "rcap";
    case Task::rtloc:
        return "rtloc";
    }
    return "unknown";
}

TaskPrompt format_prompt(Task task, const PromptFields& f)
{
    if (f.num_frames < 1)
        throw InvalidInput("num_frames must be >= 1");
    std::map<std::string, std::string, std::less<>> v;
    v["num_frames"] = std::to_string(f.num_frames);
    v["last_frame"] = std::to_string(f.num_frames - 1);
    v["color"] = f.color;
    if (f.question)
        v["question"] = *f.question;
    if (f.event)
        v["event"] = *f.event;
    if (f.start_frame)
        v["start_frame"] = std::to_string(*f.start_frame);
    if (f.end_frame)
        v["end_frame"] = std::to_string(*f.end_frame);

    if (task == Task::fgqa) {
        if (f.options.size() < 2)
            throw InvalidInput("missing value for placeholder 'options' (need at least 2 options)");
        if (f.options.size() > 26)
            throw InvalidInput("at most 26 options can be lettered");
        std::string opts;
        for (std::size_t i = 0; i < f.options.size(); ++i) {
            if (i)
                opts += '\n';
            opts += "(" + letters(i) + ") " + f.options[i];
        }
        v["options"] = std::move(opts);
    }

    TaskPrompt p;
    p.task = task;
    p.template_id = std::string(to_string(task));
    p.filled_text = templates::fill(templates::get(p.template_id), v);
    for (const auto& add : f.addenda) {
        p.filled_text += ' ';
        p.filled_text += templates::get(add);
        p.template_id += "+" + add;
    }
    return p;
}

std::optional<int> parse_option(std::string_view raw, int n_options, bool strict)
{
    if (n_options < 2)
        return std::nullopt;
    auto candidate_at = [&](std::size_t i) -> std::optional<int> {
        const char c = raw[i];
        if (c < 'A' || c > 'Z')
            return std::nullopt;
        if (i > 0 && is_word_byte(raw[i - 1]))
            return std::nullopt;
        if (i + 1 < raw.size() && is_word_byte(raw[i + 1]))
            return std::nullopt;
        const int idx = c - 'A';
        if (idx >= n_options)
            return std::nullopt;
        return idx;
    };
    if (strict) {
        std::size_t i = 0;
        skip_spaces(raw, i);
        if (i < raw.size() && raw[i] == '(') {
            if (i + 2 < raw.size() && raw[i + 2] == ')')
                return candidate_at(i + 1);
            return std::nullopt;
        }
        return i < raw.size() ? candidate_at(i) : std::nullopt;
    }
    for (std::size_t i = 0; i < raw.size(); ++i)
        if (auto idx = candidate_at(i))
            return idx;
    return std::nullopt;
}

std::optional<Interval> parse_interval_answer(std::string_view raw, int max_frame)
{
    if (max_frame < 1)
        return std::nullopt;
    std::optional<std::pair<double, double>> pair;
    for (std::size_t i = 0; i < raw.size() && !pair; ++i) {
        std::size_t pos = i;
        pair = read_pair(raw, pos);
    }
    if (!pair) {
        std::vector<double> nums;
        for (std::size_t i = 0; i < raw.size() && nums.size() < 2;) {
            const bool starts = std::isdigit(static_cast<unsigned char>(raw[i])) ||
                                (raw[i] == '-' && (i == 0 || !is_word_byte(raw[i - 1])) && i + 1 < raw.size() &&
                                 std::isdigit(static_cast<unsigned char>(raw[i + 1])));
            if (!starts) {
                ++i;
                continue;
            }
            std::size_t pos = i;
            if (auto v = read_number(raw, pos))
                nums.push_back(*v);
            i = std::max(pos, i + 1);
        }
        if (nums.size() < 2)
            return std::nullopt;
        pair = std::pair{nums[0], nums[1]};
    }
    double a = to_frame(pair->first, max_frame);
    double b = to_frame(pair->second, max_frame);
    if (a > b)
        std::swap(a, b);
    return Interval{a, b, TimeUnit::frame_index};
}

DenseCaptionTrack normalize_track(DenseCaptionTrack track)
{
    auto& ev = track.events;
    std::stable_sort(ev.begin(), ev.end(), [](const CaptionEvent& x, const CaptionEvent& y) {
        if (x.interval.start != y.interval.start)
            return x.interval.start < y.interval.start;
        return x.interval.end < y.interval.end;
    });
    for (std::size_t i = 0; i + 1 < ev.size(); ++i)
        if (ev[i].interval.end > ev[i + 1].interval.start)
            ev[i].interval.end = ev[i + 1].interval.start;
    std::erase_if(ev, [](const CaptionEvent& e) { return !(e.interval.end > e.interval.start); });

    std::vector<CaptionEvent> filled;
    double cursor = track.horizon.start;
    auto gap = [&](double from, double to) {
        CaptionEvent g;
        g.interval = Interval{from, to, track.horizon.unit};
        g.text = std::string(kOutOfFrameText);
        g.out_of_frame = true;
        filled.push_back(std::move(g));
    };
    for (auto& e : ev) {
        if (e.interval.start > cursor)
            gap(cursor, e.interval.start);
        cursor = std::max(cursor, e.interval.end);
        filled.push_back(std::move(e));
    }
    if (cursor < track.horizon.end)
        gap(cursor, track.horizon.end);
    track.events = std::move(filled);
    return track;
}

std::optional<DenseCaptionTrack> parse_dense_captions(std::string_view raw, int max_frame)
{
    if (max_frame < 1)
        return std::nullopt;
    DenseCaptionTrack track;
    track.horizon = Interval{0, static_cast<double>(max_frame), TimeUnit::frame_index};
    std::size_t parsed = 0;

    std::size_t line_start = 0;
    while (line_start <= raw.size()) {
        std::size_t nl = raw.find('\n', line_start);
        if (nl == std::string_view::npos)
            nl = raw.size();
        std::string_view line = trim(raw.substr(line_start, nl - line_start));
        line_start = nl + 1;

        if (line.size() >= 5 && lower(line.substr(0, 5)) == "frame") {
            line.remove_prefix(5);
            line = trim(line);
        }
        std::size_t pos = 0;
        auto pair = read_pair(line, pos);
        if (!pair)
            continue;
        skip_spaces(line, pos);
        if (pos >= line.size() || line[pos] != ':')
            continue;
        const std::string_view text = trim(line.substr(pos + 1));

        double a = to_frame(pair->first, max_frame);
        double b = to_frame(pair->second, max_frame);
        if (a > b)
            std::swap(a, b);
        CaptionEvent e;
        e.interval = Interval{a, b, TimeUnit::frame_index};
        e.text = std::string(text);
        e.out_of_frame = lower(text).find("out of frame") != std::string::npos;
        track.events.push_back(std::move(e));
        ++parsed;
    }
    if (parsed == 0)
        return std::nullopt;
    return normalize_track(std::move(track));
}

std::string emit_option(int index)
{
    if (index < 0 || index >= 26)
        throw InvalidInput("option index out of range");
    return "(" + letters(static_cast<std::size_t>(index)) + ")";
}

std::string emit_interval(const Interval& iv)
{
    return "(" + format_number(iv.start) + ", " + format_number(iv.end) + ")";
}

std::string emit_dense_captions(const DenseCaptionTrack& track)
{
    std::string out;
    for (std::size_t i = 0; i < track.events.size(); ++i) {
        const auto& e = track.events[i];
        std::string text = e.out_of_frame ? std::string(kOutOfFrameText) : e.text;
        std::replace(text.begin(), text.end(), '\n', ' ');
        if (i)
            out += '\n';
        out += "[" + format_number(e.interval.start) + ", " + format_number(e.interval.end) + "]: ";
        out += trim(text);
    }
    return out;
}

} // namespace plm::protocol
