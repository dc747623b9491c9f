#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "plm/metrics.hpp"

namespace plm::protocol {

enum class Task { fgqa, sgqa, rdcap, rcap, rtloc };

Task task_from_string(std::string_view name);
std::string_view to_string(Task t);

struct TaskPrompt {
    Task task = Task::fgqa;
    std::string template_id;
    std::string filled_text;
};

struct PromptFields {
    std::optional<std::string> question;
    std::vector<std::string> options;
    std::optional<std::string> event;
    std::optional<int> start_frame;
    std::optional<int> end_frame;
    int num_frames = 32;
    std::string color = "red";
    // Template ids appended after the prompt, separated by a space.
    std::vector<std::string> addenda;
};

TaskPrompt format_prompt(Task task, const PromptFields& fields);

/// First standalone capital letter (bare or parenthesised) that names one of
/// the n options. Strict mode only accepts a letter at the very start of the
/// trimmed answer.
std::optional<int> parse_option(std::string_view raw, int n_options, bool strict = false);

/// First "(a, b)" or "[a, b]" pair, otherwise the first two numbers anywhere.
/// Values are rounded, clamped to [0, max_frame] and ordered.
std::optional<metrics::Interval> parse_interval_answer(std::string_view raw, int max_frame);

/// One event per "[a, b]: text" line (optionally prefixed by "Frame"). The
/// result is sorted, overlaps are cut at the later event's start, and gaps
/// over [0, max_frame] become synthetic out-of-frame events. Returns nullopt
/// when no line parses.
std::optional<metrics::DenseCaptionTrack> parse_dense_captions(std::string_view raw, int max_frame);

// Canonical answer emitters; the parsers above invert them.
std::string emit_option(int index);
std::string emit_interval(const metrics::Interval& iv);
std::string emit_dense_captions(const metrics::DenseCaptionTrack& track);

/// Sorts events, truncates overlaps and fills gaps with out-of-frame events
/// so the track covers its horizon exactly.
metrics::DenseCaptionTrack normalize_track(metrics::DenseCaptionTrack track);

inline constexpr std::string_view kOutOfFrameText = "Out of frame";

} // namespace plm::protocol
