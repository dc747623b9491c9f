#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plm/judge.hpp"

namespace plm::mcqbuild {

struct MCQItem {
    std::string qa_id;
    std::string video_ref;
    std::string question;
    std::vector<std::string> options;
    int answer_index = 0;
    std::string question_type;
    std::string domain;
    std::optional<bool> verified;

    void validate() const;
    bool operator==(const MCQItem&) const = default;
};

enum class Side { A, B };

/// Correct answer vs one distractor. question and video_ref are carried so a
/// probe can be prompted on its own.
struct BinaryProbe {
    std::string qa_id;
    int probe_index = 0;
    std::string option_a;
    std::string option_b;
    Side correct_is = Side::A;
    std::string question;
    std::string video_ref;

    std::string probe_id() const { return qa_id + "#" + std::to_string(probe_index); }
    bool operator==(const BinaryProbe&) const = default;
};

/// One probe per distractor, in option order. The correct answer's A/B slot
/// comes from a coin seeded by (seed, qa_id).
std::vector<BinaryProbe> expand_binary(const MCQItem& item, std::uint64_t seed);

enum class BlindStatus { dropped, kept, unparseable, unfiltered };
std::string_view to_string(BlindStatus s);

struct BlindRecord {
    std::string qa_id;
    BlindStatus status = BlindStatus::kept;
    std::optional<int> blind_answer;
    std::string raw;
    std::string error;
};

struct BlindFilterResult {
    std::vector<MCQItem> kept;
    std::vector<MCQItem> dropped;
    std::vector<BlindRecord> records; // one per input item, input order
};

judge::ChatRequest blind_request(const MCQItem& item);

/// Asks a text-only model each question with no video. Items it answers
/// correctly are dropped; unparseable answers and endpoint failures keep the
/// item and flag it.
BlindFilterResult blind_filter(std::span<const MCQItem> items, judge::ChatClient& text_only_client);

/// Undersamples each (question_type, domain) cell to ceil(smallest * slack).
/// Output keeps input order. Throws InvalidInput listing items without tags.
std::vector<MCQItem> balance(std::span<const MCQItem> items, std::uint64_t seed, double slack = 1.5);

} // namespace plm::mcqbuild
