#include "plm/mcqbuild.hpp"

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "plm/error.hpp"
#include "plm/hash.hpp"
#include "plm/protocol.hpp"

namespace plm::mcqbuild {

void MCQItem::validate() const
{
    if (qa_id.empty())
        throw InvalidInput("MCQ item without qa_id");
    if (options.size() < 2)
        throw InvalidInput("item " + qa_id + ": needs at least 2 options");
    if (answer_index < 0 || static_cast<std::size_t>(answer_index) >= options.size())
        throw InvalidInput("item " + qa_id + ": answer_index out of range");
    std::set<std::string> distinct(options.begin(), options.end());
    if (distinct.size() != options.size())
        throw InvalidInput("item " + qa_id + ": options are not pairwise distinct");
}

std::vector<BinaryProbe> expand_binary(const MCQItem& item, std::uint64_t seed)
{
    item.validate();
    std::mt19937_64 gen(sha256_u64(std::to_string(seed) + '\x1f' + item.qa_id));
    const auto& correct = item.options[static_cast<std::size_t>(item.answer_index)];
    std::vector<BinaryProbe> probes;
    int k = 0;
    for (std::size_t i = 0; i < item.options.size(); ++i) {
        if (static_cast<int>(i) == item.answer_index)
            continue;
        BinaryProbe p;
        p.qa_id = item.qa_id;
        p.probe_index = k++;
        p.question = item.question;
        p.video_ref = item.video_ref;
        const bool correct_first = (gen() >> 63) == 0;
        p.correct_is = correct_first ? Side::A : Side::B;
        p.option_a = correct_first ? correct : item.options[i];
        p.option_b = correct_first ? item.options[i] : correct;
        probes.push_back(std::move(p));
    }
    return probes;
}

std::string_view to_string(BlindStatus s)
{
    switch (s) {
    case BlindStatus::dropped:
        return "dropped";
    case BlindStatus::kept:
        return "kept";
    case BlindStatus::unparseable:
        return "unparseable";
    case BlindStatus::unfiltered:
        return "unfiltered";
    }
    return "unknown";
}

judge::ChatRequest blind_request(const MCQItem& item)
{
    protocol::PromptFields f;
    f.question = item.question;
    f.options = item.options;
    judge::ChatRequest r;
    r.template_id = "fgqa_blind";
    r.messages.push_back({"user", protocol::format_prompt(protocol::Task::fgqa, f).filled_text});
    return r;
}

BlindFilterResult blind_filter(std::span<const MCQItem> items, judge::ChatClient& client)
{
    std::vector<judge::ChatRequest> reqs;
    for (const auto& it : items) {
        it.validate();
        reqs.push_back(blind_request(it));
    }
    const auto outcomes = client.ask_many(reqs);

    BlindFilterResult res;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& item = items[i];
        const auto& o = outcomes[i];
        BlindRecord rec;
        rec.qa_id = item.qa_id;
        rec.raw = o.raw;
        if (!o.ok) {
            rec.status = BlindStatus::unfiltered;
            rec.error = o.error;
        } else if (auto ans = protocol::parse_option(o.raw, static_cast<int>(item.options.size()))) {
            rec.blind_answer = *ans;
            rec.status = *ans == item.answer_index ? BlindStatus::dropped : BlindStatus::kept;
        } else {
            rec.status = BlindStatus::unparseable;
        }
        if (rec.status == BlindStatus::dropped)
            res.dropped.push_back(item);
        else
            res.kept.push_back(item);
        res.records.push_back(std::move(rec));
    }
    return res;
}

std::vector<MCQItem> balance(std::span<const MCQItem> items, std::uint64_t seed, double slack)
{
    if (!(slack >= 1.0) || !std::isfinite(slack))
        throw InvalidInput("balance slack factor must be a finite value >= 1");
    std::string missing;
    std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> cells;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].question_type.empty() || items[i].domain.empty()) {
            missing += (missing.empty() ? "" : ", ") + items[i].qa_id;
            continue;
        }
        cells[{items[i].question_type, items[i].domain}].push_back(i);
    }
    if (!missing.empty())
        throw InvalidInput("items missing question_type/domain tags: " + missing);
    if (cells.empty())
        return {};

    std::size_t smallest = items.size();
    for (const auto& [k, v] : cells)
        smallest = std::min(smallest, v.size());
    const auto cap = static_cast<std::size_t>(std::ceil(static_cast<double>(smallest) * slack - 1e-9));

    std::vector<bool> keep(items.size(), false);
    for (auto& [key, idx] : cells) {
        if (idx.size() > cap) {
            std::mt19937_64 gen(sha256_u64(std::to_string(seed) + '\x1f' + key.first + '\x1f' + key.second));
            // Partial Fisher-Yates: the first `cap` slots become the sample.
            for (std::size_t i = 0; i < cap; ++i) {
                const std::size_t j = i + static_cast<std::size_t>(gen() % (idx.size() - i));
                std::swap(idx[i], idx[j]);
            }
            idx.resize(cap);
        }
        for (std::size_t i : idx)
            keep[i] = true;
    }
    std::vector<MCQItem> out;
    for (std::size_t i = 0; i < items.size(); ++i)
        if (keep[i])
            out.push_back(items[i]);
    return out;
}

} // namespace plm::mcqbuild
