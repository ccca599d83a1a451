#include "engage/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace engage {

namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(std::string_view s, const std::array<std::pair<std::string_view, E>, N>& table) {
    for (const auto& [name, value] : table) {
        if (name == s) return value;
    }
    return std::nullopt;
}

constexpr std::array<std::pair<std::string_view, Role>, 2> kRoleNames{{
    {"Student", Role::Student}, {"Tutor", Role::Tutor}}};
constexpr std::array<std::pair<std::string_view, Gaze>, 4> kGazeNames{{
    {"Student", Gaze::Student}, {"Laptop", Gaze::Laptop}, {"Tutor", Gaze::Tutor}, {"Other", Gaze::Other}}};
constexpr std::array<std::pair<std::string_view, Interaction>, 7> kInteractionNames{{
    {"IPC", Interaction::IPC}, {"RF", Interaction::RF}, {"PO", Interaction::PO},
    {"RM", Interaction::RM}, {"ITC", Interaction::ITC}, {"TO", Interaction::TO},
    {"NC", Interaction::NC}}};
constexpr std::array<std::pair<std::string_view, Code>, 3> kCodeNames{{
    {"Active", Code::Active}, {"SemiActive", Code::SemiActive}, {"Passive", Code::Passive}}};

}  // namespace

std::string_view to_string(Role r) noexcept { return kRoleNames[static_cast<std::size_t>(r)].first; }
std::string_view to_string(Gaze g) noexcept { return kGazeNames[static_cast<std::size_t>(g)].first; }
std::string_view to_string(Interaction i) noexcept {
    return kInteractionNames[static_cast<std::size_t>(i)].first;
}
std::string_view to_string(Code c) noexcept { return kCodeNames[static_cast<std::size_t>(c)].first; }

std::optional<Role> parse_role(std::string_view s) noexcept { return lookup(s, kRoleNames); }
std::optional<Gaze> parse_gaze(std::string_view s) noexcept { return lookup(s, kGazeNames); }
std::optional<Interaction> parse_interaction(std::string_view s) noexcept {
    return lookup(s, kInteractionNames);
}
std::optional<Code> parse_code(std::string_view s) noexcept { return lookup(s, kCodeNames); }

bool BehaviorFrame::any_student_speaking() const noexcept {
    return std::any_of(students.begin(), students.end(),
                       [](const StudentState& s) { return s.speaking; });
}

std::vector<std::string> SessionTimeline::student_ids() const {
    std::vector<std::string> ids;
    for (const auto& p : participants) {
        if (p.role == Role::Student) ids.push_back(p.id);
    }
    return ids;
}

std::size_t SessionTimeline::student_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(
        participants.begin(), participants.end(),
        [](const Participant& p) { return p.role == Role::Student; }));
}

std::optional<std::size_t> SessionTimeline::student_index(std::string_view id) const noexcept {
    std::size_t k = 0;
    for (const auto& p : participants) {
        if (p.role != Role::Student) continue;
        if (p.id == id) return k;
        ++k;
    }
    return std::nullopt;
}

std::vector<Violation> validate_timeline(const SessionTimeline& t) {
    std::vector<Violation> out;

    std::set<std::string> seen;
    for (const auto& p : t.participants) {
        if (p.id.empty()) out.push_back({std::nullopt, "participants", "empty participant id"});
        if (!seen.insert(p.id).second) {
            out.push_back({std::nullopt, "participants", "duplicate participant id '" + p.id + "'"});
        }
    }
    const auto ids = t.student_ids();
    if (ids.size() < 2) {
        out.push_back({std::nullopt, "participants",
                       "session needs at least 2 students, has " + std::to_string(ids.size())});
    }
    if (t.duration_s != static_cast<int>(t.frames.size())) {
        out.push_back({std::nullopt, "duration_s",
                       "duration_s " + std::to_string(t.duration_s) + " != frame count " +
                           std::to_string(t.frames.size())});
    }

    for (std::size_t f = 0; f < t.frames.size(); ++f) {
        const auto& frame = t.frames[f];
        const int fi = static_cast<int>(f);
        if (frame.second != fi) {
            out.push_back({fi, "second",
                           "non-contiguous seconds: expected " + std::to_string(fi) + ", got " +
                               std::to_string(frame.second)});
        }
        std::vector<int> count(ids.size(), 0);
        bool ordered = true;
        for (std::size_t k = 0; k < frame.students.size(); ++k) {
            const auto idx = frame.students[k].student;
            if (idx >= ids.size()) {
                out.push_back({fi, "students", "unknown student index " + std::to_string(idx)});
                continue;
            }
            ++count[idx];
            if (idx != k) ordered = false;
        }
        bool complete = true;
        for (std::size_t s = 0; s < ids.size(); ++s) {
            if (count[s] == 0) {
                out.push_back({fi, "students", "missing participant '" + ids[s] + "'"});
                complete = false;
            } else if (count[s] > 1) {
                out.push_back({fi, "students", "duplicate participant '" + ids[s] + "'"});
                complete = false;
            }
        }
        if (complete && !ordered) {
            out.push_back({fi, "students", "students not in roster order"});
        }
    }
    return out;
}

std::vector<Violation> validate_segments(const std::vector<SpeechSegment>& segments) {
    std::vector<Violation> out;
    std::map<std::string, std::vector<std::pair<double, double>>> by_speaker;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& s = segments[i];
        if (!(s.end > s.start)) {
            out.push_back({static_cast<int>(i), "end",
                           "segment " + std::to_string(i) + " of '" + s.speaker_label +
                               "' has end <= start"});
        }
        if (s.start < 0.0 || !std::isfinite(s.start) || !std::isfinite(s.end)) {
            out.push_back({static_cast<int>(i), "start",
                           "segment " + std::to_string(i) + " has a negative or non-finite time"});
        }
        by_speaker[s.speaker_label].emplace_back(s.start, s.end);
    }
    for (auto& [label, spans] : by_speaker) {
        std::sort(spans.begin(), spans.end());
        for (std::size_t i = 1; i < spans.size(); ++i) {
            if (spans[i].first < spans[i - 1].second) {
                out.push_back({std::nullopt, "speaker_label",
                               "overlapping segments for speaker '" + label + "'"});
                break;
            }
        }
    }
    return out;
}

std::vector<Violation> validate_profile(const EngagementProfile& p, double tol) {
    std::vector<Violation> out;
    for (double v : p.as_point()) {
        if (!(v >= 0.0) || v > 1.0) {
            out.push_back({std::nullopt, "freq", "component outside [0,1] for '" + p.participant + "'"});
            break;
        }
    }
    const double sum = p.freq_active + p.freq_semi + p.freq_passive;
    if (std::abs(sum - 1.0) > tol) {
        out.push_back({std::nullopt, "freq", "frequencies of '" + p.participant + "' sum to " +
                                                 std::to_string(sum)});
    }
    return out;
}

std::vector<std::string> plausibility_warnings(const SessionTimeline& t, DurationBand band) {
    std::vector<std::string> out;
    if (t.duration_s < band.min_s || t.duration_s > band.max_s) {
        out.push_back("session '" + t.session_id + "' duration " + std::to_string(t.duration_s) +
                      " s outside plausible range [" + std::to_string(band.min_s) + ", " +
                      std::to_string(band.max_s) + "]");
    }
    return out;
}

}  // namespace engage
