#include "engage/pipeline.hpp"

#include <algorithm>
#include <array>
#include <exception>
#include <string>

#include "engage/error.hpp"

namespace engage::pipeline {

void PipelineConfig::validate() const {
    if (window_s < 1 || window_s % 2 == 0) {
        throw SpecError("window_s must be an odd positive integer, got " + std::to_string(window_s));
    }
    if (itc_cooccurrence_window_s < 1) {
        throw SpecError("itc_cooccurrence_window_s must be positive");
    }
    if (rm_min_lookers < 2) throw SpecError("rm_min_lookers must be at least 2");
}

SessionTimeline smooth_gaze(const SessionTimeline& t, const PipelineConfig& cfg) {
    cfg.validate();
    SessionTimeline out = t;
    const int n = static_cast<int>(t.frames.size());
    if (n == 0) return out;
    const std::size_t students = t.frames.front().students.size();

    int lo_offset = -cfg.half_window();
    int hi_offset = cfg.half_window();
    if (cfg.alignment == WindowAlignment::Trailing) {
        lo_offset = -(cfg.window_s - 1);
        hi_offset = 0;
    }

    auto raw = [&](int s, std::size_t k) {
        return static_cast<std::size_t>(t.frames[static_cast<std::size_t>(s)].students[k].gaze);
    };

    for (std::size_t k = 0; k < students; ++k) {
        std::array<int, kGazeCount> counts{};
        // Current window is [lo, hi) over the clamped session range.
        int lo = 0;
        int hi = 0;
        std::size_t previous = kGazeCount;
        for (int s = 0; s < n; ++s) {
            const int want_lo = std::max(0, s + lo_offset);
            const int want_hi = std::min(n, s + hi_offset + 1);
            while (hi < want_hi) ++counts[raw(hi++, k)];
            while (lo < want_lo) --counts[raw(lo++, k)];

            const int best = *std::max_element(counts.begin(), counts.end());
            std::size_t chosen = kGazeCount;
            int tied = 0;
            for (std::size_t g = 0; g < kGazeCount; ++g) {
                if (counts[g] == best) {
                    ++tied;
                    if (chosen == kGazeCount) chosen = g;  // fixed category order
                }
            }
            if (tied > 1) {
                const std::size_t here = raw(s, k);
                if (previous < kGazeCount && counts[previous] == best) {
                    chosen = previous;
                } else if (counts[here] == best) {
                    chosen = here;
                }
            }
            out.frames[static_cast<std::size_t>(s)].students[k].gaze = static_cast<Gaze>(chosen);
            previous = chosen;
        }
    }
    return out;
}

Interaction classify_frame(const BehaviorFrame& frame, bool tutor_near, const PipelineConfig& cfg) {
    tutor_near = tutor_near || frame.tutor_speaking;

    bool any_speaking = false;
    bool speaker_gazes_tutor = false;
    bool all_speakers_laptop = true;
    bool listener_gazes_student = false;
    bool listener_gazes_laptop = false;
    bool anyone_gazes_student = false;
    bool anyone_gazes_tutor = false;
    int laptop_lookers = 0;

    for (const auto& st : frame.students) {
        anyone_gazes_student |= st.gaze == Gaze::Student;
        anyone_gazes_tutor |= st.gaze == Gaze::Tutor;
        laptop_lookers += st.gaze == Gaze::Laptop;
        if (st.speaking) {
            any_speaking = true;
            speaker_gazes_tutor |= st.gaze == Gaze::Tutor;
            all_speakers_laptop &= st.gaze == Gaze::Laptop;
        } else {
            listener_gazes_student |= st.gaze == Gaze::Student;
            listener_gazes_laptop |= st.gaze == Gaze::Laptop;
        }
    }

    if (any_speaking && (tutor_near || speaker_gazes_tutor)) return Interaction::ITC;
    if (frame.tutor_speaking && !any_speaking && anyone_gazes_tutor) return Interaction::TO;
    if (any_speaking) {
        if (all_speakers_laptop && listener_gazes_laptop) return Interaction::RF;
        if (listener_gazes_student) return Interaction::IPC;
        return Interaction::NC;
    }
    if (anyone_gazes_student) return Interaction::PO;
    if (laptop_lookers >= cfg.rm_min_lookers) return Interaction::RM;
    return Interaction::NC;
}

namespace {

bool tutor_spoke_near(const SessionTimeline& t, int s, int radius) {
    const int n = static_cast<int>(t.frames.size());
    for (int u = std::max(0, s - radius); u <= std::min(n - 1, s + radius); ++u) {
        if (t.frames[static_cast<std::size_t>(u)].tutor_speaking) return true;
    }
    return false;
}

enum class Cell : std::uint8_t { NA, Active, Semi, Passive, SemiIfSpeaker };

// [interaction][speaking][gaze], gaze in Student, Laptop, Tutor, Other order.
constexpr Cell A = Cell::Active, S = Cell::Semi, P = Cell::Passive, X = Cell::NA,
               SP = Cell::SemiIfSpeaker;
constexpr std::array<std::array<std::array<Cell, 4>, 2>, kInteractionCount> kTable{{
    /* IPC */ {{{S, P, P, P}, {A, A, X, A}}},
    /* RF  */ {{{P, S, P, P}, {X, A, X, X}}},
    /* PO  */ {{{S, P, P, P}, {X, X, X, X}}},
    /* RM  */ {{{P, S, P, P}, {X, X, X, X}}},
    /* ITC */ {{{SP, P, S, P}, {A, A, A, A}}},
    /* TO  */ {{{P, P, S, P}, {X, X, X, X}}},
    /* NC  */ {{{P, P, P, P}, {P, P, P, P}}},
}};

}  // namespace

Interaction classify_interaction(const SessionTimeline& smoothed, int s, const PipelineConfig& cfg) {
    const auto& frame = smoothed.frames.at(static_cast<std::size_t>(s));
    return classify_frame(frame, tutor_spoke_near(smoothed, s, cfg.itc_cooccurrence_window_s), cfg);
}

std::vector<Code> code_engagement(const BehaviorFrame& frame, Interaction interaction) {
    const bool student_speaking = frame.any_student_speaking();
    const auto& rows = kTable[static_cast<std::size_t>(interaction)];
    std::vector<Code> codes;
    codes.reserve(frame.students.size());
    for (const auto& st : frame.students) {
        switch (rows[st.speaking ? 1 : 0][static_cast<std::size_t>(st.gaze)]) {
            case Cell::Active: codes.push_back(Code::Active); break;
            case Cell::Semi: codes.push_back(Code::SemiActive); break;
            case Cell::Passive: codes.push_back(Code::Passive); break;
            case Cell::SemiIfSpeaker:
                codes.push_back(student_speaking ? Code::SemiActive : Code::Passive);
                break;
            case Cell::NA:
                throw ConsistencyError(std::string("N/A engagement cell reached: ") +
                                       std::string(to_string(interaction)) + ", " +
                                       (st.speaking ? "speaking" : "not speaking") + ", gaze " +
                                       std::string(to_string(st.gaze)));
        }
    }
    return codes;
}

SessionResult analyze_session(const SessionTimeline& t, const PipelineConfig& cfg) {
    SessionResult result;
    result.smoothed = smooth_gaze(t, cfg);
    const auto& frames = result.smoothed.frames;
    const int n = static_cast<int>(frames.size());
    const int radius = cfg.itc_cooccurrence_window_s;

    // prefix[i] = number of tutor-speaking seconds in [0, i)
    std::vector<int> prefix(static_cast<std::size_t>(n) + 1, 0);
    for (int s = 0; s < n; ++s) {
        prefix[static_cast<std::size_t>(s) + 1] =
            prefix[static_cast<std::size_t>(s)] + (frames[static_cast<std::size_t>(s)].tutor_speaking ? 1 : 0);
    }

    result.coded.reserve(frames.size());
    for (int s = 0; s < n; ++s) {
        const auto lo = static_cast<std::size_t>(std::max(0, s - radius));
        const auto hi = static_cast<std::size_t>(std::min(n, s + radius + 1));
        const auto& frame = frames[static_cast<std::size_t>(s)];
        const Interaction kind = classify_frame(frame, prefix[hi] > prefix[lo], cfg);
        try {
            result.coded.push_back({frame.second, kind, code_engagement(frame, kind)});
        } catch (const ConsistencyError& e) {
            throw ConsistencyError("session '" + t.session_id + "' second " + std::to_string(s) + ": " +
                                   e.what());
        }
    }
    return result;
}

std::vector<CodedFrame> process_session(const SessionTimeline& t, const PipelineConfig& cfg) {
    return analyze_session(t, cfg).coded;
}

std::vector<SessionResult> process_corpus(std::span<const SessionTimeline> sessions,
                                          const PipelineConfig& cfg) {
    cfg.validate();
    const auto n = static_cast<std::ptrdiff_t>(sessions.size());
    std::vector<SessionResult> results(sessions.size());
    std::vector<std::exception_ptr> errors(sessions.size());

#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        try {
            results[u] = analyze_session(sessions[u], cfg);
        } catch (...) {
            errors[u] = std::current_exception();
        }
    }

    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return results;
}

std::vector<SessionResult> process_corpus_serial(std::span<const SessionTimeline> sessions,
                                                 const PipelineConfig& cfg) {
    cfg.validate();
    std::vector<SessionResult> results;
    results.reserve(sessions.size());
    for (const auto& t : sessions) results.push_back(analyze_session(t, cfg));
    return results;
}

}  // namespace engage::pipeline
