#pragma once

#include <string>
#include <vector>

#include "engage/model.hpp"

namespace fixture {

/// Builds a frame from "Gaze/Y" style cells, one per student.
inline engage::BehaviorFrame frame(int second, const std::vector<std::string>& cells, bool tutor = false) {
    engage::BehaviorFrame f;
    f.second = second;
    f.tutor_speaking = tutor;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto slash = cells[i].find('/');
        f.students.push_back({i, *engage::parse_gaze(cells[i].substr(0, slash)), cells[i].substr(slash + 1) == "Y"});
    }
    return f;
}

inline engage::SessionTimeline timeline(const std::string& id, int n_students, std::vector<engage::BehaviorFrame> frames,
                                        bool with_tutor = true) {
    engage::SessionTimeline t;
    t.session_id = id;
    for (int i = 1; i <= n_students; ++i) t.participants.push_back({"S" + std::to_string(i), engage::Role::Student});
    if (with_tutor) t.participants.push_back({"T1", engage::Role::Tutor});
    for (std::size_t s = 0; s < frames.size(); ++s) frames[s].second = static_cast<int>(s);
    t.duration_s = static_cast<int>(frames.size());
    t.frames = std::move(frames);
    return t;
}

/// One student's gaze stream as a single-student-plus-filler timeline.
inline engage::SessionTimeline stream(const std::vector<engage::Gaze>& gaze) {
    std::vector<engage::BehaviorFrame> frames;
    for (auto g : gaze) {
        engage::BehaviorFrame f;
        f.students.push_back({0, g, false});
        f.students.push_back({1, engage::Gaze::Other, false});
        frames.push_back(f);
    }
    return timeline("stream", 2, std::move(frames), false);
}

}  // namespace fixture
