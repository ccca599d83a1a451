#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace engage {

enum class Role : std::uint8_t { Student, Tutor };

// Declaration order is the smoothing tie-break order.
enum class Gaze : std::uint8_t { Student, Laptop, Tutor, Other };
inline constexpr std::size_t kGazeCount = 4;
inline constexpr std::array<Gaze, kGazeCount> kAllGazes{Gaze::Student, Gaze::Laptop, Gaze::Tutor,
                                                        Gaze::Other};

enum class Interaction : std::uint8_t { IPC, RF, PO, RM, ITC, TO, NC };
inline constexpr std::size_t kInteractionCount = 7;
inline constexpr std::array<Interaction, kInteractionCount> kAllInteractions{
    Interaction::IPC, Interaction::RF, Interaction::PO, Interaction::RM,
    Interaction::ITC, Interaction::TO, Interaction::NC};

enum class Code : std::uint8_t { Active, SemiActive, Passive };
inline constexpr std::size_t kCodeCount = 3;

std::string_view to_string(Role r) noexcept;
std::string_view to_string(Gaze g) noexcept;
std::string_view to_string(Interaction i) noexcept;
std::string_view to_string(Code c) noexcept;

std::optional<Role> parse_role(std::string_view s) noexcept;
std::optional<Gaze> parse_gaze(std::string_view s) noexcept;
std::optional<Interaction> parse_interaction(std::string_view s) noexcept;
std::optional<Code> parse_code(std::string_view s) noexcept;

struct Participant {
    std::string id;
    Role role = Role::Student;

    friend bool operator==(const Participant&, const Participant&) = default;
};

struct SpeechSegment {
    std::string speaker_label;
    double start = 0.0;
    double end = 0.0;

    friend bool operator==(const SpeechSegment&, const SpeechSegment&) = default;
};

/// One student's behaviour in one second. `student` indexes the session's
/// student list (participants with Role::Student, in roster order).
struct StudentState {
    std::size_t student = 0;
    Gaze gaze = Gaze::Other;
    bool speaking = false;

    friend bool operator==(const StudentState&, const StudentState&) = default;
};

struct BehaviorFrame {
    int second = 0;
    std::vector<StudentState> students;
    bool tutor_speaking = false;

    bool any_student_speaking() const noexcept;

    friend bool operator==(const BehaviorFrame&, const BehaviorFrame&) = default;
};

struct SessionTimeline {
    std::string session_id;
    std::vector<Participant> participants;
    std::vector<BehaviorFrame> frames;
    int duration_s = 0;

    /// Student participants in roster order; frame entries index into this.
    std::vector<std::string> student_ids() const;
    std::size_t student_count() const noexcept;
    std::optional<std::size_t> student_index(std::string_view id) const noexcept;

    friend bool operator==(const SessionTimeline&, const SessionTimeline&) = default;
};

struct EngagementProfile {
    std::string participant;
    std::string session_id;
    double freq_active = 0.0;
    double freq_semi = 0.0;
    double freq_passive = 0.0;

    std::array<double, 3> as_point() const noexcept { return {freq_active, freq_semi, freq_passive}; }
};

struct Violation {
    std::optional<int> frame;  // frame index, absent for session-level problems
    std::string field;
    std::string message;

    friend bool operator==(const Violation&, const Violation&) = default;
};

/// Checks every structural invariant of a timeline. Returns an empty list iff
/// all hold; never throws.
std::vector<Violation> validate_timeline(const SessionTimeline& t);

/// Same-speaker overlap and end <= start checks.
std::vector<Violation> validate_segments(const std::vector<SpeechSegment>& segments);

std::vector<Violation> validate_profile(const EngagementProfile& p, double tol = 1e-9);

struct DurationBand {
    int min_s = 60;
    int max_s = 7200;
};

/// Plausibility warnings (never errors): duration outside the band.
std::vector<std::string> plausibility_warnings(const SessionTimeline& t, DurationBand band = {});

}  // namespace engage
