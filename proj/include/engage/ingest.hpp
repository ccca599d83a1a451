#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "engage/model.hpp"

namespace engage::ingest {

struct GazeRecord {
    std::string session_id;
    int second = 0;
    std::string participant;
    Gaze gaze = Gaze::Other;

    friend bool operator==(const GazeRecord&, const GazeRecord&) = default;
};

struct SpeakerMapEntry {
    std::string participant;
    Role role = Role::Student;
};

using SpeakerMap = std::map<std::string, SpeakerMapEntry, std::less<>>;

struct AttributedSegment {
    SpeechSegment segment;
    std::string participant;
    Role role = Role::Student;
};

struct Attribution {
    std::vector<AttributedSegment> segments;
    std::vector<SpeechSegment> unattributed;
    std::vector<std::string> unmapped_labels;  // sorted, unique
};

enum class MappingMode { Lenient, Strict };

/// Accepts either the nested transcription export
/// (results.speaker_labels.segments[] with decimal-string times) or a flat
/// speaker,start,end table. The format is sniffed from the first
/// non-whitespace character. Segment order is preserved.
std::vector<SpeechSegment> parse_diarization(std::string_view document, std::string_view source);

/// Header session_id,second,participant_id,gaze (any column order).
std::vector<GazeRecord> parse_gaze_table(std::string_view document, std::string_view source);

/// Header speaker_label,participant_id,role.
SpeakerMap parse_speaker_map(std::string_view document, std::string_view source);

/// Header participant_id,role.
std::vector<Participant> parse_roster(std::string_view document, std::string_view source);

/// Labels unique is guaranteed by the map type; checks that every mapped
/// participant is on the roster with the same role.
std::vector<std::string> validate_speaker_map(const SpeakerMap& map,
                                              const std::vector<Participant>& roster);

Attribution apply_speaker_map(const std::vector<SpeechSegment>& segments, const SpeakerMap& map,
                              MappingMode mode = MappingMode::Lenient);

struct GapFillPolicy {
    int max_carry_s = 5;  // inherit the nearest preceding annotation at most this far back
};

struct IngestReport {
    int gaze_gaps = 0;           // cells with no annotation
    int gaze_gaps_carried = 0;   // filled from a preceding annotation
    int gaze_gaps_defaulted = 0; // filled with Other
    int segments_clipped = 0;    // segments extending past the session end
    std::map<std::string, int> gaps_by_participant;
    std::vector<std::string> unmapped_labels;
    std::vector<std::string> warnings;
};

struct BuildResult {
    SessionTimeline timeline;
    IngestReport report;
};

/// Synchronizes gaze annotations and attributed speech onto a per-second
/// grid. A second t is "speaking" for a student iff one of their segments
/// overlaps [t, t+1) with positive measure.
BuildResult build_timeline(std::string_view session_id, const std::vector<GazeRecord>& gaze,
                           const std::vector<AttributedSegment>& speech,
                           const std::vector<Participant>& roster, int duration_s,
                           GapFillPolicy gaps = {});

/// Smallest duration covering every gaze record and speech segment.
int infer_duration(const std::vector<GazeRecord>& gaze, const std::vector<AttributedSegment>& speech);

}  // namespace engage::ingest
