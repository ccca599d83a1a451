#include "engage/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "engage/csv.hpp"
#include "engage/error.hpp"
#include "json.hpp"

namespace engage::ingest {

namespace {

using nlohmann::json;

std::optional<double> to_double(std::string_view s) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<int> to_int(std::string_view s) {
    int v = 0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return v;
}

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

void check_range(const SpeechSegment& seg, std::size_t index, std::string_view source) {
    if (seg.start < 0.0) {
        throw RangeError(std::string(source) + ": segment " + std::to_string(index) + " of '" +
                         seg.speaker_label + "' starts before 0");
    }
    if (!(seg.end > seg.start)) {
        throw RangeError(std::string(source) + ": segment " + std::to_string(index) + " of '" +
                         seg.speaker_label + "' has end " + csv::format_number(seg.end) +
                         " <= start " + csv::format_number(seg.start));
    }
}

std::vector<SpeechSegment> parse_transcript_json(std::string_view document, const std::string& src) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError(src, line_of_offset(document, e.byte), "", "malformed document");
    }

    auto descend = [&](const json& node, const char* key, const std::string& path) -> const json& {
        if (!node.is_object() || !node.contains(key)) throw ParseError(src, 0, path, "missing");
        return node.at(key);
    };
    const json& results = descend(doc, "results", "results");
    const json& labels = descend(results, "speaker_labels", "results.speaker_labels");
    const json& segments = descend(labels, "segments", "results.speaker_labels.segments");
    if (!segments.is_array()) {
        throw ParseError(src, 0, "results.speaker_labels.segments", "expected an array");
    }

    std::vector<SpeechSegment> out;
    out.reserve(segments.size());
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const std::string base = "results.speaker_labels.segments[" + std::to_string(i) + "]";
        const json& seg = segments[i];
        auto text_field = [&](const char* key) -> std::string {
            const std::string path = base + "." + key;
            const json& v = descend(seg, key, path);
            if (v.is_string()) return v.get<std::string>();
            if (v.is_number()) return v.dump();
            throw ParseError(src, 0, path, "expected a string");
        };
        auto time_field = [&](const char* key) {
            const auto raw = text_field(key);
            const auto v = to_double(raw);
            if (!v) throw ParseError(src, 0, base + "." + key, "not a decimal number: '" + raw + "'");
            return *v;
        };
        SpeechSegment s{text_field("speaker_label"), time_field("start_time"), time_field("end_time")};
        check_range(s, i, src);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<SpeechSegment> parse_segment_table(std::string_view document, const std::string& src) {
    const auto table = csv::parse(document, src);
    const auto c_speaker = table.require_column("speaker");
    const auto c_start = table.require_column("start");
    const auto c_end = table.require_column("end");

    std::vector<SpeechSegment> out;
    out.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        auto time = [&](std::size_t col, const char* name) {
            const auto v = to_double(row.fields[col]);
            if (!v) throw ParseError(src, row.line, name, "not a number: '" + row.fields[col] + "'");
            return *v;
        };
        if (row.fields[c_speaker].empty()) throw ParseError(src, row.line, "speaker", "empty");
        SpeechSegment s{row.fields[c_speaker], time(c_start, "start"), time(c_end, "end")};
        check_range(s, i, src);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

std::vector<SpeechSegment> parse_diarization(std::string_view document, std::string_view source) {
    const std::string src(source);
    const auto first = document.find_first_not_of(" \t\r\n\xEF\xBB\xBF");
    if (first != std::string_view::npos && document[first] == '{') {
        return parse_transcript_json(document, src);
    }
    return parse_segment_table(document, src);
}

std::vector<GazeRecord> parse_gaze_table(std::string_view document, std::string_view source) {
    const std::string src(source);
    const auto table = csv::parse(document, src);
    const auto c_session = table.require_column("session_id");
    const auto c_second = table.require_column("second");
    const auto c_participant = table.require_column("participant_id");
    const auto c_gaze = table.require_column("gaze");

    std::vector<GazeRecord> out;
    out.reserve(table.rows.size());
    std::set<std::tuple<std::string, int, std::string>> keys;
    for (const auto& row : table.rows) {
        const auto second = to_int(row.fields[c_second]);
        if (!second || *second < 0) {
            throw ParseError(src, row.line, "second",
                             "expected a non-negative integer, got '" + row.fields[c_second] + "'");
        }
        const auto gaze = parse_gaze(row.fields[c_gaze]);
        if (!gaze) {
            throw ParseError(src, row.line, "gaze",
                             "unknown gaze category '" + row.fields[c_gaze] + "' in row " +
                                 std::to_string(row.line));
        }
        if (row.fields[c_participant].empty()) throw ParseError(src, row.line, "participant_id", "empty");
        GazeRecord rec{row.fields[c_session], *second, row.fields[c_participant], *gaze};
        if (!keys.emplace(rec.session_id, rec.second, rec.participant).second) {
            throw DuplicateKeyError(src + ":" + std::to_string(row.line) + ": duplicate gaze record for (" +
                                    rec.session_id + ", " + std::to_string(rec.second) + ", " +
                                    rec.participant + ")");
        }
        out.push_back(std::move(rec));
    }
    return out;
}

SpeakerMap parse_speaker_map(std::string_view document, std::string_view source) {
    const std::string src(source);
    const auto table = csv::parse(document, src);
    const auto c_label = table.require_column("speaker_label");
    const auto c_participant = table.require_column("participant_id");
    const auto c_role = table.require_column("role");

    SpeakerMap map;
    for (const auto& row : table.rows) {
        const auto role = parse_role(row.fields[c_role]);
        if (!role) throw ParseError(src, row.line, "role", "unknown role '" + row.fields[c_role] + "'");
        const auto& label = row.fields[c_label];
        if (label.empty()) throw ParseError(src, row.line, "speaker_label", "empty");
        if (!map.emplace(label, SpeakerMapEntry{row.fields[c_participant], *role}).second) {
            throw DuplicateKeyError(src + ":" + std::to_string(row.line) +
                                    ": duplicate speaker label '" + label + "'");
        }
    }
    return map;
}

std::vector<Participant> parse_roster(std::string_view document, std::string_view source) {
    const std::string src(source);
    const auto table = csv::parse(document, src);
    const auto c_participant = table.require_column("participant_id");
    const auto c_role = table.require_column("role");

    std::vector<Participant> roster;
    std::set<std::string> seen;
    for (const auto& row : table.rows) {
        const auto role = parse_role(row.fields[c_role]);
        if (!role) throw ParseError(src, row.line, "role", "unknown role '" + row.fields[c_role] + "'");
        const auto& id = row.fields[c_participant];
        if (id.empty()) throw ParseError(src, row.line, "participant_id", "empty");
        if (!seen.insert(id).second) {
            throw DuplicateKeyError(src + ":" + std::to_string(row.line) + ": duplicate participant '" + id + "'");
        }
        roster.push_back({id, *role});
    }
    return roster;
}

std::vector<std::string> validate_speaker_map(const SpeakerMap& map,
                                              const std::vector<Participant>& roster) {
    std::vector<std::string> problems;
    for (const auto& [label, entry] : map) {
        const auto it = std::find_if(roster.begin(), roster.end(),
                                     [&](const Participant& p) { return p.id == entry.participant; });
        if (it == roster.end()) {
            problems.push_back("speaker '" + label + "' maps to '" + entry.participant +
                               "', who is not on the roster");
        } else if (it->role != entry.role) {
            problems.push_back("speaker '" + label + "' maps to '" + entry.participant + "' as " +
                               std::string(to_string(entry.role)) + " but the roster says " +
                               std::string(to_string(it->role)));
        }
    }
    return problems;
}

Attribution apply_speaker_map(const std::vector<SpeechSegment>& segments, const SpeakerMap& map,
                              MappingMode mode) {
    Attribution out;
    std::set<std::string> unmapped;
    for (const auto& seg : segments) {
        const auto it = map.find(seg.speaker_label);
        if (it == map.end()) {
            unmapped.insert(seg.speaker_label);
            out.unattributed.push_back(seg);
            continue;
        }
        out.segments.push_back({seg, it->second.participant, it->second.role});
    }
    out.unmapped_labels.assign(unmapped.begin(), unmapped.end());
    if (mode == MappingMode::Strict && !out.unmapped_labels.empty()) {
        std::string msg = "unmapped speaker labels:";
        for (const auto& l : out.unmapped_labels) msg += " " + l;
        throw MappingError(msg);
    }
    return out;
}

int infer_duration(const std::vector<GazeRecord>& gaze, const std::vector<AttributedSegment>& speech) {
    int duration = 0;
    for (const auto& g : gaze) duration = std::max(duration, g.second + 1);
    for (const auto& s : speech) {
        duration = std::max(duration, static_cast<int>(std::ceil(s.segment.end)));
    }
    return duration;
}

BuildResult build_timeline(std::string_view session_id, const std::vector<GazeRecord>& gaze,
                           const std::vector<AttributedSegment>& speech,
                           const std::vector<Participant>& roster, int duration_s,
                           GapFillPolicy gaps) {
    if (duration_s <= 0) throw RangeError("duration_s must be positive");
    if (roster.empty()) throw InputError("roster is empty");

    BuildResult result;
    auto& t = result.timeline;
    t.session_id = std::string(session_id);
    t.participants = roster;
    t.duration_s = duration_s;
    const auto ids = t.student_ids();
    const std::size_t n = ids.size();

    // Raw annotation grid, -1 marks a missing cell.
    std::vector<std::vector<int>> annotated(n, std::vector<int>(static_cast<std::size_t>(duration_s), -1));
    for (const auto& rec : gaze) {
        if (rec.session_id != session_id) {
            throw InputError("gaze record for session '" + rec.session_id + "' passed to session '" +
                             std::string(session_id) + "'");
        }
        const auto idx = t.student_index(rec.participant);
        if (!idx) {
            throw InputError("gaze record at second " + std::to_string(rec.second) +
                             " references '" + rec.participant + "', not a student on the roster");
        }
        if (rec.second >= duration_s) {
            throw RangeError("gaze record at second " + std::to_string(rec.second) +
                             " beyond session duration " + std::to_string(duration_s));
        }
        auto& cell = annotated[*idx][static_cast<std::size_t>(rec.second)];
        if (cell >= 0) {
            throw DuplicateKeyError("duplicate gaze record for (" + rec.participant + ", " +
                                    std::to_string(rec.second) + ")");
        }
        cell = static_cast<int>(rec.gaze);
    }

    std::vector<std::vector<char>> speaking(n, std::vector<char>(static_cast<std::size_t>(duration_s), 0));
    std::vector<char> tutor(static_cast<std::size_t>(duration_s), 0);
    for (const auto& a : speech) {
        const auto& seg = a.segment;
        if (seg.end > duration_s) ++result.report.segments_clipped;
        // Seconds t with [t, t+1) ∩ [start, end) of positive measure.
        const int first = std::max(0, static_cast<int>(std::floor(seg.start)));
        const int last = std::min(duration_s, static_cast<int>(std::ceil(seg.end)));
        if (a.role == Role::Tutor) {
            if (std::none_of(roster.begin(), roster.end(), [&](const Participant& p) {
                    return p.id == a.participant && p.role == Role::Tutor;
                })) {
                throw InputError("speech attributed to '" + a.participant + "', not a tutor on the roster");
            }
            for (int s = first; s < last; ++s) tutor[static_cast<std::size_t>(s)] = 1;
            continue;
        }
        const auto idx = t.student_index(a.participant);
        if (!idx) throw InputError("speech attributed to '" + a.participant + "', not a student on the roster");
        for (int s = first; s < last; ++s) speaking[*idx][static_cast<std::size_t>(s)] = 1;
    }

    auto& report = result.report;
    t.frames.resize(static_cast<std::size_t>(duration_s));
    for (std::size_t k = 0; k < n; ++k) {
        int last_annotated = -1;
        Gaze last_gaze = Gaze::Other;
        for (int s = 0; s < duration_s; ++s) {
            const int cell = annotated[k][static_cast<std::size_t>(s)];
            Gaze g = Gaze::Other;
            if (cell >= 0) {
                g = static_cast<Gaze>(cell);
                last_annotated = s;
                last_gaze = g;
            } else {
                ++report.gaze_gaps;
                ++report.gaps_by_participant[ids[k]];
                if (last_annotated >= 0 && s - last_annotated <= gaps.max_carry_s) {
                    g = last_gaze;
                    ++report.gaze_gaps_carried;
                } else {
                    ++report.gaze_gaps_defaulted;
                }
            }
            t.frames[static_cast<std::size_t>(s)].students.push_back(
                {k, g, speaking[k][static_cast<std::size_t>(s)] != 0});
        }
    }
    for (int s = 0; s < duration_s; ++s) {
        auto& f = t.frames[static_cast<std::size_t>(s)];
        f.second = s;
        f.tutor_speaking = tutor[static_cast<std::size_t>(s)] != 0;
    }
    if (report.segments_clipped > 0) {
        report.warnings.push_back(std::to_string(report.segments_clipped) +
                                  " speech segment(s) extend past the session end and were clipped");
    }
    return result;
}

}  // namespace engage::ingest
