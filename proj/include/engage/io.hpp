#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "engage/analytics.hpp"
#include "engage/kmeans.hpp"
#include "engage/model.hpp"
#include "engage/pipeline.hpp"
#include "engage/synth.hpp"

// Table and document formats shared by the CLI and the tests. Tables are
// comma-delimited with a header row; documents are JSON.
namespace engage::io {

struct TimelineDocument {
    std::string session_json;  // session_id, participants, duration_s
    std::string frames_csv;    // second,tutor_speaking,<pid>_gaze,<pid>_speaking...
};

TimelineDocument serialize_timeline(const SessionTimeline& t);
SessionTimeline parse_timeline(std::string_view session_json, std::string_view frames_csv,
                               std::string_view source);

/// second,interaction,<pid>_gaze,<pid>_speaking,<pid>_code per student.
std::string coded_table(const SessionTimeline& smoothed, std::span<const pipeline::CodedFrame> coded);

struct CodedRow {
    int second = 0;
    Interaction interaction = Interaction::NC;
    std::vector<Gaze> gaze;
    std::vector<bool> speaking;
    std::vector<Code> codes;
};
std::vector<CodedRow> parse_coded_table(std::string_view text, std::span<const std::string> student_ids,
                                        std::string_view source);

std::string profiles_table(std::span<const EngagementProfile> profiles);
std::vector<EngagementProfile> parse_profiles_table(std::string_view text, std::string_view source);

/// participant_id,measure_name,value
std::vector<analytics::MeasureRecord> parse_measures_table(std::string_view text, std::string_view source);

struct ClusterEntry {
    std::string participant;
    std::string session_id;
    int cluster = 0;
    std::optional<analytics::EngagementRole> role;
};

struct ClusterDocument {
    int k = 0;
    std::vector<kmeans::Point> centroids;
    std::vector<ClusterEntry> entries;
    double wss = 0.0;
    double awcd_positive = 0.0;
    double awcd_negated = 0.0;
    std::uint64_t seed = 0;
    int runs = 0;
    std::optional<analytics::ClusterLabeling> labeling;
};

ClusterDocument make_cluster_document(const kmeans::ClusterModel& model,
                                      std::span<const EngagementProfile> profiles,
                                      const std::optional<analytics::ClusterLabeling>& labeling);
std::string serialize_cluster_document(const ClusterDocument& doc);
ClusterDocument parse_cluster_document(std::string_view text, std::string_view source);

/// Per-cluster mean code frequencies: cluster,label,n,mean_active,mean_semi,mean_passive.
std::string cluster_means_table(const kmeans::ClusterModel& model, std::span<const EngagementProfile> profiles,
                                const std::optional<analytics::ClusterLabeling>& labeling);

std::string comparison_table(std::span<const analytics::ComparisonRow> rows);

std::string elbow_table(std::span<const kmeans::ElbowPoint> points);

/// Scenario documents use the same keys as ScenarioSpec; weights is an
/// object keyed by interaction name. Missing keys keep their defaults.
synth::ScenarioSpec parse_scenario(std::string_view json_text, std::string_view source,
                                   synth::ScenarioSpec base = {});
std::string serialize_scenario(const synth::ScenarioSpec& spec);

}  // namespace engage::io
