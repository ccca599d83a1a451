#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "engage/kmeans.hpp"
#include "engage/model.hpp"
#include "engage/pipeline.hpp"
#include "engage/stats.hpp"

namespace engage::analytics {

/// Share of seconds spent in each code by one student.
EngagementProfile engagement_profile(const SessionTimeline& timeline,
                                     std::span<const pipeline::CodedFrame> coded,
                                     std::string_view participant);

/// One profile per student, roster order.
std::vector<EngagementProfile> session_profiles(const SessionTimeline& timeline,
                                                std::span<const pipeline::CodedFrame> coded);

std::vector<kmeans::Point> to_points(std::span<const EngagementProfile> profiles);

enum class EngagementRole { Driver, Passenger };
std::string_view to_string(EngagementRole r) noexcept;

struct ClusterLabeling {
    int driver_cluster = 0;
    int passenger_cluster = 1;

    EngagementRole role_of(int cluster) const noexcept {
        return cluster == driver_cluster ? EngagementRole::Driver : EngagementRole::Passenger;
    }
};

/// Drivers are the cluster whose centroid has the larger active share.
/// Requires k == 2; equal active shares throw DegenerateError.
ClusterLabeling label_clusters(const kmeans::ClusterModel& model);

/// participant_id -> role. A participant with profiles in several sessions
/// must land in one role, otherwise InputError.
std::map<std::string, EngagementRole> participant_roles(std::span<const EngagementProfile> profiles,
                                                        const kmeans::ClusterModel& model,
                                                        const ClusterLabeling& labeling);

struct MeasureRecord {
    std::string participant;
    std::string measure;
    double value = 0.0;
};

struct ComparisonReport {
    std::string measure;
    stats::GroupSummary drivers;
    stats::GroupSummary passengers;
    stats::TestResult result;
};

/// Either a report or the reason the row could not be produced.
struct ComparisonRow {
    std::string measure;
    std::optional<ComparisonReport> report;
    std::string error;
};

struct CompareConfig {
    stats::Variant variant = stats::Variant::Welch;
    stats::Tail tail = stats::Tail::Two;
    stats::Alternative alternative = stats::Alternative::Greater;
    std::map<std::string, stats::Alternative, std::less<>> alternatives;  // per-measure override
};

/// One row per measure, in order of first appearance. Drivers are the first
/// group, so positive t and d mean drivers scored higher.
std::vector<ComparisonRow> compare_clusters(const std::map<std::string, EngagementRole>& roles,
                                            std::span<const MeasureRecord> measures,
                                            const CompareConfig& cfg = {});

}  // namespace engage::analytics
