#include "engage/analytics.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "engage/error.hpp"

namespace engage::analytics {

EngagementProfile engagement_profile(const SessionTimeline& timeline,
                                     std::span<const pipeline::CodedFrame> coded,
                                     std::string_view participant) {
    if (coded.empty()) throw InputError("no coded frames for session '" + timeline.session_id + "'");
    const auto idx = timeline.student_index(participant);
    if (!idx) {
        throw InputError("'" + std::string(participant) + "' is not a student in session '" +
                         timeline.session_id + "'");
    }
    std::array<std::size_t, kCodeCount> counts{};
    for (const auto& f : coded) ++counts[static_cast<std::size_t>(f.codes.at(*idx))];

    const double n = static_cast<double>(coded.size());
    EngagementProfile p;
    p.participant = std::string(participant);
    p.session_id = timeline.session_id;
    p.freq_active = static_cast<double>(counts[0]) / n;
    p.freq_semi = static_cast<double>(counts[1]) / n;
    p.freq_passive = static_cast<double>(counts[2]) / n;
    return p;
}

std::vector<EngagementProfile> session_profiles(const SessionTimeline& timeline,
                                                std::span<const pipeline::CodedFrame> coded) {
    std::vector<EngagementProfile> out;
    for (const auto& id : timeline.student_ids()) out.push_back(engagement_profile(timeline, coded, id));
    return out;
}

std::vector<kmeans::Point> to_points(std::span<const EngagementProfile> profiles) {
    std::vector<kmeans::Point> pts;
    pts.reserve(profiles.size());
    for (const auto& p : profiles) pts.push_back(p.as_point());
    return pts;
}

std::string_view to_string(EngagementRole r) noexcept {
    return r == EngagementRole::Driver ? "driver" : "passenger";
}

ClusterLabeling label_clusters(const kmeans::ClusterModel& model) {
    if (model.k != 2 || model.centroids.size() != 2) {
        throw InputError("driver/passenger labeling needs exactly 2 clusters, got " + std::to_string(model.k));
    }
    const double a0 = model.centroids[0][0];
    const double a1 = model.centroids[1][0];
    if (a0 == a1) {
        throw DegenerateError("both clusters have the same active share; cannot label drivers");
    }
    return a0 > a1 ? ClusterLabeling{0, 1} : ClusterLabeling{1, 0};
}

std::map<std::string, EngagementRole> participant_roles(std::span<const EngagementProfile> profiles,
                                                        const kmeans::ClusterModel& model,
                                                        const ClusterLabeling& labeling) {
    if (profiles.size() != model.assignments.size()) {
        throw InputError("cluster model was fitted on a different profile set");
    }
    std::map<std::string, EngagementRole> roles;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        const auto role = labeling.role_of(model.assignments[i]);
        const auto [it, inserted] = roles.emplace(profiles[i].participant, role);
        if (!inserted && it->second != role) {
            throw InputError("participant '" + profiles[i].participant +
                             "' is a driver in one session and a passenger in another");
        }
    }
    return roles;
}

std::vector<ComparisonRow> compare_clusters(const std::map<std::string, EngagementRole>& roles,
                                            std::span<const MeasureRecord> measures,
                                            const CompareConfig& cfg) {
    std::vector<std::string> order;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& m : measures) {
        const auto role = roles.find(m.participant);
        if (role == roles.end()) {
            throw InputError("measure '" + m.measure + "' recorded for '" + m.participant +
                             "', who has no cluster label");
        }
        if (!seen.emplace(m.participant, m.measure).second) {
            throw DuplicateKeyError("duplicate measure '" + m.measure + "' for '" + m.participant + "'");
        }
        if (!groups.contains(m.measure)) order.push_back(m.measure);
        auto& g = groups[m.measure];
        (role->second == EngagementRole::Driver ? g.first : g.second).push_back(m.value);
    }

    std::vector<ComparisonRow> rows;
    for (const auto& name : order) {
        ComparisonRow row;
        row.measure = name;
        try {
            const auto& [drivers, passengers] = groups[name];
            if (drivers.size() < 2 || passengers.size() < 2) {
                throw InputError("needs n >= 2 per cluster (drivers " + std::to_string(drivers.size()) +
                                 ", passengers " + std::to_string(passengers.size()) + ")");
            }
            ComparisonReport report;
            report.measure = name;
            report.drivers = stats::summarize(drivers);
            report.passengers = stats::summarize(passengers);
            const auto alt = cfg.alternatives.find(name);
            report.result = stats::t_test(report.drivers, report.passengers, cfg.variant, cfg.tail,
                                          alt == cfg.alternatives.end() ? cfg.alternative : alt->second);
            row.report = report;
        } catch (const Error& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace engage::analytics
