#include "engage/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <map>

#include "engage/csv.hpp"
#include "engage/error.hpp"
#include "json.hpp"

namespace engage::io {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Value rounded to the 6 significant digits every output uses.
double round6(double v) { return std::strtod(csv::format_number(v).c_str(), nullptr); }

std::string yes_no(bool b) { return b ? "Y" : "N"; }

std::optional<bool> parse_flag(std::string_view s) {
    if (s == "Y" || s == "1") return true;
    if (s == "N" || s == "0") return false;
    return std::nullopt;
}

std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<int> parse_int(std::string_view s) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

json parse_json(std::string_view text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(source, 0, "", std::string("malformed JSON: ") + e.what());
    }
}

template <typename T>
T get_field(const json& node, const char* key, const std::string& source) {
    if (!node.is_object() || !node.contains(key)) throw ParseError(source, 0, key, "missing");
    try {
        return node.at(key).get<T>();
    } catch (const json::exception&) {
        throw ParseError(source, 0, key, "wrong type");
    }
}

}  // namespace

TimelineDocument serialize_timeline(const SessionTimeline& t) {
    ordered_json meta;
    meta["session_id"] = t.session_id;
    meta["duration_s"] = t.duration_s;
    meta["participants"] = ordered_json::array();
    for (const auto& p : t.participants) {
        meta["participants"].push_back({{"id", p.id}, {"role", std::string(to_string(p.role))}});
    }

    const auto ids = t.student_ids();
    std::string frames;
    std::vector<std::string> header{"second", "tutor_speaking"};
    for (const auto& id : ids) {
        header.push_back(id + "_gaze");
        header.push_back(id + "_speaking");
    }
    csv::append_row(frames, header);
    for (const auto& f : t.frames) {
        std::vector<std::string> row{std::to_string(f.second), yes_no(f.tutor_speaking)};
        for (const auto& st : f.students) {
            row.emplace_back(to_string(st.gaze));
            row.push_back(yes_no(st.speaking));
        }
        csv::append_row(frames, row);
    }
    return {meta.dump(2) + "\n", std::move(frames)};
}

SessionTimeline parse_timeline(std::string_view session_json, std::string_view frames_csv,
                               std::string_view source) {
    const std::string meta_src = std::string(source) + "/session.json";
    const std::string frames_src = std::string(source) + "/timeline.csv";
    const auto meta = parse_json(session_json, meta_src);

    SessionTimeline t;
    t.session_id = get_field<std::string>(meta, "session_id", meta_src);
    t.duration_s = get_field<int>(meta, "duration_s", meta_src);
    const auto parts = get_field<json>(meta, "participants", meta_src);
    if (!parts.is_array()) throw ParseError(meta_src, 0, "participants", "expected an array");
    for (const auto& p : parts) {
        const auto role_name = get_field<std::string>(p, "role", meta_src);
        const auto role = parse_role(role_name);
        if (!role) throw ParseError(meta_src, 0, "role", "unknown role '" + role_name + "'");
        t.participants.push_back({get_field<std::string>(p, "id", meta_src), *role});
    }

    const auto table = csv::parse(frames_csv, frames_src);
    const auto c_second = table.require_column("second");
    const auto c_tutor = table.require_column("tutor_speaking");
    const auto ids = t.student_ids();
    std::vector<std::pair<std::size_t, std::size_t>> cols;
    for (const auto& id : ids) {
        cols.emplace_back(table.require_column(id + "_gaze"), table.require_column(id + "_speaking"));
    }
    for (const auto& row : table.rows) {
        BehaviorFrame f;
        const auto second = parse_int(row.fields[c_second]);
        if (!second) throw ParseError(frames_src, row.line, "second", "not an integer");
        f.second = *second;
        const auto tutor = parse_flag(row.fields[c_tutor]);
        if (!tutor) throw ParseError(frames_src, row.line, "tutor_speaking", "expected Y or N");
        f.tutor_speaking = *tutor;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            const auto gaze = parse_gaze(row.fields[cols[k].first]);
            if (!gaze) {
                throw ParseError(frames_src, row.line, ids[k] + "_gaze",
                                 "unknown gaze category '" + row.fields[cols[k].first] + "'");
            }
            const auto speaking = parse_flag(row.fields[cols[k].second]);
            if (!speaking) throw ParseError(frames_src, row.line, ids[k] + "_speaking", "expected Y or N");
            f.students.push_back({k, *gaze, *speaking});
        }
        t.frames.push_back(std::move(f));
    }
    return t;
}

std::string coded_table(const SessionTimeline& smoothed, std::span<const pipeline::CodedFrame> coded) {
    const auto ids = smoothed.student_ids();
    std::string out;
    std::vector<std::string> header{"second", "interaction"};
    for (const auto& id : ids) {
        header.push_back(id + "_gaze");
        header.push_back(id + "_speaking");
        header.push_back(id + "_code");
    }
    csv::append_row(out, header);
    for (std::size_t s = 0; s < coded.size(); ++s) {
        const auto& frame = smoothed.frames.at(s);
        std::vector<std::string> row{std::to_string(coded[s].second),
                                     std::string(to_string(coded[s].interaction))};
        for (std::size_t k = 0; k < ids.size(); ++k) {
            row.emplace_back(to_string(frame.students[k].gaze));
            row.push_back(yes_no(frame.students[k].speaking));
            row.emplace_back(to_string(coded[s].codes[k]));
        }
        csv::append_row(out, row);
    }
    return out;
}

std::vector<CodedRow> parse_coded_table(std::string_view text, std::span<const std::string> student_ids,
                                        std::string_view source) {
    const std::string src(source);
    const auto table = csv::parse(text, src);
    const auto c_second = table.require_column("second");
    const auto c_kind = table.require_column("interaction");
    std::vector<std::array<std::size_t, 3>> cols;
    for (const auto& id : student_ids) {
        cols.push_back({table.require_column(id + "_gaze"), table.require_column(id + "_speaking"),
                        table.require_column(id + "_code")});
    }
    std::vector<CodedRow> rows;
    for (const auto& r : table.rows) {
        CodedRow row;
        const auto second = parse_int(r.fields[c_second]);
        const auto kind = parse_interaction(r.fields[c_kind]);
        if (!second) throw ParseError(src, r.line, "second", "not an integer");
        if (!kind) throw ParseError(src, r.line, "interaction", "unknown interaction '" + r.fields[c_kind] + "'");
        row.second = *second;
        row.interaction = *kind;
        for (std::size_t k = 0; k < cols.size(); ++k) {
            const auto gaze = parse_gaze(r.fields[cols[k][0]]);
            const auto speaking = parse_flag(r.fields[cols[k][1]]);
            const auto code = parse_code(r.fields[cols[k][2]]);
            if (!gaze || !speaking || !code) {
                throw ParseError(src, r.line, std::string(student_ids[k]), "bad gaze/speaking/code cell");
            }
            row.gaze.push_back(*gaze);
            row.speaking.push_back(*speaking);
            row.codes.push_back(*code);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string profiles_table(std::span<const EngagementProfile> profiles) {
    std::string out;
    csv::append_row(out, {"participant_id", "session_id", "freq_active", "freq_semi", "freq_passive"});
    for (const auto& p : profiles) {
        csv::append_row(out, {p.participant, p.session_id, csv::format_number(p.freq_active),
                              csv::format_number(p.freq_semi), csv::format_number(p.freq_passive)});
    }
    return out;
}

std::vector<EngagementProfile> parse_profiles_table(std::string_view text, std::string_view source) {
    const std::string src(source);
    const auto table = csv::parse(text, src);
    const auto c_p = table.require_column("participant_id");
    const auto c_s = table.require_column("session_id");
    const std::array<std::size_t, 3> c_f{table.require_column("freq_active"), table.require_column("freq_semi"),
                                         table.require_column("freq_passive")};
    constexpr std::array<const char*, 3> names{"freq_active", "freq_semi", "freq_passive"};

    std::vector<EngagementProfile> out;
    for (const auto& row : table.rows) {
        std::array<double, 3> f{};
        double sum = 0.0;
        for (std::size_t i = 0; i < 3; ++i) {
            const auto v = parse_double(row.fields[c_f[i]]);
            if (!v || *v < 0.0) throw ParseError(src, row.line, names[i], "expected a non-negative number");
            f[i] = *v;
            sum += *v;
        }
        // Tables carry 6 significant digits; restore the exact simplex.
        if (std::abs(sum - 1.0) > 1e-5) {
            throw ParseError(src, row.line, "freq_active", "frequencies sum to " + csv::format_number(sum));
        }
        out.push_back({row.fields[c_p], row.fields[c_s], f[0] / sum, f[1] / sum, f[2] / sum});
    }
    return out;
}

std::vector<analytics::MeasureRecord> parse_measures_table(std::string_view text, std::string_view source) {
    const std::string src(source);
    const auto table = csv::parse(text, src);
    const auto c_p = table.require_column("participant_id");
    const auto c_m = table.require_column("measure_name");
    const auto c_v = table.require_column("value");
    std::vector<analytics::MeasureRecord> out;
    for (const auto& row : table.rows) {
        const auto v = parse_double(row.fields[c_v]);
        if (!v) throw ParseError(src, row.line, "value", "not a number: '" + row.fields[c_v] + "'");
        out.push_back({row.fields[c_p], row.fields[c_m], *v});
    }
    return out;
}

ClusterDocument make_cluster_document(const kmeans::ClusterModel& model,
                                      std::span<const EngagementProfile> profiles,
                                      const std::optional<analytics::ClusterLabeling>& labeling) {
    ClusterDocument doc;
    doc.k = model.k;
    doc.centroids = model.centroids;
    doc.wss = model.wss;
    doc.awcd_positive = model.awcd_positive;
    doc.awcd_negated = model.awcd_negated;
    doc.seed = model.seed;
    doc.runs = model.runs;
    doc.labeling = labeling;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        ClusterEntry e{profiles[i].participant, profiles[i].session_id, model.assignments.at(i), std::nullopt};
        if (labeling) e.role = labeling->role_of(e.cluster);
        doc.entries.push_back(std::move(e));
    }
    return doc;
}

std::string serialize_cluster_document(const ClusterDocument& doc) {
    ordered_json j;
    j["k"] = doc.k;
    j["seed"] = doc.seed;
    j["runs"] = doc.runs;
    j["wss"] = round6(doc.wss);
    j["awcd"] = {{"positive", round6(doc.awcd_positive)}, {"negated", round6(doc.awcd_negated)}};
    j["centroids"] = ordered_json::array();
    for (const auto& c : doc.centroids) {
        j["centroids"].push_back({{"freq_active", round6(c[0])}, {"freq_semi", round6(c[1])},
                                  {"freq_passive", round6(c[2])}});
    }
    if (doc.labeling) {
        j["labels"] = {{"driver_cluster", doc.labeling->driver_cluster},
                       {"passenger_cluster", doc.labeling->passenger_cluster}};
    }
    j["assignments"] = ordered_json::array();
    for (const auto& e : doc.entries) {
        ordered_json a{{"participant_id", e.participant}, {"session_id", e.session_id}, {"cluster", e.cluster}};
        if (e.role) a["role"] = std::string(analytics::to_string(*e.role));
        j["assignments"].push_back(std::move(a));
    }
    return j.dump(2) + "\n";
}

ClusterDocument parse_cluster_document(std::string_view text, std::string_view source) {
    const std::string src(source);
    const auto j = parse_json(text, src);
    ClusterDocument doc;
    doc.k = get_field<int>(j, "k", src);
    doc.seed = get_field<std::uint64_t>(j, "seed", src);
    doc.runs = get_field<int>(j, "runs", src);
    doc.wss = get_field<double>(j, "wss", src);
    const auto awcd = get_field<json>(j, "awcd", src);
    doc.awcd_positive = get_field<double>(awcd, "positive", src);
    doc.awcd_negated = get_field<double>(awcd, "negated", src);
    for (const auto& c : get_field<json>(j, "centroids", src)) {
        doc.centroids.push_back({get_field<double>(c, "freq_active", src), get_field<double>(c, "freq_semi", src),
                                 get_field<double>(c, "freq_passive", src)});
    }
    if (j.contains("labels")) {
        const auto& l = j.at("labels");
        doc.labeling = analytics::ClusterLabeling{get_field<int>(l, "driver_cluster", src),
                                                  get_field<int>(l, "passenger_cluster", src)};
    }
    for (const auto& a : get_field<json>(j, "assignments", src)) {
        ClusterEntry e{get_field<std::string>(a, "participant_id", src), get_field<std::string>(a, "session_id", src),
                       get_field<int>(a, "cluster", src), std::nullopt};
        if (a.contains("role")) {
            const auto r = get_field<std::string>(a, "role", src);
            if (r == "driver") e.role = analytics::EngagementRole::Driver;
            else if (r == "passenger") e.role = analytics::EngagementRole::Passenger;
            else throw ParseError(src, 0, "role", "unknown role '" + r + "'");
        }
        doc.entries.push_back(std::move(e));
    }
    return doc;
}

std::string cluster_means_table(const kmeans::ClusterModel& model, std::span<const EngagementProfile> profiles,
                                const std::optional<analytics::ClusterLabeling>& labeling) {
    const auto k = static_cast<std::size_t>(model.k);
    std::vector<kmeans::Point> sums(k, kmeans::Point{0.0, 0.0, 0.0});
    std::vector<int> counts(k, 0);
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        const auto c = static_cast<std::size_t>(model.assignments.at(i));
        ++counts[c];
        const auto p = profiles[i].as_point();
        for (std::size_t d = 0; d < 3; ++d) sums[c][d] += p[d];
    }
    std::string out;
    csv::append_row(out, {"cluster", "label", "n", "mean_active", "mean_semi", "mean_passive"});
    for (std::size_t c = 0; c < k; ++c) {
        const double n = counts[c] > 0 ? counts[c] : 1;
        std::string label = "-";
        if (labeling) label = std::string(analytics::to_string(labeling->role_of(static_cast<int>(c))));
        csv::append_row(out, {std::to_string(c), label, std::to_string(counts[c]), csv::format_number(sums[c][0] / n),
                              csv::format_number(sums[c][1] / n), csv::format_number(sums[c][2] / n)});
    }
    return out;
}

std::string comparison_table(std::span<const analytics::ComparisonRow> rows) {
    std::string out;
    csv::append_row(out, {"measure", "driver_n", "driver_mean", "driver_sd", "passenger_n", "passenger_mean",
                          "passenger_sd", "t", "df", "p_one", "p_two", "cohens_d", "variant", "error"});
    for (const auto& row : rows) {
        if (!row.report) {
            csv::append_row(out, {row.measure, "", "", "", "", "", "", "", "", "", "", "", "", row.error});
            continue;
        }
        const auto& r = *row.report;
        const auto& t = r.result;
        csv::append_row(out, {row.measure, std::to_string(r.drivers.n), csv::format_number(r.drivers.mean),
                              csv::format_number(r.drivers.sd), std::to_string(r.passengers.n),
                              csv::format_number(r.passengers.mean), csv::format_number(r.passengers.sd),
                              csv::format_number(t.t), csv::format_number(t.df), csv::format_number(t.p_one_sided),
                              csv::format_number(t.p_two_sided), csv::format_number(t.cohens_d),
                              t.variant == stats::Variant::Welch ? "Welch" : "Student", ""});
    }
    return out;
}

std::string elbow_table(std::span<const kmeans::ElbowPoint> points) {
    std::string out;
    csv::append_row(out, {"k", "wss"});
    for (const auto& p : points) csv::append_row(out, {std::to_string(p.k), csv::format_number(p.wss)});
    return out;
}

synth::ScenarioSpec parse_scenario(std::string_view json_text, std::string_view source, synth::ScenarioSpec base) {
    const std::string src(source);
    const auto j = parse_json(json_text, src);
    if (!j.is_object()) throw ParseError(src, 0, "", "scenario must be an object");
    auto& s = base;
    if (j.contains("session_id")) s.session_id = get_field<std::string>(j, "session_id", src);
    if (j.contains("n_students")) s.n_students = get_field<int>(j, "n_students", src);
    if (j.contains("duration_s")) s.duration_s = get_field<int>(j, "duration_s", src);
    if (j.contains("tutor_present")) s.tutor_present = get_field<bool>(j, "tutor_present", src);
    if (j.contains("mean_dwell_s")) s.mean_dwell_s = get_field<double>(j, "mean_dwell_s", src);
    if (j.contains("seed")) s.seed = get_field<std::uint64_t>(j, "seed", src);
    if (j.contains("weights")) {
        const auto w = get_field<json>(j, "weights", src);
        if (!w.is_object()) throw ParseError(src, 0, "weights", "expected an object keyed by interaction");
        s.weights.fill(0.0);
        for (const auto& [name, value] : w.items()) {
            const auto kind = parse_interaction(name);
            if (!kind) throw ParseError(src, 0, "weights." + name, "unknown interaction type");
            if (!value.is_number()) throw ParseError(src, 0, "weights." + name, "expected a number");
            s.weights[static_cast<std::size_t>(*kind)] = value.get<double>();
        }
    }
    return s;
}

std::string serialize_scenario(const synth::ScenarioSpec& spec) {
    ordered_json j;
    j["session_id"] = spec.session_id;
    j["n_students"] = spec.n_students;
    j["duration_s"] = spec.duration_s;
    j["tutor_present"] = spec.tutor_present;
    j["mean_dwell_s"] = spec.mean_dwell_s;
    j["seed"] = spec.seed;
    ordered_json w = ordered_json::object();
    for (auto kind : kAllInteractions) w[std::string(to_string(kind))] = spec.weights[static_cast<std::size_t>(kind)];
    j["weights"] = w;
    return j.dump(2) + "\n";
}

}  // namespace engage::io
