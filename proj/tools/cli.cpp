#include "cli.hpp"

#include <omp.h>
#include <openssl/evp.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "engage/analytics.hpp"
#include "engage/csv.hpp"
#include "engage/error.hpp"
#include "engage/ingest.hpp"
#include "engage/io.hpp"
#include "engage/kmeans.hpp"
#include "engage/pipeline.hpp"
#include "engage/stats.hpp"
#include "engage/synth.hpp"
#include "json.hpp"

namespace engage::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) {
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return hex.str();
}

namespace {

struct SessionInputs {
    std::string session_id;
    fs::path gaze;
    std::vector<fs::path> diarization;
    fs::path speaker_map;
    fs::path roster;
    std::optional<int> duration_s;
};

struct RunConfig {
    fs::path out_dir = "engage_out";
    std::vector<SessionInputs> sessions;
    bool strict_mapping = false;
    pipeline::PipelineConfig pipeline;
    int k = 2;
    int runs = 10;
    std::uint64_t seed = 1;
    int elbow_k_max = 6;
    analytics::CompareConfig compare;
    std::optional<fs::path> measures;
    std::optional<fs::path> profiles;
    std::optional<fs::path> clusters;
    int jobs = 0;
    synth::ScenarioSpec scenario;
    bool self_check = false;
};

// Values given on the command line; unset fields fall back to the config file.
struct Flags {
    std::string config;
    std::string out;
    std::string session_id;
    std::string gaze;
    std::vector<std::string> diarization;
    std::string speaker_map;
    std::string roster;
    int duration = 0;
    bool strict = false;
    int window = 0;
    int itc_window = 0;
    int rm_min = 0;
    bool trailing = false;
    int k = 0;
    int runs = 0;
    std::uint64_t seed = 0;
    int elbow_max = -1;
    std::string variant;
    std::string tail;
    std::string alternative;
    std::string measures;
    std::string profiles;
    std::string clusters;
    int jobs = 0;
    std::string scenario;
    std::string preset;
    bool self_check = false;
    std::set<std::string> given;  // option names that appeared
};

stats::Variant parse_variant(const std::string& s) {
    if (s == "welch" || s == "Welch") return stats::Variant::Welch;
    if (s == "student" || s == "Student") return stats::Variant::Student;
    throw InputError("unknown test variant '" + s + "' (welch|student)");
}

stats::Tail parse_tail(const std::string& s) {
    if (s == "one") return stats::Tail::One;
    if (s == "two") return stats::Tail::Two;
    throw InputError("unknown tail '" + s + "' (one|two)");
}

stats::Alternative parse_alternative(const std::string& s) {
    if (s == "greater") return stats::Alternative::Greater;
    if (s == "less") return stats::Alternative::Less;
    throw InputError("unknown alternative '" + s + "' (greater|less)");
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InputError("cannot read '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Temp file then rename, so an interrupted run never leaves a partial table.
void write_atomic(const fs::path& p, const std::string& content) {
    fs::create_directories(p.parent_path());
    const fs::path tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out) throw InputError("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, p);
}

template <typename T>
T json_get(const json& j, const char* key, const std::string& src) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ParseError(src, 0, key, "missing or wrong type");
    }
}

void apply_config_file(RunConfig& cfg, const fs::path& path) {
    const std::string src = path.string();
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError(src, 0, "", std::string("malformed config: ") + e.what());
    }
    const fs::path base = path.parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

    if (j.contains("out_dir")) cfg.out_dir = resolve(json_get<std::string>(j, "out_dir", src));
    if (j.contains("strict_mapping")) cfg.strict_mapping = json_get<bool>(j, "strict_mapping", src);
    if (j.contains("window_s")) cfg.pipeline.window_s = json_get<int>(j, "window_s", src);
    if (j.contains("itc_window_s")) cfg.pipeline.itc_cooccurrence_window_s = json_get<int>(j, "itc_window_s", src);
    if (j.contains("rm_min_lookers")) cfg.pipeline.rm_min_lookers = json_get<int>(j, "rm_min_lookers", src);
    if (j.contains("trailing_window") && json_get<bool>(j, "trailing_window", src)) {
        cfg.pipeline.alignment = pipeline::WindowAlignment::Trailing;
    }
    if (j.contains("k")) cfg.k = json_get<int>(j, "k", src);
    if (j.contains("runs")) cfg.runs = json_get<int>(j, "runs", src);
    if (j.contains("seed")) cfg.seed = json_get<std::uint64_t>(j, "seed", src);
    if (j.contains("elbow_k_max")) cfg.elbow_k_max = json_get<int>(j, "elbow_k_max", src);
    if (j.contains("variant")) cfg.compare.variant = parse_variant(json_get<std::string>(j, "variant", src));
    if (j.contains("tail")) cfg.compare.tail = parse_tail(json_get<std::string>(j, "tail", src));
    if (j.contains("alternative")) {
        cfg.compare.alternative = parse_alternative(json_get<std::string>(j, "alternative", src));
    }
    if (j.contains("alternatives")) {
        for (const auto& [measure, alt] : j.at("alternatives").items()) {
            if (!alt.is_string()) throw ParseError(src, 0, "alternatives." + measure, "expected a string");
            cfg.compare.alternatives[measure] = parse_alternative(alt.get<std::string>());
        }
    }
    if (j.contains("measures")) cfg.measures = resolve(json_get<std::string>(j, "measures", src));
    if (j.contains("profiles")) cfg.profiles = resolve(json_get<std::string>(j, "profiles", src));
    if (j.contains("clusters")) cfg.clusters = resolve(json_get<std::string>(j, "clusters", src));
    if (j.contains("jobs")) cfg.jobs = json_get<int>(j, "jobs", src);
    if (j.contains("self_check")) cfg.self_check = json_get<bool>(j, "self_check", src);
    if (j.contains("scenario")) {
        const auto& s = j.at("scenario");
        if (s.is_string()) {
            const auto& presets = synth::scenario_presets();
            const auto it = presets.find(s.get<std::string>());
            if (it == presets.end()) throw SpecError("unknown scenario preset '" + s.get<std::string>() + "'");
            cfg.scenario = it->second;
        } else {
            cfg.scenario = io::parse_scenario(s.dump(), src + ":scenario");
        }
    }
    if (j.contains("sessions")) {
        for (const auto& s : j.at("sessions")) {
            SessionInputs in;
            in.session_id = json_get<std::string>(s, "session_id", src);
            in.gaze = resolve(json_get<std::string>(s, "gaze", src));
            if (s.contains("diarization")) {
                const auto& d = s.at("diarization");
                if (d.is_string()) {
                    in.diarization.push_back(resolve(d.get<std::string>()));
                } else {
                    for (const auto& x : d) in.diarization.push_back(resolve(x.get<std::string>()));
                }
            }
            if (s.contains("speaker_map")) in.speaker_map = resolve(json_get<std::string>(s, "speaker_map", src));
            in.roster = resolve(json_get<std::string>(s, "roster", src));
            if (s.contains("duration_s")) in.duration_s = json_get<int>(s, "duration_s", src);
            cfg.sessions.push_back(std::move(in));
        }
    }
}

// Precedence: flag > config > default.
RunConfig resolve_config(const Flags& f) {
    RunConfig cfg;
    if (!f.config.empty()) apply_config_file(cfg, f.config);
    auto has = [&](const char* name) { return f.given.contains(name); };

    if (has("--out")) cfg.out_dir = f.out;
    if (has("--gaze")) {
        SessionInputs in;
        in.session_id = f.session_id;
        in.gaze = f.gaze;
        for (const auto& d : f.diarization) in.diarization.emplace_back(d);
        in.speaker_map = f.speaker_map;
        in.roster = f.roster;
        if (has("--duration")) in.duration_s = f.duration;
        cfg.sessions = {in};
    }
    if (has("--strict")) cfg.strict_mapping = f.strict;
    if (has("--window")) cfg.pipeline.window_s = f.window;
    if (has("--itc-window")) cfg.pipeline.itc_cooccurrence_window_s = f.itc_window;
    if (has("--rm-min-lookers")) cfg.pipeline.rm_min_lookers = f.rm_min;
    if (has("--trailing") && f.trailing) cfg.pipeline.alignment = pipeline::WindowAlignment::Trailing;
    if (has("--k")) cfg.k = f.k;
    if (has("--runs")) cfg.runs = f.runs;
    if (has("--seed")) {
        cfg.seed = f.seed;
        cfg.scenario.seed = f.seed;
    }
    if (has("--elbow-max")) cfg.elbow_k_max = f.elbow_max;
    if (has("--variant")) cfg.compare.variant = parse_variant(f.variant);
    if (has("--tail")) cfg.compare.tail = parse_tail(f.tail);
    if (has("--alternative")) cfg.compare.alternative = parse_alternative(f.alternative);
    if (has("--measures")) cfg.measures = f.measures;
    if (has("--profiles")) cfg.profiles = f.profiles;
    if (has("--clusters")) cfg.clusters = f.clusters;
    if (has("--jobs")) cfg.jobs = f.jobs;
    if (has("--preset")) {
        const auto& presets = synth::scenario_presets();
        const auto it = presets.find(f.preset);
        if (it == presets.end()) throw SpecError("unknown scenario preset '" + f.preset + "'");
        const auto seed = cfg.scenario.seed;
        cfg.scenario = it->second;
        if (has("--seed")) cfg.scenario.seed = seed;
    }
    if (has("--scenario")) {
        const auto seed = cfg.scenario.seed;
        cfg.scenario = io::parse_scenario(read_file(f.scenario), f.scenario);
        if (has("--seed")) cfg.scenario.seed = seed;
    }
    if (has("--self-check")) cfg.self_check = f.self_check;
    if (cfg.jobs > 0) omp_set_num_threads(cfg.jobs);
    return cfg;
}

fs::path session_dir(const RunConfig& cfg, const std::string& id) { return cfg.out_dir / "sessions" / id; }

// Manifest of every artifact under the output directory with its SHA-256.
void write_manifest(const RunConfig& cfg) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(cfg.out_dir)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), cfg.out_dir);
        const auto name = rel.generic_string();
        if (name == "manifest.json" || name == "run_meta.json" || name.ends_with(".tmp")) continue;
        files.push_back(rel);
    }
    std::sort(files.begin(), files.end());
    ordered_json m;
    m["seed"] = cfg.seed;
    m["artifacts"] = ordered_json::array();
    for (const auto& rel : files) {
        m["artifacts"].push_back({{"path", rel.generic_string()}, {"sha256", sha256_hex(read_file(cfg.out_dir / rel))}});
    }
    write_atomic(cfg.out_dir / "manifest.json", m.dump(2) + "\n");
}

void write_run_meta(const RunConfig& cfg, const std::string& command) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream ts;
    ts << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    ordered_json meta{{"command", command}, {"timestamp", ts.str()}, {"seed", cfg.seed}};
    write_atomic(cfg.out_dir / "run_meta.json", meta.dump(2) + "\n");
}

// Runs `body(i)` for every index in parallel, rethrowing the first failure
// in index order.
template <typename Body>
void parallel_each(std::size_t n, Body body) {
    std::vector<std::exception_ptr> errors(n);
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::string violations_message(const std::string& what, const std::vector<Violation>& v) {
    std::string msg = what + ":";
    for (std::size_t i = 0; i < v.size() && i < 10; ++i) {
        msg += "\n  ";
        if (v[i].frame) msg += "frame " + std::to_string(*v[i].frame) + ": ";
        msg += v[i].field + ": " + v[i].message;
    }
    if (v.size() > 10) msg += "\n  ... " + std::to_string(v.size() - 10) + " more";
    return msg;
}

// ---------------------------------------------------------------- ingest

struct IngestOutcome {
    std::string session_id;
    int duration_s = 0;
    ingest::IngestReport report;
};

IngestOutcome ingest_one(const RunConfig& cfg, const SessionInputs& in) {
    if (in.session_id.empty()) throw InputError("session_id is required");
    const auto roster = ingest::parse_roster(read_file(in.roster), in.roster.string());

    auto gaze_all = ingest::parse_gaze_table(read_file(in.gaze), in.gaze.string());
    std::vector<ingest::GazeRecord> gaze;
    for (auto& g : gaze_all) {
        if (g.session_id == in.session_id) gaze.push_back(std::move(g));
    }
    if (gaze.empty()) {
        throw SchemaError(in.gaze.string() + ": no gaze records for session '" + in.session_id + "'");
    }

    std::vector<SpeechSegment> segments;
    for (const auto& d : in.diarization) {
        auto part = ingest::parse_diarization(read_file(d), d.string());
        segments.insert(segments.end(), part.begin(), part.end());
    }
    if (const auto v = validate_segments(segments); !v.empty()) {
        throw InputError(violations_message("session '" + in.session_id + "': invalid speech segments", v));
    }

    ingest::SpeakerMap map;
    if (!in.speaker_map.empty()) {
        map = ingest::parse_speaker_map(read_file(in.speaker_map), in.speaker_map.string());
    } else if (cfg.strict_mapping && !segments.empty()) {
        throw MappingError("session '" + in.session_id + "': strict mapping requires a speaker map");
    }
    if (const auto problems = ingest::validate_speaker_map(map, roster); !problems.empty()) {
        std::string msg = "speaker map does not match roster:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw MappingError(msg);
    }
    const auto attribution = ingest::apply_speaker_map(
        segments, map, cfg.strict_mapping ? ingest::MappingMode::Strict : ingest::MappingMode::Lenient);

    const int duration = in.duration_s ? *in.duration_s : ingest::infer_duration(gaze, attribution.segments);
    auto built = ingest::build_timeline(in.session_id, gaze, attribution.segments, roster, duration);
    built.report.unmapped_labels = attribution.unmapped_labels;
    if (const auto v = validate_timeline(built.timeline); !v.empty()) {
        throw InputError(violations_message("session '" + in.session_id + "': invalid timeline", v));
    }
    for (auto& w : plausibility_warnings(built.timeline)) built.report.warnings.push_back(std::move(w));

    const auto doc = io::serialize_timeline(built.timeline);
    const auto dir = session_dir(cfg, in.session_id);
    write_atomic(dir / "session.json", doc.session_json);
    write_atomic(dir / "timeline.csv", doc.frames_csv);

    const auto& r = built.report;
    ordered_json report{{"session_id", in.session_id},
                        {"duration_s", duration},
                        {"gaze_gaps", r.gaze_gaps},
                        {"gaze_gaps_carried", r.gaze_gaps_carried},
                        {"gaze_gaps_defaulted", r.gaze_gaps_defaulted},
                        {"gaps_by_participant", r.gaps_by_participant},
                        {"segments_clipped", r.segments_clipped},
                        {"unmapped_speakers", r.unmapped_labels},
                        {"unattributed_segments", attribution.unattributed.size()},
                        {"warnings", r.warnings}};
    write_atomic(dir / "ingest_report.json", report.dump(2) + "\n");
    return {in.session_id, duration, r};
}

int cmd_ingest(const RunConfig& cfg, std::ostream& out) {
    if (cfg.sessions.empty()) throw InputError("no sessions configured (use --gaze/--roster or a config file)");
    std::vector<IngestOutcome> outcomes(cfg.sessions.size());
    parallel_each(cfg.sessions.size(), [&](std::size_t i) { outcomes[i] = ingest_one(cfg, cfg.sessions[i]); });
    for (const auto& o : outcomes) {
        out << "ingested " << o.session_id << ": " << o.duration_s << " s, " << o.report.gaze_gaps
            << " gaze gaps filled, " << o.report.unmapped_labels.size() << " unmapped speaker label(s)\n";
        for (const auto& w : o.report.warnings) spdlog::warn("{}: {}", o.session_id, w);
    }
    return 0;
}

// ---------------------------------------------------------------- analyze

std::vector<std::string> list_sessions(const RunConfig& cfg) {
    std::vector<std::string> ids;
    const auto root = cfg.out_dir / "sessions";
    if (!fs::exists(root)) return ids;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory() && fs::exists(entry.path() / "session.json")) {
            ids.push_back(entry.path().filename().string());
        }
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

SessionTimeline load_session(const RunConfig& cfg, const std::string& id) {
    const auto dir = session_dir(cfg, id);
    auto t = io::parse_timeline(read_file(dir / "session.json"), read_file(dir / "timeline.csv"), dir.string());
    if (const auto v = validate_timeline(t); !v.empty()) {
        throw InputError(violations_message("session '" + id + "': invalid timeline", v));
    }
    return t;
}

std::string summary_line(const SessionTimeline& t, const pipeline::SessionResult& r,
                         const std::vector<EngagementProfile>& profiles) {
    std::array<int, kInteractionCount> counts{};
    for (const auto& f : r.coded) ++counts[static_cast<std::size_t>(f.interaction)];
    std::ostringstream line;
    line << "session " << t.session_id << ": " << t.duration_s << " s |";
    for (auto kind : kAllInteractions) {
        line << ' ' << to_string(kind) << '='
             << csv::format_number(static_cast<double>(counts[static_cast<std::size_t>(kind)]) /
                                   std::max<std::size_t>(1, r.coded.size()));
    }
    line << " |";
    for (const auto& p : profiles) {
        line << ' ' << p.participant << "(A=" << csv::format_number(p.freq_active)
             << " S=" << csv::format_number(p.freq_semi) << " P=" << csv::format_number(p.freq_passive) << ')';
    }
    return line.str();
}

int cmd_analyze(const RunConfig& cfg, std::ostream& out) {
    cfg.pipeline.validate();
    const auto ids = list_sessions(cfg);
    if (ids.empty()) throw InputError("no ingested sessions under '" + (cfg.out_dir / "sessions").string() + "'");

    std::vector<SessionTimeline> timelines(ids.size());
    parallel_each(ids.size(), [&](std::size_t i) { timelines[i] = load_session(cfg, ids[i]); });
    const auto results = pipeline::process_corpus(timelines, cfg.pipeline);

    std::vector<EngagementProfile> all;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        write_atomic(session_dir(cfg, ids[i]) / "coded.csv", io::coded_table(results[i].smoothed, results[i].coded));
        const auto profiles = analytics::session_profiles(timelines[i], results[i].coded);
        for (const auto& p : profiles) {
            if (const auto v = validate_profile(p); !v.empty()) {
                throw ConsistencyError(violations_message("profile invariant broken", v));
            }
        }
        out << summary_line(timelines[i], results[i], profiles) << '\n';
        all.insert(all.end(), profiles.begin(), profiles.end());
    }
    write_atomic(cfg.out_dir / "profiles.csv", io::profiles_table(all));
    return 0;
}

// ---------------------------------------------------------------- cluster

int cmd_cluster(const RunConfig& cfg, std::ostream& out) {
    const auto path = cfg.profiles ? *cfg.profiles : cfg.out_dir / "profiles.csv";
    const auto profiles = io::parse_profiles_table(read_file(path), path.string());
    const auto points = analytics::to_points(profiles);

    kmeans::Options opts;
    opts.k = cfg.k;
    opts.runs = cfg.runs;
    opts.seed = cfg.seed;
    const auto model = kmeans::kmeans_cluster(points, opts);

    std::optional<analytics::ClusterLabeling> labeling;
    if (model.k == 2) labeling = analytics::label_clusters(model);

    const auto doc = io::make_cluster_document(model, profiles, labeling);
    write_atomic(cfg.out_dir / "clusters.json", io::serialize_cluster_document(doc));
    write_atomic(cfg.out_dir / "cluster_means.csv", io::cluster_means_table(model, profiles, labeling));

    const int k_max = std::min<int>(cfg.elbow_k_max, static_cast<int>(points.size()));
    if (k_max >= 1) {
        write_atomic(cfg.out_dir / "elbow.csv", io::elbow_table(kmeans::elbow_scan(points, 1, k_max, cfg.runs, cfg.seed)));
    }

    out << "clustered " << profiles.size() << " profiles into k=" << model.k
        << " (wss=" << csv::format_number(model.wss) << ", awcd=" << csv::format_number(model.awcd_negated)
        << ", seed=" << cfg.seed << ")\n";
    if (labeling) {
        out << "drivers: cluster " << labeling->driver_cluster << ", passengers: cluster "
            << labeling->passenger_cluster << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------- compare

int cmd_compare(const RunConfig& cfg, std::ostream& out) {
    if (!cfg.measures) throw InputError("compare needs a measures table (--measures)");
    const auto path = cfg.clusters ? *cfg.clusters : cfg.out_dir / "clusters.json";
    const auto doc = io::parse_cluster_document(read_file(path), path.string());
    if (!doc.labeling) throw InputError(path.string() + ": cluster document has no driver/passenger labels");

    std::map<std::string, analytics::EngagementRole> roles;
    for (const auto& e : doc.entries) {
        const auto role = doc.labeling->role_of(e.cluster);
        const auto [it, inserted] = roles.emplace(e.participant, role);
        if (!inserted && it->second != role) {
            throw InputError("participant '" + e.participant + "' has conflicting cluster labels");
        }
    }
    const auto measures = io::parse_measures_table(read_file(*cfg.measures), cfg.measures->string());
    const auto rows = analytics::compare_clusters(roles, measures, cfg.compare);
    write_atomic(cfg.out_dir / "comparison.csv", io::comparison_table(rows));

    int ok = 0;
    for (const auto& row : rows) {
        if (row.report) {
            ++ok;
            const auto& r = row.report->result;
            out << row.measure << ": t=" << csv::format_number(r.t) << " df=" << csv::format_number(r.df)
                << " p_one=" << csv::format_number(r.p_one_sided) << " p_two=" << csv::format_number(r.p_two_sided)
                << " d=" << csv::format_number(r.cohens_d) << '\n';
        } else {
            out << row.measure << ": error: " << row.error << '\n';
        }
    }
    if (ok == 0) {
        spdlog::error("no comparison row could be computed");
        return 1;
    }
    return 0;
}

// ---------------------------------------------------------------- simulate

// Raw ingest-format tables for a synthetic session, so it can also be fed
// through `engage ingest`.
void write_raw_tables(const fs::path& dir, const SessionTimeline& t) {
    const auto ids = t.student_ids();
    std::string gaze;
    csv::append_row(gaze, {"session_id", "second", "participant_id", "gaze"});
    for (const auto& f : t.frames) {
        for (const auto& st : f.students) {
            csv::append_row(gaze, {t.session_id, std::to_string(f.second), ids[st.student], std::string(to_string(st.gaze))});
        }
    }
    std::string roster;
    csv::append_row(roster, {"participant_id", "role"});
    std::string map;
    csv::append_row(map, {"speaker_label", "participant_id", "role"});
    for (std::size_t i = 0; i < t.participants.size(); ++i) {
        const auto& p = t.participants[i];
        csv::append_row(roster, {p.id, std::string(to_string(p.role))});
        csv::append_row(map, {"spk_" + std::to_string(i), p.id, std::string(to_string(p.role))});
    }

    // Maximal runs of speaking seconds become [start, end) segments.
    std::string diar;
    csv::append_row(diar, {"speaker", "start", "end"});
    auto emit_runs = [&](const std::string& label, auto speaking_at) {
        int run_start = -1;
        for (int s = 0; s <= t.duration_s; ++s) {
            const bool on = s < t.duration_s && speaking_at(static_cast<std::size_t>(s));
            if (on && run_start < 0) run_start = s;
            if (!on && run_start >= 0) {
                csv::append_row(diar, {label, std::to_string(run_start), std::to_string(s)});
                run_start = -1;
            }
        }
    };
    std::size_t student = 0;
    for (std::size_t i = 0; i < t.participants.size(); ++i) {
        const auto label = "spk_" + std::to_string(i);
        if (t.participants[i].role == Role::Student) {
            const auto k = student++;
            emit_runs(label, [&](std::size_t s) { return t.frames[s].students[k].speaking; });
        } else {
            emit_runs(label, [&](std::size_t s) { return t.frames[s].tutor_speaking; });
        }
    }
    write_atomic(dir / "gaze.csv", gaze);
    write_atomic(dir / "roster.csv", roster);
    write_atomic(dir / "speaker_map.csv", map);
    write_atomic(dir / "diarization.csv", diar);
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
    const auto session = synth::generate_session(cfg.scenario, cfg.pipeline);
    const auto& t = session.timeline;
    const auto dir = session_dir(cfg, t.session_id);
    const auto doc = io::serialize_timeline(t);
    write_atomic(dir / "session.json", doc.session_json);
    write_atomic(dir / "timeline.csv", doc.frames_csv);
    write_atomic(dir / "truth.csv", io::coded_table(t, session.truth));
    write_atomic(dir / "scenario.json", io::serialize_scenario(cfg.scenario));
    std::string transitions;
    csv::append_row(transitions, {"second", "transition"});
    for (std::size_t s = 0; s < session.transition.size(); ++s) {
        csv::append_row(transitions, {std::to_string(s), session.transition[s] ? "Y" : "N"});
    }
    write_atomic(dir / "transitions.csv", transitions);
    const auto raw_dir = cfg.out_dir / "synthetic" / t.session_id;
    write_raw_tables(raw_dir, t);
    out << "simulated " << t.session_id << ": " << t.duration_s << " s, " << session.episodes.size()
        << " episodes, seed " << cfg.scenario.seed << '\n';

    if (!cfg.self_check) return 0;

    // Through the real ingest path, then the pipeline, against ground truth.
    const auto roster = ingest::parse_roster(read_file(raw_dir / "roster.csv"), "roster.csv");
    const auto gaze = ingest::parse_gaze_table(read_file(raw_dir / "gaze.csv"), "gaze.csv");
    const auto segs = ingest::parse_diarization(read_file(raw_dir / "diarization.csv"), "diarization.csv");
    const auto map = ingest::parse_speaker_map(read_file(raw_dir / "speaker_map.csv"), "speaker_map.csv");
    const auto attributed = ingest::apply_speaker_map(segs, map, ingest::MappingMode::Strict);
    const auto built = ingest::build_timeline(t.session_id, gaze, attributed.segments, roster, t.duration_s);
    if (!(built.timeline == t)) throw ConsistencyError("self-check: ingest round trip changed the timeline");

    const auto coded = pipeline::process_session(built.timeline, cfg.pipeline);
    int checked = 0;
    int matched = 0;
    for (std::size_t s = 0; s < coded.size(); ++s) {
        if (session.transition[s]) continue;
        ++checked;
        matched += coded[s] == session.truth[s];
    }
    out << matched << "/" << checked << " seconds matched\n";
    if (matched != checked) throw ConsistencyError("self-check: pipeline disagrees with synthetic ground truth");
    return 0;
}

// ---------------------------------------------------------------- report

int cmd_report(const RunConfig& cfg, std::ostream& out) {
    if (!fs::exists(cfg.out_dir)) throw InputError("output directory '" + cfg.out_dir.string() + "' does not exist");
    const auto report_dir = cfg.out_dir / "report";
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(cfg.out_dir)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), cfg.out_dir);
        const auto name = rel.generic_string();
        if (name.starts_with("report/") || name == "manifest.json" || name == "run_meta.json") continue;
        if (name.starts_with("synthetic/")) continue;
        const auto ext = rel.extension();
        if (ext == ".csv" || ext == ".json") files.push_back(rel);
    }
    std::sort(files.begin(), files.end());

    ordered_json manifest;
    manifest["artifacts"] = ordered_json::array();
    for (const auto& rel : files) {
        std::string flat = rel.generic_string();
        std::replace(flat.begin(), flat.end(), '/', '_');
        const auto content = read_file(cfg.out_dir / rel);
        write_atomic(report_dir / flat, content);
        manifest["artifacts"].push_back({{"path", flat}, {"source", rel.generic_string()}, {"sha256", sha256_hex(content)}});
    }
    manifest["seed"] = cfg.seed;
    write_atomic(report_dir / "manifest.json", manifest.dump(2) + "\n");
    out << "report: " << files.size() << " artifacts in " << report_dir.string() << '\n';
    return 0;
}

void configure_logging(std::ostream&) {
    static bool done = false;
    if (!done) {
        auto logger = spdlog::stderr_logger_mt("engage");
        spdlog::set_default_logger(logger);
        spdlog::set_pattern("[%l] %v");
        done = true;
    }
    const char* level = std::getenv("ENGAGE_LOG");
    spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    configure_logging(err);

    CLI::App app{"Rule-based engagement analytics for collaborative learning sessions", "engage"};
    app.require_subcommand(1);
    Flags f;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--out", f.out, "Output directory");
        sub->add_option("--seed", f.seed, "Random seed");
        sub->add_option("--jobs", f.jobs, "Worker threads for per-session work");
    };
    auto add_pipeline = [&](CLI::App* sub) {
        sub->add_option("--window", f.window, "Gaze smoothing window in seconds (odd)");
        sub->add_option("--itc-window", f.itc_window, "Tutor/student speech co-occurrence radius");
        sub->add_option("--rm-min-lookers", f.rm_min, "Minimum laptop lookers for resource management");
        sub->add_flag("--trailing", f.trailing, "Use a trailing smoothing window");
    };

    auto* ingest_cmd = app.add_subcommand("ingest", "Parse gaze/diarization inputs into session bundles");
    add_common(ingest_cmd);
    ingest_cmd->add_option("--session-id", f.session_id, "Session id");
    ingest_cmd->add_option("--gaze", f.gaze, "Gaze annotation table");
    ingest_cmd->add_option("--diarization", f.diarization, "Diarization document(s)");
    ingest_cmd->add_option("--speaker-map", f.speaker_map, "Speaker label mapping table");
    ingest_cmd->add_option("--roster", f.roster, "Roster table");
    ingest_cmd->add_option("--duration", f.duration, "Session length in seconds");
    ingest_cmd->add_flag("--strict", f.strict, "Fail on unmapped speaker labels");

    auto* analyze_cmd = app.add_subcommand("analyze", "Code every ingested session and write profiles");
    add_common(analyze_cmd);
    add_pipeline(analyze_cmd);

    auto* cluster_cmd = app.add_subcommand("cluster", "k-means over engagement profiles");
    add_common(cluster_cmd);
    cluster_cmd->add_option("--k", f.k, "Number of clusters");
    cluster_cmd->add_option("--runs", f.runs, "k-means restarts");
    cluster_cmd->add_option("--profiles", f.profiles, "Profiles table");
    cluster_cmd->add_option("--elbow-max", f.elbow_max, "Largest k in the elbow scan (0 disables)");

    auto* compare_cmd = app.add_subcommand("compare", "t-tests between drivers and passengers");
    add_common(compare_cmd);
    compare_cmd->add_option("--measures", f.measures, "Measures table");
    compare_cmd->add_option("--clusters", f.clusters, "Cluster document");
    compare_cmd->add_option("--variant", f.variant, "welch|student");
    compare_cmd->add_option("--tail", f.tail, "one|two");
    compare_cmd->add_option("--alternative", f.alternative, "greater|less (drivers relative to passengers)");

    auto* simulate_cmd = app.add_subcommand("simulate", "Generate a synthetic session with ground truth");
    add_common(simulate_cmd);
    add_pipeline(simulate_cmd);
    simulate_cmd->add_option("--scenario", f.scenario, "Scenario JSON document");
    simulate_cmd->add_option("--preset", f.preset, "Named scenario preset");
    simulate_cmd->add_flag("--self-check", f.self_check, "Run the pipeline and compare with ground truth");

    auto* report_cmd = app.add_subcommand("report", "Bundle all tables into one directory with a manifest");
    add_common(report_cmd);

    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    for (auto* sub : app.get_subcommands()) {
        for (const auto* opt : sub->get_options()) {
            if (opt->count() > 0) {
                for (const auto& name : opt->get_lnames()) f.given.insert("--" + name);
            }
        }
    }

    try {
        const auto cfg = resolve_config(f);
        fs::create_directories(cfg.out_dir);
        auto* sub = app.get_subcommands().front();
        const auto name = sub->get_name();
        int code = 0;
        if (name == "ingest") code = cmd_ingest(cfg, out);
        else if (name == "analyze") code = cmd_analyze(cfg, out);
        else if (name == "cluster") code = cmd_cluster(cfg, out);
        else if (name == "compare") code = cmd_compare(cfg, out);
        else if (name == "simulate") code = cmd_simulate(cfg, out);
        else if (name == "report") code = cmd_report(cfg, out);
        if (name != "report") write_manifest(cfg);
        write_run_meta(cfg, name);
        return code;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace engage::cli
