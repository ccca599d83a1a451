#include "engage/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <set>
#include <string>

#include "engage/error.hpp"

namespace engage::kmeans {

double squared_distance(const Point& a, const Point& b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

std::size_t distinct_count(std::span<const Point> points) {
    return std::set<Point>(points.begin(), points.end()).size();
}

namespace {

int nearest(const Point& p, const std::vector<Point>& centroids, double& best) {
    int idx = 0;
    best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        const double d = squared_distance(p, centroids[c]);
        if (d < best) {
            best = d;
            idx = static_cast<int>(c);
        }
    }
    return idx;
}

// Returns whether any assignment changed; writes the resulting wss.
bool assign(std::span<const Point> points, const std::vector<Point>& centroids,
            std::vector<int>& assignments, double& wss) {
    bool changed = false;
    wss = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        double d = 0.0;
        const int c = nearest(points[i], centroids, d);
        wss += d;
        if (assignments[i] != c) {
            assignments[i] = c;
            changed = true;
        }
    }
    return changed;
}

void check_inputs(std::span<const Point> points, const Options& opts) {
    if (opts.k < 1) throw InputError("k must be at least 1");
    if (opts.runs < 1) throw InputError("runs must be at least 1");
    if (points.size() < static_cast<std::size_t>(opts.k)) {
        throw InputError("k-means needs at least k=" + std::to_string(opts.k) + " points, got " +
                         std::to_string(points.size()));
    }
    const auto distinct = distinct_count(points);
    if (distinct < static_cast<std::size_t>(opts.k)) {
        throw DegenerateError("k-means with k=" + std::to_string(opts.k) + " on only " +
                              std::to_string(distinct) + " distinct points");
    }
}

ClusterModel select_best(std::span<const Point> points, std::vector<RunResult>& runs,
                         const Options& opts) {
    std::size_t best = 0;
    for (std::size_t r = 1; r < runs.size(); ++r) {
        if (runs[r].wss < runs[best].wss) best = r;
    }
    ClusterModel model;
    model.k = opts.k;
    model.seed = opts.seed;
    model.runs = opts.runs;
    model.best_run = static_cast<int>(best);
    for (const auto& r : runs) model.run_wss.push_back(r.wss);
    model.centroids = std::move(runs[best].centroids);
    model.assignments = std::move(runs[best].assignments);
    model.wss = runs[best].wss;
    std::tie(model.awcd_positive, model.awcd_negated) = within_centroid_distance(model, points);
    return model;
}

}  // namespace

std::vector<Point> seed_plus_plus(std::span<const Point> points, int k, std::uint64_t seed, int run) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(run)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<Point> centroids;
    centroids.reserve(static_cast<std::size_t>(k));
    const auto n = points.size();
    centroids.push_back(points[std::min(n - 1, static_cast<std::size_t>(unit(rng) * static_cast<double>(n)))]);

    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points[i], centroids[0]);
    while (centroids.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (double v : d2) total += v;
        std::size_t pick = n - 1;
        if (total > 0.0) {
            const double target = unit(rng) * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (d2[i] > 0.0 && acc > target) {
                    pick = i;
                    break;
                }
            }
            // Rounding can leave target unreached; take the last positive weight.
            if (acc <= target) {
                for (std::size_t i = n; i-- > 0;) {
                    if (d2[i] > 0.0) {
                        pick = i;
                        break;
                    }
                }
            }
        }
        centroids.push_back(points[pick]);
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_distance(points[i], centroids.back()));
        }
    }
    return centroids;
}

RunResult lloyd(std::span<const Point> points, std::vector<Point> centroids, const Options& opts) {
    RunResult r;
    const auto k = centroids.size();
    r.assignments.assign(points.size(), -1);
    double wss = 0.0;
    assign(points, centroids, r.assignments, wss);
    r.wss_trace.push_back(wss);

    for (int it = 0; it < opts.max_iterations; ++it) {
        std::vector<Point> sums(k, Point{0.0, 0.0, 0.0});
        std::vector<int> counts(k, 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto c = static_cast<std::size_t>(r.assignments[i]);
            ++counts[c];
            for (std::size_t d = 0; d < 3; ++d) sums[c][d] += points[i][d];
        }

        double movement = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            Point next = centroids[c];
            if (counts[c] > 0) {
                for (std::size_t d = 0; d < 3; ++d) next[d] = sums[c][d] / counts[c];
            } else {
                // Empty cluster: move it onto the point farthest from its own
                // centroid among clusters that can spare a member.
                double worst = -1.0;
                std::size_t worst_i = 0;
                for (std::size_t i = 0; i < points.size(); ++i) {
                    const auto owner = static_cast<std::size_t>(r.assignments[i]);
                    if (counts[owner] < 2) continue;
                    const double d = squared_distance(points[i], centroids[owner]);
                    if (d > worst) {
                        worst = d;
                        worst_i = i;
                    }
                }
                next = points[worst_i];
                --counts[static_cast<std::size_t>(r.assignments[worst_i])];
                r.assignments[worst_i] = static_cast<int>(c);
                counts[c] = 1;
            }
            movement = std::max(movement, squared_distance(next, centroids[c]));
            centroids[c] = next;
        }

        ++r.iterations;
        const bool changed = assign(points, centroids, r.assignments, wss);
        r.wss_trace.push_back(wss);
        if (!changed || movement < opts.tolerance * opts.tolerance) break;
    }
    r.centroids = std::move(centroids);
    r.wss = wss;
    return r;
}

ClusterModel kmeans_cluster(std::span<const Point> points, const Options& opts) {
    check_inputs(points, opts);
    std::vector<RunResult> runs(static_cast<std::size_t>(opts.runs));
#pragma omp parallel for schedule(static)
    for (int run = 0; run < opts.runs; ++run) {
        runs[static_cast<std::size_t>(run)] =
            lloyd(points, seed_plus_plus(points, opts.k, opts.seed, run), opts);
    }
    return select_best(points, runs, opts);
}

ClusterModel kmeans_cluster_serial(std::span<const Point> points, const Options& opts) {
    check_inputs(points, opts);
    std::vector<RunResult> runs;
    for (int run = 0; run < opts.runs; ++run) {
        runs.push_back(lloyd(points, seed_plus_plus(points, opts.k, opts.seed, run), opts));
    }
    return select_best(points, runs, opts);
}

std::pair<double, double> within_centroid_distance(const ClusterModel& model,
                                                   std::span<const Point> points) {
    if (points.empty()) return {0.0, -0.0};
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        total += squared_distance(points[i], model.centroids.at(static_cast<std::size_t>(model.assignments.at(i))));
    }
    const double mean = total / static_cast<double>(points.size());
    return {mean, -mean};
}

std::vector<ElbowPoint> elbow_scan(std::span<const Point> points, int k_min, int k_max, int runs,
                                   std::uint64_t seed) {
    if (k_min < 1) throw InputError("k_min must be at least 1");
    if (k_max < k_min) throw InputError("k_max must be >= k_min");

    std::vector<ElbowPoint> out;
    const auto distinct = distinct_count(points);
    std::vector<Point> previous;  // best centroids for k-1, empty if unavailable
    for (int k = k_min; k <= k_max; ++k) {
        Options opts;
        opts.k = k;
        opts.runs = runs;
        opts.seed = seed;
        if (points.size() < static_cast<std::size_t>(k)) {
            check_inputs(points, opts);  // throws
        }
        if (static_cast<std::size_t>(k) > distinct) {
            // Every distinct point can hold its own centroid.
            out.push_back({k, 0.0});
            previous.clear();
            continue;
        }
        auto model = kmeans_cluster(points, opts);
        double wss = model.wss;
        std::vector<Point> best = model.centroids;
        if (!previous.empty()) {
            // Warm start: previous optimum plus the worst-fit point never
            // does worse than the k-1 solution.
            double worst = -1.0;
            std::size_t worst_i = 0;
            for (std::size_t i = 0; i < points.size(); ++i) {
                double d = std::numeric_limits<double>::infinity();
                for (const auto& c : previous) d = std::min(d, squared_distance(points[i], c));
                if (d > worst) {
                    worst = d;
                    worst_i = i;
                }
            }
            auto init = previous;
            init.push_back(points[worst_i]);
            auto warm = lloyd(points, std::move(init), opts);
            if (warm.wss < wss) {
                wss = warm.wss;
                best = std::move(warm.centroids);
            }
        }
        out.push_back({k, wss});
        previous = std::move(best);
    }
    return out;
}

}  // namespace engage::kmeans
