#pragma once

#include <span>

namespace engage::stats {

struct GroupSummary {
    int n = 0;
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation, n-1 denominator
};

enum class Variant { Welch, Student };
enum class Tail { One, Two };
// Direction of the one-sided hypothesis: Greater means mean(a) > mean(b).
enum class Alternative { Greater, Less };

struct TestResult {
    double t = 0.0;
    double df = 0.0;
    double p_two_sided = 1.0;
    double p_one_sided = 0.5;
    double cohens_d = 0.0;
    Variant variant = Variant::Welch;
    Tail tail = Tail::Two;
    Alternative alternative = Alternative::Greater;

    double p() const noexcept { return tail == Tail::One ? p_one_sided : p_two_sided; }
};

/// Throws InputError for fewer than two values.
GroupSummary summarize(std::span<const double> values);

/// Regularized incomplete beta I_x(a, b), continued fraction evaluation.
double incomplete_beta(double a, double b, double x);

/// Tail::One gives P(T > t); Tail::Two gives P(|T| > |t|). Throws
/// InputError when df <= 0.
double t_tail_probability(double t, double df, Tail tail);

/// Pooled-SD standardized mean difference (a - b) / s_pooled.
double cohens_d(const GroupSummary& a, const GroupSummary& b);

TestResult t_test(const GroupSummary& a, const GroupSummary& b, Variant variant = Variant::Welch,
                  Tail tail = Tail::Two, Alternative alternative = Alternative::Greater);

}  // namespace engage::stats
