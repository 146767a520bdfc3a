#pragma once

#include <span>

namespace excurse {

/// Pairwise (cascade) summation; the result does not depend on threading.
double pairwise_sum(std::span<const double> x);

struct SampleSummary {
    double mean = 0.0;
    /// Unbiased sample variance (0 for fewer than two samples).
    double variance = 0.0;
    double std_err = 0.0;
    long n = 0;
};

SampleSummary summarize(std::span<const double> x);

}  // namespace excurse
