#include "excurse/stats.hpp"

#include <cmath>
#include <thread>
#include <vector>

#include "excurse/parallel.hpp"

namespace excurse {

namespace {
std::atomic<int> g_max_threads{0};
}

void set_max_threads(int n) { g_max_threads = std::max(0, n); }

int max_threads() {
    const int n = g_max_threads.load();
    if (n > 0) return n;
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

double pairwise_sum(std::span<const double> x) {
    if (x.size() <= 8) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t half = x.size() / 2;
    return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

SampleSummary summarize(std::span<const double> x) {
    SampleSummary s;
    s.n = static_cast<long>(x.size());
    if (x.empty()) return s;
    s.mean = pairwise_sum(x) / static_cast<double>(x.size());
    if (x.size() < 2) return s;
    std::vector<double> sq(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) sq[k] = (x[k] - s.mean) * (x[k] - s.mean);
    s.variance = pairwise_sum(sq) / static_cast<double>(x.size() - 1);
    s.std_err = std::sqrt(s.variance / static_cast<double>(x.size()));
    return s;
}

}  // namespace excurse
