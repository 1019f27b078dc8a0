#pragma once

#include <cstdint>
#include <vector>

namespace teggcn {

enum class LogBase { natural, base2 };

struct TEConfig {
    int k_lag = 1;         // target history length
    int l_lag = 1;         // source history length
    int k_neighbors = 3;   // KSG neighbor count
    LogBase log_base = LogBase::natural;
    uint64_t tie_noise_seed = 0;  // seeds the duplicate-breaking jitter in te_ksg
};

struct SeriesPair {
    std::vector<double> x;  // target
    std::vector<double> y;  // source
};

// Lagged joint samples (x_{t+1}, x history, y history), aligned so that
// sample t pairs x[t+1] with the k most recent x values and l most recent y
// values at time t. Histories are stored most-recent-first.
struct EmbeddedSeries {
    int k_lag = 0;
    int l_lag = 0;
    int count = 0;
    std::vector<double> x_next;  // count
    std::vector<double> x_hist;  // count x k_lag, row-major
    std::vector<double> y_hist;  // count x l_lag, row-major
};

EmbeddedSeries embed(const SeriesPair& pair, const TEConfig& cfg);

// Histogram plug-in estimate of the transfer entropy from y to x: each
// coordinate is discretized into num_bins equal-width bins over its observed
// range, probabilities are estimated by counting, and the conditional
// mutual information sum is evaluated over observed joint states. Constant
// coordinates collapse into a single bin, so fully constant input returns 0.
double te_plugin(const SeriesPair& pair, const TEConfig& cfg, int num_bins);

// Kraskov-style nearest-neighbor estimate of the same quantity (variant 1,
// strict-inequality counts at the radius of the k-th joint-space neighbor).
// Reported in the configured log base; slightly negative values are possible
// and are not clamped. Throws on constant input series.
double te_ksg(const SeriesPair& pair, const TEConfig& cfg);

// Digamma function for positive arguments.
double digamma(double x);

}  // namespace teggcn
