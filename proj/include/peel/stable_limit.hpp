#pragma once

#include "peel/crossing.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace peel {

// P_a(|S_tau| > b) for the spectrally negative 3/2-stable process; same function as
// crossing_formula.
double overshoot_law(double a, double b);

struct KsResult {
    double statistic = 0;
    double pvalue = 1;
};

// Two-sample Kolmogorov-Smirnov test, asymptotic p-value with the Stephens correction.
KsResult two_sample_ks(std::vector<double> x, std::vector<double> y);
double kolmogorov_survival(double t);

struct FrequencyReport {
    double frequency = 0;
    double stderr_ = 0;
    std::int64_t trials = 0;
    std::int64_t horizon = 0;
};

// Frequency of S_n > 0 for the unconstrained walk started at 0.
FrequencyReport positivity_check(const KernelContext& ctx, WalkBranch branch, std::int64_t n,
                                 std::int64_t trials, std::uint64_t seed, int workers);

struct SurvivalPoint {
    std::int64_t n = 0;
    std::int64_t survivors = 0;
};

struct ExponentFit {
    double exponent = 0;
    double stderr_ = 0;
    std::int64_t n_min = 0, n_max = 0;
    bool conclusive = false;
    bool power_law = false;  // significantly negative slope and an acceptable straight-line fit
    double fit_pvalue = 0;
    std::string note;
    std::vector<SurvivalPoint> survival;
    std::int64_t trials = 0;
};

// P(sigma >= n) for the walk started at 1, sigma the first time it is <= 0, fitted on a
// log-log scale over [horizon / 64, horizon].
ExponentFit ladder_epoch_exponent(const KernelContext& ctx, WalkBranch branch, std::int64_t trials,
                                  std::int64_t horizon, std::uint64_t seed, int workers);

struct ScalingCheckReport {
    double lambda1 = 0, lambda2 = 0;
    double time = 0;
    double ks_statistic = 0;
    double ks_pvalue = 1;
    std::int64_t size1 = 0, size2 = 0;
};

// KS comparison of (S_{floor(lambda t)} + U) / lambda^{2/3} at two scales, U uniform on
// [-1/2, 1/2).
ScalingCheckReport self_similarity_check(const KernelContext& ctx, WalkBranch branch, double lambda1,
                                         double lambda2, double time, std::int64_t trials,
                                         std::uint64_t seed, int workers);

struct XiQuantiles {
    std::int64_t n = 0;
    double q10 = 0, median = 0, q90 = 0;  // of xi_n / n^{0.4}
};

struct XiReport {
    std::vector<XiQuantiles> rows;
    std::int64_t trials = 0;
    bool median_non_increasing = false;
};

// Zeros of the free length F_k, k < n, along the crossing chain (bond or site).
XiReport xi_growth_check(const KernelContext& ctx, const std::vector<std::int64_t>& horizons,
                         std::int64_t trials, std::uint64_t seed, int workers);

}  // namespace peel
