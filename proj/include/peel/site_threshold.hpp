#pragma once

#include "peel/enumeration.hpp"
#include "peel/peeling.hpp"
#include "peel/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace peel {

struct SiteChainState {
    std::int64_t black_len = 1;
    std::int64_t step_index = 0;
    bool absorbed = false;
};

// One step given the colour of the revealed vertex and the right swallow H.
SiteChainState apply_site_step(SiteChainState state, bool black, std::int64_t swallowed);

// H is drawn on every step, whatever the colour, so that runs at different p driven by
// the same stream stay coupled (black_len is pointwise non-decreasing in p).
SiteChainState step_site_chain(SiteChainState state, double p, const PeelSampler& sampler,
                               RngStream& rng);

enum class SiteTrialKind { Absorbed, Escaped, Censored };

struct SiteTrialOutcome {
    SiteTrialKind kind;
    std::int64_t steps;
    std::int64_t max_black;
};

SiteTrialOutcome run_site_trial(double p, const PeelSampler& sampler, RngStream& rng,
                                std::int64_t escape_height, std::int64_t max_steps);

Rational universal_threshold(const Rational& eta, const Rational& delta);

struct ThresholdBudget {
    std::int64_t trials_per_probe = 20000;
    std::int64_t escape_height = 10000;
    std::int64_t max_steps = 1000000;
    std::int64_t max_probes = 40;
};

struct ProbeRecord {
    double p = 0;
    std::int64_t trials = 0;
    std::int64_t escaped = 0;
    std::int64_t censored = 0;
    std::int64_t reached_quarter = 0;  // trials with max black length >= escape_height / 4
    std::int64_t steps = 0;
    double escape_freq = 0;
    double censored_freq = 0;
    double escape_ratio = 0;  // escaped / reached_quarter
    bool supercritical = false;
};

struct ThresholdEstimate {
    MapKind kind;
    double p_low = 0, p_high = 0;
    std::int64_t trials_per_probe = 0;
    std::int64_t escape_height = 0;
    std::int64_t max_steps = 0;
    bool conclusive = false;
    std::string note;
    double guess = 0;
    ProbeRecord baseline;
    double noise_floor = 0;
    std::vector<ProbeRecord> probes;
    std::int64_t total_steps = 0;
};

ProbeRecord run_probe(double p, const PeelSampler& sampler, const ThresholdBudget& budget,
                      std::uint64_t seed, std::uint64_t group, int workers);

// Bisection on p. A probe is supercritical when escaped / reached_quarter > 1/2; the
// critical chain gives 1/2 in the limit. The baseline at guess - 0.05 and its
// f0 + 5 SE floor are reported alongside. Pass NaN as guess to use the universal value.
ThresholdEstimate estimate_threshold(const MapModel& model, double tolerance,
                                     const ThresholdBudget& budget, std::uint64_t seed,
                                     int workers, double guess);

enum class FreeBoundaryKind { NoPercolationWitness, Escaped, Censored };

struct FreeBoundaryOutcome {
    FreeBoundaryKind kind;
    std::int64_t restarts;
};

// Restart construction: on absorption the pivot vertex is white with probability 1 - p
// (witness) and black otherwise (fresh chain).
FreeBoundaryOutcome run_free_boundary_trial(double p, const PeelSampler& sampler, RngStream& rng,
                                            std::int64_t restarts_cap, std::int64_t escape_height,
                                            std::int64_t max_steps);

}  // namespace peel
