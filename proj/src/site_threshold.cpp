#include "peel/site_threshold.hpp"

#include "peel/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace peel {

SiteChainState apply_site_step(SiteChainState state, bool black, std::int64_t swallowed)
{
    if (state.absorbed)
        throw std::logic_error("stepping an absorbed site chain");
    state.black_len = black ? state.black_len + 1 : std::max<std::int64_t>(0, state.black_len + 1 - swallowed);
    state.absorbed = state.black_len == 0;
    ++state.step_index;
    return state;
}

SiteChainState step_site_chain(SiteChainState state, double p, const PeelSampler& sampler,
                               RngStream& rng)
{
    const bool black = rng.uniform() < p;
    const std::int64_t h = sampler.sample_right_conditioned_positive(rng);
    return apply_site_step(state, black, h);
}

SiteTrialOutcome run_site_trial(double p, const PeelSampler& sampler, RngStream& rng,
                                std::int64_t escape_height, std::int64_t max_steps)
{
    if (escape_height < 1 || max_steps < 1)
        throw std::domain_error("escape height and step cap must be positive");
    SiteChainState s;
    std::int64_t top = s.black_len;
    while (s.step_index < max_steps) {
        s = step_site_chain(s, p, sampler, rng);
        top = std::max(top, s.black_len);
        if (s.absorbed)
            return {SiteTrialKind::Absorbed, s.step_index, top};
        if (s.black_len > escape_height)
            return {SiteTrialKind::Escaped, s.step_index, top};
    }
    return {SiteTrialKind::Censored, s.step_index, top};
}

Rational universal_threshold(const Rational& eta, const Rational& delta)
{
    if (eta <= 0 || 2 * eta > delta)
        throw std::domain_error("universal threshold needs 0 < 2 eta <= delta");
    return 1 - 2 * eta / delta;
}

ProbeRecord run_probe(double p, const PeelSampler& sampler, const ThresholdBudget& budget,
                      std::uint64_t seed, std::uint64_t group, int workers)
{
    ProbeRecord r;
    r.p = p;
    r.trials = budget.trials_per_probe;
    std::vector<SiteTrialOutcome> out(static_cast<std::size_t>(r.trials));
    parallel_for(r.trials, workers, [&](std::int64_t i) {
        RngStream rng(seed, stream_id(1, group, static_cast<std::uint64_t>(i)));
        out[static_cast<std::size_t>(i)]
            = run_site_trial(std::clamp(p, 0.0, 1.0), sampler, rng, budget.escape_height, budget.max_steps);
    });
    for (const auto& o : out) {
        r.escaped += o.kind == SiteTrialKind::Escaped;
        r.censored += o.kind == SiteTrialKind::Censored;
        r.reached_quarter += 4 * o.max_black >= budget.escape_height;
        r.steps += o.steps;
    }
    // Censored trials are excluded from the supercritical count, not from the base.
    r.escape_freq = static_cast<double>(r.escaped) / static_cast<double>(r.trials);
    r.censored_freq = static_cast<double>(r.censored) / static_cast<double>(r.trials);
    if (r.reached_quarter > 0)
        r.escape_ratio = static_cast<double>(r.escaped) / static_cast<double>(r.reached_quarter);
    r.supercritical = r.escape_ratio > 0.5;
    return r;
}

ThresholdEstimate estimate_threshold(const MapModel& model, double tolerance,
                                     const ThresholdBudget& budget, std::uint64_t seed,
                                     int workers, double guess)
{
    if (!(tolerance >= 0.005))
        throw std::domain_error("threshold tolerance below 0.005");
    if (budget.trials_per_probe < 1)
        throw std::domain_error("need at least one trial per probe");

    const PeelingLaw law(model);
    const PeelSampler sampler(law);
    ThresholdEstimate est;
    est.kind = model.kind;
    est.trials_per_probe = budget.trials_per_probe;
    est.escape_height = budget.escape_height;
    est.max_steps = budget.max_steps;
    if (std::isnan(guess)) {
        const auto m = law_moments(law);
        guess = to_double(universal_threshold(m.eta, m.delta));
    }
    est.guess = guess;

    est.baseline = run_probe(guess - 0.05, sampler, budget, seed, 0, workers);
    est.total_steps += est.baseline.steps;
    const double f0 = est.baseline.escape_freq;
    const double se0 = std::sqrt(f0 * (1 - f0) / static_cast<double>(budget.trials_per_probe));
    est.noise_floor = f0 + 5 * se0;

    // Initial bracket [1 - W, 1] with W = tolerance 2^j >= 1, so that halving ends at
    // exactly the requested width. Probes below 0 run at p = 0.
    double width = tolerance;
    while (width < 1)
        width *= 2;
    double lo = 1 - width, hi = 1;
    std::uint64_t group = 1;
    while (hi - lo > tolerance * (1 + 1e-9)) {
        if (static_cast<std::int64_t>(est.probes.size()) >= budget.max_probes) {
            est.note = "probe budget exhausted before the bracket reached the tolerance";
            est.p_low = lo;
            est.p_high = hi;
            return est;
        }
        const double mid = 0.5 * (lo + hi);
        ProbeRecord r = run_probe(mid, sampler, budget, seed, group++, workers);
        est.total_steps += r.steps;
        (r.supercritical ? hi : lo) = mid;
        est.probes.push_back(r);
    }
    est.p_low = lo;
    est.p_high = hi;
    est.conclusive = hi < 1 && lo > 0;
    if (!est.conclusive)
        est.note = "bracket touches the edge of [0, 1]";
    return est;
}

FreeBoundaryOutcome run_free_boundary_trial(double p, const PeelSampler& sampler, RngStream& rng,
                                            std::int64_t restarts_cap, std::int64_t escape_height,
                                            std::int64_t max_steps)
{
    if (restarts_cap < 1 || escape_height < 1 || max_steps < 1)
        throw std::domain_error("caps must be positive");
    for (std::int64_t restarts = 0; restarts < restarts_cap; ++restarts) {
        const auto o = run_site_trial(p, sampler, rng, escape_height, max_steps);
        if (o.kind == SiteTrialKind::Escaped)
            return {FreeBoundaryKind::Escaped, restarts};
        if (o.kind == SiteTrialKind::Censored)
            return {FreeBoundaryKind::Censored, restarts};
        if (!(rng.uniform() < p))
            return {FreeBoundaryKind::NoPercolationWitness, restarts};
    }
    return {FreeBoundaryKind::Censored, restarts_cap};
}

}  // namespace peel
