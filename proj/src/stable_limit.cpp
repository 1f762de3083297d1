#include "peel/stable_limit.hpp"

#include "peel/parallel.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace peel {

namespace {

constexpr std::uint64_t kDomain = 3;

std::uint64_t walk_group(std::uint64_t check, const KernelContext& ctx, WalkBranch branch)
{
    return (check << 8) | (static_cast<std::uint64_t>(ctx.kernel().kind) << 2)
           | (static_cast<std::uint64_t>(ctx.kernel().model.kind == MapKind::Quadrangulation) << 1)
           | static_cast<std::uint64_t>(branch == WalkBranch::Free);
}

double quantile(std::vector<double>& v, double q)
{
    if (v.empty())
        return 0;
    const auto k = static_cast<std::size_t>(q * static_cast<double>(v.size() - 1) + 0.5);
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    return v[k];
}

}  // namespace

double overshoot_law(double a, double b)
{
    return crossing_formula(a, b);
}

double kolmogorov_survival(double t)
{
    if (t <= 0)
        return 1;
    if (t < 0.2)
        return 1;
    double sum = 0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * t * t);
        sum += (k % 2 ? 1 : -1) * term;
        if (term < 1e-18)
            break;
    }
    return std::clamp(2 * sum, 0.0, 1.0);
}

KsResult two_sample_ks(std::vector<double> x, std::vector<double> y)
{
    if (x.empty() || y.empty())
        throw std::invalid_argument("KS test needs two non-empty samples");
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v)
            ++i;
        while (j < y.size() && y[j] == v)
            ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
    }
    const double ne = std::sqrt(nx * ny / (nx + ny));
    return {d, kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d)};
}

FrequencyReport positivity_check(const KernelContext& ctx, WalkBranch branch, std::int64_t n,
                                 std::int64_t trials, std::uint64_t seed, int workers)
{
    if (n < 1 || trials < 1)
        throw std::domain_error("horizon and trials must be positive");
    std::vector<char> positive(static_cast<std::size_t>(trials));
    const std::uint64_t group = walk_group(1, ctx, branch);
    parallel_for(trials, workers, [&](std::int64_t i) {
        RngStream rng(seed, stream_id(kDomain, group, static_cast<std::uint64_t>(i)));
        std::int64_t s = 0;
        for (std::int64_t k = 0; k < n; ++k)
            s += sample_increment(ctx, branch, rng);
        positive[static_cast<std::size_t>(i)] = s > 0;
    });
    FrequencyReport r;
    r.trials = trials;
    r.horizon = n;
    r.frequency = static_cast<double>(std::count(positive.begin(), positive.end(), 1)) / static_cast<double>(trials);
    r.stderr_ = std::sqrt(r.frequency * (1 - r.frequency) / static_cast<double>(trials));
    return r;
}

ExponentFit ladder_epoch_exponent(const KernelContext& ctx, WalkBranch branch, std::int64_t trials,
                                  std::int64_t horizon, std::uint64_t seed, int workers)
{
    if (horizon < 10000)
        throw std::domain_error("ladder horizon must be at least 1e4");
    if (trials < 1)
        throw std::domain_error("need at least one trial");
    ExponentFit fit;
    fit.trials = trials;
    fit.n_max = horizon;
    fit.n_min = horizon / 64;

    // sigma for every trial (horizon + 1 when it never went <= 0)
    std::vector<std::int64_t> sigma(static_cast<std::size_t>(trials));
    const std::uint64_t group = walk_group(2, ctx, branch);
    parallel_for(trials, workers, [&](std::int64_t i) {
        RngStream rng(seed, stream_id(kDomain, group, static_cast<std::uint64_t>(i)));
        std::int64_t s = 1, k = 0;
        while (k < horizon) {
            s += sample_increment(ctx, branch, rng);
            ++k;
            if (s <= 0)
                break;
        }
        sigma[static_cast<std::size_t>(i)] = s <= 0 ? k : horizon + 1;
    });
    std::sort(sigma.begin(), sigma.end());

    std::vector<double> xs, ys, ws;
    for (int j = 0; j <= 12; ++j) {
        const auto n = static_cast<std::int64_t>(std::llround(static_cast<double>(fit.n_min) * std::pow(2.0, j / 2.0)));
        const auto survivors = static_cast<std::int64_t>(sigma.end() - std::lower_bound(sigma.begin(), sigma.end(), n));
        fit.survival.push_back({n, survivors});
        if (survivors == 0)
            continue;
        const double p = static_cast<double>(survivors) / static_cast<double>(trials);
        xs.push_back(std::log(static_cast<double>(n)));
        ys.push_back(std::log(p));
        ws.push_back(static_cast<double>(trials) * p / std::max(1 - p, 1e-12));
    }
    const std::int64_t last = fit.survival.back().survivors;
    if (last < 100 || xs.size() < 3) {
        fit.note = "fewer than 100 survivors at the end of the fit window";
        return fit;
    }
    double sw = 0, sx = 0, sy = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sw += ws[k];
        sx += ws[k] * xs[k];
        sy += ws[k] * ys[k];
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sxx += ws[k] * (xs[k] - mx) * (xs[k] - mx);
        sxy += ws[k] * (xs[k] - mx) * (ys[k] - my);
    }
    fit.exponent = sxy / sxx;
    fit.stderr_ = std::sqrt(1 / sxx);
    double chi2 = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double r = ys[k] - (my + fit.exponent * (xs[k] - mx));
        chi2 += ws[k] * r * r;
    }
    boost::math::chi_squared_distribution<double> dist(static_cast<double>(xs.size() - 2));
    fit.fit_pvalue = boost::math::cdf(boost::math::complement(dist, chi2));
    fit.conclusive = true;
    // slopes flatter than -0.05 (under 19% decay across the window) read as a survival floor
    fit.power_law = fit.exponent + 3 * fit.stderr_ < -0.05 && fit.fit_pvalue > 0.001;
    if (!fit.power_law)
        fit.note = "survival curve rejected as a power law";
    return fit;
}

ScalingCheckReport self_similarity_check(const KernelContext& ctx, WalkBranch branch, double lambda1,
                                         double lambda2, double time, std::int64_t trials,
                                         std::uint64_t seed, int workers)
{
    if (!(lambda1 >= 10) || !(lambda2 >= lambda1) || !(time > 0) || trials < 1)
        throw std::domain_error("self-similarity needs 10 <= lambda1 <= lambda2, t > 0");
    auto sample = [&](double lambda) {
        const auto n = static_cast<std::int64_t>(std::floor(lambda * time));
        const double scale = std::pow(lambda, 2.0 / 3.0);
        // streams depend on the scale only, so equal scales give equal samples
        const std::uint64_t group = walk_group(3, ctx, branch) ^ (static_cast<std::uint64_t>(n) << 12);
        std::vector<double> out(static_cast<std::size_t>(trials));
        parallel_for(trials, workers, [&](std::int64_t i) {
            RngStream rng(seed, stream_id(kDomain, group, static_cast<std::uint64_t>(i)));
            std::int64_t s = 0;
            for (std::int64_t k = 0; k < n; ++k)
                s += sample_increment(ctx, branch, rng);
            // continuity jitter: spreads the lattice so both scales compare as continuous laws
            out[static_cast<std::size_t>(i)] = (static_cast<double>(s) + rng.uniform() - 0.5) / scale;
        });
        return out;
    };
    ScalingCheckReport r;
    r.lambda1 = lambda1;
    r.lambda2 = lambda2;
    r.time = time;
    const auto ks = two_sample_ks(sample(lambda1), sample(lambda2));
    r.ks_statistic = ks.statistic;
    r.ks_pvalue = ks.pvalue;
    r.size1 = r.size2 = trials;
    return r;
}

XiReport xi_growth_check(const KernelContext& ctx, const std::vector<std::int64_t>& horizons,
                         std::int64_t trials, std::uint64_t seed, int workers)
{
    if (ctx.kernel().kind == KernelKind::Face)
        throw std::invalid_argument("the face kernel has no free segment");
    if (horizons.empty() || trials < 1)
        throw std::domain_error("need horizons and trials");
    std::vector<std::int64_t> ns = horizons;
    std::sort(ns.begin(), ns.end());
    if (ns.front() < 1)
        throw std::domain_error("horizons must be positive");
    const std::size_t m = ns.size();
    std::vector<std::int64_t> zeros(static_cast<std::size_t>(trials) * m);
    const std::uint64_t group = walk_group(4, ctx, WalkBranch::Free);
    parallel_for(trials, workers, [&](std::int64_t i) {
        RngStream rng(seed, stream_id(kDomain, group, static_cast<std::uint64_t>(i)));
        // B never matters for the free length; keep it far from zero
        WalkState s{std::int64_t{1} << 62, 0, 0};
        std::int64_t count = 0;
        std::size_t next = 0;
        for (std::int64_t k = 0; next < m; ++k) {
            while (next < m && ns[next] == k)
                zeros[static_cast<std::size_t>(i) * m + next++] = count;
            if (next == m)
                break;
            count += s.free_len == 0;
            s = kernel_step(s, ctx, rng);
            s.black_len = std::int64_t{1} << 62;
        }
    });
    XiReport rep;
    rep.trials = trials;
    rep.median_non_increasing = true;
    for (std::size_t j = 0; j < m; ++j) {
        std::vector<double> v(static_cast<std::size_t>(trials));
        const double norm = std::pow(static_cast<double>(ns[j]), 0.4);
        for (std::int64_t i = 0; i < trials; ++i)
            v[static_cast<std::size_t>(i)] = static_cast<double>(zeros[static_cast<std::size_t>(i) * m + j]) / norm;
        XiQuantiles q;
        q.n = ns[j];
        q.q10 = quantile(v, 0.1);
        q.median = quantile(v, 0.5);
        q.q90 = quantile(v, 0.9);
        if (!rep.rows.empty() && q.median > rep.rows.back().median)
            rep.median_non_increasing = false;
        rep.rows.push_back(q);
    }
    return rep;
}

}  // namespace peel
