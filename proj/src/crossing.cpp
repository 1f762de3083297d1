#include "peel/crossing.hpp"

#include "peel/parallel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace peel {

std::string_view kernel_name(KernelKind kind)
{
    switch (kind) {
    case KernelKind::Bond: return "bond";
    case KernelKind::Face: return "face";
    case KernelKind::Site: return "site";
    }
    return "?";
}

KernelKind parse_kernel(std::string_view name)
{
    if (name == "bond")
        return KernelKind::Bond;
    if (name == "face")
        return KernelKind::Face;
    if (name == "site")
        return KernelKind::Site;
    throw std::invalid_argument("unknown kernel: " + std::string(name));
}

Rational critical_probability(KernelKind kind, MapKind model)
{
    const bool tri = model == MapKind::Triangulation;
    switch (kind) {
    case KernelKind::Bond: return tri ? Rational(1, 4) : Rational(1, 3);
    case KernelKind::Face: return tri ? Rational(4, 5) : Rational(3, 4);
    case KernelKind::Site: return tri ? Rational(1, 2) : Rational(5, 9);
    }
    throw std::invalid_argument("unknown kernel");
}

CrossingKernel make_kernel(KernelKind kind, MapKind model)
{
    return {kind, MapModel::of(model), critical_probability(kind, model)};
}

KernelContext::KernelContext(const CrossingKernel& kernel)
    : KernelContext(kernel, to_double(kernel.p_critical))
{
}

KernelContext::KernelContext(const CrossingKernel& kernel, double p)
    : kernel_(kernel), law_(kernel.model), sampler_(law_), p_(p)
{
    if (!(p >= 0 && p <= 1))
        throw std::domain_error("colour probability outside [0, 1]");
}

WalkState bond_update(WalkState s, bool black, const PeelEvent& e)
{
    if (black && s.free_len > 0) {
        --s.free_len;
        ++s.black_len;
    } else {
        s.free_len = e.exposed + std::max<std::int64_t>(0, s.free_len - e.swallowed_left - 1);
        s.black_len -= e.swallowed_right;
    }
    ++s.step_index;
    return s;
}

WalkState face_update(WalkState s, bool black, const PeelEvent& e)
{
    s.black_len += (black ? e.exposed : 0) - e.swallowed_right - 1;
    s.free_len = 0;
    ++s.step_index;
    return s;
}

namespace {

inline std::int64_t site_free_advance(std::int64_t f, const PeelEvent& e)
{
    return f - e.swallowed_left - 1 >= 0 ? f + e.exposed - e.swallowed_left - 1 : e.exposed - 1;
}

}  // namespace

WalkState site_update(WalkState s, bool black, const std::vector<PeelEvent>& events)
{
    if (black && s.free_len > 0) {
        --s.free_len;
        ++s.black_len;
    } else {
        if (events.empty() || events.back().swallowed_right == 0)
            throw std::invalid_argument("vertex peeling must end with a right swallow");
        std::int64_t f = std::max<std::int64_t>(0, s.free_len - 1);
        for (const auto& e : events)
            f = site_free_advance(f, e);
        s.free_len = f;
        s.black_len += 1 - events.back().swallowed_right;
    }
    ++s.step_index;
    return s;
}

WalkState bond_step(WalkState s, const KernelContext& ctx, RngStream& rng, StepRecord* rec)
{
    if (s.free_len > 0 && rng.uniform() < ctx.p()) {
        --s.free_len;
        ++s.black_len;
        ++s.step_index;
        if (rec)
            *rec = {false, true, {}};
        return s;
    }
    const PeelEvent e = ctx.sampler().sample(rng);
    if (rec)
        *rec = {true, false, e};
    return bond_update(s, false, e);
}

WalkState face_step(WalkState s, const KernelContext& ctx, RngStream& rng, StepRecord* rec)
{
    const bool black = rng.uniform() < ctx.p();
    const PeelEvent e = ctx.sampler().sample(rng);
    if (rec)
        *rec = {true, black, e};
    return face_update(s, black, e);
}

WalkState site_step(WalkState s, const KernelContext& ctx, RngStream& rng, StepRecord* rec)
{
    if (s.free_len > 0 && rng.uniform() < ctx.p()) {
        --s.free_len;
        ++s.black_len;
        ++s.step_index;
        if (rec)
            *rec = {false, true, {}};
        return s;
    }
    std::int64_t f = std::max<std::int64_t>(0, s.free_len - 1);
    const PeelEvent last = ctx.sampler().vertex_peel(rng, [&](const PeelEvent& e) { f = site_free_advance(f, e); });
    s.free_len = f;
    s.black_len += 1 - last.swallowed_right;
    ++s.step_index;
    if (rec)
        *rec = {true, false, last};
    return s;
}

WalkState kernel_step(WalkState s, const KernelContext& ctx, RngStream& rng, StepRecord* rec)
{
    switch (ctx.kernel().kind) {
    case KernelKind::Bond: return bond_step(s, ctx, rng, rec);
    case KernelKind::Face: return face_step(s, ctx, rng, rec);
    case KernelKind::Site: return site_step(s, ctx, rng, rec);
    }
    throw std::invalid_argument("unknown kernel");
}

std::int64_t sample_increment(const KernelContext& ctx, WalkBranch branch, RngStream& rng,
                              std::int64_t swallow_cap)
{
    const auto& sampler = ctx.sampler();
    auto cap = [swallow_cap](std::int64_t v) { return std::min(v, swallow_cap); };
    const bool black = rng.uniform() < ctx.p();
    switch (ctx.kernel().kind) {
    case KernelKind::Bond: {
        if (black)
            return branch == WalkBranch::Black ? 1 : -1;
        const PeelEvent e = sampler.sample(rng);
        return branch == WalkBranch::Black ? -cap(e.swallowed_right) : e.exposed - cap(e.swallowed_left) - 1;
    }
    case KernelKind::Face: {
        if (branch == WalkBranch::Free)
            throw std::invalid_argument("the face kernel has no free segment");
        const PeelEvent e = sampler.sample(rng);
        return (black ? e.exposed : 0) - cap(e.swallowed_right) - 1;
    }
    case KernelKind::Site: {
        if (black)
            return branch == WalkBranch::Black ? 1 : -1;
        std::int64_t sum = 0;
        const PeelEvent last = sampler.vertex_peel(rng, [&](const PeelEvent& e) {
            if (branch == WalkBranch::Free)
                sum += e.exposed - cap(e.swallowed_left) - 1;
        });
        return branch == WalkBranch::Black ? 1 - cap(last.swallowed_right) : sum - 1;
    }
    }
    throw std::invalid_argument("unknown kernel");
}

std::string_view case_name(CaseTag tag)
{
    switch (tag) {
    case CaseTag::Case1: return "case1";
    case CaseTag::Case2: return "case2";
    case CaseTag::TieZero: return "tie_zero";
    case CaseTag::TieB: return "tie_b";
    }
    return "?";
}

std::int64_t k_identity_offset(KernelKind kind, const StepRecord& last)
{
    switch (kind) {
    case KernelKind::Bond: return 0;
    case KernelKind::Site: return 1;
    case KernelKind::Face: return (last.black ? last.event.exposed : 0) - 1;
    }
    return 0;
}

CaseTag classify(std::int64_t overshoot, std::int64_t threshold)
{
    if (overshoot == 0)
        return CaseTag::TieZero;
    if (overshoot == threshold)
        return CaseTag::TieB;
    return overshoot < threshold ? CaseTag::Case1 : CaseTag::Case2;
}

void fill_residuals(StoppedOutcome& out, std::int64_t threshold)
{
    out.d_l.reset();
    out.d_r.reset();
    if (out.tag != CaseTag::Case2)
        return;
    const auto inf = std::numeric_limits<std::int64_t>::max();
    const std::int64_t k1 = out.k1.value_or(inf), k2 = out.k2.value_or(inf);
    const std::int64_t b = out.B_before, excess = out.overshoot - threshold;
    out.d_l = (k1 > b + threshold ? b : 0) + (k1 < b ? b - k1 : 0);
    out.d_r = (k2 > out.overshoot ? excess : 0) + (k2 < excess ? excess - k2 : 0);
}

namespace {

void check_trial_args(double lambda, double a, double b)
{
    if (!(lambda >= 1))
        throw std::domain_error("lambda must be at least 1");
    if (!(a > 0) || !(b > 0))
        throw std::domain_error("a and b must be positive");
    if (static_cast<std::int64_t>(std::floor(lambda * a)) < 1)
        throw std::domain_error("floor(lambda a) must be at least 1");
}

template <class Step, class Observe>
TrialResult walk_until_stop(const KernelContext& ctx, std::int64_t start, std::int64_t threshold,
                            RngStream& rng, std::int64_t budget, Step step, Observe observe)
{
    TrialResult r;
    WalkState s{start, 0, 0};
    StepRecord rec;
    while (s.step_index < budget) {
        const std::int64_t before = s.black_len;
        s = step(s, ctx, rng, &rec);
        observe(s, before, rec);
        if (s.black_len <= 0) {
            StoppedOutcome& o = r.outcome;
            o.T = s.step_index;
            o.B_before = before;
            o.overshoot = -s.black_len;
            o.tag = classify(o.overshoot, threshold);
            if (rec.peeled && rec.event.right_pair()) {
                o.k1 = rec.event.k1;
                o.k2 = rec.event.k2;
            }
            r.k_offset = k_identity_offset(ctx.kernel().kind, rec);
            fill_residuals(o, threshold);
            r.steps = s.step_index;
            r.final_black = s.black_len;
            r.final_free = s.free_len;
            return r;
        }
    }
    r.censored = true;
    r.steps = s.step_index;
    r.final_black = s.black_len;
    r.final_free = s.free_len;
    return r;
}

template <class Observe>
TrialResult dispatch_walk(const KernelContext& ctx, std::int64_t start, std::int64_t threshold,
                          RngStream& rng, std::int64_t budget, Observe observe)
{
    switch (ctx.kernel().kind) {
    case KernelKind::Bond: return walk_until_stop(ctx, start, threshold, rng, budget, bond_step, observe);
    case KernelKind::Face: return walk_until_stop(ctx, start, threshold, rng, budget, face_step, observe);
    case KernelKind::Site: return walk_until_stop(ctx, start, threshold, rng, budget, site_step, observe);
    }
    throw std::invalid_argument("unknown kernel");
}

}  // namespace

TrialResult run_crossing_trial(const KernelContext& ctx, double lambda, double a, double b,
                               RngStream& rng, std::int64_t budget)
{
    check_trial_args(lambda, a, b);
    const auto start = static_cast<std::int64_t>(std::floor(lambda * a));
    const auto threshold = static_cast<std::int64_t>(std::floor(lambda * b));
    return dispatch_walk(ctx, start, threshold, rng, budget, [](const WalkState&, std::int64_t, const StepRecord&) {});
}

SandwichReport run_sandwich_trial(const KernelContext& ctx, double lambda, double a,
                                  RngStream& rng, RngStream& aux, std::int64_t budget)
{
    const auto kind = ctx.kernel().kind;
    if (kind == KernelKind::Face)
        throw std::invalid_argument("the sandwich needs a free segment");
    check_trial_args(lambda, a, 1);
    const auto start = static_cast<std::int64_t>(std::floor(lambda * a));
    SandwichReport rep;
    std::int64_t upper = start, correction = 0, free_before = 0;
    const double p = ctx.p();
    rep.trial = dispatch_walk(ctx, start, start, rng, budget,
                              [&](const WalkState& s, std::int64_t before, const StepRecord&) {
                                  const std::int64_t db = s.black_len - before;
                                  if (free_before > 0) {
                                      upper += db;
                                  } else {
                                      ++rep.zero_steps;
                                      upper += aux.uniform() < p ? 1 : db;
                                      correction += 1 - db;
                                  }
                                  free_before = s.free_len;
                                  if (!(upper - correction <= s.black_len && s.black_len <= upper))
                                      ++rep.violations;
                              });
    return rep;
}

double crossing_formula(double a, double b)
{
    if (!(a > 0) || !(b > 0))
        throw std::domain_error("a and b must be positive");
    return std::acos((b - a) / (a + b)) / std::numbers::pi;
}

CrossingRun run_crossing_trials(const KernelContext& ctx, double lambda, double a, double b,
                                std::int64_t n_trials, std::uint64_t seed, int workers,
                                std::int64_t budget)
{
    check_trial_args(lambda, a, b);
    CrossingRun run;
    run.trials.resize(static_cast<std::size_t>(n_trials));
    const std::uint64_t group = static_cast<std::uint64_t>(ctx.kernel().kind) * 2
                                + (ctx.kernel().model.kind == MapKind::Quadrangulation);
    parallel_for(n_trials, workers, [&](std::int64_t i) {
        RngStream rng(seed, stream_id(2, group, static_cast<std::uint64_t>(i)));
        run.trials[static_cast<std::size_t>(i)] = run_crossing_trial(ctx, lambda, a, b, rng, budget);
    });
    for (const auto& t : run.trials)
        run.total_steps += t.steps;
    return run;
}

CrossingEstimate summarize_crossing(const KernelContext& ctx, const CrossingRun& run,
                                    double lambda, double a, double b)
{
    CrossingEstimate est;
    est.kernel = ctx.kernel().kind;
    est.model = ctx.kernel().model.kind;
    est.lambda = lambda;
    est.a = a;
    est.b = b;
    est.n_trials = static_cast<std::int64_t>(run.trials.size());
    est.total_steps = run.total_steps;
    const auto threshold = static_cast<std::int64_t>(std::floor(lambda * b));
    CaseCounts& c = est.counts;
    double completion = 0;
    for (const auto& t : run.trials) {
        if (t.censored) {
            ++c.censored;
            completion += crossing_formula(static_cast<double>(t.final_black) / lambda, b);
            continue;
        }
        StoppedOutcome o = t.outcome;
        o.tag = classify(o.overshoot, threshold);
        switch (o.tag) {
        case CaseTag::Case1: ++c.case1; break;
        case CaseTag::Case2: ++c.case2; break;
        case CaseTag::TieZero: ++c.tie_zero; break;
        case CaseTag::TieB: ++c.tie_b; break;
        }
        if (o.k1) {
            ++c.with_k;
            if (*o.k1 + *o.k2 != o.B_before + o.overshoot + t.k_offset)
                ++c.k_identity_failures;
        }
    }
    const double n = static_cast<double>(est.n_trials);
    const double resolved = static_cast<double>(c.resolved());
    est.p_hat = resolved > 0 ? static_cast<double>(c.case2) / resolved : 0;
    est.tie_rate = resolved > 0 ? static_cast<double>(c.tie_zero + c.tie_b) / resolved : 0;
    est.ci_halfwidth = resolved > 0 ? 2.576 * std::sqrt(est.p_hat * (1 - est.p_hat) / resolved) : 1;
    est.p_low = n > 0 ? static_cast<double>(c.case2) / n : 0;
    est.p_high = n > 0 ? static_cast<double>(c.case2 + c.censored) / n : 1;
    if (n > 0) {
        est.p_completed = (static_cast<double>(c.case2) + completion) / n;
        est.completed_ci = 2.576 * std::sqrt(est.p_completed * (1 - est.p_completed) / n);
    }
    est.analytic = crossing_formula(a, b);
    return est;
}

CrossingEstimate estimate_crossing(const KernelContext& ctx, double lambda, double a, double b,
                                   std::int64_t n_trials, std::uint64_t seed, int workers,
                                   std::int64_t budget)
{
    if (n_trials < 100)
        throw std::domain_error("need at least 100 trials");
    const CrossingRun run = run_crossing_trials(ctx, lambda, a, b, n_trials, seed, workers, budget);
    return summarize_crossing(ctx, run, lambda, a, b);
}

}  // namespace peel
