#include "swallow_oracle.hpp"

#include "peel/crossing.hpp"
#include "peel/parallel.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace peel;
using oracle::Moments;

namespace {

PeelEvent event(int exposed, std::int64_t left, std::int64_t right)
{
    PeelEvent e;
    e.config = left > 0 ? Config::ThirdLeft : right > 0 ? Config::ThirdRight : Config::InnerVertices;
    e.exposed = exposed;
    e.swallowed_left = left;
    e.swallowed_right = right;
    return e;
}

const MapKind kModels[] = {MapKind::Triangulation, MapKind::Quadrangulation};

// Exact mean of the capped increment, from the swallow oracle.
long double capped_increment_mean(KernelKind kernel, MapKind model, WalkBranch branch, int cap)
{
    const long double p = to_long_double(critical_probability(kernel, model));
    const long double ee = oracle::exposed_mean(model);
    const long double rs = oracle::truncated_swallow_mean(model, cap);  // same law on both sides
    switch (kernel) {
    case KernelKind::Bond:
        return branch == WalkBranch::Black ? p - (1 - p) * rs : -p + (1 - p) * (ee - rs - 1);
    case KernelKind::Face: return p * ee - rs - 1;
    case KernelKind::Site:
        if (branch == WalkBranch::Black)
            return p + (1 - p) * (1 - oracle::truncated_conditioned_mean(model, cap));
        // Wald: the vertex peeling visits 1/eta events on average
        return -p + (1 - p) * ((ee - rs - 1) / oracle::eta_value(model) - 1);
    }
    return 0;
}

}  // namespace

TEST_SUITE("crossing")
{
TEST_CASE("critical probabilities")
{
    CHECK(critical_probability(KernelKind::Bond, MapKind::Triangulation) == Rational(1, 4));
    CHECK(critical_probability(KernelKind::Bond, MapKind::Quadrangulation) == Rational(1, 3));
    CHECK(critical_probability(KernelKind::Face, MapKind::Triangulation) == Rational(4, 5));
    CHECK(critical_probability(KernelKind::Face, MapKind::Quadrangulation) == Rational(3, 4));
    CHECK(critical_probability(KernelKind::Site, MapKind::Triangulation) == Rational(1, 2));
    CHECK(critical_probability(KernelKind::Site, MapKind::Quadrangulation) == Rational(5, 9));
    const auto k = make_kernel(KernelKind::Face, MapKind::Quadrangulation);
    CHECK(k.model.kind == MapKind::Quadrangulation);
    CHECK(k.p_critical == Rational(3, 4));
    CHECK(parse_kernel("site") == KernelKind::Site);
    CHECK_THROWS_AS(parse_kernel("edge"), std::invalid_argument);
    CHECK_THROWS_AS(KernelContext(k, 1.5), std::domain_error);
}

TEST_CASE("bond updates")
{
    auto s = bond_update({5, 3, 0}, true, {});
    CHECK(s.free_len == 2);
    CHECK(s.black_len == 6);
    CHECK(s.step_index == 1);
    // triangle with an inner vertex
    s = bond_update({5, 0, 0}, false, event(2, 0, 0));
    CHECK(s.free_len == 2);
    CHECK(s.black_len == 5);
    // F = 0 forces a peel even if the colour came out black
    s = bond_update({5, 0, 0}, true, event(1, 0, 2));
    CHECK(s.free_len == 1);
    CHECK(s.black_len == 3);
    // left swallow past the free segment clamps at zero
    s = bond_update({5, 2, 0}, false, event(1, 7, 0));
    CHECK(s.free_len == 1);
    s = bond_update({5, 9, 0}, false, event(2, 3, 1));
    CHECK(s.free_len == 7);
    CHECK(s.black_len == 4);
}

TEST_CASE("face updates")
{
    auto s = face_update({4, 0, 0}, true, event(2, 0, 0));
    CHECK(s.black_len == 5);
    s = face_update({2, 0, 0}, false, event(1, 0, 3));
    CHECK(s.black_len == -2);
    CHECK(classify(-s.black_len, 5) == CaseTag::Case1);
    CHECK(s.free_len == 0);
}

TEST_CASE("site updates")
{
    auto s = site_update({3, 2, 0}, true, {});
    CHECK(s.free_len == 1);
    CHECK(s.black_len == 4);
    // F0 = 1; 1 + 3 - 1 = 3; 3 - 4 - 1 < 0 gives 1 - 1 = 0; 0 - 0 - 1 < 0 gives 2 - 1 = 1
    s = site_update({3, 2, 0}, false, {event(3, 0, 0), event(1, 4, 0), event(2, 0, 3)});
    CHECK(s.free_len == 1);
    CHECK(s.black_len == 1);
    CHECK(s.step_index == 1);
    // F = 0: forced peel
    s = site_update({3, 0, 0}, true, {event(1, 0, 1)});
    CHECK(s.free_len == 0);
    CHECK(s.black_len == 3);
    CHECK_THROWS_AS(site_update({3, 0, 0}, false, {event(1, 0, 0)}), std::invalid_argument);
}

TEST_CASE("random steps agree with the updates")
{
    for (auto model : kModels) {
        const KernelContext bond(make_kernel(KernelKind::Bond, model));
        const KernelContext face(make_kernel(KernelKind::Face, model));
        RngStream rng(5, 1);
        WalkState s{1000000, 0, 0};
        for (int i = 0; i < 20000; ++i) {
            StepRecord rec;
            const auto next = bond_step(s, bond, rng, &rec);
            CHECK(next.step_index == s.step_index + 1);
            if (!rec.peeled) {
                CHECK(s.free_len > 0);
                CHECK(next.free_len == s.free_len - 1);
                CHECK(next.black_len == s.black_len + 1);
            } else {
                const auto expect = bond_update(s, false, rec.event);
                CHECK(next.free_len == expect.free_len);
                CHECK(next.black_len == expect.black_len);
            }
            s = next;
        }
        s = {1000000, 0, 0};
        for (int i = 0; i < 20000; ++i) {
            StepRecord rec;
            const auto next = face_step(s, face, rng, &rec);
            CHECK(next.black_len == face_update(s, rec.black, rec.event).black_len);
            CHECK(next.free_len == 0);
            s = next;
        }
    }
}

TEST_CASE("site step matches a replayed vertex peeling")
{
    const KernelContext ctx(make_kernel(KernelKind::Site, MapKind::Quadrangulation));
    WalkState s{1000000, 0, 0};
    for (std::uint64_t i = 0; i < 5000; ++i) {
        RngStream a(6, i), b(6, i);
        const auto next = site_step(s, ctx, a);
        // replay the same draws by hand
        WalkState expect;
        if (s.free_len > 0 && b.uniform() < ctx.p()) {
            expect = site_update(s, true, {});
        } else {
            std::vector<PeelEvent> events;
            ctx.sampler().vertex_peel(b, [&](const PeelEvent& e) { events.push_back(e); });
            expect = site_update(s, false, events);
        }
        CHECK(next.free_len == expect.free_len);
        CHECK(next.black_len == expect.black_len);
        s = next;
    }
}

TEST_CASE("zero drift at criticality, capped swallows")
{
    const int cap = 200;
    const int n = 1000000;
    for (auto model : kModels) {
        for (auto kernel : {KernelKind::Bond, KernelKind::Face, KernelKind::Site}) {
            const KernelContext ctx(make_kernel(kernel, model));
            for (auto branch : {WalkBranch::Black, WalkBranch::Free}) {
                if (kernel == KernelKind::Face && branch == WalkBranch::Free)
                    continue;
                RngStream rng(21, static_cast<std::uint64_t>(kernel) * 4 + static_cast<std::uint64_t>(branch) * 2
                                      + (model == MapKind::Quadrangulation));
                Moments capped, raw;
                for (int i = 0; i < n; ++i)
                    capped.add(static_cast<double>(sample_increment(ctx, branch, rng, cap)));
                for (int i = 0; i < n; ++i)
                    raw.add(static_cast<double>(sample_increment(ctx, branch, rng)));
                const double exact = static_cast<double>(capped_increment_mean(kernel, model, branch, cap));
                INFO(kernel_name(kernel), " ", model_name(model), " branch ", static_cast<int>(branch));
                CHECK(std::fabs(capped.mean() - exact) < 3 * capped.se());
                // raw increments have infinite variance; only a coarse check
                CHECK(std::fabs(raw.mean()) < 0.05);
            }
        }
    }
}

TEST_CASE("capped means approach the uncapped drift")
{
    // the truncation bias shrinks like cap^{-1/2}
    for (auto model : kModels)
        for (auto kernel : {KernelKind::Bond, KernelKind::Face, KernelKind::Site}) {
            const double at_200 = static_cast<double>(capped_increment_mean(kernel, model, WalkBranch::Black, 200));
            const double at_2000 = static_cast<double>(capped_increment_mean(kernel, model, WalkBranch::Black, 2000));
            CHECK(at_200 > 0);
            CHECK(at_2000 > 0);
            CHECK(at_2000 < at_200 / 2.5);
        }
}

TEST_CASE("face kernel has no free branch")
{
    const KernelContext ctx(make_kernel(KernelKind::Face, MapKind::Triangulation));
    RngStream rng(1, 1);
    CHECK_THROWS_AS(sample_increment(ctx, WalkBranch::Free, rng), std::invalid_argument);
}

TEST_CASE("classification and residuals")
{
    CHECK(classify(0, 5) == CaseTag::TieZero);
    CHECK(classify(5, 5) == CaseTag::TieB);
    CHECK(classify(3, 5) == CaseTag::Case1);
    CHECK(classify(6, 5) == CaseTag::Case2);
    CHECK(case_name(CaseTag::Case2) == "case2");

    StoppedOutcome o;
    o.B_before = 10;
    o.overshoot = 20;
    o.tag = CaseTag::Case2;
    fill_residuals(o, 5);
    CHECK(*o.d_l == 10);
    CHECK(*o.d_r == 15);
    // k1 beyond the white segment, k2 short
    o.k1 = 17;
    o.k2 = 13;
    fill_residuals(o, 5);
    CHECK(*o.d_l == 10);
    CHECK(*o.d_r == 2);
    // k1 inside the black part
    o.k1 = 4;
    o.k2 = 26;
    fill_residuals(o, 5);
    CHECK(*o.d_l == 6);
    CHECK(*o.d_r == 15);
    // k1 swallowing exactly up to the white segment: degenerate, both counts vanish
    o.k1 = 12;
    o.k2 = 18;
    fill_residuals(o, 5);
    CHECK(*o.d_l == 0);
    CHECK(*o.d_r == 0);
    o.tag = CaseTag::Case1;
    fill_residuals(o, 5);
    CHECK(!o.d_l);
    CHECK(!o.d_r);
}

TEST_CASE("trials are well posed")
{
    for (auto model : kModels)
        for (auto kernel : {KernelKind::Bond, KernelKind::Face, KernelKind::Site}) {
            const KernelContext ctx(make_kernel(kernel, model));
            int resolved = 0;
            for (std::uint64_t i = 0; i < 200; ++i) {
                RngStream rng(8, i);
                // T has a t^{-1/3} tail even from B = 1
                const auto r = run_crossing_trial(ctx, 1, 1, 1, rng, 1000000);
                if (r.censored) {
                    CHECK(r.steps == 1000000);
                    continue;
                }
                ++resolved;
                CHECK(r.outcome.T >= 1);
                CHECK(r.outcome.overshoot >= 0);
                CHECK(r.outcome.B_before >= 1);
                CHECK(r.final_black == -r.outcome.overshoot);
            }
            CHECK(resolved >= 190);
        }
    const KernelContext ctx(make_kernel(KernelKind::Bond, MapKind::Triangulation));
    RngStream rng(1, 1);
    CHECK_THROWS_AS(run_crossing_trial(ctx, 0.5, 1, 1, rng), std::domain_error);
    CHECK_THROWS_AS(run_crossing_trial(ctx, 10, 0, 1, rng), std::domain_error);
    CHECK_THROWS_AS(run_crossing_trial(ctx, 10, 1, -1, rng), std::domain_error);
}

TEST_CASE("step budget censors explicitly")
{
    const KernelContext ctx(make_kernel(KernelKind::Bond, MapKind::Quadrangulation));
    int censored = 0;
    for (std::uint64_t i = 0; i < 200; ++i) {
        RngStream rng(9, i);
        const auto r = run_crossing_trial(ctx, 1000, 1, 1, rng, 50);
        if (r.censored) {
            ++censored;
            CHECK(r.steps == 50);
            CHECK(r.final_black >= 1);
        } else {
            CHECK(r.steps <= 50);
        }
    }
    CHECK(censored > 150);
}

TEST_CASE("stopping faces carry the segment identity")
{
    for (auto model : kModels)
        for (auto kernel : {KernelKind::Bond, KernelKind::Face, KernelKind::Site}) {
            const KernelContext ctx(make_kernel(kernel, model));
            const auto run = run_crossing_trials(ctx, 50, 1, 1, 800, 10, 0, 1000000);
            int with_k = 0;
            for (const auto& t : run.trials) {
                if (t.censored)
                    continue;
                const auto& o = t.outcome;
                if (model == MapKind::Triangulation) {
                    CHECK(!o.k1);
                    continue;
                }
                if (!o.k1)
                    continue;
                ++with_k;
                CHECK(*o.k1 % 2 == 1);
                CHECK(*o.k2 % 2 == 1);
                CHECK(*o.k1 + *o.k2 == o.B_before + o.overshoot + t.k_offset);
                if (kernel == KernelKind::Bond)
                    CHECK(t.k_offset == 0);
                if (kernel == KernelKind::Site)
                    CHECK(t.k_offset == 1);
                if (o.tag == CaseTag::Case2)
                    CHECK(o.d_l.has_value());
            }
            if (model == MapKind::Quadrangulation)
                CHECK(with_k > 10);
            const auto est = summarize_crossing(ctx, run, 50, 1, 1);
            CHECK(est.counts.k_identity_failures == 0);
            CHECK(est.counts.with_k == with_k);
        }
}

TEST_CASE("crossing formula")
{
    CHECK(crossing_formula(1, 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(crossing_formula(1, 3) == doctest::Approx(1.0 / 3).epsilon(1e-14));
    CHECK(crossing_formula(3, 1) == doctest::Approx(2.0 / 3).epsilon(1e-14));
    RngStream rng(3, 3);
    for (int i = 0; i < 100; ++i) {
        const double a = 0.01 + 10 * rng.uniform(), b = 0.01 + 10 * rng.uniform();
        const double v = crossing_formula(a, b);
        CHECK(v > 0);
        CHECK(v < 1);
        CHECK(v + crossing_formula(b, a) == doctest::Approx(1).epsilon(1e-13));
    }
    CHECK_THROWS_AS(crossing_formula(0, 1), std::domain_error);
    CHECK_THROWS_AS(crossing_formula(1, -2), std::domain_error);
}

TEST_CASE("coupling sandwich holds on every step")
{
    for (auto model : kModels)
        for (auto kernel : {KernelKind::Bond, KernelKind::Site}) {
            const KernelContext ctx(make_kernel(kernel, model));
            std::int64_t zero_steps = 0;
            for (std::uint64_t i = 0; i < 200; ++i) {
                RngStream rng(12, i), aux(12, stream_id(7, 0, i)), plain(12, i);
                const auto rep = run_sandwich_trial(ctx, 50, 1, rng, aux, 1000000);
                CHECK(rep.violations == 0);
                zero_steps += rep.zero_steps;
                // the auxiliary stream leaves the trial itself untouched
                const auto r = run_crossing_trial(ctx, 50, 1, 1, plain, 1000000);
                CHECK(r.steps == rep.trial.steps);
                CHECK(r.outcome.overshoot == rep.trial.outcome.overshoot);
            }
            CHECK(zero_steps > 200);
        }
    const KernelContext face(make_kernel(KernelKind::Face, MapKind::Quadrangulation));
    RngStream rng(1, 1), aux(1, 2);
    CHECK_THROWS_AS(run_sandwich_trial(face, 50, 1, rng, aux), std::invalid_argument);
}

TEST_CASE("estimates are deterministic across worker counts")
{
    const KernelContext ctx(make_kernel(KernelKind::Face, MapKind::Triangulation));
    const auto one = run_crossing_trials(ctx, 30, 1, 1, 300, 77, 1, 1000000);
    const auto three = run_crossing_trials(ctx, 30, 1, 1, 300, 77, 3, 1000000);
    REQUIRE(one.trials.size() == three.trials.size());
    for (std::size_t i = 0; i < one.trials.size(); ++i) {
        CHECK(one.trials[i].steps == three.trials[i].steps);
        CHECK(one.trials[i].final_black == three.trials[i].final_black);
    }
    CHECK(one.total_steps == three.total_steps);
}

TEST_CASE("estimate fields")
{
    const KernelContext ctx(make_kernel(KernelKind::Bond, MapKind::Triangulation));
    const auto est = estimate_crossing(ctx, 20, 1, 3, 400, 4, 0, 200000);
    CHECK(est.n_trials == 400);
    CHECK(est.counts.total() == 400);
    CHECK(est.analytic == doctest::Approx(1.0 / 3));
    CHECK(est.p_hat >= 0);
    CHECK(est.p_hat <= 1);
    CHECK(est.ci_halfwidth
          == doctest::Approx(2.576 * std::sqrt(est.p_hat * (1 - est.p_hat) / static_cast<double>(est.counts.resolved()))));
    CHECK(est.p_low <= est.p_completed + 1e-12);
    CHECK(est.p_completed <= est.p_high + 1e-12);
    CHECK_THROWS_AS(estimate_crossing(ctx, 20, 1, 1, 99, 4, 0), std::domain_error);
}

TEST_CASE("bond triangulation crossing near one half")
{
    const KernelContext ctx(make_kernel(KernelKind::Bond, MapKind::Triangulation));
    const auto est = estimate_crossing(ctx, 400, 1, 1, 2000, 15, 0, 1000000);
    INFO("p_completed ", est.p_completed, " censored ", est.counts.censored);
    CHECK(std::fabs(est.p_completed - 0.5) < est.completed_ci + 0.03);
}

TEST_CASE("swapped endpoints complement")
{
    const KernelContext ctx(make_kernel(KernelKind::Site, MapKind::Quadrangulation));
    const auto a = estimate_crossing(ctx, 100, 1, 3, 1000, 16, 0, 1000000);
    const auto b = estimate_crossing(ctx, 100, 3, 1, 1000, 17, 0, 1000000);
    INFO(a.p_completed, " + ", b.p_completed);
    CHECK(std::fabs(a.p_completed + b.p_completed - 1) < a.completed_ci + b.completed_ci);
}
}
