#include "peel/parallel.hpp"
#include "peel/stable_limit.hpp"

#include <doctest.h>

#include <cmath>

using namespace peel;

namespace {

KernelContext context(KernelKind k, MapKind m)
{
    return KernelContext(make_kernel(k, m));
}

}  // namespace

TEST_SUITE("stable_limit")
{
TEST_CASE("overshoot law")
{
    CHECK(overshoot_law(1, 1) == doctest::Approx(0.5));
    CHECK(overshoot_law(1, 3) == doctest::Approx(1.0 / 3));
    RngStream rng(2, 2);
    for (int i = 0; i < 100; ++i) {
        const double a = 0.001 + 5 * rng.uniform(), b = 0.001 + 5 * rng.uniform();
        CHECK(overshoot_law(a, b) == crossing_formula(a, b));
    }
    CHECK_THROWS_AS(overshoot_law(-1, 1), std::domain_error);
}

TEST_CASE("kolmogorov distribution")
{
    CHECK(kolmogorov_survival(1.358) == doctest::Approx(0.05).epsilon(0.01));
    CHECK(kolmogorov_survival(1.628) == doctest::Approx(0.01).epsilon(0.01));
    CHECK(kolmogorov_survival(0.5) == doctest::Approx(0.9639).epsilon(1e-3));
    CHECK(kolmogorov_survival(0) == 1);
    CHECK(kolmogorov_survival(5) < 1e-20);
}

TEST_CASE("two-sample KS statistic")
{
    CHECK(two_sample_ks({1, 2, 3}, {4, 5, 6}).statistic == 1);
    CHECK(two_sample_ks({1, 3}, {2, 4}).statistic == doctest::Approx(0.5));
    const auto same = two_sample_ks({1, 2, 2, 5}, {5, 2, 1, 2});
    CHECK(same.statistic == 0);
    CHECK(same.pvalue == 1);
    CHECK_THROWS_AS(two_sample_ks({}, {1}), std::invalid_argument);
}

TEST_CASE("KS p-values are calibrated under the null")
{
    int rejected = 0, detected = 0;
    const int reps = 400;
    for (int r = 0; r < reps; ++r) {
        RngStream a(3, static_cast<std::uint64_t>(2 * r)), b(3, static_cast<std::uint64_t>(2 * r + 1));
        std::vector<double> x(1000), y(1000), z(1000);
        for (int i = 0; i < 1000; ++i) {
            x[i] = a.uniform();
            y[i] = b.uniform();
            z[i] = 1.1 * b.uniform();
        }
        rejected += two_sample_ks(x, y).pvalue < 0.05;
        detected += two_sample_ks(x, z).pvalue < 0.05;
    }
    // binomial(400, 0.05): mean 20, sd 4.4
    CHECK(rejected > 5);
    CHECK(rejected < 36);
    CHECK(detected > 300);
}

TEST_CASE("one-step positivity matches the exact step law")
{
    struct Case {
        KernelKind k;
        MapKind m;
        WalkBranch b;
        double exact;
    };
    // P(X > 0): bond black p; bond free (1 - p) P(E - R_l >= 2); face p P(E - R_r >= 2);
    // site black p. E - R >= 2 needs an inner face, or a quadrangle swallowing an odd
    // segment on the other side.
    const Case cases[] = {
        {KernelKind::Bond, MapKind::Triangulation, WalkBranch::Black, 0.25},
        {KernelKind::Bond, MapKind::Quadrangulation, WalkBranch::Black, 1.0 / 3},
        {KernelKind::Bond, MapKind::Triangulation, WalkBranch::Free, 0.75 * 2 / 3},
        {KernelKind::Bond, MapKind::Quadrangulation, WalkBranch::Free, 2.0 / 3 * (3.0 / 8 + 1.0 / 8)},
        {KernelKind::Face, MapKind::Triangulation, WalkBranch::Black, 0.8 * 2 / 3},
        {KernelKind::Face, MapKind::Quadrangulation, WalkBranch::Black, 0.75 * (3.0 / 8 + 1.0 / 8)},
        {KernelKind::Site, MapKind::Triangulation, WalkBranch::Black, 0.5},
        {KernelKind::Site, MapKind::Quadrangulation, WalkBranch::Black, 5.0 / 9},
    };
    for (const auto& c : cases) {
        const auto ctx = context(c.k, c.m);
        const auto r = positivity_check(ctx, c.b, 1, 200000, 4, 0);
        INFO(kernel_name(c.k), " ", model_name(c.m));
        CHECK(std::fabs(r.frequency - c.exact) < 3 * std::sqrt(c.exact * (1 - c.exact) / 200000));
    }
    CHECK_THROWS_AS(positivity_check(context(KernelKind::Bond, MapKind::Triangulation), WalkBranch::Free, 0, 10, 1, 0),
                    std::domain_error);
}

TEST_CASE("positivity parameter two thirds")
{
    const auto bond = context(KernelKind::Bond, MapKind::Triangulation);
    const auto r = positivity_check(bond, WalkBranch::Free, 10000, 10000, 5, 0);
    CHECK(std::fabs(r.frequency - 2.0 / 3) < 0.02);
    const auto face = context(KernelKind::Face, MapKind::Quadrangulation);
    const auto f = positivity_check(face, WalkBranch::Black, 10000, 10000, 5, 0);
    CHECK(std::fabs(f.frequency - 2.0 / 3) < 0.02);
    // the limit frequency does not move between n and 4n
    const auto early = positivity_check(face, WalkBranch::Black, 2500, 10000, 6, 0);
    CHECK(std::fabs(early.frequency - f.frequency) < 3 * std::hypot(early.stderr_, f.stderr_));
}

TEST_CASE("ladder epoch exponent")
{
    const auto bond = ladder_epoch_exponent(context(KernelKind::Bond, MapKind::Triangulation), WalkBranch::Free,
                                            20000, 100000, 7, 0);
    CHECK(bond.conclusive);
    CHECK(bond.power_law);
    CHECK(bond.exponent > -0.40);
    CHECK(bond.exponent < -0.26);
    CHECK(bond.n_max >= 4 * bond.n_min);

    const auto site = ladder_epoch_exponent(context(KernelKind::Site, MapKind::Quadrangulation), WalkBranch::Free,
                                            40000, 100000, 7, 0);
    CHECK(site.conclusive);
    CHECK(site.exponent > -0.40);
    CHECK(site.exponent < -0.26);

    // drifting to +infinity: survival levels off
    const KernelContext drift(make_kernel(KernelKind::Bond, MapKind::Triangulation), 0.5);
    const auto flat = ladder_epoch_exponent(drift, WalkBranch::Black, 5000, 20000, 7, 0);
    CHECK(!flat.power_law);

    const auto few = ladder_epoch_exponent(context(KernelKind::Bond, MapKind::Triangulation), WalkBranch::Free,
                                           300, 100000, 7, 0);
    CHECK(!few.conclusive);
    CHECK(!few.note.empty());
    CHECK_THROWS_AS(ladder_epoch_exponent(drift, WalkBranch::Black, 100, 1000, 7, 0), std::domain_error);
}

TEST_CASE("self-similarity across scales")
{
    const auto bond = self_similarity_check(context(KernelKind::Bond, MapKind::Quadrangulation), WalkBranch::Black,
                                            100, 400, 1, 10000, 8, 0);
    CHECK(bond.ks_pvalue > 0.001);
    CHECK(bond.size1 == 10000);
    const auto face = self_similarity_check(context(KernelKind::Face, MapKind::Triangulation), WalkBranch::Black,
                                            100, 400, 1, 10000, 8, 0);
    CHECK(face.ks_pvalue > 0.001);
    const auto same = self_similarity_check(context(KernelKind::Face, MapKind::Triangulation), WalkBranch::Black,
                                            100, 100, 1, 2000, 8, 0);
    CHECK(same.ks_statistic == 0);
    CHECK_THROWS_AS(self_similarity_check(context(KernelKind::Face, MapKind::Triangulation), WalkBranch::Black, 100,
                                          50, 1, 10, 8, 0),
                    std::domain_error);
}

TEST_CASE("a diffusive walk fails the stable scaling")
{
    // S_n / n^{2/3} of a +-1 walk shrinks like n^{-1/6}; the KS test sees it at once
    std::vector<double> small(10000), large(10000);
    for (std::uint64_t i = 0; i < 10000; ++i) {
        RngStream rng(9, i);
        long s = 0;
        for (int k = 0; k < 400; ++k) {
            s += rng.uniform() < 0.5 ? 1 : -1;
            if (k == 99)
                small[i] = (static_cast<double>(s) + rng.uniform() - 0.5) / std::pow(100.0, 2.0 / 3);
        }
        large[i] = (static_cast<double>(s) + rng.uniform() - 0.5) / std::pow(400.0, 2.0 / 3);
    }
    CHECK(two_sample_ks(small, large).pvalue < 1e-6);
}

TEST_CASE("free segment zeros")
{
    const auto bond = context(KernelKind::Bond, MapKind::Triangulation);
    const auto one = xi_growth_check(bond, {1}, 50, 10, 0);
    CHECK(one.rows[0].median == 1);
    CHECK(one.rows[0].q10 == 1);
    const auto rep = xi_growth_check(bond, {100000, 1000, 10000}, 2000, 10, 0);
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.rows[0].n == 1000);
    CHECK(rep.median_non_increasing);
    for (const auto& r : rep.rows) {
        CHECK(r.q10 <= r.median);
        CHECK(r.median <= r.q90);
    }
    const auto site = xi_growth_check(context(KernelKind::Site, MapKind::Quadrangulation), {1000, 10000, 100000}, 1000,
                                      10, 0);
    CHECK(site.median_non_increasing);
    CHECK_THROWS_AS(xi_growth_check(context(KernelKind::Face, MapKind::Quadrangulation), {100}, 10, 1, 0),
                    std::invalid_argument);
}

TEST_CASE("checks reproduce across worker counts")
{
    const auto ctx = context(KernelKind::Site, MapKind::Triangulation);
    const auto a = positivity_check(ctx, WalkBranch::Black, 200, 500, 11, 1);
    const auto b = positivity_check(ctx, WalkBranch::Black, 200, 500, 11, 3);
    CHECK(a.frequency == b.frequency);
    const auto c = self_similarity_check(ctx, WalkBranch::Black, 20, 80, 1, 500, 11, 1);
    const auto d = self_similarity_check(ctx, WalkBranch::Black, 20, 80, 1, 500, 11, 4);
    CHECK(c.ks_statistic == d.ks_statistic);
}
}
