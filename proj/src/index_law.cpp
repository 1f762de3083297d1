#include "peel/index_law.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace peel {

namespace {

constexpr long double kPi = 3.141592653589793238462643383279502884L;

long double cube(long double x)
{
    return x * x * x;
}

// log of C(2n, n) 4^{-n}
long double log_central(std::int64_t n)
{
    const long double x = static_cast<long double>(n);
    if (n < 1000)
        return std::lgamma(2 * x + 1) - 2 * std::lgamma(x + 1) - 2 * x * std::log(2.0L);
    return -0.5L * std::log(kPi * x) - 1 / (8 * x) + 1 / (192 * x * x * x);
}

}  // namespace

IndexLaw::IndexLaw(MapKind kind)
    : kind_(kind), survival_(new double[kTableCap + 1])
{
    survival_[0] = 1.0;
    if (kind_ == MapKind::Triangulation) {
        central_ = 1;  // C(0,0) 4^0
    } else {
        term_ = 0;
    }
    extend(kHeadSize);
    first_survival_ = survival_[1];

    head_cdf_.resize(kHeadSize + 1);
    for (std::int64_t i = 0; i <= kHeadSize; ++i)
        head_cdf_[i] = 1.0 - survival_[i];
    guide_.resize(kGuideBins);
    std::int64_t i = 1;
    for (int j = 0; j < kGuideBins; ++j) {
        const double level = 1.0 - static_cast<double>(j) / kGuideBins;
        while (i < kHeadSize && survival_[i] >= level)
            ++i;
        guide_[j] = static_cast<std::int32_t>(i);
    }

    // Envelope: Pareto(3/2) on x > cap + 1/2, discretized by rounding.
    envelope_scale_ = static_cast<long double>(kTableCap) + 0.5L;
    long double bound = 0;
    for (long double k = kTableCap + 1; k < 1e17L; k *= 1.05L)
        bound = std::max(bound, envelope_ratio(static_cast<std::int64_t>(k)));
    envelope_bound_ = bound * 1.001L;
}

const IndexLaw& IndexLaw::instance(MapKind kind)
{
    static const IndexLaw tri(MapKind::Triangulation);
    static const IndexLaw quad(MapKind::Quadrangulation);
    return kind == MapKind::Triangulation ? tri : quad;
}

long double IndexLaw::log_term(std::int64_t i) const
{
    const long double x = static_cast<long double>(i);
    if (kind_ == MapKind::Triangulation) {
        // 6 C(2i-2, i-1) 4^{-i} / (i (i+1))
        return std::log(1.5L) + log_central(i - 1) - std::log(x) - std::log(x + 1);
    }
    // 6 (4/27)^i (3i-3)! / (i! (2i-1)!)
    if (i < 1000)
        return std::log(6.0L) + x * std::log(4.0L / 27.0L) + std::lgamma(3 * x - 2)
               - std::lgamma(x + 1) - std::lgamma(2 * x);
    // Stirling expansion with the i log i terms cancelled analytically.
    return std::log(6.0L) - 2.5L * std::log(x) - 2.5L * std::log(3.0L) + 0.5L * std::log(2.0L)
           + (3 * x - 2.5L) * std::log1p(-2 / (3 * x)) - (x + 0.5L) * std::log1p(1 / x) + 3
           - 0.5L * std::log(2 * kPi) + 1 / (12 * (3 * x - 2)) - 1 / (12 * (x + 1))
           - 1 / (24 * x) - 1 / (360 * cube(3 * x - 2)) + 1 / (360 * cube(x + 1))
           + 1 / (360 * cube(2 * x));
}

long double IndexLaw::probability(std::int64_t i) const
{
    if (i < 1)
        return 0;
    return std::exp(log_term(i));
}

long double IndexLaw::envelope_ratio(std::int64_t i) const
{
    const long double x = static_cast<long double>(i);
    const long double log_h = 1.5L * std::log(envelope_scale_) - 1.5L * std::log(x - 0.5L)
                              + std::log(-std::expm1(1.5L * std::log1p(-1 / (x + 0.5L))));
    return std::exp(log_term(i) - log_h);
}

void IndexLaw::extend(std::int64_t want) const
{
    std::lock_guard lock(extend_mutex_);
    std::int64_t n = published_.load(std::memory_order_relaxed);
    if (n >= want)
        return;
    const std::int64_t target = std::min(kTableCap, std::max(want, 2 * n));
    for (std::int64_t i = n + 1; i <= target; ++i) {
        const long double x = static_cast<long double>(i);
        if (kind_ == MapKind::Triangulation) {
            // P(I > K) = C(2K, K) 4^{-K} / (K + 1)
            central_ *= (2 * x - 1) / (2 * x);
            survival_[i] = static_cast<double>(central_ / (x + 1));
        } else {
            term_ = i == 1 ? 8.0L / 9.0L
                           : term_ * 2 * (3 * x - 4) * (3 * x - 5) / (9 * x * (2 * x - 1));
            const long double y = term_ - head_comp_;
            const long double t = head_sum_ + y;
            head_comp_ = (t - head_sum_) - y;
            head_sum_ = t;
            survival_[i] = static_cast<double>((1 - head_sum_) + head_comp_);
        }
    }
    published_.store(target, std::memory_order_release);
}

long double IndexLaw::survival(std::int64_t i) const
{
    if (i < 1)
        return 1;
    if (i > tabulated())
        extend(std::min(i, kTableCap));
    if (i <= kTableCap)
        return survival_[i];
    long double s = survival_[kTableCap];
    for (std::int64_t k = kTableCap + 1; k <= i; ++k)
        s -= probability(k);
    return s;
}

std::int64_t IndexLaw::sample_at_least(std::int64_t min_index, RngStream& rng) const
{
    if (min_index <= 1)
        return search(rng.uniform_pos(), rng);
    if (min_index > kTableCap)
        throw std::domain_error("conditioning index beyond the table cap");
    if (min_index - 1 > tabulated())
        extend(min_index - 1);
    return search(survival_[min_index - 1] * rng.uniform_pos(), rng);
}

std::int64_t IndexLaw::search(double s, RngStream& rng) const
{
    if (s > survival_[kHeadSize]) {
        const int bin = std::min(kGuideBins - 1, static_cast<int>((1.0 - s) * kGuideBins));
        std::int64_t i = guide_[bin];
        while (i > 1 && survival_[i - 1] < s)
            --i;
        while (survival_[i] >= s)
            ++i;
        return i;
    }
    return search_tail(s, rng);
}

std::int64_t IndexLaw::search_tail(double s, RngStream& rng) const
{
    std::int64_t n = tabulated();
    while (survival_[n] >= s && n < kTableCap) {
        extend(2 * n);
        n = tabulated();
    }
    if (survival_[n] >= s)
        return sample_beyond_cap(rng);
    // smallest i in (kHeadSize, n] with survival_[i] < s
    const double* first = survival_.get() + kHeadSize;
    const double* last = survival_.get() + n + 1;
    const double* it = std::partition_point(first, last, [s](double v) { return v >= s; });
    return static_cast<std::int64_t>(it - survival_.get());
}

std::int64_t IndexLaw::sample_beyond_cap(RngStream& rng) const
{
    for (;;) {
        const long double x
            = envelope_scale_ * std::pow(static_cast<long double>(rng.uniform_pos()), -2.0L / 3.0L);
        const auto k = static_cast<std::int64_t>(std::floor(x + 0.5L));
        if (rng.uniform() * envelope_bound_ < envelope_ratio(k))
            return k;
    }
}

}  // namespace peel
