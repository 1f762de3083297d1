#pragma once

#include "peel/enumeration.hpp"
#include "peel/rng.hpp"

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

namespace peel {

// Normalized heavy-tailed law on indices i >= 1 underlying every side draw.
//   Triangulation:   P(i) = 6 q_i          (the one-side law)
//   Quadrangulation: P(i) = 8 w_i          (w_p = q_{2p-1} = q_{2p-2})
// Inverse transform on a survival table: a guide table covers the head, the table
// doubles on demand up to a fixed cap, and beyond the cap an exact rejection sampler
// with a Pareto(3/2) envelope takes over. No mass is ever dropped.
class IndexLaw {
  public:
    static constexpr std::int64_t kHeadSize = 1 << 12;
    static constexpr std::int64_t kTableCap = 1 << 22;

    explicit IndexLaw(MapKind kind);
    IndexLaw(const IndexLaw&) = delete;
    IndexLaw& operator=(const IndexLaw&) = delete;

    // Shared immutable instance per model (lazy parts are internally synchronized).
    static const IndexLaw& instance(MapKind kind);

    MapKind kind() const { return kind_; }

    std::int64_t sample(RngStream& rng) const
    {
        const double s = rng.uniform_pos();
        return s > first_survival_ ? 1 : search(s, rng);
    }
    // Draw from the law conditioned on i >= min_index (min_index <= kTableCap).
    std::int64_t sample_at_least(std::int64_t min_index, RngStream& rng) const;

    // P(I = i) and P(I > i) in extended precision.
    long double probability(std::int64_t i) const;
    long double survival(std::int64_t i) const;

    std::int64_t tabulated() const { return published_.load(std::memory_order_acquire); }

    // Exact draw from the law conditioned on i > kTableCap.
    std::int64_t sample_beyond_cap(RngStream& rng) const;

  private:
    std::int64_t search(double s, RngStream& rng) const;
    std::int64_t search_tail(double s, RngStream& rng) const;
    void extend(std::int64_t want) const;
    long double log_term(std::int64_t i) const;
    long double envelope_ratio(std::int64_t i) const;

    MapKind kind_;
    double first_survival_ = 0;  // P(I > 1)
    // survival_[i] = P(I > i), i = 0..published_
    std::unique_ptr<double[]> survival_;
    mutable std::atomic<std::int64_t> published_{0};
    mutable std::mutex extend_mutex_;
    // Running state for extension: last term and compensated head sum.
    mutable long double term_ = 0, head_sum_ = 0, head_comp_ = 0, central_ = 0;

    static constexpr int kGuideBins = 1 << 13;
    std::vector<std::int32_t> guide_;
    std::vector<double> head_cdf_;  // head_cdf_[i] = P(I <= i)

    long double envelope_scale_ = 0;
    long double envelope_bound_ = 0;
};

}  // namespace peel
