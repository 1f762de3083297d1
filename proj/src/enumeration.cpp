#include "peel/enumeration.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace peel {

MapModel MapModel::triangulation()
{
    return {MapKind::Triangulation, Rational(27, 2), Rational(81)};
}

MapModel MapModel::quadrangulation()
{
    return {MapKind::Quadrangulation, Rational(12), Rational(54)};
}

MapModel MapModel::of(MapKind kind)
{
    return kind == MapKind::Triangulation ? triangulation() : quadrangulation();
}

std::string_view model_name(MapKind kind)
{
    return kind == MapKind::Triangulation ? "tri" : "quad";
}

MapKind parse_model(std::string_view name)
{
    if (name == "tri" || name == "triangulation")
        return MapKind::Triangulation;
    if (name == "quad" || name == "quadrangulation")
        return MapKind::Quadrangulation;
    throw std::invalid_argument("unknown model '" + std::string(name) + "'");
}

Rational alpha_power(const MapModel& model, std::int64_t exponent)
{
    if (exponent % 2 == 0)
        return power(model.alpha_sq, exponent / 2);
    Rational alpha;
    if (!exact_sqrt(model.alpha_sq, alpha))
        throw std::domain_error("odd power of an irrational alpha");
    return power(alpha, exponent);
}

Rational partition_function(const MapModel& model, std::int64_t m)
{
    if (m < 2)
        throw std::domain_error("partition function needs m >= 2");
    if (model.kind == MapKind::Triangulation) {
        // (2j)! / (j! (j+2)!) (9/4)^{j+1} with j = m - 2
        const std::int64_t j = m - 2;
        Rational z(factorial(2 * j), factorial(j) * factorial(j + 2));
        return z * power(Rational(9, 4), j + 1);
    }
    if (m % 2 != 0)
        throw std::domain_error("quadrangulations need an even boundary");
    // 8^p (3p-3)! / (6 p! (2p-1)!) with p = m / 2
    const std::int64_t p = m / 2;
    Rational z(factorial(3 * p - 3), 6 * factorial(p) * factorial(2 * p - 1));
    return z * power(Rational(8), p);
}

//---------------------------------------------------------------------------//
// Closed-form sums
//
// Triangulation: q_k = (2k-2)! / ((k-1)! (k+1)!) 4^{-k}, and both q_k and k q_k are
// Gosper-summable.
//
// Quadrangulation: q_{2p-1} = q_{2p-2} = w_p with
//   w_p = (3/4) (4/27)^p (3p-3)! / (p! (2p-1)!),
// a hypergeometric term at unit argument; Gauss summation gives
//   sum_p w_p = 1/8,  sum_p p w_p = 1/6.
//---------------------------------------------------------------------------//
namespace {

const Rational kBaseMass(1, 8);
const Rational kBaseMoment(1, 6);

Rational tri_tail_factor(std::int64_t k)
{
    // C(2k, k) 4^{-k} / (6 (k + 1))
    return Rational(binomial(2 * k, k)) / (power(Rational(4), k) * 6 * (k + 1));
}

}  // namespace

PeelingLaw::PeelingLaw(MapModel model) : model_(std::move(model))
{
    if (quadrangular()) {
        // Exposed 3, two new inner vertices.
        q_inner_ = alpha_power(model_, 2) / power(model_.rho, 2);
        side_mass_ = 2 * kBaseMass;
        side_moment_ = 4 * kBaseMoment - 3 * kBaseMass;
        // q_joint = w_{p1} w_{p2} rho^2 / alpha^2 = (8/3) w_{p1} w_{p2}
        const Rational factor = power(model_.rho, 2) / model_.alpha_sq;
        joint_mass_ = factor * kBaseMass * kBaseMass;
        joint_moment_ = factor * 2 * side_moment_odd() * kBaseMass;
    } else {
        // Exposed 2, one new inner vertex.
        q_inner_ = alpha_power(model_, 1) / model_.rho;
        side_mass_ = tri_tail_factor(0);
        side_moment_ = 2 * tri_tail_factor(0);
        joint_mass_ = 0;
        joint_moment_ = 0;
    }
}

Rational PeelingLaw::compute_q_side(std::int64_t k) const
{
    if (k < min_side_index())
        throw std::domain_error("side index out of range");
    if (!quadrangular())
        return partition_function(model_, k + 1) * alpha_power(model_, -k);
    if (k % 2 == 1)  // exposed 2
        return partition_function(model_, k + 1) * alpha_power(model_, 1 - k) / model_.rho;
    return partition_function(model_, k + 2) * alpha_power(model_, -k) / model_.rho;
}

void PeelingLaw::ensure_table(std::int64_t kmax) const
{
    const std::size_t needed = static_cast<std::size_t>(kmax - min_side_index() + 1);
    if (side_.size() >= needed)
        return;
    const std::size_t target = std::max(needed, 2 * side_.size());
    while (side_.size() < target) {
        const std::int64_t k = min_side_index() + static_cast<std::int64_t>(side_.size());
        Rational q = compute_q_side(k);
        side_prefix_.push_back(side_prefix_.empty() ? q : side_prefix_.back() + q);
        Rational kq = q * k;
        moment_prefix_.push_back(moment_prefix_.empty() ? kq : moment_prefix_.back() + kq);
        side_.push_back(std::move(q));
    }
}

Rational PeelingLaw::q_side(std::int64_t k) const
{
    if (k < min_side_index())
        throw std::domain_error("side index out of range");
    std::lock_guard lock(table_mutex_);
    ensure_table(k);
    return side_[static_cast<std::size_t>(k - min_side_index())];
}

Rational PeelingLaw::q_joint(std::int64_t k1, std::int64_t k2) const
{
    if (!quadrangular())
        throw std::domain_error("joint configuration only exists for quadrangulations");
    if (k1 < 1 || k2 < 1 || k1 % 2 == 0 || k2 % 2 == 0)
        throw std::domain_error("joint segments must be odd");
    return partition_function(model_, k1 + 1) * partition_function(model_, k2 + 1)
           * alpha_power(model_, -(k1 + k2));
}

Rational PeelingLaw::side_mass_odd() const
{
    if (!quadrangular())
        throw std::domain_error("parity split only defined for quadrangulations");
    return kBaseMass;
}

Rational PeelingLaw::side_moment_odd() const
{
    if (!quadrangular())
        throw std::domain_error("parity split only defined for quadrangulations");
    return 2 * kBaseMoment - kBaseMass;
}

Rational PeelingLaw::side_head(std::int64_t kmax) const
{
    if (kmax < min_side_index())
        return 0;
    std::lock_guard lock(table_mutex_);
    ensure_table(kmax);
    return side_prefix_[static_cast<std::size_t>(kmax - min_side_index())];
}

Rational PeelingLaw::side_moment_head(std::int64_t kmax) const
{
    if (kmax < min_side_index())
        return 0;
    std::lock_guard lock(table_mutex_);
    ensure_table(kmax);
    return moment_prefix_[static_cast<std::size_t>(kmax - min_side_index())];
}

Rational PeelingLaw::side_tail(std::int64_t k) const
{
    if (quadrangular())
        return side_mass_ - side_head(k);
    if (k < 0)
        return side_mass_;
    return tri_tail_factor(k);
}

Rational PeelingLaw::side_moment_tail(std::int64_t k) const
{
    if (quadrangular())
        return side_moment_ - side_moment_head(k);
    if (k < 0)
        return side_moment_;
    return tri_tail_factor(k) * (3 * k + 2);
}

Rational PeelingLaw::base_head(std::int64_t pmax) const
{
    // w_p = q_side(2p - 1)
    Rational sum = 0;
    for (std::int64_t p = 1; p <= pmax; ++p)
        sum += q_side(2 * p - 1);
    return sum;
}

Rational PeelingLaw::realized_mass(std::int64_t kmax) const
{
    Rational mass = q_inner_ + 2 * side_head(kmax);
    if (quadrangular()) {
        // odd k <= kmax  <=>  p <= (kmax + 1) / 2
        const Rational w = base_head((kmax + 1) / 2);
        mass += joint_orientations() * (power(model_.rho, 2) / model_.alpha_sq) * w * w;
    }
    return mass;
}

std::int64_t PeelingLaw::tabulated() const
{
    std::lock_guard lock(table_mutex_);
    return static_cast<std::int64_t>(side_.size());
}

LawMoments law_moments(const PeelingLaw& law)
{
    LawMoments m;
    for (auto& x : m.exposed_law)
        x = 0;
    Rational right_mean;
    if (law.quadrangular()) {
        const int orient = law.joint_orientations();
        const Rational odd = law.side_mass_odd();
        const Rational even = law.side_mass() - odd;
        m.exposed_law[3] = law.q_inner();
        m.exposed_law[2] = 2 * odd;
        m.exposed_law[1] = 2 * even + orient * law.joint_mass();
        m.delta = 2 * law.side_moment() + orient * law.joint_moment();
        // Right swallows: the side case, both-right joint, half of the split joint.
        right_mean = law.side_moment() + law.joint_moment() + law.joint_moment() / 2;
        m.eta = (law.side_mass() - law.q_side(0)) + 2 * law.joint_mass();
    } else {
        m.exposed_law[2] = law.q_inner();
        m.exposed_law[1] = 2 * law.side_mass();
        m.delta = 2 * law.side_moment();
        right_mean = law.side_moment();
        m.eta = law.side_mass();
    }
    m.exposed_mean = 0;
    for (int e = 1; e <= 3; ++e)
        m.exposed_mean += e * m.exposed_law[e];
    m.swallowed_mean = m.delta;
    m.rr_given_positive = right_mean / m.eta;
    return m;
}

long double q_side_value(MapKind kind, std::int64_t k)
{
    const long double x = static_cast<long double>(k);
    if (kind == MapKind::Triangulation) {
        if (k < 1)
            throw std::domain_error("side index out of range");
        return std::exp(std::lgamma(2 * x - 1) - 2 * std::lgamma(x) - std::log(x)
                        - std::log(x + 1) - x * std::log(4.0L));
    }
    if (k < 0)
        throw std::domain_error("side index out of range");
    const long double p = static_cast<long double>(k % 2 == 1 ? (k + 1) / 2 : k / 2 + 1);
    return std::exp(std::log(0.75L) + p * std::log(4.0L / 27.0L) + std::lgamma(3 * p - 2)
                    - std::lgamma(p + 1) - std::lgamma(2 * p));
}

TailAsymptotics fit_tail(const PeelingLaw& law, std::int64_t k_min, std::int64_t k_max)
{
    if (k_min < 10 || k_max <= k_min)
        throw std::domain_error("fit window needs 10 <= k_min < k_max");
    if (k_max - k_min + 1 < 10)
        throw std::domain_error("fit window has fewer than 10 points");

    const MapKind kind = law.model().kind;
    long double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long double n = 0;
    for (std::int64_t k = k_min; k <= k_max; ++k) {
        const long double lx = std::log(static_cast<long double>(k));
        const long double y = std::log(q_side_value(kind, k)) + 2.5L * lx;
        sx += lx;
        sy += y;
        sxx += lx * lx;
        sxy += lx * y;
        n += 1;
    }
    TailAsymptotics t;
    t.kind = kind;
    t.k_min = k_min;
    t.k_max = k_max;
    t.side_tail_constant = static_cast<double>(std::exp(sy / n));
    t.residual_slope = static_cast<double>((n * sxy - sx * sy) / (n * sxx - sx * sx));
    const double alpha_sq = to_double(law.model().alpha_sq);
    if (kind == MapKind::Triangulation)
        t.iota = t.side_tail_constant / std::sqrt(alpha_sq);
    else
        t.iota = t.side_tail_constant * to_double(law.model().rho) / alpha_sq;
    return t;
}

}  // namespace peel
