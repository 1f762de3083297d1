#pragma once

#include "peel/rational.hpp"

#include <array>
#include <cstdint>
#include <mutex>
#include <string_view>
#include <vector>

namespace peel {

enum class MapKind { Triangulation, Quadrangulation };

struct MapModel {
    MapKind kind;
    Rational rho;       // growth constant
    Rational alpha_sq;  // squared so that the quadrangular value stays rational

    static MapModel triangulation();
    static MapModel quadrangulation();
    static MapModel of(MapKind kind);
};

std::string_view model_name(MapKind kind);
MapKind parse_model(std::string_view name);

// alpha^exponent; throws unless the result is rational.
Rational alpha_power(const MapModel& model, std::int64_t exponent);

// Boltzmann partition function of the m-gon at the critical weight.
Rational partition_function(const MapModel& model, std::int64_t m);

// Exact q-law of one peeling step.
//
// Triangulation: inner third vertex, or third vertex on one side at distance k >= 1.
// Quadrangulation: two inner vertices; one boundary vertex at distance k >= 0 on one
// side; or all four vertices on the boundary, cutting segments k1, k2 (both odd) in one
// of three orientations (both left, one per side, both right). The canonical joint table
// holds one orientation; the other two carry the same weights.
class PeelingLaw {
  public:
    explicit PeelingLaw(MapModel model);

    const MapModel& model() const { return model_; }
    bool quadrangular() const { return model_.kind == MapKind::Quadrangulation; }

    const Rational& q_inner() const { return q_inner_; }
    std::int64_t min_side_index() const { return quadrangular() ? 0 : 1; }
    Rational q_side(std::int64_t k) const;
    Rational q_joint(std::int64_t k1, std::int64_t k2) const;
    int joint_orientations() const { return quadrangular() ? 3 : 0; }

    // Whole-series sums for one side / one orientation (closed forms).
    const Rational& side_mass() const { return side_mass_; }
    const Rational& side_moment() const { return side_moment_; }
    Rational side_mass_odd() const;
    Rational side_moment_odd() const;
    const Rational& joint_mass() const { return joint_mass_; }
    const Rational& joint_moment() const { return joint_moment_; }

    // Exact residual mass and first moment of q_side beyond k.
    Rational side_tail(std::int64_t k) const;
    Rational side_moment_tail(std::int64_t k) const;

    // Exact partial sums over k <= kmax, backed by the lazily doubled table.
    Rational side_head(std::int64_t kmax) const;
    Rational side_moment_head(std::int64_t kmax) const;
    // Total tabulated mass when both side tables and all joint tables stop at kmax.
    Rational realized_mass(std::int64_t kmax) const;
    std::int64_t tabulated() const;

  private:
    Rational compute_q_side(std::int64_t k) const;
    void ensure_table(std::int64_t kmax) const;
    // Head sums of the base sequence w_p for the quadrangular law.
    Rational base_head(std::int64_t pmax) const;

    MapModel model_;
    Rational q_inner_;
    Rational side_mass_, side_moment_;
    Rational joint_mass_, joint_moment_;

    mutable std::mutex table_mutex_;
    mutable std::vector<Rational> side_;           // q_side(min_side_index() + i)
    mutable std::vector<Rational> side_prefix_;    // running sums of side_
    mutable std::vector<Rational> moment_prefix_;  // running sums of k q_side(k)
};

struct LawMoments {
    Rational exposed_mean;
    Rational swallowed_mean;
    Rational eta;    // P(R_r > 0)
    Rational delta;  // E(R)
    Rational rr_given_positive;
    std::array<Rational, 4> exposed_law;  // index = number of exposed edges
};

LawMoments law_moments(const PeelingLaw& law);

// Float evaluation of q_side for large k.
long double q_side_value(MapKind kind, std::int64_t k);

struct TailAsymptotics {
    MapKind kind;
    double side_tail_constant;  // lim q_side(k) k^{5/2}
    double iota;                // Z_m ~ iota m^{-5/2} alpha^m
    double residual_slope;      // log-log slope of q_side(k) k^{5/2} over the window
    std::int64_t k_min, k_max;
};

TailAsymptotics fit_tail(const PeelingLaw& law, std::int64_t k_min, std::int64_t k_max);

}  // namespace peel
