#pragma once

#include "peel/enumeration.hpp"
#include "peel/index_law.hpp"
#include "peel/rng.hpp"

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace peel {

enum class Config : std::uint8_t { InnerVertices, ThirdLeft, ThirdRight, FourOnBoundary };
enum class Orientation : std::uint8_t { None, BothLeft, Split, BothRight };

// Left is the side of the free/white part of the boundary, right the side of the
// black segment. For ThirdLeft/ThirdRight, k1 is the distance k. For FourOnBoundary,
// k1 is the segment nearer the root edge; with Split, k1 sits on the left.
struct PeelEvent {
    Config config = Config::InnerVertices;
    Orientation orientation = Orientation::None;
    int exposed = 0;
    std::int64_t swallowed_left = 0;
    std::int64_t swallowed_right = 0;
    std::int64_t k1 = 0;
    std::int64_t k2 = 0;

    std::int64_t swallowed() const { return swallowed_left + swallowed_right; }
    // Two finite segments cut on the right boundary.
    bool right_pair() const
    {
        return config == Config::FourOnBoundary && orientation == Orientation::BothRight;
    }
};

struct VertexPeelOutcome {
    std::int64_t steps = 0;
    std::int64_t right_swallowed = 0;
    std::vector<std::pair<int, std::int64_t>> left_history;  // (exposed, swallowed_left)
    PeelEvent last;
};

// Samples single peeling events from an exact q-law. Class weights come from the
// exact closed-form sums; indices come from the shared IndexLaw.
class PeelSampler {
  public:
    explicit PeelSampler(const PeelingLaw& law);

    MapKind kind() const { return kind_; }
    double eta() const { return eta_; }

    PeelEvent sample(RngStream& rng) const { return draw(full_atoms_, rng); }
    PeelEvent sample_right_positive(RngStream& rng) const { return draw(right_positive_atoms_, rng); }
    PeelEvent sample_right_zero(RngStream& rng) const { return draw(right_zero_atoms_, rng); }
    std::int64_t sample_right_conditioned_positive(RngStream& rng) const
    {
        return sample_right_positive(rng).swallowed_right;
    }

    // Vertex peeling: events until the first one with R_r > 0.
    // visit(event) is called for every step, the last one included.
    template <class Visit>
    PeelEvent vertex_peel(RngStream& rng, Visit&& visit) const
    {
        for (;;) {
            const PeelEvent e = sample(rng);
            visit(e);
            if (e.swallowed_right > 0)
                return e;
        }
    }

    VertexPeelOutcome sample_vertex_peeling(RngStream& rng) const;

    enum class Cls : std::uint8_t {
        Inner,
        Left,       // tri: k >= 1
        Right,      // tri: k >= 1
        LeftOdd,    // quad: k = 2p - 1
        LeftEven,   // quad: k = 2p - 2
        RightOdd,
        RightEven,
        RightZero,     // quad: k = 0 on the right
        RightEvenPos,  // quad: even k >= 2 on the right
        JointLeft,
        JointSplit,
        JointRight
    };

    struct ClassTable {
        std::array<double, 8> cumulative{};
        std::array<Cls, 8> cls{};
        int size = 0;
    };

    const ClassTable& full_table() const { return full_; }

    // Events as alias-table atoms: the index heads of every class enumerated, with
    // tail atoms that finish the draw through IndexLaw::sample_at_least.
    static constexpr int kSingleHead = 48;
    static constexpr int kJointHead = 8;
    static constexpr std::uint8_t kExact = 0, kTailFirst = 1, kTailSecond = 2;

    struct Atom {
        PeelEvent event;
        Cls cls = Cls::Inner;
        std::uint8_t tail = kExact;
        std::int64_t i1 = 0, i2 = 0;
    };

    struct AtomTable {
        std::vector<Atom> atoms;
        std::vector<double> threshold;
        std::vector<std::uint32_t> alias;
    };

    const AtomTable& full_atoms() const { return full_atoms_; }

    // Event for a class and its underlying indices (i2 used by joint classes only).
    PeelEvent make_event(Cls c, std::int64_t i1, std::int64_t i2) const;

  private:
    PeelEvent draw(const AtomTable& table, RngStream& rng) const;
    AtomTable make_atoms(const ClassTable& table) const;
    static ClassTable make_table(const std::vector<std::pair<Cls, Rational>>& weights);

    MapKind kind_;
    const IndexLaw* index_;
    double eta_;
    ClassTable full_, right_positive_, right_zero_;
    AtomTable full_atoms_, right_positive_atoms_, right_zero_atoms_;
};

}  // namespace peel
