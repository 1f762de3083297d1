#include "peel/peeling.hpp"

#include <stdexcept>

namespace peel {

PeelSampler::PeelSampler(const PeelingLaw& law)
    : kind_(law.model().kind), index_(&IndexLaw::instance(law.model().kind))
{
    using W = std::vector<std::pair<Cls, Rational>>;
    if (kind_ == MapKind::Triangulation) {
        const Rational side = law.side_mass();
        full_ = make_table(W{{Cls::Inner, law.q_inner()}, {Cls::Left, side}, {Cls::Right, side}});
        right_positive_ = make_table(W{{Cls::Right, side}});
        right_zero_ = make_table(W{{Cls::Inner, law.q_inner()}, {Cls::Left, side}});
    } else {
        const Rational odd = law.side_mass_odd();
        const Rational even = law.side_mass() - odd;
        const Rational zero = law.q_side(0);
        const Rational joint = law.joint_mass();
        full_ = make_table(W{{Cls::Inner, law.q_inner()},
                             {Cls::LeftOdd, odd},
                             {Cls::LeftEven, even},
                             {Cls::RightOdd, odd},
                             {Cls::RightEven, even},
                             {Cls::JointLeft, joint},
                             {Cls::JointSplit, joint},
                             {Cls::JointRight, joint}});
        right_positive_ = make_table(W{{Cls::RightOdd, odd},
                                       {Cls::RightEvenPos, even - zero},
                                       {Cls::JointSplit, joint},
                                       {Cls::JointRight, joint}});
        right_zero_ = make_table(W{{Cls::Inner, law.q_inner()},
                                   {Cls::LeftOdd, odd},
                                   {Cls::LeftEven, even},
                                   {Cls::RightZero, zero},
                                   {Cls::JointLeft, joint}});
    }
    eta_ = to_double(law_moments(law).eta);
    full_atoms_ = make_atoms(full_);
    right_positive_atoms_ = make_atoms(right_positive_);
    right_zero_atoms_ = make_atoms(right_zero_);
}

PeelSampler::ClassTable PeelSampler::make_table(const std::vector<std::pair<Cls, Rational>>& weights)
{
    ClassTable t;
    if (weights.empty() || weights.size() > t.cls.size())
        throw std::logic_error("bad class table");
    Rational total = 0;
    for (const auto& w : weights)
        total += w.second;
    Rational running = 0;
    for (const auto& [cls, w] : weights) {
        running += w;
        t.cls[t.size] = cls;
        t.cumulative[t.size] = to_double(running / total);
        ++t.size;
    }
    t.cumulative[t.size - 1] = 2.0;  // u < 1 always lands
    return t;
}

PeelEvent PeelSampler::make_event(Cls c, std::int64_t i1, std::int64_t i2) const
{
    PeelEvent e;
    switch (c) {
    case Cls::Inner:
        e.config = Config::InnerVertices;
        e.exposed = kind_ == MapKind::Triangulation ? 2 : 3;
        break;
    case Cls::Left:
        e.config = Config::ThirdLeft;
        e.exposed = 1;
        e.k1 = e.swallowed_left = i1;
        break;
    case Cls::Right:
        e.config = Config::ThirdRight;
        e.exposed = 1;
        e.k1 = e.swallowed_right = i1;
        break;
    case Cls::LeftOdd:
        e.config = Config::ThirdLeft;
        e.exposed = 2;
        e.k1 = e.swallowed_left = 2 * i1 - 1;
        break;
    case Cls::LeftEven:
        e.config = Config::ThirdLeft;
        e.exposed = 1;
        e.k1 = e.swallowed_left = 2 * i1 - 2;
        break;
    case Cls::RightOdd:
        e.config = Config::ThirdRight;
        e.exposed = 2;
        e.k1 = e.swallowed_right = 2 * i1 - 1;
        break;
    case Cls::RightEven:
    case Cls::RightEvenPos:
        e.config = Config::ThirdRight;
        e.exposed = 1;
        e.k1 = e.swallowed_right = 2 * i1 - 2;
        break;
    case Cls::RightZero:
        e.config = Config::ThirdRight;
        e.exposed = 1;
        break;
    case Cls::JointLeft:
    case Cls::JointSplit:
    case Cls::JointRight:
        e.config = Config::FourOnBoundary;
        e.exposed = 1;
        e.k1 = 2 * i1 - 1;
        e.k2 = 2 * i2 - 1;
        if (c == Cls::JointLeft) {
            e.orientation = Orientation::BothLeft;
            e.swallowed_left = e.k1 + e.k2;
        } else if (c == Cls::JointSplit) {
            e.orientation = Orientation::Split;
            e.swallowed_left = e.k1;
            e.swallowed_right = e.k2;
        } else {
            e.orientation = Orientation::BothRight;
            e.swallowed_right = e.k1 + e.k2;
        }
        break;
    }
    return e;
}

namespace {

bool is_joint(PeelSampler::Cls c)
{
    using C = PeelSampler::Cls;
    return c == C::JointLeft || c == C::JointSplit || c == C::JointRight;
}

bool is_indexed(PeelSampler::Cls c)
{
    using C = PeelSampler::Cls;
    return c != C::Inner && c != C::RightZero;
}

}  // namespace

PeelSampler::AtomTable PeelSampler::make_atoms(const ClassTable& table) const
{
    const IndexLaw& idx = *index_;
    const int single_head = kSingleHead, joint_head = kJointHead;
    std::vector<Atom> atoms;
    std::vector<long double> weight;
    auto add = [&](Cls c, std::int64_t i1, std::int64_t i2, std::uint8_t tail, long double w) {
        Atom a;
        a.cls = c;
        a.tail = tail;
        a.i1 = i1;
        a.i2 = i2;
        if (tail == kExact)
            a.event = make_event(c, i1, i2);
        atoms.push_back(a);
        weight.push_back(w);
    };
    double previous = 0;
    for (int j = 0; j < table.size; ++j) {
        const Cls c = table.cls[j];
        const long double mass = std::min(table.cumulative[j], 1.0) - previous;
        previous = std::min(table.cumulative[j], 1.0);
        if (!is_indexed(c)) {
            add(c, 0, 0, kExact, mass);
        } else if (!is_joint(c)) {
            const std::int64_t lo = c == Cls::RightEvenPos ? 2 : 1;
            const long double norm = idx.survival(lo - 1);
            for (std::int64_t i = lo; i <= single_head; ++i)
                add(c, i, 0, kExact, mass * idx.probability(i) / norm);
            add(c, single_head + 1, 0, kTailFirst, mass * idx.survival(single_head) / norm);
        } else {
            const long double tail = idx.survival(joint_head);
            for (std::int64_t i = 1; i <= joint_head; ++i) {
                const long double pi = idx.probability(i);
                for (std::int64_t k = 1; k <= joint_head; ++k)
                    add(c, i, k, kExact, mass * pi * idx.probability(k));
                add(c, i, joint_head + 1, kTailSecond, mass * pi * tail);
            }
            add(c, joint_head + 1, 0, kTailFirst, mass * tail);
        }
    }

    // Walker alias table.
    AtomTable t;
    const std::size_t n = atoms.size();
    t.atoms = std::move(atoms);
    t.threshold.assign(n, 1.0);
    t.alias.resize(n);
    long double total = 0;
    for (auto w : weight)
        total += w;
    std::vector<long double> scaled(n);
    std::vector<std::uint32_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
        scaled[i] = weight[i] / total * static_cast<long double>(n);
        t.alias[i] = static_cast<std::uint32_t>(i);
        (scaled[i] < 1 ? small : large).push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
        const std::uint32_t s = small.back(), l = large.back();
        small.pop_back();
        t.threshold[s] = static_cast<double>(scaled[s]);
        t.alias[s] = l;
        scaled[l] -= 1 - scaled[s];
        if (scaled[l] < 1) {
            large.pop_back();
            small.push_back(l);
        }
    }
    return t;
}

PeelEvent PeelSampler::draw(const AtomTable& table, RngStream& rng) const
{
    const double u = rng.uniform() * static_cast<double>(table.atoms.size());
    auto j = static_cast<std::size_t>(u);
    if (u - static_cast<double>(j) >= table.threshold[j])
        j = table.alias[j];
    const Atom& a = table.atoms[j];
    if (a.tail == kExact)
        return a.event;
    const IndexLaw& idx = *index_;
    if (a.tail == kTailFirst)
        return make_event(a.cls, idx.sample_at_least(a.i1, rng), is_joint(a.cls) ? idx.sample(rng) : 0);
    return make_event(a.cls, a.i1, idx.sample_at_least(a.i2, rng));
}

VertexPeelOutcome PeelSampler::sample_vertex_peeling(RngStream& rng) const
{
    VertexPeelOutcome out;
    out.last = vertex_peel(rng, [&](const PeelEvent& e) {
        ++out.steps;
        out.left_history.emplace_back(e.exposed, e.swallowed_left);
    });
    out.right_swallowed = out.last.swallowed_right;
    return out;
}

}  // namespace peel
