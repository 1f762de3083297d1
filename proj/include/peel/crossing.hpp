#pragma once

#include "peel/enumeration.hpp"
#include "peel/peeling.hpp"
#include "peel/rng.hpp"

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

namespace peel {

enum class KernelKind { Bond, Face, Site };

std::string_view kernel_name(KernelKind kind);
KernelKind parse_kernel(std::string_view name);

// Critical probabilities: bond 1/4, 1/3; face 4/5, 3/4; site 1/2, 5/9 (tri, quad).
Rational critical_probability(KernelKind kind, MapKind model);

struct CrossingKernel {
    KernelKind kind;
    MapModel model;
    Rational p_critical;
};

CrossingKernel make_kernel(KernelKind kind, MapKind model);

// Kernel plus the sampler it draws from; cheap to share across threads.
class KernelContext {
  public:
    explicit KernelContext(const CrossingKernel& kernel);
    KernelContext(const CrossingKernel& kernel, double p);

    const CrossingKernel& kernel() const { return kernel_; }
    const PeelSampler& sampler() const { return sampler_; }
    double p() const { return p_; }

  private:
    CrossingKernel kernel_;
    PeelingLaw law_;
    PeelSampler sampler_;
    double p_;
};

struct WalkState {
    std::int64_t black_len = 0;  // B
    std::int64_t free_len = 0;   // F (always 0 for the face kernel)
    std::int64_t step_index = 0;
};

// What a single step did. `event` is the face that touched the black side (the last
// one of a vertex peeling for the site kernel); `peeled` is false on a reveal-black step.
struct StepRecord {
    bool peeled = false;
    bool black = false;
    PeelEvent event;
};

// Deterministic updates (the random parts are passed in).
WalkState bond_update(WalkState s, bool black, const PeelEvent& e);
WalkState face_update(WalkState s, bool black, const PeelEvent& e);
// events: the whole vertex peeling, last one with R_r > 0.
WalkState site_update(WalkState s, bool black, const std::vector<PeelEvent>& events);

WalkState bond_step(WalkState s, const KernelContext& ctx, RngStream& rng, StepRecord* rec = nullptr);
WalkState face_step(WalkState s, const KernelContext& ctx, RngStream& rng, StepRecord* rec = nullptr);
WalkState site_step(WalkState s, const KernelContext& ctx, RngStream& rng, StepRecord* rec = nullptr);
WalkState kernel_step(WalkState s, const KernelContext& ctx, RngStream& rng, StepRecord* rec = nullptr);

// Unconstrained step laws. Black: the B-increment X. Free: the F-increment X^ away from
// the clamp (bond and site only). Every swallow entering the increment is replaced by
// min(swallow, swallow_cap).
enum class WalkBranch { Black, Free };
constexpr std::int64_t kNoCap = std::numeric_limits<std::int64_t>::max();
std::int64_t sample_increment(const KernelContext& ctx, WalkBranch branch, RngStream& rng,
                              std::int64_t swallow_cap = kNoCap);

enum class CaseTag { Case1, Case2, TieZero, TieB };
std::string_view case_name(CaseTag tag);

struct StoppedOutcome {
    std::int64_t T = 0;
    std::int64_t B_before = 0;
    std::int64_t overshoot = 0;
    CaseTag tag = CaseTag::TieZero;
    // Two segments cut on the right boundary by the last face (quadrangles only).
    std::optional<std::int64_t> k1, k2;
    // Residual black lengths, filled under Case2.
    std::optional<std::int64_t> d_l, d_r;
};

// Offset c in k1 + k2 = B_before + overshoot + c for a stopping face with k-data:
// 0 for bond, 1 for site, (exposed if black) - 1 for face.
std::int64_t k_identity_offset(KernelKind kind, const StepRecord& last);

CaseTag classify(std::int64_t overshoot, std::int64_t threshold);
void fill_residuals(StoppedOutcome& out, std::int64_t threshold);

struct TrialResult {
    bool censored = false;
    std::int64_t steps = 0;
    std::int64_t final_black = 0;  // B when the trial ended (censored or not)
    std::int64_t final_free = 0;
    std::int64_t k_offset = 0;
    StoppedOutcome outcome;
};

constexpr std::int64_t kDefaultStepBudget = 1000000000;

TrialResult run_crossing_trial(const KernelContext& ctx, double lambda, double a, double b,
                               RngStream& rng, std::int64_t budget = kDefaultStepBudget);

// Bond/site trial co-simulating the dominating walk S and correction R; returns the
// number of steps where S - R <= B <= S failed. aux drives the auxiliary Bernoullis.
struct SandwichReport {
    TrialResult trial;
    std::int64_t violations = 0;
    std::int64_t zero_steps = 0;
};
SandwichReport run_sandwich_trial(const KernelContext& ctx, double lambda, double a,
                                  RngStream& rng, RngStream& aux,
                                  std::int64_t budget = kDefaultStepBudget);

double crossing_formula(double a, double b);

struct CaseCounts {
    std::int64_t case1 = 0, case2 = 0, tie_zero = 0, tie_b = 0, censored = 0;
    std::int64_t with_k = 0;
    std::int64_t k_identity_failures = 0;
    std::int64_t total() const { return case1 + case2 + tie_zero + tie_b + censored; }
    std::int64_t resolved() const { return case1 + case2 + tie_zero + tie_b; }
};

struct CrossingEstimate {
    KernelKind kernel;
    MapKind model;
    double lambda = 0, a = 0, b = 0;
    std::int64_t n_trials = 0;
    CaseCounts counts;
    double p_hat = 0;         // Case2 frequency among resolved trials
    double tie_rate = 0;
    double ci_halfwidth = 0;  // 99% normal approximation
    double p_low = 0, p_high = 0;  // Case2 frequency if every censored trial were Case1 / Case2
    // Censored trials scored by the limit overshoot law from their last height:
    // (case2 + sum crossing_formula(B_cens / lambda, b)) / n_trials.
    double p_completed = 0;
    double completed_ci = 0;
    double analytic = 0;
    std::int64_t total_steps = 0;
};

// Per-trial outcomes, indexed by trial.
struct CrossingRun {
    std::vector<TrialResult> trials;
    std::int64_t total_steps = 0;
};

CrossingRun run_crossing_trials(const KernelContext& ctx, double lambda, double a, double b,
                                std::int64_t n_trials, std::uint64_t seed, int workers,
                                std::int64_t budget = kDefaultStepBudget);

// Classify an existing run against another b (same a and lambda).
CrossingEstimate summarize_crossing(const KernelContext& ctx, const CrossingRun& run,
                                    double lambda, double a, double b);

CrossingEstimate estimate_crossing(const KernelContext& ctx, double lambda, double a, double b,
                                   std::int64_t n_trials, std::uint64_t seed, int workers,
                                   std::int64_t budget = kDefaultStepBudget);

}  // namespace peel
