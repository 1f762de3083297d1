#pragma once

#include "peel/crossing.hpp"
#include "peel/site_threshold.hpp"
#include "peel/stable_limit.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace peel {

inline constexpr const char* kLibraryVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Command { LawDump, Threshold, Crossing, LimitCheck, ReferenceTables };
enum class LimitCheckKind { Positivity, Ladder, SelfSimilarity, Xi };

struct ExperimentConfig {
    int schema_version = kSchemaVersion;
    Command command = Command::ReferenceTables;
    std::uint64_t seed = 1;
    int workers = 0;
    std::string out;  // JSON record path; empty: not written

    MapKind model = MapKind::Quadrangulation;
    KernelKind kernel = KernelKind::Bond;

    // law dump
    std::int64_t kmax = 20;

    // threshold
    double tolerance = 0.01;
    ThresholdBudget threshold_budget;
    std::optional<double> guess;

    // crossing
    double a = 1, b = 1;
    std::vector<double> b_grid;  // extra b values classified on the same trials
    std::vector<double> lambdas{800};
    std::int64_t trials = 10000;
    std::int64_t step_budget = kDefaultStepBudget;
    std::string emit_outcomes;  // CSV path; empty: none

    // limit-check
    LimitCheckKind check = LimitCheckKind::Positivity;
    WalkBranch branch = WalkBranch::Black;
    std::optional<double> p;  // colour probability override
    std::int64_t horizon = 10000;
    std::vector<std::int64_t> horizons{10000, 100000, 1000000};
    double lambda1 = 100, lambda2 = 400, time = 1;
};

// Validates every field; unknown keys are rejected.
ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);

struct ResultRecord {
    nlohmann::json json;  // config echo, results, steps, version, seed; timing under "timing"
    bool inconclusive = false;
};

// Runs the experiment and writes the record (and CSV stream) when paths are set.
// Partial outputs are removed on failure.
ResultRecord run_experiment(const ExperimentConfig& config);

nlohmann::json rational_json(const Rational& x);
Rational parse_fraction(const std::string& s);

// Exact constants: thresholds, eta, delta, moments, q-law and partition function heads.
nlohmann::json reference_tables(std::int64_t head = 20);
void emit_reference_tables(const std::string& path);

// Writes text atomically (temporary file then rename).
void write_file(const std::string& path, const std::string& text);

nlohmann::json to_json(const ThresholdEstimate& e);
nlohmann::json to_json(const CrossingEstimate& e);
nlohmann::json to_json(const FrequencyReport& r);
nlohmann::json to_json(const ExponentFit& f);
nlohmann::json to_json(const ScalingCheckReport& r);
nlohmann::json to_json(const XiReport& r);

}  // namespace peel
