#include "peel/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace peel {

using nlohmann::json;

namespace {

const char* command_name(Command c)
{
    switch (c) {
    case Command::LawDump: return "law";
    case Command::Threshold: return "threshold";
    case Command::Crossing: return "crossing";
    case Command::LimitCheck: return "limit-check";
    case Command::ReferenceTables: return "reference-tables";
    }
    return "?";
}

const char* check_name(LimitCheckKind k)
{
    switch (k) {
    case LimitCheckKind::Positivity: return "positivity";
    case LimitCheckKind::Ladder: return "ladder";
    case LimitCheckKind::SelfSimilarity: return "selfsim";
    case LimitCheckKind::Xi: return "xi";
    }
    return "?";
}

template <class T>
T get(const json& j, const char* key, T fallback)
{
    if (!j.contains(key))
        return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("bad value for ") + key);
    }
}

void require(bool ok, const std::string& what)
{
    if (!ok)
        throw ConfigError(what);
}

json counts_json(const CaseCounts& c)
{
    return {{"case1", c.case1},       {"case2", c.case2},   {"tie_zero", c.tie_zero},
            {"tie_b", c.tie_b},       {"censored", c.censored}, {"with_k", c.with_k},
            {"k_identity_failures", c.k_identity_failures}};
}

std::string optional_cell(const std::optional<std::int64_t>& v)
{
    return v ? std::to_string(*v) : "";
}

}  // namespace

json rational_json(const Rational& x)
{
    return {{"decimal", to_double(x)}, {"fraction", fraction_string(x)}};
}

Rational parse_fraction(const std::string& s)
{
    const auto slash = s.find('/');
    try {
        if (slash == std::string::npos)
            return Rational(BigInt(s));
        return Rational(BigInt(s.substr(0, slash)), BigInt(s.substr(slash + 1)));
    } catch (const std::exception&) {
        throw std::invalid_argument("not a fraction: " + s);
    }
}

ExperimentConfig parse_config(const json& j)
{
    static const std::set<std::string> known{
        "schema_version", "command",     "seed",         "workers",       "out",       "model",
        "kernel",         "kmax",        "tolerance",    "trials_per_probe", "escape_height", "max_steps",
        "max_probes",     "guess",       "a",            "b",             "b_grid",    "lambdas",
        "trials",         "step_budget", "emit_outcomes", "check",        "branch",    "p",
        "horizon",        "horizons",    "lambda1",      "lambda2",       "time"};
    require(j.is_object(), "config must be a JSON object");
    for (const auto& [key, value] : j.items())
        require(known.count(key) > 0, "unknown config key: " + key);

    ExperimentConfig c;
    c.schema_version = get(j, "schema_version", kSchemaVersion);
    require(c.schema_version == kSchemaVersion, "unsupported schema_version");
    require(j.contains("command"), "missing command");
    const auto cmd = get<std::string>(j, "command", "");
    if (cmd == "law")
        c.command = Command::LawDump;
    else if (cmd == "threshold")
        c.command = Command::Threshold;
    else if (cmd == "crossing")
        c.command = Command::Crossing;
    else if (cmd == "limit-check")
        c.command = Command::LimitCheck;
    else if (cmd == "reference-tables")
        c.command = Command::ReferenceTables;
    else
        throw ConfigError("unknown command: " + cmd);

    c.seed = get<std::uint64_t>(j, "seed", c.seed);
    c.workers = get(j, "workers", c.workers);
    require(c.workers >= 0, "workers must be >= 0");
    c.out = get(j, "out", c.out);
    try {
        c.model = parse_model(get<std::string>(j, "model", std::string(model_name(c.model))));
        c.kernel = parse_kernel(get<std::string>(j, "kernel", std::string(kernel_name(c.kernel))));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    c.kmax = get(j, "kmax", c.kmax);
    require(c.kmax >= 1 && c.kmax <= 100000, "kmax out of range");

    c.tolerance = get(j, "tolerance", c.tolerance);
    require(c.tolerance >= 0.005 && c.tolerance <= 1, "tolerance must be in [0.005, 1]");
    auto& tb = c.threshold_budget;
    tb.trials_per_probe = get(j, "trials_per_probe", tb.trials_per_probe);
    tb.escape_height = get(j, "escape_height", tb.escape_height);
    tb.max_steps = get(j, "max_steps", tb.max_steps);
    tb.max_probes = get(j, "max_probes", tb.max_probes);
    require(tb.trials_per_probe >= 1 && tb.escape_height >= 4 && tb.max_steps >= 1 && tb.max_probes >= 1,
            "threshold budget values must be positive");
    if (j.contains("guess")) {
        c.guess = get(j, "guess", 0.0);
        require(*c.guess > 0 && *c.guess < 1, "guess must be in (0, 1)");
    }

    c.a = get(j, "a", c.a);
    c.b = get(j, "b", c.b);
    require(c.a > 0 && c.b > 0, "a and b must be positive");
    c.b_grid = get(j, "b_grid", c.b_grid);
    for (double b : c.b_grid)
        require(b > 0, "b_grid values must be positive");
    c.lambdas = get(j, "lambdas", c.lambdas);
    require(!c.lambdas.empty(), "lambdas must not be empty");
    for (double l : c.lambdas)
        require(l >= 1 && std::floor(l * c.a) >= 1, "lambda must be >= 1 with floor(lambda a) >= 1");
    c.trials = get(j, "trials", c.trials);
    c.step_budget = get(j, "step_budget", c.step_budget);
    require(c.step_budget >= 1, "step_budget must be positive");
    c.emit_outcomes = get(j, "emit_outcomes", c.emit_outcomes);

    const auto check = get<std::string>(j, "check", check_name(c.check));
    if (check == "positivity")
        c.check = LimitCheckKind::Positivity;
    else if (check == "ladder")
        c.check = LimitCheckKind::Ladder;
    else if (check == "selfsim")
        c.check = LimitCheckKind::SelfSimilarity;
    else if (check == "xi")
        c.check = LimitCheckKind::Xi;
    else
        throw ConfigError("unknown check: " + check);
    const auto branch = get<std::string>(j, "branch", "black");
    require(branch == "black" || branch == "free", "branch must be black or free");
    c.branch = branch == "free" ? WalkBranch::Free : WalkBranch::Black;
    if (j.contains("p")) {
        c.p = get(j, "p", 0.0);
        require(*c.p >= 0 && *c.p <= 1, "p must be in [0, 1]");
    }
    c.horizon = get(j, "horizon", c.horizon);
    c.horizons = get(j, "horizons", c.horizons);
    c.lambda1 = get(j, "lambda1", c.lambda1);
    c.lambda2 = get(j, "lambda2", c.lambda2);
    c.time = get(j, "time", c.time);

    switch (c.command) {
    case Command::Crossing: require(c.trials >= 100, "crossing needs at least 100 trials"); break;
    case Command::LimitCheck:
        require(c.trials >= 1, "trials must be positive");
        if (c.kernel == KernelKind::Face)
            require(c.branch == WalkBranch::Black, "the face kernel has only the black walk");
        if (c.check == LimitCheckKind::Positivity)
            require(c.horizon >= 1, "horizon must be positive");
        if (c.check == LimitCheckKind::Ladder)
            require(c.horizon >= 10000, "ladder horizon must be at least 1e4");
        if (c.check == LimitCheckKind::SelfSimilarity)
            require(c.lambda1 >= 10 && c.lambda2 >= 4 * c.lambda1 && c.time > 0, "need lambda2 >= 4 lambda1 >= 40, t > 0");
        if (c.check == LimitCheckKind::Xi) {
            require(c.kernel != KernelKind::Face, "xi needs a free segment");
            require(!c.horizons.empty(), "horizons must not be empty");
            for (auto n : c.horizons)
                require(n >= 1, "horizons must be positive");
        }
        break;
    default: break;
    }
    return c;
}

json config_to_json(const ExperimentConfig& c)
{
    json j{{"schema_version", c.schema_version},
           {"command", command_name(c.command)},
           {"seed", c.seed},
           {"workers", c.workers},
           {"out", c.out},
           {"model", std::string(model_name(c.model))},
           {"kernel", std::string(kernel_name(c.kernel))},
           {"kmax", c.kmax},
           {"tolerance", c.tolerance},
           {"trials_per_probe", c.threshold_budget.trials_per_probe},
           {"escape_height", c.threshold_budget.escape_height},
           {"max_steps", c.threshold_budget.max_steps},
           {"max_probes", c.threshold_budget.max_probes},
           {"a", c.a},
           {"b", c.b},
           {"b_grid", c.b_grid},
           {"lambdas", c.lambdas},
           {"trials", c.trials},
           {"step_budget", c.step_budget},
           {"emit_outcomes", c.emit_outcomes},
           {"check", check_name(c.check)},
           {"branch", c.branch == WalkBranch::Free ? "free" : "black"},
           {"horizon", c.horizon},
           {"horizons", c.horizons},
           {"lambda1", c.lambda1},
           {"lambda2", c.lambda2},
           {"time", c.time}};
    if (c.guess)
        j["guess"] = *c.guess;
    if (c.p)
        j["p"] = *c.p;
    return j;
}

json to_json(const ThresholdEstimate& e)
{
    json probes = json::array();
    for (const auto& p : e.probes)
        probes.push_back({{"p", p.p},
                          {"escape_freq", p.escape_freq},
                          {"censored_freq", p.censored_freq},
                          {"escape_ratio", p.escape_ratio},
                          {"reached_quarter", p.reached_quarter},
                          {"supercritical", p.supercritical},
                          {"steps", p.steps}});
    return {{"model", std::string(model_name(e.kind))},
            {"bracket", {e.p_low, e.p_high}},
            {"trials_per_probe", e.trials_per_probe},
            {"escape_height", e.escape_height},
            {"max_steps", e.max_steps},
            {"conclusive", e.conclusive},
            {"note", e.note},
            {"guess", e.guess},
            {"baseline", {{"p", e.baseline.p}, {"escape_freq", e.baseline.escape_freq}, {"censored_freq", e.baseline.censored_freq}}},
            {"noise_floor", e.noise_floor},
            {"probes", probes},
            {"total_steps", e.total_steps}};
}

json to_json(const CrossingEstimate& e)
{
    return {{"kernel", std::string(kernel_name(e.kernel))},
            {"model", std::string(model_name(e.model))},
            {"lambda", e.lambda},
            {"a", e.a},
            {"b", e.b},
            {"n_trials", e.n_trials},
            {"p_hat", e.p_hat},
            {"tie_rate", e.tie_rate},
            {"ci_halfwidth", e.ci_halfwidth},
            {"p_low", e.p_low},
            {"p_high", e.p_high},
            {"p_completed", e.p_completed},
            {"completed_ci", e.completed_ci},
            {"analytic", e.analytic},
            {"cases", counts_json(e.counts)},
            {"total_steps", e.total_steps}};
}

json to_json(const FrequencyReport& r)
{
    return {{"frequency", r.frequency}, {"stderr", r.stderr_}, {"trials", r.trials}, {"horizon", r.horizon}};
}

json to_json(const ExponentFit& f)
{
    json survival = json::array();
    for (const auto& s : f.survival)
        survival.push_back({{"n", s.n}, {"survivors", s.survivors}});
    return {{"exponent", f.exponent},
            {"stderr", f.stderr_},
            {"window", {f.n_min, f.n_max}},
            {"conclusive", f.conclusive},
            {"power_law", f.power_law},
            {"fit_pvalue", f.fit_pvalue},
            {"note", f.note},
            {"trials", f.trials},
            {"survival", survival}};
}

json to_json(const ScalingCheckReport& r)
{
    return {{"lambdas", {r.lambda1, r.lambda2}},
            {"time", r.time},
            {"ks_statistic", r.ks_statistic},
            {"ks_pvalue", r.ks_pvalue},
            {"sample_sizes", {r.size1, r.size2}}};
}

json to_json(const XiReport& r)
{
    json rows = json::array();
    for (const auto& q : r.rows)
        rows.push_back({{"n", q.n}, {"q10", q.q10}, {"median", q.median}, {"q90", q.q90}});
    return {{"rows", rows}, {"trials", r.trials}, {"median_non_increasing", r.median_non_increasing}};
}

json reference_tables(std::int64_t head)
{
    json constants;
    for (auto model : {MapKind::Triangulation, MapKind::Quadrangulation}) {
        const std::string m(model_name(model));
        for (auto k : {KernelKind::Bond, KernelKind::Face, KernelKind::Site})
            constants["p_" + std::string(kernel_name(k)) + "_" + m] = rational_json(critical_probability(k, model));
        const PeelingLaw law(MapModel::of(model));
        const auto mo = law_moments(law);
        constants["eta_" + m] = rational_json(mo.eta);
        constants["delta_" + m] = rational_json(mo.delta);
        constants["exposed_mean_" + m] = rational_json(mo.exposed_mean);
        constants["rr_given_positive_" + m] = rational_json(mo.rr_given_positive);
        constants["q_inner_" + m] = rational_json(law.q_inner());
        constants["rho_" + m] = rational_json(law.model().rho);
        constants["alpha_sq_" + m] = rational_json(law.model().alpha_sq);
        constants["p_site_universal_" + m] = rational_json(universal_threshold(mo.eta, mo.delta));
    }
    json tables;
    for (auto model : {MapKind::Triangulation, MapKind::Quadrangulation}) {
        const std::string m(model_name(model));
        const PeelingLaw law(MapModel::of(model));
        json q = json::array();
        for (std::int64_t k = law.min_side_index(); k <= head; ++k)
            q.push_back({{"k", k}, {"q", rational_json(law.q_side(k))}});
        tables["q_side_" + m] = q;
        json z = json::array();
        const std::int64_t step = model == MapKind::Quadrangulation ? 2 : 1;
        for (std::int64_t len = 2; len <= head + 1; len += step)
            z.push_back({{"m", len}, {"Z", rational_json(partition_function(law.model(), len))}});
        tables["partition_" + m] = z;
        if (model == MapKind::Quadrangulation) {
            json joint = json::array();
            for (std::int64_t k1 = 1; k1 <= 7; k1 += 2)
                for (std::int64_t k2 = 1; k2 <= 7; k2 += 2)
                    joint.push_back({{"k1", k1}, {"k2", k2}, {"q", rational_json(law.q_joint(k1, k2))}});
            tables["q_joint_quad"] = joint;
        }
    }
    return {{"schema_version", kSchemaVersion}, {"library_version", kLibraryVersion}, {"constants", constants},
            {"tables", tables}};
}

void write_file(const std::string& path, const std::string& text)
{
    const std::string tmp = path + ".part";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f)
            throw IoError("cannot open " + tmp + " for writing");
        f << text;
        f.flush();
        if (!f) {
            std::remove(tmp.c_str());
            throw IoError("write failed: " + tmp);
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw IoError("cannot move output into place: " + path);
    }
}

void emit_reference_tables(const std::string& path)
{
    write_file(path, reference_tables().dump(2) + "\n");
}

namespace {

json law_dump(const ExperimentConfig& c)
{
    const PeelingLaw law(MapModel::of(c.model));
    const auto mo = law_moments(law);
    json q = json::array();
    for (std::int64_t k = law.min_side_index(); k <= c.kmax; ++k)
        q.push_back({{"k", k}, {"q", rational_json(law.q_side(k))}});
    json exposed = json::array();
    for (std::size_t e = 0; e < mo.exposed_law.size(); ++e)
        if (mo.exposed_law[e] != 0)
            exposed.push_back({{"exposed", e}, {"p", rational_json(mo.exposed_law[e])}});
    return {{"model", std::string(model_name(c.model))},
            {"q_inner", rational_json(law.q_inner())},
            {"q_side", q},
            {"side_mass", rational_json(law.side_mass())},
            {"joint_mass", rational_json(law.joint_mass())},
            {"joint_orientations", law.joint_orientations()},
            {"exposed_mean", rational_json(mo.exposed_mean)},
            {"swallowed_mean", rational_json(mo.swallowed_mean)},
            {"eta", rational_json(mo.eta)},
            {"delta", rational_json(mo.delta)},
            {"rr_given_positive", rational_json(mo.rr_given_positive)},
            {"exposed_law", exposed}};
}

std::string outcomes_header()
{
    return "lambda,trial,censored,steps,T,B_before,overshoot,case,k1,k2,d_l,d_r,final_black\n";
}

void append_outcomes(std::ostringstream& csv, double lambda, const CrossingRun& run)
{
    for (std::size_t i = 0; i < run.trials.size(); ++i) {
        const auto& t = run.trials[i];
        const auto& o = t.outcome;
        csv << lambda << ',' << i << ',' << (t.censored ? 1 : 0) << ',' << t.steps << ',';
        if (t.censored)
            csv << ",,,censored,,,,,";
        else
            csv << o.T << ',' << o.B_before << ',' << o.overshoot << ',' << case_name(o.tag) << ','
                << optional_cell(o.k1) << ',' << optional_cell(o.k2) << ',' << optional_cell(o.d_l) << ','
                << optional_cell(o.d_r) << ',';
        csv << t.final_black << '\n';
    }
}

}  // namespace

ResultRecord run_experiment(const ExperimentConfig& c)
{
    const auto start = std::chrono::steady_clock::now();
    ResultRecord rec;
    json results;
    std::int64_t steps = 0;
    std::string csv_text;

    switch (c.command) {
    case Command::LawDump: results = law_dump(c); break;
    case Command::ReferenceTables: results = reference_tables(); break;
    case Command::Threshold: {
        const auto est = estimate_threshold(MapModel::of(c.model), c.tolerance, c.threshold_budget, c.seed, c.workers,
                                            c.guess ? *c.guess : NAN);
        const auto mo = law_moments(PeelingLaw(MapModel::of(c.model)));
        results = to_json(est);
        results["universal_formula_value"] = rational_json(universal_threshold(mo.eta, mo.delta));
        rec.inconclusive = !est.conclusive;
        steps = est.total_steps;
        break;
    }
    case Command::Crossing: {
        const KernelContext ctx(make_kernel(c.kernel, c.model));
        std::vector<double> bs{c.b};
        bs.insert(bs.end(), c.b_grid.begin(), c.b_grid.end());
        json estimates = json::array(), convergence = json::array();
        std::ostringstream csv;
        csv.precision(17);
        if (!c.emit_outcomes.empty())
            csv << outcomes_header();
        for (double lambda : c.lambdas) {
            const auto run = run_crossing_trials(ctx, lambda, c.a, c.b, c.trials, c.seed, c.workers, c.step_budget);
            steps += run.total_steps;
            for (double b : bs) {
                const auto est = summarize_crossing(ctx, run, lambda, c.a, b);
                estimates.push_back(to_json(est));
                convergence.push_back({{"lambda", lambda},
                                       {"b", b},
                                       {"deviation", std::fabs(est.p_completed - est.analytic)},
                                       {"ci", est.completed_ci},
                                       {"deviation_resolved", std::fabs(est.p_hat - est.analytic)},
                                       {"ci_resolved", est.ci_halfwidth},
                                       {"tie_rate", est.tie_rate}});
            }
            if (!c.emit_outcomes.empty())
                append_outcomes(csv, lambda, run);
        }
        results = {{"estimates", estimates}, {"convergence", convergence}};
        csv_text = csv.str();
        break;
    }
    case Command::LimitCheck: {
        const KernelContext ctx = c.p ? KernelContext(make_kernel(c.kernel, c.model), *c.p)
                                      : KernelContext(make_kernel(c.kernel, c.model));
        switch (c.check) {
        case LimitCheckKind::Positivity:
            results = to_json(positivity_check(ctx, c.branch, c.horizon, c.trials, c.seed, c.workers));
            break;
        case LimitCheckKind::Ladder: {
            const auto fit = ladder_epoch_exponent(ctx, c.branch, c.trials, c.horizon, c.seed, c.workers);
            results = to_json(fit);
            rec.inconclusive = !fit.conclusive;
            break;
        }
        case LimitCheckKind::SelfSimilarity:
            results = to_json(self_similarity_check(ctx, c.branch, c.lambda1, c.lambda2, c.time, c.trials, c.seed,
                                                    c.workers));
            break;
        case LimitCheckKind::Xi: results = to_json(xi_growth_check(ctx, c.horizons, c.trials, c.seed, c.workers)); break;
        }
        results["check"] = check_name(c.check);
        break;
    }
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rec.json = {{"schema_version", kSchemaVersion},
                {"library_version", kLibraryVersion},
                {"seed", c.seed},
                {"config", config_to_json(c)},
                {"results", results},
                {"steps", steps},
                {"inconclusive", rec.inconclusive},
                {"timing", {{"wall_seconds", wall}}}};

    bool csv_written = false;
    try {
        if (!c.emit_outcomes.empty()) {
            write_file(c.emit_outcomes, csv_text);
            csv_written = true;
        }
        if (!c.out.empty())
            write_file(c.out, rec.json.dump(2) + "\n");
    } catch (...) {
        if (csv_written)
            std::remove(c.emit_outcomes.c_str());
        throw;
    }
    return rec;
}

}  // namespace peel
