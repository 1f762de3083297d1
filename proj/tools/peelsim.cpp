#include "peel/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using nlohmann::json;

template <class T>
void set_if(json& j, const char* key, const CLI::Option* opt, const T& value)
{
    if (opt->count() > 0)
        j[key] = value;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"peeling process simulator"};
    app.require_subcommand(1);
    app.fallthrough();

    std::uint64_t seed = 1;
    int workers = 0;
    std::string out, config_path;
    auto* o_seed = app.add_option("--seed", seed, "master seed");
    auto* o_workers = app.add_option("--workers", workers, "worker threads, 0 for hardware concurrency");
    auto* o_out = app.add_option("--out", out, "JSON record path");
    app.add_option("--config", config_path, "JSON config file; command line values override it");

    std::string model = "quad", kernel = "bond", check = "positivity", branch = "black", emit;
    std::int64_t kmax = 20, trials = 10000, step_budget = 0, horizon = 10000;
    std::int64_t trials_per_probe = 0, escape_height = 0, max_steps = 0, max_probes = 0;
    double tolerance = 0.01, guess = 0, a = 1, b = 1, p = 0, lambda1 = 100, lambda2 = 400, time = 1;
    std::vector<double> lambdas, b_grid;
    std::vector<std::int64_t> horizons;

    auto* law = app.add_subcommand("law", "exact peeling law");
    auto* dump = law->add_subcommand("dump", "print the q-law head and moments");
    law->require_subcommand(1);
    law->fallthrough();
    auto* d_model = dump->add_option("--model", model, "tri or quad");
    auto* d_kmax = dump->add_option("--kmax", kmax, "last side index");

    auto* thr = app.add_subcommand("threshold", "bracket the site percolation threshold");
    auto* t_model = thr->add_option("--model", model, "tri or quad");
    auto* t_tol = thr->add_option("--tolerance", tolerance, "bracket width");
    auto* t_tpp = thr->add_option("--trials-per-probe", trials_per_probe);
    auto* t_h = thr->add_option("--escape-height", escape_height);
    auto* t_ms = thr->add_option("--max-steps", max_steps);
    auto* t_mp = thr->add_option("--max-probes", max_probes);
    auto* t_guess = thr->add_option("--guess", guess, "centre of the baseline probe");

    auto* cr = app.add_subcommand("crossing", "boundary crossing probabilities");
    auto* c_kernel = cr->add_option("--kernel", kernel, "bond, face or site");
    auto* c_model = cr->add_option("--model", model, "tri or quad");
    auto* c_a = cr->add_option("--a", a);
    auto* c_b = cr->add_option("--b", b);
    auto* c_bgrid = cr->add_option("--b-grid", b_grid, "extra b values on the same trials");
    auto* c_lambdas = cr->add_option("--lambda", lambdas, "scaling parameters");
    auto* c_trials = cr->add_option("--trials", trials);
    auto* c_budget = cr->add_option("--step-budget", step_budget);
    auto* c_emit = cr->add_option("--emit-outcomes", emit, "CSV of per-trial outcomes");

    auto* lc = app.add_subcommand("limit-check", "stable limit diagnostics");
    auto* l_check = lc->add_option("--check", check, "positivity, ladder, selfsim or xi")
                        ->check(CLI::IsMember({"positivity", "ladder", "selfsim", "xi"}));
    auto* l_kernel = lc->add_option("--kernel", kernel);
    auto* l_model = lc->add_option("--model", model);
    auto* l_branch = lc->add_option("--branch", branch, "black or free");
    auto* l_p = lc->add_option("--p", p, "colour probability");
    auto* l_trials = lc->add_option("--trials", trials);
    auto* l_h = lc->add_option("--horizon", horizon);
    auto* l_hs = lc->add_option("--horizons", horizons);
    auto* l_l1 = lc->add_option("--lambda1", lambda1);
    auto* l_l2 = lc->add_option("--lambda2", lambda2);
    auto* l_t = lc->add_option("--time", time);

    auto* ref = app.add_subcommand("reference-tables", "exact constants and tables");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    json cfg = json::object();
    if (!config_path.empty()) {
        std::ifstream f(config_path);
        if (!f) {
            std::cerr << "error: cannot read " << config_path << "\n";
            return 4;
        }
        try {
            cfg = json::parse(f);
        } catch (const json::exception& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 2;
        }
    }
    set_if(cfg, "seed", o_seed, seed);
    set_if(cfg, "workers", o_workers, workers);
    set_if(cfg, "out", o_out, out);

    if (law->parsed()) {
        cfg["command"] = "law";
        set_if(cfg, "model", d_model, model);
        set_if(cfg, "kmax", d_kmax, kmax);
    } else if (thr->parsed()) {
        cfg["command"] = "threshold";
        set_if(cfg, "model", t_model, model);
        set_if(cfg, "tolerance", t_tol, tolerance);
        set_if(cfg, "trials_per_probe", t_tpp, trials_per_probe);
        set_if(cfg, "escape_height", t_h, escape_height);
        set_if(cfg, "max_steps", t_ms, max_steps);
        set_if(cfg, "max_probes", t_mp, max_probes);
        set_if(cfg, "guess", t_guess, guess);
    } else if (cr->parsed()) {
        cfg["command"] = "crossing";
        set_if(cfg, "kernel", c_kernel, kernel);
        set_if(cfg, "model", c_model, model);
        set_if(cfg, "a", c_a, a);
        set_if(cfg, "b", c_b, b);
        set_if(cfg, "b_grid", c_bgrid, b_grid);
        set_if(cfg, "lambdas", c_lambdas, lambdas);
        set_if(cfg, "trials", c_trials, trials);
        set_if(cfg, "step_budget", c_budget, step_budget);
        set_if(cfg, "emit_outcomes", c_emit, emit);
    } else if (lc->parsed()) {
        cfg["command"] = "limit-check";
        set_if(cfg, "check", l_check, check);
        set_if(cfg, "kernel", l_kernel, kernel);
        set_if(cfg, "model", l_model, model);
        set_if(cfg, "branch", l_branch, branch);
        set_if(cfg, "p", l_p, p);
        set_if(cfg, "trials", l_trials, trials);
        set_if(cfg, "horizon", l_h, horizon);
        set_if(cfg, "horizons", l_hs, horizons);
        set_if(cfg, "lambda1", l_l1, lambda1);
        set_if(cfg, "lambda2", l_l2, lambda2);
        set_if(cfg, "time", l_t, time);
    } else if (ref->parsed()) {
        cfg["command"] = "reference-tables";
    }

    try {
        const auto config = peel::parse_config(cfg);
        const auto record = peel::run_experiment(config);
        if (config.out.empty())
            std::cout << record.json.dump(2) << "\n";
        return record.inconclusive ? 3 : 0;
    } catch (const peel::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const peel::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
