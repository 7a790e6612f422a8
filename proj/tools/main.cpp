// softproj: experiment driver.

#include "softproj/experiment.hpp"
#include "softproj/kernels.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace softproj;

namespace {

struct Options {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out;
    int jobs = 0;
    std::vector<std::string> methods;
    std::vector<double> snr;
    int realizations = 0;
    std::string params;
};

experiment::ExperimentConfig resolve(const Options& o)
{
    experiment::ExperimentConfig c = o.config_path.empty() ? experiment::ExperimentConfig()
                                                           : experiment::load_config(o.config_path);
    if (o.seed_set) c.seed = o.seed;
    if (!o.out.empty()) c.output_dir = o.out;
    if (o.jobs > 0) c.jobs = o.jobs;
    if (!o.methods.empty()) c.methods = o.methods;
    if (!o.snr.empty()) c.snr_list = o.snr;
    if (o.realizations > 0) {
        c.validation_realizations = o.realizations;
        c.test_realizations = o.realizations;
        c.online.runs = o.realizations;
    }
    c.validate();
    fs::create_directories(c.output_dir);
    experiment::save_config(c, fs::path(c.output_dir) / "config.json");
    return c;
}

void note(const std::string& msg)
{
    std::cerr << "[softproj] " << msg << '\n';
}

int cmd_validate(const experiment::ExperimentConfig& c)
{
    const auto res = experiment::run_validation(c);
    const fs::path dir(c.output_dir);
    res.curve_table().save(dir / "validation_curve.csv");
    res.chosen_table().save(dir / "chosen.csv");
    for (const auto& ch : res.chosen) {
        note("snr " + csv::format_double(ch.snr) + " " + ch.method + ": " + csv::format_double(ch.parameter) +
             " (cost " + csv::format_double(ch.validation_cost) + ")");
    }
    return 0;
}

int cmd_test(const experiment::ExperimentConfig& c, const std::string& params)
{
    const fs::path dir(c.output_dir);
    std::vector<experiment::ChosenParameter> chosen;
    if (params.empty()) {
        note("no --params given; running validation first");
        const auto res = experiment::run_validation(c);
        res.curve_table().save(dir / "validation_curve.csv");
        res.chosen_table().save(dir / "chosen.csv");
        chosen = res.chosen;
    } else {
        chosen = experiment::read_chosen(params);
    }
    const auto result = experiment::run_test(c, chosen);
    result.table().save(dir / "test_results.csv");
    std::cout << result.table().str();
    return 0;
}

int cmd_eigencurves(const experiment::ExperimentConfig& c)
{
    double mismatch = 0.0;
    const csv::Table t = experiment::eigencurves(c.eigencurves, &mismatch);
    t.save(fs::path(c.output_dir) / "eigencurves.csv");
    note("max |formula - eigendecomposition| = " + csv::format_double(mismatch));
    if (!(mismatch <= 1e-9)) {
        std::cerr << "eigencurves: closed-form eigenvalues disagree with the assembled maps\n";
        return 1;
    }
    return 0;
}

int cmd_bound(const experiment::ExperimentConfig& c)
{
    const auto sweep = experiment::run_bound(c);
    const fs::path dir(c.output_dir);
    sweep.noisy.save(dir / "bound.csv");
    sweep.noise_free.save(dir / "bound_noise_free.csv");
    note("bound violations: " + std::to_string(sweep.violations) +
         (sweep.interior_minimum ? ", gamma has an interior minimum" : ", gamma is monotone on this grid"));
    return sweep.violations == 0 ? 0 : 1;
}

int cmd_online(const experiment::ExperimentConfig& c)
{
    const auto runs = static_cast<std::size_t>(std::max(1, c.online.runs));
    std::vector<experiment::OnlinePair> pairs(runs);
    kernels::parallel_for(runs, c.jobs, [&](std::size_t i) {
        pairs[i] = experiment::run_online(c, experiment::realization_seed(c.seed, experiment::Stage::online, 0, i));
    });
    const fs::path dir(c.output_dir);
    const long from = c.online.switch_step >= 0 ? c.online.switch_step : c.online.T_sim / 2;
    experiment::online_summary(pairs, from).save(dir / "online_summary.csv");
    pairs.front().adaptive.table().save(dir / "online_run_adaptive.csv");
    pairs.front().frozen.table().save(dir / "online_run_frozen.csv");
    pairs.front().adaptive.monitor_table().save(dir / "online_monitor.csv");
    std::size_t better = 0;
    for (const auto& p : pairs) {
        if (p.adaptive.cost_from(from) < p.frozen.cost_from(from)) ++better;
    }
    note("adaptive beats frozen in " + std::to_string(better) + " of " + std::to_string(runs) +
         " runs; final drift of run 0 = " + csv::format_double(pairs.front().adaptive.final_drift));
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Data-driven predictive control with soft projections"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--config", o.config_path, "JSON experiment config")->check(CLI::ExistingFile);
    app.add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) {
        o.seed = s;
        o.seed_set = true;
    }, "Master seed");
    app.add_option("--out", o.out, "Output directory");
    app.add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--method", o.methods, "Methods to run (deepc_l2, deepc_projected, soft_squared, soft_quadratic)")
        ->delimiter(',');
    app.add_option("--snr", o.snr, "SNR levels, e.g. 10,5,3")->delimiter(',');
    app.add_option("--realizations", o.realizations, "Override the realization counts")->check(CLI::PositiveNumber);

    auto* validate = app.add_subcommand("validate", "Parameter sweep on validation realizations");
    auto* test = app.add_subcommand("test", "Monte-Carlo test at the chosen parameters");
    test->add_option("--params", o.params, "chosen.csv from a validate run")->check(CLI::ExistingFile);
    auto* eig = app.add_subcommand("eigencurves", "Eigenvalues of the closed-form maps versus delta");
    auto* online = app.add_subcommand("online", "Adaptive versus frozen projector in closed loop");
    auto* bound = app.add_subcommand("bound", "Projector error bound versus the empirical gap");
    auto* dump = app.add_subcommand("config", "Write the resolved config and exit");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto start = std::chrono::steady_clock::now();
        const auto cfg = resolve(o);
        int rc = 0;
        if (*validate) rc = cmd_validate(cfg);
        else if (*test) rc = cmd_test(cfg, o.params);
        else if (*eig) rc = cmd_eigencurves(cfg);
        else if (*online) rc = cmd_online(cfg);
        else if (*bound) rc = cmd_bound(cfg);
        else if (*dump) rc = 0;
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        note("done in " + csv::format_double(std::round(secs * 100.0) / 100.0) + " s, outputs in " + cfg.output_dir);
        return rc;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
