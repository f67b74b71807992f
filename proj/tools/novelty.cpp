// Command-line front end: synth, run, simulate, diagnose.

#include "novelty/config.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace novelty;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

/// Files written by the current command; removed again if the command fails.
class OutputSet {
public:
    explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

    std::ofstream open(const std::string& name) {
        fs::path p = dir_ / name;
        written_.push_back(p);
        std::ofstream out(p, std::ios::binary);
        if (!out) throw Error("cannot write '" + p.string() + "'");
        return out;
    }

    void commit() { written_.clear(); }

    ~OutputSet() {
        std::error_code ec;
        for (const auto& p : written_) fs::remove(p, ec);
    }

private:
    fs::path dir_;
    std::vector<fs::path> written_;
};

std::string fmt(double v) { return detail::format_double(v); }

std::string file_token(std::string s) {
    std::erase(s, ':');
    return s;
}

LabeledDataset load_data(const RunConfig& rc) {
    if (rc.data_csv) return load_csv(rc.data_csv->string());
    return generate_synthetic(rc.synth);
}

void write_scatter(OutputSet& out, const std::vector<ScatterRow>& rows) {
    auto f = out.open("theta_scatter.csv");
    f << "theta_set,theta_class,category\n";
    for (const auto& r : rows) f << fmt(r.theta_set) << ',' << fmt(r.theta_class) << ',' << category_name(r.category) << '\n';
}

int cmd_synth(const fs::path& cfg_path) {
    const RunConfig rc = load_run_config(cfg_path);
    const auto ds = generate_synthetic(rc.synth);
    if (rc.synth_output.has_parent_path()) fs::create_directories(rc.synth_output.parent_path());
    save_csv(ds, rc.synth_output.string());
    log::info("wrote " + std::to_string(ds.size()) + " rows to " + rc.synth_output.string());
    return 0;
}

int cmd_run(const fs::path& cfg_path) {
    const RunConfig rc = load_run_config(cfg_path);
    const auto ds = load_data(rc);
    validate_for(rc.cv, ds);

    const EvalReport report = run_cross_validation(ds, rc.cv);

    fs::create_directories(rc.output_dir);
    OutputSet out(rc.output_dir);
    {
        auto f = out.open("summary.csv");
        f << "method,representation,s,fold,repeat,auc,eer\n";
        for (const auto& r : report.rows)
            f << r.method << ',' << r.representation << ',' << r.set_size << ',' << r.fold << ',' << r.repeat << ','
              << fmt(r.auc) << ',' << fmt(r.eer) << '\n';
    }
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const auto& r = report.rows[i];
        auto f = out.open("roc_" + r.method + "-" + file_token(r.representation) + "_" + std::to_string(r.set_size) +
                          "_" + std::to_string(r.fold) + ".csv");
        f << "threshold,fpr,tpr\n";
        for (const auto& p : report.curves[i].points) f << fmt(p.threshold) << ',' << fmt(p.fpr) << ',' << fmt(p.tpr) << '\n';
    }
    if (rc.cv.diagnostics) {
        write_scatter(out, report.scatter);
        auto f = out.open("diagnostics.csv");
        f << "repeat,fold,r1_auc,r2_ks,mu_novel,mu_known,gap\n";
        for (const auto& d : report.diagnostics)
            f << d.repeat << ',' << d.fold << ',' << fmt(d.r1_auc) << ',' << fmt(d.r2_ks) << ',' << fmt(d.mu_novel)
              << ',' << fmt(d.mu_known) << ',' << fmt(d.mu_novel - d.mu_known) << '\n';
    }
    out.commit();

    std::printf("%-22s %-14s %4s %4s %17s %17s\n", "method", "representation", "s", "n", "AUC", "EER");
    for (const auto& a : report.aggregate())
        std::printf("%-22s %-14s %4zu %4zu %8.4f +- %.4f %8.4f +- %.4f\n", a.method.c_str(), a.representation.c_str(),
                    a.set_size, a.count, a.auc_mean, a.auc_std, a.eer_mean, a.eer_std);
    std::printf("elapsed %.1f s\n", report.seconds);
    return 0;
}

int cmd_simulate(const fs::path& cfg_path) {
    const RunConfig rc = load_run_config(cfg_path);
    fs::create_directories(rc.output_dir);
    OutputSet out(rc.output_dir);
    auto f = out.open("chernoff_report.csv");
    f << "L,delta,mu_novel,mu_known,bound_upper,bound_lower,empirical_upper,empirical_lower,midpoint_error\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int L : rc.sim_sizes) {
        const auto rates = VoteRates::uniform(static_cast<std::size_t>(L), rc.sim_p, rc.sim_q);
        const auto sim = simulate_vote_distribution(rates, rc.sim_trials, derive_seed(rc.cv.seed, {static_cast<std::uint64_t>(L)}));
        std::vector<double> deltas = rc.sim_deltas;
        if (deltas.empty()) deltas.push_back((sim.mu_novel - sim.mu_known) / (sim.mu_novel + sim.mu_known));
        for (double delta : deltas) {
            const bool valid = delta > 0.0 && delta < 1.0;
            const double upper = valid && sim.mu_known > 0.0 ? chernoff_upper_bounds(sim.mu_known, delta).upper_tail : nan;
            const double lower = valid ? chernoff_upper_bounds(sim.mu_novel, delta).lower_tail : nan;
            f << L << ',' << fmt(delta) << ',' << fmt(sim.mu_novel) << ',' << fmt(sim.mu_known) << ',' << fmt(upper)
              << ',' << fmt(lower) << ',' << fmt(tail_above(sim.known_counts, (1.0 + delta) * sim.mu_known)) << ','
              << fmt(tail_below(sim.novel_counts, (1.0 - delta) * sim.mu_novel)) << ',' << fmt(sim.total_error()) << '\n';
        }
    }
    f.close();
    out.commit();
    return 0;
}

int cmd_diagnose(const fs::path& cfg_path) {
    const RunConfig rc = load_run_config(cfg_path);
    const auto ds = load_data(rc);
    validate_for(rc.cv, ds);
    const auto d = diagnose_fold(ds, rc.cv, 0, rc.diagnose_fold);

    fs::create_directories(rc.output_dir);
    OutputSet out(rc.output_dir);
    write_scatter(out, d.scatter);
    {
        auto f = out.open("votes.csv");
        f << "partition,p_hat,q_hat\n";
        for (std::size_t l = 0; l < d.p_hat.size(); ++l) f << l << ',' << fmt(d.p_hat[l]) << ',' << fmt(d.q_hat[l]) << '\n';
    }
    out.commit();
    std::printf("R1 auc (theta_S, known vs truly novel): %.4f\n", d.r1_auc);
    std::printf("R2 KS (presumed vs truly novel):        %.4f\n", d.r2_ks);
    std::printf("mu_novel %.3f  mu_known %.3f  gap %.3f\n", d.mu_novel, d.mu_known, d.gap());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ensemble novelty detection for sets of examples from missing classes"};
    app.require_subcommand(1);
    std::string cfg;
    struct Command {
        const char* name;
        const char* help;
        int (*fn)(const fs::path&);
    };
    const Command commands[] = {
        {"synth", "generate a synthetic dataset CSV", cmd_synth},
        {"run", "cross-validate every enabled method and write reports", cmd_run},
        {"simulate", "simulate independent votes and compare with Chernoff bounds", cmd_simulate},
        {"diagnose", "check the score-distribution requirements on one fold", cmd_diagnose},
    };
    for (const auto& c : commands) app.add_subcommand(c.name, c.help)->add_option("config", cfg, "config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    for (const auto& c : commands) {
        if (!app.got_subcommand(c.name)) continue;
        try {
            return c.fn(cfg);
        } catch (const ConfigError& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return kExitConfig;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kExitRuntime;
        }
    }
    return kExitConfig;
}
