// poscert: certify quasi-positivity, simulate, run refinement studies, plot.
//
// Exit codes
//   0  success
//   1  usage, config or parameter error; malformed input file
//   2  certify: the nonlinearity cannot be made quasi-positive (boundary violation)
//   3  simulate: blow-up flagged (partial outputs are still written)
//   4  simulate: solver error (structured error in the metadata JSON)
//      convergence: error increased between the last two rungs

#include "poscert/benchmarks.hpp"
#include "poscert/io/config.hpp"
#include "poscert/io/csv.hpp"
#include "poscert/io/json.hpp"
#include "poscert/io/svg.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace poscert;

namespace {

enum Exit : int { ok = 0, usage = 1, uncertifiable = 2, blow_up = 3, solver_error = 4 };

struct Globals {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

class Log {
public:
    explicit Log(bool quiet) : quiet_(quiet) {}
    template <class... Args>
    void info(const Args&... args) const {
        if (quiet_) return;
        (std::cout << ... << args) << '\n';
    }

private:
    bool quiet_;
};

void fail(const std::string& msg) { std::cerr << "poscert: " << msg << '\n'; }

io::RunConfig load(const Globals& g) {
    if (g.config.empty()) throw io::ConfigError("--config is required");
    auto rc = io::load_config(g.config);
    if (!g.out.empty()) rc.output.dir = g.out;
    if (g.seed) rc.certify.seed = *g.seed;
    return rc;
}

fs::path output_path(const io::RunConfig& rc, const std::string& name) {
    fs::create_directories(rc.output.dir);
    return rc.output.dir / name;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw StructuralError("cannot write '" + path.string() + "'");
    os << text;
}

void write_json(const fs::path& path, const io::Json& j) { write_text(path, j.dump(2) + "\n"); }

int cmd_certify(const Globals& g) {
    const Log log(g.quiet);
    io::RunConfig rc;
    CauchyProblem p;
    StateVector y0;
    double m = 0.0;
    try {
        rc = load(g);
        p = io::build_problem(rc);
        y0 = io::initial_state(rc, p);
        m = io::certification_radius(rc, p, y0);
    } catch (const std::exception& e) {
        fail(e.what());
        return usage;
    }
    const auto report = quasi_positivity_report(p.f, p.space, m, p.certify);
    auto j = io::to_json(report);
    j["model"] = p.name;
    j["seed"] = p.certify.seed;
    try {
        const auto path = output_path(rc, rc.output.report);
        write_json(path, j);
        log.info("report: ", path.string());
    } catch (const std::exception& e) {
        fail(e.what());
        return usage;
    }
    if (!report.certified) {
        const auto& v = *report.worst_violation;
        fail("not quasi-positive: component " + p.space.coordinate_labels()[v.component] + " has f = " +
             io::format_double(v.value) + " < 0 on the cone boundary (t = " + io::format_double(v.time) + ")");
        return uncertifiable;
    }
    log.info(p.name, ": certified on the ball of radius ", io::format_double(m), "  lambda = ",
             io::format_double(report.lambda_hat), "  k = ", io::format_double(report.k_hat));
    return ok;
}

int cmd_simulate(const Globals& g) {
    const Log log(g.quiet);
    io::RunConfig rc;
    CauchyProblem p;
    StateVector y0;
    try {
        rc = load(g);
        p = io::build_problem(rc);
        y0 = io::initial_state(rc, p);
        require_finite(y0, "initial state");
        if (!in_cone(p.space, y0)) throw DomainError("initial state has negative entries");
        if (!(rc.solver.horizon >= 0.0)) throw DomainError("solver.horizon must be nonnegative");
    } catch (const std::exception& e) {
        fail(e.what());
        return usage;
    }

    fs::path meta_path;
    try {
        meta_path = output_path(rc, rc.output.metadata);
    } catch (const std::exception& e) {
        fail(e.what());
        return usage;
    }

    Trajectory tr;
    try {
        tr = solve(p, y0, rc.solver);
    } catch (const std::exception& e) {
        io::Json j;
        j["model"] = p.name;
        j["status"] = "error";
        j["error"] = io::error_json(e);
        try {
            write_json(meta_path, j);
        } catch (const std::exception& w) {
            fail(w.what());
        }
        fail(std::string("solver error: ") + e.what());
        return solver_error;
    }

    try {
        const auto csv_path = output_path(rc, rc.output.trajectory);
        {
            std::ofstream os(csv_path, std::ios::binary);
            if (!os) throw StructuralError("cannot write '" + csv_path.string() + "'");
            io::write_trajectory_csv(os, p.space, tr, rc.output.columns);
        }
        io::Json j{{"model", p.name},
                   {"status", tr.blow_up ? "blow_up" : "ok"},
                   {"horizon", rc.solver.horizon},
                   {"trajectory", rc.output.trajectory}};
        j.update(io::trajectory_metadata(p, tr));
        write_json(meta_path, j);
        if (!rc.output.plot.empty()) {
            std::ifstream in(csv_path);
            write_text(output_path(rc, rc.output.plot), io::render_svg(io::read_csv(in)));
        }
        log.info("trajectory: ", csv_path.string(), " (", tr.times.size(), " rows, ", tr.windows.size(),
                 " windows)");
        log.info("min component: ", io::format_double(tr.min_component_overall), " at t = ",
                 io::format_double(tr.min_component_time));
    } catch (const std::exception& e) {
        fail(e.what());
        return usage;
    }
    if (tr.blow_up) {
        fail("blow-up flagged near t = " + io::format_double(tr.blow_up->time_estimate) + " (" + tr.blow_up->reason +
             ")");
        return blow_up;
    }
    return ok;
}

std::vector<std::size_t> default_ladder(const std::string& name) {
    if (name == "epidemic_mass_balance") return {50, 100, 200, 400};
    if (name == "predator_reduction") return {75, 150, 300};
    return {1024, 4096, 16384};
}

int cmd_convergence(const Globals& g) {
    const Log log(g.quiet);
    io::RunConfig rc;
    try {
        rc = load(g);
        if (!rc.convergence) throw io::ConfigError("config has no [convergence] table");
        const auto& names = bench::benchmark_names();
        if (std::find(names.begin(), names.end(), rc.convergence->benchmark) == names.end())
            throw io::ConfigError("unknown benchmark '" + rc.convergence->benchmark +
                                  "' (expected epidemic_mass_balance, predator_reduction or oncology_homogeneous)");
    } catch (const std::exception& e) {
        fail(e.what());
        return usage;
    }
    const auto& cc = *rc.convergence;
    const auto ladder = cc.ladder.empty() ? default_ladder(cc.benchmark) : cc.ladder;

    // Rungs are independent; results are collected in ladder order.
    std::vector<std::future<bench::BenchmarkResult>> jobs;
    for (auto rung : ladder)
        jobs.push_back(std::async(std::launch::async, [&cc, rung] {
            auto r = bench::run_benchmark(cc.benchmark, rung, cc.options);
            r.trajectory = {};
            return r;
        }));
    std::vector<bench::BenchmarkResult> results;
    try {
        for (auto& j : jobs) results.push_back(j.get());
    } catch (const std::exception& e) {
        fail(std::string("benchmark failed: ") + e.what());
        return solver_error;
    }

    std::string csv = "resolution,nodes_per_window,error\n";
    for (const auto& r : results)
        csv += std::to_string(r.resolution) + "," + std::to_string(r.nodes_per_window) + "," +
               io::format_double(r.error) + "\n";
    try {
        const auto path = output_path(rc, rc.output.convergence);
        write_text(path, csv);
        log.info("convergence: ", path.string());
    } catch (const std::exception& e) {
        fail(e.what());
        return usage;
    }
    for (const auto& r : results)
        log.info(cc.benchmark, "  resolution ", r.resolution, "  nodes/window ", r.nodes_per_window, "  error ",
                 io::format_double(r.error));
    if (results.size() >= 2 && results.back().error > results[results.size() - 2].error) {
        fail("error increased on the final rung");
        return solver_error;
    }
    return ok;
}

int cmd_plot(const Globals& g, const std::string& input, std::string output) {
    const Log log(g.quiet);
    try {
        std::ifstream in(input);
        if (!in) throw StructuralError("cannot open '" + input + "'");
        const auto table = io::read_csv(in);
        if (output.empty()) output = fs::path(input).replace_extension(".svg").filename().string();
        fs::path out = output;
        if (!g.out.empty() && out.is_relative()) {
            fs::create_directories(g.out);
            out = fs::path(g.out) / out;
        }
        write_text(out, io::render_svg(table));
        log.info("plot: ", out.string());
    } catch (const std::exception& e) {
        fail(e.what());
        return usage;
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Positivity-certified simulation of semilinear Cauchy problems"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config, "TOML run configuration");
    app.add_option("--out", g.out, "output directory (overrides [output].dir)");
    app.add_option("--seed", g.seed, "sampling seed (overrides [certify].seed)");
    app.add_flag("--quiet", g.quiet, "only report errors");

    auto* certify = app.add_subcommand("certify", "estimate lambda_m and k_m, report quasi-positivity");
    auto* simulate = app.add_subcommand("simulate", "solve to the horizon, write CSV and metadata");
    auto* convergence = app.add_subcommand("convergence", "refinement ladder of a reduction benchmark");
    auto* plot = app.add_subcommand("plot", "render a trajectory CSV as SVG");
    std::string plot_in, plot_out;
    plot->add_option("csv", plot_in, "trajectory CSV")->required();
    plot->add_option("svg", plot_out, "output SVG (default: CSV name with .svg)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }
    if (certify->parsed()) return cmd_certify(g);
    if (simulate->parsed()) return cmd_simulate(g);
    if (convergence->parsed()) return cmd_convergence(g);
    if (plot->parsed()) return cmd_plot(g, plot_in, plot_out);
    return usage;
}
