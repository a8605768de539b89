#pragma once

// TOML run configuration: model choice and parameters, certification and
// solver settings, initial state, output paths, convergence ladders.

#include "poscert/benchmarks.hpp"
#include "poscert/certify.hpp"
#include "poscert/error.hpp"
#include "poscert/io/csv.hpp"
#include "poscert/models.hpp"
#include "poscert/solver.hpp"

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace poscert::io {

/// Unreadable or ill-formed configuration (as opposed to a model parameter
/// that parses but violates a constraint, which is a ParameterError).
class ConfigError : public StructuralError {
public:
    using StructuralError::StructuralError;
    const char* kind() const noexcept override { return "config"; }
};

/// Initial profile on a grid, x measured from the grid's left edge at cell centres.
struct Profile {
    std::string shape;  // "exp", "bump", "step"
    double amplitude = 1.0;
    double rate = 1.0;    // exp: amplitude * exp(-x / rate)
    double center = 0.0;  // bump: amplitude * exp(-((x - center) / width)^2)
    double width = 1.0;   // step: amplitude on [center, center + width)
};

using InitialValue = std::variant<double, std::vector<double>, Profile>;

struct OutputConfig {
    std::filesystem::path dir = ".";
    std::string trajectory = "trajectory.csv";
    std::string metadata = "run.json";
    std::string report = "certification.json";
    std::string convergence = "convergence.csv";
    std::string plot;  // empty: no plot
    CsvColumns columns = CsvColumns::state;
};

struct ConvergenceConfig {
    std::string benchmark;
    std::vector<std::size_t> ladder;
    bench::LadderOptions options;
};

struct RunConfig {
    std::string model;
    std::size_t n_cells = 100;
    models::EpidemicParams epidemic;
    models::PredatorPreyParams predator;
    models::OncologyParams oncology;
    models::OncologyDomain domain;
    models::ScalarSystemParams scalar;

    CertifyConfig certify;
    /// Certification radius; unset means 2 ||y0||.
    std::optional<double> m;
    SolverConfig solver;
    std::map<std::string, InitialValue> initial;
    OutputConfig output;
    std::optional<ConvergenceConfig> convergence;
    std::filesystem::path base_dir = ".";
};

namespace detail {

inline void allow_keys(const toml::table& t, std::string_view where, std::initializer_list<std::string_view> keys) {
    for (const auto& [k, v] : t) {
        bool ok = false;
        for (auto a : keys) ok = ok || k.str() == a;
        if (!ok) throw ConfigError("config: unknown key '" + std::string(k.str()) + "' in [" + std::string(where) + "]");
    }
}

inline std::string where(std::string_view table, std::string_view key) {
    return std::string(table) + "." + std::string(key);
}

inline std::optional<double> get_number(const toml::table& t, std::string_view table, std::string_view key) {
    const auto* n = t.get(key);
    if (!n) return std::nullopt;
    if (auto v = n->value<double>()) return *v;
    throw ConfigError("config: " + where(table, key) + " must be a number");
}

inline void read_number(const toml::table& t, std::string_view table, std::string_view key, double& out) {
    if (auto v = get_number(t, table, key)) out = *v;
}

inline void read_numbers(const toml::table& t, std::string_view table,
                         std::initializer_list<std::pair<std::string_view, double*>> fields) {
    for (auto [key, dst] : fields) read_number(t, table, key, *dst);
}

template <class Int>
void read_count(const toml::table& t, std::string_view table, std::string_view key, Int& out) {
    const auto* n = t.get(key);
    if (!n) return;
    auto v = n->value<std::int64_t>();
    if (!v || *v < 0) throw ConfigError("config: " + where(table, key) + " must be a nonnegative integer");
    out = static_cast<Int>(*v);
}

inline void read_bool(const toml::table& t, std::string_view table, std::string_view key, bool& out) {
    const auto* n = t.get(key);
    if (!n) return;
    auto v = n->value<bool>();
    if (!v) throw ConfigError("config: " + where(table, key) + " must be true or false");
    out = *v;
}

inline std::optional<std::string> get_string(const toml::table& t, std::string_view table, std::string_view key) {
    const auto* n = t.get(key);
    if (!n) return std::nullopt;
    auto v = n->value<std::string>();
    if (!v) throw ConfigError("config: " + where(table, key) + " must be a string");
    return *v;
}

inline std::vector<double> number_array(const toml::node& n, const std::string& name) {
    const auto* arr = n.as_array();
    if (!arr) throw ConfigError("config: " + name + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : *arr) {
        auto v = e.value<double>();
        if (!v) throw ConfigError("config: " + name + " must contain only numbers");
        out.push_back(*v);
    }
    return out;
}

inline std::vector<double> read_csv_values(const std::filesystem::path& file, const std::string& name) {
    std::ifstream in(file);
    if (!in) throw ConfigError("config: " + name + ": cannot open '" + file.string() + "'");
    try {
        return read_value_column(in);
    } catch (const StructuralError& e) {
        throw ConfigError("config: " + name + ": " + e.what());
    }
}

/// A tabulated rate: a number, an inline array, or a CSV file path.
inline void read_rate(const toml::table& t, std::string_view table, std::string_view key,
                      const std::filesystem::path& base, std::vector<double>& out) {
    const auto* n = t.get(key);
    if (!n) return;
    const auto name = where(table, key);
    if (auto v = n->value<double>()) {
        out = {*v};
    } else if (n->is_array()) {
        out = number_array(*n, name);
    } else if (auto s = n->value<std::string>()) {
        out = read_csv_values(base / *s, name);
    } else {
        throw ConfigError("config: " + name + " must be a number, an array or a CSV path");
    }
}

template <std::size_t N>
void read_fixed(const toml::table& t, std::string_view table, std::string_view key, std::array<double, N>& out) {
    const auto* n = t.get(key);
    if (!n) return;
    const auto v = number_array(*n, where(table, key));
    if (v.size() != N)
        throw ConfigError("config: " + where(table, key) + " needs " + std::to_string(N) + " entries");
    std::copy(v.begin(), v.end(), out.begin());
}

inline const toml::table* subtable(const toml::table& root, std::string_view key) {
    const auto* n = root.get(key);
    if (!n) return nullptr;
    if (!n->is_table()) throw ConfigError("config: '" + std::string(key) + "' must be a table");
    return n->as_table();
}

inline void parse_epidemic(const toml::table& t, RunConfig& rc) {
    allow_keys(t, "epidemic",
               {"n_cells", "gamma", "mu0", "alpha", "beta", "nu", "kappa", "i_max", "mu", "phi", "phi_decay",
                "allow_degenerate"});
    auto& p = rc.epidemic;
    read_count(t, "epidemic", "n_cells", rc.n_cells);
    read_numbers(t, "epidemic",
                 {{"gamma", &p.gamma}, {"mu0", &p.mu0}, {"alpha", &p.alpha}, {"beta", &p.beta}, {"nu", &p.nu},
                  {"kappa", &p.kappa}, {"i_max", &p.i_max}, {"phi_decay", &p.phi_decay}});
    read_rate(t, "epidemic", "mu", rc.base_dir, p.mu);
    read_rate(t, "epidemic", "phi", rc.base_dir, p.phi);
    read_bool(t, "epidemic", "allow_degenerate", p.allow_degenerate);
}

inline void parse_predator(const toml::table& t, RunConfig& rc) {
    allow_keys(t, "predator_prey", {"n_cells", "alpha", "delta", "a_max", "mu0", "mu", "gamma", "beta"});
    auto& p = rc.predator;
    read_count(t, "predator_prey", "n_cells", rc.n_cells);
    read_numbers(t, "predator_prey", {{"alpha", &p.alpha}, {"delta", &p.delta}, {"a_max", &p.a_max}, {"mu0", &p.mu0}});
    read_rate(t, "predator_prey", "mu", rc.base_dir, p.mu);
    read_rate(t, "predator_prey", "gamma", rc.base_dir, p.gamma_pred);
    read_rate(t, "predator_prey", "beta", rc.base_dir, p.beta);
}

inline void parse_oncology(const toml::table& t, RunConfig& rc) {
    allow_keys(t, "oncology",
               {"nx", "ny", "lx", "ly", "d", "a", "k", "alpha12", "alpha21", "kappa13", "kappa23", "control"});
    auto& p = rc.oncology;
    auto& dom = rc.domain;
    read_count(t, "oncology", "nx", dom.nx);
    read_count(t, "oncology", "ny", dom.ny);
    read_number(t, "oncology", "lx", dom.lx);
    read_number(t, "oncology", "ly", dom.ly);
    read_fixed(t, "oncology", "d", p.d);
    read_fixed(t, "oncology", "a", p.a);
    read_fixed(t, "oncology", "k", p.k);
    read_numbers(t, "oncology",
                 {{"alpha12", &p.alpha12}, {"alpha21", &p.alpha21}, {"kappa13", &p.kappa13}, {"kappa23", &p.kappa23}});
    if (const auto* c = subtable(t, "control")) {
        allow_keys(*c, "oncology.control", {"times", "values"});
        if (const auto* n = c->get("times")) p.u.times = number_array(*n, "oncology.control.times");
        p.u.values.clear();
        if (const auto* n = c->get("values")) {
            const auto* arr = n->as_array();
            if (!arr) throw ConfigError("config: oncology.control.values must be an array");
            for (const auto& e : *arr) {
                if (auto v = e.value<double>())
                    p.u.values.push_back({*v});
                else if (e.is_array())
                    p.u.values.push_back(number_array(e, "oncology.control.values"));
                else if (auto s = e.value<std::string>())
                    p.u.values.push_back(read_csv_values(rc.base_dir / *s, "oncology.control.values"));
                else
                    throw ConfigError("config: oncology.control.values entries must be numbers, arrays or CSV paths");
            }
        }
        if (p.u.times.empty() && p.u.values.size() == 1) p.u.times = {0.0};
    }
}

inline void parse_scalar(const toml::table& t, RunConfig& rc) {
    allow_keys(t, "scalar_system", {"generator", "constant", "linear", "quadratic"});
    auto& p = rc.scalar;
    if (const auto* n = t.get("generator")) {
        const auto* rows = n->as_array();
        if (!rows) throw ConfigError("config: scalar_system.generator must be an array of rows");
        p.generator.clear();
        for (const auto& r : *rows) p.generator.push_back(number_array(r, "scalar_system.generator"));
    }
    read_rate(t, "scalar_system", "constant", rc.base_dir, p.constant);
    read_rate(t, "scalar_system", "linear", rc.base_dir, p.linear);
    read_rate(t, "scalar_system", "quadratic", rc.base_dir, p.quadratic);
    std::size_t n = std::max({p.generator.size(), p.constant.size(), p.linear.size(), p.quadratic.size()});
    if (n == 0) throw ConfigError("config: scalar_system needs at least one of generator/constant/linear/quadratic");
    if (p.constant.empty()) p.constant.assign(n, 0.0);
    if (p.constant.size() == 1 && n > 1) p.constant.assign(n, p.constant[0]);
    if (p.constant.size() != n) throw ConfigError("config: scalar_system.constant has the wrong length");
}

inline void parse_certify(const toml::table& t, RunConfig& rc) {
    allow_keys(t, "certify", {"m", "samples", "seed", "max_pairs", "tolerance", "t_grid"});
    if (auto v = get_number(t, "certify", "m")) rc.m = *v;
    read_count(t, "certify", "samples", rc.certify.sample_count);
    read_count(t, "certify", "seed", rc.certify.seed);
    read_count(t, "certify", "max_pairs", rc.certify.max_pairs);
    read_number(t, "certify", "tolerance", rc.certify.tolerance);
    if (const auto* n = t.get("t_grid")) rc.certify.t_grid = number_array(*n, "certify.t_grid");
}

inline void parse_solver(const toml::table& t, RunConfig& rc) {
    allow_keys(t, "solver",
               {"horizon", "picard_tol", "max_picard_iters", "nodes_per_window", "window_cap", "blow_up_threshold",
                "recertify_factor", "certify_samples", "picard_start", "keep_node_states", "max_shift_retries",
                "short_window", "short_window_limit"});
    auto& s = rc.solver;
    read_number(t, "solver", "horizon", s.horizon);
    read_number(t, "solver", "picard_tol", s.picard_tol);
    read_count(t, "solver", "max_picard_iters", s.max_picard_iters);
    read_count(t, "solver", "nodes_per_window", s.quadrature_nodes_per_window);
    read_number(t, "solver", "window_cap", s.window_cap);
    read_number(t, "solver", "blow_up_threshold", s.blow_up_norm_threshold);
    read_number(t, "solver", "recertify_factor", s.recertify_factor);
    read_count(t, "solver", "certify_samples", s.certify_samples);
    read_bool(t, "solver", "keep_node_states", s.keep_node_states);
    read_count(t, "solver", "max_shift_retries", s.max_shift_retries);
    read_number(t, "solver", "short_window", s.short_window);
    read_count(t, "solver", "short_window_limit", s.short_window_limit);
    if (auto v = get_string(t, "solver", "picard_start")) {
        if (*v == "constant")
            s.picard_start = PicardStart::constant;
        else if (*v == "orbit")
            s.picard_start = PicardStart::semigroup_orbit;
        else
            throw ConfigError("config: solver.picard_start must be \"constant\" or \"orbit\"");
    }
}

inline void parse_output(const toml::table& t, RunConfig& rc) {
    allow_keys(t, "output", {"dir", "trajectory", "metadata", "report", "convergence", "plot", "columns"});
    auto& o = rc.output;
    if (auto v = get_string(t, "output", "dir")) o.dir = rc.base_dir / *v;
    const std::pair<std::string_view, std::string*> names[] = {{"trajectory", &o.trajectory},
                                                                {"metadata", &o.metadata},
                                                                {"report", &o.report},
                                                                {"convergence", &o.convergence},
                                                                {"plot", &o.plot}};
    for (auto [key, dst] : names)
        if (auto v = get_string(t, "output", key)) *dst = *v;
    if (auto v = get_string(t, "output", "columns")) {
        if (*v == "state")
            o.columns = CsvColumns::state;
        else if (*v == "norms")
            o.columns = CsvColumns::component_norms;
        else
            throw ConfigError("config: output.columns must be \"state\" or \"norms\"");
    }
}

inline void parse_initial(const toml::table& t, RunConfig& rc) {
    for (const auto& [k, node] : t) {
        const std::string key(k.str());
        const auto name = where("initial", key);
        if (auto v = node.value<double>()) {
            rc.initial[key] = *v;
        } else if (node.is_array()) {
            rc.initial[key] = number_array(node, name);
        } else if (auto s = node.value<std::string>()) {
            rc.initial[key] = read_csv_values(rc.base_dir / *s, name);
        } else if (const auto* pt = node.as_table()) {
            allow_keys(*pt, name, {"shape", "amplitude", "rate", "center", "width"});
            Profile p;
            p.shape = get_string(*pt, name, "shape").value_or("");
            if (p.shape != "exp" && p.shape != "bump" && p.shape != "step")
                throw ConfigError("config: " + name + ".shape must be \"exp\", \"bump\" or \"step\"");
            read_number(*pt, name, "amplitude", p.amplitude);
            read_number(*pt, name, "rate", p.rate);
            read_number(*pt, name, "center", p.center);
            read_number(*pt, name, "width", p.width);
            rc.initial[key] = p;
        } else {
            throw ConfigError("config: " + name + " must be a number, array, CSV path or profile table");
        }
    }
}

inline void parse_convergence(const toml::table& t, RunConfig& rc) {
    allow_keys(t, "convergence", {"benchmark", "ladder", "horizon", "nodes_per_cell", "oncology_cells"});
    ConvergenceConfig c;
    c.benchmark = get_string(t, "convergence", "benchmark").value_or("");
    if (const auto* n = t.get("ladder")) {
        for (double v : number_array(*n, "convergence.ladder")) {
            if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError("config: convergence.ladder entries are positive integers");
            c.ladder.push_back(static_cast<std::size_t>(v));
        }
    }
    read_number(t, "convergence", "horizon", c.options.horizon);
    read_number(t, "convergence", "nodes_per_cell", c.options.nodes_per_cell);
    read_count(t, "convergence", "oncology_cells", c.options.oncology_cells);
    rc.convergence = std::move(c);
}

}  // namespace detail

inline RunConfig parse_config(const toml::table& root, const std::filesystem::path& base_dir = ".") {
    RunConfig rc;
    rc.base_dir = base_dir;
    rc.output.dir = base_dir;
    detail::allow_keys(root, "root",
                       {"model", "epidemic", "predator_prey", "oncology", "scalar_system", "certify", "solver",
                        "output", "initial", "convergence"});
    rc.model = detail::get_string(root, "root", "model").value_or("");
    using Parser = void (*)(const toml::table&, RunConfig&);
    const std::pair<std::string_view, Parser> sections[] = {
        {"epidemic", detail::parse_epidemic},      {"predator_prey", detail::parse_predator},
        {"oncology", detail::parse_oncology},      {"scalar_system", detail::parse_scalar},
        {"certify", detail::parse_certify},        {"solver", detail::parse_solver},
        {"output", detail::parse_output},          {"initial", detail::parse_initial},
        {"convergence", detail::parse_convergence}};
    for (auto [name, parse] : sections)
        if (const auto* t = detail::subtable(root, name)) parse(*t, rc);
    if (rc.model.empty() && !rc.convergence)
        throw ConfigError("config: 'model' is required (epidemic, predator_prey, oncology or scalar_system)");
    if (!rc.model.empty() && rc.model != "epidemic" && rc.model != "predator_prey" && rc.model != "oncology" &&
        rc.model != "scalar_system")
        throw ConfigError("config: unknown model '" + rc.model + "'");
    if (rc.model == "scalar_system" && rc.scalar.constant.empty())
        throw ConfigError("config: model scalar_system needs a [scalar_system] table");
    return rc;
}

inline RunConfig parse_config_string(std::string_view text, const std::filesystem::path& base_dir = ".") {
    try {
        return parse_config(toml::parse(text), base_dir);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << "config: " << e.description() << " at line " << e.source().begin.line;
        throw ConfigError(os.str());
    }
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_string(ss.str(), path.parent_path().empty() ? "." : path.parent_path());
}

inline CauchyProblem build_problem(const RunConfig& rc) {
    CauchyProblem p;
    if (rc.model == "epidemic")
        p = models::build_epidemic(rc.epidemic, rc.n_cells);
    else if (rc.model == "predator_prey")
        p = models::build_predator_prey(rc.predator, rc.n_cells);
    else if (rc.model == "oncology")
        p = models::build_oncology(rc.oncology, rc.domain);
    else if (rc.model == "scalar_system")
        p = models::build_scalar_system(rc.scalar);
    else
        throw ConfigError("config: unknown model '" + rc.model + "'");
    // Sampling settings from the config; the model's time grid unless overridden.
    const auto t_grid = rc.certify.t_grid.size() == 1 && rc.certify.t_grid[0] == 0.0 ? p.certify.t_grid
                                                                                      : rc.certify.t_grid;
    p.certify = rc.certify;
    p.certify.t_grid = t_grid;
    return p;
}

namespace detail {

inline StateVector model_default_initial(const RunConfig& rc, const CauchyProblem& p) {
    const auto& s = p.space;
    StateVector y(s.dof(), 0.0);
    if (rc.model == "epidemic") {
        y[0] = 0.5;
        const double w = s.weights()[1];
        for (std::size_t j = 0; j < s.size(1); ++j) y[1 + j] = 0.5 * std::exp(-(static_cast<double>(j) + 0.5) * w / 0.5);
    } else if (rc.model == "predator_prey") {
        const double w = s.weights()[0];
        for (std::size_t j = 0; j < s.size(0); ++j) y[j] = (static_cast<double>(j) + 0.5) * w < 5.0 ? 0.3 : 0.0;
        y[s.offset(1)] = 0.5;
    } else if (rc.model == "oncology") {
        const double init[3] = {0.3, 0.6, 0.1};
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t j = 0; j < s.size(c); ++j) y[s.offset(c) + j] = init[c];
    }
    return y;
}

inline double profile_at(const Profile& p, double x) {
    if (p.shape == "exp") return p.amplitude * std::exp(-x / p.rate);
    if (p.shape == "bump") {
        const double z = (x - p.center) / p.width;
        return p.amplitude * std::exp(-z * z);
    }
    return (x >= p.center && x < p.center + p.width) ? p.amplitude : 0.0;
}

}  // namespace detail

/// Initial state: model defaults, overridden per component by [initial].
inline StateVector initial_state(const RunConfig& rc, const CauchyProblem& p) {
    auto y = detail::model_default_initial(rc, p);
    const auto& s = p.space;
    for (const auto& [label, value] : rc.initial) {
        std::optional<std::size_t> comp;
        for (std::size_t c = 0; c < s.component_count(); ++c)
            if (s.label(c) == label) comp = c;
        if (!comp) throw ConfigError("config: initial." + label + " names no component of the model");
        const std::size_t off = s.offset(*comp), len = s.size(*comp);
        if (const auto* v = std::get_if<double>(&value)) {
            std::fill_n(y.begin() + static_cast<std::ptrdiff_t>(off), len, *v);
        } else if (const auto* arr = std::get_if<std::vector<double>>(&value)) {
            if (arr->size() != len)
                throw ConfigError("config: initial." + label + " has " + std::to_string(arr->size()) +
                                  " values, the component has " + std::to_string(len));
            std::copy(arr->begin(), arr->end(), y.begin() + static_cast<std::ptrdiff_t>(off));
        } else {
            const auto& prof = std::get<Profile>(value);
            const auto& comp_v = s.component(*comp);
            if (!std::holds_alternative<GridComponent>(comp_v))
                throw ConfigError("config: initial." + label + ": profiles apply to grid components only");
            const auto& widths = std::get<GridComponent>(comp_v).widths;
            double left = 0.0;
            for (std::size_t j = 0; j < len; ++j) {
                y[off + j] = detail::profile_at(prof, left + 0.5 * widths[j]);
                left += widths[j];
            }
        }
    }
    return y;
}

/// Certification radius: configured m, else 2 ||y0|| (1 when y0 = 0).
inline double certification_radius(const RunConfig& rc, const CauchyProblem& p, const StateVector& y0) {
    if (rc.m) {
        if (!(*rc.m > 0.0)) throw ParameterError("m > 0", "certify.m = " + std::to_string(*rc.m));
        return *rc.m;
    }
    const double n = norm(p.space, y0);
    return n > 0.0 ? 2.0 * n : 1.0;
}

}  // namespace poscert::io
