#include "oulab/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <openssl/evp.h>

#include "oulab/evolution.hpp"
#include "oulab/mehler.hpp"
#include "oulab/trotter.hpp"

namespace oulab::pipeline {
namespace {

[[noreturn]] void config_fail(const std::string& field, const std::string& what) {
    throw ConfigError(field + ": " + what);
}

const json& require(const json& j, const std::string& key, const std::string& field) {
    if (!j.is_object() || !j.contains(key)) config_fail(field + "." + key, "missing");
    return j.at(key);
}

double as_number(const json& j, const std::string& field) {
    if (!j.is_number()) config_fail(field, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) config_fail(field, "must be finite");
    return v;
}

double number_or(const json& j, const std::string& key, const std::string& field, double fallback) {
    return j.contains(key) ? as_number(j.at(key), field + "." + key) : fallback;
}

int int_or(const json& j, const std::string& key, const std::string& field, int fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer()) config_fail(field + "." + key, "expected an integer");
    return v.get<int>();
}

bool bool_or(const json& j, const std::string& key, const std::string& field, bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_boolean()) config_fail(field + "." + key, "expected true or false");
    return j.at(key).get<bool>();
}

std::string string_or(const json& j, const std::string& key, const std::string& field,
                      const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_string()) config_fail(field + "." + key, "expected a string");
    return j.at(key).get<std::string>();
}

std::vector<double> split_numbers(const std::string& text, char sep, const std::string& field) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            config_fail(field, "cannot parse '" + item + "' as a number");
        }
    }
    return out;
}

/// A number, an array of numbers, or a comma-separated string.
std::vector<double> number_list(const json& j, const std::string& field) {
    if (j.is_number()) return {as_number(j, field)};
    if (j.is_string()) return split_numbers(j.get<std::string>(), ',', field);
    if (!j.is_array()) config_fail(field, "expected a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(as_number(j[i], field + "[" + std::to_string(i) + "]"));
    }
    return out;
}

Point point_of(const json& j, std::size_t dim, const std::string& field) {
    const std::vector<double> v = number_list(j, field);
    if (v.size() != dim) config_fail(field, "expected " + std::to_string(dim) + " coordinates");
    Point p{0.0, 0.0};
    for (std::size_t a = 0; a < dim; ++a) p[a] = v[a];
    return p;
}

Method method_of(const json& stage, const std::string& field, Method fallback) {
    if (!stage.contains("method")) return fallback;
    try {
        return parse_method(string_or(stage, "method", field, ""));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        config_fail(field + ".method", e.what());
    }
}

std::vector<double> times_of(const json& stage, const std::string& field) {
    const std::vector<double> times = number_list(require(stage, "times", field), field + ".times");
    if (times.empty()) config_fail(field + ".times", "empty");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] > 0.0) || (i > 0 && !(times[i] > times[i - 1]))) {
            config_fail(field + ".times", "must be positive and strictly ascending");
        }
    }
    return times;
}

int levels_of(const json& stage, const std::string& field) {
    if (!stage.contains("levels")) return -1;
    const json& v = stage.at("levels");
    if (v.is_string() && v.get<std::string>() == "auto") return -1;
    if (!v.is_number_integer() || v.get<int>() < 0) {
        config_fail(field + ".levels", "expected a nonnegative integer or \"auto\"");
    }
    return v.get<int>();
}

int modes_of(const json& stage, const std::string& field) {
    const int k = int_or(stage, "modes", field, 0);
    if (k < 0) config_fail(field + ".modes", "must be nonnegative");
    return k;
}

double points_per_unit_of(const json& stage, const ConvexDomain& d, const std::string& field) {
    if (stage.contains("points_per_unit")) {
        const double ppu = as_number(stage.at("points_per_unit"), field + ".points_per_unit");
        if (!(ppu > 0.0)) config_fail(field + ".points_per_unit", "must be positive");
        return ppu;
    }
    if (stage.contains("grid")) {
        const Grid g = parse_grid(stage.at("grid"), d, field + ".grid");
        return (g.count(0) - 1) / (g.hi(0) - g.lo(0));
    }
    return domain_dim(d) == 1 ? 200.0 : 20.0;
}

void write_text(const fs::path& p, const std::string& text) {
    if (!p.parent_path().empty()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

std::string csv_row(const std::vector<std::string>& fields) {
    std::string s;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) s += ',';
        s += csv_field(fields[i]);
    }
    return s + "\r\n";
}

std::string csv_numbers(const std::vector<double>& v) {
    std::vector<std::string> f;
    f.reserve(v.size());
    for (double x : v) f.push_back(format_number(x));
    return csv_row(f);
}

std::vector<std::string> coord_header(int dim) {
    return dim == 1 ? std::vector<std::string>{"x"} : std::vector<std::string>{"x", "y"};
}

/// Long-format CSV of one grid function: coordinates then the value column.
std::string grid_function_csv(const GridFunction& f, const std::string& value_name) {
    std::vector<std::string> header = coord_header(f.grid.dim());
    header.push_back(value_name);
    std::string out = csv_row(header);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const Point p = f.grid.point(i);
        std::vector<double> row{p[0]};
        if (f.grid.dim() == 2) row.push_back(p[1]);
        row.push_back(f.values[i]);
        out += csv_numbers(row);
    }
    return out;
}

double parse_cell(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument(where + ": cannot parse '" + s + "' as a number");
    }
}

/// Uniform axis from a set of coordinates.
struct AxisFit {
    double lo = 0.0, hi = 0.0;
    int n = 0;
};

AxisFit fit_axis(std::vector<double> c, const std::string& where) {
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    if (c.size() < 3) throw std::invalid_argument(where + ": fewer than three distinct coordinates");
    AxisFit a{c.front(), c.back(), static_cast<int>(c.size())};
    const double h = (a.hi - a.lo) / (a.n - 1);
    for (std::size_t k = 0; k < c.size(); ++k) {
        if (std::abs(c[k] - (a.lo + static_cast<double>(k) * h)) > 1e-9 * std::max(1.0, std::abs(a.hi - a.lo))) {
            throw std::invalid_argument(where + ": coordinates are not uniformly spaced");
        }
    }
    return a;
}

/// Reads a long-format grid CSV (x[, y], value) with a header row.
GridFunction read_grid_function(const fs::path& path) {
    const auto rows = read_csv(path);
    const std::string where = path.string();
    if (rows.size() < 2) throw std::invalid_argument(where + ": no data rows");
    const std::size_t cols = rows.front().size();
    if (cols != 2 && cols != 3) throw std::invalid_argument(where + ": expected columns x[,y],value");
    const int dim = static_cast<int>(cols) - 1;
    std::vector<std::array<double, 3>> data;
    std::array<std::vector<double>, 2> coords;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != cols) throw std::invalid_argument(where + ": ragged row " + std::to_string(r + 1));
        std::array<double, 3> v{};
        for (std::size_t c = 0; c < cols; ++c) v[c] = parse_cell(rows[r][c], where);
        for (int a = 0; a < dim; ++a) coords[a].push_back(v[a]);
        data.push_back(v);
    }
    std::array<AxisFit, 2> ax;
    for (int a = 0; a < dim; ++a) ax[a] = fit_axis(coords[a], where);
    std::vector<double> lo, hi;
    std::vector<int> n;
    for (int a = 0; a < dim; ++a) {
        lo.push_back(ax[a].lo);
        hi.push_back(ax[a].hi);
        n.push_back(ax[a].n);
    }
    const Grid g = Grid::build(dim, lo, hi, n);
    if (data.size() != g.size()) throw std::invalid_argument(where + ": lattice is incomplete");
    std::vector<double> values(g.size(), 0.0);
    std::vector<char> seen(g.size(), 0);
    for (const auto& v : data) {
        std::array<int, 2> k{0, 0};
        for (int a = 0; a < dim; ++a) {
            k[a] = static_cast<int>(std::lround((v[a] - g.lo(a)) / g.spacing(a)));
        }
        const std::size_t flat = g.flat_index(k[0], k[1]);
        if (seen[flat]) throw std::invalid_argument(where + ": duplicate lattice point");
        seen[flat] = 1;
        values[flat] = v[cols - 1];
    }
    return GridFunction(g, std::move(values));
}

json checks_to_json(const std::vector<Check>& checks) {
    json out = json::array();
    for (const auto& c : checks) {
        out.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"threshold", c.threshold}});
    }
    return out;
}

/// Check that value <= threshold.
Check at_most(const std::string& name, double value, double threshold) {
    return {name, value <= threshold, value, threshold};
}

Check at_least(const std::string& name, double value, double threshold) {
    return {name, value >= threshold, value, threshold};
}

Check report_check(const std::string& name, const LogConcavityReport& r) {
    return {name, r.pass, r.worst_violation, r.tolerance};
}

LogConcavityOptions options_of(const RunContext& ctx) {
    LogConcavityOptions o;
    o.seed = ctx.seed;
    return o;
}

Tolerance tolerance_of(const json& stage, const std::string& field, const RunContext& ctx) {
    return stage.contains("tol") ? parse_tolerance(stage.at("tol"), field + ".tol") : ctx.tol;
}

fs::path output_path(const json& stage, const std::string& field, const RunContext& ctx,
                     const std::string& fallback) {
    const std::string name = string_or(stage, "out", field, fallback);
    const fs::path p(name);
    return p.is_absolute() ? p : ctx.out_dir / p;
}

SpectralDecomposition decompose(const ConvexDomain& d, const Grid& g, int modes) {
    const SchrodingerOperator op = assemble_operator(d, g);
    const int all = static_cast<int>(op.interior.size());
    return solve_eigs(op, std::min(modes > 0 ? modes : default_modes(g.dim()), all));
}

// ---------------------------------------------------------------- stages

void stage_mehler(const json& st, const std::string& field, const RunContext& ctx, StageResult& res) {
    const int dim = int_or(st, "dim", field, 1);
    if (dim != 1 && dim != 2) config_fail(field + ".dim", "must be 1 or 2");
    std::vector<KernelQuery> queries;
    const auto add = [&](const std::vector<double>& v, const std::string& where) {
        if (v.size() != static_cast<std::size_t>(2 * dim + 1)) {
            config_fail(where, "expected " + std::to_string(2 * dim + 1) + " values (x, z, t)");
        }
        KernelQuery q;
        q.dim = dim;
        for (int a = 0; a < dim; ++a) {
            q.x[a] = v[a];
            q.z[a] = v[dim + a];
        }
        q.t = v[2 * dim];
        if (!(q.t > 0.0)) config_fail(where, "time must be positive");
        queries.push_back(q);
    };
    if (st.contains("queries")) {
        const json& qs = st.at("queries");
        if (!qs.is_array()) config_fail(field + ".queries", "expected an array");
        for (std::size_t i = 0; i < qs.size(); ++i) {
            const std::string where = field + ".queries[" + std::to_string(i) + "]";
            add(number_list(qs[i], where), where);
        }
    } else if (st.contains("input")) {
        const std::string path = string_or(st, "input", field, "");
        std::vector<std::vector<std::string>> rows;
        try {
            rows = read_csv(path);
        } catch (const std::exception& e) {
            config_fail(field + ".input", e.what());
        }
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const std::string where = path + ":" + std::to_string(r + 1);
            std::vector<double> v;
            for (const auto& c : rows[r]) v.push_back(parse_cell(c, where));
            add(v, where);
        }
    } else {
        config_fail(field, "needs either 'queries' or 'input'");
    }

    std::vector<std::string> header;
    for (const char* base : {"x", "z"}) {
        for (int a = 0; a < dim; ++a) header.push_back(dim == 1 ? base : std::string(base) + std::to_string(a));
    }
    for (const char* h : {"t", "p", "p_gamma", "log_p", "log_p_gamma", "relation_residual"}) header.push_back(h);
    std::string out = csv_row(header);
    double worst_rel = 0.0, worst_sym = 0.0;
    json values = json::array();
    for (const auto& q : queries) {
        const double p = mehler_lebesgue(q), pg = mehler_gauss(q);
        const double lp = log_mehler_lebesgue(q), lpg = log_mehler_gauss(q);
        const double r = kernels_relation_residual(q);
        const KernelQuery swapped{q.dim, q.z, q.x, q.t};
        worst_sym = std::max(worst_sym, std::abs(log_mehler_gauss(swapped) - lpg));
        if (p > 0.0) worst_rel = std::max(worst_rel, std::abs(r) / p);
        std::vector<double> row;
        for (int a = 0; a < dim; ++a) row.push_back(q.x[a]);
        for (int a = 0; a < dim; ++a) row.push_back(q.z[a]);
        for (double v : {q.t, p, pg, lp, lpg, r}) row.push_back(v);
        out += csv_numbers(row);
        values.push_back({{"p", p}, {"p_gamma", pg}, {"log_p", lp}, {"log_p_gamma", lpg}});
    }
    const fs::path path = output_path(st, field, ctx, "mehler.csv");
    write_text(path, out);
    res.files.push_back(path);
    res.checks.push_back(at_most("relation_residual", worst_rel, 1e-12));
    res.checks.push_back(at_most("gauss_kernel_symmetry", worst_sym, 0.0));
    res.summary = {{"queries", queries.size()}, {"values", values}};
}

json convergence_json(const ConvergenceReport& r) {
    return {{"history", r.history}, {"level", r.level}, {"converged", r.converged}, {"tol", r.tol}};
}

void stage_kernel(const json& st, const std::string& field, const RunContext& ctx, StageResult& res) {
    const ConvexDomain d = parse_domain(require(st, "domain", field), field + ".domain");
    const Grid g = parse_grid(st.value("grid", json::object()), d, field + ".grid");
    const double t = as_number(require(st, "t", field), field + ".t");
    if (!(t > 0.0)) config_fail(field + ".t", "must be positive");
    const std::string method = string_or(st, "method", field, "trotter");
    const Tolerance tol = tolerance_of(st, field, ctx);
    const DomainMask m = mask(d, g);

    std::optional<KernelMatrix> k;
    json convergence = nullptr;
    if (method == "trotter") {
        if (st.contains("converge")) {
            const json& c = st.at("converge");
            const int l_max = int_or(c, "l_max", field + ".converge", 7);
            const double ctol = number_or(c, "tol", field + ".converge", 1e-4);
            try {
                check_substep(g, t, l_max);
            } catch (const std::invalid_argument& e) {
                config_fail(field + ".converge.l_max", e.what());
            }
            DyadicResult dr = dyadic_converge(d, g, t, l_max, ctol);
            convergence = convergence_json(dr.report);
            if (bool_or(st, "require_converged", field, false)) {
                res.checks.push_back(at_most("dyadic_convergence",
                                             dr.report.history.empty() ? 0.0 : dr.report.history.back(), ctol));
            }
            k = std::move(dr.kernel);
        } else {
            const int levels = levels_of(st, field);
            const int l = levels >= 0 ? levels : max_admissible_levels(g, t);
            try {
                check_substep(g, t, l);
            } catch (const std::invalid_argument& e) {
                config_fail(field + ".levels", e.what());
            }
            k = trotter_kernel(d, g, t, l);
        }
    } else if (method == "spectral") {
        k = spectral_kernel(decompose(d, g, modes_of(st, field)), t);
    } else if (method == "mehler") {
        k = masked_mehler(g, m, t);
    } else {
        config_fail(field + ".method", "expected trotter, spectral or mehler");
    }

    const double scale = k->values.cwiseAbs().maxCoeff();
    res.checks.push_back(at_most("symmetry", symmetry_defect(*k), 0.0));
    const double neg_allow = k->provenance == Provenance::Spectral ? -1e-8 * scale : 0.0;
    res.checks.push_back(at_least("nonnegativity", min_entry(*k), neg_allow));
    double excess = -std::numeric_limits<double>::infinity();
    const KernelMatrix pg = masked_mehler(g, m, t);
    excess = (k->values - pg.values).maxCoeff();
    if (k->provenance != Provenance::Spectral) {
        res.checks.push_back(at_most("domination", excess, 1e-12 * pg.values.maxCoeff()));
    }
    json lc = nullptr;
    if (bool_or(st, "check_logconcavity", field, true)) {
        const LogConcavityReport r = is_jointly_log_concave(*k, tol, options_of(ctx));
        res.checks.push_back(report_check("joint_log_concavity", r));
        lc = report_to_json(r);
    }

    const fs::path path = output_path(st, field, ctx, "kernel.csv");
    std::string out;
    out.reserve(static_cast<std::size_t>(k->values.size()) * 24);
    std::vector<double> row(k->size());
    for (Eigen::Index i = 0; i < k->values.rows(); ++i) {
        for (Eigen::Index j = 0; j < k->values.cols(); ++j) row[static_cast<std::size_t>(j)] = k->values(i, j);
        out += csv_numbers(row);
    }
    write_text(path, out);
    fs::path sidecar = path;
    sidecar.replace_extension(".json");
    std::vector<int> inside(m.inside.begin(), m.inside.end());
    res.summary = {{"t", t},
                   {"provenance", to_string(k->provenance)},
                   {"detail", k->detail},
                   {"truncated", k->truncated},
                   {"domain", domain_to_json(d)},
                   {"grid", grid_to_json(g)},
                   {"mask", inside},
                   {"convergence", convergence},
                   {"domination_excess", excess},
                   {"log_concavity", lc},
                   {"checks", checks_to_json(res.checks)}};
    write_json(sidecar, res.summary);
    res.files.push_back(path);
    res.files.push_back(sidecar);
}

void stage_eigs(const json& st, const std::string& field, const RunContext& ctx, StageResult& res) {
    const ConvexDomain d = parse_domain(require(st, "domain", field), field + ".domain");
    const Grid g = parse_grid(st.value("grid", json::object()), d, field + ".grid");
    const Tolerance tol = tolerance_of(st, field, ctx);
    const SpectralDecomposition dec = decompose(d, g, modes_of(st, field));
    const QuadratureWeights w = gaussian_weights(g);
    const int k = dec.count();

    const double gram = gram_defect(dec, w);
    res.checks.push_back(at_most("orthonormality", gram, 1e-8));
    if (k >= 2) {
        res.checks.push_back(at_least("simple_first_eigenvalue", dec.eigenvalues[1] - dec.eigenvalues[0], 1e-6));
    }
    double min_phi1 = std::numeric_limits<double>::infinity();
    const DomainMask inner = interior_mask(dec.mask, 1);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (inner[i]) min_phi1 = std::min(min_phi1, dec.modes(static_cast<Eigen::Index>(i), 0));
    }
    res.checks.push_back({"first_mode_positive", min_phi1 > 0.0, min_phi1, 0.0});
    double slope = std::nan("");
    if (k >= 3) {
        slope = sup_norm_slope(dec, std::min(k, 20));
        res.checks.push_back(at_most("sup_norm_slope", slope, 0.05));
    }
    json lc = nullptr;
    if (bool_or(st, "check_logconcavity", field, true) && min_phi1 > 0.0) {
        const LogConcavityReport r = eigenfunction_logconcavity(dec, tol, 0, options_of(ctx));
        res.checks.push_back(report_check("first_mode_log_concavity", r));
        lc = report_to_json(r);
    }
    std::vector<double> residuals;
    for (int j = 0; j < std::min(k, 10); ++j) residuals.push_back(residual_check(dec, j));

    res.summary = {{"domain", domain_to_json(d)},
                   {"grid", grid_to_json(g)},
                   {"eigenvalues", dec.eigenvalues},
                   {"sup_norm_ratio", sup_norm_ratio(dec)},
                   {"sup_norm_slope", slope},
                   {"residuals", residuals},
                   {"gram_defect", gram},
                   {"log_concavity", lc},
                   {"checks", checks_to_json(res.checks)}};
    const fs::path path = output_path(st, field, ctx, "eigs.json");
    write_json(path, res.summary);
    res.files.push_back(path);

    const int write_modes = int_or(st, "eigenfunctions", field, 0);
    for (int j = 0; j < std::min(write_modes, k); ++j) {
        fs::path p = path;
        p.replace_filename(path.stem().string() + "_mode" + std::to_string(j + 1) + ".csv");
        write_text(p, grid_function_csv(dec.mode(j), "phi"));
        res.files.push_back(p);
    }
    if (bool_or(st, "plot", field, true)) {
        PlotData pd;
        pd.eigen = dec;
        for (const auto& f : emit_plot_data(pd, "eigenfunction", path.parent_path(), path.stem().string())) {
            res.files.push_back(f);
        }
    }
}

KernelMatrix load_kernel(const fs::path& csv) {
    fs::path sidecar = csv;
    sidecar.replace_extension(".json");
    std::ifstream f(sidecar);
    if (!f) throw std::invalid_argument("missing kernel sidecar " + sidecar.string());
    json meta;
    try {
        meta = json::parse(f);
    } catch (const std::exception& e) {
        throw std::invalid_argument(sidecar.string() + ": " + e.what());
    }
    const json& gj = require(meta, "grid", sidecar.string());
    const int dim = gj.at("dim").get<int>();
    const Grid g = Grid::build(dim, gj.at("lo").get<std::vector<double>>(),
                               gj.at("hi").get<std::vector<double>>(), gj.at("n").get<std::vector<int>>());
    const auto rows = read_csv(csv);
    const auto n = static_cast<Eigen::Index>(g.size());
    if (static_cast<Eigen::Index>(rows.size()) != n) {
        throw std::invalid_argument(csv.string() + ": expected " + std::to_string(n) + " rows");
    }
    KernelMatrix k{g, meta.value("t", 0.0), Eigen::MatrixXd(n, n), Provenance::Mehler, meta.value("detail", 0), {}, false};
    const std::string prov = meta.value("provenance", "mehler");
    k.provenance = prov == "trotter" ? Provenance::Trotter : prov == "spectral" ? Provenance::Spectral : Provenance::Mehler;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(r.size()) != n) {
            throw std::invalid_argument(csv.string() + ": ragged row " + std::to_string(i + 1));
        }
        for (Eigen::Index j = 0; j < n; ++j) k.values(i, j) = parse_cell(r[static_cast<std::size_t>(j)], csv.string());
    }
    if (meta.contains("mask") && meta.at("mask").is_array()) {
        const auto inside = meta.at("mask").get<std::vector<int>>();
        if (inside.size() != g.size()) throw std::invalid_argument(sidecar.string() + ": mask size mismatch");
        k.mask = DomainMask{g, std::vector<char>(inside.begin(), inside.end())};
    }
    return k;
}

void stage_logcc(const json& st, const std::string& field, const RunContext& ctx, StageResult& res) {
    const Tolerance tol = tolerance_of(st, field, ctx);
    LogConcavityReport r;
    json source;
    try {
        if (st.contains("kernel")) {
            const std::string p = string_or(st, "kernel", field, "");
            r = is_jointly_log_concave(load_kernel(p), tol, options_of(ctx));
            source = {{"kernel", p}};
        } else {
            const std::string p = string_or(st, "input", field, "");
            if (p.empty()) config_fail(field, "needs either 'input' or 'kernel'");
            r = is_log_concave(read_grid_function(p), tol, options_of(ctx));
            source = {{"input", p}};
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        config_fail(field, e.what());
    }
    res.checks.push_back(report_check("log_concavity", r));
    res.summary = {{"source", source}, {"report", report_to_json(r)}};
    const fs::path path = output_path(st, field, ctx, "logcc.json");
    write_json(path, res.summary);
    res.files.push_back(path);
}

ResolutionPolicy policy_of(const json& st, const ConvexDomain& d, const std::string& field) {
    ResolutionPolicy p;
    p.points_per_unit = points_per_unit_of(st, d, field);
    p.modes = modes_of(st, field);
    p.trotter_levels = levels_of(st, field);
    return p;
}

void stage_trace(const json& st, const std::string& field, const RunContext& ctx, StageResult& res) {
    const ConvexDomain d = parse_domain(require(st, "domain", field), field + ".domain");
    const Method method = method_of(st, field, Method::Spectral);
    const ResolutionPolicy policy = policy_of(st, d, field);
    std::vector<double> times;
    if (st.contains("times")) {
        times = times_of(st, field);
    } else {
        const double tmin = as_number(require(st, "tmin", field), field + ".tmin");
        const double tmax = as_number(require(st, "tmax", field), field + ".tmax");
        const int samples = int_or(st, "samples", field, 20);
        if (!(tmin > 0.0) || !(tmax > tmin)) config_fail(field + ".tmin", "need 0 < tmin < tmax");
        if (samples < 3) config_fail(field + ".samples", "need at least three samples");
        for (int i = 0; i < samples; ++i) times.push_back(tmin + (tmax - tmin) * i / (samples - 1));
    }
    try {
        (void)matched_grid(d, policy.points_per_unit);
    } catch (const std::invalid_argument& e) {
        config_fail(field + ".points_per_unit", e.what());
    }
    const TraceCurve curve = trace_curve(d, times, method, policy);

    double max_increase = -std::numeric_limits<double>::infinity();
    double min_convexity = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < times.size(); ++i) {
        max_increase = std::max(max_increase, curve.values[i] - curve.values[i - 1]);
    }
    for (std::size_t i = 1; i + 1 < times.size(); ++i) {
        // Second divided difference of log Z on a possibly uneven sampling.
        const double l0 = std::log(curve.values[i - 1]), l1 = std::log(curve.values[i]),
                     l2 = std::log(curve.values[i + 1]);
        const double d1 = (l1 - l0) / (times[i] - times[i - 1]);
        const double d2 = (l2 - l1) / (times[i + 1] - times[i]);
        min_convexity = std::min(min_convexity, 2.0 * (d2 - d1) / (times[i + 1] - times[i - 1]));
    }
    res.checks.push_back(at_most("nonincreasing", max_increase, 0.0));
    res.checks.push_back(at_least("log_convexity", min_convexity, -1e-8));

    json extraction = nullptr;
    try {
        const TraceEigenvalue te = eigenvalue_from_trace(curve);
        extraction = {{"slope", te.slope}, {"corrected", te.corrected}, {"tail_estimate", te.tail_estimate}};
        if (bool_or(st, "compare_eigenvalue", field, false)) {
            const double l1 = domain_eigenvalue(d, policy);
            const double rel = std::abs(te.corrected - l1) / std::abs(l1);
            extraction["lambda1"] = l1;
            extraction["relative_error"] = rel;
            res.checks.push_back(at_most("trace_eigenvalue", rel, number_or(st, "eigenvalue_tol", field, 0.01)));
        }
    } catch (const std::invalid_argument& e) {
        extraction = {{"error", e.what()}};
    }
    const fs::path path = output_path(st, field, ctx, "trace.csv");
    PlotData pd;
    pd.trace = curve;
    const auto files = emit_plot_data(pd, "trace", path.parent_path(), path.stem().string());
    // The plot file doubles as the stage's primary output.
    fs::rename(files.front(), path);
    res.files.push_back(path);
    fs::path summary = path;
    summary.replace_extension(".json");
    res.summary = {{"domain", domain_to_json(d)},
                   {"method", to_string(method)},
                   {"points_per_unit", policy.points_per_unit},
                   {"times", times},
                   {"values", curve.values},
                   {"eigenvalue", extraction},
                   {"checks", checks_to_json(res.checks)}};
    write_json(summary, res.summary);
    res.files.push_back(summary);
}

void stage_bm(const json& st, const std::string& field, const RunContext& ctx, StageResult& res) {
    const ConvexDomain o0 = parse_domain(require(st, "omega0", field), field + ".omega0");
    const ConvexDomain o1 = parse_domain(require(st, "omega1", field), field + ".omega1");
    if (o0.index() != o1.index()) config_fail(field + ".omega1", "must have the same type as omega0");
    const Method method = method_of(st, field, Method::Spectral);
    const ResolutionPolicy policy = policy_of(st, o0, field);
    std::vector<double> s_list =
        st.contains("s") ? number_list(st.at("s"), field + ".s") : default_s_grid();
    for (double s : s_list) {
        if (!(s >= 0.0 && s <= 1.0)) config_fail(field + ".s", "values must lie in [0, 1]");
    }
    const std::vector<double> t_list = st.contains("t") ? number_list(st.at("t"), field + ".t") : std::vector<double>{1.0};
    for (double t : t_list) {
        if (!(t > 0.0)) config_fail(field + ".t", "must be positive");
    }
    const std::string form = string_or(st, "form", field, "both");
    if (form != "both" && form != "trace" && form != "eigenvalue") {
        config_fail(field + ".form", "expected both, trace or eigenvalue");
    }
    for (double s : s_list) {
        try {
            (void)matched_grid(minkowski_interpolate(o0, o1, s), policy.points_per_unit);
        } catch (const std::invalid_argument& e) {
            config_fail(field + ".points_per_unit", e.what());
        }
    }

    PlotData pd;
    if (form != "eigenvalue") {
        for (double t : t_list) pd.bm.push_back(bm_trace_inequality(o0, o1, s_list, t, method, policy));
    }
    if (form != "trace") pd.bm.push_back(bm_eigenvalue_inequality(o0, o1, s_list, policy));

    json reports = json::array();
    for (const auto& rep : pd.bm) {
        double worst = std::numeric_limits<double>::infinity();
        json rows = json::array();
        for (const auto& r : rep.rows) {
            worst = std::min(worst, r.margin + r.tolerance);
            rows.push_back({{"s", r.s}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"margin", r.margin},
                            {"tolerance", r.tolerance}, {"pass", r.pass}});
        }
        const std::string name = rep.form == "trace" ? "bm_trace_t" + format_number(rep.t) : "bm_eigenvalue";
        res.checks.push_back({name, rep.pass(), worst, 0.0});
        reports.push_back({{"form", rep.form}, {"t", rep.t}, {"pass", rep.pass()}, {"rows", rows}});
    }
    const fs::path path = output_path(st, field, ctx, "bm.json");
    res.summary = {{"omega0", domain_to_json(o0)},
                   {"omega1", domain_to_json(o1)},
                   {"method", to_string(method)},
                   {"points_per_unit", policy.points_per_unit},
                   {"reports", reports},
                   {"checks", checks_to_json(res.checks)}};
    write_json(path, res.summary);
    res.files.push_back(path);
    for (const auto& f : emit_plot_data(pd, "bm", path.parent_path(), path.stem().string())) {
        res.files.push_back(f);
    }
}

void stage_evolve(const json& st, const std::string& field, const RunContext& ctx, StageResult& res) {
    const ConvexDomain d = parse_domain(require(st, "domain", field), field + ".domain");
    const Tolerance tol = tolerance_of(st, field, ctx);
    const std::vector<double> times = times_of(st, field);
    EvolutionOptions opt;
    opt.method = method_of(st, field, Method::Spectral);
    opt.modes = modes_of(st, field);
    opt.trotter_levels = levels_of(st, field);
    const std::string u0 = string_or(st, "u0", field, "builtin:family");

    std::vector<NamedDatum> data;
    std::optional<Grid> grid;
    if (u0.rfind("builtin:", 0) == 0) {
        grid = parse_grid(st.value("grid", json::object()), d, field + ".grid");
        const std::string name = u0.substr(8);
        try {
            if (name == "family") {
                data = builtin_family(d, *grid);
            } else {
                data.push_back({name, builtin_datum(name, d, *grid)});
            }
        } catch (const std::invalid_argument& e) {
            config_fail(field + ".u0", e.what());
        }
    } else if (u0.rfind("file:", 0) == 0) {
        try {
            GridFunction f = read_grid_function(u0.substr(5));
            grid = f.grid;
            const DomainMask m = mask(d, *grid);
            data.push_back({fs::path(u0.substr(5)).stem().string(), GridFunction(*grid, f.values, m)});
        } catch (const std::invalid_argument& e) {
            config_fail(field + ".u0", e.what());
        }
    } else {
        config_fail(field + ".u0", "expected builtin:<name> or file:<csv>");
    }
    for (const auto& datum : data) {
        for (double v : datum.values.values) {
            if (v < 0.0) config_fail(field + ".u0", "initial datum '" + datum.name + "' has negative values");
        }
    }
    std::optional<int> levels = opt.trotter_levels >= 0 ? std::optional<int>(opt.trotter_levels) : std::nullopt;
    if (opt.method == Method::Trotter && levels) {
        for (double t : times) {
            try {
                check_substep(*grid, t, *levels);
            } catch (const std::invalid_argument& e) {
                config_fail(field + ".levels", e.what());
            }
        }
    }

    std::optional<SpectralDecomposition> dec;
    if (opt.method == Method::Spectral) {
        const SchrodingerOperator op = assemble_operator(d, *grid);
        const int all = static_cast<int>(op.interior.size());
        const int k = opt.modes > 0 ? opt.modes : (grid->dim() == 1 ? all : default_modes(2));
        dec = solve_eigs(op, std::min(k, all));
    }
    const fs::path base = output_path(st, field, ctx, "evolve.json");
    json entries = json::array();
    for (const auto& datum : data) {
        const LogConcavityReport pre = is_log_concave(datum.values, tol, options_of(ctx));
        json j = {{"name", datum.name}, {"precondition", report_to_json(pre)}, {"skipped", !pre.pass}};
        json states = json::array();
        if (pre.pass) {
            const EvolutionResult evo = dec ? evolve_spectral(d, *dec, datum.values, times)
                                            : evolve_dirichlet(d, *grid, datum.values, times, opt);
            for (std::size_t k = 0; k < times.size(); ++k) {
                fs::path p = base;
                p.replace_filename(base.stem().string() + "_" + datum.name + "_t" + std::to_string(k) + ".csv");
                write_text(p, grid_function_csv(evo.states[k], "u"));
                res.files.push_back(p);
                const LogConcavityReport r = is_log_concave(evo.states[k], tol, options_of(ctx));
                res.checks.push_back(report_check(datum.name + "@t=" + format_number(times[k]), r));
                states.push_back({{"t", times[k]}, {"file", p.filename().string()}, {"report", report_to_json(r)}});
            }
        }
        j["states"] = states;
        entries.push_back(j);
    }
    res.summary = {{"domain", domain_to_json(d)},
                   {"grid", grid_to_json(*grid)},
                   {"method", to_string(opt.method)},
                   {"times", times},
                   {"entries", entries},
                   {"checks", checks_to_json(res.checks)}};
    write_json(base, res.summary);
    res.files.insert(res.files.begin(), base);
}

using StageFn = void (*)(const json&, const std::string&, const RunContext&, StageResult&);

const std::map<std::string, StageFn>& stage_table() {
    static const std::map<std::string, StageFn> table{
        {"mehler", stage_mehler}, {"kernel", stage_kernel}, {"eigs", stage_eigs}, {"logcc", stage_logcc},
        {"trace", stage_trace},   {"bm", stage_bm},         {"evolve", stage_evolve}};
    return table;
}

}  // namespace

// ---------------------------------------------------------------- parsing

ConvexDomain parse_domain(const json& j, const std::string& field) {
    if (j.is_string()) return parse_domain_text(j.get<std::string>(), field);
    if (!j.is_object()) config_fail(field, "expected an object with a 'type' field");
    const std::string type = string_or(j, "type", field, "");
    ConvexDomain d;
    if (type == "interval") {
        d = Interval{as_number(require(j, "a", field), field + ".a"), as_number(require(j, "b", field), field + ".b")};
        if (!(std::get<Interval>(d).a < std::get<Interval>(d).b)) config_fail(field + ".b", "must exceed a");
    } else if (type == "box") {
        const AxisBox box{point_of(require(j, "lo", field), 2, field + ".lo"),
                          point_of(require(j, "hi", field), 2, field + ".hi")};
        if (!(box.lo[0] < box.hi[0] && box.lo[1] < box.hi[1])) config_fail(field + ".hi", "must exceed lo on both axes");
        d = box;
    } else if (type == "polygon") {
        const json& v = require(j, "vertices", field);
        if (!v.is_array() || v.size() < 3) config_fail(field + ".vertices", "need at least three vertices");
        ConvexPolygon poly;
        for (std::size_t i = 0; i < v.size(); ++i) {
            poly.vertices.push_back(point_of(v[i], 2, field + ".vertices[" + std::to_string(i) + "]"));
        }
        d = poly;
        if (!verify_convexity(d)) {
            config_fail(field + ".vertices", "not a strictly convex counterclockwise polygon");
        }
    } else if (type.empty()) {
        config_fail(field + ".type", "missing");
    } else {
        config_fail(field + ".type", "unknown domain type '" + type + "' (expected interval, box or polygon)");
    }
    return d;
}

ConvexDomain parse_domain_text(const std::string& text, const std::string& field) {
    if (!text.empty() && text.front() == '{') {
        json j;
        try {
            j = json::parse(text);
        } catch (const std::exception& e) {
            config_fail(field, std::string("invalid JSON: ") + e.what());
        }
        return parse_domain(j, field);
    }
    const auto colon = text.find(':');
    if (colon == std::string::npos) config_fail(field, "expected JSON or type:coordinates");
    const std::string type = text.substr(0, colon), rest = text.substr(colon + 1);
    json j = {{"type", type}};
    if (type == "interval") {
        const auto v = split_numbers(rest, ',', field);
        if (v.size() != 2) config_fail(field, "interval needs a,b");
        j["a"] = v[0];
        j["b"] = v[1];
    } else if (type == "box") {
        const auto v = split_numbers(rest, ',', field);
        if (v.size() != 4) config_fail(field, "box needs x0,y0,x1,y1");
        j["lo"] = {v[0], v[1]};
        j["hi"] = {v[2], v[3]};
    } else if (type == "polygon") {
        j["vertices"] = json::array();
        std::stringstream ss(rest);
        std::string vertex;
        while (std::getline(ss, vertex, ';')) j["vertices"].push_back(split_numbers(vertex, ',', field));
    }
    return parse_domain(j, field);
}

json domain_to_json(const ConvexDomain& d) {
    if (const auto* i = std::get_if<Interval>(&d)) return {{"type", "interval"}, {"a", i->a}, {"b", i->b}};
    if (const auto* b = std::get_if<AxisBox>(&d)) {
        return {{"type", "box"}, {"lo", {b->lo[0], b->lo[1]}}, {"hi", {b->hi[0], b->hi[1]}}};
    }
    json v = json::array();
    for (const auto& p : std::get<ConvexPolygon>(d).vertices) v.push_back({p[0], p[1]});
    return {{"type", "polygon"}, {"vertices", v}};
}

Grid parse_grid(const json& j, const ConvexDomain& domain, const std::string& field) {
    if (!j.is_object()) config_fail(field, "expected an object");
    const int dim = domain_dim(domain);
    if (j.contains("points_per_unit")) {
        try {
            return matched_grid(domain, as_number(j.at("points_per_unit"), field + ".points_per_unit"));
        } catch (const ConfigError&) {
            throw;
        } catch (const std::invalid_argument& e) {
            config_fail(field + ".points_per_unit", e.what());
        }
    }
    const AxisBox box = bounding_box(domain);
    std::vector<double> lo(box.lo.begin(), box.lo.begin() + dim), hi(box.hi.begin(), box.hi.begin() + dim);
    if (j.contains("lo")) {
        const Point p = point_of(j.at("lo"), static_cast<std::size_t>(dim), field + ".lo");
        lo.assign(p.begin(), p.begin() + dim);
    }
    if (j.contains("hi")) {
        const Point p = point_of(j.at("hi"), static_cast<std::size_t>(dim), field + ".hi");
        hi.assign(p.begin(), p.begin() + dim);
    }
    std::vector<int> n(static_cast<std::size_t>(dim), dim == 1 ? 401 : 41);
    if (j.contains("n")) {
        const json& nj = j.at("n");
        if (nj.is_number_integer()) {
            std::fill(n.begin(), n.end(), nj.get<int>());
        } else if (nj.is_array() && nj.size() == static_cast<std::size_t>(dim) &&
                   std::all_of(nj.begin(), nj.end(), [](const json& e) { return e.is_number_integer(); })) {
            n = nj.get<std::vector<int>>();
        } else {
            config_fail(field + ".n", "expected an integer or one integer per axis");
        }
    }
    Grid g = [&] {
        try {
            return Grid::build(dim, lo, hi, n);
        } catch (const std::invalid_argument& e) {
            config_fail(field, e.what());
        }
    }();
    for (int a = 0; a < dim; ++a) {
        if (g.lo(a) > box.lo[a] + 1e-12 || g.hi(a) < box.hi[a] - 1e-12) {
            config_fail(field, "grid does not cover the domain");
        }
    }
    return g;
}

json grid_to_json(const Grid& g) {
    json lo = json::array(), hi = json::array(), n = json::array();
    for (int a = 0; a < g.dim(); ++a) {
        lo.push_back(g.lo(a));
        hi.push_back(g.hi(a));
        n.push_back(g.count(a));
    }
    return {{"dim", g.dim()}, {"lo", lo}, {"hi", hi}, {"n", n}};
}

Tolerance parse_tolerance(const json& j, const std::string& field) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "auto") return Tolerance::auto_scaled();
        const auto v = split_numbers(s, ',', field);
        if (v.size() == 1 && v[0] >= 0.0) return Tolerance::fixed(v[0]);
        config_fail(field, "expected \"auto\" or a nonnegative number");
    }
    const double v = as_number(j, field);
    if (v < 0.0) config_fail(field, "must be nonnegative");
    return Tolerance::fixed(v);
}

// ---------------------------------------------------------------- running

bool StageResult::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

StageResult run_stage(const json& stage, const RunContext& ctx) {
    if (!stage.is_object()) throw ConfigError("stage: expected an object");
    const std::string kind = string_or(stage, "kind", "stage", "");
    StageResult res;
    res.kind = kind;
    res.name = string_or(stage, "name", "stage", kind);
    const std::string field = "stage '" + res.name + "'";
    const auto it = stage_table().find(kind);
    if (it == stage_table().end()) {
        config_fail(field + ".kind", "unknown kind '" + kind + "' (expected mehler, kernel, eigs, logcc, trace, bm or evolve)");
    }
    fs::create_directories(ctx.out_dir);
    const auto start = std::chrono::steady_clock::now();
    it->second(stage, field, ctx, res);
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

RunOutcome run(const json& config) {
    RunOutcome out;
    RunContext ctx;
    json manifest = {{"version", kVersion}, {"config", config}};
    try {
        if (!config.is_object()) throw ConfigError("config: expected an object");
        ctx.out_dir = string_or(config, "output", "config", "oulab_out");
        if (config.contains("seed")) {
            const json& seed = config.at("seed");
            if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) {
                config_fail("config.seed", "expected a nonnegative integer");
            }
            ctx.seed = config.at("seed").get<std::uint64_t>();
        }
        if (config.contains("tolerance")) ctx.tol = parse_tolerance(config.at("tolerance"), "config.tolerance");
        const json& stages = require(config, "stages", "config");
        if (!stages.is_array() || stages.empty()) config_fail("config.stages", "expected a non-empty array");
        for (std::size_t i = 0; i < stages.size(); ++i) {
            const std::string kind = stages[i].is_object() ? stages[i].value("kind", "") : "";
            if (!stage_table().count(kind)) {
                config_fail("config.stages[" + std::to_string(i) + "].kind", "unknown kind '" + kind + "'");
            }
        }
        for (const auto& st : stages) {
            out.stages.push_back(run_stage(st, ctx));
            const StageResult& r = out.stages.back();
            if (!r.passed() && out.exit_code == 0) {
                out.exit_code = 1;
                for (const auto& c : r.checks) {
                    if (!c.pass) {
                        out.message = "stage '" + r.name + "' failed check '" + c.name + "' (value " +
                                      format_number(c.value) + ", threshold " + format_number(c.threshold) + ")";
                        break;
                    }
                }
            }
        }
    } catch (const std::invalid_argument& e) {
        out.exit_code = 2;
        out.message = e.what();
    } catch (const std::exception& e) {
        out.exit_code = 1;
        out.message = e.what();
    }

    json stages = json::array();
    for (const auto& r : out.stages) {
        json files = json::array();
        for (const auto& f : r.files) {
            files.push_back({{"path", fs::relative(f, ctx.out_dir).generic_string()}, {"sha256", sha256_file(f)}});
        }
        stages.push_back({{"name", r.name}, {"kind", r.kind}, {"seconds", r.seconds}, {"passed", r.passed()},
                          {"checks", checks_to_json(r.checks)}, {"files", files}});
    }
    manifest["seed"] = ctx.seed;
    manifest["stages"] = stages;
    manifest["exit_code"] = out.exit_code;
    manifest["message"] = out.message;
    if (out.exit_code != 2 || fs::exists(ctx.out_dir)) {
        try {
            out.manifest = ctx.out_dir / "manifest.json";
            write_json(out.manifest, manifest);
        } catch (const std::exception& e) {
            out.exit_code = std::max(out.exit_code, 1);
            out.message += std::string(out.message.empty() ? "" : "; ") + e.what();
        }
    }
    return out;
}

json load_config(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError(path.string() + ": cannot open");
    try {
        return json::parse(f);
    } catch (const std::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------- outputs

std::vector<fs::path> emit_plot_data(const PlotData& data, const std::string& kind, const fs::path& dir,
                                     const std::string& stem) {
    const std::string prefix = stem.empty() ? "" : stem + "_";
    std::vector<fs::path> files;
    if (kind == "trace") {
        if (!data.trace) throw std::invalid_argument("emit_plot_data: no trace curve");
        std::string out = csv_row({"t", "Z", "logZ"});
        for (std::size_t i = 0; i < data.trace->times.size(); ++i) {
            const double z = data.trace->values[i];
            out += csv_numbers({data.trace->times[i], z, std::log(z)});
        }
        files.push_back(dir / (prefix + "trace_plot.csv"));
        write_text(files.back(), out);
    } else if (kind == "eigenfunction") {
        if (!data.eigen || data.eigen->count() < 1) throw std::invalid_argument("emit_plot_data: no eigenfunction");
        const GridFunction phi = data.eigen->mode(0);
        std::vector<std::string> header = coord_header(phi.grid.dim());
        header.push_back("phi1");
        header.push_back("log_phi1");
        std::string out = csv_row(header);
        for (std::size_t i = 0; i < phi.size(); ++i) {
            const Point p = phi.grid.point(i);
            std::vector<std::string> row{format_number(p[0])};
            if (phi.grid.dim() == 2) row.push_back(format_number(p[1]));
            row.push_back(format_number(phi.values[i]));
            row.push_back(phi.values[i] > 0.0 ? format_number(std::log(phi.values[i])) : "");
            out += csv_row(row);
        }
        files.push_back(dir / (prefix + "eigenfunction_plot.csv"));
        write_text(files.back(), out);
    } else if (kind == "bm") {
        if (data.bm.empty()) throw std::invalid_argument("emit_plot_data: no Brunn-Minkowski report");
        for (const auto& rep : data.bm) {
            std::string out = csv_row({"s", "lhs", "rhs", "margin"});
            for (const auto& r : rep.rows) out += csv_numbers({r.s, r.lhs, r.rhs, r.margin});
            const std::string name =
                rep.form == "trace" ? "bm_trace_t" + format_number(rep.t) : std::string("bm_eigenvalue");
            files.push_back(dir / (prefix + name + "_plot.csv"));
            write_text(files.back(), out);
        }
    } else {
        throw std::invalid_argument("emit_plot_data: unknown kind '" + kind + "' (expected trace, eigenfunction or bm)");
    }
    return files;
}

std::string sha256_file(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    EVP_MD_CTX* md = EVP_MD_CTX_new();
    EVP_DigestInit_ex(md, EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (f) {
        f.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (f.gcount() > 0) EVP_DigestUpdate(md, buf.data(), static_cast<std::size_t>(f.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(md, digest, &len);
    EVP_MD_CTX_free(md);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string format_number(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::invalid_argument(path.string() + ": cannot open");
    const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !field.empty()) {
                row.push_back(std::move(field));
                rows.push_back(std::move(row));
            }
            row.clear();
            field.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (quoted) throw std::invalid_argument(path.string() + ": unterminated quoted field");
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

json report_to_json(const LogConcavityReport& r) {
    json witness = json::array();
    for (const auto& w : r.witness) witness.push_back({{"index", w.index}, {"coord", w.coord}});
    return {{"pass", r.pass},
            {"worst_violation", std::isfinite(r.worst_violation) ? json(r.worst_violation) : json(nullptr)},
            {"tolerance", r.tolerance},
            {"witness_kind", r.witness_kind},
            {"witness", witness},
            {"excluded_fraction", r.excluded_fraction},
            {"tests", r.tests}};
}

}  // namespace oulab::pipeline
