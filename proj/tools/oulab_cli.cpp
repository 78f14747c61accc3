// oulab: command-line front end for the Dirichlet Ornstein-Uhlenbeck toolkit.
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 invalid arguments or config.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "oulab/mehler.hpp"
#include "oulab/pipeline.hpp"

namespace {

using oulab::pipeline::json;
namespace fs = std::filesystem;
namespace pl = oulab::pipeline;

json domain_arg(const std::string& text, const std::string& flag) {
    return pl::domain_to_json(pl::parse_domain_text(text, flag));
}

json comma_list(const std::string& text) { return json(text); }

void print_result(const pl::StageResult& r) {
    for (const auto& c : r.checks) {
        std::printf("%s %s value=%s threshold=%s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                    pl::format_number(c.value).c_str(), pl::format_number(c.threshold).c_str());
    }
    for (const auto& f : r.files) std::printf("wrote %s\n", f.string().c_str());
}

/// Runs one stage whose primary artifact is `out`; artifacts land next to it.
int run_single(json stage, const fs::path& out, std::uint64_t seed, const std::string& tol) {
    pl::RunContext ctx;
    ctx.out_dir = out.has_parent_path() ? out.parent_path() : fs::path(".");
    ctx.seed = seed;
    if (!tol.empty()) ctx.tol = pl::parse_tolerance(json(tol), "--tol");
    stage["out"] = out.filename().string();
    const pl::StageResult r = pl::run_stage(stage, ctx);
    print_result(r);
    return r.passed() ? 0 : 1;
}

oulab::Point coords(const std::string& text, int dim, const std::string& flag) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
    if (static_cast<int>(v.size()) != dim) {
        throw pl::ConfigError(flag + ": expected " + std::to_string(dim) + " coordinates");
    }
    return {v[0], dim == 2 ? v[1] : 0.0};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dirichlet Ornstein-Uhlenbeck heat kernels, spectra and log-concavity checks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("oulab ") + pl::kVersion);

    std::uint64_t seed = 20240611;
    std::string tol;
    std::string out;

    // mehler
    auto* mehler = app.add_subcommand("mehler", "Evaluate whole-space Mehler kernels");
    mehler->require_subcommand(1);
    auto* eval = mehler->add_subcommand("eval", "Evaluate one (x, z, t)");
    std::string mx, mz;
    double mt = 0.0;
    int mdim = 1;
    eval->add_option("--x", mx, "Point x (comma-separated in 2D)")->required();
    eval->add_option("--z", mz, "Point z")->required();
    eval->add_option("--t", mt, "Time")->required();
    eval->add_option("--dim", mdim, "Dimension")->check(CLI::IsMember({1, 2}));
    auto* batch = mehler->add_subcommand("batch", "Evaluate a CSV of queries (x,z,t or x0,x1,z0,z1,t)");
    std::string batch_in;
    batch->add_option("--in", batch_in, "Query CSV")->required();
    batch->add_option("--out", out, "Output CSV");
    batch->add_option("--dim", mdim, "Dimension")->check(CLI::IsMember({1, 2}));

    // kernel
    auto* kernel = app.add_subcommand("kernel", "Dirichlet kernel matrix on a grid");
    std::string domain, levels = "auto", method;
    double t = 0.0, converge_tol = 0.0;
    int grid_n = 0, l_max = 7, modes = 0;
    bool require_converged = false, no_logcc = false;
    kernel->add_option("--domain", domain, "Domain (JSON or interval:a,b | box:x0,y0,x1,y1 | polygon:x,y;...)")->required();
    kernel->add_option("--t", t, "Time")->required();
    kernel->add_option("--grid-n", grid_n, "Lattice points per axis");
    kernel->add_option("--levels", levels, "Dyadic levels or auto");
    kernel->add_option("--method", method, "trotter, spectral or mehler");
    kernel->add_option("--modes", modes, "Spectral modes");
    kernel->add_option("--converge-tol", converge_tol, "Iterate levels until the change drops below this");
    kernel->add_option("--l-max", l_max, "Deepest level for --converge-tol");
    kernel->add_flag("--require-converged", require_converged, "Fail unless the dyadic iteration converges");
    kernel->add_flag("--no-logcc", no_logcc, "Skip the joint log-concavity check");
    kernel->add_option("--tol", tol, "Log-concavity tolerance (number or auto)");
    kernel->add_option("--out", out, "Matrix CSV; a JSON sidecar is written next to it");

    // eigs
    auto* eigs = app.add_subcommand("eigs", "Dirichlet eigenpairs");
    int eigenfunctions = 0;
    eigs->add_option("--domain", domain, "Domain")->required();
    eigs->add_option("--grid-n", grid_n, "Lattice points per axis");
    eigs->add_option("--modes", modes, "Number of modes");
    eigs->add_option("--eigenfunctions", eigenfunctions, "Write this many mode CSVs");
    eigs->add_option("--tol", tol, "Log-concavity tolerance (number or auto)");
    eigs->add_option("--out", out, "Summary JSON");

    // logcc
    auto* logcc = app.add_subcommand("logcc", "Discrete log-concavity of a grid function or kernel");
    std::string input;
    logcc->add_option("--input", input, "Long-format grid CSV (x[,y],value)");
    logcc->add_option("--tol", tol, "Tolerance (number or auto)");
    logcc->add_option("--out", out, "Report JSON");
    auto* logcc_kernel = logcc->add_subcommand("kernel", "Joint log-concavity of a saved kernel");
    std::string from;
    logcc_kernel->add_option("--from", from, "Kernel CSV with its JSON sidecar")->required();
    logcc_kernel->add_option("--tol", tol, "Tolerance (number or auto)");
    logcc_kernel->add_option("--out", out, "Report JSON");

    // trace
    auto* trace = app.add_subcommand("trace", "Trace function Z(t) and eigenvalue extraction");
    double tmin = 0.0, tmax = 0.0, ppu = 0.0;
    int samples = 20;
    bool compare = false;
    trace->add_option("--domain", domain, "Domain")->required();
    trace->add_option("--tmin", tmin, "First time")->required();
    trace->add_option("--tmax", tmax, "Last time")->required();
    trace->add_option("--samples", samples, "Number of samples");
    trace->add_option("--method", method, "spectral or trotter");
    trace->add_option("--ppu", ppu, "Lattice cells per unit length");
    trace->add_option("--modes", modes, "Spectral modes");
    trace->add_option("--levels", levels, "Trotter levels or auto");
    trace->add_flag("--compare-eigenvalue", compare, "Check the extracted eigenvalue against the eigensolver");
    trace->add_option("--out", out, "CSV (t, Z, logZ)");

    // bm
    auto* bm = app.add_subcommand("bm", "Brunn-Minkowski checks along a Minkowski interpolation");
    std::string omega0, omega1, s_list, t_list = "1", form = "both";
    bm->add_option("--omega0", omega0, "First domain")->required();
    bm->add_option("--omega1", omega1, "Second domain")->required();
    bm->add_option("--s", s_list, "Interpolation parameters, comma-separated");
    bm->add_option("--t", t_list, "Trace times, comma-separated");
    bm->add_option("--method", method, "spectral or trotter");
    bm->add_option("--form", form, "both, trace or eigenvalue");
    bm->add_option("--ppu", ppu, "Lattice cells per unit length");
    bm->add_option("--modes", modes, "Spectral modes");
    bm->add_option("--out", out, "Report JSON");

    // evolve
    auto* evolve = app.add_subcommand("evolve", "Evolve initial data and test log-concavity preservation");
    std::string u0 = "builtin:family", times;
    evolve->add_option("--domain", domain, "Domain")->required();
    evolve->add_option("--u0", u0, "builtin:<name>, builtin:family or file:<csv>");
    evolve->add_option("--times", times, "Times, comma-separated")->required();
    evolve->add_option("--method", method, "spectral or trotter");
    evolve->add_option("--grid-n", grid_n, "Lattice points per axis");
    evolve->add_option("--modes", modes, "Spectral modes");
    evolve->add_option("--levels", levels, "Trotter levels or auto");
    evolve->add_option("--tol", tol, "Log-concavity tolerance (number or auto)");
    evolve->add_option("--out", out, "Output directory");

    // run
    auto* run = app.add_subcommand("run", "Run a JSON configuration of stages");
    std::string config;
    std::optional<std::uint64_t> seed_override;
    run->add_option("--config", config, "Configuration file")->required();
    run->add_option("--out", out, "Override the output directory");
    run->add_option("--seed", seed_override, "Override the sampling seed");
    run->add_option("--tol", tol, "Override the log-concavity tolerance");

    for (auto* sub : {kernel, eigs, logcc, evolve}) sub->add_option("--seed", seed, "Sampling seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const auto grid_json = [&] { return grid_n > 0 ? json{{"n", grid_n}} : json::object(); };
        const auto out_or = [&](const char* d) { return fs::path(out.empty() ? std::string(d) : out); };
        const auto method_or = [&](const char* d) { return method.empty() ? std::string(d) : method; };
        const auto levels_json = [&] { return levels == "auto" ? json("auto") : json(std::stoi(levels)); };

        if (*eval) {
            oulab::KernelQuery q{mdim, coords(mx, mdim, "--x"), coords(mz, mdim, "--z"), mt};
            if (!(mt > 0.0)) throw pl::ConfigError("--t: must be positive");
            const json r = {{"p", oulab::mehler_lebesgue(q)},
                            {"p_gamma", oulab::mehler_gauss(q)},
                            {"log_p", oulab::log_mehler_lebesgue(q)},
                            {"log_p_gamma", oulab::log_mehler_gauss(q)},
                            {"relation_residual", oulab::kernels_relation_residual(q)}};
            std::cout << r.dump(2) << "\n";
            return 0;
        }
        if (*batch) {
            return run_single({{"kind", "mehler"}, {"dim", mdim}, {"input", batch_in}}, out_or("mehler.csv"), seed, tol);
        }
        if (*kernel) {
            json st = {{"kind", "kernel"}, {"domain", domain_arg(domain, "--domain")}, {"grid", grid_json()},
                       {"t", t}, {"method", method_or("trotter")}, {"levels", levels_json()}, {"modes", modes},
                       {"check_logconcavity", !no_logcc}};
            if (converge_tol > 0.0 || require_converged) {
                st["converge"] = {{"l_max", l_max}, {"tol", converge_tol > 0.0 ? converge_tol : 1e-4}};
                st["require_converged"] = require_converged;
            }
            return run_single(st, out_or("kernel.csv"), seed, tol);
        }
        if (*eigs) {
            return run_single({{"kind", "eigs"}, {"domain", domain_arg(domain, "--domain")}, {"grid", grid_json()},
                               {"modes", modes}, {"eigenfunctions", eigenfunctions}},
                              out_or("eigs.json"), seed, tol);
        }
        if (*logcc) {
            if (*logcc_kernel) {
                return run_single({{"kind", "logcc"}, {"kernel", from}}, out_or("logcc.json"), seed, tol);
            }
            if (input.empty()) throw pl::ConfigError("logcc: --input or the kernel subcommand is required");
            return run_single({{"kind", "logcc"}, {"input", input}}, out_or("logcc.json"), seed, tol);
        }
        if (*trace) {
            json st = {{"kind", "trace"}, {"domain", domain_arg(domain, "--domain")}, {"tmin", tmin},
                       {"tmax", tmax}, {"samples", samples}, {"method", method_or("spectral")}, {"modes", modes},
                       {"levels", levels_json()}, {"compare_eigenvalue", compare}};
            if (ppu > 0.0) st["points_per_unit"] = ppu;
            return run_single(st, out_or("trace.csv"), seed, tol);
        }
        if (*bm) {
            json st = {{"kind", "bm"}, {"omega0", domain_arg(omega0, "--omega0")},
                       {"omega1", domain_arg(omega1, "--omega1")}, {"t", comma_list(t_list)},
                       {"method", method_or("spectral")}, {"form", form}, {"modes", modes}};
            if (!s_list.empty()) st["s"] = comma_list(s_list);
            if (ppu > 0.0) st["points_per_unit"] = ppu;
            return run_single(st, out_or("bm.json"), seed, tol);
        }
        if (*evolve) {
            json st = {{"kind", "evolve"}, {"domain", domain_arg(domain, "--domain")}, {"grid", grid_json()},
                       {"u0", u0}, {"times", comma_list(times)}, {"method", method_or("spectral")}, {"modes", modes},
                       {"levels", levels_json()}};
            return run_single(st, fs::path(out_or("evolve_out")) / "evolve.json", seed, tol);
        }
        if (*run) {
            json cfg = pl::load_config(config);
            if (!out.empty()) cfg["output"] = out;
            if (seed_override) cfg["seed"] = *seed_override;
            if (!tol.empty()) cfg["tolerance"] = tol;
            const pl::RunOutcome r = pl::run(cfg);
            for (const auto& st : r.stages) {
                std::printf("[%s] %s (%.2fs)\n", st.passed() ? "PASS" : "FAIL", st.name.c_str(), st.seconds);
                for (const auto& c : st.checks) {
                    if (!c.pass) std::printf("    failed %s value=%s threshold=%s\n", c.name.c_str(),
                                             pl::format_number(c.value).c_str(),
                                             pl::format_number(c.threshold).c_str());
                }
            }
            if (!r.message.empty()) std::fprintf(stderr, "oulab: %s\n", r.message.c_str());
            if (!r.manifest.empty()) std::printf("manifest %s\n", r.manifest.string().c_str());
            return r.exit_code;
        }
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "oulab: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "oulab: %s\n", e.what());
        return 1;
    }
    return 2;
}
