#include "acdii/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "acdii/config.hpp"
#include "acdii/error.hpp"
#include "acdii/field_io.hpp"
#include "acdii/geometry.hpp"

namespace acdii::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct Context {
    RunConfig config;
    fs::path out_dir;
    bool quiet = false;
    std::ostream* out = nullptr;
};

ordered_json header(const Context& ctx, const char* command) {
    return {{"command", command}, {"version", ACDII_VERSION}, {"config_hash", hex64(ctx.config.hash())}};
}

void write_json(const fs::path& path, const ordered_json& j) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("cannot open for writing: " + path.string());
    os << j.dump(2) << '\n';
}

ordered_json read_json(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot read: " + path.string());
    try {
        return ordered_json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path.filename().string() + ": " + e.what());
    }
}

ordered_json grid_json(const Grid2D& g) {
    return {{"nx", g.nx()}, {"ny", g.ny()}, {"hx", g.hx()}, {"hy", g.hy()}, {"x0", g.x0()}, {"y0", g.y0()}};
}

// NaN and infinities have no JSON encoding.
ordered_json num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

void say(const Context& ctx, const std::string& line) {
    if (!ctx.quiet) *ctx.out << line << '\n';
}

int cmd_forward(const Context& ctx) {
    const RunConfig& cf = ctx.config;
    const auto g = cf.build_grid();
    const auto c = cf.make_c(g);
    const auto s0 = cf.make_sigma0(g);
    const auto f = cf.make_f(g);
    const auto inc = cf.make_inclusions(g);
    const auto sigma = s0.scaled(c);

    SolveStats stats;
    const auto u = solve_dirichlet(assemble(c, s0, &inc), f, cf.solve, &stats);
    const auto j = compute_current(u, c, s0, &inc);
    const auto a = compute_a(j, s0);

    ordered_json s = header(ctx, "forward");
    s["grid"] = grid_json(*g);
    s["solver"] = {{"iterations", stats.iterations}, {"relative_residual", stats.relative_residual}};
    s["energy"] = {{"midpoint", energy(u, sigma, &inc, std::nullopt, Quadrature::midpoint)},
                   {"exact", energy(u, sigma, &inc, std::nullopt, Quadrature::exact)}};
    if (!inc.perfect.empty()) {
        const auto lad = inclusion_ladder(sigma, f, inc, cf.k_ladder, cf.quadrature, cf.solve);
        ordered_json steps = ordered_json::array();
        for (const auto& st : lad.steps) steps.push_back({{"k", st.k}, {"error", st.error}, {"energy", st.energy}});
        s["ladder"] = {{"steps", steps}, {"limit_energy", lad.limit_energy}, {"monotone", lad.monotone}};
    }
    save_field(ctx.out_dir / "u.field", to_field_file(u));
    save_field(ctx.out_dir / "J.field", to_field_file(j));
    save_field(ctx.out_dir / "a.field", to_field_file(a));
    write_json(ctx.out_dir / "summary.json", s);
    say(ctx, (ctx.out_dir / "summary.json").string());
    return kOk;
}

int cmd_synth(const Context& ctx) {
    const RunConfig& cf = ctx.config;
    const auto g = cf.build_grid();
    SynthOptions so;
    so.solve = cf.solve;
    so.perfect_k = cf.perfect_k;
    const auto t = synthesize_triplet(cf.make_c(g), cf.make_sigma0(g), cf.make_f(g), cf.make_inclusions(g), cf.noise,
                                      so);
    save_triplet(ctx.out_dir, t);
    say(ctx, (ctx.out_dir / "triplet.json").string());
    return kOk;
}

TVProblem problem_for(const RunConfig& cf, const AdmissibleTriplet& t) {
    TVProblem p = TVProblem::from(t);
    p.fixed_point = cf.fixed_point;
    p.primal_dual = cf.primal_dual;
    return p;
}

int cmd_invert(const Context& ctx, const fs::path& input) {
    const RunConfig& cf = ctx.config;
    const auto t = load_triplet(input);
    const TVProblem p = problem_for(cf, t);

    ordered_json r = header(ctx, "invert");
    r["grid"] = grid_json(*t.grid);
    r["inverse_crime"] = t.provenance.inverse_crime;
    r["noise"] = {{"level", t.provenance.noise.level}, {"seed", t.provenance.noise.seed}};
    r["algorithm"] = cf.algorithm;

    std::optional<ScalarField> u_fp, u_pd;
    if (cf.algorithm != "primaldual") {
        FixedPointDiagnostics d;
        u_fp = minimize_tv_fixedpoint(p, &d);
        r["fixed_point"] = {{"eps0", d.eps0},
                            {"eps", d.eps},
                            {"inner_iterations", d.inner_iterations},
                            {"final_change", d.final_change},
                            {"increases", d.increases},
                            {"converged", d.converged},
                            {"functional", d.functional.empty() ? 0.0 : d.functional.back()}};
    }
    if (cf.algorithm != "fixedpoint") {
        auto res = minimize_tv_primal_dual(p);
        const auto& d = res.diag;
        r["primal_dual"] = {{"tau", d.tau},
                            {"sigma", d.sigma},
                            {"iterations", d.iterations},
                            {"functional", d.functional.empty() ? 0.0 : d.functional.back()},
                            {"gap", d.gap},
                            {"divergence_residual", d.divergence_residual},
                            {"feasibility", d.feasibility}};
        u_pd = std::move(res.u);
    }
    if (u_fp && u_pd) r["cross_algorithm_distance"] = relative_l2(*u_pd, *u_fp);
    const ScalarField& u = u_fp ? *u_fp : *u_pd;

    const auto rec = recover_c(u, t.a, t.sigma0, cf.recovery);
    const auto gap = duality_gap(u, t.f, data_current(u, t.a, t.sigma0), t.a, t.sigma0);
    r["functional"] = gap.functional;
    r["duality_gap"] = {{"functional", gap.functional}, {"boundary", gap.boundary}, {"relative", gap.gap}};
    r["recovery"] = {{"z_cells", rec.z_cells}, {"gamma_cells", rec.gamma_cells}, {"flat_cells", rec.flat_cells}};

    ordered_json labels = ordered_json::array();
    for (const auto& l : classify_inclusions(u, t.a, rec.mask_z, cf.classify))
        labels.push_back({{"first_cell", l.first_cell},
                          {"cells", l.cells},
                          {"label", l.label},
                          {"max_grad", l.max_grad},
                          {"max_a", l.max_a},
                          {"oscillation", l.oscillation},
                          {"holder", num(l.holder)}});
    r["inclusions"] = labels;

    if (t.provenance.c_true || t.provenance.u_true) {
        ordered_json e = ordered_json::object();
        if (t.provenance.c_true) {
            const auto& ct = *t.provenance.c_true;
            double linf = 0.0, num2 = 0.0, den2 = 0.0;
            for (std::size_t k = 0; k < ct.size(); ++k) {
                if (!t.grid->cell_in_domain(k) || rec.mask_z[k]) continue;
                const double d = rec.c[k] - ct[k];
                linf = std::max(linf, std::abs(d) / std::abs(ct[k]));
                num2 += d * d;
                den2 += ct[k] * ct[k];
            }
            e["c_rel_linf"] = linf;
            e["c_rel_l2"] = den2 > 0 ? std::sqrt(num2 / den2) : 0.0;
        }
        if (t.provenance.u_true) e["u_rel_l2"] = relative_l2(u, *t.provenance.u_true);
        r["error_vs_truth"] = e;
    }

    // The report directory is also a triplet directory, so verify can run on it.
    save_triplet(ctx.out_dir, t);
    save_field(ctx.out_dir / "u_star.field", to_field_file(u));
    save_field(ctx.out_dir / "c_rec.field", to_field_file(rec.c));
    CellScalar mask(t.grid);
    for (std::size_t k = 0; k < mask.size(); ++k) mask[k] = rec.mask_z[k];
    save_field(ctx.out_dir / "mask_z.field", to_field_file(mask));
    write_json(ctx.out_dir / "report.json", r);
    say(ctx, (ctx.out_dir / "report.json").string());
    return kOk;
}

int cmd_verify(const Context& ctx, const fs::path& input) {
    const RunConfig& cf = ctx.config;
    const auto& vs = cf.verify;
    const auto t = load_triplet(input);
    const GridPtr& g = t.grid;

    std::string subject;
    ScalarField u;
    if (fs::exists(input / "u_star.field")) {
        subject = "u_star";
        u = node_scalar_from(load_field(input / "u_star.field"), g);
    } else if (t.provenance.u_true) {
        subject = "u_true";
        u = *t.provenance.u_true;
    } else {
        subject = "minimizer";
        u = minimize_tv_fixedpoint(problem_for(cf, t));
    }

    ordered_json r = header(ctx, "verify");
    r["subject"] = subject;
    bool all = true;
    auto record = [&](const char* name, ordered_json j, bool pass) {
        j["pass"] = pass;
        all = all && pass;
        r["audits"][name] = std::move(j);
    };

    const auto mini = minimality_audit(u, t.a, t.sigma0, vs.minimality_trials, vs.seed, vs.minimality_tol);
    record("minimality",
           {{"trials", mini.margins.size()}, {"min_margin", mini.min_margin}, {"negatives", mini.negatives},
            {"tol", mini.tol}},
           mini.negatives == 0);

    const auto gap = duality_gap(u, t.f, data_current(u, t.a, t.sigma0), t.a, t.sigma0);
    record("duality",
           {{"functional", gap.functional}, {"boundary", gap.boundary}, {"relative", gap.gap}, {"tol", vs.duality_tol}},
           gap.gap <= vs.duality_tol);

    const auto co = coarea_audit(u, t.a, t.sigma0, cf.geometry.coarea_levels);
    record("coarea",
           {{"levels", co.levels}, {"functional", co.functional}, {"level_integral", co.level_integral},
            {"discrepancy", co.discrepancy}, {"tol", vs.coarea_tol}},
           co.discrepancy <= vs.coarea_tol);

    // Control: sigma0 with its eigenvalues exchanged, tr(sigma0) I - sigma0.
    std::vector<Sym2> sw(t.sigma0.size());
    bool isotropic = true;
    for (std::size_t k = 0; k < sw.size(); ++k) {
        const Sym2& s = t.sigma0[k];
        sw[k] = {s.s22, -s.s12, s.s11};
        isotropic = isotropic && s.s11 == s.s22 && s.s12 == 0.0;
    }
    const double matched = curvature_residual(u, build_metric(t.a, t.sigma0)).l2;
    if (isotropic) {
        r["audits"]["curvature"] = {{"matched_l2", matched}, {"applicable", false}};
    } else {
        const double swapped = curvature_residual(u, build_metric(t.a, TensorField2(g, sw))).l2;
        record("curvature",
               {{"matched_l2", matched}, {"swapped_l2", swapped}, {"required_ratio", vs.curvature_ratio}},
               matched == 0.0 || swapped >= vs.curvature_ratio * matched);
    }

    double lo = 1e300, hi = -1e300;
    for (std::size_t n = 0; n < u.size(); ++n)
        if (g->in_domain(n)) {
            lo = std::min(lo, u[n]);
            hi = std::max(hi, u[n]);
        }
    const double range = hi - lo;

    std::vector<ScalarField> comps;
    comps.push_back(solve_dirichlet(assemble(CellScalar(g, 1.0), t.sigma0), t.f, cf.solve));
    comps.push_back(solve_dirichlet(assemble(CellScalar(g, 1.0), TensorField2(g, Sym2::identity())), t.f, cf.solve));
    for (int k = 1; static_cast<int>(comps.size()) < cf.geometry.competitors; ++k) {
        ScalarField v = u;
        const auto w = smooth_perturbation(g, 0.02 * k * range, vs.seed + k);
        for (std::size_t n = 0; n < v.size(); ++n) v[n] += w[n];
        comps.push_back(std::move(v));
    }
    comps.resize(cf.geometry.competitors);
    const auto levels = regular_levels(u, cf.geometry.levels);
    const auto area = area_minimality_audit(u, comps, t.a, t.sigma0, levels, vs.area_tol);
    record("area_minimality",
           {{"levels", levels.size()}, {"competitors", comps.size()}, {"violations", area.violations},
            {"weighted_violations", area.weighted_violations}, {"min_margin", area.min_margin},
            {"min_weighted_margin", area.min_weighted_margin}, {"tol", vs.area_tol}},
           area.violations == 0);

    const auto mid = regular_levels(u, 1);
    if (!mid.empty() && range > 0.0) {
        std::vector<double> eps;
        for (double e : cf.geometry.truncation_eps) eps.push_back(e * range);
        const auto tr = truncation_limit_audit(u, t.a, t.sigma0, mid[0], eps);
        record("truncation",
               {{"level", tr.level}, {"eps", tr.eps}, {"values", tr.values}, {"euclidean", tr.euclidean},
                {"weighted", tr.weighted}, {"rel_to_euclidean", tr.rel_to_euclidean},
                {"rel_to_weighted", tr.rel_to_weighted}, {"cauchy", tr.cauchy}, {"tol", vs.truncation_tol}},
               tr.cauchy <= vs.truncation_tol);
    }

    if (!t.inclusions.perfect.empty() && t.provenance.c_true) {
        const auto sigma = t.sigma0.scaled(*t.provenance.c_true);
        const auto lad = inclusion_ladder(sigma, t.f, t.inclusions, cf.k_ladder, cf.quadrature, cf.solve);
        ordered_json steps = ordered_json::array();
        double best = 1e300;
        for (const auto& st : lad.steps) {
            steps.push_back({{"k", st.k}, {"error", st.error}, {"energy", st.energy}});
            best = std::min(best, st.error);
        }
        const double de = std::abs(lad.steps.back().energy - lad.limit_energy) / lad.limit_energy;
        record("inclusion_ladder",
               {{"steps", steps}, {"limit_energy", lad.limit_energy}, {"monotone", lad.monotone},
                {"energy_discrepancy", de}, {"tol", vs.ladder_tol}},
               lad.monotone && best <= vs.ladder_tol && de <= vs.ladder_tol);
    }

    r["all_pass"] = all;
    write_json(ctx.out_dir / "audits.json", r);
    say(ctx, (ctx.out_dir / "audits.json").string());
    return kOk;
}

int cmd_report(const Context& ctx, const fs::path& input) {
    std::ostream& os = *ctx.out;
    bool any = false;
    if (fs::exists(input / "report.json")) {
        any = true;
        const auto r = read_json(input / "report.json");
        os << "reconstruction (" << r.value("algorithm", "") << ", config " << r.value("config_hash", "") << ")\n";
        os << "  F[u*]            " << r["functional"].dump() << '\n';
        os << "  duality gap      " << r["duality_gap"]["relative"].dump() << '\n';
        if (r.contains("cross_algorithm_distance"))
            os << "  fp vs pd         " << r["cross_algorithm_distance"].dump() << '\n';
        if (r.contains("error_vs_truth"))
            for (const auto& [k, v] : r["error_vs_truth"].items()) os << "  " << k << std::string(17 - k.size(), ' ')
                                                                      << v.dump() << '\n';
        os << "  masked cells     " << r["recovery"]["z_cells"].dump() << '\n';
        for (const auto& l : r["inclusions"])
            os << "  inclusion @" << l["first_cell"].dump() << " (" << l["cells"].dump()
               << " cells): " << l["label"].get<std::string>() << '\n';
    }
    if (fs::exists(input / "audits.json")) {
        any = true;
        const auto a = read_json(input / "audits.json");
        os << "audits (" << a.value("subject", "") << ")\n";
        for (const auto& [k, v] : a["audits"].items()) {
            const char* status = !v.contains("pass") ? "n/a " : v["pass"].get<bool>() ? "PASS" : "FAIL";
            os << "  " << status << ' ' << k << '\n';
        }
        os << "  all_pass " << a["all_pass"].dump() << '\n';
    }
    if (!any) throw InputError("no report.json or audits.json in " + input.string());
    return kOk;
}

void error_json(std::ostream& err, const char* kind, const std::string& msg) {
    err << ordered_json{{"error", {{"kind", kind}, {"message", msg}}}}.dump() << '\n';
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Anisotropic conductivity imaging from one internal current-density functional", "acdii"};
    app.set_version_flag("--version", ACDII_VERSION);
    app.require_subcommand(1);

    std::string config_path, out_dir, input;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "run configuration (JSON)")->required();
        sub->add_option("--out", out_dir, "output directory (overrides output.directory)");
        sub->add_option("--seed", seed, "overrides noise.seed and verify.seed");
        sub->add_flag("--quiet", quiet, "suppress progress output");
    };
    auto* fwd = app.add_subcommand("forward", "forward solve: u, J, a, energies");
    auto* syn = app.add_subcommand("synth", "synthesize an admissible triplet");
    auto* inv = app.add_subcommand("invert", "minimize, recover c, classify inclusions");
    auto* ver = app.add_subcommand("verify", "run the structural audits");
    auto* rep = app.add_subcommand("report", "summarize report.json / audits.json");
    for (auto* s : {fwd, syn, inv, ver, rep}) common(s);
    for (auto* s : {inv, ver, rep}) s->add_option("input", input, "triplet or report directory")->required();

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << ACDII_VERSION << '\n';
        return kOk;
    } catch (const CLI::ParseError& e) {
        error_json(err, "usage", e.what());
        return kInput;
    }

    try {
        Context ctx;
        ctx.config = RunConfig::load(config_path);
        if (seed) ctx.config.set_seed(*seed);
        ctx.config.build_grid();
        ctx.quiet = quiet;
        ctx.out = &out;
        ctx.out_dir = out_dir.empty() ? fs::path(ctx.config.output) : fs::path(out_dir);
        if (!rep->parsed()) fs::create_directories(ctx.out_dir);

        if (fwd->parsed()) return cmd_forward(ctx);
        if (syn->parsed()) return cmd_synth(ctx);
        if (inv->parsed()) return cmd_invert(ctx, input);
        if (ver->parsed()) return cmd_verify(ctx, input);
        return cmd_report(ctx, input);
    } catch (const InputError& e) {
        error_json(err, "input", e.what());
        return kInput;
    } catch (const NumericalError& e) {
        error_json(err, "numerical", e.what());
        return kNumerical;
    } catch (const fs::filesystem_error& e) {
        error_json(err, "input", e.what());
        return kInput;
    } catch (const std::exception& e) {
        error_json(err, "internal", e.what());
        return kNumerical;
    }
}

} // namespace acdii::cli
