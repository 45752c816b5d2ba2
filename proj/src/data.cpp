#include "acdii/data.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "acdii/error.hpp"
#include "acdii/field_io.hpp"

namespace acdii {

using nlohmann::ordered_json;

VectorField2 compute_current(const ScalarField& u, const CellScalar& c, const TensorField2& sigma0,
                             const InclusionSet* inclusions) {
    const Grid2D& g = u.grid();
    VectorField2 j(u.grid_ptr());
    CellMask insul = inclusions ? inclusions->insulating_cells(g) : CellMask(g.num_cells(), 0);
    for (std::size_t k = 0; k < g.num_cells(); ++k) {
        if (!g.cell_in_domain(k)) continue;
        if (insul[k]) {
            j.set(k, {0.0, 0.0});
            continue;
        }
        j.set(k, -c[k] * sigma0[k].apply(cell_gradient(u, k)));
    }
    return j;
}

CellScalar compute_a(const VectorField2& j, const TensorField2& sigma0) {
    const Grid2D& g = j.grid();
    CellScalar a(j.grid_ptr(), std::nan(""));
    for (std::size_t k = 0; k < g.num_cells(); ++k)
        if (g.cell_in_domain(k)) a[k] = inv_norm_in(sigma0[k], j.at(k));
    return a;
}

CellScalar add_noise(const CellScalar& a, double level, std::uint64_t seed) {
    if (!(level >= 0.0)) throw InputError("noise level must be >= 0");
    CellScalar out = a;
    if (level == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Grid2D& g = a.grid();
    for (std::size_t k = 0; k < g.num_cells(); ++k) {
        if (!g.cell_in_domain(k)) continue;
        const double z = normal(rng);
        out[k] = std::max(0.0, a[k] * (1.0 + level * z));
    }
    return out;
}

AdmissibleTriplet synthesize_triplet(const CellScalar& c_true, const TensorField2& sigma0, const ScalarField& f,
                                     const InclusionSet& inclusions, const NoiseSpec& noise,
                                     const SynthOptions& opts) {
    const GridPtr& grid = f.grid_ptr();
    const Grid2D& g = *grid;
    ScalarField u;
    if (inclusions.empty()) {
        u = solve_dirichlet(assemble(c_true, sigma0), f, opts.solve);
    } else {
        inclusions.validate(g);
        u = solve_dirichlet(assemble(c_true, sigma0, &inclusions), f, opts.solve);
    }
    VectorField2 j = compute_current(u, c_true, sigma0, &inclusions);

    if (!inclusions.perfect.empty()) {
        // Inside a perfect conductor grad u = 0 but J does not vanish: take it from the
        // finite-contrast problem with sigma1 = c sigma0.
        CellScalar c_fill = c_true;
        for (std::size_t k = 0; k < g.num_cells(); ++k)
            if (g.cell_in_domain(k) && !(c_fill[k] > 0.0)) c_fill[k] = 1.0;
        const TensorField2 sigma = sigma0.scaled(c_fill);
        const double k = opts.perfect_k;
        const ScalarField uk = solve_penalized(k, sigma, sigma, f, inclusions, opts.solve);
        const CellMask perf = inclusions.perfect_cells(g);
        for (std::size_t c = 0; c < g.num_cells(); ++c)
            if (perf[c]) j.set(c, (-1.0 / k) * sigma[c].apply(cell_gradient(uk, c)));
    }

    CellScalar a = compute_a(j, sigma0);
    const CellMask insul = inclusions.insulating_cells(g);
    for (std::size_t k = 0; k < g.num_cells(); ++k)
        if (insul[k]) a[k] = 0.0;
    a = add_noise(a, noise.level, noise.seed);

    AdmissibleTriplet t{grid, f, sigma0, a, inclusions, {}};
    t.provenance.c_true = c_true;
    t.provenance.u_true = u;
    t.provenance.noise = noise;
    t.provenance.inverse_crime = true;
    return t;
}

namespace {

void write_text(const std::filesystem::path& p, const std::string& s) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw InputError("cannot open for writing: " + p.string());
    os << s;
}

FieldFile load_named(const std::filesystem::path& dir, const ordered_json& files, const char* key) {
    if (!files.contains(key)) throw InputError(std::string("missing field: ") + key);
    const auto path = dir / files.at(key).get<std::string>();
    if (!std::filesystem::exists(path)) throw InputError(std::string("missing field: ") + key);
    return load_field(path);
}

} // namespace

void save_triplet(const std::filesystem::path& dir, const AdmissibleTriplet& t) {
    std::filesystem::create_directories(dir);
    const Grid2D& g = *t.grid;
    ordered_json files = ordered_json::object();
    auto put = [&](const char* key, const FieldFile& ff) {
        const std::string name = std::string(key) + ".field";
        save_field(dir / name, ff);
        files[key] = name;
    };
    put("f", to_field_file(t.f));
    put("sigma0", to_field_file(t.sigma0));
    put("a", to_field_file(t.a));
    put("labels", to_field_file(t.inclusions.labels(t.grid)));
    if (!g.full_mask()) {
        ScalarField mask(t.grid, 0.0);
        for (std::size_t n = 0; n < g.num_nodes(); ++n) mask[n] = g.in_domain(n) ? 1.0 : 0.0;
        put("mask", to_field_file(mask));
    }
    if (t.provenance.c_true) put("c_true", to_field_file(*t.provenance.c_true));
    if (t.provenance.u_true) put("u_true", to_field_file(*t.provenance.u_true));

    ordered_json m;
    m["schema"] = "acdii-triplet/1";
    m["grid"] = {{"nx", g.nx()}, {"ny", g.ny()}, {"hx", g.hx()}, {"hy", g.hy()}, {"x0", g.x0()}, {"y0", g.y0()}};
    m["files"] = files;
    m["noise"] = {{"level", t.provenance.noise.level}, {"seed", t.provenance.noise.seed}};
    m["inverse_crime"] = t.provenance.inverse_crime;
    write_text(dir / "triplet.json", m.dump(2) + "\n");
}

AdmissibleTriplet load_triplet(const std::filesystem::path& dir) {
    const auto mpath = dir / "triplet.json";
    std::ifstream is(mpath);
    if (!is) throw InputError("missing triplet manifest: " + mpath.string());
    ordered_json m;
    try {
        m = ordered_json::parse(is);
        if (m.at("schema").get<std::string>() != "acdii-triplet/1") throw InputError("triplet: unknown schema");
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("triplet manifest: ") + e.what());
    }
    const auto& gj = m.at("grid");
    const auto& files = m.at("files");
    const int nx = gj.at("nx"), ny = gj.at("ny");
    std::vector<std::uint8_t> mask;
    if (files.contains("mask")) {
        const FieldFile mf = load_named(dir, files, "mask");
        if (mf.nx != nx || mf.ny != ny || mf.kind != FieldKind::scalar) throw InputError("triplet: mask shape mismatch");
        mask.resize(mf.data.size());
        for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = mf.data[i] != 0.0;
    }
    const GridPtr grid = make_grid(Grid2D(nx, ny, gj.at("hx"), gj.at("hy"), gj.at("x0"), gj.at("y0"), mask));

    AdmissibleTriplet t;
    t.grid = grid;
    t.f = node_scalar_from(load_named(dir, files, "f"), grid);
    t.sigma0 = tensor_from(load_named(dir, files, "sigma0"), grid);
    t.a = cell_scalar_from(load_named(dir, files, "a"), grid);
    t.inclusions = InclusionSet::from_labels(cell_scalar_from(load_named(dir, files, "labels"), grid));
    if (files.contains("c_true")) t.provenance.c_true = cell_scalar_from(load_named(dir, files, "c_true"), grid);
    if (files.contains("u_true")) t.provenance.u_true = node_scalar_from(load_named(dir, files, "u_true"), grid);
    if (m.contains("noise")) {
        t.provenance.noise.level = m["noise"].at("level");
        t.provenance.noise.seed = m["noise"].at("seed");
    }
    t.provenance.inverse_crime = m.value("inverse_crime", true);
    for (std::size_t k = 0; k < grid->num_cells(); ++k)
        if (grid->cell_in_domain(k) && !(t.a[k] >= 0.0)) throw InputError("triplet: a must be >= 0");
    return t;
}

} // namespace acdii
