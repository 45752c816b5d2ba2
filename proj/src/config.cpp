#include "acdii/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "acdii/error.hpp"

namespace acdii {

using nlohmann::ordered_json;

namespace {

// Typed access to one JSON object with unknown-key rejection.
class Section {
public:
    Section(const ordered_json& j, std::string path, std::initializer_list<const char*> keys)
        : j_(j), path_(std::move(path)) {
        if (!j.is_object()) throw InputError("config: " + path_ + " must be an object");
        for (const auto& [k, v] : j.items()) {
            bool known = false;
            for (const char* a : keys) known = known || k == a;
            if (!known) throw InputError("config: unknown key " + where(k));
        }
    }

    bool has(const char* key) const { return j_.contains(key); }
    const ordered_json& at(const char* key) const { return j_.at(key); }
    std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    template <class T>
    void get(const char* key, T& out) const {
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw InputError("config: wrong type for " + where(key));
        }
    }

    void positive(const char* key, double& out) const {
        get(key, out);
        if (!(out > 0.0) || !std::isfinite(out)) throw InputError("config: " + where(key) + " must be positive");
    }

    void positive(const char* key, int& out) const {
        get(key, out);
        if (out <= 0) throw InputError("config: " + where(key) + " must be positive");
    }

    void point(const char* key, Vec2& out) const {
        std::vector<double> v{out.x, out.y};
        get(key, v);
        if (v.size() != 2) throw InputError("config: " + where(key) + " must have 2 entries");
        out = {v[0], v[1]};
    }

private:
    const ordered_json& j_;
    std::string path_;
};

void positive_list(const Section& s, const char* key, std::vector<double>& out) {
    s.get(key, out);
    if (out.empty()) throw InputError("config: " + s.where(key) + " must not be empty");
    for (double v : out)
        if (!(v > 0.0)) throw InputError("config: " + s.where(key) + " entries must be positive");
}

ordered_json scalar_json(const ScalarSpec& s) {
    if (s.type == "constant") return {{"type", s.type}, {"value", s.value}};
    return {{"type", s.type},
            {"amplitude", s.amplitude},
            {"width", s.width},
            {"center", {s.center.x, s.center.y}}};
}

ordered_json tensor_json(const TensorSpec& t) {
    if (t.type == "constant") return {{"type", t.type}, {"tensor", {t.tensor.s11, t.tensor.s12, t.tensor.s22}}};
    return {{"type", t.type}, {"eigenvalues", {t.l1, t.l2}}, {"angle", t.angle}};
}

ordered_json to_json(const RunConfig& c) {
    ordered_json j;
    j["grid"] = {{"nx", c.nx}, {"ny", c.ny}, {"hx", c.hx}, {"hy", c.hy}, {"origin", {c.x0, c.y0}}};
    if (c.disk_domain)
        j["grid"]["disk"] = {{"center", {c.disk_domain->first.x, c.disk_domain->first.y}},
                             {"radius", c.disk_domain->second}};
    j["truth"] = {{"c", scalar_json(c.c)}, {"sigma0", tensor_json(c.sigma0)}, {"f", c.f}};
    ordered_json inc = ordered_json::array();
    for (const auto& s : c.inclusions) {
        ordered_json e{{"label", s.label}, {"shape", s.shape}};
        if (s.shape == "disk") {
            e["center"] = {s.center.x, s.center.y};
            e["radius"] = s.radius;
        } else {
            e["x"] = {s.x0, s.x1};
            e["y"] = {s.y0, s.y1};
        }
        inc.push_back(e);
    }
    j["inclusions"] = inc;
    j["noise"] = {{"level", c.noise.level}, {"seed", c.noise.seed}};
    j["forward"] = {{"tol", c.solve.tol},
                    {"max_iter", c.solve.max_iter},
                    {"quadrature", c.quadrature == Quadrature::exact ? "exact" : "midpoint"},
                    {"k_ladder", c.k_ladder},
                    {"perfect_k", c.perfect_k}};
    const auto& fp = c.fixed_point;
    const auto& pd = c.primal_dual;
    j["inverse"] = {{"algorithm", c.algorithm},
                    {"eps0", fp.eps0},
                    {"eps_ratio", fp.ratio},
                    {"stages", fp.stages},
                    {"tol", fp.tol},
                    {"max_inner", fp.max_inner},
                    {"anderson", fp.anderson},
                    {"pd_tol", pd.tol},
                    {"pd_max_iter", pd.max_iter},
                    {"pd_tau", pd.tau},
                    {"pd_sigma", pd.sigma},
                    {"delta", c.recovery.delta},
                    {"delta_a", c.recovery.delta_a},
                    {"holder_threshold", c.classify.holder_threshold}};
    const auto& g = c.geometry;
    j["geometry"] = {{"levels", g.levels},
                     {"coarea_levels", g.coarea_levels},
                     {"competitors", g.competitors},
                     {"truncation_eps", g.truncation_eps}};
    const auto& v = c.verify;
    j["verify"] = {{"seed", v.seed},
                   {"minimality_trials", v.minimality_trials},
                   {"minimality_tol", v.minimality_tol},
                   {"duality_tol", v.duality_tol},
                   {"coarea_tol", v.coarea_tol},
                   {"area_tol", v.area_tol},
                   {"curvature_ratio", v.curvature_ratio},
                   {"truncation_tol", v.truncation_tol},
                   {"ladder_tol", v.ladder_tol}};
    j["output"] = {{"directory", c.output}};
    return j;
}

void read_scalar(const ordered_json& j, const std::string& path, ScalarSpec& s) {
    Section sec(j, path, {"type", "value", "amplitude", "width", "center"});
    sec.get("type", s.type);
    if (s.type == "constant") {
        sec.get("value", s.value);
        if (!(s.value > 0.0)) throw InputError("config: " + path + ".value must be positive");
    } else if (s.type == "bump") {
        sec.get("amplitude", s.amplitude);
        sec.positive("width", s.width);
        sec.point("center", s.center);
        if (!(s.amplitude > -1.0)) throw InputError("config: " + path + ".amplitude must exceed -1");
    } else {
        throw InputError("config: " + path + ".type must be constant or bump");
    }
}

void read_tensor(const ordered_json& j, const std::string& path, TensorSpec& t) {
    Section sec(j, path, {"type", "tensor", "eigenvalues", "angle"});
    sec.get("type", t.type);
    if (t.type == "constant") {
        std::vector<double> v{t.tensor.s11, t.tensor.s12, t.tensor.s22};
        sec.get("tensor", v);
        if (v.size() != 3) throw InputError("config: " + path + ".tensor must be [s11, s12, s22]");
        t.tensor = {v[0], v[1], v[2]};
        if (!(t.tensor.s11 > 0.0 && t.tensor.det() > 0.0))
            throw InputError("config: " + path + ".tensor must be positive definite");
    } else if (t.type == "rotated") {
        std::vector<double> e{t.l1, t.l2};
        sec.get("eigenvalues", e);
        if (e.size() != 2 || !(e[0] > 0.0 && e[1] > 0.0))
            throw InputError("config: " + path + ".eigenvalues must be two positive numbers");
        t.l1 = e[0];
        t.l2 = e[1];
        sec.get("angle", t.angle);
    } else {
        throw InputError("config: " + path + ".type must be constant or rotated");
    }
}

ShapeSpec read_shape(const ordered_json& j, const std::string& path) {
    Section sec(j, path, {"label", "shape", "center", "radius", "x", "y"});
    ShapeSpec s;
    sec.get("label", s.label);
    sec.get("shape", s.shape);
    if (s.label != "perfect" && s.label != "insulating")
        throw InputError("config: " + path + ".label must be perfect or insulating");
    if (s.shape == "disk") {
        sec.point("center", s.center);
        sec.positive("radius", s.radius);
    } else if (s.shape == "rect") {
        Vec2 x{0, 0}, y{0, 0};
        sec.point("x", x);
        sec.point("y", y);
        s.x0 = x.x;
        s.x1 = x.y;
        s.y0 = y.x;
        s.y1 = y.y;
        if (!(s.x1 > s.x0 && s.y1 > s.y0)) throw InputError("config: " + path + " has an empty rectangle");
    } else {
        throw InputError("config: " + path + ".shape must be disk or rect");
    }
    return s;
}

} // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

RunConfig RunConfig::parse(std::string_view text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("config: ") + e.what());
    }
    RunConfig c;
    Section top(j, "", {"grid", "truth", "inclusions", "noise", "inverse", "forward", "geometry", "verify", "output"});

    if (top.has("grid")) {
        Section g(top.at("grid"), "grid", {"nx", "ny", "hx", "hy", "origin", "disk"});
        g.get("nx", c.nx);
        g.get("ny", c.ny);
        if (c.nx < 3 || c.ny < 3) throw InputError("config: grid.nx and grid.ny must be >= 3");
        if (g.has("hx")) g.positive("hx", c.hx);
        if (g.has("hy")) g.positive("hy", c.hy);
        Vec2 o{0, 0};
        g.point("origin", o);
        c.x0 = o.x;
        c.y0 = o.y;
        if (g.has("disk")) {
            Section d(g.at("disk"), "grid.disk", {"center", "radius"});
            Vec2 ctr{0.5, 0.5};
            double r = 0.5;
            d.point("center", ctr);
            d.get("radius", r);
            if (!(r >= 0.0)) throw InputError("config: grid.disk.radius must be >= 0");
            c.disk_domain = std::make_pair(ctr, r);
        }
    }
    if (c.hx == 0.0) c.hx = 1.0 / (c.nx - 1);
    if (c.hy == 0.0) c.hy = 1.0 / (c.ny - 1);

    if (top.has("truth")) {
        Section t(top.at("truth"), "truth", {"c", "sigma0", "f"});
        if (t.has("c")) read_scalar(t.at("c"), "truth.c", c.c);
        if (t.has("sigma0")) read_tensor(t.at("sigma0"), "truth.sigma0", c.sigma0);
        t.get("f", c.f);
        if (c.f.size() != 3) throw InputError("config: truth.f must be [fx, fy, f0]");
    }

    if (top.has("inclusions")) {
        const auto& arr = top.at("inclusions");
        if (!arr.is_array()) throw InputError("config: inclusions must be an array");
        for (std::size_t k = 0; k < arr.size(); ++k)
            c.inclusions.push_back(read_shape(arr[k], "inclusions[" + std::to_string(k) + "]"));
    }

    if (top.has("noise")) {
        Section n(top.at("noise"), "noise", {"level", "seed"});
        n.get("level", c.noise.level);
        n.get("seed", c.noise.seed);
        if (!(c.noise.level >= 0.0)) throw InputError("config: noise.level must be >= 0");
    }

    if (top.has("forward")) {
        Section f(top.at("forward"), "forward", {"tol", "max_iter", "quadrature", "k_ladder", "perfect_k"});
        f.positive("tol", c.solve.tol);
        f.positive("max_iter", c.solve.max_iter);
        std::string q = "midpoint";
        f.get("quadrature", q);
        if (q == "exact")
            c.quadrature = Quadrature::exact;
        else if (q != "midpoint")
            throw InputError("config: forward.quadrature must be midpoint or exact");
        if (f.has("k_ladder")) positive_list(f, "k_ladder", c.k_ladder);
        f.positive("perfect_k", c.perfect_k);
    }

    if (top.has("inverse")) {
        Section s(top.at("inverse"), "inverse",
                  {"algorithm", "eps0", "eps_ratio", "stages", "tol", "max_inner", "anderson", "pd_tol", "pd_max_iter",
                   "pd_tau", "pd_sigma", "delta", "delta_a", "holder_threshold"});
        s.get("algorithm", c.algorithm);
        if (c.algorithm != "fixedpoint" && c.algorithm != "primaldual" && c.algorithm != "both")
            throw InputError("config: inverse.algorithm must be fixedpoint, primaldual or both");
        auto& fp = c.fixed_point;
        s.get("eps0", fp.eps0);
        if (fp.eps0 < 0.0) throw InputError("config: inverse.eps0 must be >= 0");
        s.positive("eps_ratio", fp.ratio);
        if (fp.ratio >= 1.0) throw InputError("config: inverse.eps_ratio must be < 1");
        s.positive("stages", fp.stages);
        s.positive("tol", fp.tol);
        s.positive("max_inner", fp.max_inner);
        s.get("anderson", fp.anderson);
        if (fp.anderson < 0) throw InputError("config: inverse.anderson must be >= 0");
        s.positive("pd_tol", c.primal_dual.tol);
        s.positive("pd_max_iter", c.primal_dual.max_iter);
        s.get("pd_tau", c.primal_dual.tau);
        s.get("pd_sigma", c.primal_dual.sigma);
        s.positive("delta", c.recovery.delta);
        s.positive("delta_a", c.recovery.delta_a);
        s.positive("holder_threshold", c.classify.holder_threshold);
    }
    c.fixed_point.solve = c.solve;

    if (top.has("geometry")) {
        Section g(top.at("geometry"), "geometry", {"levels", "coarea_levels", "competitors", "truncation_eps"});
        g.positive("levels", c.geometry.levels);
        g.positive("coarea_levels", c.geometry.coarea_levels);
        g.positive("competitors", c.geometry.competitors);
        if (g.has("truncation_eps")) positive_list(g, "truncation_eps", c.geometry.truncation_eps);
    }

    if (top.has("verify")) {
        Section v(top.at("verify"), "verify",
                  {"seed", "minimality_trials", "minimality_tol", "duality_tol", "coarea_tol", "area_tol",
                   "curvature_ratio", "truncation_tol", "ladder_tol"});
        auto& s = c.verify;
        v.get("seed", s.seed);
        v.positive("minimality_trials", s.minimality_trials);
        v.positive("minimality_tol", s.minimality_tol);
        v.positive("duality_tol", s.duality_tol);
        v.positive("coarea_tol", s.coarea_tol);
        v.positive("area_tol", s.area_tol);
        v.positive("curvature_ratio", s.curvature_ratio);
        v.positive("truncation_tol", s.truncation_tol);
        v.positive("ladder_tol", s.ladder_tol);
    }

    if (top.has("output")) {
        Section o(top.at("output"), "output", {"directory"});
        o.get("directory", c.output);
        if (c.output.empty()) throw InputError("config: output.directory must not be empty");
    }

    c.canonical = to_json(c).dump();
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot read config: " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse(ss.str());
}

void RunConfig::set_seed(std::uint64_t seed) {
    noise.seed = seed;
    verify.seed = seed;
    canonical = to_json(*this).dump();
}

std::uint64_t RunConfig::hash() const { return fnv1a64(canonical); }

GridPtr RunConfig::build_grid() const {
    std::vector<std::uint8_t> mask;
    if (disk_domain) {
        const auto [ctr, r] = *disk_domain;
        mask.resize(static_cast<std::size_t>(nx) * ny);
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const double dx = x0 + i * hx - ctr.x, dy = y0 + j * hy - ctr.y;
                mask[static_cast<std::size_t>(j) * nx + i] = dx * dx + dy * dy <= r * r * (1 + 1e-12);
            }
    }
    return make_grid(Grid2D(nx, ny, hx, hy, x0, y0, std::move(mask)));
}

CellScalar RunConfig::make_c(const GridPtr& g) const {
    if (c.type == "constant") return CellScalar(g, c.value);
    const ScalarSpec s = c;
    return CellScalar::sample(g, [s](double x, double y) {
        const double r2 = (x - s.center.x) * (x - s.center.x) + (y - s.center.y) * (y - s.center.y);
        return 1.0 + s.amplitude * std::exp(-r2 / (2 * s.width * s.width));
    });
}

TensorField2 RunConfig::make_sigma0(const GridPtr& g) const {
    if (sigma0.type == "constant") return TensorField2(g, sigma0.tensor);
    return TensorField2(g, Sym2::rotated_diag(sigma0.l1, sigma0.l2, sigma0.angle));
}

ScalarField RunConfig::make_f(const GridPtr& g) const {
    const double fx = f[0], fy = f[1], f0 = f[2];
    return ScalarField::sample(g, [=](double x, double y) { return fx * x + fy * y + f0; });
}

InclusionSet RunConfig::make_inclusions(const GridPtr& g) const {
    InclusionSet inc;
    for (const auto& s : inclusions) {
        CellMask m = s.shape == "disk" ? disk_cells(*g, s.center, s.radius) : rect_cells(*g, s.x0, s.x1, s.y0, s.y1);
        (s.label == "perfect" ? inc.perfect : inc.insulating).push_back(std::move(m));
    }
    inc.validate(*g);
    return inc;
}

} // namespace acdii
