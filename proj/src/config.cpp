#include "poroflow/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace poroflow {

ConfigError::ConfigError(const std::string& what, int line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
      line_(line) {}

std::string to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::manufactured: return "manufactured";
        case ScenarioKind::terzaghi: return "terzaghi";
        case ScenarioKind::subsidence: return "subsidence";
        case ScenarioKind::five_spot: return "five_spot";
    }
    return "unknown";
}

std::string to_string(HeterogeneityMode mode) {
    switch (mode) {
        case HeterogeneityMode::none: return "none";
        case HeterogeneityMode::layered: return "layered";
        case HeterogeneityMode::harmonic: return "harmonic";
    }
    return "unknown";
}

std::optional<std::string> suggest_key(const std::string& key,
                                       const std::vector<std::string>& candidates) {
    auto distance = [](const std::string& a, const std::string& b) {
        std::vector<std::size_t> row(b.size() + 1);
        for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
        for (std::size_t i = 1; i <= a.size(); ++i) {
            std::size_t diag = row[0];
            row[0] = i;
            for (std::size_t j = 1; j <= b.size(); ++j) {
                const std::size_t up = row[j];
                row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
                diag = up;
            }
        }
        return row[b.size()];
    };
    std::optional<std::string> best;
    std::size_t best_d = 4;
    for (const auto& c : candidates) {
        const auto d = distance(key, c);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

ScenarioConfig ScenarioConfig::defaults(ScenarioKind kind) {
    ScenarioConfig c;
    c.scenario = kind;
    switch (kind) {
        case ScenarioKind::manufactured: {
            const ManufacturedConstants mc;
            c.mesh = {200, 1, 1.0, 1.0};
            c.solid = {mc.lambda, mc.mu, mc.rho_s};
            c.fluid = {mc.alpha, 0.0, mc.rho_f, 1.0};
            c.porosity.kind = PorosityKind::rational;
            c.porosity.phi0 = mc.phi0;
            c.coupling.scheme = CouplingScheme::lockstep;
            c.coupling.tol = 1e-9;
            c.coupling.dt = steady_dt;
            c.coupling.t_end = 1.0;
            c.output.directory = "out/manufactured";
            break;
        }
        case ScenarioKind::terzaghi: {
            const TerzaghiParams tp;
            c.mesh = {1, 200, 0.01, 2.0};
            c.solid = {tp.lambda, tp.mu, tp.rho_s};
            c.fluid = {1.0, 0.0, tp.rho_f, 1.0};
            c.porosity.kind = PorosityKind::exponential;
            c.porosity.phi0 = tp.n_f;
            c.coupling.scheme = CouplingScheme::fully_coupled;
            c.coupling.linearization = Linearization::newton;
            c.coupling.tol = 1e-9;
            c.coupling.dt = 2e-4;
            c.coupling.t_end = 0.2;
            c.output.directory = "out/terzaghi";
            c.output.vtk_interval = 250;
            break;
        }
        case ScenarioKind::subsidence: {
            c.mesh = {10, 10, 1.0, 1.0};
            c.solid = {1.0, 1.0, 1.0};
            c.fluid = {1.0, 0.0, 1.0, 1.0};
            c.porosity.kind = PorosityKind::rational;
            c.porosity.phi0 = 0.3;
            c.coupling.scheme = CouplingScheme::lockstep;
            c.coupling.tol = 1e-10;
            c.coupling.dt = 0.1;
            c.coupling.t_end = 1.0;
            c.wells.push_back({0.5, 0.5, WellControl::pressure, -0.05, WellRole::producer});
            c.output.directory = "out/subsidence";
            break;
        }
        case ScenarioKind::five_spot: {
            c.mesh = {20, 20, 1.0, 1.0};
            c.solid = {1.0, 1.0, 1.0};
            c.fluid = {1.0, 0.0, 1.0, 1.0};
            c.porosity.kind = PorosityKind::frozen;
            c.porosity.phi0 = 0.2;
            c.permeability.kind = PermeabilityKind::damage;
            c.permeability.alpha0 = 1.0;
            c.permeability.zeta = 1.0;
            c.permeability.insitu_stress = Tensor2::diag(-2.0, -2.0);
            c.coupling.scheme = CouplingScheme::lockstep;
            c.coupling.tol = 1e-8;
            c.coupling.dt = 0.01;
            c.coupling.t_end = 0.6;
            c.heterogeneity = {HeterogeneityMode::layered, 0.5, 0};
            c.wells = {{0.0, 0.0, WellControl::pressure, 1.0, WellRole::injector},
                       {1.0, 1.0, WellControl::pressure, 1.0, WellRole::injector},
                       {1.0, 0.0, WellControl::pressure, -1.0, WellRole::producer},
                       {0.0, 1.0, WellControl::pressure, -1.0, WellRole::producer}};
            c.output.directory = "out/five_spot";
            c.output.vtk_interval = 10;
            break;
        }
    }
    return c;
}

void ScenarioConfig::validate() const {
    try {
        solid.validate();
        fluid.validate();
        porosity.validate();
        permeability.validate();
        coupling.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (mesh.nx < 1 || mesh.ny < 1) throw ConfigError("mesh.nx and mesh.ny must be >= 1");
    if (!(mesh.lx > 0.0) || !(mesh.ly > 0.0)) throw ConfigError("mesh.lx and mesh.ly must be positive");
    if (!(heterogeneity.amplitude >= 0.0 && heterogeneity.amplitude < 1.0))
        throw ConfigError("heterogeneity.amplitude must lie in [0,1)");
    if (output.vtk_interval < 0) throw ConfigError("output.vtk_interval must be >= 0");
    if (linear.tol <= 0.0 || linear.max_iter < 1) throw ConfigError("linear_solver tolerances invalid");
    for (const auto& w : wells) {
        if (w.x < 0.0 || w.x > mesh.lx || w.y < 0.0 || w.y > mesh.ly)
            throw ConfigError("well location outside the domain");
    }
    switch (scenario) {
        case ScenarioKind::manufactured:
            if (mesh.ny != 1) throw ConfigError("manufactured scenario needs mesh.ny = 1 (a strip)");
            if (!coupling.steady()) throw ConfigError("manufactured scenario is steady: coupling.dt must be 'steady'");
            break;
        case ScenarioKind::terzaghi:
            if (mesh.nx != 1) throw ConfigError("terzaghi scenario needs mesh.nx = 1 (a column)");
            if (coupling.steady()) throw ConfigError("terzaghi scenario is transient: coupling.dt must be finite");
            if (!(terzaghi.k_c > 0.0)) throw ConfigError("terzaghi.k_c must be positive");
            break;
        case ScenarioKind::subsidence:
            if (wells.empty()) throw ConfigError("subsidence scenario needs at least one well");
            if (coupling.steady()) throw ConfigError("subsidence ramps the drawdown: coupling.dt must be finite");
            break;
        case ScenarioKind::five_spot: {
            bool inj = false;
            bool prod = false;
            for (const auto& w : wells) (w.role == WellRole::injector ? inj : prod) = true;
            if (!inj || !prod) throw ConfigError("five_spot needs at least one injector and one producer");
            if (coupling.steady()) throw ConfigError("five_spot is transient: coupling.dt must be finite");
            if (!(five_spot.initial_sn >= 0.0 && five_spot.initial_sn <= 1.0))
                throw ConfigError("five_spot.initial_sn must lie in [0,1]");
            break;
        }
    }
}

namespace {

const std::map<std::string, std::string>& synonyms() {
    static const std::map<std::string, std::string> m = {
        {"viscosity", "mu0"},        {"permeability", "k"},    {"density", "rho"},
        {"porosity", "phi0"},        {"compressibility", "c_r"}, {"timestep", "dt"},
        {"tolerance", "tol"},        {"subcycles", "n_subcycles"}, {"lame", "lambda"},
        {"shear_modulus", "mu"},     {"barus", "beta"},       {"end_time", "t_end"}};
    return m;
}

std::vector<std::string> synonym_names() {
    std::vector<std::string> out;
    for (const auto& [k, v] : synonyms()) out.push_back(k);
    return out;
}

int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

class Block {
public:
    Block(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
        if (node_.IsDefined() && !node_.IsNull() && !node_.IsMap())
            throw ConfigError(path_ + " must be a mapping", line_of(node_));
    }

    bool present() const { return node_.IsDefined() && node_.IsMap(); }

    void allow(const std::vector<std::string>& keys) const {
        if (!present()) return;
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (std::find(keys.begin(), keys.end(), key) != keys.end()) continue;
            std::string msg = "unknown key '" + qualified(key) + "'";
            if (auto s = suggest_key(key, keys)) {
                msg += " (did you mean '" + *s + "'?)";
            } else if (auto syn = suggest_key(key, synonym_names())) {
                const auto& target = synonyms().at(*syn);
                if (std::find(keys.begin(), keys.end(), target) != keys.end())
                    msg += " (did you mean '" + target + "', the " + *syn + "?)";
            }
            throw ConfigError(msg, line_of(kv.first));
        }
    }

    Block child(const std::string& key) const {
        return {present() ? node_[key] : YAML::Node(), qualified(key)};
    }

    YAML::Node raw(const std::string& key) const { return present() ? node_[key] : YAML::Node(); }

    template <class T>
    void get(const std::string& key, T& out) const {
        if (!present()) return;
        const auto n = node_[key];
        if (!n) return;
        try {
            out = n.as<T>();
        } catch (const YAML::Exception&) {
            throw ConfigError("invalid value for '" + qualified(key) + "'", line_of(n));
        }
    }

    void get_string(const std::string& key, std::string& out) const { get(key, out); }

    bool has(const std::string& key) const { return present() && static_cast<bool>(node_[key]); }
    int line(const std::string& key) const { return has(key) ? line_of(node_[key]) : line_of(node_); }
    std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    YAML::Node node_;
    std::string path_;
};

template <class F>
auto with_line(const Block& b, const std::string& key, F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(b.qualified(key) + ": " + e.what(), b.line(key));
    }
}

void read_dt(const Block& b, double& dt) {
    if (!b.has("dt")) return;
    const auto n = b.raw("dt");
    if (n.IsScalar() && n.Scalar() == "steady") {
        dt = steady_dt;
        return;
    }
    b.get("dt", dt);
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError("parse error: " + e.msg, e.mark.line + 1);
    }
    if (!root || !root.IsMap()) throw ConfigError("configuration must be a mapping", root ? line_of(root) : 0);
    const Block top(root, "");
    top.allow({"scenario", "mesh", "materials", "coupling", "linear_solver", "wells", "heterogeneity",
               "output", "manufactured", "terzaghi", "subsidence", "five_spot"});
    if (!top.has("scenario")) throw ConfigError("missing required key 'scenario'", 1);
    std::string name;
    top.get_string("scenario", name);
    ScenarioKind kind;
    if (name == "manufactured") kind = ScenarioKind::manufactured;
    else if (name == "terzaghi") kind = ScenarioKind::terzaghi;
    else if (name == "subsidence") kind = ScenarioKind::subsidence;
    else if (name == "five_spot") kind = ScenarioKind::five_spot;
    else {
        std::string msg = "unknown scenario '" + name + "'";
        if (auto s = suggest_key(name, {"manufactured", "terzaghi", "subsidence", "five_spot"}))
            msg += " (did you mean '" + *s + "'?)";
        throw ConfigError(msg, top.line("scenario"));
    }
    ScenarioConfig c = ScenarioConfig::defaults(kind);
    c.source_text = text;

    const auto mesh = top.child("mesh");
    mesh.allow({"nx", "ny", "lx", "ly"});
    mesh.get("nx", c.mesh.nx);
    mesh.get("ny", c.mesh.ny);
    mesh.get("lx", c.mesh.lx);
    mesh.get("ly", c.mesh.ly);

    const auto mat = top.child("materials");
    mat.allow({"solid", "fluid", "porosity", "permeability", "two_phase"});
    const auto solid = mat.child("solid");
    solid.allow({"lambda", "mu", "rho"});
    solid.get("lambda", c.solid.lambda);
    solid.get("mu", c.solid.mu);
    solid.get("rho", c.solid.rho);
    const auto fluid = mat.child("fluid");
    fluid.allow({"mu0", "beta", "rho", "k"});
    fluid.get("mu0", c.fluid.mu0);
    fluid.get("beta", c.fluid.beta);
    fluid.get("rho", c.fluid.rho);
    if (kind == ScenarioKind::terzaghi && fluid.has("k")) {
        throw ConfigError("terzaghi derives materials.fluid.k from terzaghi.k_c; remove the key",
                          fluid.line("k"));
    }
    fluid.get("k", c.fluid.k);
    const auto por = mat.child("porosity");
    por.allow({"model", "phi0", "c_r", "p_ref"});
    if (por.has("model")) {
        std::string m;
        por.get_string("model", m);
        c.porosity.kind = with_line(por, "model", [&] { return porosity_kind_from_string(m); });
    }
    por.get("phi0", c.porosity.phi0);
    por.get("c_r", c.porosity.c_r);
    por.get("p_ref", c.porosity.p_ref);
    const auto perm = mat.child("permeability");
    perm.allow({"model", "alpha0", "zeta", "insitu_stress"});
    if (perm.has("model")) {
        std::string m;
        perm.get_string("model", m);
        c.permeability.kind = with_line(perm, "model", [&] { return permeability_kind_from_string(m); });
    }
    perm.get("alpha0", c.permeability.alpha0);
    perm.get("zeta", c.permeability.zeta);
    if (perm.has("insitu_stress")) {
        std::vector<double> t;
        perm.get("insitu_stress", t);
        if (t.size() != 4)
            throw ConfigError("materials.permeability.insitu_stress needs [xx, xy, yx, yy]",
                              perm.line("insitu_stress"));
        c.permeability.insitu_stress = {t[0], t[1], t[2], t[3]};
    }
    const auto tp = mat.child("two_phase");
    tp.allow({"relperm", "rho_w", "rho_n"});
    if (tp.has("relperm")) {
        std::string r;
        tp.get_string("relperm", r);
        if (r == "quadratic") c.two_phase.curve = RelPermCurve::quadratic;
        else if (r == "linear") c.two_phase.curve = RelPermCurve::linear;
        else throw ConfigError("materials.two_phase.relperm must be quadratic or linear", tp.line("relperm"));
    }
    tp.get("rho_w", c.two_phase.rho_w);
    tp.get("rho_n", c.two_phase.rho_n);

    const auto cp = top.child("coupling");
    cp.allow({"scheme", "tol", "max_outer_iters", "n_subcycles", "dt", "t_end", "linearization",
              "concurrent_jacobi", "inner_tol", "max_inner_iters"});
    if (cp.has("scheme")) {
        std::string s;
        cp.get_string("scheme", s);
        c.coupling.scheme = with_line(cp, "scheme", [&] { return scheme_from_string(s); });
    }
    cp.get("tol", c.coupling.tol);
    cp.get("max_outer_iters", c.coupling.max_outer_iters);
    cp.get("n_subcycles", c.coupling.n_subcycles);
    read_dt(cp, c.coupling.dt);
    cp.get("t_end", c.coupling.t_end);
    if (cp.has("linearization")) {
        std::string s;
        cp.get_string("linearization", s);
        if (s == "picard") c.coupling.linearization = Linearization::picard;
        else if (s == "newton") c.coupling.linearization = Linearization::newton;
        else throw ConfigError("coupling.linearization must be picard or newton", cp.line("linearization"));
    }
    cp.get("concurrent_jacobi", c.coupling.concurrent_jacobi);
    cp.get("inner_tol", c.coupling.inner_tol);
    cp.get("max_inner_iters", c.coupling.max_inner_iters);

    const auto ls = top.child("linear_solver");
    ls.allow({"method", "tol", "max_iter", "direct_limit"});
    if (ls.has("method")) {
        std::string m;
        ls.get_string("method", m);
        if (m == "automatic") c.linear.method = SolveMethod::automatic;
        else if (m == "direct") c.linear.method = SolveMethod::direct;
        else if (m == "cg") c.linear.method = SolveMethod::cg;
        else if (m == "bicgstab") c.linear.method = SolveMethod::bicgstab;
        else throw ConfigError("linear_solver.method must be automatic, direct, cg or bicgstab", ls.line("method"));
    }
    ls.get("tol", c.linear.tol);
    ls.get("max_iter", c.linear.max_iter);
    ls.get("direct_limit", c.linear.direct_limit);

    if (top.has("wells")) {
        const auto wells = top.raw("wells");
        if (!wells.IsSequence()) throw ConfigError("wells must be a list", line_of(wells));
        c.wells.clear();
        for (std::size_t i = 0; i < wells.size(); ++i) {
            const Block w(wells[i], "wells[" + std::to_string(i) + "]");
            w.allow({"x", "y", "control", "value", "role"});
            if (!w.has("x") || !w.has("y") || !w.has("value"))
                throw ConfigError(w.qualified("x/y/value") + " are required", line_of(wells[i]));
            WellConfig wc;
            w.get("x", wc.x);
            w.get("y", wc.y);
            w.get("value", wc.value);
            std::string s;
            if (w.has("control")) {
                w.get_string("control", s);
                if (s == "pressure") wc.control = WellControl::pressure;
                else if (s == "rate") wc.control = WellControl::rate;
                else throw ConfigError(w.qualified("control") + " must be pressure or rate", w.line("control"));
            }
            if (w.has("role")) {
                w.get_string("role", s);
                if (s == "injector") wc.role = WellRole::injector;
                else if (s == "producer") wc.role = WellRole::producer;
                else throw ConfigError(w.qualified("role") + " must be injector or producer", w.line("role"));
            }
            c.wells.push_back(wc);
        }
    }

    const auto het = top.child("heterogeneity");
    het.allow({"mode", "amplitude", "seed"});
    if (het.has("mode")) {
        std::string m;
        het.get_string("mode", m);
        if (m == "none") c.heterogeneity.mode = HeterogeneityMode::none;
        else if (m == "layered") c.heterogeneity.mode = HeterogeneityMode::layered;
        else if (m == "harmonic") c.heterogeneity.mode = HeterogeneityMode::harmonic;
        else throw ConfigError("heterogeneity.mode must be none, layered or harmonic", het.line("mode"));
    }
    het.get("amplitude", c.heterogeneity.amplitude);
    het.get("seed", c.heterogeneity.seed);

    const auto out = top.child("output");
    out.allow({"directory", "vtk_interval"});
    out.get_string("directory", c.output.directory);
    out.get("vtk_interval", c.output.vtk_interval);

    const auto ms = top.child("manufactured");
    ms.allow({"u0", "v0", "p0"});
    ms.get("u0", c.manufactured.constants.u0);
    ms.get("v0", c.manufactured.constants.v0);
    ms.get("p0", c.manufactured.constants.p0);
    const auto tz = top.child("terzaghi");
    tz.allow({"k_c"});
    tz.get("k_c", c.terzaghi.k_c);
    const auto sb = top.child("subsidence");
    sb.allow({"compare_frozen"});
    sb.get("compare_frozen", c.subsidence.compare_frozen);
    const auto fs = top.child("five_spot");
    fs.allow({"breakthrough_threshold", "compare_constant", "initial_sn"});
    fs.get("breakthrough_threshold", c.five_spot.breakthrough_threshold);
    fs.get("compare_constant", c.five_spot.compare_constant);
    fs.get("initial_sn", c.five_spot.initial_sn);

    // Scenario blocks belong to their scenario only.
    const std::map<std::string, ScenarioKind> owners = {{"manufactured", ScenarioKind::manufactured},
                                                        {"terzaghi", ScenarioKind::terzaghi},
                                                        {"subsidence", ScenarioKind::subsidence},
                                                        {"five_spot", ScenarioKind::five_spot}};
    for (const auto& [key, owner] : owners) {
        if (top.has(key) && owner != kind)
            throw ConfigError("block '" + key + "' does not apply to scenario '" + name + "'", top.line(key));
    }
    // The manufactured material constants follow the manufactured block.
    if (kind == ScenarioKind::manufactured) {
        auto& mc = c.manufactured.constants;
        mc.lambda = c.solid.lambda;
        mc.mu = c.solid.mu;
        mc.rho_s = c.solid.rho;
        mc.rho_f = c.fluid.rho;
        mc.alpha = c.fluid.mu0 / c.fluid.k;
        mc.phi0 = c.porosity.phi0;
    }
    c.validate();
    return c;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string describe(const ScenarioConfig& c) {
    std::map<std::string, std::string> kv;
    auto num = [](double v) {
        std::ostringstream os;
        os.precision(9);
        os << v;
        return os.str();
    };
    kv["scenario"] = to_string(c.scenario);
    kv["mesh.nx"] = std::to_string(c.mesh.nx);
    kv["mesh.ny"] = std::to_string(c.mesh.ny);
    kv["mesh.lx"] = num(c.mesh.lx);
    kv["mesh.ly"] = num(c.mesh.ly);
    kv["materials.solid.lambda"] = num(c.solid.lambda);
    kv["materials.solid.mu"] = num(c.solid.mu);
    kv["materials.solid.rho"] = num(c.solid.rho);
    kv["materials.fluid.mu0"] = num(c.fluid.mu0);
    kv["materials.fluid.beta"] = num(c.fluid.beta);
    kv["materials.fluid.rho"] = num(c.fluid.rho);
    kv["materials.fluid.k"] = num(c.fluid.k);
    kv["materials.porosity.model"] = to_string(c.porosity.kind);
    kv["materials.porosity.phi0"] = num(c.porosity.phi0);
    kv["materials.porosity.c_r"] = num(c.porosity.c_r);
    kv["materials.porosity.p_ref"] = num(c.porosity.p_ref);
    kv["materials.permeability.model"] = to_string(c.permeability.kind);
    kv["materials.permeability.alpha0"] = num(c.permeability.alpha0);
    kv["materials.permeability.zeta"] = num(c.permeability.zeta);
    const auto& t0 = c.permeability.insitu_stress;
    kv["materials.permeability.insitu_stress"] =
        "[" + num(t0.xx) + ", " + num(t0.xy) + ", " + num(t0.yx) + ", " + num(t0.yy) + "]";
    kv["materials.two_phase.relperm"] = c.two_phase.curve == RelPermCurve::quadratic ? "quadratic" : "linear";
    kv["coupling.scheme"] = to_string(c.coupling.scheme);
    kv["coupling.tol"] = num(c.coupling.tol);
    kv["coupling.max_outer_iters"] = std::to_string(c.coupling.max_outer_iters);
    kv["coupling.n_subcycles"] = std::to_string(c.coupling.n_subcycles);
    kv["coupling.dt"] = c.coupling.steady() ? "steady" : num(c.coupling.dt);
    kv["coupling.t_end"] = num(c.coupling.t_end);
    kv["coupling.linearization"] = c.coupling.linearization == Linearization::newton ? "newton" : "picard";
    kv["linear_solver.method"] = to_string(c.linear.method);
    kv["linear_solver.tol"] = num(c.linear.tol);
    kv["heterogeneity.mode"] = to_string(c.heterogeneity.mode);
    kv["heterogeneity.amplitude"] = num(c.heterogeneity.amplitude);
    kv["heterogeneity.seed"] = std::to_string(c.heterogeneity.seed);
    kv["output.directory"] = c.output.directory;
    kv["output.vtk_interval"] = std::to_string(c.output.vtk_interval);
    for (std::size_t i = 0; i < c.wells.size(); ++i) {
        const auto& w = c.wells[i];
        kv["wells[" + std::to_string(i) + "]"] =
            "x=" + num(w.x) + " y=" + num(w.y) +
            " control=" + (w.control == WellControl::pressure ? "pressure" : "rate") +
            " value=" + num(w.value) + " role=" + (w.role == WellRole::injector ? "injector" : "producer");
    }
    std::ostringstream os;
    for (const auto& [k, v] : kv) os << k << " = " << v << "\n";
    return os.str();
}

}  // namespace poroflow
