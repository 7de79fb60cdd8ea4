#include "koopgeo/scenario.hpp"

#include "koopgeo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

namespace koopgeo {

using nlohmann::json;

namespace {

// ------------------------------------------------------------ read helpers

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string join(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void expect_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
}

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
    expect_object(j, path);
    for (const auto& item : j.items()) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return item.key() == k; }))
            throw ConfigError(join(path, item.key()), "unknown key");
    }
}

const json& require(const json& j, const std::string& path, const char* key) {
    expect_object(j, path);
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(join(path, key), "missing required key");
    return *it;
}

double read_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
    return x;
}

std::int64_t read_integer(const json& v, const std::string& path) {
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX))
        throw ConfigError(path, "integer out of range");
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
        const double x = v.get<double>();
        if (std::isfinite(x) && x == std::floor(x) && std::abs(x) < 9.0e15) return static_cast<std::int64_t>(x);
    }
    throw ConfigError(path, "expected an integer");
}

std::uint64_t seed_or(const json& j, const std::string& path) {
    auto it = j.find("seed");
    if (it == j.end()) return 0;
    if (it->is_number_unsigned()) return it->get<std::uint64_t>();
    const std::int64_t v = read_integer(*it, join(path, "seed"));
    if (v < 0) throw ConfigError(join(path, "seed"), "must be >= 0");
    return static_cast<std::uint64_t>(v);
}

std::string read_string(const json& v, const std::string& path) {
    if (!v.is_string()) throw ConfigError(path, "expected a string");
    return v.get<std::string>();
}

double number_or(const json& j, const std::string& path, const char* key, double fallback) {
    auto it = j.find(key);
    return it == j.end() ? fallback : read_number(*it, join(path, key));
}

std::int64_t integer_or(const json& j, const std::string& path, const char* key, std::int64_t fallback) {
    auto it = j.find(key);
    return it == j.end() ? fallback : read_integer(*it, join(path, key));
}

std::int64_t positive_integer_or(const json& j, const std::string& path, const char* key, std::int64_t fallback,
                                 std::int64_t minimum = 1) {
    const std::int64_t v = integer_or(j, path, key, fallback);
    if (v < minimum) throw ConfigError(join(path, key), "must be >= " + std::to_string(minimum));
    return v;
}

double rtol_or(const json& j, const std::string& path, double fallback) {
    const double r = number_or(j, path, "rtol", fallback);
    if (!(r > 0.0)) throw ConfigError(join(path, "rtol"), "rtol must be > 0");
    return r;
}

const json& require_array(const json& j, const std::string& path, const char* key) {
    const json& a = require(j, path, key);
    if (!a.is_array()) throw ConfigError(join(path, key), "expected an array");
    return a;
}

ModeIndex read_mode(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) throw ConfigError(path, "mode index must be a non-empty integer array");
    std::vector<std::int64_t> c;
    for (std::size_t i = 0; i < v.size(); ++i) c.push_back(read_integer(v[i], join(path, i)));
    return ModeIndex(std::move(c));
}

std::vector<ModeIndex> read_modes(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path, "expected an array of mode indices");
    std::vector<ModeIndex> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(read_mode(v[i], join(path, i)));
        if (out.back().dim() != out.front().dim()) throw ConfigError(join(path, i), "dimension mismatch between modes");
    }
    return out;
}

KetVector read_ket(const json& v, const std::string& path) {
    allow_keys(v, path, {"terms"});
    const json& terms = require_array(v, path, "terms");
    if (terms.empty()) throw ConfigError(join(path, "terms"), "a ket needs at least one term");
    std::vector<KetVector::Term> out;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const std::string p = join(join(path, "terms"), i);
        allow_keys(terms[i], p, {"mode", "re", "im"});
        ModeIndex n = read_mode(require(terms[i], p, "mode"), join(p, "mode"));
        if (n.dim() != read_mode(require(terms[0], join(join(path, "terms"), 0), "mode"), p).dim())
            throw ConfigError(join(p, "mode"), "dimension mismatch between terms");
        out.emplace_back(std::move(n), complex(number_or(terms[i], p, "re", 0.0), number_or(terms[i], p, "im", 0.0)));
    }
    const std::size_t d = out.front().first.dim();
    KetVector ket(d, std::move(out));
    if (ket.is_zero()) throw ConfigError(path, "ket must be nonzero");
    return ket;
}

std::vector<KetVector> read_kets(const json& j, const std::string& path, const char* key) {
    const json& a = require_array(j, path, key);
    std::vector<KetVector> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.push_back(read_ket(a[i], join(join(path, key), i)));
        if (out.back().dim() != out.front().dim())
            throw ConfigError(join(join(path, key), i), "dimension mismatch between kets");
    }
    return out;
}

ParameterPoint read_point(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) throw ConfigError(path, "parameter point must be a non-empty number array");
    ParameterPoint p;
    for (std::size_t i = 0; i < v.size(); ++i) p.coords.push_back(read_number(v[i], join(path, i)));
    return p;
}

KoopmanOperator read_operator(const json& j, const std::string& path) {
    const std::string type = read_string(require(j, path, "type"), join(path, "type"));
    if (type == "translation") {
        allow_keys(j, path, {"type", "omega", "t"});
        const json& w = require_array(j, path, "omega");
        std::vector<double> omega;
        for (std::size_t i = 0; i < w.size(); ++i) omega.push_back(read_number(w[i], join(join(path, "omega"), i)));
        if (omega.empty()) throw ConfigError(join(path, "omega"), "omega must have length >= 1");
        return TorusTranslation(std::move(omega), read_number(require(j, path, "t"), join(path, "t")));
    }
    if (type == "automorphism") {
        allow_keys(j, path, {"type", "matrix"});
        const json& m = require_array(j, path, "matrix");
        IntMatrix matrix;
        for (std::size_t i = 0; i < m.size(); ++i) {
            const std::string rp = join(join(path, "matrix"), i);
            if (!m[i].is_array()) throw ConfigError(rp, "expected a matrix row");
            std::vector<std::int64_t> row;
            for (std::size_t k = 0; k < m[i].size(); ++k) row.push_back(read_integer(m[i][k], join(rp, k)));
            matrix.push_back(std::move(row));
        }
        try {
            return ToralAutomorphism(std::move(matrix));
        } catch (const std::exception& e) {
            throw ConfigError(join(path, "matrix"), e.what());
        }
    }
    if (type == "composed") {
        allow_keys(j, path, {"type", "factors"});
        const json& f = require_array(j, path, "factors");
        std::vector<KoopmanOperator> factors;
        for (std::size_t i = 0; i < f.size(); ++i) factors.push_back(read_operator(f[i], join(join(path, "factors"), i)));
        try {
            return KoopmanOperator::composed(std::move(factors));
        } catch (const std::exception& e) {
            throw ConfigError(join(path, "factors"), e.what());
        }
    }
    throw ConfigError(join(path, "type"), "unknown operator type '" + type + "'");
}

Tolerances read_tolerances(const json& j, const std::string& path) {
    allow_keys(j, path, {"dropout", "normalization", "ray_equality", "overlap", "frame_orthogonality", "max_doublings"});
    Tolerances t;
    auto positive = [&](const char* key, double fallback) {
        const double v = number_or(j, path, key, fallback);
        if (!(v > 0.0)) throw ConfigError(join(path, key), "must be > 0");
        return v;
    };
    t.dropout = positive("dropout", t.dropout);
    t.normalization = positive("normalization", t.normalization);
    t.ray_equality = positive("ray_equality", t.ray_equality);
    t.overlap = positive("overlap", t.overlap);
    t.frame_orthogonality = positive("frame_orthogonality", t.frame_orthogonality);
    t.max_doublings = static_cast<int>(positive_integer_or(j, path, "max_doublings", t.max_doublings, 1));
    if (t.max_doublings > 30) throw ConfigError(join(path, "max_doublings"), "must be <= 30");
    return t;
}

void check_dim(std::size_t got, std::size_t want, const std::string& path) {
    if (got != want)
        throw ConfigError(path, "dimension mismatch: T^" + std::to_string(got) + " vs system T^" + std::to_string(want));
}

// ------------------------------------------------------------ task params

UnitarityParams read_unitarity(const json& j, const std::string& path, const std::optional<KoopmanOperator>& sys) {
    allow_keys(j, path, {"sample_size", "mode_box", "support", "seed"});
    if (!sys) throw ConfigError("system", "task 'unitarity' requires a system");
    UnitarityParams p;
    p.sample_size = static_cast<int>(positive_integer_or(j, path, "sample_size", p.sample_size));
    p.mode_box = positive_integer_or(j, path, "mode_box", p.mode_box, 0);
    p.support = static_cast<int>(positive_integer_or(j, path, "support", p.support));
    p.seed = seed_or(j, path);
    const double box = std::pow(2.0 * static_cast<double>(p.mode_box) + 1.0, static_cast<double>(sys->dim()));
    if (p.support > box) throw ConfigError(join(path, "support"), "more modes requested than the box holds");
    return p;
}

LoopSpec read_loop(const json& j, const std::string& path) {
    const std::string type = read_string(require(j, path, "type"), join(path, "type"));
    if (type == "two_mode_circle") {
        allow_keys(j, path, {"type", "theta", "modes", "initial_nodes"});
        CircleLoopSpec c;
        c.theta = read_number(require(j, path, "theta"), join(path, "theta"));
        if (j.contains("modes")) {
            const auto modes = read_modes(j["modes"], join(path, "modes"));
            if (modes.size() != 2) throw ConfigError(join(path, "modes"), "exactly two modes required");
            if (modes[0] == modes[1]) throw ConfigError(join(path, "modes"), "modes must differ");
            c.first = modes[0];
            c.second = modes[1];
        }
        c.initial_nodes = static_cast<std::size_t>(positive_integer_or(j, path, "initial_nodes", 32, 2));
        return c;
    }
    if (type == "polygon") {
        allow_keys(j, path, {"type", "nodes"});
        PolygonLoopSpec p{read_kets(j, path, "nodes")};
        if (p.nodes.size() < 2) throw ConfigError(join(path, "nodes"), "a loop needs at least 2 nodes");
        return p;
    }
    if (type == "constant") {
        allow_keys(j, path, {"type", "ket", "nodes"});
        return ConstantLoopSpec{read_ket(require(j, path, "ket"), join(path, "ket")),
                                static_cast<std::size_t>(positive_integer_or(j, path, "nodes", 4, 2))};
    }
    throw ConfigError(join(path, "type"), "unknown loop type '" + type + "'");
}

HolonomyParams read_holonomy(const json& j, const std::string& path) {
    allow_keys(j, path, {"loop", "rtol", "estimator"});
    HolonomyParams p{read_loop(require(j, path, "loop"), join(path, "loop"))};
    p.rtol = rtol_or(j, path, p.rtol);
    if (j.contains("estimator")) {
        const std::string e = read_string(j["estimator"], join(path, "estimator"));
        if (e == "bargmann")
            p.estimator = Estimator::bargmann;
        else if (e == "parallel_transport")
            p.estimator = Estimator::parallel_transport;
        else
            throw ConfigError(join(path, "estimator"), "expected 'bargmann' or 'parallel_transport'");
    }
    return p;
}

ExcursionSpec read_excursion(const json& j, const std::string& path) {
    const std::string type = read_string(require(j, path, "type"), join(path, "type"));
    if (type == "injection") {
        allow_keys(j, path, {"type", "theta", "aux_mode"});
        InjectionExcursion e{read_number(require(j, path, "theta"), join(path, "theta")), std::nullopt};
        if (j.contains("aux_mode")) e.aux = read_mode(j["aux_mode"], join(path, "aux_mode"));
        return e;
    }
    if (type == "polygon") {
        allow_keys(j, path, {"type", "nodes"});
        PolygonExcursion p{read_kets(j, path, "nodes")};
        if (p.nodes.size() < 2) throw ConfigError(join(path, "nodes"), "a loop needs at least 2 nodes");
        return p;
    }
    if (type == "stationary") {
        allow_keys(j, path, {"type"});
        return StationaryExcursion{};
    }
    throw ConfigError(join(path, "type"), "unknown excursion type '" + type + "'");
}

MovingFrameParams read_moving_frame(const json& j, const std::string& path, const std::optional<KoopmanOperator>& sys) {
    allow_keys(j, path, {"frame_modes", "member", "excursion", "rtol"});
    if (!sys) throw ConfigError("system", "task 'moving_frame' requires a system");
    MovingFrameParams p{read_modes(require(j, path, "frame_modes"), join(path, "frame_modes")), 0,
                        read_excursion(require(j, path, "excursion"), join(path, "excursion"))};
    if (p.frame_modes.empty()) throw ConfigError(join(path, "frame_modes"), "frame needs at least one member");
    std::set<ModeIndex> distinct(p.frame_modes.begin(), p.frame_modes.end());
    if (distinct.size() != p.frame_modes.size()) throw ConfigError(join(path, "frame_modes"), "frame modes must be distinct");
    check_dim(p.frame_modes.front().dim(), sys->dim(), join(path, "frame_modes"));
    p.member = static_cast<std::size_t>(positive_integer_or(j, path, "member", 0, 0));
    if (p.member >= p.frame_modes.size()) throw ConfigError(join(path, "member"), "member index out of range");
    if (const auto* inj = std::get_if<InjectionExcursion>(&p.excursion); inj && inj->aux)
        check_dim(inj->aux->dim(), sys->dim(), join(join(path, "excursion"), "aux_mode"));
    if (const auto* poly = std::get_if<PolygonExcursion>(&p.excursion))
        check_dim(poly->nodes.front().dim(), sys->dim(), join(join(path, "excursion"), "nodes"));
    p.rtol = rtol_or(j, path, p.rtol);
    return p;
}

FamilySpec read_family(const json& j, const std::string& path, const std::filesystem::path& base_dir) {
    const std::string type = read_string(require(j, path, "type"), join(path, "type"));
    if (type == "coherent_ring") {
        allow_keys(j, path, {"type", "r", "k_cut"});
        CoherentRingSpec c{read_number(require(j, path, "r"), join(path, "r")),
                           static_cast<int>(positive_integer_or(j, path, "k_cut", 40, 0))};
        try {
            coherent_ring_family(c.r, c.k_cut);
        } catch (const std::exception& e) {
            throw ConfigError(path, e.what());
        }
        return c;
    }
    if (type == "constant") {
        allow_keys(j, path, {"type", "ket"});
        return ConstantFamilySpec{read_ket(require(j, path, "ket"), join(path, "ket"))};
    }
    if (type == "pure_phase") {
        allow_keys(j, path, {"type", "mode", "winding"});
        return PurePhaseSpec{read_mode(require(j, path, "mode"), join(path, "mode")), integer_or(j, path, "winding", 1)};
    }
    if (type == "tabulated") {
        allow_keys(j, path, {"type", "file", "mode_dim", "period", "label"});
        TabulatedSpec t;
        std::filesystem::path file = read_string(require(j, path, "file"), join(path, "file"));
        if (file.is_relative() && !base_dir.empty()) file = base_dir / file;
        t.file = file.lexically_normal().string();
        t.mode_dim = static_cast<std::size_t>(positive_integer_or(j, path, "mode_dim", 1));
        t.period = number_or(j, path, "period", two_pi);
        if (!(t.period > 0.0)) throw ConfigError(join(path, "period"), "must be > 0");
        t.label = j.contains("label") ? read_mode(j["label"], join(path, "label")) : ModeIndex::zero(t.mode_dim);
        return t;
    }
    throw ConfigError(join(path, "type"), "unknown family type '" + type + "'");
}

ParamLoopSpec read_param_loop(const json& j, const std::string& path) {
    const std::string type = read_string(require(j, path, "type"), join(path, "type"));
    if (type == "circle") {
        allow_keys(j, path, {"type", "samples"});
        return CircleParamLoop{static_cast<std::size_t>(positive_integer_or(j, path, "samples", 16))};
    }
    if (type == "points") {
        allow_keys(j, path, {"type", "points", "closure"});
        const json& a = require_array(j, path, "points");
        PointsParamLoop p;
        for (std::size_t i = 0; i < a.size(); ++i) {
            p.points.push_back(read_point(a[i], join(join(path, "points"), i)));
            if (p.points.back().coords.size() != p.points.front().coords.size())
                throw ConfigError(join(join(path, "points"), i), "chart dimension mismatch");
        }
        if (p.points.empty()) throw ConfigError(join(path, "points"), "at least one point required");
        if (j.contains("closure")) {
            p.closure = read_point(j["closure"], join(path, "closure"));
            if (p.closure->coords.size() != p.points.front().coords.size())
                throw ConfigError(join(path, "closure"), "chart dimension mismatch");
        }
        return p;
    }
    throw ConfigError(join(path, "type"), "unknown parameter loop type '" + type + "'");
}

HannayParams read_hannay(const json& j, const std::string& path, const std::filesystem::path& base_dir) {
    allow_keys(j, path, {"family", "loop", "rtol", "refinement"});
    HannayParams p{read_family(require(j, path, "family"), join(path, "family"), base_dir),
                   read_param_loop(require(j, path, "loop"), join(path, "loop"))};
    p.rtol = rtol_or(j, path, p.rtol);
    if (j.contains("refinement")) {
        const std::string r = read_string(j["refinement"], join(path, "refinement"));
        if (r == "parameter_space")
            p.refinement = PullbackRefinement::parameter_space;
        else if (r == "ray_geodesic")
            p.refinement = PullbackRefinement::ray_geodesic;
        else
            throw ConfigError(join(path, "refinement"), "expected 'parameter_space' or 'ray_geodesic'");
    }
    return p;
}

HolonomySampleParams read_sample(const json& j, const std::string& path) {
    allow_keys(j, path, {"basepoint", "modes", "n_loops", "seed"});
    HolonomySampleParams p;
    p.basepoint = read_ket(require(j, path, "basepoint"), join(path, "basepoint"));
    if (j.contains("modes")) {
        p.modes = read_modes(j["modes"], join(path, "modes"));
        if (!p.modes.empty()) check_dim(p.modes.front().dim(), p.basepoint.dim(), join(path, "modes"));
    }
    p.n_loops = static_cast<int>(positive_integer_or(j, path, "n_loops", p.n_loops));
    p.seed = seed_or(j, path);
    return p;
}

// ------------------------------------------------------------ write helpers

json point_json(const ParameterPoint& p) { return p.coords; }

json loop_json(const LoopSpec& loop) {
    return std::visit(
        [](const auto& l) -> json {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, CircleLoopSpec>) {
                return {{"type", "two_mode_circle"},
                        {"theta", l.theta},
                        {"modes", json::array({to_json(l.first), to_json(l.second)})},
                        {"initial_nodes", l.initial_nodes}};
            } else if constexpr (std::is_same_v<L, PolygonLoopSpec>) {
                json nodes = json::array();
                for (const auto& k : l.nodes) nodes.push_back(to_json(k));
                return {{"type", "polygon"}, {"nodes", nodes}};
            } else {
                return {{"type", "constant"}, {"ket", to_json(l.ket)}, {"nodes", l.nodes}};
            }
        },
        loop);
}

json excursion_json(const ExcursionSpec& exc) {
    return std::visit(
        [](const auto& e) -> json {
            using E = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<E, InjectionExcursion>) {
                json j = {{"type", "injection"}, {"theta", e.theta}};
                if (e.aux) j["aux_mode"] = to_json(*e.aux);
                return j;
            } else if constexpr (std::is_same_v<E, PolygonExcursion>) {
                json nodes = json::array();
                for (const auto& k : e.nodes) nodes.push_back(to_json(k));
                return {{"type", "polygon"}, {"nodes", nodes}};
            } else {
                return {{"type", "stationary"}};
            }
        },
        exc);
}

json family_json(const FamilySpec& fam) {
    return std::visit(
        [](const auto& f) -> json {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, CoherentRingSpec>) {
                return {{"type", "coherent_ring"}, {"r", f.r}, {"k_cut", f.k_cut}};
            } else if constexpr (std::is_same_v<F, ConstantFamilySpec>) {
                return {{"type", "constant"}, {"ket", to_json(f.ket)}};
            } else if constexpr (std::is_same_v<F, PurePhaseSpec>) {
                return {{"type", "pure_phase"}, {"mode", to_json(f.mode)}, {"winding", f.winding}};
            } else {
                return {{"type", "tabulated"},
                        {"file", f.file},
                        {"mode_dim", f.mode_dim},
                        {"period", f.period},
                        {"label", to_json(f.label)}};
            }
        },
        fam);
}

json param_loop_json(const ParamLoopSpec& loop) {
    return std::visit(
        [](const auto& l) -> json {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, CircleParamLoop>) {
                return {{"type", "circle"}, {"samples", l.samples}};
            } else {
                json pts = json::array();
                for (const auto& p : l.points) pts.push_back(point_json(p));
                json j = {{"type", "points"}, {"points", pts}};
                if (l.closure) j["closure"] = point_json(*l.closure);
                return j;
            }
        },
        loop);
}

json modes_json(const std::vector<ModeIndex>& modes) {
    json a = json::array();
    for (const auto& n : modes) a.push_back(to_json(n));
    return a;
}

}  // namespace

// ------------------------------------------------------------------ public

std::string_view Scenario::task() const {
    static constexpr std::string_view names[] = {"unitarity", "holonomy", "moving_frame", "hannay", "holonomy_sample"};
    return names[params.index()];
}

json to_json(const ModeIndex& n) { return json(std::vector<std::int64_t>(n.components().begin(), n.components().end())); }

json to_json(const KetVector& v) {
    json terms = json::array();
    for (const auto& [n, c] : v.terms()) terms.push_back({{"mode", to_json(n)}, {"re", c.real()}, {"im", c.imag()}});
    return {{"terms", terms}};
}

json to_json(const KoopmanOperator& op) {
    return std::visit(
        [](const auto& k) -> json {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, TorusTranslation>) {
                return {{"type", "translation"}, {"omega", k.omega()}, {"t", k.time()}};
            } else if constexpr (std::is_same_v<K, ToralAutomorphism>) {
                return {{"type", "automorphism"}, {"matrix", k.matrix()}};
            } else {
                json factors = json::array();
                for (const auto& f : k.factors) factors.push_back(to_json(f));
                return {{"type", "composed"}, {"factors", factors}};
            }
        },
        op.kind());
}

json to_json(const Tolerances& t) {
    return {{"dropout", t.dropout},
            {"normalization", t.normalization},
            {"ray_equality", t.ray_equality},
            {"overlap", t.overlap},
            {"frame_orthogonality", t.frame_orthogonality},
            {"max_doublings", t.max_doublings}};
}

Scenario parse_scenario(const json& doc, const std::filesystem::path& base_dir) {
    allow_keys(doc, "", {"schema_version", "name", "task", "system", "params", "tolerances"});
    if (doc.contains("schema_version")) {
        const auto v = read_integer(doc["schema_version"], "schema_version");
        if (v != scenario_schema_version)
            throw ConfigError("schema_version", "unsupported schema version " + std::to_string(v));
    }
    Scenario s;
    s.name = doc.contains("name") ? read_string(doc["name"], "name") : std::string("unnamed");
    const std::string task = read_string(require(doc, "", "task"), "task");
    if (doc.contains("system")) s.system = read_operator(doc["system"], "system");
    if (doc.contains("tolerances")) s.tolerances = read_tolerances(doc["tolerances"], "tolerances");
    const json empty = json::object();
    const json& params = doc.contains("params") ? doc["params"] : empty;
    if (task == "unitarity")
        s.params = read_unitarity(params, "params", s.system);
    else if (task == "holonomy")
        s.params = read_holonomy(params, "params");
    else if (task == "moving_frame")
        s.params = read_moving_frame(params, "params", s.system);
    else if (task == "hannay")
        s.params = read_hannay(params, "params", base_dir);
    else if (task == "holonomy_sample")
        s.params = read_sample(params, "params");
    else
        throw ConfigError("task", "unknown task '" + task + "'");
    return s;
}

Scenario parse_scenario_text(std::string_view text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<document>", std::string("malformed JSON: ") + e.what());
    }
    return parse_scenario(doc, base_dir);
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    return parse_scenario_text(text, path.parent_path());
}

json serialize(const Scenario& s) {
    json doc = {{"schema_version", scenario_schema_version}, {"name", s.name}, {"task", std::string(s.task())}};
    if (s.system) doc["system"] = to_json(*s.system);
    if (s.tolerances != Tolerances{}) doc["tolerances"] = to_json(s.tolerances);
    doc["params"] = std::visit(
        [](const auto& p) -> json {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, UnitarityParams>) {
                return {{"sample_size", p.sample_size}, {"mode_box", p.mode_box}, {"support", p.support}, {"seed", p.seed}};
            } else if constexpr (std::is_same_v<P, HolonomyParams>) {
                return {{"loop", loop_json(p.loop)},
                        {"rtol", p.rtol},
                        {"estimator", p.estimator == Estimator::bargmann ? "bargmann" : "parallel_transport"}};
            } else if constexpr (std::is_same_v<P, MovingFrameParams>) {
                return {{"frame_modes", modes_json(p.frame_modes)},
                        {"member", p.member},
                        {"excursion", excursion_json(p.excursion)},
                        {"rtol", p.rtol}};
            } else if constexpr (std::is_same_v<P, HannayParams>) {
                return {{"family", family_json(p.family)},
                        {"loop", param_loop_json(p.loop)},
                        {"rtol", p.rtol},
                        {"refinement", p.refinement == PullbackRefinement::parameter_space ? "parameter_space" : "ray_geodesic"}};
            } else {
                json j = {{"basepoint", to_json(p.basepoint)}, {"n_loops", p.n_loops}, {"seed", p.seed}};
                if (!p.modes.empty()) j["modes"] = modes_json(p.modes);
                return j;
            }
        },
        s.params);
    return doc;
}

void apply_overrides(Scenario& s, std::optional<std::uint64_t> seed, std::optional<double> rtol) {
    if (rtol && !(*rtol > 0.0)) throw ConfigError("--rtol", "rtol must be > 0");
    std::visit(
        [&](auto& p) {
            if constexpr (requires { p.seed; })
                if (seed) p.seed = *seed;
            if constexpr (requires { p.rtol; })
                if (rtol) p.rtol = *rtol;
        },
        s.params);
}

}  // namespace koopgeo
