#pragma once

// Scenario files: JSON documents describing one computation.
//
//   {
//     "schema_version": 1,
//     "name": "...",
//     "task": "unitarity" | "holonomy" | "moving_frame" | "hannay" | "holonomy_sample",
//     "system": <operator>,        // required by unitarity and moving_frame
//     "params": { ... },           // task specific, see docs/scenario_schema.md
//     "tolerances": { ... }        // optional overrides of koopgeo::Tolerances
//   }
//
//   <operator> := {"type": "translation", "omega": [..], "t": x}
//               | {"type": "automorphism", "matrix": [[..], ..]}
//               | {"type": "composed", "factors": [<operator>, ..]}   // right to left
//   <ket>      := {"terms": [{"mode": [..], "re": x, "im": y}, ..]}

#include "koopgeo/hannay.hpp"
#include "koopgeo/holonomy.hpp"
#include "koopgeo/koopman.hpp"
#include "koopgeo/mode_space.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace koopgeo {

inline constexpr int scenario_schema_version = 1;

struct UnitarityParams {
    int sample_size = 100;
    std::int64_t mode_box = 3;  // support drawn from |n_i| <= mode_box
    int support = 4;            // modes per random ket
    std::uint64_t seed = 0;
    bool operator==(const UnitarityParams&) const = default;
};

struct CircleLoopSpec {
    double theta = pi / 2.0;
    ModeIndex first{0};
    ModeIndex second{1};
    std::size_t initial_nodes = 32;
    bool operator==(const CircleLoopSpec&) const = default;
};

struct PolygonLoopSpec {
    std::vector<KetVector> nodes;
    bool operator==(const PolygonLoopSpec&) const = default;
};

struct ConstantLoopSpec {
    KetVector ket{1};
    std::size_t nodes = 4;
    bool operator==(const ConstantLoopSpec&) const = default;
};

using LoopSpec = std::variant<CircleLoopSpec, PolygonLoopSpec, ConstantLoopSpec>;

struct HolonomyParams {
    LoopSpec loop;
    double rtol = 1e-6;
    Estimator estimator = Estimator::bargmann;
    bool operator==(const HolonomyParams&) const = default;
};

struct InjectionExcursion {
    double theta = 0.0;
    std::optional<ModeIndex> aux;
    bool operator==(const InjectionExcursion&) const = default;
};

struct PolygonExcursion {
    std::vector<KetVector> nodes;
    bool operator==(const PolygonExcursion&) const = default;
};

struct StationaryExcursion {
    bool operator==(const StationaryExcursion&) const = default;
};

using ExcursionSpec = std::variant<InjectionExcursion, PolygonExcursion, StationaryExcursion>;

struct MovingFrameParams {
    std::vector<ModeIndex> frame_modes;
    std::size_t member = 0;
    ExcursionSpec excursion;
    double rtol = 1e-10;
    bool operator==(const MovingFrameParams&) const = default;
};

struct CoherentRingSpec {
    double r = 1.0;
    int k_cut = 40;
    bool operator==(const CoherentRingSpec&) const = default;
};

struct ConstantFamilySpec {
    KetVector ket{1};
    bool operator==(const ConstantFamilySpec&) const = default;
};

// e^{i w beta}|n> on the circle chart; single-valued for integer w.
struct PurePhaseSpec {
    ModeIndex mode{0};
    std::int64_t winding = 1;
    bool operator==(const PurePhaseSpec&) const = default;
};

struct TabulatedSpec {
    std::string file;  // resolved against the scenario's directory
    std::size_t mode_dim = 1;
    double period = two_pi;
    ModeIndex label{0};
    bool operator==(const TabulatedSpec&) const = default;
};

using FamilySpec = std::variant<CoherentRingSpec, ConstantFamilySpec, PurePhaseSpec, TabulatedSpec>;

struct CircleParamLoop {
    std::size_t samples = 16;
    bool operator==(const CircleParamLoop&) const = default;
};

struct PointsParamLoop {
    std::vector<ParameterPoint> points;
    std::optional<ParameterPoint> closure;
    bool operator==(const PointsParamLoop&) const = default;
};

using ParamLoopSpec = std::variant<CircleParamLoop, PointsParamLoop>;

struct HannayParams {
    FamilySpec family;
    ParamLoopSpec loop;
    double rtol = 1e-6;
    PullbackRefinement refinement = PullbackRefinement::parameter_space;
    bool operator==(const HannayParams&) const = default;
};

struct HolonomySampleParams {
    KetVector basepoint{1};
    std::vector<ModeIndex> modes;
    int n_loops = 200;
    std::uint64_t seed = 0;
    bool operator==(const HolonomySampleParams&) const = default;
};

using TaskParams = std::variant<UnitarityParams, HolonomyParams, MovingFrameParams, HannayParams, HolonomySampleParams>;

struct Scenario {
    std::string name;
    std::optional<KoopmanOperator> system;
    TaskParams params;
    Tolerances tolerances;

    std::string_view task() const;
    bool operator==(const Scenario&) const = default;
};

// Validates the document; throws ConfigError naming the offending key.
// Relative tabulated-family paths are resolved against `base_dir`.
Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
Scenario parse_scenario_text(std::string_view text, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

nlohmann::json serialize(const Scenario& scenario);

// CLI overrides: seed applies to seeded tasks, rtol to refining tasks.
void apply_overrides(Scenario& scenario, std::optional<std::uint64_t> seed, std::optional<double> rtol);

// JSON encodings shared with the report writer.
nlohmann::json to_json(const ModeIndex& n);
nlohmann::json to_json(const KetVector& v);
nlohmann::json to_json(const KoopmanOperator& op);
nlohmann::json to_json(const Tolerances& tol);

}  // namespace koopgeo
