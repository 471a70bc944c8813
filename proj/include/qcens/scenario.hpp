#pragma once

#include <map>
#include <string>
#include <vector>

#include "qcens/bridge.hpp"
#include "qcens/field.hpp"
#include "qcens/grid.hpp"

namespace qcens {

/// Potential descriptor. `kind` selects the form:
///   none            V = 0
///   free_fall       V = M g q                    (strength = g)
///   harmonic        V = k q^2 / 2                (strength = k)
///   hybrid_harmonic V = k (q - x)^2              (strength = k, hybrid only)
///   custom_poly     classical: V = strength * expr(q); hybrid: expr is the
///                   even shape in the separation s = q - x (written as a
///                   poly in q), applied as strength * expr(q - x)
struct PotentialSpec {
    std::string kind = "none";
    double strength = 1.0;
    std::string expr;
};

/// Initial state: a normalized product of Gaussians, one factor per grid
/// axis, times exp(i action / hbar) where the scenario carries a phase (for
/// (P,S) ensembles the action field is S itself).
struct StateSpec {
    std::map<std::string, double> center;  // per axis name, default 0
    std::map<std::string, double> width;   // per axis name, default 1
    std::string action;                    // polynomial text, "" = zero
};

struct IntegratorSpec {
    double dt = 0.01;
    double time = 1.0;
    int stride = 10;          // emit a series row every `stride` steps
    int splitting_order = 2;  // only the shipped Strang order is accepted
};

struct OutputSpec {
    std::vector<std::string> observables;  // phase-function polynomials F(q,p)
    std::vector<double> snapshot_times;    // multiples of dt within [0, T]
    bool report = true;
};

/// One runnable scenario. `scenario` selects the model:
///   ecs            (P,S) on q            axes: q
///   eps            (rho,sigma) on (q,p)  axes: q,p
///   vanhove        phi on (q,p)          axes: q,p
///   hybrid_ecs     (P,S) on (q,x)        axes: q,x
///   hybrid_hilbert psi on (q,p,x)        axes: q,p,x
///   lambda_sweep   Bohm-energy split of the entangled Gaussian family
///                  at each lambda        axes: q,p,x
///   galilei_check  symbolic + operator + functional bracket relations
///                  axes: q,p
///   bridge         mixture-of-configuration-ensembles path vs the direct
///                  Liouville path        axes: q,p (potential none|free_fall)
struct ScenarioConfig {
    std::string scenario;
    std::vector<Axis> axes;
    double classical_mass = 1.0;
    double quantum_mass = 1.0;
    double hbar = 1.0;
    PotentialSpec potential;
    StateSpec state;
    IntegratorSpec integrator;
    OutputSpec outputs;
    std::vector<double> lambdas;  // lambda_sweep only
};

/// Parse a config from text. Two formats, detected by the first non-space
/// character: '{' starts a JSON object; anything else is the key-value
/// grammar (one `key = value` per line, '#' comments, dotted keys, repeated
/// `axis = name min max points [boundary]` lines, comma-separated arrays).
/// Throws ConfigError on anything malformed. Does not validate semantics —
/// call check_scenario for that.
ScenarioConfig parse_scenario(const std::string& text);

/// Semantic validation: known scenario, the exact axis set it needs, positive
/// masses/hbar/widths, integrator sanity, potential kind admissible for the
/// scenario, polynomials restricted to the variables the model carries,
/// snapshot times on the step grid. Throws ConfigError.
void check_scenario(const ScenarioConfig& cfg);

/// Multiply every axis point count by `scale` (result rounded to the nearest
/// even count, floor 8). scale must be positive and finite.
ScenarioConfig with_resolution_scale(ScenarioConfig cfg, double scale);

struct SnapshotField {
    std::string label;  // e.g. "P_t0.5"
    RealField field;
};

/// Everything a scenario emits, format-agnostic: a rectangular time series
/// (columns[0] is "time", or "lambda" for sweeps), labeled field snapshots,
/// and a JSON report string ("" when reports are toggled off). `passed` is
/// false when a check-type scenario (galilei_check, lambda_sweep) found a
/// violated relation.
struct ScenarioResult {
    std::string scenario;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<SnapshotField> snapshots;
    std::string report;
    bool passed = true;
};

/// Execute the scenario. Throws NumericalAbort when an evolution aborts,
/// ConfigError when the config is invalid. Deterministic: no randomness,
/// fixed iteration order.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

/// Bridge scenario with the evolved mixture kept for archiving. The momentum
/// axis doubles as the label axis; the delta ridges are mollified to twice
/// its spacing. Both paths start from the same recomposed initial density so
/// the comparison isolates the transport, not the mollification.
struct BridgeOutcome {
    ScenarioResult result;
    MixtureDecomposition mixture;
};
BridgeOutcome run_bridge_scenario(const ScenarioConfig& cfg);

/// Serialized forms of the time series (deterministic shortest-roundtrip
/// numerals in both).
std::string series_to_csv(const ScenarioResult& r);
std::string series_to_json(const ScenarioResult& r);

}  // namespace qcens
