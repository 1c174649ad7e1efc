#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dplab/refinement.hpp"

namespace dplab {

/// Fixed-background 1+1 interior model: the reduced linear wave equation
/// phi_vv = phi_xx - V(v,x) phi on a periodic x grid (the angular proxy),
/// advanced in v over [v0, v_max], with blue-shift weight e^{kappa v}.
struct InteriorModel {
    double kappa = 0.0;  // > 0 in earnest runs; 0 for flat-space checks
    std::function<double(double, double)> potential;  // V(v, x)
    double potential_bound = 0.0;                     // declared sup |V|
    double v0 = 0.0;
    double v_max = 8.0;
    double x_length = 1.0;
};

InteriorModel flat_model(double v_span = 8.0);
InteriorModel constant_potential_model(double kappa, double v_const, double v_span = 8.0);

/// Initial slice data as callables so any resolution can sample them.
struct CauchyDatum {
    std::function<double(double)> phi0;
    std::function<double(double)> phi1;
};

CauchyDatum zero_datum();
/// Smooth periodic bump of the given width centred at x0, moving toward
/// increasing x (phi1 = -phi0'), the horizon-directed pulse.
CauchyDatum rightward_pulse(double x0 = 0.3, double width = 0.08, double amplitude = 1.0);
CauchyDatum standing_mode(int k, double amplitude = 1.0);

enum class Scheme { Leapfrog, Characteristic };

struct PipelineSpec {
    Scheme scheme = Scheme::Leapfrog;
    double cfl = 0.9;  // Characteristic requires cfl == 1 and a commensurate v-span
};

struct Evolution {
    int nx = 0;
    double dx = 0.0;
    std::vector<double> v_nodes;
    std::vector<std::vector<double>> phi;      // per v node
    std::vector<std::vector<double>> dphi_dv;  // per v node
    double datum_norm = 0.0;  // H1 x L2 norm squared of the initial data
};

/// Evolves the datum at the given x resolution. Throws
/// std::invalid_argument on a CFL violation and EvolutionBlowup (with the
/// step index) on NaN/overflow.
Evolution evolve_interior(const InteriorModel& model, const CauchyDatum& d, PipelineSpec spec,
                          int resolution);

/// Unweighted slice energy sum ((phi_v)^2 + (phi_x)^2 + V phi^2)/2 dx.
double slice_energy(const InteriorModel& model, const Evolution& evo, std::size_t slice);

/// Trapezoid quadrature of e^{kappa v} |phi_v(v,.)|^2_{L2} over [va, vb],
/// endpoints snapped to stored v nodes. Additive over adjacent intervals
/// exactly at shared nodes.
double weighted_flux(const InteriorModel& model, const Evolution& evo, double va, double vb);

struct TailResult {
    double flux = 0.0;
    bool admissible = false;
};

struct TailOptions {
    int windows = 4;          // scheduled tail checkpoints
    double cap_factor = 1e6;  // admissible iff flux <= cap_factor * the datum norm
};

/// Finite surrogate of the limiting tail flux: the minimum of
/// weighted_flux(v_start, v1) over the scheduled checkpoints v1.
TailResult flux_tail(const InteriorModel& model, const Evolution& evo, double v_start,
                     const TailOptions& opts = {});

struct TraceCandidate {
    std::vector<double> trace;  // final-window time average of phi
    std::string policy_id;
    double flux_at_extraction = 0.0;
    double e0 = 0.0;    // weighted tail energy over the extraction window
    double phi1 = 0.0;  // late-time unweighted energy sampled at the policy stride
};

struct ExtractOptions {
    bool e0_includes_dx = true;  // derivative set of the primary cost
    double tail_start_fraction = 0.5;
    TailOptions tail;
};

/// One candidate per policy: the policy's stage(max_level) declares the
/// trailing-window fraction and subsequence stride. Throws
/// InadmissibleDatum when the tail flux exceeds its cap.
std::vector<TraceCandidate> extract_traces(const InteriorModel& model, const CauchyDatum& d,
                                           const PolicyFamily& fam, PipelineSpec spec,
                                           int resolution, const ExtractOptions& opts = {});

/// Extraction policy: x resolution doubles per level, trailing window
/// fraction base_window * 2^-(n-1), stride from sample_count.
RefinementPolicy extraction_policy(std::string id, int base_resolution, double base_window,
                                   int max_level, int samples0 = 8);

struct UtConfig {
    std::vector<double> q_grid;  // tolerance menu for the tameness check
};

struct SelectionOutcome {
    TraceCandidate chosen;
    double e0 = 0.0;
    double phi1 = 0.0;
    bool ut_passed = false;
    int tie_set_size = 0;
};

struct SelectOptions {
    double e0_band = 1e-9;    // relative band within which e0 values tie
    double phi1_band = 1e-9;  // relative band within which phi1 values tie
};

/// Lexicographic minimum over UT-passing candidates: e0 (banded), then
/// phi1 (banded), then first policy id in input order; tie set size
/// recorded. Throws NoTameContinuation when every candidate fails UT.
SelectionOutcome select_continuation(const std::vector<TraceCandidate>& candidates,
                                     const UtConfig& ut, const SelectOptions& opts = {});

/// | [e^{kv} E(v)]_{v1}^{v2} - slab integral of kappa e^{kv} |phi_v|^2 |
/// with E the slice energy; for horizon-directed data the transverse
/// contribution vanishes and the residual converges at the scheme order.
double energy_identity_residual(const InteriorModel& model, const Evolution& evo, double v1,
                                double v2);

/// Full pipeline under two schemes; per resolution,
/// rms(chosenA - chosenB) / (1 + rms(chosenA)).
std::vector<double> cross_pipeline_divergence(const InteriorModel& model, const CauchyDatum& d,
                                              PipelineSpec a, PipelineSpec b,
                                              const std::vector<int>& resolutions,
                                              const PolicyFamily& fam, const UtConfig& ut,
                                              const ExtractOptions& opts = {});

}  // namespace dplab
