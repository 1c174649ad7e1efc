#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dplab/grid.hpp"

namespace dplab {

enum class Protocol { Imaging, Barrier, Ising, Pointer, Horizon };

Protocol protocol_from_name(const std::string& name);
std::string protocol_name(Protocol p);

struct Thresholds {
    double decay_ratio = 0.5;   // decaying: last <= ratio * first
    double slack = 0.1;         // tolerated relative uptick between levels
    double floor = 1e-9;        // indices at/below this count as zero
    double plateau_band = 0.1;  // plateau: final two levels within this band
};

enum class Verdict { Decaying, Plateau, Inconclusive };
std::string verdict_name(Verdict v);

/// Trend test over an index curve:
///   decaying     last <= max(ratio * first, floor) and nonincreasing
///                within the multiplicative slack (floor-padded);
///   plateau      final two entries within the band of each other and the
///                last above the floor;
///   inconclusive otherwise.
Verdict verdict(const std::vector<double>& indices, const Thresholds& t);

/// Protocol configuration. Common knobs are typed; per-protocol settings
/// live in the `extra` document under a key named after the protocol (see
/// README for the schemas). Canonicalization sorts keys, so the config
/// hash is representation independent.
struct ProtocolConfig {
    Protocol protocol = Protocol::Imaging;
    std::uint64_t seed = 1;
    int ensemble_size = 4;
    int levels = 3;  // >= 2
    int quorum = 1;
    std::vector<std::string> recodings = {"identity"};
    Thresholds thresholds;
    nlohmann::json extra;  // per-protocol section, may be empty

    static ProtocolConfig from_json(const nlohmann::json& j);
    nlohmann::json canonical_json() const;
    std::string hash() const;  // FNV-1a 64 over the canonical dump, hex
};

struct MemberDiagnostics {
    int member = 0;
    bool ok = true;
    std::string error;
};

struct StabilityReport {
    std::string protocol;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<double> ssi;  // levels 1..L-1
    std::vector<double> sc;   // levels 1..L
    Verdict verdict = Verdict::Inconclusive;
    std::vector<MemberDiagnostics> diagnostics;
    int survivors = 0;

    nlohmann::json to_json() const;  // deterministic; carries no timestamps
};

/// Uniform view of a protocol for the stability indices: the selected
/// output per (member, policy, level) plus the commutation gap per
/// (member, recoding, level). Outputs at different levels may live on
/// different grids; distances resample the first argument onto the
/// second's grid when shapes differ.
class ProtocolDriver {
public:
    virtual ~ProtocolDriver() = default;
    virtual int policy_count() const = 0;
    virtual int level_count() const = 0;
    virtual int recoding_count() const = 0;
    virtual Field output(int member, int policy, int level) = 0;
    virtual double recoding_gap(int member, int recoding, int level) = 0;
};

std::unique_ptr<ProtocolDriver> make_driver(const ProtocolConfig& cfg);

/// SSI(n) = mean over members of the max over policies of the normalized
/// distance between the selected outputs at stages n and n+1.
std::vector<double> ssi_curve(ProtocolDriver& d, const std::vector<int>& members);

/// SC(n) = mean over members of the max over recodings of the commutation
/// gap at stage n.
std::vector<double> sc_curve(ProtocolDriver& d, const std::vector<int>& members);

/// Runs the protocol over ensemble x policies x recodings x levels.
/// Members that throw are excluded and reported; fewer survivors than the
/// quorum raises QuorumFailure. Identical (config, seed) produce
/// byte-identical reports.
StabilityReport run_protocol(const ProtocolConfig& cfg);

/// Writes report.json plus one CSV per index curve into dir; a separate
/// meta.json carries the wall-clock timestamp so the report itself stays
/// reproducible.
void write_report(const StabilityReport& report, const ProtocolConfig& cfg,
                  const std::string& dir);

// ---------------------------------------------------------------------------
// Invariant selection over finite labeled fibers

struct LabeledFibers {
    // fiber id -> member labels (non-empty)
    std::map<std::string, std::vector<std::string>> fibers;
};

struct GroupAction {
    std::string name;
    std::map<std::string, std::string> label_map;  // permutation of labels
};

struct SelectionReport {
    std::map<std::string, std::string> selector;      // fiber -> chosen label
    bool equivariant = true;
    std::vector<std::string> violations;              // "action:fiber" entries
    std::vector<std::string> multiplicity_fibers;     // fibers where the tie-break decided
};

/// Picks the cost-minimal label per fiber (ties by label order) and checks
/// s(T x) = T s(x) for every action; fibers whose argmin set has more than
/// one element are flagged, since there the choice depends on the declared
/// tie-break.
SelectionReport invariant_selection(const LabeledFibers& fibers,
                                    const std::map<std::string, double>& cost,
                                    const std::vector<GroupAction>& group);

}  // namespace dplab
