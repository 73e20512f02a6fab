#ifndef CRITMIX_MAPS_HPP
#define CRITMIX_MAPS_HPP

#include "critmix/scaled.hpp"

#include <json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace critmix {

using Symbol = std::uint32_t;
using Word = std::vector<Symbol>;

enum class MapKind { Good, Bad };

/// One good map (exponent r >= 1) or bad map (exponent l > 1).
struct MapSpec {
    MapKind kind = MapKind::Good;
    double exponent = 1.0;

    static MapSpec good(double r) { return {MapKind::Good, r}; }
    static MapSpec bad(double l) { return {MapKind::Bad, l}; }

    bool is_good() const noexcept { return kind == MapKind::Good; }
    bool is_bad() const noexcept { return kind == MapKind::Bad; }
    void validate() const;

    friend bool operator==(const MapSpec&, const MapSpec&) = default;
};

/// Gap to 1/2 on the left half: u = 1 - 2x for x in [0, 1/2).
struct LeftGap {
    double value = 1.0;

    static LeftGap from_x(double x);
    double to_x() const noexcept { return 0.5 - 0.5 * value; }
};

double eval_map(const MapSpec& spec, double x);
double deriv_map(const MapSpec& spec, double x);
/// log2 of the left-branch derivative at gap u.
double log2_left_deriv(const MapSpec& spec, double log2_gap) noexcept;

double invert_left_branch(const MapSpec& spec, double y);
double invert_right_branch(double y);
double critical_point(const MapSpec& spec);

/// L_g^{-1}(1/2) and L_b^{-1}(1/4), the left endpoints of the pull-back intervals.
double left_preimage_threshold(const MapSpec& spec);

struct FamilyConstants {
    double theta = 0.0;
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    /// pi_b per symbol; NaN at good indices.
    std::vector<double> pi;
    double p_bad = 0.0;
    double p_good = 0.0;
    double p_good_min = 0.0;
    double s = 0.0;
    double l_max = 0.0;
    double l_min = 0.0;
    double r_max = 0.0;
    double r_min = 0.0;
    bool has_acs = false;
    bool thm14_applicable = false;
    /// theta < 1 / l_max, the stronger hypothesis for general-support CLT.
    bool strong_clt = false;
};

class MapFamily {
public:
    /// Strict construction: both kinds present, probabilities positive and normalized.
    MapFamily(std::vector<MapSpec> specs, std::vector<double> probs);

    /// Allows zero probabilities and a family without good or without bad maps.
    /// Used for single-kind comparison systems; not reachable from the CLI.
    static MapFamily relaxed(std::vector<MapSpec> specs, std::vector<double> probs);

    static MapFamily from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    std::size_t size() const noexcept { return specs_.size(); }
    const std::vector<MapSpec>& specs() const noexcept { return specs_; }
    const MapSpec& spec(Symbol j) const { return specs_.at(j); }
    const std::vector<double>& probs() const noexcept { return probs_; }
    double prob(Symbol j) const { return probs_.at(j); }
    bool is_good(Symbol j) const { return specs_.at(j).is_good(); }
    const FamilyConstants& constants() const noexcept { return constants_; }
    const std::vector<Symbol>& good_symbols() const noexcept { return good_; }
    const std::vector<Symbol>& bad_symbols() const noexcept { return bad_; }

    /// Probability of a finite word.
    double word_prob(std::span<const Symbol> w) const;

    friend bool operator==(const MapFamily& a, const MapFamily& b)
    {
        return a.specs_ == b.specs_ && a.probs_ == b.probs_;
    }

private:
    MapFamily(std::vector<MapSpec> specs, std::vector<double> probs, bool strict);

    std::vector<MapSpec> specs_;
    std::vector<double> probs_;
    std::vector<Symbol> good_;
    std::vector<Symbol> bad_;
    FamilyConstants constants_;
};

FamilyConstants family_constants(const MapFamily& family);

/// Product of the exponents of a bad word, as a natural log.
double log_word_exponent(const MapFamily& family, std::span<const Symbol> word);

double compose_bad_left(const MapFamily& family, std::span<const Symbol> word, double x);
LeftGap compose_bad_left(const MapFamily& family, std::span<const Symbol> word, LeftGap u);
Scaled compose_bad_left(const MapFamily& family, std::span<const Symbol> word, const Scaled& u);
double invert_bad_left(const MapFamily& family, std::span<const Symbol> word, double y);

/// The three example regimes for the lower-bound theorem, checked directly.
struct RegimeChecks {
    bool single_bad_exponent = false;
    bool narrow_band = false;
    bool heavy_top = false;
};
RegimeChecks regime_checks(const MapFamily& family);

} // namespace critmix

#endif
