#include "critmix/maps.hpp"

#include "critmix/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace critmix {

namespace {

void check_unit(double x, const char* what)
{
    if (!(x >= 0.0 && x <= 1.0))
        throw Error(ErrorKind::Domain, "out_of_domain", std::string(what) + " must lie in [0,1]");
}

std::string kind_name(MapKind k)
{
    return k == MapKind::Good ? "good" : "bad";
}

} // namespace

void MapSpec::validate() const
{
    if (!std::isfinite(exponent))
        throw Error(ErrorKind::Validation, "invalid_exponent", "exponent must be finite");
    if (kind == MapKind::Good && !(exponent >= 1.0))
        throw Error(ErrorKind::Validation, "invalid_exponent", "good map needs exponent >= 1");
    if (kind == MapKind::Bad && !(exponent > 1.0))
        throw Error(ErrorKind::Validation, "invalid_exponent", "bad map needs exponent > 1");
}

LeftGap LeftGap::from_x(double x)
{
    if (!(x >= 0.0 && x < 0.5))
        throw Error(ErrorKind::Domain, "out_of_domain", "left gap needs x in [0,1/2)");
    return LeftGap{1.0 - 2.0 * x};
}

double eval_map(const MapSpec& spec, double x)
{
    spec.validate();
    check_unit(x, "x");
    if (x >= 0.5)
        return 2.0 * x - 1.0;
    const double u = 1.0 - 2.0 * x;
    if (spec.is_good())
        return 1.0 - std::pow(u, spec.exponent);
    return 0.5 - 0.5 * std::pow(u, spec.exponent);
}

double deriv_map(const MapSpec& spec, double x)
{
    spec.validate();
    check_unit(x, "x");
    if (x >= 0.5)
        return 2.0;
    const double u = 1.0 - 2.0 * x;
    const double e = spec.exponent;
    if (spec.is_good())
        return 2.0 * e * std::pow(u, e - 1.0);
    return e * std::pow(u, e - 1.0);
}

double log2_left_deriv(const MapSpec& spec, double log2_gap) noexcept
{
    const double e = spec.exponent;
    const double lead = spec.is_good() ? 1.0 + std::log2(e) : std::log2(e);
    if (e == 1.0)
        return lead;
    return lead + (e - 1.0) * log2_gap;
}

double invert_left_branch(const MapSpec& spec, double y)
{
    spec.validate();
    if (spec.is_good()) {
        if (!(y >= 0.0 && y < 1.0))
            throw Error(ErrorKind::Domain, "out_of_domain", "good left branch image is [0,1)");
        return 0.5 * (1.0 - std::pow(1.0 - y, 1.0 / spec.exponent));
    }
    if (!(y >= 0.0 && y < 0.5))
        throw Error(ErrorKind::Domain, "out_of_domain", "bad left branch image is [0,1/2)");
    return 0.5 * (1.0 - std::pow(1.0 - 2.0 * y, 1.0 / spec.exponent));
}

double invert_right_branch(double y)
{
    check_unit(y, "y");
    return 0.5 * (y + 1.0);
}

double critical_point(const MapSpec& spec)
{
    spec.validate();
    const double e = spec.exponent;
    if (spec.is_good()) {
        if (e == 1.0)
            throw Error(ErrorKind::UndefinedPoint, "undefined_point",
                        "doubling branch has constant derivative 2");
        return 0.5 - std::pow(e * std::pow(2.0, e), 1.0 / (1.0 - e));
    }
    return 0.5 * (1.0 - std::pow(e, 1.0 / (1.0 - e)));
}

double left_preimage_threshold(const MapSpec& spec)
{
    spec.validate();
    return 0.5 * (1.0 - std::pow(2.0, -1.0 / spec.exponent));
}

MapFamily::MapFamily(std::vector<MapSpec> specs, std::vector<double> probs)
    : MapFamily(std::move(specs), std::move(probs), true)
{
}

MapFamily MapFamily::relaxed(std::vector<MapSpec> specs, std::vector<double> probs)
{
    return MapFamily(std::move(specs), std::move(probs), false);
}

MapFamily::MapFamily(std::vector<MapSpec> specs, std::vector<double> probs, bool strict)
    : specs_(std::move(specs)), probs_(std::move(probs))
{
    if (specs_.empty())
        throw Error(ErrorKind::Validation, "empty_family", "family needs at least one map");
    if (specs_.size() != probs_.size())
        throw Error(ErrorKind::Validation, "size_mismatch", "maps and probs differ in length");
    for (const auto& s : specs_)
        s.validate();
    double total = 0.0;
    for (double p : probs_) {
        if (!std::isfinite(p) || p < 0.0 || (strict && p == 0.0))
            throw Error(ErrorKind::Validation, "probs_nonpositive",
                        "probabilities must be strictly positive");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw Error(ErrorKind::Validation, "probs_not_normalized", "probabilities must sum to 1");
    for (Symbol j = 0; j < specs_.size(); ++j)
        (specs_[j].is_good() ? good_ : bad_).push_back(j);
    if (strict && good_.empty())
        throw Error(ErrorKind::Validation, "no_good_map", "family needs a good map");
    if (strict && bad_.empty())
        throw Error(ErrorKind::Validation, "no_bad_map", "family needs a bad map");
    constants_ = family_constants(*this);
}

MapFamily MapFamily::from_json(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("maps") || !j.contains("probs"))
        throw Error(ErrorKind::Validation, "invalid_family_json", "expected {\"maps\":[...],\"probs\":[...]}");
    std::vector<MapSpec> specs;
    std::vector<double> probs;
    try {
        for (const auto& m : j.at("maps")) {
            const std::string kind = m.at("kind").get<std::string>();
            const double e = m.at("exponent").get<double>();
            if (kind == "good")
                specs.push_back(MapSpec::good(e));
            else if (kind == "bad")
                specs.push_back(MapSpec::bad(e));
            else
                throw Error(ErrorKind::Validation, "invalid_kind", "map kind must be good or bad");
        }
        probs = j.at("probs").get<std::vector<double>>();
    }
    catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Validation, "invalid_family_json", e.what());
    }
    return MapFamily(std::move(specs), std::move(probs));
}

nlohmann::json MapFamily::to_json() const
{
    nlohmann::json maps = nlohmann::json::array();
    for (const auto& s : specs_)
        maps.push_back({{"kind", kind_name(s.kind)}, {"exponent", s.exponent}});
    return {{"maps", maps}, {"probs", probs_}};
}

double MapFamily::word_prob(std::span<const Symbol> w) const
{
    double p = 1.0;
    for (Symbol j : w)
        p *= probs_.at(j);
    return p;
}

FamilyConstants family_constants(const MapFamily& family)
{
    FamilyConstants c;
    const auto& specs = family.specs();
    const auto& probs = family.probs();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    c.pi.assign(specs.size(), nan);
    c.l_max = c.r_max = 0.0;
    c.l_min = c.r_min = std::numeric_limits<double>::infinity();
    c.p_good_min = std::numeric_limits<double>::infinity();
    double inv_s = std::numeric_limits<double>::infinity();
    for (Symbol j = 0; j < specs.size(); ++j) {
        const double e = specs[j].exponent;
        const double p = probs[j];
        if (specs[j].is_good()) {
            c.p_good += p;
            c.r_max = std::max(c.r_max, e);
            c.r_min = std::min(c.r_min, e);
            c.p_good_min = std::min(c.p_good_min, p);
            inv_s = std::min(inv_s, 2.0 * e * std::pow(2.0, -(e - 1.0) / e));
        }
        else {
            c.p_bad += p;
            c.theta += p * e;
            c.l_max = std::max(c.l_max, e);
            c.l_min = std::min(c.l_min, e);
            inv_s = std::min(inv_s, e * std::pow(2.0, -(e - 1.0) / e));
        }
    }
    if (family.bad_symbols().empty()) {
        c.l_min = c.l_max = nan;
        c.gamma1 = c.gamma2 = -std::numeric_limits<double>::infinity();
    }
    else {
        c.gamma1 = std::log(c.theta) / std::log(c.l_max);
        double best = -std::numeric_limits<double>::infinity();
        for (Symbol b : family.bad_symbols()) {
            double pi = 0.0;
            for (Symbol j : family.bad_symbols())
                if (specs[j].exponent >= specs[b].exponent)
                    pi += probs[j];
            c.pi[b] = pi;
            best = std::max(best, std::log(pi) / std::log(specs[b].exponent));
        }
        c.gamma2 = 1.0 + best;
    }
    if (family.good_symbols().empty()) {
        c.r_min = c.r_max = c.p_good_min = nan;
    }
    c.s = 1.0 / inv_s;
    c.has_acs = c.theta < 1.0;
    if (c.has_acs && !family.bad_symbols().empty()) {
        if (c.gamma1 < -1.0)
            c.thm14_applicable = c.gamma2 > c.gamma1 - 1.0;
        else
            c.thm14_applicable = c.gamma2 > 2.0 * c.gamma1;
    }
    c.strong_clt = family.bad_symbols().empty() || c.theta < 1.0 / c.l_max;
    return c;
}

double log_word_exponent(const MapFamily& family, std::span<const Symbol> word)
{
    double s = 0.0;
    for (Symbol j : word) {
        const MapSpec& sp = family.spec(j);
        if (!sp.is_bad())
            throw Error(ErrorKind::Domain, "not_bad_word", "word contains a good symbol");
        s += std::log(sp.exponent);
    }
    return s;
}

namespace {

// u^(l_word) for a gap u in (0,1]; direct product up to 64 letters, log-space beyond.
double gap_power(const MapFamily& family, std::span<const Symbol> word, double u)
{
    if (word.empty())
        return u;
    if (word.size() <= 64) {
        double e = 1.0;
        for (Symbol j : word) {
            const MapSpec& sp = family.spec(j);
            if (!sp.is_bad())
                throw Error(ErrorKind::Domain, "not_bad_word", "word contains a good symbol");
            e *= sp.exponent;
        }
        return std::pow(u, e);
    }
    const double le = log_word_exponent(family, word);
    if (u == 1.0)
        return 1.0;
    return std::exp(-std::exp(le + std::log(-std::log(u))));
}

} // namespace

double compose_bad_left(const MapFamily& family, std::span<const Symbol> word, double x)
{
    const LeftGap u = LeftGap::from_x(x);
    if (word.empty())
        return x;
    return 0.5 - 0.5 * gap_power(family, word, u.value);
}

LeftGap compose_bad_left(const MapFamily& family, std::span<const Symbol> word, LeftGap u)
{
    if (!(u.value > 0.0 && u.value <= 1.0))
        throw Error(ErrorKind::Domain, "out_of_domain", "gap must lie in (0,1]");
    return LeftGap{gap_power(family, word, u.value)};
}

Scaled compose_bad_left(const MapFamily& family, std::span<const Symbol> word, const Scaled& u)
{
    Scaled v = u;
    if (word.size() <= 64) {
        double e = 1.0;
        for (Symbol j : word) {
            if (!family.spec(j).is_bad())
                throw Error(ErrorKind::Domain, "not_bad_word", "word contains a good symbol");
            e *= family.spec(j).exponent;
        }
        return word.empty() ? v : v.pow(e);
    }
    for (Symbol j : word)
        v = v.pow(family.spec(j).exponent);
    return v;
}

double invert_bad_left(const MapFamily& family, std::span<const Symbol> word, double y)
{
    if (!(y >= 0.0 && y < 0.5))
        throw Error(ErrorKind::Domain, "out_of_domain", "y must lie in [0,1/2)");
    if (word.empty())
        return y;
    const double le = log_word_exponent(family, word);
    const double v = 1.0 - 2.0 * y;
    return 0.5 - 0.5 * std::pow(v, std::exp(-le));
}

RegimeChecks regime_checks(const MapFamily& family)
{
    RegimeChecks r;
    const auto& c = family.constants();
    if (family.bad_symbols().empty() || !c.has_acs)
        return r;
    r.single_bad_exponent = family.bad_symbols().size() == 1;
    const double pb = c.p_bad;
    r.narrow_band = std::pow(pb, -1.0 / 3.0) < c.l_min && c.l_max < std::pow(pb, -0.5);
    double pi_top = 0.0;
    for (Symbol b : family.bad_symbols())
        if (family.spec(b).exponent == c.l_max)
            pi_top += family.prob(b);
    r.heavy_top = pi_top > std::pow(pb, 4.0 / 3.0) && c.l_max >= std::pow(pi_top, -0.5)
        && c.l_max < pi_top / (pb * pb);
    return r;
}

} // namespace critmix
