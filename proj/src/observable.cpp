#include "critmix/observable.hpp"

#include "critmix/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace critmix {

namespace {

Error invalid(const std::string& msg)
{
    return Error(ErrorKind::Validation, "invalid_observable", msg);
}

double bump_value(double lo, double hi, double x) noexcept
{
    if (!(x > lo && x < hi))
        return 0.0;
    const double w = 0.5 * (hi - lo);
    const double t = 1.0 - std::abs(x - 0.5 * (lo + hi)) / w;
    return t > 0.0 ? t * t : 0.0;
}

// Antiderivative of (1-|t|)^2 on [-1,1], zero at t=0.
double bump_primitive(double t) noexcept
{
    t = std::clamp(t, -1.0, 1.0);
    if (t >= 0.0) {
        const double a = 1.0 - t;
        return (1.0 - a * a * a) / 3.0;
    }
    const double a = 1.0 + t;
    return (a * a * a - 1.0) / 3.0;
}

double bump_integral(double lo, double hi, double a, double b) noexcept
{
    a = std::max(a, lo);
    b = std::min(b, hi);
    if (b <= a)
        return 0.0;
    const double c = 0.5 * (lo + hi);
    const double w = 0.5 * (hi - lo);
    return w * (bump_primitive((b - c) / w) - bump_primitive((a - c) / w));
}

double cylinder_mean(const MapFamily& family, const std::vector<double>& coef, int depth)
{
    const std::size_t n = family.size();
    double total = 0.0;
    for (std::size_t idx = 0; idx < coef.size(); ++idx) {
        std::size_t rem = idx;
        double p = 1.0;
        std::vector<std::size_t> digits(static_cast<std::size_t>(depth));
        for (int i = depth - 1; i >= 0; --i) {
            digits[static_cast<std::size_t>(i)] = rem % n;
            rem /= n;
        }
        for (std::size_t d : digits)
            p *= family.prob(static_cast<Symbol>(d));
        total += p * coef[idx];
    }
    return total;
}

const char* kind_name(ObservableKind k)
{
    switch (k) {
    case ObservableKind::BumpX:
        return "bump_x";
    case ObservableKind::ProductCylinderBump:
        return "product_cylinder_bump";
    case ObservableKind::IndicatorBV:
        return "indicator_bv";
    case ObservableKind::Constant:
        return "constant";
    }
    return "?";
}

ObservableKind kind_from_name(const std::string& s)
{
    if (s == "bump_x")
        return ObservableKind::BumpX;
    if (s == "product_cylinder_bump")
        return ObservableKind::ProductCylinderBump;
    if (s == "indicator_bv")
        return ObservableKind::IndicatorBV;
    if (s == "constant")
        return ObservableKind::Constant;
    throw invalid("unknown observable kind '" + s + "'");
}

} // namespace

Observable Observable::make(const MapFamily& family, ObservableKind kind,
                            const ObservableParams& params)
{
    Observable o;
    o.alphabet_ = family.size();
    if (!(params.alpha > 0.0 && params.alpha <= 1.0))
        throw invalid("alpha must lie in (0,1]");
    o.alpha_ = params.alpha;
    Term t;
    t.kind = kind;
    switch (kind) {
    case ObservableKind::BumpX:
    case ObservableKind::IndicatorBV:
        if (!(params.lo >= 0.0 && params.hi <= 1.0 && params.lo < params.hi))
            throw invalid("support must be a nonempty subinterval of [0,1]");
        t.lo = params.lo;
        t.hi = params.hi;
        break;
    case ObservableKind::ProductCylinderBump: {
        if (!(params.lo >= 0.0 && params.hi <= 1.0 && params.lo < params.hi))
            throw invalid("support must be a nonempty subinterval of [0,1]");
        if (params.depth < 0 || params.depth > 12)
            throw invalid("cylinder depth must lie in [0,12]");
        std::size_t need = 1;
        for (int i = 0; i < params.depth; ++i)
            need *= family.size();
        if (params.coefficients.size() != need)
            throw invalid("coefficient table needs " + std::to_string(need) + " entries");
        for (double c : params.coefficients)
            if (!std::isfinite(c))
                throw invalid("coefficients must be finite");
        t.lo = params.lo;
        t.hi = params.hi;
        t.depth = params.depth;
        t.coefficients = params.coefficients;
        break;
    }
    case ObservableKind::Constant:
        if (!std::isfinite(params.value))
            throw invalid("constant must be finite");
        if (params.value == 0.0)
            return o;
        t.weight = params.value;
        break;
    }
    o.terms_.push_back(std::move(t));
    return o;
}

double Observable::term_value(const Term& t, const SymbolStream& omega, std::uint64_t offset,
                              double x) const
{
    switch (t.kind) {
    case ObservableKind::BumpX:
        return bump_value(t.lo, t.hi, x);
    case ObservableKind::ProductCylinderBump: {
        const double b = bump_value(t.lo, t.hi, x);
        if (b == 0.0)
            return 0.0;
        std::size_t idx = 0;
        for (int i = 0; i < t.depth; ++i)
            idx = idx * alphabet_ + omega.at(offset + static_cast<std::uint64_t>(i));
        return t.coefficients[idx] * b;
    }
    case ObservableKind::IndicatorBV:
        return (x >= t.lo && x <= t.hi) ? 1.0 : 0.0;
    case ObservableKind::Constant:
        return 1.0;
    }
    return 0.0;
}

double Observable::operator()(const SymbolStream& omega, std::uint64_t offset, double x) const
{
    double s = 0.0;
    for (const Term& t : terms_)
        s += t.weight * term_value(t, omega, offset, x);
    return s;
}

bool Observable::window_supported() const noexcept
{
    for (const Term& t : terms_) {
        if (t.kind == ObservableKind::Constant)
            return false;
        if (t.lo < 0.5 || t.hi > 0.75)
            return false;
    }
    return true;
}

bool Observable::thm14_compatible() const noexcept
{
    return window_supported() && std::isfinite(holder_constant());
}

int Observable::depth() const noexcept
{
    int d = 0;
    for (const Term& t : terms_)
        d = std::max(d, t.depth);
    return d;
}

double Observable::holder_constant() const noexcept
{
    double total = 0.0;
    for (const Term& t : terms_) {
        double c = 0.0;
        switch (t.kind) {
        case ObservableKind::Constant:
            c = 0.0;
            break;
        case ObservableKind::IndicatorBV:
            return std::numeric_limits<double>::infinity();
        case ObservableKind::BumpX:
            c = std::pow(4.0 / (t.hi - t.lo), alpha_);
            break;
        case ObservableKind::ProductCylinderBump: {
            const double lip_a = std::pow(4.0 / (t.hi - t.lo), alpha_);
            const auto [mn, mx] = std::minmax_element(t.coefficients.begin(), t.coefficients.end());
            const double cabs = std::max(std::abs(*mn), std::abs(*mx));
            const double crange = *mx - *mn;
            const double sep = std::pow(2.0, alpha_ * t.depth);
            const double same = cabs * lip_a;
            const double diff = t.depth == 0 ? 0.0
                                             : std::min(2.0 * cabs * sep, crange * sep + cabs * lip_a);
            c = std::max(same, diff);
            break;
        }
        }
        total += std::abs(t.weight) * c;
    }
    return total;
}

double Observable::variation_bound() const noexcept
{
    double total = 0.0;
    for (const Term& t : terms_) {
        double v = 0.0;
        switch (t.kind) {
        case ObservableKind::Constant:
            break;
        case ObservableKind::IndicatorBV:
        case ObservableKind::BumpX:
            v = 2.0;
            break;
        case ObservableKind::ProductCylinderBump:
            for (double c : t.coefficients)
                v = std::max(v, 2.0 * std::abs(c));
            break;
        }
        total += std::abs(t.weight) * v;
    }
    return total;
}

double Observable::integral(const MapFamily& family, const DensityGrid& density) const
{
    double total = 0.0;
    for (const Term& t : terms_) {
        double s = 0.0;
        if (t.kind == ObservableKind::Constant) {
            for (double m : density.masses)
                s += m;
        } else {
            const double lo_cell = std::floor(t.lo * static_cast<double>(density.grid_size));
            const std::size_t first = static_cast<std::size_t>(std::max(0.0, lo_cell));
            for (std::size_t i = first; i < density.grid_size; ++i) {
                const double a = density.cell_lo(i);
                const double b = density.cell_hi(i);
                if (a >= t.hi)
                    break;
                const double len = t.kind == ObservableKind::IndicatorBV
                                       ? std::max(0.0, std::min(b, t.hi) - std::max(a, t.lo))
                                       : bump_integral(t.lo, t.hi, a, b);
                s += density.density(i) * len;
            }
            if (t.kind == ObservableKind::ProductCylinderBump)
                s *= cylinder_mean(family, t.coefficients, t.depth);
        }
        total += t.weight * s;
    }
    return total;
}

Observable Observable::plus(const Observable& other, double w) const
{
    Observable o = *this;
    if (o.terms_.empty()) {
        o.alphabet_ = other.alphabet_;
        o.alpha_ = other.alpha_;
    }
    if (!other.terms_.empty() && !terms_.empty() && other.alphabet_ != alphabet_)
        throw invalid("observables over different alphabets");
    o.alpha_ = std::min(o.alpha_, other.alpha_);
    if (w == 0.0)
        return o;
    for (Term t : other.terms_) {
        t.weight *= w;
        o.terms_.push_back(std::move(t));
    }
    return o;
}

nlohmann::json Observable::to_json() const
{
    nlohmann::json terms = nlohmann::json::array();
    for (const Term& t : terms_) {
        nlohmann::json j{{"kind", kind_name(t.kind)}, {"weight", t.weight}};
        if (t.kind != ObservableKind::Constant) {
            j["lo"] = t.lo;
            j["hi"] = t.hi;
        }
        if (t.kind == ObservableKind::ProductCylinderBump) {
            j["depth"] = t.depth;
            j["coefficients"] = t.coefficients;
        }
        terms.push_back(std::move(j));
    }
    return nlohmann::json{{"alpha", alpha_}, {"terms", std::move(terms)}};
}

Observable Observable::from_json(const MapFamily& family, const nlohmann::json& j)
{
    if (!j.is_object())
        throw invalid("observable must be a JSON object");
    try {
        const double alpha = j.value("alpha", 1.0);
        auto one = [&](const nlohmann::json& t) {
            ObservableParams p;
            p.alpha = alpha;
            p.lo = t.value("lo", p.lo);
            p.hi = t.value("hi", p.hi);
            p.depth = t.value("depth", 0);
            if (t.contains("coefficients"))
                p.coefficients = t.at("coefficients").get<std::vector<double>>();
            const ObservableKind kind = kind_from_name(t.at("kind").get<std::string>());
            if (kind == ObservableKind::Constant)
                p.value = t.value("value", 1.0);
            Observable o = make(family, kind, p);
            const double w = t.value("weight", 1.0);
            return Observable{}.plus(o, w);
        };
        if (!j.contains("terms"))
            return one(j);
        Observable acc;
        acc.alphabet_ = family.size();
        acc.alpha_ = alpha;
        for (const auto& t : j.at("terms"))
            acc = acc.plus(one(t), 1.0);
        return acc;
    } catch (const nlohmann::json::exception& e) {
        throw invalid(e.what());
    }
}

double product_metric(const SymbolStream& w1, std::uint64_t o1, double x1,
                      const SymbolStream& w2, std::uint64_t o2, double x2, int max_depth)
{
    double seq = 0.0;
    for (int i = 0; i < max_depth; ++i) {
        const auto k = static_cast<std::uint64_t>(i);
        if (w1.at(o1 + k) != w2.at(o2 + k)) {
            seq = std::ldexp(1.0, -(i + 1));
            break;
        }
    }
    return seq + std::abs(x1 - x2);
}

} // namespace critmix
