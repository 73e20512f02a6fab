#ifndef CRITMIX_OBSERVABLE_HPP
#define CRITMIX_OBSERVABLE_HPP

#include "critmix/maps.hpp"
#include "critmix/rng.hpp"
#include "critmix/transfer.hpp"

#include <json.hpp>

#include <cstdint>
#include <vector>

namespace critmix {

enum class ObservableKind { BumpX, ProductCylinderBump, IndicatorBV, Constant };

struct ObservableParams {
    /// Support [lo, hi] in x; the bump peaks at the midpoint.
    double lo = 0.5625;
    double hi = 0.6875;
    double alpha = 1.0;
    /// Cylinder depth k; coefficients are indexed by omega_1..omega_k in base |Sigma|.
    int depth = 0;
    std::vector<double> coefficients;
    /// Value of a Constant observable.
    double value = 1.0;
};

/// Linear combination of bump, cylinder-bump, indicator and constant terms.
class Observable {
public:
    Observable() = default;

    static Observable make(const MapFamily& family, ObservableKind kind,
                           const ObservableParams& params);
    static Observable zero() { return Observable{}; }

    /// h(sigma^offset omega, x).
    double operator()(const SymbolStream& omega, std::uint64_t offset, double x) const;

    /// Vanishes outside Sigma^N x (1/2,3/4).
    bool window_supported() const noexcept;
    /// Window-supported with a finite Hoelder certificate.
    bool thm14_compatible() const noexcept;
    bool is_zero() const noexcept { return terms_.empty(); }
    int depth() const noexcept;
    double alpha() const noexcept { return alpha_; }
    /// Certified bound on sup |h(z1)-h(z2)| / d(z1,z2)^alpha; +inf for indicators.
    double holder_constant() const noexcept;
    /// Bound on the total variation in x for fixed omega.
    double variation_bound() const noexcept;

    /// Integral against P x (piecewise-constant density).
    double integral(const MapFamily& family, const DensityGrid& density) const;

    /// this + w * other.
    Observable plus(const Observable& other, double w) const;

    nlohmann::json to_json() const;
    static Observable from_json(const MapFamily& family, const nlohmann::json& j);

private:
    struct Term {
        ObservableKind kind = ObservableKind::BumpX;
        double lo = 0.0;
        double hi = 0.0;
        int depth = 0;
        std::vector<double> coefficients;
        double weight = 1.0;
    };
    double term_value(const Term& t, const SymbolStream& omega, std::uint64_t offset,
                      double x) const;

    std::vector<Term> terms_;
    std::size_t alphabet_ = 0;
    double alpha_ = 1.0;
};

/// Product metric 2^-(first index where the sequences differ) + |x - y|,
/// with sequences compared over at most max_depth symbols.
double product_metric(const SymbolStream& w1, std::uint64_t o1, double x1,
                      const SymbolStream& w2, std::uint64_t o2, double x2, int max_depth);

} // namespace critmix

#endif
