#include "critmix/induced.hpp"

#include "critmix/error.hpp"
#include "critmix/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace critmix {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

struct CoreResult {
    ReturnStatus status = ReturnStatus::Ok;
    std::int64_t kappa = 0;
    std::int64_t l = 0;
    std::int64_t m = -1;
    Point out;
    double y_at_m = 0.0;
    double log_gap_at_m = 0.0;
    double log2_kappa = 0.0;
    double max_prefix = neg_inf;
    Word s;
    Symbol g = 0;
    std::int64_t effective = 0;
};

// Gap threshold of J_j: good maps need gap < 2^(-1/r), bad maps gap <= l^(1/(1-l)).
bool in_j(const MapSpec& sp, const Scaled& gap)
{
    const double u = gap.to_double();
    if (sp.is_good())
        return u < std::pow(2.0, -1.0 / sp.exponent);
    return u <= std::pow(sp.exponent, 1.0 / (1.0 - sp.exponent));
}

template <bool Detail>
void run_core(const MapFamily& fam, const SymbolStream& om, std::uint64_t off, const Point& x,
              std::int64_t budget, CoreResult& c)
{
    if (!x.in_window())
        throw Error(ErrorKind::Domain, "out_of_window", "first return needs x in (1/2,3/4)");
    // R on the window: gap 3 - 4x = 4d - 1, exact for d in (1/4,1/2).
    Point p{Side::Left, Scaled::from_double(4.0 * x.mag.to_double() - 1.0)};
    std::int64_t t = 1;
    double lsum = 1.0;
    if constexpr (Detail)
        c.max_prefix = lsum;
    try {
        while (true) {
            const Symbol sym = om.at(off + static_cast<std::uint64_t>(t));
            const MapSpec& sp = fam.spec(sym);
            if constexpr (Detail) {
                if (c.m < 0 && in_j(sp, p.mag)) {
                    c.m = t;
                    c.y_at_m = p.to_x();
                    c.log_gap_at_m = p.mag.log();
                }
                lsum += log2_deriv_at(sp, p);
            }
            p = apply_map(sp, p);
            ++t;
            if (p.side == Side::Right) {
                c.g = sym;
                break;
            }
            if constexpr (Detail) {
                c.s.push_back(sym);
                c.max_prefix = std::max(c.max_prefix, lsum);
            }
            if (t > budget) {
                c.status = ReturnStatus::Censored;
                c.kappa = t;
                c.effective = t;
                return;
            }
        }
    }
    catch (const Error& e) {
        if (e.kind() != ErrorKind::Budget)
            throw;
        c.status = ReturnStatus::Censored;
        c.kappa = t;
        c.effective = t;
        return;
    }
    c.kappa = t;
    c.log2_kappa = lsum;
    c.effective = t;
    if (p.mag == Scaled::pow2(-1)) {
        c.status = ReturnStatus::Boundary;
        c.out = p;
        return;
    }
    try {
        const RightBlock rb = fast_forward_right(p, std::numeric_limits<std::int64_t>::max());
        c.l = rb.steps;
        c.out = rb.out;
        if (rb.steps > 0)
            ++c.effective;
        if (rb.boundary)
            c.status = ReturnStatus::Boundary;
        else if (c.effective > budget)
            c.status = ReturnStatus::Censored;
    }
    catch (const Error& e) {
        if (e.kind() != ErrorKind::Budget)
            throw;
        c.status = ReturnStatus::Censored;
    }
    if (c.kappa > std::numeric_limits<std::int64_t>::max() - c.l)
        c.status = ReturnStatus::Censored;
}

} // namespace

Word ReturnDecomposition::w(const SymbolStream& omega) const
{
    Word out(static_cast<std::size_t>(wlen));
    for (std::int64_t i = 0; i < wlen; ++i)
        out[static_cast<std::size_t>(i)] = omega.at(w_offset + static_cast<std::uint64_t>(i));
    return out;
}

FastReturn next_return(const MapFamily& family, const SymbolStream& omega, std::uint64_t offset,
                       const Point& x, std::int64_t budget)
{
    CoreResult c;
    run_core<false>(family, omega, offset, x, budget, c);
    FastReturn r;
    r.status = c.status;
    r.phi = c.kappa + c.l;
    r.out = c.out;
    return r;
}

ReturnDecomposition first_return(const MapFamily& family, const SymbolStream& omega,
                                 const Point& x, std::int64_t budget)
{
    CoreResult c;
    run_core<true>(family, omega, 0, x, budget, c);
    ReturnDecomposition rd;
    rd.status = c.status;
    rd.x_in = x.to_x();
    rd.u = omega.at(0);
    rd.kappa = c.kappa;
    rd.effective_steps = c.effective;
    if (c.status == ReturnStatus::Censored)
        return rd;
    split_word(family, c.s, rd.v, rd.b);
    rd.g = c.g;
    rd.l = c.l;
    rd.wlen = c.l;
    rd.w_offset = static_cast<std::uint64_t>(c.kappa);
    rd.phi = c.kappa + c.l;
    rd.m = c.m >= 0 ? c.m : c.kappa - 1;
    rd.y_at_m = c.y_at_m;
    rd.log_gap_at_m = c.log_gap_at_m;
    rd.out = c.out;
    rd.x_out = c.out.to_x();
    rd.log2_deriv = c.log2_kappa + static_cast<double>(c.l);
    double top = c.max_prefix;
    if (c.l >= 1)
        top = std::max(top, c.log2_kappa + static_cast<double>(c.l - 1));
    rd.min_log2_tail_deriv = rd.log2_deriv - top;
    return rd;
}

ReturnDecomposition first_return(const MapFamily& family, const SymbolStream& omega, double x,
                                 std::int64_t budget)
{
    if (!(x > 0.5 && x < 0.75))
        throw Error(ErrorKind::Domain, "out_of_window", "first return needs x in (1/2,3/4)");
    return first_return(family, omega, Point::from_x(x), budget);
}

void split_word(const MapFamily& family, const Word& s, Word& v, Word& b)
{
    std::size_t cut = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (family.is_good(s[i]))
            cut = i + 1;
    v.assign(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(cut));
    b.assign(s.begin() + static_cast<std::ptrdiff_t>(cut), s.end());
}

double lower_bound_l(const MapFamily& family, const ReturnDecomposition& rd, double y_at_m)
{
    if (!(y_at_m >= 0.0 && y_at_m < 0.5))
        throw Error(ErrorKind::Domain, "out_of_domain", "y must lie in [0,1/2)");
    const double log_gap = std::log1p(-2.0 * y_at_m);
    // d = omega_{m+1} ... omega_{kappa-1}: the tail of s starting at index m (s begins at omega_2).
    Word s = rd.v;
    s.insert(s.end(), rd.b.begin(), rd.b.end());
    const std::size_t from = static_cast<std::size_t>(std::max<std::int64_t>(rd.m - 1, 0));
    double le = 0.0;
    for (std::size_t i = from; i < s.size(); ++i)
        le += std::log(family.spec(s[i]).exponent);
    const double r = family.spec(rd.g).exponent;
    return std::exp(le) * r * (-log_gap) / std::numbers::ln2 - 2.0;
}

double lower_bound_l(const MapFamily& family, const ReturnDecomposition& rd)
{
    Word s = rd.v;
    s.insert(s.end(), rd.b.begin(), rd.b.end());
    const std::size_t from = static_cast<std::size_t>(std::max<std::int64_t>(rd.m - 1, 0));
    double le = 0.0;
    for (std::size_t i = from; i < s.size(); ++i)
        le += std::log(family.spec(s[i]).exponent);
    const double r = family.spec(rd.g).exponent;
    return std::exp(le + std::log(-rd.log_gap_at_m)) * r / std::numbers::ln2 - 2.0;
}

namespace {

// Pulled-back gap interval (lo, lo e^rho), tracked by ln lo and rho.
struct GapInterval {
    double log_lo;
    double rho;
};

GapInterval root_interval(double r, std::int64_t wlen)
{
    const double ln2 = std::numbers::ln2;
    return {-static_cast<double>(wlen + 2) * ln2 / r, ln2 / r};
}

void pull_back(const MapSpec& sp, GapInterval& gi)
{
    if (sp.is_bad()) {
        gi.log_lo /= sp.exponent;
        gi.rho /= sp.exponent;
        return;
    }
    const double lo = std::exp(gi.log_lo);
    const double r = sp.exponent;
    gi.rho = std::log1p(lo * std::expm1(gi.rho) / (1.0 + lo)) / r;
    gi.log_lo = (std::log1p(lo) - std::numbers::ln2) / r;
}

Interval to_x_interval(const GapInterval& gi)
{
    const double lo = std::exp(gi.log_lo);
    const double hi = lo * std::exp(gi.rho);
    Interval iv;
    iv.lo = (3.0 - hi) / 4.0;
    iv.hi = (3.0 - lo) / 4.0;
    iv.width = lo * std::expm1(gi.rho) / 4.0;
    return iv;
}

} // namespace

Interval cell_interval(const MapFamily& family, std::optional<Symbol> u, const Word& v,
                       const Word& b, Symbol g, std::int64_t wlen)
{
    if (u && *u >= family.size())
        throw Error(ErrorKind::Domain, "bad_symbol", "u outside the alphabet");
    if (!family.is_good(g))
        throw Error(ErrorKind::Domain, "not_good", "g must be a good symbol");
    if (!v.empty() && !family.is_good(v.back()))
        throw Error(ErrorKind::Domain, "bad_v", "v must end in a good symbol");
    for (Symbol j : b)
        if (!family.spec(j).is_bad())
            throw Error(ErrorKind::Domain, "not_bad_word", "b must be all bad");
    if (wlen < 0)
        throw Error(ErrorKind::Domain, "bad_wlen", "wlen must be nonnegative");
    GapInterval gi = root_interval(family.spec(g).exponent, wlen);
    for (auto it = b.rbegin(); it != b.rend(); ++it)
        pull_back(family.spec(*it), gi);
    for (auto it = v.rbegin(); it != v.rend(); ++it)
        pull_back(family.spec(*it), gi);
    const Interval iv = to_x_interval(gi);
    if (!(iv.width > 0.0) || iv.hi < iv.lo)
        throw Error(ErrorKind::EmptyCell, "empty_cell", "cell has no positive width");
    return iv;
}

Interval cell_interval_closed_form(double l_b, double r_g, std::int64_t wlen)
{
    const double k = l_b * r_g;
    const double y_lo = 0.5 * (1.0 - std::pow(2.0, -static_cast<double>(wlen + 1) / k));
    const double y_hi = 0.5 * (1.0 - std::pow(2.0, -static_cast<double>(wlen + 2) / k));
    Interval iv;
    iv.lo = invert_right_branch(y_lo);
    iv.hi = invert_right_branch(y_hi);
    iv.width = 0.25 * (std::pow(2.0, -static_cast<double>(wlen + 1) / k)
                       - std::pow(2.0, -static_cast<double>(wlen + 2) / k));
    return iv;
}

double cell_measure(const MapFamily& family, const PartitionCell& cell)
{
    double p = family.word_prob(cell.v) * family.word_prob(cell.b) * family.prob(cell.g);
    if (cell.u)
        p *= family.prob(*cell.u);
    return p * cell.x.width;
}

std::vector<PartitionCell> enumerate_cells(const MapFamily& family, std::int64_t phi_max,
                                           bool include_u, std::size_t max_cells)
{
    if (phi_max < 2)
        throw Error(ErrorKind::Domain, "bad_phi_max", "phi_max must be at least 2");
    std::vector<PartitionCell> cells;
    Word rev; // s in reverse order
    const auto n = static_cast<Symbol>(family.size());

    auto emit = [&](Symbol g, std::int64_t wlen, const GapInterval& gi, double p_s) {
        PartitionCell c;
        Word s(rev.rbegin(), rev.rend());
        split_word(family, s, c.v, c.b);
        c.g = g;
        c.wlen = wlen;
        c.x = to_x_interval(gi);
        if (!(c.x.width > 0.0))
            return;
        const double base = p_s * family.prob(g) * c.x.width;
        if (include_u) {
            for (Symbol u = 0; u < n; ++u) {
                if (family.prob(u) == 0.0)
                    continue;
                c.u = u;
                c.measure = family.prob(u) * base;
                cells.push_back(c);
            }
        }
        else {
            c.measure = base;
            cells.push_back(std::move(c));
        }
        if (cells.size() > max_cells)
            throw Error(ErrorKind::Budget, "cell_budget", "partition enumeration exceeds budget");
    };

    auto dfs = [&](auto&& self, Symbol g, std::int64_t wlen, GapInterval gi, double p_s) -> void {
        emit(g, wlen, gi, p_s);
        const std::int64_t phi = 2 + static_cast<std::int64_t>(rev.size()) + wlen;
        if (phi + 1 > phi_max)
            return;
        for (Symbol j = 0; j < n; ++j) {
            if (family.prob(j) == 0.0)
                continue;
            GapInterval next = gi;
            pull_back(family.spec(j), next);
            rev.push_back(j);
            self(self, g, wlen, next, p_s * family.prob(j));
            rev.pop_back();
        }
    };

    for (Symbol g : family.good_symbols()) {
        if (family.prob(g) == 0.0)
            continue;
        for (std::int64_t wlen = 0; 2 + wlen <= phi_max; ++wlen)
            dfs(dfs, g, wlen, root_interval(family.spec(g).exponent, wlen), 1.0);
    }
    return cells;
}

SeparationRecord separation_time(const MapFamily& family, const InducedPoint& z1,
                                 const InducedPoint& z2, std::int64_t n_max, std::int64_t budget)
{
    SeparationRecord rec;
    const bool same_stream = z1.omega.rng().seed() == z2.omega.rng().seed()
        && z1.omega.infinite() && z2.omega.infinite();
    std::uint64_t o1 = z1.offset;
    std::uint64_t o2 = z2.offset;
    Point p1 = z1.x;
    Point p2 = z2.x;
    for (std::int64_t k = 0; k < n_max; ++k) {
        const FastReturn r1 = next_return(family, z1.omega, o1, p1, budget);
        const FastReturn r2 = next_return(family, z2.omega, o2, p2, budget);
        if (r1.status != ReturnStatus::Ok || r2.status != ReturnStatus::Ok)
            throw Error(ErrorKind::Budget, "censored", "return not resolved within budget");
        bool same = r1.phi == r2.phi;
        if (same && !(same_stream && o1 == o2)) {
            for (std::int64_t i = 0; i < r1.phi; ++i) {
                if (z1.omega.at(o1 + static_cast<std::uint64_t>(i))
                    != z2.omega.at(o2 + static_cast<std::uint64_t>(i))) {
                    same = false;
                    break;
                }
            }
        }
        if (!same) {
            rec.n = k;
            return rec;
        }
        o1 += static_cast<std::uint64_t>(r1.phi);
        o2 += static_cast<std::uint64_t>(r2.phi);
        p1 = r1.out;
        p2 = r2.out;
    }
    rec.n = n_max;
    rec.capped = true;
    return rec;
}

double window_start(const SymbolStream& omega, std::uint64_t i) noexcept
{
    for (std::uint64_t attempt = 0;; ++attempt) {
        const double x = 0.5 + 0.25 * omega.aux_uniform(i * 8 + attempt % 8);
        if (x > 0.5 && x < 0.75)
            return x;
    }
}

ExpansionReport expansion_and_distortion_check(const MapFamily& family, std::int64_t samples,
                                               RngSeed seed, unsigned workers)
{
    if (samples < 1)
        throw Error(ErrorKind::Domain, "bad_samples", "samples must be positive");
    constexpr std::size_t chunk_count = 64;
    struct Part {
        std::int64_t samples = 0;
        std::int64_t censored = 0;
        double min_log2 = std::numeric_limits<double>::infinity();
        double min_tail = std::numeric_limits<double>::infinity();
        std::int64_t pairs = 0;
        double c3 = 0.0;
    };
    std::vector<Part> parts(chunk_count);
    const auto total = static_cast<std::uint64_t>(samples);
    parallel_chunks(chunk_count, workers, [&](std::size_t c) {
        Part& part = parts[c];
        const std::uint64_t begin = total * c / chunk_count;
        const std::uint64_t end = total * (c + 1) / chunk_count;
        for (std::uint64_t i = begin; i < end; ++i) {
            const SymbolStream om(family, seed.substream(i));
            const double x = window_start(om, 0);
            const ReturnDecomposition rd = first_return(family, om, x);
            ++part.samples;
            if (!rd.ok()) {
                ++part.censored;
                continue;
            }
            part.min_log2 = std::min(part.min_log2, rd.log2_deriv);
            if (rd.phi > 1)
                part.min_tail = std::min(part.min_tail, rd.min_log2_tail_deriv);
            // Partner point in the same cell, drawn uniformly from its interval.
            Interval iv;
            try {
                iv = cell_interval(family, rd.u, rd.v, rd.b, rd.g, rd.wlen);
            }
            catch (const Error&) {
                continue;
            }
            if (iv.width < 1e-9)
                continue;
            const double y = iv.lo + iv.width * om.aux_uniform(1000);
            if (!(y > iv.lo && y < iv.hi))
                continue;
            const ReturnDecomposition ry = first_return(family, om, y);
            if (!ry.ok() || ry.phi != rd.phi)
                continue;
            const double ds = std::abs(rd.x_out - ry.x_out);
            if (ds == 0.0)
                continue;
            const double ratio =
                std::abs(std::expm1((rd.log2_deriv - ry.log2_deriv) * std::numbers::ln2)) / ds;
            ++part.pairs;
            part.c3 = std::max(part.c3, ratio);
        }
    });
    ExpansionReport rep;
    rep.min_deriv = std::numeric_limits<double>::infinity();
    rep.min_tail_deriv = std::numeric_limits<double>::infinity();
    double min_log2 = std::numeric_limits<double>::infinity();
    double min_tail = std::numeric_limits<double>::infinity();
    for (const Part& p : parts) {
        rep.samples += p.samples;
        rep.censored += p.censored;
        rep.pairs += p.pairs;
        rep.c3_hat = std::max(rep.c3_hat, p.c3);
        min_log2 = std::min(min_log2, p.min_log2);
        min_tail = std::min(min_tail, p.min_tail);
    }
    rep.min_deriv = std::exp2(min_log2);
    rep.min_tail_deriv = std::exp2(min_tail);
    return rep;
}

} // namespace critmix
