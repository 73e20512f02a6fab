#include "critmix/transfer.hpp"

#include "critmix/error.hpp"
#include "critmix/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

namespace critmix {

namespace {

using Entry = std::pair<std::uint32_t, double>;

// Preimage lengths of the target cells met by the image [y0, y1) of one
// monotone branch. `back` maps an image point to a source coordinate in which
// lengths are differences; c0 and c1 are the exact coordinates of the ends.
template <class Back>
void scatter_branch(std::size_t n, double y0, double y1, double c0, double c1, Back&& back,
                    double weight, std::vector<Entry>& out)
{
    if (!(y1 > y0))
        return;
    const double dn = static_cast<double>(n);
    auto k0 = static_cast<std::size_t>(std::floor(y0 * dn));
    auto k1 = static_cast<std::size_t>(std::ceil(y1 * dn));
    k0 = std::min(k0, n - 1);
    k1 = std::min(std::max(k1, k0 + 1), n);
    double prev = c0;
    for (std::size_t k = k0; k < k1; ++k) {
        const double top = static_cast<double>(k + 1) / dn;
        const double next = (k + 1 >= k1 || top >= y1) ? c1 : back(top);
        const double len = std::abs(next - prev);
        if (len > 0.0)
            out.emplace_back(static_cast<std::uint32_t>(k), weight * len * dn);
        prev = next;
    }
}

} // namespace

double UlamMatrix::row_sum(std::size_t i) const
{
    double s = 0.0;
    for (std::size_t e = row_ptr[i]; e < row_ptr[i + 1]; ++e)
        s += val[e];
    return s;
}

double UlamMatrix::entry(std::size_t i, std::size_t k) const
{
    for (std::size_t e = row_ptr[i]; e < row_ptr[i + 1]; ++e)
        if (col[e] == k)
            return val[e];
    return 0.0;
}

std::vector<double> UlamMatrix::push(const std::vector<double>& mass) const
{
    std::vector<double> out(grid_size, 0.0);
    for (std::size_t i = 0; i < grid_size; ++i) {
        const double m = mass[i];
        if (m == 0.0)
            continue;
        for (std::size_t e = row_ptr[i]; e < row_ptr[i + 1]; ++e)
            out[col[e]] += m * val[e];
    }
    return out;
}

UlamMatrix build_ulam(const MapFamily& family, std::size_t grid_size, unsigned workers)
{
    if (grid_size < 2)
        throw Error(ErrorKind::Domain, "bad_grid", "grid_size must be at least 2");
    const std::size_t n = grid_size;
    const double dn = static_cast<double>(n);
    std::vector<std::vector<Entry>> rows(n);
    constexpr std::size_t chunk_count = 64;
    parallel_chunks(chunk_count, workers, [&](std::size_t c) {
        const std::size_t begin = n * c / chunk_count;
        const std::size_t end = n * (c + 1) / chunk_count;
        std::vector<Entry> buf;
        for (std::size_t i = begin; i < end; ++i) {
            buf.clear();
            const double a = static_cast<double>(i) / dn;
            const double b = static_cast<double>(i + 1) / dn;
            for (Symbol j = 0; j < family.size(); ++j) {
                const double p = family.prob(j);
                if (p == 0.0)
                    continue;
                const MapSpec& sp = family.spec(j);
                const double e = sp.exponent;
                if (a < 0.5) {
                    // Left branch in gap coordinates: source length = (gap_a - gap_b)/2.
                    const double ga = 1.0 - 2.0 * a;
                    const double gb = 1.0 - 2.0 * std::min(b, 0.5);
                    if (sp.is_good()) {
                        const double ya = 1.0 - std::pow(ga, e);
                        const double yb = 1.0 - std::pow(gb, e);
                        scatter_branch(
                            n, ya, yb, 0.5 * ga, 0.5 * gb,
                            [&](double y) { return 0.5 * std::pow(1.0 - y, 1.0 / e); }, p, buf);
                    }
                    else {
                        const double ya = 0.5 - 0.5 * std::pow(ga, e);
                        const double yb = 0.5 - 0.5 * std::pow(gb, e);
                        scatter_branch(
                            n, ya, yb, 0.5 * ga, 0.5 * gb,
                            [&](double y) { return 0.5 * std::pow(1.0 - 2.0 * y, 1.0 / e); }, p,
                            buf);
                    }
                }
                if (b > 0.5) {
                    const double a2 = std::max(a, 0.5);
                    scatter_branch(
                        n, 2.0 * a2 - 1.0, 2.0 * b - 1.0, a2, b,
                        [](double y) { return 0.5 * (y + 1.0); }, p, buf);
                }
            }
            std::sort(buf.begin(), buf.end(),
                      [](const Entry& x, const Entry& y) { return x.first < y.first; });
            auto& row = rows[i];
            for (const Entry& en : buf) {
                if (!row.empty() && row.back().first == en.first)
                    row.back().second += en.second;
                else
                    row.push_back(en);
            }
        }
    });
    UlamMatrix m;
    m.grid_size = n;
    m.row_ptr.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i)
        m.row_ptr[i + 1] = m.row_ptr[i] + rows[i].size();
    m.col.reserve(m.row_ptr[n]);
    m.val.reserve(m.row_ptr[n]);
    for (const auto& row : rows)
        for (const Entry& en : row) {
            m.col.push_back(en.first);
            m.val.push_back(en.second);
        }
    return m;
}

std::size_t DensityGrid::cell_of(double x) const
{
    const auto i = static_cast<std::size_t>(std::floor(x * static_cast<double>(grid_size)));
    return std::min(i, grid_size - 1);
}

std::size_t DensityGrid::cell_of(const Point& p) const
{
    const double dn = static_cast<double>(grid_size);
    if (p.side == Side::Left) {
        const std::size_t top = (grid_size + 1) / 2 - 1;
        const double x = 0.5 - 0.5 * p.mag.to_double();
        return std::min(static_cast<std::size_t>(std::floor(x * dn)), top);
    }
    const std::size_t bottom = grid_size / 2;
    const double x = 1.0 - p.mag.to_double();
    const auto i = static_cast<std::size_t>(std::floor(x * dn));
    return std::clamp(i, bottom, grid_size - 1);
}

double DensityGrid::quantile(double u) const
{
    double acc = 0.0;
    for (std::size_t i = 0; i < grid_size; ++i) {
        const double m = masses[i];
        if (m > 0.0 && acc + m >= u) {
            const double frac = std::clamp((u - acc) / m, 0.0, 1.0);
            return (static_cast<double>(i) + frac) / static_cast<double>(grid_size);
        }
        acc += m;
    }
    for (std::size_t i = grid_size; i-- > 0;)
        if (masses[i] > 0.0)
            return static_cast<double>(i + 1) / static_cast<double>(grid_size);
    return 1.0;
}

double DensityGrid::l1_distance(const DensityGrid& o) const
{
    if (o.grid_size != grid_size)
        throw Error(ErrorKind::Domain, "grid_mismatch", "densities on different grids");
    double s = 0.0;
    for (std::size_t i = 0; i < grid_size; ++i)
        s += std::abs(masses[i] - o.masses[i]);
    return s;
}

DensityGrid DensityGrid::uniform(std::size_t n)
{
    DensityGrid g;
    g.grid_size = n;
    g.masses.assign(n, 1.0 / static_cast<double>(n));
    return g;
}

StationaryResult stationary_density(const UlamMatrix& m, double tol, std::int64_t iter_max,
                                    bool allow_unconverged)
{
    StationaryResult r;
    std::vector<double> v(m.grid_size, 1.0 / static_cast<double>(m.grid_size));
    for (r.iterations = 1; r.iterations <= iter_max; ++r.iterations) {
        std::vector<double> next = m.push(v);
        const double total = std::accumulate(next.begin(), next.end(), 0.0);
        double change = 0.0;
        for (std::size_t i = 0; i < next.size(); ++i) {
            next[i] /= total;
            change += std::abs(next[i] - v[i]);
        }
        v.swap(next);
        r.last_change = change;
        if (change < tol) {
            r.converged = true;
            break;
        }
    }
    r.iterations = std::min(r.iterations, iter_max);
    r.density.grid_size = m.grid_size;
    r.density.masses = std::move(v);
    if (!r.converged && !allow_unconverged)
        throw Error(ErrorKind::NonConvergence, "not_converged",
                    "power iteration stopped with L1 change " + std::to_string(r.last_change));
    return r;
}

double stationarity_residual(const UlamMatrix& m, const DensityGrid& density)
{
    if (m.grid_size != density.grid_size)
        throw Error(ErrorKind::Domain, "grid_mismatch", "density and matrix grids differ");
    const std::vector<double> next = m.push(density.masses);
    double worst = 0.0;
    for (std::size_t k = 0; k < next.size(); ++k)
        worst = std::max(worst, std::abs(next[k] - density.masses[k]));
    return worst;
}

double stationarity_residual(const MapFamily& family, const DensityGrid& density)
{
    return stationarity_residual(build_ulam(family, density.grid_size), density);
}

namespace {

constexpr std::size_t orbit_chunks = 16;

// Histogram of one chunk orbit. Doubling runs near 1 are binned in closed form.
void orbit_histogram(const MapFamily& family, const SymbolStream& om, std::uint64_t burn_in,
                     std::uint64_t steps, std::size_t n, std::vector<std::uint64_t>& hist)
{
    DensityGrid shape;
    shape.grid_size = n;
    Point p = Point::from_x(om.aux_uniform(0));
    const std::uint64_t total = burn_in + steps;
    const Scaled quarter = Scaled::pow2(-2);
    const double inv_n = 1.0 / static_cast<double>(n);
    std::uint64_t t = 0;
    while (t < total) {
        if (p.side == Side::Right && p.mag < quarter && !p.mag.is_zero()) {
            const std::int64_t e = p.mag.exponent();
            const auto need = static_cast<std::uint64_t>(p.mag.mantissa() == 0.5 ? -e : -1 - e);
            const std::uint64_t k = std::min(need, total - t);
            // Points 2^i d for i < k; those with 2^i d <= 1/n fall in the last cell.
            const double guess = std::floor(-std::log2(static_cast<double>(n)) - p.mag.log2());
            std::uint64_t cut = guess < 0.0 ? 0 : static_cast<std::uint64_t>(guess) + 1;
            cut = std::min(cut, k);
            while (cut > 0 && !(p.mag.times_pow2(static_cast<std::int64_t>(cut - 1)).to_double() <= inv_n))
                --cut;
            while (cut < k && p.mag.times_pow2(static_cast<std::int64_t>(cut)).to_double() <= inv_n)
                ++cut;
            const std::uint64_t first = burn_in > t ? burn_in - t : 0;
            if (cut > first)
                hist[n - 1] += cut - first;
            for (std::uint64_t i = std::max(cut, first); i < k; ++i) {
                const Point q{Side::Right, p.mag.times_pow2(static_cast<std::int64_t>(i))};
                ++hist[shape.cell_of(q)];
            }
            p.mag = p.mag.times_pow2(static_cast<std::int64_t>(k));
            t += k;
            continue;
        }
        if (t >= burn_in)
            ++hist[shape.cell_of(p)];
        try {
            p = apply_map(family.spec(om.at(t)), p);
        }
        catch (const Error& err) {
            if (err.kind() != ErrorKind::Budget)
                throw;
            // Gap below 2^-(2^62): the orbit sits at 1/2 for all practical purposes.
            p = {Side::Left, Scaled::pow2(-(std::int64_t{1} << 61))};
        }
        ++t;
    }
}

} // namespace

DensityGrid density_from_orbit(const MapFamily& family, RngSeed seed, std::uint64_t n_steps,
                               std::size_t grid_size, std::uint64_t burn_in, unsigned workers)
{
    if (grid_size < 2)
        throw Error(ErrorKind::Domain, "bad_grid", "grid_size must be at least 2");
    if (n_steps == 0)
        throw Error(ErrorKind::Domain, "bad_steps", "n_steps must be positive");
    std::vector<std::vector<std::uint64_t>> parts(orbit_chunks,
                                                  std::vector<std::uint64_t>(grid_size, 0));
    parallel_chunks(orbit_chunks, workers, [&](std::size_t c) {
        const std::uint64_t steps = n_steps * (c + 1) / orbit_chunks - n_steps * c / orbit_chunks;
        const SymbolStream om(family, seed.substream(c));
        orbit_histogram(family, om, burn_in, steps, grid_size, parts[c]);
    });
    std::vector<std::uint64_t> hist(grid_size, 0);
    for (const auto& part : parts)
        for (std::size_t i = 0; i < grid_size; ++i)
            hist[i] += part[i];
    DensityGrid g;
    g.grid_size = grid_size;
    g.masses.resize(grid_size);
    const double total = static_cast<double>(n_steps);
    for (std::size_t i = 0; i < grid_size; ++i)
        g.masses[i] = static_cast<double>(hist[i]) / total;
    return g;
}

double time_near_half(const MapFamily& family, RngSeed seed, std::uint64_t n_steps,
                      std::uint64_t burn_in, double eps)
{
    const SymbolStream om(family, seed);
    Walker w(family, om, om.aux_uniform(0));
    const std::uint64_t total = burn_in + n_steps;
    const Scaled quarter = Scaled::pow2(-2);
    std::uint64_t near = 0;
    while (w.time() < total) {
        const Point& p = w.point();
        if (p.side == Side::Right && p.mag < quarter) {
            // The doubling run stays above 3/4, far from 1/2.
            w.skip_doubling(total);
            continue;
        }
        if (w.time() >= burn_in) {
            const bool close = p.side == Side::Left ? p.mag.to_double() < 2.0 * eps
                                                    : p.mag.to_double() > 0.5 - eps;
            if (close)
                ++near;
        }
        try {
            w.step();
        }
        catch (const Error& err) {
            if (err.kind() != ErrorKind::Budget)
                throw;
            // Stuck at 1/2 beyond exponent range: every remaining step is near 1/2.
            const std::uint64_t from = std::max(w.time(), burn_in);
            near += total - from;
            break;
        }
    }
    return static_cast<double>(near) / static_cast<double>(n_steps);
}

DensityGrid coarsen(const DensityGrid& fine, std::size_t factor)
{
    if (factor == 0 || fine.grid_size % factor != 0)
        throw Error(ErrorKind::Domain, "bad_factor", "factor must divide the grid size");
    DensityGrid g;
    g.grid_size = fine.grid_size / factor;
    g.masses.assign(g.grid_size, 0.0);
    for (std::size_t i = 0; i < fine.grid_size; ++i)
        g.masses[i / factor] += fine.masses[i];
    return g;
}

} // namespace critmix
