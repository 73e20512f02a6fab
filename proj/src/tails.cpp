#include "critmix/tails.hpp"

#include "critmix/error.hpp"
#include "critmix/fit.hpp"
#include "critmix/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace critmix {

namespace {

// One exponent multiset of size k: weight sum_{b with these exponents} p_b and 1/l_b.
struct Term {
    double weight;
    double inv_l;
};

// Terms grouped by word length k = 0..k_max over distinct bad exponents.
std::vector<std::vector<Term>> bad_word_terms(const MapFamily& family, int k_max)
{
    std::map<double, double> grouped;
    for (Symbol b : family.bad_symbols())
        grouped[family.spec(b).exponent] += family.prob(b);
    std::vector<double> log_l, log_q;
    for (const auto& [l, q] : grouped) {
        if (q <= 0.0)
            continue;
        log_l.push_back(std::log(l));
        log_q.push_back(std::log(q));
    }
    const std::size_t d = log_l.size();
    std::vector<std::vector<Term>> out(static_cast<std::size_t>(k_max) + 1);
    std::vector<int> counts(d, 0);
    for (int k = 0; k <= k_max; ++k) {
        auto& terms = out[static_cast<std::size_t>(k)];
        if (d == 0) {
            if (k == 0)
                terms.push_back({1.0, 1.0});
            continue;
        }
        const double lk = std::lgamma(k + 1.0);
        auto rec = [&](auto&& self, std::size_t i, int left) -> void {
            if (i + 1 == d) {
                counts[i] = left;
                double lw = lk, ll = 0.0;
                for (std::size_t a = 0; a < d; ++a) {
                    lw += counts[a] * log_q[a] - std::lgamma(counts[a] + 1.0);
                    ll += counts[a] * log_l[a];
                }
                terms.push_back({std::exp(lw), std::exp(-ll)});
                return;
            }
            for (int c = 0; c <= left; ++c) {
                counts[i] = c;
                self(self, i + 1, left - c);
            }
        };
        rec(rec, 0, k);
    }
    return out;
}

double inner_sum(const std::vector<Term>& terms, double a, double r)
{
    double s = 0.0;
    for (const Term& t : terms)
        s += t.weight * std::exp2(-a * t.inv_l / r);
    return s;
}

} // namespace

SeriesValue tail_lower(const MapFamily& family, std::int64_t n, int k_max)
{
    if (k_max < 0)
        throw Error(ErrorKind::Domain, "bad_depth", "k_max must be nonnegative");
    const auto& c = family.constants();
    const auto terms = bad_word_terms(family, k_max);
    double sum = 0.0;
    for (int k = 0; k <= k_max; ++k) {
        const double a = static_cast<double>(std::max<std::int64_t>(n - 1 - k, 1));
        sum += inner_sum(terms[static_cast<std::size_t>(k)], a, c.r_min);
    }
    SeriesValue v;
    v.value = 0.25 * c.p_good_min * sum;
    v.truncation_error = 0.25 * c.p_good_min * std::pow(c.p_bad, k_max + 1) / (1.0 - c.p_bad);
    return v;
}

int default_j_max(const MapFamily& family)
{
    const double s = family.constants().s;
    return static_cast<int>(std::floor(std::log(1e-12) / std::log(s))) + 1;
}

SeriesValue tail_upper(const MapFamily& family, std::int64_t n, int j_max, int k_max)
{
    if (k_max < 0)
        throw Error(ErrorKind::Domain, "bad_depth", "k_max must be nonnegative");
    if (j_max < 0)
        j_max = default_j_max(family);
    const auto& c = family.constants();
    const auto terms = bad_word_terms(family, k_max);
    double sum = 0.0;
    double sj = 1.0;
    for (int j = 0; j <= j_max; ++j) {
        double inner = 0.0;
        for (int k = 0; k <= k_max; ++k) {
            const double a = static_cast<double>(std::max<std::int64_t>(n - 1 - j - k, 1));
            inner += inner_sum(terms[static_cast<std::size_t>(k)], a, c.r_max);
        }
        sum += sj * inner;
        sj *= c.s;
    }
    const double s = c.s;
    const double pb = c.p_bad;
    const double rem_j = std::pow(s, j_max + 1) / ((1.0 - s) * (1.0 - pb));
    const double rem_k = (1.0 - std::pow(s, j_max + 1)) / (1.0 - s) * std::pow(pb, k_max + 1)
        / (1.0 - pb);
    SeriesValue v;
    v.truncation_error = 0.25 * (rem_j + rem_k);
    v.value = 0.25 * sum + v.truncation_error;
    return v;
}

std::vector<double> tail_exact_table(const MapFamily& family, std::int64_t n_max)
{
    if (n_max < 1)
        throw Error(ErrorKind::Domain, "bad_n", "n must be positive");
    std::vector<double> by_phi(static_cast<std::size_t>(n_max) + 1, 0.0);
    if (n_max >= 2) {
        for (const PartitionCell& cell : enumerate_cells(family, n_max, false))
            by_phi[static_cast<std::size_t>(cell.phi())] += cell.measure;
    }
    std::vector<double> out(static_cast<std::size_t>(n_max) + 1, 0.25);
    double acc = 0.0;
    for (std::int64_t n = 1; n <= n_max; ++n) {
        acc += by_phi[static_cast<std::size_t>(n)];
        out[static_cast<std::size_t>(n)] = 0.25 - acc;
    }
    return out;
}

double tail_exact(const MapFamily& family, std::int64_t n)
{
    return tail_exact_table(family, n).back();
}

std::vector<std::int64_t> sample_return_times(const MapFamily& family, std::int64_t samples,
                                              RngSeed seed, unsigned workers, std::int64_t budget)
{
    if (samples < 1)
        throw Error(ErrorKind::Domain, "bad_samples", "samples must be positive");
    std::vector<std::int64_t> phi(static_cast<std::size_t>(samples));
    constexpr std::size_t chunk_count = 64;
    const auto total = static_cast<std::uint64_t>(samples);
    parallel_chunks(chunk_count, workers, [&](std::size_t c) {
        const std::uint64_t begin = total * c / chunk_count;
        const std::uint64_t end = total * (c + 1) / chunk_count;
        for (std::uint64_t i = begin; i < end; ++i) {
            const SymbolStream om(family, seed.substream(i));
            const Point x = Point::from_x(window_start(om, 0));
            const FastReturn r = next_return(family, om, 0, x, budget);
            phi[i] = r.status == ReturnStatus::Ok ? r.phi : -1;
        }
    });
    return phi;
}

TailMc tail_mc(const MapFamily& family, const std::vector<std::int64_t>& n_values,
               std::int64_t samples, RngSeed seed, unsigned workers, std::int64_t budget)
{
    const auto phi = sample_return_times(family, samples, seed, workers, budget);
    TailMc out;
    out.n_values = n_values;
    out.samples = samples;
    std::vector<std::int64_t> sorted;
    sorted.reserve(phi.size());
    double sum = 0.0;
    std::int64_t resolved = 0;
    for (std::int64_t p : phi) {
        if (p < 0) {
            ++out.censored;
            continue;
        }
        sorted.push_back(p);
        sum += static_cast<double>(p);
        ++resolved;
    }
    out.mean_phi = resolved > 0 ? sum / static_cast<double>(resolved) : 0.0;
    std::sort(sorted.begin(), sorted.end());
    const double ns = static_cast<double>(samples);
    for (std::int64_t n : n_values) {
        const auto le = std::upper_bound(sorted.begin(), sorted.end(), n) - sorted.begin();
        const double above = static_cast<double>(sorted.size() - static_cast<std::size_t>(le))
            + static_cast<double>(out.censored);
        const double s = above / ns;
        out.survival.push_back(s);
        out.stderr_.push_back(std::sqrt(std::max(s * (1.0 - s), 1.0 / ns) / ns));
    }
    return out;
}

SlopeFit fit_tail_exponent(const std::vector<std::int64_t>& n_values,
                           const std::vector<double>& survival, std::int64_t lo, std::int64_t hi)
{
    if (n_values.size() != survival.size())
        throw Error(ErrorKind::Domain, "degenerate_window", "size mismatch");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n_values.size(); ++i) {
        if (n_values[i] < lo || n_values[i] > hi || !(survival[i] > 0.0))
            continue;
        x.push_back(std::log(static_cast<double>(n_values[i])));
        y.push_back(std::log(survival[i]));
    }
    if (x.size() < 5)
        throw Error(ErrorKind::Domain, "degenerate_window", "need at least 5 positive points");
    const LinearFit f = linear_fit(x, y);
    SlopeFit s;
    s.slope = f.slope;
    s.intercept = f.intercept;
    s.stderr_ = f.slope_stderr;
    s.points = f.n;
    return s;
}

} // namespace critmix
