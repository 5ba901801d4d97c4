#include "ecsim/coarse_grain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ecsim/vec.hpp"

namespace ecsim {

namespace {

constexpr double kPi = 3.14159265358979323846;

double silverman_1d(std::vector<double> xs) {
    const std::size_t n = xs.size();
    double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / double(n);
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= double(n - 1);
    std::sort(xs.begin(), xs.end());
    auto quantile = [&](double q) {
        double pos = q * double(n - 1);
        std::size_t i = std::size_t(pos);
        double f = pos - double(i);
        return i + 1 < n ? xs[i] * (1.0 - f) + xs[i + 1] * f : xs[i];
    };
    double iqr = quantile(0.75) - quantile(0.25);
    double spread = std::sqrt(var);
    if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
    if (spread <= 0.0) spread = std::max(std::sqrt(var), 1e-12);
    return 0.9 * spread * std::pow(double(n), -0.2);
}

} // namespace

CoarseState estimate_density(std::span<const double> samples, int n, const Grid& grid,
                             double total_mass, double bandwidth_scale) {
    grid.validate();
    const int d = grid.d;
    if (n < 100) throw Error(ErrorKind::InvalidConfig, "need at least 100 samples");
    if (total_mass <= 0.0) throw Error(ErrorKind::InvalidConfig, "total mass must be positive");
    if (bandwidth_scale <= 0.0)
        throw Error(ErrorKind::InvalidConfig, "bandwidth scale must be positive");
    if (int(samples.size()) != n * d)
        throw Error(ErrorKind::ShapeMismatch, "sample buffer size mismatch");

    CoarseState state;
    state.grid = grid;
    state.N = n;
    state.rho.assign(grid.size(), 0.0);
    state.S.assign(grid.size(), 0.0);

    int clipped = 0;

    if (d == 1) {
        const int cells = grid.shape[0];
        const double h = grid.h(0);
        // linear binning
        std::vector<double> bins(cells, 0.0);
        std::vector<double> xs;
        xs.reserve(n);
        for (int i = 0; i < n; ++i) {
            double x = samples[i];
            if (x < grid.lo[0] || x >= grid.hi[0]) {
                ++clipped;
                continue;
            }
            xs.push_back(x);
            double u = (x - grid.lo[0]) / h - 0.5; // position in cell-center units
            int c0 = int(std::floor(u));
            double f = u - double(c0);
            if (c0 >= 0) bins[c0] += 1.0 - f;
            if (c0 + 1 < cells) bins[c0 + 1] += f;
            if (c0 < 0) bins[0] += 1.0 - f;
            if (c0 + 1 >= cells) bins[cells - 1] += f;
        }
        if (xs.size() < 2)
            throw Error(ErrorKind::InvalidConfig, "grid does not cover the samples");
        double bw = bandwidth_scale * silverman_1d(xs);
        // discrete Gaussian kernel, truncated at 6 bandwidths
        int half = std::max(1, int(std::ceil(6.0 * bw / h)));
        std::vector<double> kernel(2 * half + 1);
        double ksum = 0.0;
        for (int k = -half; k <= half; ++k) {
            double t = double(k) * h / bw;
            kernel[k + half] = std::exp(-0.5 * t * t);
            ksum += kernel[k + half];
        }
        for (double& k : kernel) k /= ksum;
        for (int c = 0; c < cells; ++c) {
            if (bins[c] == 0.0) continue;
            int klo = std::max(0, c - half), khi = std::min(cells - 1, c + half);
            for (int j = klo; j <= khi; ++j) state.rho[j] += bins[c] * kernel[j - c + half];
        }
    } else {
        // direct product-kernel sum; intended for modest sample counts
        std::vector<double> bw(d);
        for (int a = 0; a < d; ++a) {
            std::vector<double> xs(n);
            for (int i = 0; i < n; ++i) xs[i] = samples[std::size_t(i) * d + a];
            double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / double(n);
            double var = 0.0;
            for (double x : xs) var += (x - mean) * (x - mean);
            var /= double(n - 1);
            bw[a] = bandwidth_scale * std::sqrt(var) *
                    std::pow(4.0 / ((d + 2.0) * n), 1.0 / (d + 4.0));
            if (bw[a] <= 0.0) bw[a] = 1e-6;
        }
        for (int i = 0; i < n; ++i) {
            auto pt = samples.subspan(std::size_t(i) * d, d);
            if (!grid.contains(pt)) ++clipped;
        }
        std::array<int, 3> idx{0, 0, 0};
        for (int cell = 0; cell < grid.size(); ++cell) {
            int rem = cell;
            for (int a = 0; a < d; ++a) {
                idx[a] = rem % grid.shape[a];
                rem /= grid.shape[a];
            }
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
                double w = 1.0;
                for (int a = 0; a < d; ++a) {
                    double t = (grid.coord(a, idx[a]) - samples[std::size_t(i) * d + a]) / bw[a];
                    w *= std::exp(-0.5 * t * t);
                }
                acc += w;
            }
            state.rho[cell] = acc;
        }
    }

    state.clipped_fraction = double(clipped) / double(n);
    state.clipped_warning = state.clipped_fraction > 1e-3;

    double mass = integrate(grid, state.rho);
    if (mass <= 0.0) throw Error(ErrorKind::NumericError, "estimated density has no mass");
    for (double& v : state.rho) v *= total_mass / mass;
    return state;
}

double unit_sphere_factor(int d) {
    switch (d) {
        case 1: return 2.0;
        case 2: return 2.0 * kPi;
        case 3: return 4.0 * kPi;
    }
    throw Error(ErrorKind::InvalidConfig, "dimension must be 1..3");
}

CutoffSpec cutoffs(const CoarseState& state, double L) {
    if (L <= 0.0) throw Error(ErrorKind::InvalidConfig, "L must be positive");
    if (state.N < 1) throw Error(ErrorKind::InvalidConfig, "state carries no events");
    CutoffSpec spec;
    spec.grid = state.grid;
    spec.d = state.grid.d;
    spec.N = state.N;
    spec.L = L;
    spec.R = L * std::pow(double(state.N), 1.0 / spec.d);

    spec.a.assign(state.rho.size(), 0.0);
    const double vol = state.grid.cell_volume();
    double weighted = 0.0, mass = 0.0;
    for (std::size_t i = 0; i < state.rho.size(); ++i) {
        double rho = state.rho[i];
        if (rho <= 0.0) {
            ++spec.excluded_cells;
            continue;
        }
        spec.a[i] = std::pow(double(state.N) * rho, -1.0 / spec.d);
        weighted += rho * spec.a[i] * vol;
        mass += rho * vol;
    }
    if (mass <= 0.0) throw Error(ErrorKind::NumericError, "density has no positive cells");
    spec.a_mean = weighted / mass;
    spec.r = spec.R / spec.a_mean;
    double omega = unit_sphere_factor(spec.d);
    spec.Z_V = double(spec.d) * double(spec.d) /
               (2.0 * double(spec.N) * omega * omega * std::pow(spec.r, 2.0 * spec.d));
    return spec;
}

double CutoffSpec::a_at(std::span<const double> pt) const {
    if (a.empty() || !grid.contains(pt)) return a_mean;
    int cell = 0;
    for (int ax = 0; ax < d; ++ax) cell += grid.cell_of(ax, pt[ax]) * grid.stride(ax);
    double v = a[cell];
    return v > 0.0 ? v : a_mean;
}

double discrete_acausal_variety(std::span<const double> samples, int n, int d,
                                const std::vector<std::vector<double>>& pasts,
                                const CutoffSpec& cutoff) {
    if (int(pasts.size()) != n)
        throw Error(ErrorKind::ShapeMismatch, "one past list per sample required");

    // w = 2 views in configuration space: sum of x/|x|^2 over past offsets
    std::vector<double> phi(std::size_t(n) * d, 0.0);
    for (int i = 0; i < n; ++i) {
        const auto& past = pasts[i];
        if (past.size() % d != 0)
            throw Error(ErrorKind::ShapeMismatch, "past offsets must be d-vectors");
        auto out = row(phi, i, d);
        for (std::size_t k = 0; k + d <= past.size(); k += d) {
            std::span<const double> x(past.data() + k, std::size_t(d));
            double n2 = norm2(x);
            if (n2 <= 0.0) continue;
            add_to(out, x, 1.0 / n2);
        }
    }

    // order along the first axis allows pruning on separation > R
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        return samples[std::size_t(i) * d] < samples[std::size_t(j) * d];
    });

    const double R = cutoff.R;
    double sum = 0.0;
    bool any = false;
    for (int oi = 0; oi < n; ++oi) {
        int i = order[oi];
        auto zi = samples.subspan(std::size_t(i) * d, d);
        double ai = cutoff.a_at(zi);
        for (int oj = oi + 1; oj < n; ++oj) {
            int j = order[oj];
            auto zj = samples.subspan(std::size_t(j) * d, d);
            if (zj[0] - zi[0] > R) break;
            double sep = std::sqrt(dist2(zi, zj));
            if (sep > R) continue;
            double aj = cutoff.a_at(zj);
            if (sep < std::max(ai, aj)) continue;
            sum += dist2(row(phi, i, d), row(phi, j, d));
            any = true;
        }
    }
    if (!any) return 0.0; // empty shell for every pair
    return cutoff.Z_V * sum;
}

namespace {

double guarded_fisher(const Grid& grid, std::span<const double> rho,
                      const std::vector<double>& gn2) {
    double rho_max = *std::max_element(rho.begin(), rho.end());
    double floor = 1e-12 * rho_max;
    double acc = 0.0;
    for (int i = 0; i < grid.size(); ++i)
        if (rho[i] > floor) acc += gn2[i] / rho[i];
    return acc * grid.cell_volume();
}

} // namespace

VarietyReport continuum_variety(const CoarseState& state, const CutoffSpec& cutoff) {
    const Grid& grid = state.grid;
    VarietyReport rep;
    rep.N = state.N;
    rep.Z_V = cutoff.Z_V;

    std::vector<double> gn2 = grad_norm2(grid, state.rho, BoundaryMode::Walls);
    rep.fisher_term = guarded_fisher(grid, state.rho, gn2);

    // stencil-order comparison as the resolution estimate
    std::vector<double> gn2_low = grad_norm2_c2(grid, state.rho, BoundaryMode::Walls);
    double fisher_low = guarded_fisher(grid, state.rho, gn2_low);
    double scale = std::max(std::abs(rep.fisher_term), 1e-300);
    if (std::abs(rep.fisher_term - fisher_low) > 0.10 * scale && rep.fisher_term > 1e-12)
        throw Error(ErrorKind::ResolutionError,
                    "grid too coarse: stencil orders disagree beyond 10%");

    double mass = integrate(grid, state.rho);
    rep.constant_term = mass / (cutoff.R * cutoff.R);

    std::vector<double> lap = laplacian(grid, state.rho, BoundaryMode::Walls);
    double rho_max = *std::max_element(state.rho.begin(), state.rho.end());
    double floor = 1e-12 * rho_max;
    double corr = 0.0;
    for (int i = 0; i < grid.size(); ++i)
        if (state.rho[i] > floor) corr += lap[i] * lap[i] / state.rho[i];
    corr *= grid.cell_volume();
    rep.correction_term =
        std::pow(double(state.N), -2.0 / grid.d) * cutoff.r * cutoff.r * corr;
    return rep;
}

double bohm_functional(const CoarseState& state, double m, double hbar) {
    if (m <= 0.0) throw Error(ErrorKind::InvalidConfig, "m must be positive");
    std::vector<double> gn2 = grad_norm2(state.grid, state.rho, BoundaryMode::Walls);
    return hbar * hbar / (8.0 * m) * guarded_fisher(state.grid, state.rho, gn2);
}

std::vector<double> bohm_potential_field(const CoarseState& state, double m, double hbar) {
    std::vector<double> amp(state.rho.size());
    for (std::size_t i = 0; i < amp.size(); ++i) amp[i] = std::sqrt(std::max(state.rho[i], 0.0));
    std::vector<double> lap = laplacian(state.grid, amp, BoundaryMode::Walls);
    double amp_max = *std::max_element(amp.begin(), amp.end());
    double floor = 1e-10 * amp_max;
    std::vector<double> q(amp.size(), 0.0);
    for (std::size_t i = 0; i < amp.size(); ++i)
        if (amp[i] > floor) q[i] = -hbar * hbar / (2.0 * m) * lap[i] / amp[i];
    return q;
}

double nonlinear_correction(const CoarseState& state, const CutoffSpec& cutoff, double m,
                            double hbar) {
    VarietyReport rep = continuum_variety(state, cutoff);
    return -hbar * hbar / (8.0 * m) * rep.correction_term;
}

// --- analytic models ----------------------------------------------------

namespace {

double gauss_pdf(double z, double mean, double sigma) {
    double t = (z - mean) / sigma;
    return std::exp(-0.5 * t * t) / (sigma * std::sqrt(2.0 * kPi));
}

double gauss_dpdf(double z, double mean, double sigma) {
    return -((z - mean) / (sigma * sigma)) * gauss_pdf(z, mean, sigma);
}

} // namespace

double DensityModel::rho(double z) const {
    switch (kind) {
        case Kind::Gaussian: return gauss_pdf(z, mean, sigma);
        case Kind::Uniform: return (z >= lo && z <= hi) ? 1.0 / (hi - lo) : 0.0;
        case Kind::Mixture:
            return (1.0 - w2) * gauss_pdf(z, mean, sigma) + w2 * gauss_pdf(z, mean2, sigma2);
    }
    return 0.0;
}

double DensityModel::sample(Rng& rng) const {
    switch (kind) {
        case Kind::Gaussian: return rng.normal(mean, sigma);
        case Kind::Uniform: return rng.uniform(lo, hi);
        case Kind::Mixture:
            return rng.uniform01() < w2 ? rng.normal(mean2, sigma2) : rng.normal(mean, sigma);
    }
    return 0.0;
}

double DensityModel::width() const {
    switch (kind) {
        case Kind::Gaussian: return sigma;
        case Kind::Uniform: return hi - lo;
        case Kind::Mixture: return std::min(sigma, sigma2);
    }
    return 1.0;
}

void DensityModel::support(double& zlo, double& zhi) const {
    switch (kind) {
        case Kind::Gaussian:
            zlo = mean - 8.0 * sigma;
            zhi = mean + 8.0 * sigma;
            return;
        case Kind::Uniform:
            zlo = lo;
            zhi = hi;
            return;
        case Kind::Mixture:
            zlo = std::min(mean - 8.0 * sigma, mean2 - 8.0 * sigma2);
            zhi = std::max(mean + 8.0 * sigma, mean2 + 8.0 * sigma2);
            return;
    }
}

namespace {

// composite Simpson over [lo, hi]
template <typename F>
double simpson(F f, double lo, double hi, int points) {
    if (points < 3) points = 3;
    if (points % 2 == 0) ++points;
    double h = (hi - lo) / (points - 1);
    double acc = f(lo) + f(hi);
    for (int i = 1; i + 1 < points; ++i) acc += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

} // namespace

double DensityModel::fisher() const {
    switch (kind) {
        case Kind::Gaussian: return 1.0 / (sigma * sigma);
        case Kind::Uniform: return 0.0;
        case Kind::Mixture: {
            double zlo, zhi;
            support(zlo, zhi);
            auto drho = [&](double z) {
                return (1.0 - w2) * gauss_dpdf(z, mean, sigma) + w2 * gauss_dpdf(z, mean2, sigma2);
            };
            return simpson(
                [&](double z) {
                    double r = rho(z);
                    if (r < 1e-300) return 0.0;
                    double dr = drho(z);
                    return dr * dr / r;
                },
                zlo, zhi, 80001);
        }
    }
    return 0.0;
}

namespace {

struct Region {
    double lo = 0.0, hi = 0.0;
};

// Largest window around the density peak where a(z) <= cap. For the
// uniform model this also insets the edges so that z +- a stays inside.
template <typename RhoFn>
Region auto_region(RhoFn rho, double zlo, double zhi, long long N, double cap, int scan) {
    const double thresh = 1.0 / (double(N) * cap); // rho >= thresh
    double best_lo = 0.0, best_hi = -1.0;
    double step = (zhi - zlo) / scan;
    double cur_lo = 0.0;
    bool inside = false;
    for (int i = 0; i <= scan; ++i) {
        double z = zlo + i * step;
        bool ok = rho(z) >= thresh;
        if (ok && !inside) {
            cur_lo = z;
            inside = true;
        }
        if ((!ok || i == scan) && inside) {
            double cur_hi = z;
            if (cur_hi - cur_lo > best_hi - best_lo) {
                best_lo = cur_lo;
                best_hi = cur_hi;
            }
            inside = false;
        }
    }
    if (best_hi <= best_lo)
        throw Error(ErrorKind::ResolutionError, "no region satisfies the UV cap");
    // inset so that z +- a(z) stays within the scanned support
    double inset = cap;
    best_lo = std::max(best_lo + inset, zlo + inset);
    best_hi = std::min(best_hi - inset, zhi - inset);
    if (best_hi <= best_lo)
        throw Error(ErrorKind::ResolutionError, "evaluation region collapsed");
    return {best_lo, best_hi};
}

template <typename RhoFn>
ResolutionVariety resolution_core(RhoFn rho, long long N, double L, Region region,
                                  double width, int quad_points) {
    ResolutionVariety out;
    out.region_lo = region.lo;
    out.region_hi = region.hi;
    out.R = L * double(N); // d = 1
    const double cap = 0.2 * width;

    auto vfun = [&](double z) {
        double r0 = rho(z);
        if (r0 <= 0.0) return 0.0;
        double a = 1.0 / (double(N) * r0);
        if (a > cap) a = cap;
        double rp = rho(z + a), rm = rho(z - a);
        double denom = rp + rm;
        if (denom <= 0.0) return 0.0;
        double g = (rp - rm) / (a * denom);
        return r0 * g * g;
    };
    auto ffun = [&](double z) {
        double r0 = rho(z);
        if (r0 <= 0.0) return 0.0;
        // centered derivative with a fixed tiny step: the a -> 0 limit
        double eps = 1e-6 * width;
        double g = (rho(z + eps) - rho(z - eps)) / (2.0 * eps * r0);
        return r0 * g * g;
    };
    auto mfun = [&](double z) { return rho(z); };

    out.fisher_region = simpson(ffun, region.lo, region.hi, quad_points);
    double mass = simpson(mfun, region.lo, region.hi, quad_points);
    out.constant_region = mass / (out.R * out.R);
    out.value = simpson(vfun, region.lo, region.hi, quad_points) + out.constant_region;
    return out;
}

} // namespace

ResolutionVariety variety_at_resolution(const DensityModel& model, long long N, double L,
                                        const ResolutionOptions& opts) {
    if (N < 2) throw Error(ErrorKind::InvalidConfig, "need N >= 2");
    if (L <= 0.0) throw Error(ErrorKind::InvalidConfig, "L must be positive");
    double zlo, zhi;
    model.support(zlo, zhi);
    Region region;
    if (opts.auto_region) {
        region = auto_region([&](double z) { return model.rho(z); }, zlo, zhi, N,
                             opts.a_cap_frac * model.width(), 20000);
    } else {
        region = {opts.region_lo, opts.region_hi};
    }
    return resolution_core([&](double z) { return model.rho(z); }, N, L, region,
                           model.width(), opts.quad_points);
}

namespace {

// cubic Catmull-Rom interpolation of a cell-centered 1-D field
double interp_rho(const CoarseState& state, double x) {
    const Grid& g = state.grid;
    const double h = g.h(0);
    double u = (x - g.lo[0]) / h - 0.5;
    int i1 = int(std::floor(u));
    double t = u - double(i1);
    auto value = [&](int i) {
        if (i < 0) i = 0;
        if (i >= g.shape[0]) i = g.shape[0] - 1;
        return state.rho[i];
    };
    double p0 = value(i1 - 1), p1 = value(i1), p2 = value(i1 + 1), p3 = value(i1 + 2);
    double v = p1 + 0.5 * t * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 +
                                              t * (3.0 * (p1 - p2) + p3 - p0)));
    return std::max(v, 0.0);
}

} // namespace

ResolutionVariety variety_at_resolution(const CoarseState& state, double L,
                                        const ResolutionOptions& opts) {
    if (state.grid.d != 1)
        throw Error(ErrorKind::InvalidConfig, "resolution functional is one-dimensional");
    // KDE width proxy: standard deviation of the estimated density
    double vol = state.grid.cell_volume();
    double mean = 0.0;
    for (int i = 0; i < state.grid.size(); ++i) mean += state.grid.coord(0, i) * state.rho[i] * vol;
    double var = 0.0;
    for (int i = 0; i < state.grid.size(); ++i) {
        double dz = state.grid.coord(0, i) - mean;
        var += dz * dz * state.rho[i] * vol;
    }
    double width = std::sqrt(std::max(var, 1e-30));

    Region region;
    if (opts.auto_region) {
        region = auto_region([&](double z) { return interp_rho(state, z); }, state.grid.lo[0],
                             state.grid.hi[0], state.N, opts.a_cap_frac * width, 20000);
    } else {
        region = {opts.region_lo, opts.region_hi};
    }
    return resolution_core([&](double z) { return interp_rho(state, z); }, state.N, L, region,
                           width, opts.quad_points);
}

ConvergenceTable convergence_study(const DensityModel& model,
                                   const std::vector<long long>& n_list, double L,
                                   std::uint64_t seed) {
    if (n_list.size() < 3)
        throw Error(ErrorKind::FitError, "need at least 3 values of N for a slope fit");
    std::vector<long long> ns = n_list;
    std::sort(ns.begin(), ns.end());

    // one evaluation window for every row, derived at the smallest N
    double zlo, zhi;
    model.support(zlo, zhi);
    Region region = auto_region([&](double z) { return model.rho(z); }, zlo, zhi, ns.front(),
                                0.2 * model.width(), 20000);
    ResolutionOptions det_opts;
    det_opts.auto_region = false;
    det_opts.region_lo = region.lo;
    det_opts.region_hi = region.hi;

    Rng root(seed);
    ConvergenceTable table;
    for (long long N : ns) {
        ConvergenceRow rowv;
        rowv.N = N;
        ResolutionVariety det = variety_at_resolution(model, N, L, det_opts);
        rowv.discrete_det = det.value;
        rowv.fisher = det.fisher_region;
        rowv.constant = det.constant_region;
        rowv.diff_det = std::abs(det.value - (det.fisher_region + det.constant_region));

        // sampled route: KDE of N draws, same functional, same window
        Rng rng = root.derive("convergence", std::uint64_t(N));
        std::vector<double> samples(N);
        for (long long i = 0; i < N; ++i) samples[i] = model.sample(rng);
        double glo = zlo - 0.5 * model.width(), ghi = zhi + 0.5 * model.width();
        Grid grid = Grid::line(2048, glo, ghi);
        CoarseState state = estimate_density(samples, int(N), grid);
        ResolutionVariety kde = variety_at_resolution(state, L, det_opts);
        rowv.discrete_kde = kde.value;
        rowv.diff_kde = std::abs(kde.value - (det.fisher_region + det.constant_region));

        table.rows.push_back(rowv);
    }

    auto fit_slope = [&](auto getter) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int m = 0;
        for (const auto& rowv : table.rows) {
            double dy = getter(rowv);
            if (dy <= 0.0) continue; // exactly-converged rows carry no slope information
            double x = std::log(double(rowv.N));
            double y = std::log(dy);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++m;
        }
        if (m < 3) return std::nan("");
        return (double(m) * sxy - sx * sy) / (double(m) * sxx - sx * sx);
    };
    table.slope_det = fit_slope([](const ConvergenceRow& r) { return r.diff_det; });
    table.slope_kde = fit_slope([](const ConvergenceRow& r) { return r.diff_kde; });
    return table;
}

} // namespace ecsim
