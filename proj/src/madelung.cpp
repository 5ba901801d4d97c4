#include "ecsim/madelung.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ecsim {

namespace {

void require_1d(const Grid& g) {
    if (g.d != 1)
        throw Error(ErrorKind::InvalidConfig, "hydrodynamic evolution is one-dimensional");
}

// Near-node guard for the quantum force: the floor clamp leaves a kink in
// sqrt(rho) whose Laplacian spike would otherwise feed the phase field.
// Inert for rho >> 100 * floor; initial data is expected to carry a small
// uniform padding (see gaussian_packet) so healthy evolutions never enter
// this regime at all.
inline double node_switch(double rho, double floor) {
    double eps = 100.0 * floor;
    return rho * rho / (rho * rho + eps * eps);
}

struct Faces {
    // value at face between cells i and i+1 (periodic: face n-1 wraps to 0;
    // walls: faces at the domain ends do not exist and are treated as zero)
    int n = 0;
    BoundaryMode bc = BoundaryMode::Periodic;
    int count() const { return bc == BoundaryMode::Periodic ? n : n - 1; }
    int left_cell(int f) const { return f; }
    int right_cell(int f) const { return (f + 1) % n; }
};

} // namespace

std::vector<double> continuity_rhs(const HydroState& state, const MadelungParams& params) {
    require_1d(state.grid);
    const int n = state.grid.shape[0];
    const double h = state.grid.h(0);
    Faces faces{n, params.boundary};
    std::vector<double> rhs(n, 0.0);
    for (int f = 0; f < faces.count(); ++f) {
        int i = faces.left_cell(f), j = faces.right_cell(f);
        double rho_f = 0.5 * (state.rho[i] + state.rho[j]);
        double flux = rho_f * (state.S[j] - state.S[i]) / (h * params.m);
        rhs[i] -= flux / h;
        rhs[j] += flux / h;
    }
    return rhs;
}

std::vector<double> hj_rhs(const HydroState& state, const MadelungParams& params,
                           EvolveMode mode) {
    require_1d(state.grid);
    const int n = state.grid.shape[0];
    const double h = state.grid.h(0);
    Faces faces{n, params.boundary};

    // face-averaged squared phase gradient: the exact rho-partial of the
    // kinetic part of the discrete Hamiltonian
    std::vector<double> kin(n, 0.0);
    for (int f = 0; f < faces.count(); ++f) {
        int i = faces.left_cell(f), j = faces.right_cell(f);
        double ds = (state.S[j] - state.S[i]) / h;
        kin[i] += 0.5 * ds * ds;
        kin[j] += 0.5 * ds * ds;
    }

    std::vector<double> rhs(n);
    for (int i = 0; i < n; ++i) {
        rhs[i] = -kin[i] / (2.0 * params.m);
        if (params.potential) rhs[i] -= params.potential(state.grid.coord(0, i));
    }

    if (mode == EvolveMode::Quantum || mode == EvolveMode::QuantumCorrected) {
        // -Q = +(hbar^2/2m) lap sqrt(rho) / sqrt(rho), 3-point Laplacian
        std::vector<double> amp(n);
        for (int i = 0; i < n; ++i) amp[i] = std::sqrt(std::max(state.rho[i], params.rho_floor));
        for (int i = 0; i < n; ++i) {
            double ap = fd::at(amp, i + 1, params.boundary);
            double am = fd::at(amp, i - 1, params.boundary);
            double lap = (ap - 2.0 * amp[i] + am) / (h * h);
            double q_term = params.hbar * params.hbar / (2.0 * params.m) * lap / amp[i];
            rhs[i] += q_term * node_switch(state.rho[i], params.rho_floor);
        }
    }

    if (mode == EvolveMode::QuantumCorrected && params.correction_strength != 0.0) {
        // kappa [ 2 lap(lap rho / rho) - (lap rho / rho)^2 ]
        const double kappa = params.correction_strength;
        std::vector<double> ratio(n);
        for (int i = 0; i < n; ++i) {
            double rp = fd::at(state.rho, i + 1, params.boundary);
            double rm = fd::at(state.rho, i - 1, params.boundary);
            double lap = (rp - 2.0 * state.rho[i] + rm) / (h * h);
            double rho_i = std::max(state.rho[i], params.rho_floor);
            ratio[i] = lap / rho_i * node_switch(state.rho[i], params.rho_floor);
        }
        for (int i = 0; i < n; ++i) {
            double rp = fd::at(ratio, i + 1, params.boundary);
            double rm = fd::at(ratio, i - 1, params.boundary);
            double lap_ratio = (rp - 2.0 * ratio[i] + rm) / (h * h);
            rhs[i] += kappa * (2.0 * lap_ratio - ratio[i] * ratio[i]);
        }
    }
    return rhs;
}

double total_mass(const HydroState& state) { return integrate(state.grid, state.rho); }

double hydro_energy(const HydroState& state, const MadelungParams& params, EvolveMode mode) {
    require_1d(state.grid);
    const int n = state.grid.shape[0];
    const double h = state.grid.h(0);
    Faces faces{n, params.boundary};
    double e = 0.0;
    for (int f = 0; f < faces.count(); ++f) {
        int i = faces.left_cell(f), j = faces.right_cell(f);
        double ds = (state.S[j] - state.S[i]) / h;
        double rho_f = 0.5 * (state.rho[i] + state.rho[j]);
        e += h * rho_f * ds * ds / (2.0 * params.m);
    }
    if (mode == EvolveMode::Quantum || mode == EvolveMode::QuantumCorrected) {
        std::vector<double> amp(n);
        for (int i = 0; i < n; ++i) amp[i] = std::sqrt(std::max(state.rho[i], 0.0));
        for (int f = 0; f < faces.count(); ++f) {
            int i = faces.left_cell(f), j = faces.right_cell(f);
            double da = (amp[j] - amp[i]) / h;
            e += h * params.hbar * params.hbar / (2.0 * params.m) * da * da;
        }
    }
    if (params.potential)
        for (int i = 0; i < n; ++i)
            e += h * params.potential(state.grid.coord(0, i)) * state.rho[i];
    if (mode == EvolveMode::QuantumCorrected && params.correction_strength != 0.0) {
        for (int i = 0; i < n; ++i) {
            double rp = fd::at(state.rho, i + 1, params.boundary);
            double rm = fd::at(state.rho, i - 1, params.boundary);
            double lap = (rp - 2.0 * state.rho[i] + rm) / (h * h);
            double rho_i = std::max(state.rho[i], params.rho_floor);
            e -= h * params.correction_strength * lap * lap / rho_i;
        }
    }
    return e;
}

EvolveReport evolve(const HydroState& initial, const MadelungParams& params, double dt,
                    int steps, EvolveMode mode) {
    require_1d(initial.grid);
    if (dt <= 0.0 || steps < 0) throw Error(ErrorKind::InvalidConfig, "bad dt or steps");
    const double h = initial.grid.h(0);
    if (mode != EvolveMode::Classical) {
        double bound = h * h * params.m / (2.0 * params.hbar);
        if (dt > bound)
            throw Error(ErrorKind::InvalidConfig,
                        "dt " + std::to_string(dt) + " exceeds the step bound " +
                            std::to_string(bound));
    }

    EvolveReport rep;
    rep.state = initial;
    const int n = initial.grid.shape[0];
    const double mass0 = total_mass(initial);
    const double e0 = hydro_energy(initial, params, mode);

    HydroState work = initial;
    std::vector<double> k_rho[4], k_s[4];
    for (int s = 0; s < steps; ++s) {
        const HydroState& base = rep.state;
        auto stage = [&](double frac, const std::vector<double>* kr,
                         const std::vector<double>* ks, int out) {
            if (kr) {
                for (int i = 0; i < n; ++i) {
                    work.rho[i] = base.rho[i] + frac * dt * (*kr)[i];
                    work.S[i] = base.S[i] + frac * dt * (*ks)[i];
                }
            } else {
                work.rho = base.rho;
                work.S = base.S;
            }
            k_rho[out] = continuity_rhs(work, params);
            k_s[out] = hj_rhs(work, params, mode);
        };
        stage(0.0, nullptr, nullptr, 0);
        stage(0.5, &k_rho[0], &k_s[0], 1);
        stage(0.5, &k_rho[1], &k_s[1], 2);
        stage(1.0, &k_rho[2], &k_s[2], 3);

        int floored = 0;
        bool bad = false;
        for (int i = 0; i < n; ++i) {
            double drho =
                dt / 6.0 * (k_rho[0][i] + 2.0 * k_rho[1][i] + 2.0 * k_rho[2][i] + k_rho[3][i]);
            double ds = dt / 6.0 * (k_s[0][i] + 2.0 * k_s[1][i] + 2.0 * k_s[2][i] + k_s[3][i]);
            double rho = rep.state.rho[i] + drho;
            double S = rep.state.S[i] + ds;
            if (!std::isfinite(rho) || !std::isfinite(S) || std::abs(rho) > 1e12) bad = true;
            if (rho < params.rho_floor) {
                rho = params.rho_floor;
                ++floored;
            }
            rep.state.rho[i] = rho;
            rep.state.S[i] = S;
        }
        rep.state.t += dt;
        rep.floored_fraction = std::max(rep.floored_fraction, double(floored) / n);
        if (bad)
            throw Error(ErrorKind::Instability,
                        "evolution diverged at step " + std::to_string(s) + " (t = " +
                            std::to_string(rep.state.t) + ")");
    }
    rep.steps = steps;
    rep.degeneracy_warning = rep.floored_fraction > 0.01;
    rep.mass_drift = std::abs(total_mass(rep.state) - mass0);
    double e1 = hydro_energy(rep.state, params, mode);
    rep.energy_drift = std::abs(e1 - e0) / std::max(std::abs(e0), 1e-300);
    return rep;
}

double l2_norm(const WaveFunction& wf) {
    double s = 0.0;
    for (const auto& c : wf.psi) s += std::norm(c);
    return std::sqrt(s * wf.grid.cell_volume());
}

WaveFunction to_wavefunction(const HydroState& state, double hbar) {
    if (hbar <= 0.0) throw Error(ErrorKind::InputError, "wavefunction map needs hbar > 0");
    WaveFunction wf;
    wf.grid = state.grid;
    wf.psi.resize(state.rho.size());
    for (std::size_t i = 0; i < state.rho.size(); ++i) {
        double amp = std::sqrt(std::max(state.rho[i], 0.0));
        wf.psi[i] = std::polar(amp, state.S[i] / hbar);
    }
    return wf;
}

HydroFromPsi from_wavefunction(const WaveFunction& wf, double hbar) {
    if (hbar <= 0.0) throw Error(ErrorKind::InputError, "wavefunction map needs hbar > 0");
    require_1d(wf.grid);
    const int n = int(wf.psi.size());
    HydroFromPsi out;
    out.state.grid = wf.grid;
    out.state.rho.resize(n);
    out.state.S.assign(n, 0.0);

    double peak = 0.0;
    int i0 = 0;
    for (int i = 0; i < n; ++i) {
        out.state.rho[i] = std::norm(wf.psi[i]);
        if (out.state.rho[i] > peak) {
            peak = out.state.rho[i];
            i0 = i;
        }
    }
    const double eps = 1e-12 * std::sqrt(peak);
    auto wrap_pi = [](double x) {
        const double two_pi = 6.283185307179586476925286766559;
        x = std::fmod(x + 3.14159265358979323846, two_pi);
        if (x < 0) x += two_pi;
        return x - 3.14159265358979323846;
    };
    out.state.S[i0] = hbar * std::arg(wf.psi[i0]);
    auto sweep = [&](int from, int to, int step) {
        double prev_arg = std::arg(wf.psi[from]);
        for (int i = from + step; i != to; i += step) {
            double amp = std::abs(wf.psi[i]);
            if (amp <= eps) {
                ++out.undefined_phase_cells; // node: phase carried over, flagged
                out.state.S[i] = out.state.S[i - step];
                continue;
            }
            double cur = std::arg(wf.psi[i]);
            out.state.S[i] = out.state.S[i - step] + hbar * wrap_pi(cur - prev_arg);
            prev_arg = cur;
        }
    };
    sweep(i0, n, 1);
    sweep(i0, -1, -1);
    return out;
}

namespace {

using cx = std::complex<double>;

// Thomas algorithm for a constant-coefficient tridiagonal system with
// diagonal b, off-diagonals a; modified first/last diagonal entries.
void thomas(std::vector<cx>& x, cx sub, std::vector<cx>& diag, cx sup,
            std::vector<cx>& rhs) {
    const int n = int(diag.size());
    std::vector<cx> cp(n);
    cx denom = diag[0];
    if (std::abs(denom) < 1e-300) throw Error(ErrorKind::NumericError, "singular pivot");
    cp[0] = sup / denom;
    x[0] = rhs[0] / denom;
    for (int i = 1; i < n; ++i) {
        denom = diag[i] - sub * cp[i - 1];
        if (std::abs(denom) < 1e-300) throw Error(ErrorKind::NumericError, "singular pivot");
        cp[i] = sup / denom;
        x[i] = (rhs[i] - sub * x[i - 1]) / denom;
    }
    for (int i = n - 2; i >= 0; --i) x[i] -= cp[i] * x[i + 1];
}

} // namespace

WaveFunction schrodinger_oracle(const WaveFunction& psi0, const MadelungParams& params,
                                double dt, int steps) {
    require_1d(psi0.grid);
    if (dt <= 0.0 || steps < 0) throw Error(ErrorKind::InvalidConfig, "bad dt or steps");
    const int n = int(psi0.psi.size());
    const double h = psi0.grid.h(0);
    const cx I(0.0, 1.0);
    const double gamma = params.hbar * dt / (4.0 * params.m * h * h);

    // (1 - i gamma Lap_h) psi' = (1 + i gamma Lap_h) psi, Lap_h = tridiag(1,-2,1)
    const cx sub = -I * gamma;
    const cx body = 1.0 + 2.0 * I * gamma;
    const bool periodic = params.boundary == BoundaryMode::Periodic;

    WaveFunction wf = psi0;
    std::vector<cx> rhs(n), x(n), diag(n), q(n), u(n);

    for (int s = 0; s < steps; ++s) {
        // right-hand side: B psi with wrap or Dirichlet ends
        for (int i = 0; i < n; ++i) {
            cx left = i > 0 ? wf.psi[i - 1] : (periodic ? wf.psi[n - 1] : cx(0.0));
            cx right = i + 1 < n ? wf.psi[i + 1] : (periodic ? wf.psi[0] : cx(0.0));
            rhs[i] = wf.psi[i] + I * gamma * (left - 2.0 * wf.psi[i] + right);
        }
        if (!periodic) {
            std::fill(diag.begin(), diag.end(), body);
            thomas(x, sub, diag, sub, rhs);
        } else {
            // Sherman-Morrison fold of the periodic corners
            cx alpha = sub, beta = sub;
            cx g0 = -body;
            std::fill(diag.begin(), diag.end(), body);
            diag[0] = body - g0;
            diag[n - 1] = body - alpha * beta / g0;
            std::fill(u.begin(), u.end(), cx(0.0));
            u[0] = g0;
            u[n - 1] = alpha;
            thomas(x, sub, diag, sub, rhs);
            thomas(q, sub, diag, sub, u);
            cx vy = x[0] + beta / g0 * x[n - 1];
            cx vq = q[0] + beta / g0 * q[n - 1];
            cx factor = vy / (1.0 + vq);
            for (int i = 0; i < n; ++i) x[i] -= factor * q[i];
        }
        wf.psi = x;
    }
    return wf;
}

double packet_center(const Grid& grid, std::span<const double> density) {
    double vol = grid.cell_volume();
    double mass = 0.0, mz = 0.0;
    for (int i = 0; i < grid.size(); ++i) {
        mass += density[i] * vol;
        mz += grid.coord(0, i) * density[i] * vol;
    }
    return mz / mass;
}

double packet_sigma2(const Grid& grid, std::span<const double> density) {
    double c = packet_center(grid, density);
    double vol = grid.cell_volume();
    double mass = 0.0, m2 = 0.0;
    for (int i = 0; i < grid.size(); ++i) {
        double dz = grid.coord(0, i) - c;
        mass += density[i] * vol;
        m2 += dz * dz * density[i] * vol;
    }
    return m2 / mass;
}

CompareReport compare_evolutions(const HydroState& initial, const MadelungParams& params,
                                 double dt, int steps, EvolveMode mode) {
    CompareReport rep;
    EvolveReport hydro = evolve(initial, params, dt, steps, mode);
    rep.mass_drift = hydro.mass_drift;
    rep.energy_drift = hydro.energy_drift;
    rep.hydro_final = hydro.state;

    WaveFunction psi0 = to_wavefunction(initial, params.hbar);
    rep.oracle_final = schrodinger_oracle(psi0, params, dt, steps);

    const Grid& g = initial.grid;
    const double vol = g.cell_volume();
    double err2 = 0.0;
    for (int i = 0; i < g.size(); ++i) {
        double d = std::sqrt(std::max(rep.hydro_final.rho[i], 0.0)) -
                   std::abs(rep.oracle_final.psi[i]);
        err2 += d * d * vol;
    }
    rep.l2_amplitude_error = std::sqrt(err2);

    // phase comparison away from nodes, modulo one global constant
    HydroFromPsi oracle_hydro = from_wavefunction(rep.oracle_final, params.hbar);
    double wsum = 0.0, dsum = 0.0;
    for (int i = 0; i < g.size(); ++i) {
        if (rep.hydro_final.rho[i] <= 1e-6) continue;
        double w = rep.hydro_final.rho[i];
        dsum += w * (rep.hydro_final.S[i] - oracle_hydro.state.S[i]);
        wsum += w;
    }
    double offset = wsum > 0.0 ? dsum / wsum : 0.0;
    double prms = 0.0;
    if (wsum > 0.0) {
        for (int i = 0; i < g.size(); ++i) {
            if (rep.hydro_final.rho[i] <= 1e-6) continue;
            double d = rep.hydro_final.S[i] - oracle_hydro.state.S[i] - offset;
            prms += rep.hydro_final.rho[i] * d * d;
        }
        prms = std::sqrt(prms / wsum);
    }
    rep.phase_rms_error = prms;
    return rep;
}

HydroState gaussian_packet(const Grid& grid, double sigma, double center, double velocity,
                           double m, double padding) {
    require_1d(grid);
    HydroState st;
    st.grid = grid;
    st.rho.resize(grid.size());
    st.S.resize(grid.size());
    const double norm_c = 1.0 / (sigma * std::sqrt(2.0 * 3.14159265358979323846));
    for (int i = 0; i < grid.size(); ++i) {
        double z = grid.coord(0, i);
        double t = (z - center) / sigma;
        st.rho[i] = norm_c * std::exp(-0.5 * t * t) + padding;
        st.S[i] = m * velocity * z;
    }
    double mass = total_mass(st);
    for (double& v : st.rho) v /= mass;
    return st;
}

} // namespace ecsim
