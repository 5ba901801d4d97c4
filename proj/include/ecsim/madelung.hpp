#pragma once

// Hydrodynamic (rho, S) evolution: Hamilton-Jacobi plus the Bohm quantum
// term (plus the optional non-linear correction), and an algorithmically
// independent Crank-Nicolson oracle for the linear Schrodinger equation.
//
// Both semi-discrete equations are exact partial derivatives of one
// discrete Hamiltonian
//   H = sum_f h [ rhobar_f (dS)_f^2 / 2m + (hbar^2/2m) (d sqrt(rho))_f^2 ]
//       + sum_i h V_i rho_i - kappa sum_i h (lap rho / rho)_i^2 rho_i
// so (S, rho) form a canonical pair under the discrete bracket.

#include <complex>
#include <functional>
#include <vector>

#include "ecsim/grid.hpp"

namespace ecsim {

enum class EvolveMode { Classical, Quantum, QuantumCorrected };

struct HydroState {
    Grid grid;
    std::vector<double> rho;
    std::vector<double> S;
    double t = 0.0;
};

struct MadelungParams {
    double m = 1.0;
    double hbar = 1.0;
    // kappa multiplying the non-linear functional -kappa * int rho (lap rho/rho)^2;
    // callers map N^(-2/d) hbar^2 r^2 / (8 m) onto it
    double correction_strength = 0.0;
    double rho_floor = 1e-12;
    BoundaryMode boundary = BoundaryMode::Periodic;
    std::function<double(double)> potential; // optional V(z); disabled by default
};

// dS/dt field for the requested mode
std::vector<double> hj_rhs(const HydroState& state, const MadelungParams& params,
                           EvolveMode mode);

// drho/dt by conservative face fluxes; total mass is conserved to round-off
std::vector<double> continuity_rhs(const HydroState& state, const MadelungParams& params);

// the conserved functional generating the dynamics
double hydro_energy(const HydroState& state, const MadelungParams& params, EvolveMode mode);

double total_mass(const HydroState& state);

struct EvolveReport {
    HydroState state;
    double mass_drift = 0.0;   // |mass(t) - mass(0)|
    double energy_drift = 0.0; // relative
    double floored_fraction = 0.0;
    bool degeneracy_warning = false; // rho at the floor on > 1% of cells
    int steps = 0;
};

// Explicit RK4. Quantum modes enforce the step bound dt <= h^2 m / (2 hbar).
// Throws Instability with step diagnostics on NaN or blow-up.
EvolveReport evolve(const HydroState& state, const MadelungParams& params, double dt,
                    int steps, EvolveMode mode);

struct WaveFunction {
    Grid grid;
    std::vector<std::complex<double>> psi;
};

double l2_norm(const WaveFunction& wf);

WaveFunction to_wavefunction(const HydroState& state, double hbar);

struct HydroFromPsi {
    HydroState state;
    int undefined_phase_cells = 0; // nodes where |psi| ~ 0
};

// Phase is unwrapped by sweeping outward from the peak amplitude cell.
HydroFromPsi from_wavefunction(const WaveFunction& wf, double hbar);

// Crank-Nicolson step of i hbar dpsi/dt = -(hbar^2/2m) lap psi.
// Unconditionally stable; norm preserved to 1e-10.
WaveFunction schrodinger_oracle(const WaveFunction& psi0, const MadelungParams& params,
                                double dt, int steps);

// first and second moments of the density (|psi|^2 or rho)
double packet_center(const Grid& grid, std::span<const double> density);
double packet_sigma2(const Grid& grid, std::span<const double> density);

struct CompareReport {
    double l2_amplitude_error = 0.0; // sqrt(int (sqrt(rho_h) - |psi_o|)^2 dz)
    double phase_rms_error = 0.0;    // over rho > 1e-6, modulo a global constant
    double mass_drift = 0.0;
    double energy_drift = 0.0;
    HydroState hydro_final;
    WaveFunction oracle_final;
};

// Evolve (rho0, S0) hydrodynamically and psi0 = sqrt(rho0) e^{iS0/hbar}
// through the oracle from the same initial data; report the discrepancy.
CompareReport compare_evolutions(const HydroState& initial, const MadelungParams& params,
                                 double dt, int steps, EvolveMode mode);

// Gaussian packet rho = N(center, sigma^2) + padding, renormalized; S = m v z.
// The uniform padding keeps the density smooth and strictly positive in the
// far tails, where a bare Gaussian would fall below the representable floor
// and its clamp kink would destabilize the quantum force.
HydroState gaussian_packet(const Grid& grid, double sigma, double center, double velocity,
                           double m, double padding = 1e-8);

} // namespace ecsim
