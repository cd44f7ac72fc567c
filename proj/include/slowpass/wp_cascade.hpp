#pragma once

#include <limits>
#include <vector>

#include "slowpass/numkernel.hpp"

namespace slowpass {

struct PoleFit;

struct WpParams {
    double g2;
    double g3;
    double Omega;
};

struct WpValue {
    double p;
    double p_prime;
    double zeta;
};

WpValue wp_eval(double x, double g2, double g3);
// Largest real root of 4y^3 - g2 y - g3.
double wp_e1(double g2, double g3);
double wp_real_period(double g2, double g3);
// Twice the first positive zero of p' along the integrated p-ODE.
double wp_period_from_ode(double g2, double g3);
WpParams wp_params(double g2, double g3);

// Solutions of A'' + 6 A0 A = 0 with A0 = -2 p(T; 0, g3): A1 = p'/4, A2 ~ T^4/2 at the pole.
struct VariationalPair {
    double A1, dA1, A2, dA2;
};
VariationalPair wp_variational_pair(double T, double g3);

enum class CascadeLaw {
    Printed,        // g3(k) = (a4 + (k-1) pi/2) / 56
    EnergyBalance,  // g3(k) = -14 k Y, Y the second-order separatrix jump
};

// Per-spike increment of g3 under the energy-balance law, 2 pi U*^2.
double g3_energy_increment();
double g3_sequence(double a4, int k, CascadeLaw law = CascadeLaw::Printed);
double omega_k(double a4, int k, CascadeLaw law = CascadeLaw::Printed);
double P_k(double a4, int k, CascadeLaw law = CascadeLaw::Printed);

struct JumpRecord {
    int k;
    double g3;
    double X_plus;
    double Y_plus;
    double Y_minus;
    double x_plus;
};

struct JumpLedger {
    CascadeLaw law = CascadeLaw::Printed;
    double a4 = 0.0;
    double tau0 = 0.0;
    bool track_x = true;
    std::vector<JumpRecord> records;
    double x_sum(int k) const;  // sum of x_j^+ for j <= k
};

JumpLedger jump_ledger_step(const JumpLedger& ledger, int k);

double lambda_k(double eps, int k, const JumpLedger& ledger);

struct CascadeState {
    int k;
    double g3_k;
    double Omega_k;
    double P_k;
    double lambda_k;
    double t_spike;
    bool lambda_regime = false;
};

struct IntermediateOptions {
    CascadeLaw law = CascadeLaw::Printed;
    double lambda_threshold = std::numeric_limits<double>::infinity();
    double pole_margin = 1e-6;
};

// A = -2 p(T; g2_eff, g3(k)), B = A'/(2 U*^2); g2_eff = lambda_k in the large-k regime.
std::pair<double, double> intermediate_leader(double T, int k, double eps, double a4,
                                              const IntermediateOptions& opt = {});
double intermediate_g2(int k, double eps, double a4, const IntermediateOptions& opt = {});

struct ScheduleOptions {
    CascadeLaw law = CascadeLaw::EnergyBalance;
    bool strict = true;  // enforce k <= eps^{-1/7}
    double lambda_threshold = -1.0;  // negative: eps^{-2/3}
};

std::vector<CascadeState> spike_schedule(double eps, const PoleFit& fit, int K, const ScheduleOptions& opt = {});
int cascade_validity_bound(double eps);

}  // namespace slowpass
