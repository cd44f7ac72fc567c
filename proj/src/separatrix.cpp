#include "slowpass/separatrix.hpp"

#include <cmath>
#include <numbers>

#include "slowpass/equilibria.hpp"

namespace slowpass {

namespace {

const cplx I(0.0, 1.0);

double c() { return bc().U_star; }

}  // namespace

cplx sep_leader(double theta) {
    cplx d = theta - I * c();
    return -2.0 / (d * d);
}

cplx sep_leader_deriv(double theta) {
    cplx d = theta - I * c();
    return 4.0 / (d * d * d);
}

cplx sep_residual(double theta, cplx w, cplx dw) {
    (void)theta;
    cplx v = bc().U_star + w;
    return I * dw + std::norm(v) * v - bc().t_star * v - 1.0;
}

double sep_conservation(cplx w) {
    const double u = bc().U_star;
    const double m = std::norm(w);
    cplx wb = std::conj(w);
    cplx h = u * (m * wb + m * w) + u * u * (0.5 * wb * wb + 0.5 * w * w - m) + 0.5 * m * m;
    return h.real();
}

cplx sep_w1(cplx z) {
    cplx d = z - I * c();
    return 1.0 / (d * d * d);
}

cplx sep_w1_conj(cplx z) {
    cplx d = z + I * c();
    return 1.0 / (d * d * d);
}

namespace {

cplx w2_p(cplx z) {
    const double k = c();
    cplx z2 = z * z;
    return z * (z2 * z2 * z2 + 49.0 / (10.0 * k) * z2 * z2 + 119.0 * k / 6.0 * z2 - 63.0 / 4.0);
}

cplx w2_q(cplx z) {
    const double k = c();
    cplx s = z * z + k * k;
    return -7.0 * k * s * s * s;
}

}  // namespace

cplx sep_w2_closed(cplx z) {
    cplx d = z - I * c();
    return (w2_p(z) + I * w2_q(z)) / (d * d * d);
}

cplx sep_w2_closed_conj(cplx z) {
    cplx d = z + I * c();
    return (w2_p(z) - I * w2_q(z)) / (d * d * d);
}

cplx sep_wronskian(cplx w1, cplx w2) { return w1 * std::conj(w2) - w2 * std::conj(w1); }

cplx sep_linear_residual(double theta, cplx m, cplx dm) {
    cplx v = bc().U_star + sep_leader(theta);
    return I * dm + (2.0 * std::norm(v) - bc().t_star) * m + v * v * std::conj(m);
}

cplx W2Numeric::eval(double theta) const {
    const Trajectory& tr = theta >= 0.0 ? plus : minus;
    return tr.eval(theta, 0) / scale;
}

W2Numeric build_w2_numeric(double theta_max, const ToleranceSpec& tol) {
    auto field = [](double theta, const CVec& y, CVec& dy) {
        cplx v = bc().U_star + sep_leader(theta);
        dy[0] = I * ((2.0 * std::norm(v) - bc().t_star) * y[0] + v * v * std::conj(y[0]));
    };
    IvpOptions io;
    io.ceiling = 1e300;
    W2Numeric w;
    w.plus = integrate_ivp(field, 0.0, theta_max, {1.0}, tol, io);
    w.minus = integrate_ivp(field, 0.0, -theta_max, {1.0}, tol, io);
    // theta^4 coefficient of the real part from the far field
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < 60; ++i) {
        double th = 0.5 * theta_max + 0.5 * theta_max * i / 59.0;
        pts.emplace_back(th, w.plus.eval(th, 0).real());
    }
    auto fit = fit_laurent(pts, 0.0, {4, 2, 0, -2, -4});
    w.scale = fit.coef[4];
    return w;
}

const W2Numeric& w2_numeric() {
    static const W2Numeric w = build_w2_numeric();
    return w;
}

std::pair<cplx, cplx> sep_homogeneous(double theta) { return {sep_w1(theta), w2_numeric().eval(theta)}; }

Forcing sep_forcing(int n, double tau0) {
    const double u = bc().U_star;
    auto w0 = [](cplx z) {
        cplx d = z - I * c();
        return -2.0 / (d * d);
    };
    auto w0b = [](cplx z) {
        cplx d = z + I * c();
        return -2.0 / (d * d);
    };
    if (n == 1) return {[=](cplx z) { return tau0 * (u + w0(z)); }, [=](cplx z) { return tau0 * (u + w0b(z)); }};
    if (n == 2) return {[=](cplx z) { return z * (u + w0(z)); }, [=](cplx z) { return z * (u + w0b(z)); }};
    throw Error("InvalidInput", "jump integrals are defined for n = 1, 2");
}

double finite_part_integral(const std::function<cplx(cplx)>& g, double r0, const JumpOptions& opt) {
    const int N = opt.nodes;
    const double R = opt.circle;
    // Laurent coefficients at infinity by the trapezoid rule on |z| = R
    std::vector<cplx> vals(N);
    for (int j = 0; j < N; ++j) vals[j] = g(std::polar(R, 2.0 * std::numbers::pi * j / N));
    const int kmax = 8, kmin = -N / 2 + 8;
    double tail = 0.0;
    for (int k = kmin; k <= kmax; ++k) {
        if (k == -1) continue;
        cplx s = 0.0;
        for (int j = 0; j < N; ++j) s += vals[j] * std::polar(1.0, -2.0 * std::numbers::pi * k * j / N);
        double gk = (s / static_cast<double>(N)).real() * std::pow(R, -k);
        if (k >= 0) {
            tail -= gk * (std::pow(r0, k + 1) - std::pow(-r0, k + 1)) / (k + 1);
        } else {
            double a = -std::pow(r0, k + 1) / (k + 1);
            tail += gk * (a + ((k % 2 == 0) ? a : -a));
        }
    }
    double core = adaptive_quad([&](double x) { return g(cplx(x, 0.0)).real(); }, -r0, r0, 1e-14);
    return core + tail;
}

JumpPair jump_integrals_forcing(int n, const Forcing& F, const JumpOptions& opt) {
    const cplx W = 14.0 * I * c();
    auto gx = [&](cplx z) { return -I * (F.f(z) * sep_w2_closed_conj(z) + F.fbar(z) * sep_w2_closed(z)) / W; };
    auto gy = [&](cplx z) { return I * (F.f(z) * sep_w1_conj(z) + F.fbar(z) * sep_w1(z)) / W; };
    JumpPair jp{n, 0.0, 0.0};
    double x1 = finite_part_integral(gx, opt.r_inner, opt), x2 = finite_part_integral(gx, opt.r_check, opt);
    double y1 = finite_part_integral(gy, opt.r_inner, opt), y2 = finite_part_integral(gy, opt.r_check, opt);
    if (std::abs(x1 - x2) > opt.stability || std::abs(y1 - y2) > opt.stability)
        throw Error("RegularizationUnstable", "finite part depends on the split radius");
    jp.X = -x1;
    jp.Y = -y1;
    return jp;
}

JumpPair jump_integrals(int n, double tau0, const JumpOptions& opt) {
    return jump_integrals_forcing(n, sep_forcing(n, tau0), opt);
}

bool layer2_valid(double theta, double eps) {
    const double edge = std::pow(eps, -0.2);
    return theta > -edge && theta < edge;
}

cplx layer2_eval(double theta, double eps, double tau0) {
    if (!layer2_valid(theta, eps)) throw Error("OutOfLayer", "theta outside the separatrix window");
    const double u = bc().U_star;
    cplx v = u + sep_leader(theta);
    v += std::pow(eps, 0.8) * tau0 * u * u * u * theta * theta / 5.0;
    v += eps * (-theta * theta * theta / 6.0);
    if (theta < 0.0) {
        static const double y2 = jump_integrals(2, 0.0).Y;
        v += eps * y2 * sep_w2_closed(theta);
    }
    return v;
}

}  // namespace slowpass
