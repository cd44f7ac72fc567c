#include "slowpass/numkernel.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/Polynomials>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace slowpass {

namespace {

// Dormand-Prince 8(5,3) with the 7th order continuous extension.
namespace dp {
constexpr double c2 = 0.526001519587677318785587544488e-01, c3 = 0.789002279381515978178381316732e-01,
                 c4 = 0.118350341907227396726757197510e+00, c5 = 0.281649658092772603273242802490e+00,
                 c6 = 0.333333333333333333333333333333e+00, c7 = 0.25e+00,
                 c8 = 0.307692307692307692307692307692e+00, c9 = 0.651282051282051282051282051282e+00,
                 c10 = 0.6e+00, c11 = 0.857142857142857142857142857142e+00, c14 = 0.1e+00, c15 = 0.2e+00,
                 c16 = 0.777777777777777777777777777778e+00;

constexpr double b1 = 5.42937341165687622380535766363e-2, b6 = 4.45031289275240888144113950566e0,
                 b7 = 1.89151789931450038304281599044e0, b8 = -5.8012039600105847814672114227e0,
                 b9 = 3.1116436695781989440891606237e-1, b10 = -1.52160949662516078556178806805e-1,
                 b11 = 2.01365400804030348374776537501e-1, b12 = 4.47106157277725905176885569043e-2;

constexpr double bhh1 = 0.244094488188976377952755905512e+00, bhh2 = 0.733846688281611857341361741547e+00,
                 bhh3 = 0.220588235294117647058823529412e-01;

constexpr double er1 = 0.1312004499419488073250102996e-01, er6 = -0.1225156446376204440720569753e+01,
                 er7 = -0.4957589496572501915214079952e+00, er8 = 0.1664377182454986536961530415e+01,
                 er9 = -0.3503288487499736816886487290e+00, er10 = 0.3341791187130174790297318841e+00,
                 er11 = 0.8192320648511571246570742613e-01, er12 = -0.2235530786388629525884427845e-01;

constexpr double a21 = 5.26001519587677318785587544488e-2, a31 = 1.97250569845378994544595329183e-2,
                 a32 = 5.91751709536136983633785987549e-2, a41 = 2.95875854768068491816892993775e-2,
                 a43 = 8.87627564304205475450678981324e-2, a51 = 2.41365134159266685502369798665e-1,
                 a53 = -8.84549479328286085344864962717e-1, a54 = 9.24834003261792003115737966543e-1,
                 a61 = 3.7037037037037037037037037037e-2, a64 = 1.70828608729473871279604482173e-1,
                 a65 = 1.25467687566822425016691814123e-1, a71 = 3.7109375e-2,
                 a74 = 1.70252211019544039314978060272e-1, a75 = 6.02165389804559606850219397283e-2,
                 a76 = -1.7578125e-2;
constexpr double a81 = 3.70920001185047927108779319836e-2, a84 = 1.70383925712239993810214054705e-1,
                 a85 = 1.07262030446373284651809199168e-1, a86 = -1.53194377486244017527936158236e-2,
                 a87 = 8.27378916381402288758473766002e-3, a91 = 6.24110958716075717114429577812e-1,
                 a94 = -3.36089262944694129406857109825e0, a95 = -8.68219346841726006818189891453e-1,
                 a96 = 2.75920996994467083049415600797e1, a97 = 2.01540675504778934086186788979e1,
                 a98 = -4.34898841810699588477366255144e1, a101 = 4.77662536438264365890433908527e-1,
                 a104 = -2.48811461997166764192642586468e0, a105 = -5.90290826836842996371446475743e-1,
                 a106 = 2.12300514481811942347288949897e1, a107 = 1.52792336328824235832596922938e1,
                 a108 = -3.32882109689848629194453265587e1, a109 = -2.03312017085086261358222928593e-2;
constexpr double a111 = -9.3714243008598732571704021658e-1, a114 = 5.18637242884406370830023853209e0,
                 a115 = 1.09143734899672957818500254654e0, a116 = -8.14978701074692612513997267357e0,
                 a117 = -1.85200656599969598641566180701e1, a118 = 2.27394870993505042818970056734e1,
                 a119 = 2.49360555267965238987089396762e0, a1110 = -3.0467644718982195003823669022e0,
                 a121 = 2.27331014751653820792359768449e0, a124 = -1.05344954667372501984066689879e1,
                 a125 = -2.00087205822486249909675718444e0, a126 = -1.79589318631187989172765950534e1,
                 a127 = 2.79488845294199600508499808837e1, a128 = -2.85899827713502369474065508674e0,
                 a129 = -8.87285693353062954433549289258e0, a1210 = 1.23605671757943030647266201528e1,
                 a1211 = 6.43392746015763530355970484046e-1;

constexpr double a141 = 5.61675022830479523392909219681e-2, a147 = 2.53500210216624811088794765333e-1,
                 a148 = -2.46239037470802489917441475441e-1, a149 = -1.24191423263816360469010140626e-1,
                 a1410 = 1.5329179827876569731206322685e-1, a1411 = 8.20105229563468988491666602057e-3,
                 a1412 = 7.56789766054569976138603589584e-3, a1413 = -8.298e-3;
constexpr double a151 = 3.18346481635021405060768473261e-2, a156 = 2.83009096723667755288322961402e-2,
                 a157 = 5.35419883074385676223797384372e-2, a158 = -5.49237485713909884646569340306e-2,
                 a1511 = -1.08347328697249322858509316994e-4, a1512 = 3.82571090835658412954920192323e-4,
                 a1513 = -3.40465008687404560802977114492e-4, a1514 = 1.41312443674632500278074618366e-1;
constexpr double a161 = -4.28896301583791923408573538692e-1, a166 = -4.69762141536116384314449447206e0,
                 a167 = 7.68342119606259904184240953878e0, a168 = 4.06898981839711007970213554331e0,
                 a169 = 3.56727187455281109270669543021e-1, a1613 = -1.39902416515901462129418009734e-3,
                 a1614 = 2.9475147891527723389556272149e0, a1615 = -9.15095847217987001081870187138e0;

constexpr double d41 = -0.84289382761090128651353491142e+01, d46 = 0.56671495351937776962531783590e+00,
                 d47 = -0.30689499459498916912797304727e+01, d48 = 0.23846676565120698287728149680e+01,
                 d49 = 0.21170345824450282767155149946e+01, d410 = -0.87139158377797299206789907490e+00,
                 d411 = 0.22404374302607882758541771650e+01, d412 = 0.63157877876946881815570249290e+00,
                 d413 = -0.88990336451333310820698117400e-01, d414 = 0.18148505520854727256656404962e+02,
                 d415 = -0.91946323924783554000451984436e+01, d416 = -0.44360363875948939664310572000e+01;
constexpr double d51 = 0.10427508642579134603413151009e+02, d56 = 0.24228349177525818288430175319e+03,
                 d57 = 0.16520045171727028198505394887e+03, d58 = -0.37454675472269020279518312152e+03,
                 d59 = -0.22113666853125306036270938578e+02, d510 = 0.77334326684722638389603898808e+01,
                 d511 = -0.30674084731089398182061213626e+02, d512 = -0.93321305264302278729567221706e+01,
                 d513 = 0.15697238121770843886131091075e+02, d514 = -0.31139403219565177677282850411e+02,
                 d515 = -0.93529243588444783865713862664e+01, d516 = 0.35816841486394083752465898540e+02;
constexpr double d61 = 0.19985053242002433820987653617e+02, d66 = -0.38703730874935176555105901742e+03,
                 d67 = -0.18917813819516756882830838328e+03, d68 = 0.52780815920542364900561016686e+03,
                 d69 = -0.11573902539959630126141871134e+02, d610 = 0.68812326946963000169666922661e+01,
                 d611 = -0.10006050966910838403183860980e+01, d612 = 0.77771377980534432092869265740e+00,
                 d613 = -0.27782057523535084065932004339e+01, d614 = -0.60196695231264120758267380846e+02,
                 d615 = 0.84320405506677161018159903784e+02, d616 = 0.11992291136182789328035130030e+02;
constexpr double d71 = -0.25693933462703749003312586129e+02, d76 = -0.15418974869023643374053993627e+03,
                 d77 = -0.23152937917604549567536039109e+03, d78 = 0.35763911791061412378285349910e+03,
                 d79 = 0.93405324183624310003907691704e+02, d710 = -0.37458323136451633156875139351e+02,
                 d711 = 0.10409964950896230045147246184e+03, d712 = 0.29840293426660503123344363579e+02,
                 d713 = -0.43533456590011143754432175058e+02, d714 = 0.96324553959188282948394950600e+02,
                 d715 = -0.39177261675615439165231486172e+02, d716 = -0.14972683625798562581422125276e+03;
}  // namespace dp

bool all_finite(const CVec& v) {
    for (const auto& z : v)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

double max_abs(const CVec& v) {
    double m = 0.0;
    for (const auto& z : v) m = std::max(m, std::abs(z));
    return m;
}

class Dop853 {
public:
    Dop853(const Field& f, std::size_t n) : f_(f), n_(n), k_(17, CVec(n)), tmp_(n), ynew_(n) {}

    void eval(double t, const CVec& y, CVec& dy) {
        f_(t, y, dy);
        ++evals;
        if (!all_finite(dy)) throw Error("NonFiniteField", "field returned a non-finite value at t=" + std::to_string(t));
    }

    // Returns false when the trial produced non-finite stages (caller shrinks h).
    bool trial(double t, const CVec& y, double h, const ToleranceSpec& tol, double& err) {
        using namespace dp;
        auto& k = k_;
        auto stage = [&](double c, int out, std::initializer_list<std::pair<int, double>> terms) {
            for (std::size_t i = 0; i < n_; ++i) {
                cplx s = 0.0;
                for (const auto& [j, a] : terms) s += a * k[j][i];
                tmp_[i] = y[i] + h * s;
            }
            f_(t + c * h, tmp_, k[out]);
            ++evals;
        };
        stage(c2, 2, {{1, a21}});
        stage(c3, 3, {{1, a31}, {2, a32}});
        stage(c4, 4, {{1, a41}, {3, a43}});
        stage(c5, 5, {{1, a51}, {3, a53}, {4, a54}});
        stage(c6, 6, {{1, a61}, {4, a64}, {5, a65}});
        stage(c7, 7, {{1, a71}, {4, a74}, {5, a75}, {6, a76}});
        stage(c8, 8, {{1, a81}, {4, a84}, {5, a85}, {6, a86}, {7, a87}});
        stage(c9, 9, {{1, a91}, {4, a94}, {5, a95}, {6, a96}, {7, a97}, {8, a98}});
        stage(c10, 10, {{1, a101}, {4, a104}, {5, a105}, {6, a106}, {7, a107}, {8, a108}, {9, a109}});
        stage(c11, 11,
              {{1, a111}, {4, a114}, {5, a115}, {6, a116}, {7, a117}, {8, a118}, {9, a119}, {10, a1110}});
        stage(1.0, 12,
              {{1, a121},
               {4, a124},
               {5, a125},
               {6, a126},
               {7, a127},
               {8, a128},
               {9, a129},
               {10, a1210},
               {11, a1211}});
        for (std::size_t i = 0; i < n_; ++i) {
            cplx s = b1 * k[1][i] + b6 * k[6][i] + b7 * k[7][i] + b8 * k[8][i] + b9 * k[9][i] +
                     b10 * k[10][i] + b11 * k[11][i] + b12 * k[12][i];
            k[13][i] = s;  // provisional: weighted slope
            ynew_[i] = y[i] + h * s;
        }
        if (!all_finite(ynew_)) return false;
        for (int j = 2; j <= 12; ++j)
            if (!all_finite(k[j])) return false;

        double err5 = 0.0, err3 = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            double sk = tol.abs + tol.rel * std::max(std::abs(y[i]), std::abs(ynew_[i]));
            cplx e3 = k[13][i] - bhh1 * k[1][i] - bhh2 * k[9][i] - bhh3 * k[12][i];
            cplx e5 = er1 * k[1][i] + er6 * k[6][i] + er7 * k[7][i] + er8 * k[8][i] + er9 * k[9][i] +
                      er10 * k[10][i] + er11 * k[11][i] + er12 * k[12][i];
            err3 += std::norm(e3 / sk);
            err5 += std::norm(e5 / sk);
        }
        double deno = err5 + 0.01 * err3;
        if (deno <= 0.0) deno = 1.0;
        err = std::abs(h) * err5 / std::sqrt(deno * static_cast<double>(n_));
        return std::isfinite(err);
    }

    // After an accepted trial: k[13] <- f(t+h, ynew), then dense coefficients.
    void finish(double t, const CVec& y, double h, bool dense, std::vector<cplx>& coef) {
        using namespace dp;
        auto& k = k_;
        eval(t + h, ynew_, k[13]);
        if (!dense) return;
        auto stage = [&](double c, int out, std::initializer_list<std::pair<int, double>> terms) {
            for (std::size_t i = 0; i < n_; ++i) {
                cplx s = 0.0;
                for (const auto& [j, a] : terms) s += a * k[j][i];
                tmp_[i] = y[i] + h * s;
            }
            eval(t + c * h, tmp_, k[out]);
        };
        stage(c14, 14,
              {{1, a141}, {7, a147}, {8, a148}, {9, a149}, {10, a1410}, {11, a1411}, {12, a1412}, {13, a1413}});
        stage(c15, 15,
              {{1, a151}, {6, a156}, {7, a157}, {8, a158}, {11, a1511}, {12, a1512}, {13, a1513}, {14, a1514}});
        stage(c16, 16,
              {{1, a161}, {6, a166}, {7, a167}, {8, a168}, {9, a169}, {13, a1613}, {14, a1614}, {15, a1615}});
        coef.assign(8 * n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            cplx ydiff = ynew_[i] - y[i];
            cplx bspl = h * k[1][i] - ydiff;
            coef[0 * n_ + i] = y[i];
            coef[1 * n_ + i] = ydiff;
            coef[2 * n_ + i] = bspl;
            coef[3 * n_ + i] = ydiff - h * k[13][i] - bspl;
            coef[4 * n_ + i] = h * (d41 * k[1][i] + d46 * k[6][i] + d47 * k[7][i] + d48 * k[8][i] + d49 * k[9][i] +
                                   d410 * k[10][i] + d411 * k[11][i] + d412 * k[12][i] + d413 * k[13][i] +
                                   d414 * k[14][i] + d415 * k[15][i] + d416 * k[16][i]);
            coef[5 * n_ + i] = h * (d51 * k[1][i] + d56 * k[6][i] + d57 * k[7][i] + d58 * k[8][i] + d59 * k[9][i] +
                                   d510 * k[10][i] + d511 * k[11][i] + d512 * k[12][i] + d513 * k[13][i] +
                                   d514 * k[14][i] + d515 * k[15][i] + d516 * k[16][i]);
            coef[6 * n_ + i] = h * (d61 * k[1][i] + d66 * k[6][i] + d67 * k[7][i] + d68 * k[8][i] + d69 * k[9][i] +
                                   d610 * k[10][i] + d611 * k[11][i] + d612 * k[12][i] + d613 * k[13][i] +
                                   d614 * k[14][i] + d615 * k[15][i] + d616 * k[16][i]);
            coef[7 * n_ + i] = h * (d71 * k[1][i] + d76 * k[6][i] + d77 * k[7][i] + d78 * k[8][i] + d79 * k[9][i] +
                                   d710 * k[10][i] + d711 * k[11][i] + d712 * k[12][i] + d713 * k[13][i] +
                                   d714 * k[14][i] + d715 * k[15][i] + d716 * k[16][i]);
        }
    }

    CVec& slope(int j) { return k_[j]; }
    const CVec& ynew() const { return ynew_; }
    std::size_t evals = 0;

private:
    const Field& f_;
    std::size_t n_;
    std::vector<CVec> k_;
    CVec tmp_, ynew_;
};

double initial_step(Dop853& rk, const Field& f, double t0, const CVec& y0, double dir, double hmax,
                    const ToleranceSpec& tol) {
    const std::size_t n = y0.size();
    const CVec& f0 = rk.slope(1);
    double dnf = 0.0, dny = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double sk = tol.abs + tol.rel * std::abs(y0[i]);
        dnf += std::norm(f0[i] / sk);
        dny += std::norm(y0[i] / sk);
    }
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * std::sqrt(dny / dnf);
    h = std::min(h, hmax);
    CVec y1(n), f1(n);
    for (std::size_t i = 0; i < n; ++i) y1[i] = y0[i] + dir * h * f0[i];
    f(t0 + dir * h, y1, f1);
    ++rk.evals;
    double der2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) der2 += std::norm((f1[i] - f0[i]) / (tol.abs + tol.rel * std::abs(y0[i])));
    der2 = std::sqrt(der2) / h;
    double der12 = std::max(std::abs(der2), std::sqrt(dnf));
    double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.125);
    return std::min({100.0 * h, h1, hmax});
}

}  // namespace

// ---------------------------------------------------------------- Trajectory

void ToleranceSpec::validate() const {
    if (!(rel > 0.0) || !(abs > 0.0)) throw Error("InvalidTolerance", "rel and abs must be positive");
    if (!(min_step <= max_step)) throw Error("InvalidTolerance", "min_step exceeds max_step");
}

ToleranceSpec ToleranceSpec::refined(double factor) const {
    ToleranceSpec r = *this;
    r.rel *= factor;
    r.abs *= factor;
    return r;
}

CVec Trajectory::state(std::size_t i) const {
    return CVec(y_.begin() + static_cast<std::ptrdiff_t>(i * dim_),
                y_.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim_));
}

bool Trajectory::contains(double t) const {
    if (t_.empty()) return false;
    double lo = std::min(t_.front(), t_.back()), hi = std::max(t_.front(), t_.back());
    return t >= lo && t <= hi;
}

void Trajectory::push_sample(double t, const CVec& y) {
    if (dim_ == 0) dim_ = y.size();
    if (y.size() != dim_) throw Error("DimensionMismatch", "sample dimension differs");
    if (!t_.empty()) {
        int dir = t > t_.back() ? 1 : (t < t_.back() ? -1 : 0);
        if (dir == 0 || (direction_ != 0 && dir != direction_))
            throw Error("NonMonotoneSamples", "sample times must be strictly monotone");
        direction_ = dir;
    }
    t_.push_back(t);
    y_.insert(y_.end(), y.begin(), y.end());
}

void Trajectory::push_dense_step(double t_new, const CVec& y_new, const std::vector<cplx>& coef) {
    push_sample(t_new, y_new);
    coef_.insert(coef_.end(), coef.begin(), coef.end());
}

std::size_t Trajectory::segment_of(double t) const {
    if (t_.size() < 2) throw Error("EmptyTrajectory", "need at least two samples");
    if (!contains(t)) throw Error("OutOfRange", "time " + std::to_string(t) + " outside trajectory");
    std::size_t seg;
    if (direction_ > 0) {
        auto it = std::upper_bound(t_.begin(), t_.end(), t);
        seg = static_cast<std::size_t>(it - t_.begin());
    } else {
        auto it = std::upper_bound(t_.begin(), t_.end(), t, [](double a, double b) { return a > b; });
        seg = static_cast<std::size_t>(it - t_.begin());
    }
    if (seg == 0) seg = 1;
    if (seg >= t_.size()) seg = t_.size() - 1;
    return seg - 1;
}

void Trajectory::eval_segment(std::size_t seg, double t, cplx* out, cplx* dout) const {
    const double t0 = t_[seg], h = t_[seg + 1] - t0;
    if (has_dense()) {
        const double s = (t - t0) / h, s1 = 1.0 - s;
        const cplx* c = &coef_[seg * 8 * dim_];
        for (std::size_t i = 0; i < dim_; ++i) {
            cplx r[8];
            for (int j = 0; j < 8; ++j) r[j] = c[j * dim_ + i];
            // Horner on the alternating s, (1-s) factors; carry the s-derivative.
            cplx v = r[7], dv = 0.0;
            const double fac[7] = {s, s1, s, s1, s, s1, s};
            const double dfac[7] = {1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0};
            for (int j = 6; j >= 0; --j) {
                cplx nv = r[j] + fac[j] * v;
                dv = dfac[j] * v + fac[j] * dv;
                v = nv;
            }
            out[i] = v;
            if (dout) dout[i] = dv / h;
        }
        return;
    }
    // Four-point Lagrange fallback.
    std::size_t lo = seg > 0 ? seg - 1 : 0;
    std::size_t hi = std::min(lo + 3, t_.size() - 1);
    if (hi - lo < 3 && hi >= 3) lo = hi - 3;
    for (std::size_t i = 0; i < dim_; ++i) {
        cplx v = 0.0, dv = 0.0;
        for (std::size_t a = lo; a <= hi; ++a) {
            double l = 1.0, dl = 0.0;
            for (std::size_t b = lo; b <= hi; ++b) {
                if (b == a) continue;
                double den = t_[a] - t_[b];
                dl = dl * (t - t_[b]) / den + l / den;
                l *= (t - t_[b]) / den;
            }
            v += l * y_[a * dim_ + i];
            dv += dl * y_[a * dim_ + i];
        }
        out[i] = v;
        if (dout) dout[i] = dv;
    }
}

CVec Trajectory::eval(double t) const {
    CVec out(dim_);
    eval_segment(segment_of(t), t, out.data(), nullptr);
    return out;
}

cplx Trajectory::eval(double t, std::size_t comp) const { return eval(t)[comp]; }

CVec Trajectory::deriv(double t) const {
    CVec out(dim_), d(dim_);
    eval_segment(segment_of(t), t, out.data(), d.data());
    return d;
}

bool has_event(const Trajectory& tr, const std::string& kind) { return first_event(tr, kind) != nullptr; }

const Event* first_event(const Trajectory& tr, const std::string& kind) {
    for (const auto& e : tr.events)
        if (e.kind == kind) return &e;
    return nullptr;
}

// --------------------------------------------------------------- integrator

Trajectory integrate_ivp(const Field& field, double t0, double t1, const CVec& y0, const ToleranceSpec& tol,
                         const IvpOptions& opt) {
    tol.validate();
    if (t0 == t1) throw Error("InvalidInterval", "t0 equals t1");
    const std::size_t n = y0.size();
    const double dir = t1 > t0 ? 1.0 : -1.0;
    Dop853 rk(field, n);
    Trajectory tr(n);
    tr.push_sample(t0, y0);

    rk.eval(t0, y0, rk.slope(1));
    const double span = std::abs(t1 - t0);
    const double hmax = std::min(tol.max_step, span);
    double h = opt.first_step > 0.0 ? std::min(opt.first_step, hmax) : initial_step(rk, field, t0, y0, dir, hmax, tol);

    double t = t0;
    CVec y = y0;
    std::vector<double> gprev(opt.events.size());
    for (std::size_t e = 0; e < opt.events.size(); ++e) gprev[e] = opt.events[e].g(t, y);

    std::vector<cplx> coef;
    bool last_rejected = false;
    bool stop = false;
    while (!stop) {
        if (tr.stats.accepted >= opt.max_steps) throw Error("TooManySteps", "step budget exhausted");
        double remaining = std::abs(t1 - t);
        if (remaining <= 1e-15 * std::max(1.0, std::abs(t1))) break;
        bool final_step = false;
        if (h >= remaining) {
            h = remaining;
            final_step = true;
        }
        if (h < tol.min_step && !final_step)
            throw Error("StepUnderflow", "required step " + std::to_string(h) + " below min_step at t=" + std::to_string(t));

        double err = 0.0;
        bool ok = rk.trial(t, y, dir * h, tol, err);
        if (!ok || err > 1.0) {
            ++tr.stats.rejected;
            double fac = ok ? std::max(1.0 / 3.0, 0.9 / std::pow(err, 0.125)) : 0.25;
            h *= std::min(fac, 0.9);
            last_rejected = true;
            if (h < tol.min_step) throw Error("StepUnderflow", "step collapsed at t=" + std::to_string(t));
            continue;
        }
        ++tr.stats.accepted;
        double tn = final_step ? t1 : t + dir * h;
        rk.finish(t, y, tn - t, opt.dense, coef);
        const CVec& yn = rk.ynew();
        if (opt.dense)
            tr.push_dense_step(tn, yn, coef);
        else
            tr.push_sample(tn, yn);
        const std::size_t seg = tr.size() - 2;

        // Events located on the continuous extension.
        for (std::size_t e = 0; e < opt.events.size(); ++e) {
            const auto& ev = opt.events[e];
            double gn = ev.g(tn, yn);
            double gp = gprev[e];
            gprev[e] = gn;
            bool crossed = (gp < 0.0 && gn >= 0.0) || (gp > 0.0 && gn <= 0.0);
            if (!crossed) continue;
            int sense = gn > gp ? 1 : -1;
            if (ev.direction != 0 && sense != ev.direction) continue;
            double te = tn;
            if (tr.has_dense() || true) {
                auto gfun = [&](double s) { return ev.g(s, tr.eval(s)); };
                double a = t, b = tn;
                double ga = gp;
                if (ga == 0.0) {
                    te = a;
                } else {
                    te = brent_root(gfun, std::min(a, b), std::max(a, b), 1e-14 * std::max(1.0, std::abs(tn)));
                }
            }
            tr.events.push_back({ev.kind, te, tr.eval(te)});
            if (ev.terminal) stop = true;
        }

        if (max_abs(yn) > opt.ceiling) {
            auto over = [&](double s) { return max_abs(tr.eval(s)) - opt.ceiling; };
            double tb = tn;
            if (max_abs(y) <= opt.ceiling) tb = brent_root(over, std::min(t, tn), std::max(t, tn), 1e-15 * std::max(1.0, std::abs(tn)));
            tr.events.push_back({"blowup", tb, tr.eval(tb)});
            stop = true;
        }
        (void)seg;

        t = tn;
        y = yn;
        std::swap(rk.slope(1), rk.slope(13));
        if (final_step) break;

        double fac = std::max(1.0 / 6.0, std::min(1.0 / 0.333, std::pow(err, 0.125) / 0.9));
        double hnew = h / fac;
        if (last_rejected) hnew = std::min(hnew, h);
        h = std::min(hnew, hmax);
        last_rejected = false;
    }
    tr.stats.evaluations = rk.evals;
    return tr;
}

// ---------------------------------------------------------------- quadrature

double adaptive_quad(const std::function<double(double)>& f, double a, double b, double tol) {
    double err = 0.0;
    double result = adaptive_quad(f, a, b, tol, &err);
    if (!std::isfinite(result) || err > tol * (1.0 + std::abs(result))) {
        char msg[96];
        std::snprintf(msg, sizeof msg, "quadrature error estimate %.3g on [%.6g, %.6g]", err, a, b);
        throw Error("NoConvergence", msg);
    }
    return result;
}

double adaptive_quad(const std::function<double(double)>& f, double a, double b, double tol, double* err_estimate) {
    *err_estimate = 0.0;
    if (a == b) return 0.0;
    boost::math::quadrature::tanh_sinh<double> integrator(15);
    double err = 0.0, l1 = 0.0;
    double result;
    if (std::isinf(b)) {
        // x = a + u/(1-u) on u in (0,1)
        auto g = [&](double u) {
            if (u >= 1.0) return 0.0;
            double w = 1.0 - u;
            double v = f(a + u / w) / (w * w);
            return std::isfinite(v) ? v : 0.0;
        };
        result = integrator.integrate(g, 0.0, 1.0, tol * 1e-2, &err, &l1);
    } else {
        // shift to [0, L] so abscissae near the left end never round onto a nonzero endpoint
        const double L = std::abs(b - a), sgn = b > a ? 1.0 : -1.0;
        auto g = [&](double x) { return f(a + sgn * x); };
        result = sgn * integrator.integrate(g, 0.0, L, tol * 1e-2, &err, &l1);
    }
    *err_estimate = err;
    return result;
}

cplx adaptive_quad_c(const std::function<cplx(double)>& f, double a, double b, double tol) {
    double re = adaptive_quad([&](double x) { return f(x).real(); }, a, b, tol);
    double im = adaptive_quad([&](double x) { return f(x).imag(); }, a, b, tol);
    return {re, im};
}

// -------------------------------------------------------------------- roots

cplx poly_eval(const std::vector<double>& c, cplx x) {
    cplx v = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) v = v * x + c[i];
    return v;
}

namespace {

// |p^{(j)}(x)| / j! against the matching derivative of the coefficient-modulus polynomial.
bool cluster_is_multiple(const std::vector<double>& c, cplx x, int mult, double tol) {
    std::vector<std::complex<long double>> d(c.begin(), c.end());
    std::vector<long double> s(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) s[i] = std::fabs(static_cast<long double>(c[i]));
    const long double ax = std::abs(x);
    const std::complex<long double> xl(x.real(), x.imag());
    for (int j = 0; j < mult; ++j) {
        std::complex<long double> v = 0.0L;
        long double sv = 0.0L;
        for (std::size_t i = d.size(); i-- > 0;) {
            v = v * xl + d[i];
            sv = sv * ax + s[i];
        }
        if (std::abs(v) > tol * std::max(sv, 1e-300L)) return false;
        // differentiate and divide by (j+1)
        for (std::size_t i = 1; i < d.size(); ++i) {
            d[i - 1] = d[i] * static_cast<long double>(i) / static_cast<long double>(j + 1);
            s[i - 1] = s[i] * static_cast<long double>(i) / static_cast<long double>(j + 1);
        }
        d.pop_back();
        s.pop_back();
    }
    return true;
}

cplx newton_polish(const std::vector<double>& c, cplx x) {
    std::complex<long double> z(x.real(), x.imag());
    for (int it = 0; it < 8; ++it) {
        std::complex<long double> p = 0.0L, dp = 0.0L;
        for (std::size_t i = c.size(); i-- > 0;) {
            dp = dp * z + p;
            p = p * z + static_cast<long double>(c[i]);
        }
        if (std::abs(dp) == 0.0L) break;
        auto step = p / dp;
        auto zn = z - step;
        if (!(std::abs(zn - z) < 1e-3L * (1.0L + std::abs(z)))) break;
        z = zn;
        if (std::abs(step) <= 1e-19L * (1.0L + std::abs(z))) break;
    }
    return {static_cast<double>(z.real()), static_cast<double>(z.imag())};
}

}  // namespace

std::vector<Root> poly_roots(const std::vector<double>& coeffs, RootKind kind, const RootOptions& opt) {
    std::vector<double> c = coeffs;
    while (!c.empty() && c.back() == 0.0) c.pop_back();
    if (c.empty()) throw Error("DegenerateInput", "all coefficients are zero");
    std::vector<cplx> raw;
    // strip roots at zero
    std::size_t zeros = 0;
    while (zeros + 1 < c.size() && c[zeros] == 0.0) ++zeros;
    std::vector<double> q(c.begin() + static_cast<std::ptrdiff_t>(zeros), c.end());
    for (std::size_t i = 0; i < zeros; ++i) raw.emplace_back(0.0, 0.0);
    if (q.size() == 2) {
        raw.emplace_back(-q[0] / q[1], 0.0);
    } else if (q.size() > 2) {
        Eigen::VectorXd ev(static_cast<Eigen::Index>(q.size()));
        for (std::size_t i = 0; i < q.size(); ++i) ev[static_cast<Eigen::Index>(i)] = q[i];
        Eigen::PolynomialSolver<double, Eigen::Dynamic> solver;
        solver.compute(ev);
        for (Eigen::Index i = 0; i < solver.roots().size(); ++i) raw.push_back(newton_polish(c, solver.roots()[i]));
    }
    std::sort(raw.begin(), raw.end(), [](cplx a, cplx b) {
        return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
    });

    // Group nearby roots and accept a group as one multiple root when the
    // polynomial is within cluster_tol of having that multiplicity there.
    std::vector<Root> out;
    std::vector<bool> used(raw.size(), false);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (used[i]) continue;
        std::vector<std::size_t> group{i};
        const double radius = 1e-3 * std::max(1.0, std::abs(raw[i]));
        for (std::size_t j = i + 1; j < raw.size(); ++j)
            if (!used[j] && std::abs(raw[j] - raw[i]) < radius) group.push_back(j);
        cplx mean = 0.0;
        for (auto g : group) mean += raw[g];
        mean /= static_cast<double>(group.size());
        if (group.size() > 1 && cluster_is_multiple(c, mean, static_cast<int>(group.size()), opt.cluster_tol)) {
            for (auto g : group) used[g] = true;
            if (std::abs(mean.imag()) <= opt.cluster_tol * std::max(1.0, std::abs(mean))) mean.imag(0.0);
            out.push_back({mean, static_cast<int>(group.size())});
        } else {
            used[i] = true;
            out.push_back({raw[i], 1});
        }
    }
    for (auto& r : out)
        if (std::abs(r.value.imag()) <= opt.cluster_tol * std::max(1.0, std::abs(r.value))) r.value.imag(0.0);
    if (kind == RootKind::RealOnly) {
        std::vector<Root> real;
        for (const auto& r : out)
            if (r.value.imag() == 0.0) real.push_back(r);
        out.swap(real);
    }
    std::sort(out.begin(), out.end(), [](const Root& a, const Root& b) {
        return a.value.real() < b.value.real() || (a.value.real() == b.value.real() && a.value.imag() < b.value.imag());
    });
    return out;
}

// ------------------------------------------------------------- Laurent fits

LaurentFit fit_laurent(const std::vector<std::pair<double, double>>& samples, double center,
                       const std::vector<int>& powers, const LaurentOptions& opt) {
    if (powers.empty()) throw Error("InvalidInput", "no powers requested");
    if (samples.size() < 2 * powers.size()) throw Error("InvalidInput", "too few samples for the requested powers");
    const auto m = static_cast<Eigen::Index>(samples.size());
    const auto k = static_cast<Eigen::Index>(powers.size());
    Eigen::MatrixXd A(m, k);
    Eigen::VectorXd b(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        double dx = samples[static_cast<std::size_t>(i)].first - center;
        if (dx == 0.0) throw Error("InvalidInput", "sample at the expansion center");
        for (Eigen::Index j = 0; j < k; ++j) A(i, j) = std::pow(dx, powers[static_cast<std::size_t>(j)]);
        b[i] = samples[static_cast<std::size_t>(i)].second;
    }
    Eigen::VectorXd scale = A.colwise().norm();
    for (Eigen::Index j = 0; j < k; ++j) A.col(j) /= scale[j];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    double cond = sv[0] / sv[sv.size() - 1];
    if (!(cond <= opt.max_condition)) throw Error("IllConditioned", "design condition number " + std::to_string(cond));
    Eigen::VectorXd x = svd.solve(b);
    LaurentFit fit;
    fit.condition = cond;
    Eigen::VectorXd r = A * x - b;
    fit.residual = std::sqrt(r.squaredNorm() / static_cast<double>(m));
    for (Eigen::Index j = 0; j < k; ++j) fit.coef[powers[static_cast<std::size_t>(j)]] = x[j] / scale[j];
    return fit;
}

// ------------------------------------------------------------------ helpers

double brent_root(const std::function<double(double)>& f, double a, double b, double xtol, int max_iter) {
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0.0) == (fb > 0.0)) throw Error("NoBracket", "root not bracketed");
    boost::uintmax_t iters = static_cast<boost::uintmax_t>(max_iter);
    auto tolf = [xtol](double x, double y) { return std::abs(x - y) <= xtol; };
    auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, tolf, iters);
    return 0.5 * (r.first + r.second);
}

double linear_slope(const std::vector<double>& x, const std::vector<double>& y, double* intercept,
                    double* halfwidth) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw Error("InsufficientPoints", "need at least two points");
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    double slope = sxy / sxx;
    double b = my - slope * mx;
    if (intercept) *intercept = b;
    if (halfwidth) {
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) ss += std::pow(y[i] - (b + slope * x[i]), 2);
        *halfwidth = n > 2 ? 2.0 * std::sqrt(ss / static_cast<double>(n - 2) / sxx) : 0.0;
    }
    return slope;
}

}  // namespace slowpass
