#pragma once

#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "slowpass/errors.hpp"

namespace slowpass {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

struct ToleranceSpec {
    double rel = 1e-10;
    double abs = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    double min_step = 1e-14;

    void validate() const;
    ToleranceSpec refined(double factor) const;
};

// dy/dt = field(t, y); dy is pre-sized to y.size().
using Field = std::function<void(double t, const CVec& y, CVec& dy)>;

struct Event {
    std::string kind;
    double t = 0.0;
    CVec payload;
};

struct StepStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t evaluations = 0;
};

// Scalar event function; a root is reported when the sign change matches
// `direction` measured along the integration order (+1 rising, -1 falling, 0 any).
struct EventSpec {
    std::string kind;
    std::function<double(double t, const CVec& y)> g;
    int direction = 0;
    bool terminal = false;
};

struct IvpOptions {
    double ceiling = 1e6;  // blowup threshold on max |y_i|
    std::vector<EventSpec> events;
    bool dense = true;
    double first_step = 0.0;  // 0: automatic
    std::size_t max_steps = 200'000'000;
};

// Time samples with optional per-step dense-output coefficients.
class Trajectory {
public:
    Trajectory() = default;
    explicit Trajectory(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return t_.size(); }
    bool empty() const { return t_.empty(); }
    int direction() const { return direction_; }
    bool has_dense() const { return !coef_.empty(); }

    double t(std::size_t i) const { return t_[i]; }
    const std::vector<double>& times() const { return t_; }
    cplx y(std::size_t i, std::size_t comp) const { return y_[i * dim_ + comp]; }
    CVec state(std::size_t i) const;
    double t_front() const { return t_.front(); }
    double t_back() const { return t_.back(); }
    bool contains(double t) const;

    // Interpolated state; cubic interpolation through neighbouring samples
    // when no dense coefficients were recorded.
    CVec eval(double t) const;
    cplx eval(double t, std::size_t comp) const;
    CVec deriv(double t) const;

    void push_sample(double t, const CVec& y);
    void push_dense_step(double t_new, const CVec& y_new, const std::vector<cplx>& coef);
    std::size_t segment_of(double t) const;

    std::vector<Event> events;
    StepStats stats;

private:
    void eval_segment(std::size_t seg, double t, cplx* out, cplx* dout) const;

    std::size_t dim_ = 0;
    int direction_ = 0;
    std::vector<double> t_;
    std::vector<cplx> y_;
    std::vector<cplx> coef_;  // 8 * dim per step
};

Trajectory integrate_ivp(const Field& field, double t0, double t1, const CVec& y0,
                         const ToleranceSpec& tol, const IvpOptions& opt = {});

bool has_event(const Trajectory& tr, const std::string& kind);
const Event* first_event(const Trajectory& tr, const std::string& kind);

// Tanh-sinh quadrature; b may be +infinity.
double adaptive_quad(const std::function<double(double)>& f, double a, double b, double tol = 1e-12);
// Best-effort variant: never throws on slow convergence and reports the error estimate.
double adaptive_quad(const std::function<double(double)>& f, double a, double b, double tol, double* err_estimate);
cplx adaptive_quad_c(const std::function<cplx(double)>& f, double a, double b, double tol = 1e-12);

enum class RootKind { RealOnly, All };

struct Root {
    cplx value;
    int multiplicity = 1;
};

struct RootOptions {
    double cluster_tol = 1e-8;
};

// coeffs ordered from the constant term upward: c0 + c1 x + ... + cn x^n.
std::vector<Root> poly_roots(const std::vector<double>& coeffs, RootKind kind = RootKind::All,
                             const RootOptions& opt = {});
cplx poly_eval(const std::vector<double>& coeffs, cplx x);

struct LaurentFit {
    std::map<int, double> coef;
    double residual = 0.0;  // RMS misfit
    double condition = 0.0;
};

struct LaurentOptions {
    double max_condition = 1e13;
};

LaurentFit fit_laurent(const std::vector<std::pair<double, double>>& samples, double center,
                       const std::vector<int>& powers, const LaurentOptions& opt = {});

// Small helpers shared by several modules.
double brent_root(const std::function<double(double)>& f, double a, double b, double xtol = 1e-15,
                  int max_iter = 200);
double linear_slope(const std::vector<double>& x, const std::vector<double>& y, double* intercept = nullptr,
                    double* halfwidth = nullptr);

}  // namespace slowpass
