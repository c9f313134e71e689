#pragma once

// Dormand-Prince 5(4) with FSAL, PI step control and the classic quartic
// dense-output interpolant. Self-contained so event location can evaluate
// single components of the interpolant in O(1) instead of rebuilding the
// whole state vector per bisection iterate.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "optk/errors.hpp"

namespace optk::detail {

class Dopri5 {
public:
    using Rhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

    struct Options {
        double abs_tol = 1e-12;
        double rel_tol = 1e-10;
        double dt_max = 1e30;
        double dt_min = 1e-14;
        double dt_initial = 1e-4;
    };

    Dopri5(Rhs rhs, Options opt) : rhs_(std::move(rhs)), opt_(opt) {}

    void initialize(std::vector<double> y, double t, double dt_initial = 0.0) {
        const std::size_t n = y.size();
        y0_ = std::move(y);
        y1_ = y0_;
        t0_ = t1_ = t;
        dt_ = std::clamp(dt_initial > 0.0 ? dt_initial : opt_.dt_initial, opt_.dt_min,
                         opt_.dt_max);
        for (auto& k : k_) k.assign(n, 0.0);
        rc3_.assign(n, 0.0);
        rc4_.assign(n, 0.0);
        rc5_.assign(n, 0.0);
        tmp_.assign(n, 0.0);
        rhs_(t0_, y0_, k_[0]);
        fresh_k1_ = true;
    }

    double t_prev() const { return t0_; }
    double t_curr() const { return t1_; }
    const std::vector<double>& y_prev() const { return y0_; }
    const std::vector<double>& y_curr() const { return y1_; }
    double dt_suggest() const { return dt_; }

    /// One accepted step, clipped to t_limit. Returns the new time.
    double step(double t_limit) {
        const std::size_t n = y0_.size();
        y0_ = y1_;
        t0_ = t1_;
        if (!fresh_k1_) {
            rhs_(t0_, y0_, k_[0]);
            fresh_k1_ = true;
        }
        int rejects = 0;
        for (;;) {
            double h = std::min(dt_, opt_.dt_max);
            if (t0_ + h > t_limit) h = t_limit - t0_;
            if (h <= 0.0) return t1_;
            stages(h, n);
            // Error estimate against the embedded 4th-order solution.
            double err = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double e = h * (kE1 * k_[0][i] + kE3 * k_[2][i] + kE4 * k_[3][i] +
                                kE5 * k_[4][i] + kE6 * k_[5][i] + kE7 * k_[6][i]);
                double sc = opt_.abs_tol + opt_.rel_tol * std::max(std::abs(y0_[i]), std::abs(tmp_[i]));
                double q = e / sc;
                err += q * q;
            }
            err = std::sqrt(err / static_cast<double>(n));
            if (err <= 1.0 || h <= opt_.dt_min * 2.0) {
                finish_step(h, n);
                double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
                fac = std::clamp(fac, 0.2, rejects > 0 ? 1.0 : 5.0);
                dt_ = std::clamp(h * fac, opt_.dt_min, opt_.dt_max);
                return t1_;
            }
            double fac = std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0);
            dt_ = std::max(h * fac, opt_.dt_min);
            if (++rejects > 60)
                throw BracketingFailure("adaptive step control failed to find an acceptable step");
        }
    }

    /// Dense evaluation of component `idx` at t in [t_prev, t_curr].
    double dense_component(double t, std::size_t idx) const {
        const double h = t1_ - t0_;
        if (h == 0.0) return y1_[idx];
        const double th = (t - t0_) / h;
        const double th1 = 1.0 - th;
        const double dy = y1_[idx] - y0_[idx];
        return y0_[idx] + th * (dy + th1 * (rc3_[idx] + th * (rc4_[idx] + th1 * rc5_[idx])));
    }

    void dense_state(double t, std::span<double> out) const {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = dense_component(t, i);
    }

private:
    void stages(double h, std::size_t n) {
        auto& k1 = k_[0];
        auto& k2 = k_[1];
        auto& k3 = k_[2];
        auto& k4 = k_[3];
        auto& k5 = k_[4];
        auto& k6 = k_[5];
        auto& k7 = k_[6];
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = y0_[i] + h * kA21 * k1[i];
        rhs_(t0_ + kC2 * h, tmp_, k2);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = y0_[i] + h * (kA31 * k1[i] + kA32 * k2[i]);
        rhs_(t0_ + kC3 * h, tmp_, k3);
        for (std::size_t i = 0; i < n; ++i)
            tmp_[i] = y0_[i] + h * (kA41 * k1[i] + kA42 * k2[i] + kA43 * k3[i]);
        rhs_(t0_ + kC4 * h, tmp_, k4);
        for (std::size_t i = 0; i < n; ++i)
            tmp_[i] = y0_[i] + h * (kA51 * k1[i] + kA52 * k2[i] + kA53 * k3[i] + kA54 * k4[i]);
        rhs_(t0_ + kC5 * h, tmp_, k5);
        for (std::size_t i = 0; i < n; ++i)
            tmp_[i] = y0_[i] + h * (kA61 * k1[i] + kA62 * k2[i] + kA63 * k3[i] + kA64 * k4[i] +
                                    kA65 * k5[i]);
        rhs_(t0_ + h, tmp_, k6);
        for (std::size_t i = 0; i < n; ++i)
            tmp_[i] = y0_[i] + h * (kA71 * k1[i] + kA73 * k3[i] + kA74 * k4[i] + kA75 * k5[i] +
                                    kA76 * k6[i]);
        rhs_(t0_ + h, tmp_, k7);
    }

    void finish_step(double h, std::size_t n) {
        // tmp_ holds the 5th-order solution (stage 7 argument, FSAL).
        y1_ = tmp_;
        t1_ = t0_ + h;
        for (std::size_t i = 0; i < n; ++i) {
            const double dy = y1_[i] - y0_[i];
            rc3_[i] = h * k_[0][i] - dy;
            rc4_[i] = dy - h * k_[6][i] - rc3_[i];
            rc5_[i] = h * (kD1 * k_[0][i] + kD3 * k_[2][i] + kD4 * k_[3][i] + kD5 * k_[4][i] +
                           kD6 * k_[5][i] + kD7 * k_[6][i]);
        }
        k_[0] = k_[6];  // FSAL
        fresh_k1_ = true;
        // y0_/t0_ stay as the step's left end until the next step() call.
    }

    static constexpr double kC2 = 1.0 / 5.0, kC3 = 3.0 / 10.0, kC4 = 4.0 / 5.0, kC5 = 8.0 / 9.0;
    static constexpr double kA21 = 1.0 / 5.0;
    static constexpr double kA31 = 3.0 / 40.0, kA32 = 9.0 / 40.0;
    static constexpr double kA41 = 44.0 / 45.0, kA42 = -56.0 / 15.0, kA43 = 32.0 / 9.0;
    static constexpr double kA51 = 19372.0 / 6561.0, kA52 = -25360.0 / 2187.0,
                            kA53 = 64448.0 / 6561.0, kA54 = -212.0 / 729.0;
    static constexpr double kA61 = 9017.0 / 3168.0, kA62 = -355.0 / 33.0,
                            kA63 = 46732.0 / 5247.0, kA64 = 49.0 / 176.0,
                            kA65 = -5103.0 / 18656.0;
    static constexpr double kA71 = 35.0 / 384.0, kA73 = 500.0 / 1113.0, kA74 = 125.0 / 192.0,
                            kA75 = -2187.0 / 6784.0, kA76 = 11.0 / 84.0;
    static constexpr double kE1 = 71.0 / 57600.0, kE3 = -71.0 / 16695.0, kE4 = 71.0 / 1920.0,
                            kE5 = -17253.0 / 339200.0, kE6 = 22.0 / 525.0, kE7 = -1.0 / 40.0;
    static constexpr double kD1 = -12715105075.0 / 11282082432.0,
                            kD3 = 87487479700.0 / 32700410799.0,
                            kD4 = -10690763975.0 / 1880347072.0,
                            kD5 = 701980252875.0 / 199316789632.0,
                            kD6 = -1453857185.0 / 822651844.0,
                            kD7 = 69997945.0 / 29380423.0;

    Rhs rhs_;
    Options opt_;
    std::vector<double> y0_, y1_, tmp_;
    std::vector<double> k_[7];
    std::vector<double> rc3_, rc4_, rc5_;
    double t0_ = 0.0, t1_ = 0.0, dt_ = 1e-4;
    bool fresh_k1_ = false;
};

}  // namespace optk::detail
