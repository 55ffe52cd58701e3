#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "wpt/eh.hpp"

using namespace wpt;

namespace {

long long binom(int n, int k) {
    long long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

TEST_CASE("circuit constants") {
    auto c = eh::EhCircuit::defaults(3);
    CHECK(c.a() == doctest::Approx(7365.6).epsilon(5e-3));
    CHECK(c.beta(2) == doctest::Approx(0.6782).epsilon(5e-3));
    CHECK(c.beta(4) == doctest::Approx(1.53e4).epsilon(5e-3));
    CHECK(c.lambda_factor(0, 0) == 1.0);
    CHECK(c.lambda_factor(1, 2) == 1.0);
    CHECK(c.lambda_factor(2, 4) == 1.5);
    CHECK(c.lambda_factor(0, 1) == 0.0);  // odd orders vanish
    CHECK(c.lambda_factor(0, 3) == 0.0);

    eh::EhCircuit bad = c;
    bad.i_s = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.truncation_order = 1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("circuit json round trip") {
    auto c = eh::EhCircuit::defaults(2);
    auto j = c.to_json();
    auto back = eh::EhCircuit::from_json(j);
    CHECK(back.i_s == c.i_s);
    CHECK(back.r_l == c.r_l);
    CHECK(back.ideality == c.ideality);
    CHECK(back.v_t == c.v_t);
    CHECK(back.r_ant == c.r_ant);
    CHECK(back.truncation_order == c.truncation_order);
    CHECK(back.lambda == c.lambda);
    std::vector<double> q{1e-5, 2e-5};
    CHECK(eh::f_nl(q, back) == eh::f_nl(q, c));
}

TEST_CASE("composition counts and contents") {
    // number of length-M compositions of i is C(i+M-1, M-1)
    CHECK(eh::compositions(2, 2).size() == 3);
    CHECK(eh::compositions(4, 3).size() == 15);
    for (int total : {1, 2, 3, 4, 5}) {
        for (int parts : {1, 2, 3, 4}) {
            const auto& comps = eh::compositions(total, parts);
            CHECK(static_cast<long long>(comps.size()) ==
                  binom(total + parts - 1, parts - 1));
            for (const auto& comp : comps) {
                int sum = 0;
                for (int v : comp) {
                    CHECK(v >= 0);
                    sum += v;
                }
                CHECK(sum == total);
            }
        }
    }
}

TEST_CASE("phi reduces to the single-source polynomial") {
    auto c = eh::EhCircuit::defaults(1);
    double b2 = c.beta(2), b4 = c.beta(4);
    for (double q : {0.0, 1e-6, 5e-5, 3e-4}) {
        double expect = c.i_s + 0.5 * b2 * q + 0.0625 * b4 * q * q;
        CHECK(eh::phi({q}, c) == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK_THROWS_AS(eh::phi({-1e-6}, c), std::invalid_argument);
}

TEST_CASE("phi is symmetric for identical sources") {
    auto c = eh::EhCircuit::defaults(3);
    std::vector<double> q{1e-5, 4e-5, 9e-5};
    std::vector<double> perm{9e-5, 1e-5, 4e-5};
    CHECK(eh::phi(q, c) == doctest::Approx(eh::phi(perm, c)).epsilon(1e-13));
}

TEST_CASE("lambert_w0 reference values and residuals") {
    CHECK(eh::lambert_w0(0.0) == 0.0);
    CHECK(eh::lambert_w0(1.0) == doctest::Approx(0.5671432904).epsilon(1e-9));
    CHECK(eh::lambert_w0(std::exp(1.0)) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(eh::lambert_w0(-std::exp(-1.0)) == doctest::Approx(-1.0).epsilon(1e-5));
    CHECK_THROWS_AS(eh::lambert_w0(-1.0), std::domain_error);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-6.0, 20.0);
    for (int t = 0; t < 300; ++t) {
        double x = std::exp(u(rng));
        double w = eh::lambert_w0(x);
        CHECK(std::abs(w * std::exp(w) - x) <= 1e-10 * std::max(1.0, x));
    }
}

TEST_CASE("f_nl basic behavior") {
    auto c = eh::EhCircuit::defaults(2);
    CHECK(eh::f_nl({0.0, 0.0}, c) == 0.0);  // exact zero, no residual offset
    double prev = 0.0;
    for (double q : {1e-6, 1e-5, 1e-4, 1e-3}) {
        double v = eh::f_nl({q, q}, c);
        CHECK(v > prev);  // monotone in input power
        prev = v;
    }
    // harvested power stays below a crude input-referred bound at low input
    CHECK(eh::f_nl({1e-6, 1e-6}, c) < 2e-6);
}

TEST_CASE("f_nl gradient matches finite differences") {
    auto c = eh::EhCircuit::defaults(3);
    std::vector<double> gains{2e-5, 5e-5, 1e-5};
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.5, 40.0);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> p_inv{u(rng), u(rng), u(rng)};
        auto grad = eh::f_nl_grad_inv_power(p_inv, gains, c);
        for (int j = 0; j < 3; ++j) {
            CHECK(grad[j] <= 0.0);
            auto shifted = p_inv;
            double h = 1e-6 * p_inv[j];
            shifted[j] = p_inv[j] + h;
            std::vector<double> qp(3), qm(3);
            for (int s = 0; s < 3; ++s) qp[s] = gains[s] / shifted[s];
            shifted[j] = p_inv[j] - h;
            for (int s = 0; s < 3; ++s) qm[s] = gains[s] / shifted[s];
            double fd = (eh::f_nl(qp, c) - eh::f_nl(qm, c)) / (2.0 * h);
            CHECK(grad[j] == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("tangent underestimates f_nl and is tight at the expansion point") {
    auto c = eh::EhCircuit::defaults(3);
    std::vector<double> gains{3e-5, 1e-5, 6e-5};
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.5, 50.0);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> local{u(rng), u(rng), u(rng)};
        auto tan = eh::linearize(local, gains, c);
        std::vector<double> q0(3);
        for (int s = 0; s < 3; ++s) q0[s] = gains[s] / local[s];
        double f0 = eh::f_nl(q0, c);
        CHECK(eh::tangent_value(tan, local) == doctest::Approx(f0).epsilon(1e-10));
        for (double s : tan.a) CHECK(s >= 0.0);
        for (int t = 0; t < 100; ++t) {
            std::vector<double> p_inv{u(rng), u(rng), u(rng)};
            std::vector<double> q(3);
            for (int s = 0; s < 3; ++s) q[s] = gains[s] / p_inv[s];
            double truth = eh::f_nl(q, c);
            double lin = eh::tangent_value(tan, p_inv);
            CHECK(lin <= truth + 1e-12 * std::max(1.0, std::abs(truth)));
        }
    }
}

TEST_CASE("f_nl is midpoint convex in reciprocal powers") {
    auto c = eh::EhCircuit::defaults(2);
    std::vector<double> gains{4e-5, 2e-5};
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.5, 60.0);
    auto value = [&](const std::vector<double>& p_inv) {
        std::vector<double> q(2);
        for (int s = 0; s < 2; ++s) q[s] = gains[s] / p_inv[s];
        return eh::f_nl(q, c);
    };
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> x{u(rng), u(rng)}, y{u(rng), u(rng)};
        std::vector<double> mid{0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1])};
        double vm = value(mid);
        double avg = 0.5 * (value(x) + value(y));
        CHECK(vm <= avg + 1e-12 * std::max(1.0, std::abs(avg)));
    }
}

TEST_CASE("conversion efficiency peaks at an interior input power") {
    // efficiency f_nl(q)/q rises then falls: nonlinearity, not a constant eta
    auto c = eh::EhCircuit::defaults(1);
    std::vector<double> eff;
    for (double lq = -7.0; lq <= -1.0; lq += 0.1) {
        double q = std::pow(10.0, lq);
        eff.push_back(eh::f_nl({q}, c) / q);
    }
    auto peak = std::max_element(eff.begin(), eff.end());
    CHECK(peak != eff.begin());
    CHECK(peak != eff.end() - 1);
    CHECK(*peak > eff.front() * 1.5);
    CHECK(*peak > eff.back() * 1.5);
}

TEST_CASE("linear model calibration") {
    auto c = eh::EhCircuit::defaults(2);
    std::vector<double> q_ref{5e-5, 5e-5};
    double eta = eh::calibrate_eta(q_ref, c);
    CHECK(eta > 0.0);
    CHECK(eta <= 1.0);
    CHECK(eh::linear_eh(q_ref, eta) ==
          doctest::Approx(eh::f_nl(q_ref, c)).epsilon(1e-12));
    CHECK_THROWS_AS(eh::linear_eh(q_ref, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(eh::linear_eh(q_ref, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(eh::calibrate_eta({0.0, 0.0}, c), std::invalid_argument);
}

TEST_CASE("received_powers elementwise product and validation") {
    auto q = eh::received_powers({1.0, 2.0}, {1e-4, 5e-4});
    CHECK(q[0] == doctest::Approx(1e-4));
    CHECK(q[1] == doctest::Approx(1e-3));
    CHECK_THROWS_AS(eh::received_powers({1.0}, {1e-4, 2e-4}),
                    std::invalid_argument);
    CHECK_THROWS_AS(eh::received_powers({-1.0, 2.0}, {1e-4, 5e-4}),
                    std::invalid_argument);
}
